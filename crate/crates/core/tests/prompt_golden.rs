mod common;

use dialogaug_core::corpus::{BeliefSlot, Dialog, Speaker};
use dialogaug_core::prompt::{render, render_slot_template, user_turn_indices, PromptConfig, PromptStyle};
use proptest::prelude::*;

use common::{check_golden, sample_dialogs};

fn config(style: PromptStyle, include_future: bool, include_bs_slots: bool) -> PromptConfig {
    PromptConfig {
        style,
        include_future,
        include_bs_slots,
        ..PromptConfig::default()
    }
}

pub fn golden_name(style: PromptStyle, future: bool, slots: bool) -> String {
    format!(
        "prompts/dialog1_t0_{}_{}_{}.txt",
        style.name(),
        if future { "future" } else { "nofuture" },
        if slots { "slots" } else { "noslots" }
    )
}

#[test]
fn dialog1_natural_colon_literal() {
    let corpus = sample_dialogs();
    let d = &corpus.dialogs[0];
    let full = render(d, 0, &config(PromptStyle::NaturalColon, true, false)).unwrap();
    assert_eq!(
        full.input_text,
        "user: <mask> system: i have information for the parkside police station, is this close to your location? \
         user: i don't know, could you just give me the postcode and phone? system: the phone number is 01223358966 \
         and the post code is cb11jg. user: thank you for your help system: you're welcome. the police will help you \
         immediately. goodbye."
    );
    assert_eq!(
        full.reference,
        "please put me in touch with the local police, i was just robbed."
    );
    let past = render(d, 0, &config(PromptStyle::NaturalColon, false, false)).unwrap();
    assert_eq!(
        past.input_text,
        "user: <mask> system: i have information for the parkside police station, is this close to your location?"
    );
}

#[test]
fn dialog1_goldens_all_variants() {
    let corpus = sample_dialogs();
    let d = &corpus.dialogs[0];
    for style in PromptStyle::ALL {
        for slots in [false, true] {
            let past = render(d, 0, &config(style, false, slots)).unwrap();
            let full = render(d, 0, &config(style, true, slots)).unwrap();
            check_golden(&golden_name(style, false, slots), &past.input_text);
            check_golden(&golden_name(style, true, slots), &full.input_text);
            assert!(full.input_text.starts_with(&past.input_text));
            assert!(full.input_text.len() > past.input_text.len());
        }
    }
}

#[test]
fn dialog2_dining_turn_with_slots() {
    let corpus = sample_dialogs();
    let d = &corpus.dialogs[1];
    assert_eq!(user_turn_indices(d), (0..8).collect::<Vec<_>>());
    let r = render(d, 4, &config(PromptStyle::NaturalColon, true, true)).unwrap();
    let template = render_slot_template(&d.exchanges[4].belief);
    assert!(r
        .input_text
        .contains(&format!("user: {template} <mask> system: i have many.")));
    check_golden("prompts/dialog2_t4_natural-colon_future_slots.txt", &r.input_text);
}

#[test]
fn footnote_train_template() {
    let belief = [
        BeliefSlot::new("train", "departure", "norwich"),
        BeliefSlot::new("train", "destination", "cambridge"),
    ];
    assert_eq!(
        render_slot_template(&belief),
        "train departing norwich, train destination cambridge"
    );
}

fn strip(text: &str) -> String {
    let mut out = text.to_string();
    for style in PromptStyle::ALL {
        for speaker in [Speaker::User, Speaker::System] {
            out = out.replace(style.marker(speaker), " ");
        }
    }
    out.split_whitespace().collect::<Vec<_>>().join(" ")
}

fn dialog_strategy() -> impl Strategy<Value = Dialog> {
    let turn = "[a-z]{1,7}( [a-z,.?]{1,7}){0,5}";
    let slots = prop::collection::btree_map("(area|food|stars)", "[a-z0-9]{1,6}", 0..3);
    prop::collection::vec((turn, slots, turn), 1..6).prop_map(|ex| {
        let parts = ex
            .into_iter()
            .enumerate()
            .map(|(i, (u, slots, s))| {
                let belief = slots.into_iter().map(|(k, v)| BeliefSlot::new("hotel", k, v)).collect();
                // a unique suffix keeps the reference from reappearing elsewhere
                (format!("{u} u{i}"), belief, s)
            })
            .collect();
        Dialog::from_parts("prop", Vec::new(), parts, None)
    })
}

proptest! {
    #[test]
    fn render_properties(dialog in dialog_strategy(), pick in 0usize..6, slots in any::<bool>()) {
        let t = pick % dialog.len();
        let mut stripped = Vec::new();
        for style in PromptStyle::ALL {
            let past = render(&dialog, t, &config(style, false, slots)).unwrap();
            let full = render(&dialog, t, &config(style, true, slots)).unwrap();
            prop_assert_eq!(&full, &render(&dialog, t, &config(style, true, slots)).unwrap());
            prop_assert!(full.input_text.starts_with(&past.input_text));
            if t + 1 < dialog.len() {
                prop_assert!(full.input_text.len() > past.input_text.len());
            }
            prop_assert_eq!(full.input_text.matches("<mask>").count(), 1);
            prop_assert!(!full.input_text.contains(&full.reference));
            if slots {
                let template = render_slot_template(&dialog.exchanges[t].belief);
                if !template.is_empty() {
                    let expected = format!("{template} <mask>");
                    prop_assert!(full.input_text.contains(&expected));
                }
            }
            stripped.push(strip(&full.input_text));
        }
        prop_assert_eq!(&stripped[0], &stripped[1]);
        prop_assert_eq!(&stripped[1], &stripped[2]);
    }
}
