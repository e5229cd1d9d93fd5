//! Browser bindings for the demo page in `www/`.
//!
//! Every export returns a JSON string: the result on success, or
//! `{"error": "..."}` on failure, so the page never has to catch exceptions.
//! The dialogs are the three sample conversations bundled at compile time.

use std::sync::OnceLock;

use serde::Serialize;
use serde_json::json;
use wasm_bindgen::prelude::*;

use dialogaug_core::corpus::{parse_canonical, Corpus};
use dialogaug_core::prompt::{render, PromptConfig, PromptStyle};
use dialogaug_core::rank::{bleu, rerank, BleuScorer};
use dialogaug_core::services::{generate, GenerationRequest, StubGenerator};
use dialogaug_core::text::tokenize;

const SAMPLE_CORPUS: &str = include_str!("../../core/tests/fixtures/sample_dialogs.json");

fn samples() -> &'static Corpus {
    static CORPUS: OnceLock<Corpus> = OnceLock::new();
    CORPUS.get_or_init(|| parse_canonical(SAMPLE_CORPUS).expect("bundled sample corpus is valid"))
}

fn respond<T: Serialize>(result: Result<T, String>) -> String {
    match result {
        Ok(value) => serde_json::to_string(&value).expect("serializable"),
        Err(error) => json!({ "error": error }).to_string(),
    }
}

fn prompt_config(style: &str, include_future: bool, include_bs_slots: bool) -> Result<PromptConfig, String> {
    Ok(PromptConfig {
        style: style.parse::<PromptStyle>().map_err(|e| e.to_string())?,
        include_future,
        include_bs_slots,
        ..PromptConfig::default()
    })
}

/// Ids, exchange counts and user turns of the bundled dialogs.
#[wasm_bindgen]
pub fn sample_dialogs() -> String {
    let list: Vec<_> = samples()
        .dialogs
        .iter()
        .map(|d| {
            json!({
                "id": d.id,
                "exchanges": d.len(),
                "user_turns": d.exchanges.iter().map(|e| e.user.text.as_str()).collect::<Vec<_>>(),
            })
        })
        .collect();
    respond(Ok(list))
}

/// The masked prompt for exchange `t` of sample dialog `dialog`.
#[wasm_bindgen]
pub fn render_prompt(dialog: usize, t: usize, style: &str, include_future: bool, include_bs_slots: bool) -> String {
    respond((|| {
        let d = samples()
            .dialogs
            .get(dialog)
            .ok_or(format!("no sample dialog {dialog}"))?;
        let config = prompt_config(style, include_future, include_bs_slots)?;
        render(d, t, &config).map_err(|e| e.to_string())
    })())
}

/// Per-order BLEU statistics for a hypothesis against a reference.
#[wasm_bindgen]
pub fn bleu_breakdown(hypothesis: &str, reference: &str) -> String {
    respond(bleu(&tokenize(hypothesis), &tokenize(reference)).map_err(|e| e.to_string()))
}

/// Renders the prompt, asks the deterministic stub backend for `num_return`
/// candidates and re-ranks them by average BLEU against the original turn.
#[wasm_bindgen]
pub fn stub_rerank(
    dialog: usize,
    t: usize,
    style: &str,
    include_future: bool,
    include_bs_slots: bool,
    num_return: u32,
) -> String {
    respond((|| {
        let d = samples()
            .dialogs
            .get(dialog)
            .ok_or(format!("no sample dialog {dialog}"))?;
        let config = prompt_config(style, include_future, include_bs_slots)?;
        let prompt = render(d, t, &config).map_err(|e| e.to_string())?;
        let request = GenerationRequest {
            num_return,
            num_beams: num_return.max(1),
            ..GenerationRequest::new(prompt.input_text.clone())
        };
        let candidates = generate(&StubGenerator::default(), &request).map_err(|e| e.to_string())?;
        let outcome = rerank(&candidates, &prompt.reference, &BleuScorer).map_err(|e| e.to_string())?;
        let scored: Vec<_> = outcome
            .all_scored
            .iter()
            .map(|s| json!({ "rank": s.candidate.rank, "text": s.candidate.text, "bleu": s.rank_score }))
            .collect();
        Ok(json!({
            "prompt": prompt.input_text,
            "reference": prompt.reference,
            "candidates": scored,
            "selected": outcome.selected.map(|s| s.candidate.text),
            "decision": outcome.decision,
        }))
    })())
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::Value;

    fn parse(s: String) -> Value {
        serde_json::from_str(&s).unwrap()
    }

    #[test]
    fn lists_the_samples() {
        let v = parse(sample_dialogs());
        let counts: Vec<u64> = v
            .as_array()
            .unwrap()
            .iter()
            .map(|d| d["exchanges"].as_u64().unwrap())
            .collect();
        assert_eq!(counts, [3, 8, 7]);
    }

    #[test]
    fn renders_the_same_prompt_as_the_core() {
        let v = parse(render_prompt(0, 0, "natural-colon", false, false));
        assert_eq!(
            v["input_text"],
            "user: <mask> system: i have information for the parkside police station, is this close to your location?"
        );
        assert_eq!(
            v["reference"],
            "please put me in touch with the local police, i was just robbed."
        );
        assert!(parse(render_prompt(0, 9, "natural-colon", true, false))["error"].is_string());
        assert!(parse(render_prompt(0, 0, "shouty", true, false))["error"].is_string());
        assert!(parse(render_prompt(7, 0, "special", true, false))["error"].is_string());
    }

    #[test]
    fn bleu_hand_case() {
        let v = parse(bleu_breakdown("a b c d", "a b x d"));
        assert!((v["average_bleu"].as_f64().unwrap() - 0.3125).abs() < 1e-12);
        assert!(parse(bleu_breakdown("a", "  "))["error"].is_string());
    }

    #[test]
    fn stub_rerank_selects_the_best_bleu() {
        let v = parse(stub_rerank(1, 4, "special", true, true, 8));
        let candidates = v["candidates"].as_array().unwrap();
        assert_eq!(candidates.len(), 8);
        let best = candidates
            .iter()
            .map(|c| c["bleu"].as_f64().unwrap())
            .fold(f64::MIN, f64::max);
        let selected = candidates.iter().find(|c| c["text"] == v["selected"]).unwrap();
        assert_eq!(selected["bleu"].as_f64().unwrap(), best);
        assert_eq!(v, parse(stub_rerank(1, 4, "special", true, true, 8)));
    }
}
