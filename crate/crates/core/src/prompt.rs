//! Masked-turn prompt rendering.
//!
//! For a target exchange `t` the input is the dialog serialized turn by turn
//! with role markers, where the user text of exchange `t` is replaced by the
//! mask literal (optionally preceded by a natural-language rendering of the
//! exchange's belief slots). Future exchanges (`i > t`) are included unless
//! disabled. The reference output is the original user text.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::{BeliefSlot, Dialog, Speaker};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum PromptError {
    #[error("target exchange {t} out of range for dialog {dialog_id} with {n} exchanges")]
    TargetOutOfRange { dialog_id: String, t: usize, n: usize },
    #[error("invalid prompt config: {0}")]
    InvalidConfig(String),
    #[error("dialog {dialog_id} already contains the mask literal {mask:?}")]
    MaskCollision { dialog_id: String, mask: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PromptStyle {
    /// `⟨user⟩` / `⟨system⟩`, glued to the text.
    #[serde(rename = "special")]
    SpecialTokens,
    /// `user:` / `system:`
    #[default]
    NaturalColon,
    /// `user says` / `system says`
    NaturalSays,
}

impl PromptStyle {
    pub const ALL: [PromptStyle; 3] = [
        PromptStyle::SpecialTokens,
        PromptStyle::NaturalColon,
        PromptStyle::NaturalSays,
    ];

    pub fn marker(self, speaker: Speaker) -> &'static str {
        match (self, speaker) {
            (PromptStyle::SpecialTokens, Speaker::User) => "⟨user⟩",
            (PromptStyle::SpecialTokens, Speaker::System) => "⟨system⟩",
            (PromptStyle::NaturalColon, Speaker::User) => "user:",
            (PromptStyle::NaturalColon, Speaker::System) => "system:",
            (PromptStyle::NaturalSays, Speaker::User) => "user says",
            (PromptStyle::NaturalSays, Speaker::System) => "system says",
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            PromptStyle::SpecialTokens => "special",
            PromptStyle::NaturalColon => "natural-colon",
            PromptStyle::NaturalSays => "natural-says",
        }
    }

    fn segment(self, speaker: Speaker, body: &str) -> String {
        match self {
            PromptStyle::SpecialTokens => format!("{}{}", self.marker(speaker), body),
            _ => format!("{} {}", self.marker(speaker), body),
        }
    }
}

impl fmt::Display for PromptStyle {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for PromptStyle {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        PromptStyle::ALL
            .into_iter()
            .find(|style| style.name() == s)
            .ok_or_else(|| format!("unknown prompt style {s:?} (expected special, natural-colon or natural-says)"))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PromptConfig {
    pub style: PromptStyle,
    pub include_future: bool,
    pub include_bs_slots: bool,
    pub mask_literal: String,
    pub separator: String,
}

impl Default for PromptConfig {
    fn default() -> Self {
        PromptConfig {
            style: PromptStyle::NaturalColon,
            include_future: true,
            include_bs_slots: false,
            mask_literal: "<mask>".to_string(),
            separator: " ".to_string(),
        }
    }
}

impl PromptConfig {
    pub fn validate(&self) -> Result<(), PromptError> {
        if self.mask_literal.is_empty() {
            return Err(PromptError::InvalidConfig("mask literal is empty".into()));
        }
        for style in PromptStyle::ALL {
            for speaker in [Speaker::User, Speaker::System] {
                if style.marker(speaker).contains(&self.mask_literal) {
                    return Err(PromptError::InvalidConfig(format!(
                        "mask literal {:?} occurs inside role marker {:?}",
                        self.mask_literal,
                        style.marker(speaker)
                    )));
                }
            }
        }
        Ok(())
    }
}

/// Model input `input_text` and reference output for one masked turn.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct RenderedPrompt {
    pub dialog_id: String,
    pub target_index: usize,
    pub input_text: String,
    pub reference: String,
}

/// Maps `(domain, slot)` to a natural-language phrase used in slot templates.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PhraseTable {
    phrases: BTreeMap<(String, String), String>,
}

impl Default for PhraseTable {
    fn default() -> Self {
        let mut table = PhraseTable::empty();
        table.insert("train", "departure", "train departing");
        table.insert("train", "destination", "train destination");
        table
    }
}

impl PhraseTable {
    pub fn empty() -> Self {
        PhraseTable {
            phrases: BTreeMap::new(),
        }
    }

    pub fn insert(&mut self, domain: &str, slot: &str, phrase: &str) {
        self.phrases
            .insert((domain.to_string(), slot.to_string()), phrase.to_string());
    }

    /// `"<phrase> <value>"` per slot joined with `", "`; slots without a
    /// table entry fall back to `"<domain> <slot> <value>"`.
    pub fn render(&self, belief: &[BeliefSlot]) -> String {
        belief
            .iter()
            .map(|b| match self.phrases.get(&(b.domain.clone(), b.slot.clone())) {
                Some(phrase) => format!("{phrase} {}", b.value),
                None => format!("{} {} {}", b.domain, b.slot, b.value),
            })
            .collect::<Vec<_>>()
            .join(", ")
    }
}

/// Slot template using the default phrase table.
pub fn render_slot_template(belief: &[BeliefSlot]) -> String {
    PhraseTable::default().render(belief)
}

/// Every exchange carries a user turn, so this is `0..n`.
pub fn user_turn_indices(dialog: &Dialog) -> Vec<usize> {
    (0..dialog.exchanges.len()).collect()
}

pub fn render(dialog: &Dialog, t: usize, config: &PromptConfig) -> Result<RenderedPrompt, PromptError> {
    render_with_phrases(dialog, t, config, &PhraseTable::default())
}

pub fn render_with_phrases(
    dialog: &Dialog,
    t: usize,
    config: &PromptConfig,
    phrases: &PhraseTable,
) -> Result<RenderedPrompt, PromptError> {
    config.validate()?;
    let n = dialog.exchanges.len();
    if t >= n {
        return Err(PromptError::TargetOutOfRange {
            dialog_id: dialog.id.clone(),
            t,
            n,
        });
    }
    let style = config.style;
    let end = if config.include_future { n } else { t + 1 };
    let mut segments = Vec::with_capacity(2 * end);
    for (i, ex) in dialog.exchanges[..end].iter().enumerate() {
        if i == t {
            let template = if config.include_bs_slots {
                phrases.render(&ex.belief)
            } else {
                String::new()
            };
            let body = if template.is_empty() {
                config.mask_literal.clone()
            } else {
                format!("{template}{}{}", config.separator, config.mask_literal)
            };
            segments.push(style.segment(Speaker::User, &body));
        } else {
            segments.push(style.segment(Speaker::User, &ex.user.text));
        }
        segments.push(style.segment(Speaker::System, &ex.system.text));
    }
    let input_text = segments.join(&config.separator);
    if input_text.matches(config.mask_literal.as_str()).count() != 1 {
        return Err(PromptError::MaskCollision {
            dialog_id: dialog.id.clone(),
            mask: config.mask_literal.clone(),
        });
    }
    Ok(RenderedPrompt {
        dialog_id: dialog.id.clone(),
        target_index: t,
        input_text,
        reference: dialog.exchanges[t].user.text.clone(),
    })
}
