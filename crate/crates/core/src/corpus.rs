//! Task-oriented dialog data model and corpus I/O.
//!
//! A [`Dialog`] is an ordered list of [`Exchange`]s, each pairing one user
//! turn with its belief state and the system reply. Corpora are read from the
//! canonical JSON format or adapted from MultiWoZ-style (`data.json`) and
//! SGD-style (`dialogues_*.json`) releases, and always written back in the
//! canonical format.
//!
//! Text is stored verbatim. Normalization only happens inside the metric
//! tokenizer.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::Value;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{}: malformed JSON: {source}", path.display())]
    Json {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },
    #[error("dialog {dialog_id}: {field}: {message}")]
    Schema {
        dialog_id: String,
        field: String,
        message: String,
    },
    #[error("duplicate dialog id {0:?}")]
    DuplicateId(String),
}

impl CorpusError {
    fn schema(dialog_id: &str, field: impl Into<String>, message: impl Into<String>) -> Self {
        CorpusError::Schema {
            dialog_id: dialog_id.to_string(),
            field: field.into(),
            message: message.into(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Speaker {
    User,
    System,
}

/// One utterance. `index` is the position in the flattened turn sequence
/// (user turns even, system turns odd).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Turn {
    pub speaker: Speaker,
    pub text: String,
    pub index: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct BeliefSlot {
    pub domain: String,
    pub slot: String,
    pub value: String,
}

impl BeliefSlot {
    pub fn new(domain: impl Into<String>, slot: impl Into<String>, value: impl Into<String>) -> Self {
        Self {
            domain: domain.into(),
            slot: slot.into(),
            value: value.into(),
        }
    }
}

/// A user turn, the belief state after it, and the system reply.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Exchange {
    pub user: Turn,
    pub belief: Vec<BeliefSlot>,
    pub system: Turn,
}

/// Informable constraints and requestable slots for one goal domain.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct DomainGoal {
    #[serde(default)]
    pub constraints: BTreeMap<String, String>,
    #[serde(default)]
    pub requestables: BTreeSet<String>,
}

/// User goal keyed by domain.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Goal {
    pub domains: BTreeMap<String, DomainGoal>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Dialog {
    pub id: String,
    pub domains: BTreeSet<String>,
    pub exchanges: Vec<Exchange>,
    pub goal: Option<Goal>,
}

/// `(user text, belief state, system text)` used to build dialogs.
pub type ExchangeParts = (String, Vec<BeliefSlot>, String);

impl Dialog {
    /// Builds a dialog from raw exchange parts, assigning speakers and
    /// flattened turn indices.
    pub fn from_parts(
        id: impl Into<String>,
        domains: impl IntoIterator<Item = String>,
        parts: Vec<ExchangeParts>,
        goal: Option<Goal>,
    ) -> Self {
        let exchanges = parts
            .into_iter()
            .enumerate()
            .map(|(i, (user, belief, system))| Exchange {
                user: Turn {
                    speaker: Speaker::User,
                    text: user,
                    index: 2 * i,
                },
                belief,
                system: Turn {
                    speaker: Speaker::System,
                    text: system,
                    index: 2 * i + 1,
                },
            })
            .collect();
        Dialog {
            id: id.into(),
            domains: domains.into_iter().collect(),
            exchanges,
            goal,
        }
    }

    pub fn len(&self) -> usize {
        self.exchanges.len()
    }

    pub fn is_empty(&self) -> bool {
        self.exchanges.is_empty()
    }

    /// Flattened `U_0, S_0, U_1, S_1, ...` sequence.
    pub fn turns(&self) -> impl Iterator<Item = &Turn> {
        self.exchanges.iter().flat_map(|e| [&e.user, &e.system])
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SourceFormat {
    Canonical,
    #[serde(rename = "multiwoz")]
    MultiWoz,
    Sgd,
}

impl std::str::FromStr for SourceFormat {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "canonical" => Ok(SourceFormat::Canonical),
            "multiwoz" => Ok(SourceFormat::MultiWoz),
            "sgd" => Ok(SourceFormat::Sgd),
            other => Err(format!("unknown corpus format {other:?}")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Corpus {
    pub dialogs: Vec<Dialog>,
    pub source_format: SourceFormat,
}

impl Corpus {
    pub fn new(dialogs: Vec<Dialog>) -> Self {
        Corpus {
            dialogs,
            source_format: SourceFormat::Canonical,
        }
    }

    pub fn get(&self, id: &str) -> Option<&Dialog> {
        self.dialogs.iter().find(|d| d.id == id)
    }
}

// ---------------------------------------------------------------------------
// Validation

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Rule {
    EmptyDialogId,
    NoExchanges,
    EmptyText,
    SpeakerMismatch,
    IndexMismatch,
    EmptyBeliefField,
    DuplicateBeliefSlot,
    EmptyGoalValue,
    EmptyRequestable,
    DuplicateDialogId,
}

impl Rule {
    pub fn as_str(self) -> &'static str {
        match self {
            Rule::EmptyDialogId => "empty_dialog_id",
            Rule::NoExchanges => "no_exchanges",
            Rule::EmptyText => "empty_text",
            Rule::SpeakerMismatch => "speaker_mismatch",
            Rule::IndexMismatch => "index_mismatch",
            Rule::EmptyBeliefField => "empty_belief_field",
            Rule::DuplicateBeliefSlot => "duplicate_belief_slot",
            Rule::EmptyGoalValue => "empty_goal_value",
            Rule::EmptyRequestable => "empty_requestable",
            Rule::DuplicateDialogId => "duplicate_dialog_id",
        }
    }
}

impl fmt::Display for Rule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// One broken invariant. `field` is a JSON-style path inside the dialog.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Violation {
    pub dialog_id: String,
    pub exchange: Option<usize>,
    pub rule: Rule,
    pub field: String,
    pub detail: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "dialog {:?}", self.dialog_id)?;
        if let Some(i) = self.exchange {
            write!(f, " exchange {i}")?;
        }
        write!(f, ": {} at {}: {}", self.rule, self.field, self.detail)
    }
}

/// Checks every type invariant. Empty iff the corpus is valid.
pub fn validate(corpus: &Corpus) -> Vec<Violation> {
    let mut out = Vec::new();
    let mut seen: BTreeMap<&str, Vec<usize>> = BTreeMap::new();
    for (pos, dialog) in corpus.dialogs.iter().enumerate() {
        seen.entry(dialog.id.as_str()).or_default().push(pos);
        validate_dialog(dialog, &mut out);
    }
    for (id, positions) in seen {
        if positions.len() > 1 {
            let listed: Vec<String> = positions.iter().map(|p| format!("#{p}")).collect();
            out.push(Violation {
                dialog_id: id.to_string(),
                exchange: None,
                rule: Rule::DuplicateDialogId,
                field: "id".into(),
                detail: format!("dialogs {} share this id", listed.join(", ")),
            });
        }
    }
    out
}

fn validate_dialog(dialog: &Dialog, out: &mut Vec<Violation>) {
    let mut push = |exchange: Option<usize>, rule: Rule, field: String, detail: &str| {
        out.push(Violation {
            dialog_id: dialog.id.clone(),
            exchange,
            rule,
            field,
            detail: detail.to_string(),
        })
    };
    if dialog.id.trim().is_empty() {
        push(None, Rule::EmptyDialogId, "id".into(), "dialog id is empty");
    }
    if dialog.exchanges.is_empty() {
        push(None, Rule::NoExchanges, "exchanges".into(), "dialog has no exchanges");
    }
    for (i, ex) in dialog.exchanges.iter().enumerate() {
        for (turn, name, speaker, index) in [
            (&ex.user, "user", Speaker::User, 2 * i),
            (&ex.system, "system", Speaker::System, 2 * i + 1),
        ] {
            let field = format!("exchanges[{i}].{name}");
            if turn.text.trim().is_empty() {
                push(Some(i), Rule::EmptyText, field.clone(), "turn text is empty");
            }
            if turn.speaker != speaker {
                push(Some(i), Rule::SpeakerMismatch, field.clone(), "wrong speaker");
            }
            if turn.index != index {
                push(Some(i), Rule::IndexMismatch, field, "turn index out of sequence");
            }
        }
        let mut keys = BTreeSet::new();
        for (j, slot) in ex.belief.iter().enumerate() {
            let field = format!("exchanges[{i}].belief[{j}]");
            if slot.domain.trim().is_empty() || slot.slot.trim().is_empty() || slot.value.trim().is_empty() {
                push(
                    Some(i),
                    Rule::EmptyBeliefField,
                    field.clone(),
                    "empty domain, slot or value",
                );
            }
            if !keys.insert((slot.domain.as_str(), slot.slot.as_str())) {
                push(
                    Some(i),
                    Rule::DuplicateBeliefSlot,
                    field,
                    &format!("({}, {}) appears twice", slot.domain, slot.slot),
                );
            }
        }
    }
    if let Some(goal) = &dialog.goal {
        for (domain, dg) in &goal.domains {
            for (slot, value) in &dg.constraints {
                if value.trim().is_empty() {
                    push(
                        None,
                        Rule::EmptyGoalValue,
                        format!("goal.{domain}.constraints.{slot}"),
                        "constraint value is empty",
                    );
                }
            }
            if dg.requestables.iter().any(|r| r.trim().is_empty()) {
                push(
                    None,
                    Rule::EmptyRequestable,
                    format!("goal.{domain}.requestables"),
                    "empty requestable slot name",
                );
            }
        }
    }
}

// ---------------------------------------------------------------------------
// Statistics

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct CorpusStats {
    pub dialogs: usize,
    pub exchanges: usize,
    pub user_turns: usize,
    pub domains: BTreeMap<String, usize>,
}

/// Counts dialogs, exchanges and user turns; the domain histogram counts
/// dialogs per domain.
pub fn corpus_stats(corpus: &Corpus) -> CorpusStats {
    let mut stats = CorpusStats {
        dialogs: corpus.dialogs.len(),
        ..CorpusStats::default()
    };
    for dialog in &corpus.dialogs {
        stats.exchanges += dialog.exchanges.len();
        stats.user_turns += dialog.exchanges.len();
        for domain in &dialog.domains {
            *stats.domains.entry(domain.clone()).or_default() += 1;
        }
    }
    stats
}

// ---------------------------------------------------------------------------
// Canonical format

#[derive(Serialize, Deserialize)]
struct CanonicalFile {
    dialogs: Vec<CanonicalDialog>,
}

#[derive(Serialize, Deserialize)]
struct CanonicalDialog {
    id: String,
    #[serde(default)]
    domains: BTreeSet<String>,
    exchanges: Vec<CanonicalExchange>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    goal: Option<Goal>,
}

#[derive(Serialize, Deserialize)]
struct CanonicalExchange {
    user: String,
    #[serde(default)]
    belief: Vec<BeliefSlot>,
    system: String,
}

impl From<CanonicalDialog> for Dialog {
    fn from(raw: CanonicalDialog) -> Self {
        let parts = raw
            .exchanges
            .into_iter()
            .map(|e| (e.user, e.belief, e.system))
            .collect();
        Dialog::from_parts(raw.id, raw.domains, parts, raw.goal)
    }
}

impl From<&Dialog> for CanonicalDialog {
    fn from(d: &Dialog) -> Self {
        CanonicalDialog {
            id: d.id.clone(),
            domains: d.domains.clone(),
            exchanges: d
                .exchanges
                .iter()
                .map(|e| CanonicalExchange {
                    user: e.user.text.clone(),
                    belief: e.belief.clone(),
                    system: e.system.text.clone(),
                })
                .collect(),
            goal: d.goal.clone(),
        }
    }
}

/// Parses canonical JSON text. The result is validated.
pub fn parse_canonical(json: &str) -> Result<Corpus, CorpusError> {
    let raw: CanonicalFile = serde_json::from_str(json).map_err(|source| CorpusError::Json {
        path: PathBuf::from("<memory>"),
        source,
    })?;
    finish(Corpus::new(raw.dialogs.into_iter().map(Dialog::from).collect()))
}

/// Serializes to canonical JSON (pretty-printed, trailing newline).
pub fn to_canonical_json(corpus: &Corpus) -> String {
    let file = CanonicalFile {
        dialogs: corpus.dialogs.iter().map(CanonicalDialog::from).collect(),
    };
    let mut text = serde_json::to_string_pretty(&file).expect("corpus serializes");
    text.push('\n');
    text
}

pub fn write_corpus(corpus: &Corpus, path: &Path) -> Result<(), CorpusError> {
    fs::write(path, to_canonical_json(corpus)).map_err(|source| CorpusError::Io {
        path: path.to_path_buf(),
        source,
    })
}

/// Reads a corpus file. For `Sgd`, `path` may also be a directory of
/// `dialogues_*.json` files. The result is validated; the first broken
/// invariant is returned as an error.
pub fn load_corpus(path: &Path, format: SourceFormat) -> Result<Corpus, CorpusError> {
    finish(load_corpus_unchecked(path, format)?)
}

/// Like [`load_corpus`] but skips the invariant check, so callers can report
/// every [`Violation`] at once. Structural errors in the source still fail.
pub fn load_corpus_unchecked(path: &Path, format: SourceFormat) -> Result<Corpus, CorpusError> {
    let dialogs = match format {
        SourceFormat::Canonical => {
            let raw: CanonicalFile = read_json(path)?;
            raw.dialogs.into_iter().map(Dialog::from).collect()
        }
        SourceFormat::MultiWoz => {
            let value: Value = read_json(path)?;
            multiwoz::convert(&value)?
        }
        SourceFormat::Sgd => {
            let mut dialogs = Vec::new();
            for file in sgd::input_files(path)? {
                let value: Value = read_json(&file)?;
                dialogs.extend(sgd::convert(&value)?);
            }
            dialogs
        }
    };
    Ok(Corpus {
        dialogs,
        source_format: format,
    })
}

fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T, CorpusError> {
    let text = fs::read_to_string(path).map_err(|source| CorpusError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    serde_json::from_str(&text).map_err(|source| CorpusError::Json {
        path: path.to_path_buf(),
        source,
    })
}

fn finish(corpus: Corpus) -> Result<Corpus, CorpusError> {
    let violations = validate(&corpus);
    if let Some(dup) = violations.iter().find(|v| v.rule == Rule::DuplicateDialogId) {
        return Err(CorpusError::DuplicateId(dup.dialog_id.clone()));
    }
    if let Some(v) = violations.into_iter().next() {
        return Err(CorpusError::Schema {
            dialog_id: v.dialog_id,
            field: v.field,
            message: format!("{} ({})", v.detail, v.rule),
        });
    }
    Ok(corpus)
}

/// Adapter for MultiWoZ 2.x `data.json`.
///
/// Field mapping:
/// - top level: object keyed by dialog id, each `{"goal", "log"}`
/// - `log`: alternating user (even) / system (odd) entries with `text`
/// - belief of exchange `i`: `log[2i+1].metadata.<domain>.semi` slots plus
///   `book` slots (renamed `book <slot>`, `booked` skipped); empty and
///   `"not mentioned"` values are dropped
/// - goal: `goal.<domain>.info` becomes constraints, `goal.<domain>.reqt`
///   requestables; `topic`/`message` and empty domain objects are ignored
/// - domains: goal domains, else the domains seen in belief states
mod multiwoz {
    use super::*;

    const NON_DOMAIN_GOAL_KEYS: [&str; 2] = ["topic", "message"];

    pub(super) fn convert(value: &Value) -> Result<Vec<Dialog>, CorpusError> {
        let root = value
            .as_object()
            .ok_or_else(|| CorpusError::schema("<root>", "$", "expected an object keyed by dialog id"))?;
        root.iter().map(|(id, raw)| dialog(id, raw)).collect()
    }

    fn dialog(id: &str, raw: &Value) -> Result<Dialog, CorpusError> {
        let log = raw
            .get("log")
            .and_then(Value::as_array)
            .ok_or_else(|| CorpusError::schema(id, "log", "missing or not an array"))?;
        if log.is_empty() {
            return Err(CorpusError::schema(id, "log", "empty log"));
        }
        if log.len() % 2 != 0 {
            return Err(CorpusError::schema(
                id,
                format!("log[{}]", log.len() - 1),
                "trailing user turn without a system reply",
            ));
        }
        let mut parts = Vec::with_capacity(log.len() / 2);
        let mut belief_domains = BTreeSet::new();
        for (i, pair) in log.chunks(2).enumerate() {
            let user = text_of(id, &pair[0], 2 * i)?;
            let system = text_of(id, &pair[1], 2 * i + 1)?;
            let belief = belief_of(&pair[1]);
            belief_domains.extend(belief.iter().map(|b| b.domain.clone()));
            parts.push((user, belief, system));
        }
        let goal = raw.get("goal").map(goal_of).transpose()?;
        let domains: BTreeSet<String> = match &goal {
            Some(g) if !g.domains.is_empty() => g.domains.keys().cloned().collect(),
            _ => belief_domains,
        };
        Ok(Dialog::from_parts(id, domains, parts, goal))
    }

    fn text_of(id: &str, entry: &Value, pos: usize) -> Result<String, CorpusError> {
        entry
            .get("text")
            .and_then(Value::as_str)
            .map(str::to_string)
            .ok_or_else(|| CorpusError::schema(id, format!("log[{pos}].text"), "missing or not a string"))
    }

    fn belief_of(system_entry: &Value) -> Vec<BeliefSlot> {
        let Some(meta) = system_entry.get("metadata").and_then(Value::as_object) else {
            return Vec::new();
        };
        let mut out = Vec::new();
        for (domain, state) in meta {
            if let Some(semi) = state.get("semi").and_then(Value::as_object) {
                for (slot, value) in semi {
                    if let Some(v) = usable(value) {
                        out.push(BeliefSlot::new(domain.as_str(), slot.as_str(), v));
                    }
                }
            }
            if let Some(book) = state.get("book").and_then(Value::as_object) {
                for (slot, value) in book {
                    if slot == "booked" {
                        continue;
                    }
                    if let Some(v) = usable(value) {
                        out.push(BeliefSlot::new(domain.as_str(), format!("book {slot}"), v));
                    }
                }
            }
        }
        out
    }

    fn usable(value: &Value) -> Option<&str> {
        let v = value.as_str()?.trim();
        (!v.is_empty() && v != "not mentioned").then_some(v)
    }

    fn goal_of(raw: &Value) -> Result<Goal, CorpusError> {
        let mut goal = Goal::default();
        let Some(obj) = raw.as_object() else {
            return Ok(goal);
        };
        for (domain, spec) in obj {
            if NON_DOMAIN_GOAL_KEYS.contains(&domain.as_str()) {
                continue;
            }
            let Some(spec) = spec.as_object() else { continue };
            if spec.is_empty() {
                continue;
            }
            let mut dg = DomainGoal::default();
            if let Some(info) = spec.get("info").and_then(Value::as_object) {
                for (slot, value) in info {
                    if let Some(v) = value.as_str() {
                        dg.constraints.insert(slot.clone(), v.to_string());
                    }
                }
            }
            if let Some(reqt) = spec.get("reqt").and_then(Value::as_array) {
                dg.requestables
                    .extend(reqt.iter().filter_map(Value::as_str).map(str::to_string));
            }
            goal.domains.insert(domain.clone(), dg);
        }
        Ok(goal)
    }
}

/// Adapter for Schema-Guided Dialogue `dialogues_*.json` files.
///
/// Field mapping:
/// - file: array of `{"dialogue_id", "services", "turns"}`
/// - `turns`: alternating `speaker` `USER`/`SYSTEM` with `utterance`
/// - belief of exchange `i`: the user turn's `frames[*].state.slot_values`,
///   domain = frame `service`, value = first listed value
/// - domains: `services`; no goal
mod sgd {
    use super::*;

    pub(super) fn input_files(path: &Path) -> Result<Vec<PathBuf>, CorpusError> {
        if !path.is_dir() {
            return Ok(vec![path.to_path_buf()]);
        }
        let io_err = |source| CorpusError::Io {
            path: path.to_path_buf(),
            source,
        };
        let mut files = Vec::new();
        for entry in fs::read_dir(path).map_err(io_err)? {
            let p = entry.map_err(io_err)?.path();
            let name = p.file_name().and_then(|n| n.to_str()).unwrap_or_default();
            if name.starts_with("dialogues_") && name.ends_with(".json") {
                files.push(p);
            }
        }
        files.sort();
        Ok(files)
    }

    pub(super) fn convert(value: &Value) -> Result<Vec<Dialog>, CorpusError> {
        let list = value
            .as_array()
            .ok_or_else(|| CorpusError::schema("<root>", "$", "expected an array of dialogues"))?;
        list.iter()
            .enumerate()
            .map(|(pos, raw)| {
                let id = raw
                    .get("dialogue_id")
                    .and_then(Value::as_str)
                    .ok_or_else(|| CorpusError::schema(&format!("#{pos}"), "dialogue_id", "missing or not a string"))?;
                dialog(id, raw)
            })
            .collect()
    }

    fn dialog(id: &str, raw: &Value) -> Result<Dialog, CorpusError> {
        let turns = raw
            .get("turns")
            .and_then(Value::as_array)
            .ok_or_else(|| CorpusError::schema(id, "turns", "missing or not an array"))?;
        if turns.is_empty() {
            return Err(CorpusError::schema(id, "turns", "no turns"));
        }
        if turns.len() % 2 != 0 {
            return Err(CorpusError::schema(
                id,
                format!("turns[{}]", turns.len() - 1),
                "trailing user turn without a system reply",
            ));
        }
        let mut parts = Vec::with_capacity(turns.len() / 2);
        for (i, pair) in turns.chunks(2).enumerate() {
            let user = utterance(id, &pair[0], 2 * i, "USER")?;
            let system = utterance(id, &pair[1], 2 * i + 1, "SYSTEM")?;
            parts.push((user, belief_of(&pair[0]), system));
        }
        let domains: BTreeSet<String> = raw
            .get("services")
            .and_then(Value::as_array)
            .map(|s| s.iter().filter_map(Value::as_str).map(str::to_string).collect())
            .unwrap_or_default();
        Ok(Dialog::from_parts(id, domains, parts, None))
    }

    fn utterance(id: &str, turn: &Value, pos: usize, speaker: &str) -> Result<String, CorpusError> {
        let got = turn.get("speaker").and_then(Value::as_str).unwrap_or_default();
        if got != speaker {
            return Err(CorpusError::schema(
                id,
                format!("turns[{pos}].speaker"),
                format!("expected {speaker}, found {got:?}"),
            ));
        }
        turn.get("utterance")
            .and_then(Value::as_str)
            .map(str::to_string)
            .ok_or_else(|| CorpusError::schema(id, format!("turns[{pos}].utterance"), "missing or not a string"))
    }

    fn belief_of(user_turn: &Value) -> Vec<BeliefSlot> {
        let mut out = Vec::new();
        let frames = user_turn.get("frames").and_then(Value::as_array);
        for frame in frames.into_iter().flatten() {
            let Some(service) = frame.get("service").and_then(Value::as_str) else {
                continue;
            };
            let values = frame
                .get("state")
                .and_then(|s| s.get("slot_values"))
                .and_then(Value::as_object);
            for (slot, vals) in values.into_iter().flatten() {
                let first = match vals {
                    Value::Array(items) => items.first().and_then(Value::as_str),
                    other => other.as_str(),
                };
                if let Some(v) = first.filter(|v| !v.trim().is_empty()) {
                    out.push(BeliefSlot::new(service, slot.as_str(), v));
                }
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn three_exchange() -> Dialog {
        Dialog::from_parts(
            "d1",
            ["hotel".to_string()],
            vec![
                ("hi".into(), vec![], "hello".into()),
                (
                    "a cheap hotel".into(),
                    vec![BeliefSlot::new("hotel", "pricerange", "cheap")],
                    "ok".into(),
                ),
                ("thanks".into(), vec![], "bye".into()),
            ],
            None,
        )
    }

    #[test]
    fn from_parts_assigns_indices() {
        let d = three_exchange();
        let idx: Vec<_> = d.turns().map(|t| (t.index, t.speaker)).collect();
        assert_eq!(idx[0], (0, Speaker::User));
        assert_eq!(idx[5], (5, Speaker::System));
        assert!(validate(&Corpus::new(vec![d])).is_empty());
    }

    #[test]
    fn canonical_parse_and_stats() {
        let json = r#"{"dialogs":[{"id":"a","domains":["hotel"],"exchanges":[
            {"user":"u1","belief":[],"system":"s1"},
            {"user":"u2","system":"s2"},
            {"user":"u3","belief":[{"domain":"hotel","slot":"area","value":"east"}],"system":"s3"}]}]}"#;
        let corpus = parse_canonical(json).unwrap();
        assert_eq!(corpus.dialogs.len(), 1);
        assert_eq!(corpus.dialogs[0].len(), 3);
        let stats = corpus_stats(&corpus);
        assert_eq!((stats.dialogs, stats.exchanges, stats.user_turns), (1, 3, 3));
        assert_eq!(stats.domains["hotel"], 1);
    }

    #[test]
    fn empty_user_text_is_schema_error_naming_dialog() {
        let json = r#"{"dialogs":[{"id":"bad-one","exchanges":[{"user":"","system":"s"}]}]}"#;
        match parse_canonical(json) {
            Err(CorpusError::Schema { dialog_id, field, .. }) => {
                assert_eq!(dialog_id, "bad-one");
                assert_eq!(field, "exchanges[0].user");
            }
            other => panic!("expected schema error, got {other:?}"),
        }
    }

    #[test]
    fn duplicate_ids_rejected_on_load_and_reported_once() {
        let json = r#"{"dialogs":[
            {"id":"x","exchanges":[{"user":"u","system":"s"}]},
            {"id":"x","exchanges":[{"user":"u","system":"s"}]}]}"#;
        assert!(matches!(parse_canonical(json), Err(CorpusError::DuplicateId(id)) if id == "x"));

        let d = three_exchange();
        let corpus = Corpus::new(vec![d.clone(), d]);
        let v = validate(&corpus);
        assert_eq!(v.len(), 1);
        assert_eq!(v[0].rule, Rule::DuplicateDialogId);
        assert!(v[0].detail.contains("#0") && v[0].detail.contains("#1"));
    }

    #[test]
    fn duplicate_belief_slot_is_one_violation() {
        let mut d = three_exchange();
        d.exchanges[1]
            .belief
            .push(BeliefSlot::new("hotel", "pricerange", "moderate"));
        let v = validate(&Corpus::new(vec![d]));
        assert_eq!(v.len(), 1);
        assert_eq!(v[0].rule, Rule::DuplicateBeliefSlot);
        assert_eq!(v[0].exchange, Some(1));
        assert_eq!(v[0].dialog_id, "d1");
    }

    #[test]
    fn empty_dialog_and_empty_corpus() {
        let d = Dialog::from_parts("e", Vec::new(), vec![], None);
        let v = validate(&Corpus::new(vec![d]));
        assert_eq!(v[0].rule, Rule::NoExchanges);
        assert_eq!(corpus_stats(&Corpus::new(vec![])), CorpusStats::default());
    }

    #[test]
    fn multiwoz_trailing_user_turn_rejected() {
        let raw = serde_json::json!({
            "X.json": {"goal": {}, "log": [
                {"text": "hi", "metadata": {}},
                {"text": "hello", "metadata": {}},
                {"text": "anyone?", "metadata": {}}
            ]}
        });
        let err = multiwoz::convert(&raw).unwrap_err();
        assert!(err.to_string().contains("trailing user turn"), "{err}");
    }

    #[test]
    fn sgd_speaker_order_enforced() {
        let raw = serde_json::json!([{
            "dialogue_id": "1_00000",
            "services": ["Restaurants_1"],
            "turns": [
                {"speaker": "SYSTEM", "utterance": "hi", "frames": []},
                {"speaker": "USER", "utterance": "hello", "frames": []}
            ]
        }]);
        let err = sgd::convert(&raw).unwrap_err();
        assert!(err.to_string().contains("expected USER"), "{err}");
    }
}
