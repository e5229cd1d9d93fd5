//! End-to-end augmentation: sample targets, render, generate, re-rank,
//! filter, and merge augmented copies into the corpus.

use std::collections::{BTreeMap, BTreeSet};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;
use std::thread;
use std::time::{SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::{Corpus, Dialog};
use crate::prompt::{render, PromptConfig, PromptError, PromptStyle};
use crate::random::SeededRng;
use crate::rank::{filter, rerank, CandidateScorer, Decision, RankOutcome};
use crate::services::{self, GenerationRequest, Generator};

/// Suffix appended to the id of an augmented dialog copy.
pub const AUGMENTED_SUFFIX: &str = "-aug";

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("corpus has no dialogs")]
    EmptyCorpus,
    #[error("invalid pipeline config: {0}")]
    InvalidConfig(String),
    #[error(transparent)]
    Prompt(#[from] PromptError),
    #[error("record references dialog {dialog_id} exchange {turn_index}, which does not exist")]
    DanglingRecord { dialog_id: String, turn_index: usize },
    #[error("record for dialog {0} selects text that is not among its candidates")]
    ForeignSelection(String),
    #[error("augmented id {0} collides with an existing dialog")]
    IdCollision(String),
    #[error("all {0} augmentation targets failed; first error: {1}")]
    AllFailed(usize, String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PipelineConfig {
    /// Fraction of dialogs to augment, in `(0, 1]`.
    pub fraction: f64,
    pub seed: u64,
    pub prompt: PromptConfig,
    pub num_beams: u32,
    pub num_return: u32,
    pub max_new_tokens: u32,
    pub filter_threshold: Option<f64>,
    pub concurrency: usize,
}

impl PipelineConfig {
    pub fn new(fraction: f64, seed: u64) -> Self {
        PipelineConfig {
            fraction,
            seed,
            prompt: PromptConfig::default(),
            num_beams: GenerationRequest::DEFAULT_NUM_BEAMS,
            num_return: GenerationRequest::DEFAULT_NUM_RETURN,
            max_new_tokens: GenerationRequest::DEFAULT_MAX_NEW_TOKENS,
            filter_threshold: None,
            concurrency: 4,
        }
    }

    pub fn validate(&self) -> Result<(), PipelineError> {
        if !(self.fraction > 0.0 && self.fraction <= 1.0) {
            return Err(PipelineError::InvalidConfig(format!(
                "fraction must be in (0, 1], got {}",
                self.fraction
            )));
        }
        if self.concurrency == 0 {
            return Err(PipelineError::InvalidConfig("concurrency must be at least 1".into()));
        }
        if self.filter_threshold.is_some_and(|t| !t.is_finite()) {
            return Err(PipelineError::InvalidConfig("filter threshold must be finite".into()));
        }
        self.request("")
            .validate()
            .map_err(|e| PipelineError::InvalidConfig(e.to_string()))?;
        self.prompt.validate()?;
        Ok(())
    }

    fn request(&self, prompt: &str) -> GenerationRequest {
        GenerationRequest {
            prompt: prompt.to_string(),
            num_beams: self.num_beams,
            num_return: self.num_return,
            max_new_tokens: self.max_new_tokens,
        }
    }
}

/// Generation backend plus the scorer used for re-ranking.
#[derive(Clone, Copy)]
pub struct Backends<'a> {
    pub generator: &'a dyn Generator,
    pub scorer: &'a dyn CandidateScorer,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SampledTarget {
    pub dialog_id: String,
    pub turn_index: usize,
}

/// Number of dialogs to augment: `max(1, floor(fraction * n))`.
pub fn target_count(n: usize, fraction: f64) -> usize {
    ((fraction * n as f64).floor() as usize).clamp(1, n.max(1))
}

/// Picks `target_count` dialogs and one user turn in each.
///
/// Dialogs are sorted by id and Fisher–Yates shuffled with PCG32 seeded by
/// `seed`; the first `k` are taken, and each draws its exchange index from the
/// same stream in shuffled order. The result is sorted by dialog id.
pub fn sample_targets(corpus: &Corpus, fraction: f64, seed: u64) -> Result<Vec<SampledTarget>, PipelineError> {
    if corpus.dialogs.is_empty() {
        return Err(PipelineError::EmptyCorpus);
    }
    if !(fraction > 0.0 && fraction <= 1.0) {
        return Err(PipelineError::InvalidConfig(format!(
            "fraction must be in (0, 1], got {fraction}"
        )));
    }
    let mut order: Vec<&Dialog> = corpus.dialogs.iter().collect();
    order.sort_by(|a, b| a.id.cmp(&b.id));
    let mut rng = SeededRng::new(seed);
    rng.shuffle(&mut order);
    let k = target_count(order.len(), fraction);
    let mut targets: Vec<SampledTarget> = order[..k]
        .iter()
        .map(|d| SampledTarget {
            dialog_id: d.id.clone(),
            turn_index: rng.index(d.exchanges.len()),
        })
        .collect();
    targets.sort_by(|a, b| a.dialog_id.cmp(&b.dialog_id));
    Ok(targets)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecordCandidate {
    pub text: String,
    pub gen_score: f64,
    pub rank_score: f64,
}

/// Provenance of one augmentation attempt; one JSONL line in the records file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AugmentationRecord {
    pub dialog_id: String,
    pub turn_index: usize,
    pub original: String,
    pub candidates: Vec<RecordCandidate>,
    pub selected: Option<String>,
    pub decision: Decision,
    pub style: PromptStyle,
    pub seed: u64,
    /// Set when the attempt failed (backend or scorer error).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

impl AugmentationRecord {
    pub fn failed(&self) -> bool {
        self.error.is_some()
    }
}

/// Renders, generates, re-ranks and filters one target turn. Backend and
/// scorer failures come back as a `FilteredOut` record carrying the error.
pub fn augment_turn(
    dialog: &Dialog,
    t: usize,
    config: &PipelineConfig,
    backends: Backends<'_>,
) -> Result<AugmentationRecord, PipelineError> {
    if t >= dialog.exchanges.len() {
        return Err(PipelineError::DanglingRecord {
            dialog_id: dialog.id.clone(),
            turn_index: t,
        });
    }
    let original = dialog.exchanges[t].user.text.clone();
    let mut record = AugmentationRecord {
        dialog_id: dialog.id.clone(),
        turn_index: t,
        original: original.clone(),
        candidates: Vec::new(),
        selected: None,
        decision: Decision::FilteredOut,
        style: config.prompt.style,
        seed: config.seed,
        error: None,
    };
    let outcome = render(dialog, t, &config.prompt)
        .map_err(|e| e.to_string())
        .and_then(|prompt| {
            services::generate(backends.generator, &config.request(&prompt.input_text)).map_err(|e| e.to_string())
        })
        .and_then(|candidates| {
            if candidates.is_empty() {
                return Err("backend returned no candidates".to_string());
            }
            rerank(&candidates, &original, backends.scorer).map_err(|e| e.to_string())
        });
    match outcome {
        Ok(outcome) => {
            let RankOutcome {
                selected,
                all_scored,
                decision,
            } = filter(outcome, config.filter_threshold);
            record.candidates = all_scored
                .into_iter()
                .map(|s| RecordCandidate {
                    text: s.candidate.text,
                    gen_score: s.candidate.gen_score,
                    rank_score: s.rank_score,
                })
                .collect();
            record.selected = selected.map(|s| s.candidate.text);
            record.decision = decision;
        }
        Err(message) => {
            log::warn!("augmenting {} turn {t} failed: {message}", dialog.id);
            record.error = Some(message);
        }
    }
    Ok(record)
}

/// All original dialogs followed by one `-aug` copy per selected record, with
/// the target user text replaced and everything else (belief states included)
/// kept verbatim.
pub fn build_augmented_corpus(corpus: &Corpus, records: &[AugmentationRecord]) -> Result<Corpus, PipelineError> {
    let by_id: BTreeMap<&str, &Dialog> = corpus.dialogs.iter().map(|d| (d.id.as_str(), d)).collect();
    let mut ids: BTreeSet<String> = by_id.keys().map(|s| s.to_string()).collect();
    let mut sorted: Vec<&AugmentationRecord> = records.iter().collect();
    sorted.sort_by(|a, b| (&a.dialog_id, a.turn_index).cmp(&(&b.dialog_id, b.turn_index)));

    let mut dialogs = corpus.dialogs.clone();
    for record in sorted {
        let dangling = || PipelineError::DanglingRecord {
            dialog_id: record.dialog_id.clone(),
            turn_index: record.turn_index,
        };
        let source = by_id.get(record.dialog_id.as_str()).ok_or_else(dangling)?;
        if record.turn_index >= source.exchanges.len() {
            return Err(dangling());
        }
        let (Decision::Selected, Some(text)) = (record.decision, &record.selected) else {
            continue;
        };
        if !record.candidates.iter().any(|c| &c.text == text) {
            return Err(PipelineError::ForeignSelection(record.dialog_id.clone()));
        }
        let mut copy = (*source).clone();
        copy.id = format!("{}{AUGMENTED_SUFFIX}", source.id);
        if !ids.insert(copy.id.clone()) {
            return Err(PipelineError::IdCollision(copy.id));
        }
        copy.exchanges[record.turn_index].user.text = text.clone();
        dialogs.push(copy);
    }
    Ok(Corpus {
        dialogs,
        source_format: corpus.source_format,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunCounts {
    pub input_dialogs: usize,
    pub targets: usize,
    pub selected: usize,
    pub filtered_out: usize,
    pub failed: usize,
    pub output_dialogs: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunManifest {
    pub tool_version: String,
    pub config: PipelineConfig,
    pub generator: String,
    pub scorer: String,
    pub counts: RunCounts,
    pub started_unix_ms: u128,
    pub finished_unix_ms: u128,
}

#[derive(Debug, Clone)]
pub struct PipelineRun {
    pub corpus: Corpus,
    pub records: Vec<AugmentationRecord>,
    pub manifest: RunManifest,
}

fn now_ms() -> u128 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_millis())
        .unwrap_or_default()
}

pub fn run_pipeline(
    corpus: &Corpus,
    config: &PipelineConfig,
    backends: Backends<'_>,
) -> Result<PipelineRun, PipelineError> {
    config.validate()?;
    let started_unix_ms = now_ms();
    let targets = sample_targets(corpus, config.fraction, config.seed)?;
    let by_id: BTreeMap<&str, &Dialog> = corpus.dialogs.iter().map(|d| (d.id.as_str(), d)).collect();

    let slots: Mutex<Vec<Option<Result<AugmentationRecord, PipelineError>>>> =
        Mutex::new((0..targets.len()).map(|_| None).collect());
    let next = AtomicUsize::new(0);
    let workers = config.concurrency.min(targets.len()).max(1);
    thread::scope(|scope| {
        for _ in 0..workers {
            scope.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::Relaxed);
                let Some(target) = targets.get(i) else { break };
                let dialog = by_id[target.dialog_id.as_str()];
                let result = augment_turn(dialog, target.turn_index, config, backends);
                slots.lock().expect("result slots poisoned")[i] = Some(result);
            });
        }
    });
    let records = slots
        .into_inner()
        .expect("result slots poisoned")
        .into_iter()
        .map(|r| r.expect("every target processed"))
        .collect::<Result<Vec<_>, _>>()?;

    let failed: Vec<&AugmentationRecord> = records.iter().filter(|r| r.failed()).collect();
    if !records.is_empty() && failed.len() == records.len() {
        let first = failed[0].error.clone().unwrap_or_default();
        return Err(PipelineError::AllFailed(records.len(), first));
    }
    let augmented = build_augmented_corpus(corpus, &records)?;
    let selected = records.iter().filter(|r| r.decision == Decision::Selected).count();
    let counts = RunCounts {
        input_dialogs: corpus.dialogs.len(),
        targets: targets.len(),
        selected,
        filtered_out: records.len() - selected - failed.len(),
        failed: failed.len(),
        output_dialogs: augmented.dialogs.len(),
    };
    let manifest = RunManifest {
        tool_version: env!("CARGO_PKG_VERSION").to_string(),
        config: config.clone(),
        generator: backends.generator.describe(),
        scorer: backends.scorer.name(),
        counts,
        started_unix_ms,
        finished_unix_ms: now_ms(),
    };
    Ok(PipelineRun {
        corpus: augmented,
        records,
        manifest,
    })
}

/// One JSON object per line, trailing newline.
pub fn records_to_jsonl(records: &[AugmentationRecord]) -> String {
    records
        .iter()
        .map(|r| serde_json::to_string(r).expect("record serializes") + "\n")
        .collect()
}
