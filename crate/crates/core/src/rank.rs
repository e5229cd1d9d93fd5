//! Candidate re-ranking against the original turn, threshold filtering, and
//! the sentence-level BLEU scorer used both here and in intrinsic metrics.

use std::collections::HashMap;
use std::hash::Hash;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::services::{self, GenerationCandidate, ScoreRequest, ScoringService, ServiceError};
use crate::text::tokenize;

#[derive(Debug, Clone, Error, PartialEq)]
pub enum RankError {
    #[error("no candidates to rank")]
    EmptyCandidates,
    #[error("reference is empty")]
    EmptyReference,
    #[error("scorer returned {got} scores for {expected} candidates")]
    LengthMismatch { expected: usize, got: usize },
    #[error("scorer returned a non-finite score for candidate {0}")]
    NonFinite(usize),
    #[error(transparent)]
    Service(#[from] ServiceError),
}

pub const MAX_ORDER: usize = 4;

/// Per-order BLEU statistics for one hypothesis/reference pair.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BleuBreakdown {
    /// Clipped n-gram precisions for n = 1..4.
    pub precisions: [f64; MAX_ORDER],
    pub brevity_penalty: f64,
    pub hypothesis_len: usize,
    pub reference_len: usize,
    /// BLEU-n for n = 1..4 (uniform weights over orders 1..n).
    pub bleu: [f64; MAX_ORDER],
    pub average_bleu: f64,
}

fn ngram_counts<T: Eq + Hash>(tokens: &[T], n: usize) -> HashMap<&[T], usize> {
    let mut counts = HashMap::new();
    if tokens.len() >= n {
        for gram in tokens.windows(n) {
            *counts.entry(gram).or_insert(0) += 1;
        }
    }
    counts
}

/// Unsmoothed sentence BLEU with clipped counts and brevity penalty.
///
/// An order `n` for which neither sequence has any n-gram counts as a full
/// match (`p_n = 1`), so `bleu(x, x)` is 1 at every order even for `|x| < 4`.
/// A hypothesis without n-grams against a reference that has some gets
/// `p_n = 0`.
pub fn bleu<T: Eq + Hash>(hypothesis: &[T], reference: &[T]) -> Result<BleuBreakdown, RankError> {
    if reference.is_empty() {
        return Err(RankError::EmptyReference);
    }
    let c = hypothesis.len();
    let r = reference.len();
    let mut precisions = [0.0; MAX_ORDER];
    for (k, p) in precisions.iter_mut().enumerate() {
        let n = k + 1;
        let hyp = ngram_counts(hypothesis, n);
        let refs = ngram_counts(reference, n);
        let clipped: usize = hyp
            .iter()
            .map(|(gram, &count)| count.min(refs.get(gram).copied().unwrap_or(0)))
            .sum();
        let hyp_total = c.saturating_sub(n - 1);
        *p = if hyp_total == 0 && r < n {
            // neither side has n-grams of this order
            1.0
        } else {
            clipped as f64 / hyp_total.max(1) as f64
        };
    }
    let brevity_penalty = if c == 0 {
        0.0
    } else if c > r {
        1.0
    } else {
        (1.0 - r as f64 / c as f64).exp()
    };
    let mut scores = [0.0; MAX_ORDER];
    for (k, score) in scores.iter_mut().enumerate() {
        let n = k + 1;
        if precisions[..n].iter().all(|&p| p > 0.0) {
            let weight = 1.0 / n as f64;
            let log_sum: f64 = precisions[..n].iter().map(|p| weight * p.ln()).sum();
            *score = brevity_penalty * log_sum.exp();
        }
    }
    let average_bleu = scores.iter().sum::<f64>() / MAX_ORDER as f64;
    Ok(BleuBreakdown {
        precisions,
        brevity_penalty,
        hypothesis_len: c,
        reference_len: r,
        bleu: scores,
        average_bleu,
    })
}

/// Average BLEU between two raw strings after tokenization.
pub fn average_bleu(hypothesis: &str, reference: &str) -> Result<f64, RankError> {
    Ok(bleu(&tokenize(hypothesis), &tokenize(reference))?.average_bleu)
}

/// Scores candidate texts against a reference; higher is better.
pub trait CandidateScorer: Send + Sync {
    fn score(&self, reference: &str, candidates: &[String]) -> Result<Vec<f64>, RankError>;

    fn name(&self) -> String;
}

/// Average of BLEU-1..4 on tokenized text.
#[derive(Debug, Clone, Copy, Default)]
pub struct BleuScorer;

impl CandidateScorer for BleuScorer {
    fn score(&self, reference: &str, candidates: &[String]) -> Result<Vec<f64>, RankError> {
        let reference = tokenize(reference);
        candidates
            .iter()
            .map(|c| Ok(bleu(&tokenize(c), &reference)?.average_bleu))
            .collect()
    }

    fn name(&self) -> String {
        "bleu".into()
    }
}

/// Learned-similarity scores from a [`ScoringService`].
#[derive(Clone)]
pub struct BleurtScorer {
    service: Arc<dyn ScoringService>,
}

impl BleurtScorer {
    pub fn new(service: Arc<dyn ScoringService>) -> Self {
        BleurtScorer { service }
    }
}

impl CandidateScorer for BleurtScorer {
    fn score(&self, reference: &str, candidates: &[String]) -> Result<Vec<f64>, RankError> {
        let request = ScoreRequest::bleurt(reference, candidates.to_vec());
        Ok(services::score(self.service.as_ref(), &request)?)
    }

    fn name(&self) -> String {
        format!("bleurt:{}", self.service.describe())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoredCandidate {
    pub candidate: GenerationCandidate,
    pub rank_score: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Decision {
    Selected,
    FilteredOut,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RankOutcome {
    pub selected: Option<ScoredCandidate>,
    /// Every candidate with its score, in original candidate order.
    pub all_scored: Vec<ScoredCandidate>,
    pub decision: Decision,
}

/// Scores every candidate against `reference` and selects the argmax.
/// Ties go to the lowest original rank.
pub fn rerank(
    candidates: &[GenerationCandidate],
    reference: &str,
    scorer: &dyn CandidateScorer,
) -> Result<RankOutcome, RankError> {
    if candidates.is_empty() {
        return Err(RankError::EmptyCandidates);
    }
    let texts: Vec<String> = candidates.iter().map(|c| c.text.clone()).collect();
    let scores = scorer.score(reference, &texts)?;
    if scores.len() != candidates.len() {
        return Err(RankError::LengthMismatch {
            expected: candidates.len(),
            got: scores.len(),
        });
    }
    if let Some(i) = scores.iter().position(|s| !s.is_finite()) {
        return Err(RankError::NonFinite(i));
    }
    let all_scored: Vec<ScoredCandidate> = candidates
        .iter()
        .zip(scores)
        .map(|(candidate, rank_score)| ScoredCandidate {
            candidate: candidate.clone(),
            rank_score,
        })
        .collect();
    let best = all_scored
        .iter()
        .reduce(|best, next| {
            let better = next.rank_score > best.rank_score
                || (next.rank_score == best.rank_score && next.candidate.rank < best.candidate.rank);
            if better {
                next
            } else {
                best
            }
        })
        .cloned();
    Ok(RankOutcome {
        selected: best,
        all_scored,
        decision: Decision::Selected,
    })
}

/// Drops the selection when its score is below `threshold`. No threshold
/// leaves the outcome unchanged.
pub fn filter(outcome: RankOutcome, threshold: Option<f64>) -> RankOutcome {
    let Some(tau) = threshold else {
        return outcome;
    };
    match &outcome.selected {
        Some(sel) if sel.rank_score < tau => RankOutcome {
            selected: None,
            decision: Decision::FilteredOut,
            ..outcome
        },
        _ => outcome,
    }
}
