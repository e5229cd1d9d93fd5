//! Intrinsic evaluation of augmented turns against the originals: average
//! BLEU, BERTScore F1 over a pluggable embedding provider, and BLEURT and
//! perplexity through the scoring service.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::random::{fnv1a_64, SeededRng};
use crate::rank::{bleu, RankError};
use crate::services::{self, ScoreRequest, ScoringService};
use crate::text::tokenize;

#[derive(Debug, Clone, Error, PartialEq)]
pub enum IntrinsicError {
    #[error("empty token sequence")]
    EmptySequence,
    #[error("embedding for token {0:?} has zero norm")]
    ZeroNorm(String),
    #[error("provider returned {got} vectors for {expected} tokens")]
    LengthMismatch { expected: usize, got: usize },
    #[error("no pairs to evaluate")]
    NoPairs,
    #[error("pair {index}: {source}")]
    Pair {
        index: usize,
        #[source]
        source: RankError,
    },
}

/// Maps a token sequence to one vector per token.
pub trait EmbeddingProvider: Send + Sync {
    fn embed(&self, tokens: &[String]) -> Vec<Vec<f64>>;

    /// True when each token's vector ignores its neighbours.
    fn is_context_free(&self) -> bool;
}

/// Context-free provider giving each token a pseudo-random unit vector.
///
/// The vector for `token` draws `dimension` values uniformly in `[-1, 1)`
/// from PCG32 seeded with `fnv1a_64(token) ^ seed`, then L2-normalizes.
#[derive(Debug, Clone)]
pub struct ToyEmbeddingProvider {
    dimension: usize,
    seed: u64,
}

pub fn toy_embedding_provider(dimension: usize, seed: u64) -> ToyEmbeddingProvider {
    assert!(dimension >= 2, "toy embeddings need at least 2 dimensions");
    ToyEmbeddingProvider { dimension, seed }
}

impl ToyEmbeddingProvider {
    pub fn vector(&self, token: &str) -> Vec<f64> {
        let mut rng = SeededRng::new(fnv1a_64(token) ^ self.seed);
        let raw: Vec<f64> = (0..self.dimension).map(|_| rng.signed_unit()).collect();
        let norm = raw.iter().map(|x| x * x).sum::<f64>().sqrt();
        raw.into_iter().map(|x| x / norm).collect()
    }
}

impl EmbeddingProvider for ToyEmbeddingProvider {
    fn embed(&self, tokens: &[String]) -> Vec<Vec<f64>> {
        tokens.iter().map(|t| self.vector(t)).collect()
    }

    fn is_context_free(&self) -> bool {
        true
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BertScoreResult {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn unit_vectors(tokens: &[String], provider: &dyn EmbeddingProvider) -> Result<Vec<Vec<f64>>, IntrinsicError> {
    let vectors = provider.embed(tokens);
    if vectors.len() != tokens.len() {
        return Err(IntrinsicError::LengthMismatch {
            expected: tokens.len(),
            got: vectors.len(),
        });
    }
    tokens
        .iter()
        .zip(vectors)
        .map(|(token, v)| {
            let norm = dot(&v, &v).sqrt();
            if norm == 0.0 || !norm.is_finite() {
                return Err(IntrinsicError::ZeroNorm(token.clone()));
            }
            Ok(v.into_iter().map(|x| x / norm).collect())
        })
        .collect()
}

/// Greedy-matching BERTScore without idf weighting or baseline rescaling.
///
/// Precision averages, over hypothesis tokens, the best cosine against any
/// reference token; recall does the same from the reference side.
pub fn bertscore(
    hypothesis: &[String],
    reference: &[String],
    provider: &dyn EmbeddingProvider,
) -> Result<BertScoreResult, IntrinsicError> {
    if hypothesis.is_empty() || reference.is_empty() {
        return Err(IntrinsicError::EmptySequence);
    }
    let hyp = unit_vectors(hypothesis, provider)?;
    let refs = unit_vectors(reference, provider)?;
    let sim: Vec<Vec<f64>> = hyp.iter().map(|h| refs.iter().map(|r| dot(h, r)).collect()).collect();
    let precision = sim
        .iter()
        .map(|row| row.iter().copied().fold(f64::NEG_INFINITY, f64::max))
        .sum::<f64>()
        / hyp.len() as f64;
    let recall = (0..refs.len())
        .map(|j| sim.iter().map(|row| row[j]).fold(f64::NEG_INFINITY, f64::max))
        .sum::<f64>()
        / refs.len() as f64;
    let f1 = if precision + recall > 0.0 {
        2.0 * precision * recall / (precision + recall)
    } else {
        0.0
    };
    Ok(BertScoreResult { precision, recall, f1 })
}

/// One line of the pair file.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EvalPair {
    pub augmentation: String,
    pub reference: String,
}

/// Backends for the metrics that need one; `None` leaves the metric absent.
#[derive(Default, Clone, Copy)]
pub struct IntrinsicBackends<'a> {
    pub embeddings: Option<&'a dyn EmbeddingProvider>,
    pub scoring: Option<&'a dyn ScoringService>,
}

/// Corpus means over evaluated pairs. Absent metrics serialize as `null`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IntrinsicReport {
    pub average_bleu: Option<f64>,
    pub bertscore_f1: Option<f64>,
    pub bleurt_mean: Option<f64>,
    pub perplexity: Option<f64>,
    pub pair_count: usize,
    /// Why a configured metric is absent.
    #[serde(skip_serializing_if = "BTreeMap::is_empty")]
    pub errors: BTreeMap<String, String>,
}

fn mean(values: &[f64]) -> f64 {
    values.iter().sum::<f64>() / values.len() as f64
}

pub fn corpus_intrinsic(
    pairs: &[EvalPair],
    backends: IntrinsicBackends<'_>,
) -> Result<IntrinsicReport, IntrinsicError> {
    if pairs.is_empty() {
        return Err(IntrinsicError::NoPairs);
    }
    let tokenized: Vec<(Vec<String>, Vec<String>)> = pairs
        .iter()
        .map(|p| (tokenize(&p.augmentation), tokenize(&p.reference)))
        .collect();

    let bleu_scores = tokenized
        .iter()
        .enumerate()
        .map(|(index, (hyp, reference))| {
            bleu(hyp, reference)
                .map(|b| b.average_bleu)
                .map_err(|source| IntrinsicError::Pair { index, source })
        })
        .collect::<Result<Vec<_>, _>>()?;

    let mut errors = BTreeMap::new();
    let bertscore_f1 = backends.embeddings.and_then(|provider| {
        let f1s: Result<Vec<f64>, IntrinsicError> = tokenized
            .iter()
            .map(|(hyp, reference)| bertscore(hyp, reference, provider).map(|r| r.f1))
            .collect();
        f1s.map(|v| mean(&v))
            .map_err(|e| errors.insert("bertscore_f1".to_string(), e.to_string()))
            .ok()
    });

    let (bleurt_mean, perplexity) = match backends.scoring {
        None => (None, None),
        Some(service) => {
            let bleurt: Result<Vec<f64>, _> = pairs
                .iter()
                .map(|p| {
                    let request = ScoreRequest::bleurt(p.reference.clone(), vec![p.augmentation.clone()]);
                    services::score(service, &request).map(|s| s[0])
                })
                .collect();
            let bleurt_mean = bleurt
                .map(|v| mean(&v))
                .map_err(|e| errors.insert("bleurt_mean".to_string(), e.to_string()))
                .ok();
            let request = ScoreRequest::perplexity(pairs.iter().map(|p| p.augmentation.clone()).collect());
            let perplexity = services::score(service, &request)
                .map(|v| mean(&v))
                .map_err(|e| errors.insert("perplexity".to_string(), e.to_string()))
                .ok();
            (bleurt_mean, perplexity)
        }
    };

    Ok(IntrinsicReport {
        average_bleu: Some(mean(&bleu_scores)),
        bertscore_f1,
        bleurt_mean,
        perplexity,
        pair_count: pairs.len(),
        errors,
    })
}
