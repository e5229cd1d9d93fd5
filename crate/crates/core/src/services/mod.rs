//! Generation and scoring backends.
//!
//! The pipeline talks to a [`Generator`] (beam-search candidates for a masked
//! prompt) and optionally a [`ScoringService`] (learned similarity and
//! perplexity). Remote implementations speak HTTP+JSON (see [`http`]); the
//! [`StubGenerator`] and [`TableScorer`] are deterministic in-process doubles.

#[cfg(feature = "http")]
pub mod http;
mod words;

use std::collections::HashMap;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::random::{fnv1a_64, SeededRng};

#[derive(Debug, Clone, Error, PartialEq)]
pub enum ServiceError {
    #[error("invalid request: {0}")]
    InvalidRequest(String),
    #[error("transport failure after {attempts} attempt(s): {message}")]
    Transport { attempts: u32, message: String },
    #[error("malformed response: {0}")]
    Malformed(String),
    #[error("server returned status {status}: {body}")]
    Status { status: u16, body: String },
    #[error("unsupported metric: {0}")]
    UnsupportedMetric(String),
}

impl ServiceError {
    pub fn is_retryable(&self) -> bool {
        match self {
            ServiceError::Transport { .. } => true,
            ServiceError::Status { status, .. } => *status >= 500,
            _ => false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GenerationRequest {
    pub prompt: String,
    pub num_beams: u32,
    pub num_return: u32,
    pub max_new_tokens: u32,
}

impl GenerationRequest {
    pub const DEFAULT_NUM_BEAMS: u32 = 25;
    pub const DEFAULT_NUM_RETURN: u32 = 20;
    pub const DEFAULT_MAX_NEW_TOKENS: u32 = 64;

    pub fn new(prompt: impl Into<String>) -> Self {
        GenerationRequest {
            prompt: prompt.into(),
            num_beams: Self::DEFAULT_NUM_BEAMS,
            num_return: Self::DEFAULT_NUM_RETURN,
            max_new_tokens: Self::DEFAULT_MAX_NEW_TOKENS,
        }
    }

    /// Small-beam preset for quick runs: 4 beams, 4 returned candidates.
    pub fn fast(prompt: impl Into<String>) -> Self {
        GenerationRequest {
            num_beams: 4,
            num_return: 4,
            ..Self::new(prompt)
        }
    }

    pub fn validate(&self) -> Result<(), ServiceError> {
        if self.num_return < 1 || self.num_return > self.num_beams {
            return Err(ServiceError::InvalidRequest(format!(
                "num_return must be in 1..={} (got {})",
                self.num_beams, self.num_return
            )));
        }
        if self.max_new_tokens < 1 {
            return Err(ServiceError::InvalidRequest("max_new_tokens must be >= 1".into()));
        }
        Ok(())
    }
}

/// One beam output. `rank` is the position in backend order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenerationCandidate {
    pub text: String,
    pub gen_score: f64,
    pub rank: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Metric {
    Bleurt,
    Perplexity,
}

impl fmt::Display for Metric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Metric::Bleurt => "bleurt",
            Metric::Perplexity => "perplexity",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreRequest {
    pub metric: Metric,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reference: Option<String>,
    pub candidates: Vec<String>,
}

impl ScoreRequest {
    pub fn bleurt(reference: impl Into<String>, candidates: Vec<String>) -> Self {
        ScoreRequest {
            metric: Metric::Bleurt,
            reference: Some(reference.into()),
            candidates,
        }
    }

    pub fn perplexity(candidates: Vec<String>) -> Self {
        ScoreRequest {
            metric: Metric::Perplexity,
            reference: None,
            candidates,
        }
    }

    pub fn validate(&self) -> Result<(), ServiceError> {
        if self.candidates.is_empty() {
            return Err(ServiceError::InvalidRequest("no candidates to score".into()));
        }
        if self.metric == Metric::Bleurt && self.reference.is_none() {
            return Err(ServiceError::InvalidRequest("bleurt scoring needs a reference".into()));
        }
        Ok(())
    }
}

pub trait Generator: Send + Sync {
    /// Raw backend call; [`generate`] wraps it with request and response checks.
    fn generate(&self, request: &GenerationRequest) -> Result<Vec<GenerationCandidate>, ServiceError>;

    /// Short identity for run manifests.
    fn describe(&self) -> String;
}

pub trait ScoringService: Send + Sync {
    fn score(&self, request: &ScoreRequest) -> Result<Vec<f64>, ServiceError>;

    fn describe(&self) -> String;
}

/// Validates the request, calls the backend, and checks that ranks run
/// `0..k`, scores are non-increasing and `k <= num_return`. Short responses
/// are accepted with a warning.
pub fn generate(
    backend: &dyn Generator,
    request: &GenerationRequest,
) -> Result<Vec<GenerationCandidate>, ServiceError> {
    request.validate()?;
    let candidates = backend.generate(request)?;
    check_candidates(&candidates, request.num_return as usize)?;
    if candidates.len() < request.num_return as usize {
        log::warn!(
            "{} returned {} of {} requested candidates",
            backend.describe(),
            candidates.len(),
            request.num_return
        );
    }
    Ok(candidates)
}

pub(crate) fn check_candidates(candidates: &[GenerationCandidate], limit: usize) -> Result<(), ServiceError> {
    if candidates.len() > limit {
        return Err(ServiceError::Malformed(format!(
            "{} candidates returned, at most {limit} requested",
            candidates.len()
        )));
    }
    for (i, c) in candidates.iter().enumerate() {
        if c.rank != i {
            return Err(ServiceError::Malformed(format!("candidate {i} has rank {}", c.rank)));
        }
        if !c.gen_score.is_finite() {
            return Err(ServiceError::Malformed(format!("candidate {i} has a non-finite score")));
        }
        if i > 0 && c.gen_score > candidates[i - 1].gen_score {
            return Err(ServiceError::Malformed(format!(
                "scores increase between ranks {} and {i}",
                i - 1
            )));
        }
    }
    Ok(())
}

/// Validates the request and checks one finite score per candidate
/// (positive for perplexity).
pub fn score(backend: &dyn ScoringService, request: &ScoreRequest) -> Result<Vec<f64>, ServiceError> {
    request.validate()?;
    let scores = backend.score(request)?;
    check_scores(request, &scores)?;
    Ok(scores)
}

pub(crate) fn check_scores(request: &ScoreRequest, scores: &[f64]) -> Result<(), ServiceError> {
    if scores.len() != request.candidates.len() {
        return Err(ServiceError::Malformed(format!(
            "{} scores for {} candidates",
            scores.len(),
            request.candidates.len()
        )));
    }
    for (i, s) in scores.iter().enumerate() {
        if !s.is_finite() || (request.metric == Metric::Perplexity && *s <= 0.0) {
            return Err(ServiceError::Malformed(format!(
                "score {i} is invalid for {}: {s}",
                request.metric
            )));
        }
    }
    Ok(())
}

/// Deterministic candidate list for `prompt`.
///
/// Candidate `i` seeds PCG32 with `fnv1a_64(prompt) ^ (seed_salt + i)`, draws a
/// length in `5..=12`, then that many words from a fixed 256-word list.
/// `gen_score` is `-i`.
pub fn stub_generate(prompt: &str, num_return: usize, seed_salt: u64) -> Vec<GenerationCandidate> {
    let base = fnv1a_64(prompt);
    (0..num_return)
        .map(|i| {
            let mut rng = SeededRng::new(base ^ seed_salt.wrapping_add(i as u64));
            let len = rng.inclusive(5, 12);
            let text = (0..len)
                .map(|_| words::WORDS[rng.index(words::WORDS.len())])
                .collect::<Vec<_>>()
                .join(" ");
            GenerationCandidate {
                text,
                gen_score: -(i as f64),
                rank: i,
            }
        })
        .collect()
}

/// In-process generator backed by [`stub_generate`].
#[derive(Debug, Clone, Default)]
pub struct StubGenerator {
    pub seed_salt: u64,
}

impl Generator for StubGenerator {
    fn generate(&self, request: &GenerationRequest) -> Result<Vec<GenerationCandidate>, ServiceError> {
        Ok(stub_generate(
            &request.prompt,
            request.num_return as usize,
            self.seed_salt,
        ))
    }

    fn describe(&self) -> String {
        format!("stub(salt={})", self.seed_salt)
    }
}

/// Scorer that looks each candidate up in a fixed table.
///
/// Candidates missing from the table get `fallback`, or fail the request
/// when no fallback is set.
#[derive(Debug, Clone, Default)]
pub struct TableScorer {
    pub table: HashMap<String, f64>,
    pub fallback: Option<f64>,
}

impl TableScorer {
    pub fn new<I, S>(entries: I) -> Self
    where
        I: IntoIterator<Item = (S, f64)>,
        S: Into<String>,
    {
        TableScorer {
            table: entries.into_iter().map(|(k, v)| (k.into(), v)).collect(),
            fallback: None,
        }
    }

    pub fn with_fallback(mut self, fallback: f64) -> Self {
        self.fallback = Some(fallback);
        self
    }
}

impl ScoringService for TableScorer {
    fn score(&self, request: &ScoreRequest) -> Result<Vec<f64>, ServiceError> {
        request
            .candidates
            .iter()
            .map(|c| {
                self.table
                    .get(c)
                    .copied()
                    .or(self.fallback)
                    .ok_or_else(|| ServiceError::Status {
                        status: 400,
                        body: format!("no recorded score for {c:?}"),
                    })
            })
            .collect()
    }

    fn describe(&self) -> String {
        format!("table({} entries)", self.table.len())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn word_list_has_256_distinct_entries() {
        let mut w: Vec<_> = words::WORDS.to_vec();
        assert_eq!(w.len(), 256);
        w.sort_unstable();
        w.dedup();
        assert_eq!(w.len(), 256);
    }

    #[test]
    fn stub_is_deterministic_and_prefix_stable() {
        let a = stub_generate("user: <mask> system: hi", 20, 0);
        let b = stub_generate("user: <mask> system: hi", 20, 0);
        assert_eq!(a, b);
        assert_eq!(a.len(), 20);
        assert_eq!(
            a.iter().map(|c| c.rank).collect::<Vec<_>>(),
            (0..20).collect::<Vec<_>>()
        );
        let one = stub_generate("user: <mask> system: hi", 1, 0);
        let two = stub_generate("user: <mask> system: hi", 2, 0);
        assert_eq!(one[0], two[0]);
        for c in &a {
            let n = c.text.split(' ').count();
            assert!((5..=12).contains(&n), "{}", c.text);
        }
    }

    #[test]
    fn generate_checks_requests_and_responses() {
        let stub = StubGenerator::default();
        let mut req = GenerationRequest::new("p");
        assert_eq!(generate(&stub, &req).unwrap().len(), 20);
        req.num_return = 30;
        assert!(matches!(generate(&stub, &req), Err(ServiceError::InvalidRequest(_))));
        req.num_return = 0;
        assert!(generate(&stub, &req).is_err());

        let bad = vec![
            GenerationCandidate {
                text: "a".into(),
                gen_score: -1.0,
                rank: 0,
            },
            GenerationCandidate {
                text: "b".into(),
                gen_score: 0.0,
                rank: 1,
            },
        ];
        assert!(matches!(check_candidates(&bad, 5), Err(ServiceError::Malformed(_))));
    }

    #[test]
    fn table_scorer_replays_values() {
        let scorer = TableScorer::new([("a", 0.5), ("b", -0.1)]);
        let req = ScoreRequest::bleurt("a", vec!["a".into(), "b".into()]);
        assert_eq!(score(&scorer, &req).unwrap(), vec![0.5, -0.1]);
        let missing = ScoreRequest::bleurt("a", vec!["zzz".into()]);
        assert!(score(&scorer, &missing).is_err());
        let no_ref = ScoreRequest {
            metric: Metric::Bleurt,
            reference: None,
            candidates: vec!["a".into()],
        };
        assert!(matches!(score(&scorer, &no_ref), Err(ServiceError::InvalidRequest(_))));
    }

    #[test]
    fn retryable_classification() {
        assert!(ServiceError::Transport {
            attempts: 1,
            message: "reset".into()
        }
        .is_retryable());
        assert!(ServiceError::Status {
            status: 503,
            body: String::new()
        }
        .is_retryable());
        assert!(!ServiceError::Status {
            status: 400,
            body: String::new()
        }
        .is_retryable());
        assert!(!ServiceError::Malformed("x".into()).is_retryable());
    }
}
