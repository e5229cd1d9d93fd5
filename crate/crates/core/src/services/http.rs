//! Blocking HTTP+JSON clients for the `/generate` and `/score` endpoints.
//!
//! ```text
//! POST /generate {"prompt","num_beams","num_return","max_new_tokens"}
//!   -> 200 {"candidates":[{"text","score"}]}
//! POST /score {"metric":"bleurt"|"perplexity","reference"?,"candidates":[..]}
//!   -> 200 {"scores":[..]}
//! 400 malformed request, 422 unsupported metric, 5xx server error
//! ```
//!
//! Transport failures and 5xx responses are retried with exponential backoff;
//! everything else fails immediately.

use std::thread;
use std::time::Duration;

use serde::{Deserialize, Serialize};
use ureq::Agent;

use super::{GenerationCandidate, GenerationRequest, Generator, ScoreRequest, ScoringService, ServiceError};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RetryPolicy {
    pub attempts: u32,
    pub initial_backoff: Duration,
}

impl Default for RetryPolicy {
    fn default() -> Self {
        RetryPolicy {
            attempts: 3,
            initial_backoff: Duration::from_millis(250),
        }
    }
}

#[derive(Debug, Clone)]
struct JsonClient {
    agent: Agent,
    base_url: String,
    retry: RetryPolicy,
}

impl JsonClient {
    fn new(base_url: &str, retry: RetryPolicy, timeout: Duration) -> Self {
        let agent: Agent = Agent::config_builder()
            .http_status_as_error(false)
            .timeout_global(Some(timeout))
            .build()
            .into();
        JsonClient {
            agent,
            base_url: base_url.trim_end_matches('/').to_string(),
            retry,
        }
    }

    fn post(&self, path: &str, body: &str) -> Result<String, ServiceError> {
        let url = format!("{}{path}", self.base_url);
        let mut backoff = self.retry.initial_backoff;
        let attempts = self.retry.attempts.max(1);
        let mut attempt = 1;
        loop {
            match self.post_once(&url, body, attempt) {
                Err(err) if err.is_retryable() && attempt < attempts => {
                    log::warn!("POST {url} attempt {attempt}/{attempts} failed: {err}; retrying");
                    thread::sleep(backoff);
                    backoff *= 2;
                    attempt += 1;
                }
                other => return other,
            }
        }
    }

    fn post_once(&self, url: &str, body: &str, attempt: u32) -> Result<String, ServiceError> {
        let transport = |e: ureq::Error| ServiceError::Transport {
            attempts: attempt,
            message: e.to_string(),
        };
        let mut response = self
            .agent
            .post(url)
            .header("content-type", "application/json")
            .send(body)
            .map_err(transport)?;
        let status = response.status().as_u16();
        let text = response.body_mut().read_to_string().map_err(transport)?;
        match status {
            200..=299 => Ok(text),
            422 => Err(ServiceError::UnsupportedMetric(text)),
            _ => Err(ServiceError::Status { status, body: text }),
        }
    }
}

#[derive(Deserialize)]
struct GenerateResponse {
    candidates: Vec<WireCandidate>,
}

#[derive(Serialize, Deserialize)]
struct WireCandidate {
    text: String,
    score: f64,
}

#[derive(Deserialize)]
struct ScoreResponse {
    scores: Vec<f64>,
}

/// Client for a remote `/generate` endpoint.
#[derive(Debug, Clone)]
pub struct HttpGenerator {
    client: JsonClient,
}

impl HttpGenerator {
    pub fn new(base_url: &str) -> Self {
        Self::with_retry(base_url, RetryPolicy::default())
    }

    pub fn with_retry(base_url: &str, retry: RetryPolicy) -> Self {
        HttpGenerator {
            client: JsonClient::new(base_url, retry, Duration::from_secs(300)),
        }
    }
}

impl Generator for HttpGenerator {
    fn generate(&self, request: &GenerationRequest) -> Result<Vec<GenerationCandidate>, ServiceError> {
        let body = serde_json::to_string(request).expect("request serializes");
        let text = self.client.post("/generate", &body)?;
        let parsed: GenerateResponse =
            serde_json::from_str(&text).map_err(|e| ServiceError::Malformed(e.to_string()))?;
        Ok(parsed
            .candidates
            .into_iter()
            .enumerate()
            .map(|(rank, c)| GenerationCandidate {
                text: c.text,
                gen_score: c.score,
                rank,
            })
            .collect())
    }

    fn describe(&self) -> String {
        format!("http({})", self.client.base_url)
    }
}

/// Client for a remote `/score` endpoint.
#[derive(Debug, Clone)]
pub struct HttpScorer {
    client: JsonClient,
}

impl HttpScorer {
    pub fn new(base_url: &str) -> Self {
        Self::with_retry(base_url, RetryPolicy::default())
    }

    pub fn with_retry(base_url: &str, retry: RetryPolicy) -> Self {
        HttpScorer {
            client: JsonClient::new(base_url, retry, Duration::from_secs(300)),
        }
    }
}

impl ScoringService for HttpScorer {
    fn score(&self, request: &ScoreRequest) -> Result<Vec<f64>, ServiceError> {
        let body = serde_json::to_string(request).expect("request serializes");
        let text = self.client.post("/score", &body)?;
        let parsed: ScoreResponse = serde_json::from_str(&text).map_err(|e| ServiceError::Malformed(e.to_string()))?;
        Ok(parsed.scores)
    }

    fn describe(&self) -> String {
        format!("http({})", self.client.base_url)
    }
}
