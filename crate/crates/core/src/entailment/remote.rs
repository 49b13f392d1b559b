//! HTTP client for an external entailment model.
//!
//! `POST {url}/classify` with `{"pairs": [{"premise", "hypothesis"}, ...]}`;
//! the response is `{"verdicts": [{"label", "scores": [pS, pR, pN]}, ...]}` in
//! request order. Transport errors and non-200 statuses are retried with
//! exponential backoff. A batch that still fails is recorded as NEUTRAL.

use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;
use std::thread;
use std::time::Duration;

use serde::{Deserialize, Serialize};

use super::{check_items, BatchOutcome, Classifier, ClassifyItem, SentenceVerdict};
use crate::error::{Error, Result};
use crate::labels::EntailmentLabel;

/// Overrides [`RemoteConfig::url`] when set.
pub const MODEL_URL_ENV: &str = "FEVERPIPE_MODEL_URL";

fn default_batch_size() -> usize {
    32
}
fn default_timeout_ms() -> u64 {
    30_000
}
fn default_max_retries() -> u32 {
    3
}
fn default_backoff_ms() -> u64 {
    200
}
fn default_max_in_flight() -> usize {
    2
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RemoteConfig {
    pub url: String,
    #[serde(default = "default_batch_size")]
    pub batch_size: usize,
    #[serde(default = "default_timeout_ms")]
    pub timeout_ms: u64,
    #[serde(default = "default_max_retries")]
    pub max_retries: u32,
    #[serde(default = "default_backoff_ms")]
    pub backoff_ms: u64,
    #[serde(default = "default_max_in_flight")]
    pub max_in_flight: usize,
}

impl RemoteConfig {
    pub fn new(url: impl Into<String>) -> Self {
        RemoteConfig {
            url: url.into(),
            batch_size: default_batch_size(),
            timeout_ms: default_timeout_ms(),
            max_retries: default_max_retries(),
            backoff_ms: default_backoff_ms(),
            max_in_flight: default_max_in_flight(),
        }
    }

    /// The endpoint actually contacted: the environment override if present,
    /// with `/classify` appended unless already there.
    pub fn endpoint(&self) -> String {
        let base = std::env::var(MODEL_URL_ENV)
            .ok()
            .filter(|u| !u.trim().is_empty())
            .unwrap_or_else(|| self.url.clone());
        let base = base.trim().trim_end_matches('/');
        if base.ends_with("/classify") {
            base.to_string()
        } else {
            format!("{base}/classify")
        }
    }
}

#[derive(Serialize)]
struct WirePair<'a> {
    premise: &'a str,
    hypothesis: &'a str,
}

#[derive(Serialize)]
struct WireRequest<'a> {
    pairs: Vec<WirePair<'a>>,
}

#[derive(Deserialize)]
struct WireVerdict {
    label: EntailmentLabel,
    scores: [f64; 3],
}

#[derive(Deserialize)]
struct WireResponse {
    verdicts: Vec<WireVerdict>,
}

#[derive(Debug)]
enum Failure {
    /// Connection problems, timeouts and non-200 statuses.
    Retryable(String),
    /// A 200 response that breaks the protocol.
    Protocol(String),
}

pub struct RemoteClassifier {
    config: RemoteConfig,
    endpoint: String,
    client: reqwest::blocking::Client,
}

impl RemoteClassifier {
    pub fn new(config: RemoteConfig) -> Result<Self> {
        if config.batch_size == 0 || config.max_in_flight == 0 {
            return Err(Error::Config(
                "remote batch_size and max_in_flight must be at least 1".into(),
            ));
        }
        let client = reqwest::blocking::Client::builder()
            .timeout(Duration::from_millis(config.timeout_ms))
            .build()
            .map_err(|e| Error::Classifier(format!("cannot build HTTP client: {e}")))?;
        Ok(RemoteClassifier {
            endpoint: config.endpoint(),
            config,
            client,
        })
    }

    pub fn endpoint(&self) -> &str {
        &self.endpoint
    }

    fn send_once(&self, chunk: &[ClassifyItem<'_>]) -> std::result::Result<Vec<SentenceVerdict>, Failure> {
        let body = WireRequest {
            pairs: chunk
                .iter()
                .map(|i| WirePair {
                    premise: i.premise,
                    hypothesis: i.hypothesis,
                })
                .collect(),
        };
        let response = self
            .client
            .post(&self.endpoint)
            .json(&body)
            .send()
            .map_err(|e| Failure::Retryable(e.to_string()))?;
        let status = response.status();
        if status != reqwest::StatusCode::OK {
            return Err(Failure::Retryable(format!("HTTP {status}")));
        }
        let bytes = response
            .bytes()
            .map_err(|e| Failure::Retryable(e.to_string()))?;
        let parsed: WireResponse = serde_json::from_slice(&bytes)
            .map_err(|e| Failure::Protocol(format!("undecodable response: {e}")))?;
        if parsed.verdicts.len() != chunk.len() {
            return Err(Failure::Protocol(format!(
                "sent {} pairs, got {} verdicts",
                chunk.len(),
                parsed.verdicts.len()
            )));
        }
        parsed
            .verdicts
            .into_iter()
            .map(|w| {
                let v = SentenceVerdict::from_scores(w.scores)
                    .map_err(|e| Failure::Protocol(e.to_string()))?;
                // Accept the service's label when it is one of the maxima.
                if w.label != v.label && w.scores[w.label.index()] < w.scores[v.label.index()] {
                    return Err(Failure::Protocol(format!(
                        "label {} is not the argmax of {:?}",
                        w.label, w.scores
                    )));
                }
                Ok(SentenceVerdict {
                    label: w.label,
                    scores: w.scores,
                })
            })
            .collect()
    }

    fn send_with_retries(
        &self,
        chunk: &[ClassifyItem<'_>],
        requests: &AtomicUsize,
    ) -> std::result::Result<Vec<SentenceVerdict>, Failure> {
        let mut attempt = 0;
        loop {
            requests.fetch_add(1, Ordering::Relaxed);
            match self.send_once(chunk) {
                Ok(v) => return Ok(v),
                Err(Failure::Retryable(msg)) if attempt < self.config.max_retries => {
                    let delay = self.config.backoff_ms.saturating_mul(1 << attempt.min(16));
                    log::debug!("classify request failed ({msg}); retrying in {delay} ms");
                    thread::sleep(Duration::from_millis(delay));
                    attempt += 1;
                }
                Err(e) => return Err(e),
            }
        }
    }
}

impl Classifier for RemoteClassifier {
    fn classify_batch(&self, items: &[ClassifyItem<'_>]) -> Result<BatchOutcome> {
        check_items(items)?;
        let chunks: Vec<&[ClassifyItem<'_>]> = items.chunks(self.config.batch_size).collect();
        let results: Mutex<Vec<Option<std::result::Result<Vec<SentenceVerdict>, Failure>>>> =
            Mutex::new((0..chunks.len()).map(|_| None).collect());
        let next = AtomicUsize::new(0);
        let requests = AtomicUsize::new(0);

        let workers = self.config.max_in_flight.min(chunks.len());
        thread::scope(|scope| {
            for _ in 0..workers {
                scope.spawn(|| loop {
                    let i = next.fetch_add(1, Ordering::Relaxed);
                    let Some(chunk) = chunks.get(i) else { break };
                    let result = self.send_with_retries(chunk, &requests);
                    results.lock().expect("result slots")[i] = Some(result);
                });
            }
        });

        let mut outcome = BatchOutcome {
            verdicts: Vec::with_capacity(items.len()),
            failed: 0,
            requests: requests.into_inner(),
        };
        for (chunk, result) in chunks.iter().zip(results.into_inner().expect("result slots")) {
            match result.expect("every chunk is processed") {
                Ok(verdicts) => outcome.verdicts.extend(verdicts),
                Err(Failure::Retryable(msg)) | Err(Failure::Protocol(msg)) => {
                    log::warn!(
                        "{} pairs recorded as NEUTRAL after classify failure: {msg}",
                        chunk.len()
                    );
                    outcome.failed += chunk.len();
                    outcome
                        .verdicts
                        .extend(std::iter::repeat_n(SentenceVerdict::failed(), chunk.len()));
                }
            }
        }
        Ok(outcome)
    }
}
