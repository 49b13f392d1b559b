//! Sentence-level entailment classifiers.
//!
//! Every classifier maps a (premise, hypothesis) pair to a [`SentenceVerdict`].
//! Three kinds exist: a lexical-overlap stand-in, a gold-evidence oracle for
//! evaluation, and an HTTP client for an external model service.

mod lexical;
mod oracle;
mod remote;

use serde::{Deserialize, Serialize};

pub use lexical::LexicalBaseline;
pub use oracle::OracleClassifier;
pub use remote::{RemoteClassifier, RemoteConfig, MODEL_URL_ENV};

use crate::claims::Claim;
use crate::error::{Error, Result};
use crate::labels::EntailmentLabel;

const SCORE_TOLERANCE: f64 = 1e-6;

/// Distribution over `[SUPPORTS, REFUTES, NEUTRAL]` and its argmax.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SentenceVerdict {
    pub label: EntailmentLabel,
    pub scores: [f64; 3],
}

impl SentenceVerdict {
    /// Validates the distribution and picks the argmax. Ties go to the
    /// earliest of NEUTRAL, REFUTES, SUPPORTS.
    pub fn from_scores(scores: [f64; 3]) -> Result<Self> {
        if scores.iter().any(|s| !s.is_finite() || *s < 0.0) {
            return Err(Error::Classifier(format!("invalid scores {scores:?}")));
        }
        let sum: f64 = scores.iter().sum();
        if (sum - 1.0).abs() > SCORE_TOLERANCE {
            return Err(Error::Classifier(format!(
                "scores {scores:?} sum to {sum}, not 1"
            )));
        }
        Ok(SentenceVerdict {
            label: argmax(&scores),
            scores,
        })
    }

    /// 0.8 on `label`, 0.1 on each of the others.
    pub fn peaked(label: EntailmentLabel) -> Self {
        let mut scores = [0.1; 3];
        scores[label.index()] = 0.8;
        SentenceVerdict { label, scores }
    }

    pub fn one_hot(label: EntailmentLabel) -> Self {
        let mut scores = [0.0; 3];
        scores[label.index()] = 1.0;
        SentenceVerdict { label, scores }
    }

    /// Stand-in for a pair the classifier could not score.
    pub fn failed() -> Self {
        Self::one_hot(EntailmentLabel::Neutral)
    }

    pub fn score(&self, label: EntailmentLabel) -> f64 {
        self.scores[label.index()]
    }
}

fn argmax(scores: &[f64; 3]) -> EntailmentLabel {
    let mut best = EntailmentLabel::Neutral;
    for label in [EntailmentLabel::Refutes, EntailmentLabel::Supports] {
        if scores[label.index()] > scores[best.index()] {
            best = label;
        }
    }
    best
}

/// One pair to classify. The sentence address is only read by the oracle.
#[derive(Debug, Clone, Copy)]
pub struct ClassifyItem<'a> {
    pub claim_id: u64,
    pub page: &'a str,
    pub line: u32,
    pub premise: &'a str,
    pub hypothesis: &'a str,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct BatchOutcome {
    /// One verdict per input item, in input order.
    pub verdicts: Vec<SentenceVerdict>,
    /// Items that could not be classified and were recorded as NEUTRAL.
    pub failed: usize,
    /// Wire requests issued, including retries. Zero for local classifiers.
    pub requests: usize,
}

pub trait Classifier: Send + Sync {
    fn classify_batch(&self, items: &[ClassifyItem<'_>]) -> Result<BatchOutcome>;

    fn classify(&self, item: &ClassifyItem<'_>) -> Result<SentenceVerdict> {
        let outcome = self.classify_batch(std::slice::from_ref(item))?;
        Ok(outcome.verdicts[0])
    }
}

pub(crate) fn check_items(items: &[ClassifyItem<'_>]) -> Result<()> {
    match items.iter().find(|i| i.hypothesis.trim().is_empty()) {
        Some(item) => Err(Error::Classifier(format!(
            "empty hypothesis for claim {}",
            item.claim_id
        ))),
        None => Ok(()),
    }
}

/// Classifier selection as it appears in pipeline configuration.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ClassifierKind {
    LexicalBaseline,
    /// Labels from gold evidence; needs labeled claims.
    Oracle,
    Remote(RemoteConfig),
}

impl Default for ClassifierKind {
    fn default() -> Self {
        ClassifierKind::LexicalBaseline
    }
}

impl ClassifierKind {
    pub fn instantiate(&self, gold: Option<&[Claim]>) -> Result<Box<dyn Classifier>> {
        Ok(match self {
            ClassifierKind::LexicalBaseline => Box::new(LexicalBaseline),
            ClassifierKind::Oracle => {
                let claims = gold.ok_or_else(|| {
                    Error::Config("the oracle classifier needs gold claims".into())
                })?;
                if claims.iter().all(|c| c.gold_label.is_none()) {
                    return Err(Error::Config(
                        "the oracle classifier needs claims with gold labels".into(),
                    ));
                }
                Box::new(OracleClassifier::new(claims))
            }
            ClassifierKind::Remote(config) => Box::new(RemoteClassifier::new(config.clone())?),
        })
    }
}
