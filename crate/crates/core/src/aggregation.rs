//! Sentence verdicts to claim submissions.
//!
//! Any SUPPORTS verdict makes the claim SUPPORTS; otherwise any REFUTES makes
//! it REFUTES; otherwise NOT ENOUGH INFO. Only sentences whose verdict matches
//! the claim label are submitted as evidence.

use std::collections::{BTreeMap, HashMap};

use serde::{Deserialize, Serialize};

use crate::claims::SentenceRef;
use crate::entailment::SentenceVerdict;
use crate::labels::{ClaimLabel, EntailmentLabel};

/// A claim prediction in the FEVER submission format.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Submission {
    pub id: u64,
    pub predicted_label: ClaimLabel,
    pub predicted_evidence: Vec<SentenceRef>,
}

/// A classified candidate as stored between the classify and aggregate stages.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassifiedSentence {
    pub page: String,
    pub line: u32,
    pub label: EntailmentLabel,
    pub scores: [f64; 3],
}

impl ClassifiedSentence {
    pub fn new(sentence: &SentenceRef, verdict: &SentenceVerdict) -> Self {
        ClassifiedSentence {
            page: sentence.page.clone(),
            line: sentence.line,
            label: verdict.label,
            scores: verdict.scores,
        }
    }

    pub fn sentence_ref(&self) -> SentenceRef {
        SentenceRef::new(self.page.clone(), self.line)
    }

    pub fn verdict(&self) -> SentenceVerdict {
        SentenceVerdict {
            label: self.label,
            scores: self.scores,
        }
    }
}

/// All classified candidates of one claim; one JSONL line of the classify stage.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassifiedClaim {
    pub id: u64,
    pub classified: Vec<ClassifiedSentence>,
}

/// Claim label from a multiset of sentence labels.
pub fn claim_label(labels: impl IntoIterator<Item = EntailmentLabel>) -> ClaimLabel {
    let mut refuted = false;
    for label in labels {
        match label {
            EntailmentLabel::Supports => return ClaimLabel::Supports,
            EntailmentLabel::Refutes => refuted = true,
            EntailmentLabel::Neutral => {}
        }
    }
    if refuted {
        ClaimLabel::Refutes
    } else {
        ClaimLabel::NotEnoughInfo
    }
}

/// Builds the submission for one claim. Evidence is ordered by descending score
/// for the predicted label, then by sentence address, and cut to `max_evidence`.
pub fn aggregate(
    claim_id: u64,
    verdicts: &[(SentenceRef, SentenceVerdict)],
    max_evidence: Option<usize>,
) -> Submission {
    let predicted_label = claim_label(verdicts.iter().map(|(_, v)| v.label));
    let mut predicted_evidence = Vec::new();
    if predicted_label.is_verifiable() {
        let wanted = EntailmentLabel::from(predicted_label);
        let mut best: HashMap<&SentenceRef, f64> = HashMap::new();
        for (sentence, verdict) in verdicts.iter().filter(|(_, v)| v.label == wanted) {
            let score = verdict.score(wanted);
            best.entry(sentence)
                .and_modify(|s| *s = s.max(score))
                .or_insert(score);
        }
        let mut ranked: Vec<(&SentenceRef, f64)> = best.into_iter().collect();
        ranked.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| a.0.cmp(b.0)));
        if let Some(max) = max_evidence {
            ranked.truncate(max);
        }
        predicted_evidence = ranked.into_iter().map(|(s, _)| s.clone()).collect();
    }
    Submission {
        id: claim_id,
        predicted_label,
        predicted_evidence,
    }
}

/// One submission per claim id in the input, ordered by id. Records sharing an
/// id are merged; a claim with no candidates is NOT ENOUGH INFO.
pub fn aggregate_all(
    classified: impl IntoIterator<Item = ClassifiedClaim>,
    max_evidence: Option<usize>,
) -> Vec<Submission> {
    let mut grouped: BTreeMap<u64, Vec<(SentenceRef, SentenceVerdict)>> = BTreeMap::new();
    for claim in classified {
        grouped.entry(claim.id).or_default().extend(
            claim
                .classified
                .iter()
                .map(|c| (c.sentence_ref(), c.verdict())),
        );
    }
    grouped
        .into_iter()
        .map(|(id, verdicts)| aggregate(id, &verdicts, max_evidence))
        .collect()
}
