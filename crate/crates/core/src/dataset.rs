//! Entailment training sets built from claims and their retrieved sentences.
//!
//! * One: each retrieved sentence is its own example.
//! * Five: the retrieved sentences of a claim are concatenated into one premise,
//!   labeled by whether a gold sentence was retrieved.
//! * Five oracle: as Five, but labeled with the claim's gold label.
//!
//! Verifiable claims with any multi-sentence gold group are dropped from all three.

use std::collections::{BTreeMap, HashMap};

use serde::{Deserialize, Serialize};

use crate::claims::{Claim, SentenceRef};
use crate::corpus::CorpusHandle;
use crate::error::{Error, Result};
use crate::labels::EntailmentLabel;
use crate::retrieval::{resolve_candidates, EvidenceCandidate, RetrievalRecord};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum VariantKind {
    One,
    Five,
    FiveOracle,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct DatasetVariant {
    pub kind: VariantKind,
    pub titled: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Provenance {
    pub claim_id: u64,
    pub evidence: Vec<SentenceRef>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EntailmentExample {
    pub premise: String,
    pub hypothesis: String,
    pub label: EntailmentLabel,
    pub provenance: Provenance,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct BuildReport {
    pub claims_seen: usize,
    pub claims_dropped_multi_sentence: usize,
    pub claims_unlabeled: usize,
    pub missing_candidates: usize,
}

#[derive(Debug, Clone)]
pub struct Dataset {
    pub examples: Vec<EntailmentExample>,
    pub report: BuildReport,
}

/// Whether a claim is excluded because some gold group needs several sentences.
pub fn is_dropped(claim: &Claim) -> bool {
    claim.is_verifiable() && claim.has_multi_sentence_group()
}

fn premise_of(candidate: &EvidenceCandidate, titled: bool) -> &str {
    if titled {
        &candidate.titled_premise
    } else {
        &candidate.sentence
    }
}

fn sentence_label(claim: &Claim, sentence: &SentenceRef) -> EntailmentLabel {
    match claim.gold_label {
        Some(label) if label.is_verifiable() && claim.in_singleton_group(sentence) => label.into(),
        _ => EntailmentLabel::Neutral,
    }
}

/// Claims paired with resolved candidates, dropping claims per the build rules.
fn retained<'a>(
    claims: &'a [Claim],
    retrievals: &[RetrievalRecord],
    corpus: &CorpusHandle,
    report: &mut BuildReport,
) -> Vec<(&'a Claim, Vec<EvidenceCandidate>)> {
    let by_id: HashMap<u64, &RetrievalRecord> = retrievals.iter().map(|r| (r.id, r)).collect();
    let mut out = Vec::new();
    for claim in claims {
        report.claims_seen += 1;
        if claim.gold_label.is_none() {
            report.claims_unlabeled += 1;
            continue;
        }
        if is_dropped(claim) {
            report.claims_dropped_multi_sentence += 1;
            continue;
        }
        let candidates = match by_id.get(&claim.id) {
            Some(record) => {
                let (cands, missing) = resolve_candidates(record, corpus);
                report.missing_candidates += missing;
                cands
            }
            None => Vec::new(),
        };
        out.push((claim, candidates));
    }
    if report.missing_candidates > 0 {
        log::warn!(
            "{} candidates reference pages or lines absent from the corpus",
            report.missing_candidates
        );
    }
    out
}

/// One example per retained (claim, candidate) pair, sorted by (claim, page, line).
pub fn build_one(
    claims: &[Claim],
    retrievals: &[RetrievalRecord],
    corpus: &CorpusHandle,
    titled: bool,
) -> Dataset {
    let mut report = BuildReport::default();
    let mut examples: Vec<EntailmentExample> = retained(claims, retrievals, corpus, &mut report)
        .into_iter()
        .flat_map(|(claim, candidates)| {
            candidates.into_iter().map(move |cand| {
                let sref = cand.sentence_ref();
                EntailmentExample {
                    premise: premise_of(&cand, titled).to_string(),
                    hypothesis: claim.text.clone(),
                    label: sentence_label(claim, &sref),
                    provenance: Provenance {
                        claim_id: claim.id,
                        evidence: vec![sref],
                    },
                }
            })
        })
        .collect();
    examples.sort_by(|a, b| {
        (a.provenance.claim_id, &a.provenance.evidence)
            .cmp(&(b.provenance.claim_id, &b.provenance.evidence))
    });
    examples.dedup_by(|a, b| a.provenance == b.provenance);
    Dataset { examples, report }
}

/// One example per retained claim; premises concatenated in retrieval order.
pub fn build_five(
    claims: &[Claim],
    retrievals: &[RetrievalRecord],
    corpus: &CorpusHandle,
    oracle: bool,
    titled: bool,
) -> Dataset {
    let mut report = BuildReport::default();
    let mut examples: Vec<EntailmentExample> = retained(claims, retrievals, corpus, &mut report)
        .into_iter()
        .map(|(claim, candidates)| {
            let gold = claim.gold_label.expect("retained claims are labeled");
            let label = if oracle {
                gold.into()
            } else if gold.is_verifiable()
                && candidates
                    .iter()
                    .any(|c| claim.in_singleton_group(&c.sentence_ref()))
            {
                gold.into()
            } else {
                EntailmentLabel::Neutral
            };
            EntailmentExample {
                premise: candidates
                    .iter()
                    .map(|c| premise_of(c, titled))
                    .collect::<Vec<_>>()
                    .join(" "),
                hypothesis: claim.text.clone(),
                label,
                provenance: Provenance {
                    claim_id: claim.id,
                    evidence: candidates.iter().map(EvidenceCandidate::sentence_ref).collect(),
                },
            }
        })
        .collect();
    examples.sort_by_key(|e| e.provenance.claim_id);
    Dataset { examples, report }
}

pub fn build(
    variant: DatasetVariant,
    claims: &[Claim],
    retrievals: &[RetrievalRecord],
    corpus: &CorpusHandle,
) -> Dataset {
    match variant.kind {
        VariantKind::One => build_one(claims, retrievals, corpus, variant.titled),
        VariantKind::Five => build_five(claims, retrievals, corpus, false, variant.titled),
        VariantKind::FiveOracle => build_five(claims, retrievals, corpus, true, variant.titled),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ClassStats {
    pub total: usize,
    pub counts: BTreeMap<EntailmentLabel, usize>,
    pub majority_label: EntailmentLabel,
    pub majority_accuracy: f64,
    /// `total / (classes present * count)`; the example-weighted mean is 1.
    pub weights: BTreeMap<EntailmentLabel, f64>,
}

pub fn class_stats(examples: &[EntailmentExample]) -> Result<ClassStats> {
    class_stats_from_labels(examples.iter().map(|e| e.label))
}

pub fn class_stats_from_labels(
    labels: impl IntoIterator<Item = EntailmentLabel>,
) -> Result<ClassStats> {
    let mut counts: BTreeMap<EntailmentLabel, usize> = BTreeMap::new();
    for label in labels {
        *counts.entry(label).or_insert(0) += 1;
    }
    let total: usize = counts.values().sum();
    if total == 0 {
        return Err(Error::Invalid("class statistics need at least one example".into()));
    }
    let (&majority_label, &majority_count) = counts
        .iter()
        .max_by(|a, b| a.1.cmp(b.1).then(b.0.cmp(a.0)))
        .expect("non-empty");
    let classes = counts.len() as f64;
    let weights = counts
        .iter()
        .map(|(&l, &c)| (l, total as f64 / (classes * c as f64)))
        .collect();
    Ok(ClassStats {
        total,
        counts,
        majority_label,
        majority_accuracy: majority_count as f64 / total as f64,
        weights,
    })
}
