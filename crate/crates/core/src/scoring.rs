//! Evaluation: FEVER score, label accuracy, evidence precision/recall/F1,
//! Cohen's kappa and the evidence retrieval rate.

use std::collections::{BTreeMap, HashMap, HashSet};

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::aggregation::Submission;
use crate::claims::{Claim, SentenceRef};
use crate::error::{Error, Result};
use crate::labels::{ClaimLabel, EntailmentLabel};
use crate::retrieval::RetrievalRecord;

/// Square table of counts indexed `[predicted][reference]`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ContingencyTable {
    counts: Vec<Vec<u64>>,
}

impl ContingencyTable {
    pub fn new(classes: usize) -> Self {
        ContingencyTable {
            counts: vec![vec![0; classes]; classes],
        }
    }

    pub fn from_rows(rows: Vec<Vec<u64>>) -> Result<Self> {
        let n = rows.len();
        if rows.iter().any(|r| r.len() != n) {
            return Err(Error::Invalid("contingency table must be square".into()));
        }
        Ok(ContingencyTable { counts: rows })
    }

    pub fn classes(&self) -> usize {
        self.counts.len()
    }

    pub fn add(&mut self, predicted: usize, reference: usize) {
        self.counts[predicted][reference] += 1;
    }

    pub fn get(&self, predicted: usize, reference: usize) -> u64 {
        self.counts[predicted][reference]
    }

    pub fn rows(&self) -> &[Vec<u64>] {
        &self.counts
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().flatten().sum()
    }
}

/// Cohen's kappa, or `Degenerate` when chance agreement is 1.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Kappa {
    Value(f64),
    Degenerate,
}

impl Kappa {
    pub fn value(self) -> Option<f64> {
        match self {
            Kappa::Value(v) => Some(v),
            Kappa::Degenerate => None,
        }
    }
}

impl Serialize for Kappa {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            Kappa::Value(v) => s.serialize_f64(*v),
            Kappa::Degenerate => s.serialize_str("degenerate"),
        }
    }
}

impl<'de> Deserialize<'de> for Kappa {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Repr {
            Value(f64),
            Marker(String),
        }
        match Repr::deserialize(d)? {
            Repr::Value(v) => Ok(Kappa::Value(v)),
            Repr::Marker(m) if m == "degenerate" => Ok(Kappa::Degenerate),
            Repr::Marker(m) => Err(serde::de::Error::custom(format!("bad kappa `{m}`"))),
        }
    }
}

/// `(p_o - p_e) / (1 - p_e)` with `p_o` the diagonal mass and `p_e` the
/// agreement expected from the marginals.
pub fn cohens_kappa(table: &ContingencyTable) -> Result<Kappa> {
    let n = table.classes();
    let total = table.total();
    if total == 0 {
        return Err(Error::Scoring("kappa of an empty table".into()));
    }
    let trace: u64 = (0..n).map(|i| table.get(i, i)).sum();
    let row = |i: usize| table.rows()[i].iter().sum::<u64>() as u128;
    let col = |j: usize| (0..n).map(|i| table.get(i, j)).sum::<u64>() as u128;
    let chance: u128 = (0..n).map(|c| row(c) * col(c)).sum();
    let total_sq = (total as u128) * (total as u128);
    // Decided on integers so a single shared class is caught exactly.
    if chance == total_sq {
        return Ok(Kappa::Degenerate);
    }
    let p_o = trace as f64 / total as f64;
    let p_e = chance as f64 / total_sq as f64;
    Ok(Kappa::Value((p_o - p_e) / (1.0 - p_e)))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SupportMetrics {
    pub accuracy: f64,
    pub kappa: Kappa,
}

/// Accuracy and kappa of aligned sentence-label lists.
pub fn support_metrics(
    predicted: &[EntailmentLabel],
    gold: &[EntailmentLabel],
) -> Result<SupportMetrics> {
    if predicted.len() != gold.len() {
        return Err(Error::Scoring(format!(
            "{} predictions for {} gold labels",
            predicted.len(),
            gold.len()
        )));
    }
    let mut table = ContingencyTable::new(3);
    for (p, g) in predicted.iter().zip(gold) {
        table.add(p.index(), g.index());
    }
    let kappa = cohens_kappa(&table)?;
    let hits = predicted.iter().zip(gold).filter(|(p, g)| p == g).count();
    Ok(SupportMetrics {
        accuracy: hits as f64 / gold.len() as f64,
        kappa,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreReport {
    pub fever_score: f64,
    pub label_accuracy: f64,
    pub evidence_precision: f64,
    pub evidence_recall: f64,
    pub evidence_f1: f64,
    pub label_kappa: Kappa,
    /// Labels in order SUPPORTS, REFUTES, NOT ENOUGH INFO.
    pub confusion: ContingencyTable,
    pub claims: usize,
    pub verifiable_claims: usize,
    pub missing_submissions: usize,
}

fn index_submissions<'a>(
    submissions: &'a [Submission],
    gold_ids: &HashSet<u64>,
) -> Result<HashMap<u64, &'a Submission>> {
    let mut by_id = HashMap::with_capacity(submissions.len());
    for sub in submissions {
        if !gold_ids.contains(&sub.id) {
            return Err(Error::Scoring(format!("submission for unknown claim {}", sub.id)));
        }
        if by_id.insert(sub.id, sub).is_some() {
            return Err(Error::Scoring(format!("duplicate submission for claim {}", sub.id)));
        }
        let unique: HashSet<&SentenceRef> = sub.predicted_evidence.iter().collect();
        if unique.len() != sub.predicted_evidence.len() {
            return Err(Error::Scoring(format!(
                "claim {} submits the same sentence twice",
                sub.id
            )));
        }
    }
    Ok(by_id)
}

/// Scores submissions against gold claims. A claim without a submission
/// counts as NOT ENOUGH INFO with no evidence.
///
/// A claim earns FEVER credit when its label is right and, if verifiable, some
/// gold group is contained in the submitted evidence. Precision and recall are
/// macro-averaged over verifiable gold claims; an empty evidence list has
/// precision 1.
pub fn fever_score(submissions: &[Submission], gold: &[Claim]) -> Result<ScoreReport> {
    if gold.is_empty() {
        return Err(Error::Scoring("no gold claims".into()));
    }
    let gold_ids: HashSet<u64> = gold.iter().map(|c| c.id).collect();
    if gold_ids.len() != gold.len() {
        return Err(Error::Scoring("duplicate gold claim ids".into()));
    }
    let by_id = index_submissions(submissions, &gold_ids)?;

    let mut confusion = ContingencyTable::new(3);
    let (mut strict, mut label_hits) = (0usize, 0usize);
    let (mut precision_sum, mut recall_sum, mut verifiable) = (0.0, 0.0, 0usize);
    let mut missing = 0;
    let empty: Vec<SentenceRef> = Vec::new();

    for claim in gold {
        let gold_label = claim
            .gold_label
            .ok_or_else(|| Error::Scoring(format!("gold claim {} has no label", claim.id)))?;
        let (predicted, evidence) = match by_id.get(&claim.id) {
            Some(sub) => (sub.predicted_label, &sub.predicted_evidence),
            None => {
                missing += 1;
                (ClaimLabel::NotEnoughInfo, &empty)
            }
        };
        confusion.add(predicted.index(), gold_label.index());
        let submitted: HashSet<&SentenceRef> = evidence.iter().collect();
        let covered = claim
            .evidence_groups
            .iter()
            .any(|g| g.iter().all(|s| submitted.contains(s)));

        if predicted == gold_label {
            label_hits += 1;
            if !gold_label.is_verifiable() || covered {
                strict += 1;
            }
        }
        if gold_label.is_verifiable() {
            verifiable += 1;
            precision_sum += if evidence.is_empty() {
                1.0
            } else {
                let hits = evidence.iter().filter(|s| claim.in_any_group(s)).count();
                hits as f64 / evidence.len() as f64
            };
            if covered {
                recall_sum += 1.0;
            }
        }
    }

    let n = gold.len() as f64;
    let (precision, recall) = if verifiable == 0 {
        (0.0, 0.0)
    } else {
        (precision_sum / verifiable as f64, recall_sum / verifiable as f64)
    };
    let f1 = if precision + recall > 0.0 {
        2.0 * precision * recall / (precision + recall)
    } else {
        0.0
    };
    Ok(ScoreReport {
        fever_score: strict as f64 / n,
        label_accuracy: label_hits as f64 / n,
        evidence_precision: precision,
        evidence_recall: recall,
        evidence_f1: f1,
        label_kappa: cohens_kappa(&confusion)?,
        confusion,
        claims: gold.len(),
        verifiable_claims: verifiable,
        missing_submissions: missing,
    })
}

/// Which verifiable claims the retrieval rate leaves out.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SkipRule {
    /// Skip claims with no single-sentence gold group.
    #[default]
    NoSingleton,
    /// Skip claims with any multi-sentence gold group.
    AnyMulti,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RetrievalRate {
    pub counted: usize,
    pub successes: usize,
    pub skipped: usize,
    /// `successes / counted`; 1 when nothing is counted.
    pub rate: f64,
}

/// Fraction of eligible claims that are NOT ENOUGH INFO or had a whole
/// single-sentence gold group among their retrieved candidates.
pub fn retrieval_rate(
    gold: &[Claim],
    retrievals: &[RetrievalRecord],
    skip_rule: SkipRule,
) -> RetrievalRate {
    let retrieved: HashMap<u64, HashSet<&SentenceRef>> = retrievals
        .iter()
        .map(|r| (r.id, r.candidates.iter().collect()))
        .collect();
    let none = HashSet::new();
    let (mut counted, mut successes, mut skipped) = (0, 0, 0);
    for claim in gold {
        if claim.gold_label.is_none() {
            skipped += 1;
            continue;
        }
        let verifiable = claim.is_verifiable();
        let skip = verifiable
            && match skip_rule {
                SkipRule::NoSingleton => !claim.has_singleton_group(),
                SkipRule::AnyMulti => claim.has_multi_sentence_group(),
            };
        if skip {
            skipped += 1;
            continue;
        }
        counted += 1;
        let got = retrieved.get(&claim.id).unwrap_or(&none);
        if !verifiable || claim.singleton_sentences().any(|s| got.contains(s)) {
            successes += 1;
        }
    }
    RetrievalRate {
        counted,
        successes,
        skipped,
        rate: if counted == 0 {
            1.0
        } else {
            successes as f64 / counted as f64
        },
    }
}

/// Per-label counts of a submission file, for quick inspection.
pub fn label_distribution(submissions: &[Submission]) -> BTreeMap<ClaimLabel, usize> {
    let mut out = BTreeMap::new();
    for s in submissions {
        *out.entry(s.predicted_label).or_insert(0) += 1;
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::BTreeSet;

    fn table(rows: &[&[u64]]) -> ContingencyTable {
        ContingencyTable::from_rows(rows.iter().map(|r| r.to_vec()).collect()).unwrap()
    }

    #[test]
    fn kappa_hand_values() {
        assert_eq!(
            cohens_kappa(&table(&[&[10, 0, 0], &[0, 10, 0], &[0, 0, 10]])).unwrap(),
            Kappa::Value(1.0)
        );
        // p_o = 35/50 = 0.7; p_e = (25*30 + 25*20) / 2500 = 0.5
        let k = cohens_kappa(&table(&[&[20, 5], &[10, 15]])).unwrap().value().unwrap();
        assert!((k - 0.4).abs() < 1e-9);
        // outer product of (1,2,3) and (2,1,1)
        let k = cohens_kappa(&table(&[&[2, 1, 1], &[4, 2, 2], &[6, 3, 3]]))
            .unwrap()
            .value()
            .unwrap();
        assert!(k.abs() < 1e-9);
    }

    #[test]
    fn kappa_degenerate_and_empty() {
        assert_eq!(cohens_kappa(&table(&[&[7, 0], &[0, 0]])).unwrap(), Kappa::Degenerate);
        assert!(cohens_kappa(&ContingencyTable::new(3)).is_err());
        assert_eq!(serde_json::to_string(&Kappa::Degenerate).unwrap(), "\"degenerate\"");
    }

    #[test]
    fn support_metrics_majority_guess() {
        use EntailmentLabel::*;
        let gold: Vec<_> = std::iter::repeat_n(Neutral, 93)
            .chain(std::iter::repeat_n(Supports, 4))
            .chain(std::iter::repeat_n(Refutes, 3))
            .collect();
        let pred = vec![Neutral; 100];
        let m = support_metrics(&pred, &gold).unwrap();
        assert!((m.accuracy - 0.93).abs() < 1e-12);
        assert!(m.kappa.value().unwrap().abs() < 1e-12);
        let m = support_metrics(&gold, &gold).unwrap();
        assert_eq!(m.accuracy, 1.0);
        assert_eq!(m.kappa, Kappa::Value(1.0));
        assert!(support_metrics(&pred[..3], &gold).is_err());
    }

    fn claim(id: u64, label: ClaimLabel, groups: &[&[(&str, u32)]]) -> Claim {
        Claim {
            id,
            text: format!("claim {id}"),
            gold_label: Some(label),
            evidence_groups: groups
                .iter()
                .map(|g| g.iter().map(|(p, l)| SentenceRef::new(*p, *l)).collect::<BTreeSet<_>>())
                .collect(),
        }
    }

    fn sub(id: u64, label: ClaimLabel, ev: &[(&str, u32)]) -> Submission {
        Submission {
            id,
            predicted_label: label,
            predicted_evidence: ev.iter().map(|(p, l)| SentenceRef::new(*p, *l)).collect(),
        }
    }

    #[test]
    fn partial_group_earns_no_credit() {
        let gold = [claim(1, ClaimLabel::Supports, &[&[("A", 0), ("A", 1)]])];
        let r = fever_score(&[sub(1, ClaimLabel::Supports, &[("A", 0)])], &gold).unwrap();
        assert_eq!(r.fever_score, 0.0);
        assert_eq!(r.label_accuracy, 1.0);
        assert_eq!(r.evidence_recall, 0.0);
        assert_eq!(r.evidence_precision, 1.0);

        let r = fever_score(&[sub(1, ClaimLabel::Supports, &[("A", 0), ("A", 1)])], &gold).unwrap();
        assert_eq!(r.fever_score, 1.0);
    }

    #[test]
    fn all_nei_predictions() {
        let gold = [
            claim(1, ClaimLabel::Supports, &[&[("A", 0)]]),
            claim(2, ClaimLabel::Refutes, &[&[("B", 0)]]),
            claim(3, ClaimLabel::NotEnoughInfo, &[]),
        ];
        let subs: Vec<_> = (1..=3).map(|i| sub(i, ClaimLabel::NotEnoughInfo, &[])).collect();
        let r = fever_score(&subs, &gold).unwrap();
        assert!((r.fever_score - 1.0 / 3.0).abs() < 1e-12);
        assert_eq!(r.fever_score, r.label_accuracy);
        // missing submissions behave the same
        let r2 = fever_score(&[], &gold).unwrap();
        assert_eq!(r2.fever_score, r.fever_score);
        assert_eq!(r2.missing_submissions, 3);
    }

    #[test]
    fn input_errors() {
        let gold = [claim(1, ClaimLabel::Supports, &[&[("A", 0)]])];
        assert!(fever_score(&[sub(9, ClaimLabel::Supports, &[])], &gold).is_err());
        let s = sub(1, ClaimLabel::Supports, &[]);
        assert!(fever_score(&[s.clone(), s], &gold).is_err());
        assert!(fever_score(&[sub(1, ClaimLabel::Supports, &[("A", 0), ("A", 0)])], &gold).is_err());
        assert!(fever_score(&[], &[]).is_err());
    }

    #[test]
    fn retrieval_rate_rules() {
        let gold = vec![
            claim(1, ClaimLabel::NotEnoughInfo, &[]),
            claim(2, ClaimLabel::Supports, &[&[("A", 0)]]),
            claim(3, ClaimLabel::Supports, &[&[("A", 1), ("B", 1)]]),
            claim(4, ClaimLabel::Refutes, &[&[("C", 0)], &[("C", 1), ("D", 0)]]),
        ];
        let rec = |id, refs: &[(&str, u32)]| RetrievalRecord {
            id,
            candidates: refs.iter().map(|(p, l)| SentenceRef::new(*p, *l)).collect(),
        };
        let retrievals = vec![rec(2, &[("A", 0)]), rec(4, &[("C", 1)])];
        let r = retrieval_rate(&gold, &retrievals, SkipRule::NoSingleton);
        assert_eq!((r.counted, r.successes, r.skipped), (3, 2, 1));
        let r = retrieval_rate(&gold, &retrievals, SkipRule::AnyMulti);
        assert_eq!((r.counted, r.successes, r.skipped), (2, 2, 2));

        let nei = vec![claim(1, ClaimLabel::NotEnoughInfo, &[])];
        assert_eq!(retrieval_rate(&nei, &[], SkipRule::NoSingleton).rate, 1.0);
    }
}
