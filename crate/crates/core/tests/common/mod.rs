//! Shared fixtures and brute-force reference implementations for integration tests.
#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};
use std::path::{Path, PathBuf};

use feverpipe::aggregation::Submission;
use feverpipe::claims::{load_claims, Claim, SentenceRef};
use feverpipe::corpus::{CorpusHandle, MemoryStore};
use feverpipe::pipeline::{PathsConfig, PipelineConfig};
use feverpipe::retrieval::RetrievalRecord;
use feverpipe::ClaimLabel;

pub fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures").join(name)
}

pub fn wiki_dump() -> PathBuf {
    fixture("wiki.jsonl")
}

pub fn claims_file() -> PathBuf {
    fixture("claims.jsonl")
}

pub fn fixture_claims() -> Vec<Claim> {
    load_claims(&claims_file()).expect("fixture claims load")
}

pub fn fixture_corpus() -> CorpusHandle {
    let (store, report) = MemoryStore::from_dump(&wiki_dump()).expect("fixture dump loads");
    assert_eq!(report.malformed_records, 0);
    store.into()
}

pub fn pipeline_config(dir: &Path) -> PipelineConfig {
    PipelineConfig::new(PathsConfig {
        dump: wiki_dump(),
        claims: claims_file(),
        store: dir.join("store"),
        workdir: dir.join("work"),
    })
}

/// Terms of whitespace-separated text made of lowercase words and the
/// punctuation marks `,` and `.`: unigrams plus bigrams of adjacent words.
pub fn simple_terms(text: &str) -> Vec<String> {
    let mut terms = Vec::new();
    let mut prev: Option<&str> = None;
    for tok in text.split_whitespace() {
        if tok == "," || tok == "." {
            prev = None;
            continue;
        }
        terms.push(tok.to_string());
        if let Some(p) = prev {
            terms.push(format!("{p} {tok}"));
        }
        prev = Some(tok);
    }
    terms
}

/// Cosine ranking computed straight from the weighting formula, with every
/// idf multiplied by `idf_scale`. Zero scores are dropped; ties go to the
/// smaller id.
pub fn brute_rank<F>(
    docs: &[(String, String)],
    query: &str,
    idf_scale: f64,
    terms: F,
) -> Vec<(String, f64)>
where
    F: Fn(&str) -> Vec<String>,
{
    let n = docs.len() as f64;
    let bags: Vec<HashMap<String, f64>> = docs
        .iter()
        .map(|(_, text)| {
            let mut bag = HashMap::new();
            for t in terms(text) {
                *bag.entry(t).or_insert(0.0) += 1.0;
            }
            bag
        })
        .collect();
    let mut df: HashMap<&str, f64> = HashMap::new();
    for bag in &bags {
        for term in bag.keys() {
            *df.entry(term).or_insert(0.0) += 1.0;
        }
    }
    let idf = |term: &str| {
        let df = df.get(term).copied().unwrap_or(0.0);
        idf_scale * (((n + 1.0) / (df + 1.0)).ln() + 1.0)
    };
    let vectorize = |bag: &HashMap<String, f64>| -> HashMap<String, f64> {
        let raw: HashMap<String, f64> = bag.iter().map(|(t, tf)| (t.clone(), tf * idf(t))).collect();
        let norm = raw.values().map(|w| w * w).sum::<f64>().sqrt();
        raw.into_iter()
            .map(|(t, w)| (t, if norm > 0.0 { w / norm } else { 0.0 }))
            .collect()
    };

    let mut qbag = HashMap::new();
    for t in terms(query) {
        *qbag.entry(t).or_insert(0.0) += 1.0;
    }
    let q = vectorize(&qbag);
    let mut out: Vec<(String, f64)> = docs
        .iter()
        .zip(&bags)
        .map(|((id, _), bag)| {
            let d = vectorize(bag);
            let dot: f64 = q.iter().map(|(t, w)| w * d.get(t).copied().unwrap_or(0.0)).sum();
            (id.clone(), dot)
        })
        .filter(|(_, s)| *s > 1e-12)
        .collect();
    out.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
    out
}

/// Checks `got` against the first `got.len()` entries of a full brute-force
/// ranking, allowing order swaps only between scores equal within `tol`.
pub fn ranking_matches(got: &[(String, f64)], full: &[(String, f64)], k: usize, tol: f64) -> Result<(), String> {
    let want = k.min(full.len());
    if got.len() != want {
        return Err(format!("expected {want} results, got {}", got.len()));
    }
    let ids: HashSet<&String> = got.iter().map(|(id, _)| id).collect();
    if ids.len() != got.len() {
        return Err("duplicate ids in result".into());
    }
    let scores: HashMap<&String, f64> = full.iter().map(|(id, s)| (id, *s)).collect();
    for (i, (id, score)) in got.iter().enumerate() {
        let expected = full[i].1;
        if (score - expected).abs() > tol {
            return Err(format!("rank {i}: score {score} vs brute force {expected}"));
        }
        match scores.get(id) {
            Some(s) if (s - expected).abs() <= tol => {}
            _ => return Err(format!("rank {i}: {id} should not be at this rank")),
        }
    }
    Ok(())
}

/// Scores as they would come out of a direct reading of the FEVER rules.
#[derive(Debug, Clone, PartialEq)]
pub struct BruteScore {
    pub fever: f64,
    pub accuracy: f64,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

pub fn brute_score(submissions: &[Submission], gold: &[Claim]) -> BruteScore {
    let mut strict = 0usize;
    let mut correct = 0usize;
    let mut precisions = Vec::new();
    let mut recalls = Vec::new();
    for claim in gold {
        let sub = submissions.iter().find(|s| s.id == claim.id);
        let label = sub.map_or(ClaimLabel::NotEnoughInfo, |s| s.predicted_label);
        let evidence: Vec<SentenceRef> = sub.map_or(Vec::new(), |s| s.predicted_evidence.clone());
        let gold_label = claim.gold_label.unwrap();
        let verifiable = gold_label != ClaimLabel::NotEnoughInfo;

        let mut full_group = false;
        for group in &claim.evidence_groups {
            if group.iter().all(|s| evidence.contains(s)) {
                full_group = true;
            }
        }
        if label == gold_label {
            correct += 1;
            if !verifiable || full_group {
                strict += 1;
            }
        }
        if verifiable {
            let gold_sentences: Vec<&SentenceRef> = claim.evidence_groups.iter().flatten().collect();
            if evidence.is_empty() {
                precisions.push(1.0);
            } else {
                let hits = evidence.iter().filter(|e| gold_sentences.contains(e)).count();
                precisions.push(hits as f64 / evidence.len() as f64);
            }
            recalls.push(if full_group { 1.0 } else { 0.0 });
        }
    }
    let mean = |v: &[f64]| {
        if v.is_empty() {
            0.0
        } else {
            let mut sum = 0.0;
            for x in v {
                sum += x;
            }
            sum / v.len() as f64
        }
    };
    let precision = mean(&precisions);
    let recall = mean(&recalls);
    let f1 = if precision + recall > 0.0 {
        2.0 * precision * recall / (precision + recall)
    } else {
        0.0
    };
    BruteScore {
        fever: strict as f64 / gold.len() as f64,
        accuracy: correct as f64 / gold.len() as f64,
        precision,
        recall,
        f1,
    }
}

/// Highest FEVER score any classifier could reach on these retrievals: NEI
/// claims plus verifiable claims with a whole gold group retrieved.
pub fn retrieval_ceiling(gold: &[Claim], retrievals: &[RetrievalRecord]) -> f64 {
    let by_id: BTreeMap<u64, BTreeSet<&SentenceRef>> = retrievals
        .iter()
        .map(|r| (r.id, r.candidates.iter().collect()))
        .collect();
    let reachable = gold
        .iter()
        .filter(|c| match c.gold_label {
            Some(ClaimLabel::NotEnoughInfo) => true,
            _ => {
                let got = by_id.get(&c.id).cloned().unwrap_or_default();
                c.evidence_groups
                    .iter()
                    .any(|g| g.iter().all(|s| got.contains(s)))
            }
        })
        .count();
    reachable as f64 / gold.len() as f64
}

/// Random labeled claims with small evidence groups over a tiny sentence space.
pub fn random_claims<R: rand::Rng>(rng: &mut R, n: usize) -> Vec<Claim> {
    (0..n as u64)
        .map(|id| {
            let label = match rng.random_range(0..3) {
                0 => ClaimLabel::Supports,
                1 => ClaimLabel::Refutes,
                _ => ClaimLabel::NotEnoughInfo,
            };
            let mut groups = Vec::new();
            if label != ClaimLabel::NotEnoughInfo {
                let mut seen = BTreeSet::new();
                for _ in 0..rng.random_range(1..=3) {
                    let size = if rng.random_bool(0.7) { 1 } else { 2 };
                    let group: BTreeSet<SentenceRef> = (0..size).map(|_| random_sentence(rng)).collect();
                    if seen.insert(group.clone()) {
                        groups.push(group);
                    }
                }
            }
            Claim {
                id,
                text: format!("claim {id}"),
                gold_label: Some(label),
                evidence_groups: groups,
            }
        })
        .collect()
}

pub fn random_sentence<R: rand::Rng>(rng: &mut R) -> SentenceRef {
    let page = ["Alpha", "Beta", "Gamma"][rng.random_range(0..3)];
    SentenceRef::new(page, rng.random_range(0..4))
}

/// Random submissions for a subset of `gold`, with distinct evidence sentences.
pub fn random_submissions<R: rand::Rng>(rng: &mut R, gold: &[Claim]) -> Vec<Submission> {
    let mut out = Vec::new();
    for claim in gold {
        if !rng.random_bool(0.9) {
            continue;
        }
        out.push({
            let predicted_label = if rng.random_bool(0.5) {
                claim.gold_label.unwrap()
            } else {
                [ClaimLabel::Supports, ClaimLabel::Refutes, ClaimLabel::NotEnoughInfo][rng.random_range(0..3)]
            };
            let mut evidence = BTreeSet::new();
            if rng.random_bool(0.5) {
                for s in claim.evidence_groups.iter().flatten() {
                    if rng.random_bool(0.7) {
                        evidence.insert(s.clone());
                    }
                }
            }
            for _ in 0..rng.random_range(0..3) {
                evidence.insert(random_sentence(rng));
            }
            Submission {
                id: claim.id,
                predicted_label,
                predicted_evidence: evidence.into_iter().collect(),
            }
        });
    }
    out
}
