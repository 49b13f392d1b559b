//! Sparse TF-IDF index with cosine scoring.
//!
//! Weight of a term in a document is `tf * idf` with raw counts for `tf` and
//! `idf = ln((N + 1) / (df + 1)) + 1`. Document vectors are L2-normalized, so
//! the score of a query is the cosine between the two vectors.

use std::collections::{BTreeMap, HashMap};
use std::path::Path;

use rayon::prelude::*;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::jsonl::{self, StageHeader};
use crate::text::index_terms;

/// Smoothed inverse document frequency.
pub fn idf(doc_count: usize, doc_freq: usize) -> f64 {
    ((doc_count as f64 + 1.0) / (doc_freq as f64 + 1.0)).ln() + 1.0
}

fn term_counts(text: &str) -> BTreeMap<String, u32> {
    let mut counts = BTreeMap::new();
    for term in index_terms(text) {
        *counts.entry(term).or_insert(0) += 1;
    }
    counts
}

fn normalize(vector: &mut [(u32, f64)]) {
    let norm = vector.iter().map(|(_, w)| w * w).sum::<f64>().sqrt();
    if norm > 0.0 {
        vector.iter_mut().for_each(|(_, w)| *w /= norm);
    }
}

#[derive(Serialize, Deserialize)]
struct IndexData<D> {
    docs: Vec<D>,
    terms: Vec<String>,
    doc_freq: Vec<u32>,
    vectors: Vec<Vec<(u32, f64)>>,
}

#[derive(Debug, Clone)]
pub struct TfidfIndex<D> {
    docs: Vec<D>,
    /// Sorted vocabulary; a term's id is its position here.
    terms: Vec<String>,
    doc_freq: Vec<u32>,
    /// Per-document `(term id, weight)` sorted by term id, unit length.
    vectors: Vec<Vec<(u32, f64)>>,
    term_ids: HashMap<String, u32>,
    doc_pos: HashMap<D, usize>,
    postings: Vec<Vec<(u32, f64)>>,
}

impl<D> TfidfIndex<D>
where
    D: Ord + Clone + std::hash::Hash + Send + Sync,
{
    pub fn build(documents: Vec<(D, String)>) -> Result<Self> {
        let counted: Vec<(D, BTreeMap<String, u32>)> = documents
            .into_par_iter()
            .map(|(id, text)| (id, term_counts(&text)))
            .collect();

        let mut df: BTreeMap<&str, u32> = BTreeMap::new();
        for (_, counts) in &counted {
            for term in counts.keys() {
                *df.entry(term.as_str()).or_insert(0) += 1;
            }
        }
        let terms: Vec<String> = df.keys().map(|t| t.to_string()).collect();
        let doc_freq: Vec<u32> = df.values().copied().collect();
        let term_ids: HashMap<String, u32> = terms
            .iter()
            .enumerate()
            .map(|(i, t)| (t.clone(), i as u32))
            .collect();
        let n = counted.len();
        let idfs: Vec<f64> = doc_freq.iter().map(|&d| idf(n, d as usize)).collect();

        let (docs, vectors): (Vec<D>, Vec<Vec<(u32, f64)>>) = counted
            .into_par_iter()
            .map(|(id, counts)| {
                // BTreeMap iteration is in term order, which is term-id order.
                let mut vector: Vec<(u32, f64)> = counts
                    .iter()
                    .map(|(term, &tf)| {
                        let tid = term_ids[term];
                        (tid, tf as f64 * idfs[tid as usize])
                    })
                    .collect();
                normalize(&mut vector);
                (id, vector)
            })
            .unzip();

        Self::assemble(docs, terms, doc_freq, vectors, Some(term_ids))
    }

    fn assemble(
        docs: Vec<D>,
        terms: Vec<String>,
        doc_freq: Vec<u32>,
        vectors: Vec<Vec<(u32, f64)>>,
        term_ids: Option<HashMap<String, u32>>,
    ) -> Result<Self> {
        if docs.len() != vectors.len() || terms.len() != doc_freq.len() {
            return Err(Error::Invalid("inconsistent index tables".into()));
        }
        let mut doc_pos = HashMap::with_capacity(docs.len());
        for (i, d) in docs.iter().enumerate() {
            if doc_pos.insert(d.clone(), i).is_some() {
                return Err(Error::Invalid("duplicate document id in index".into()));
            }
        }
        let term_ids = term_ids.unwrap_or_else(|| {
            terms
                .iter()
                .enumerate()
                .map(|(i, t)| (t.clone(), i as u32))
                .collect()
        });
        let mut postings = vec![Vec::new(); terms.len()];
        for (doc, vector) in vectors.iter().enumerate() {
            for &(tid, w) in vector {
                let list: &mut Vec<(u32, f64)> = postings
                    .get_mut(tid as usize)
                    .ok_or_else(|| Error::Invalid("term id out of range".into()))?;
                list.push((doc as u32, w));
            }
        }
        Ok(TfidfIndex {
            docs,
            terms,
            doc_freq,
            vectors,
            term_ids,
            doc_pos,
            postings,
        })
    }

    pub fn len(&self) -> usize {
        self.docs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.docs.is_empty()
    }

    pub fn vocabulary_size(&self) -> usize {
        self.terms.len()
    }

    pub fn doc_freq(&self, term: &str) -> usize {
        self.term_ids
            .get(term)
            .map_or(0, |&t| self.doc_freq[t as usize] as usize)
    }

    pub fn idf(&self, term: &str) -> f64 {
        idf(self.docs.len(), self.doc_freq(term))
    }

    pub fn doc_ids(&self) -> &[D] {
        &self.docs
    }

    /// Cosine similarity between two indexed documents.
    pub fn similarity(&self, a: &D, b: &D) -> Option<f64> {
        let va = &self.vectors[*self.doc_pos.get(a)?];
        let vb = &self.vectors[*self.doc_pos.get(b)?];
        let (mut i, mut j, mut dot) = (0, 0, 0.0);
        while i < va.len() && j < vb.len() {
            match va[i].0.cmp(&vb[j].0) {
                std::cmp::Ordering::Less => i += 1,
                std::cmp::Ordering::Greater => j += 1,
                std::cmp::Ordering::Equal => {
                    dot += va[i].1 * vb[j].1;
                    i += 1;
                    j += 1;
                }
            }
        }
        Some(dot)
    }

    /// Top `k` documents by cosine against `query`, best first. Ties go to the
    /// smaller document id; documents sharing no term with the query are never
    /// returned.
    pub fn score_query(&self, query: &str, k: usize) -> Vec<(D, f64)> {
        if k == 0 || self.docs.is_empty() {
            return Vec::new();
        }
        let n = self.docs.len();
        let counts = term_counts(query);
        let mut weights: Vec<(Option<u32>, f64)> = counts
            .iter()
            .map(|(term, &tf)| {
                let tid = self.term_ids.get(term).copied();
                let df = tid.map_or(0, |t| self.doc_freq[t as usize] as usize);
                (tid, tf as f64 * idf(n, df))
            })
            .collect();
        let norm = weights.iter().map(|(_, w)| w * w).sum::<f64>().sqrt();
        if norm == 0.0 {
            return Vec::new();
        }
        weights.iter_mut().for_each(|(_, w)| *w /= norm);

        let mut scores: HashMap<u32, f64> = HashMap::new();
        for (tid, qw) in weights {
            let Some(tid) = tid else { continue };
            for &(doc, dw) in &self.postings[tid as usize] {
                *scores.entry(doc).or_insert(0.0) += qw * dw;
            }
        }

        let mut ranked: Vec<(u32, f64)> = scores.into_iter().filter(|(_, s)| *s > 0.0).collect();
        ranked.sort_by(|a, b| {
            b.1.total_cmp(&a.1)
                .then_with(|| self.docs[a.0 as usize].cmp(&self.docs[b.0 as usize]))
        });
        ranked.truncate(k);
        ranked
            .into_iter()
            .map(|(doc, s)| (self.docs[doc as usize].clone(), s))
            .collect()
    }
}

impl<D> TfidfIndex<D>
where
    D: Ord + Clone + std::hash::Hash + Send + Sync + Serialize + DeserializeOwned,
{
    /// Writes the index as a two-line JSONL file: optional header, then the tables.
    pub fn save(&self, path: &Path, header: Option<&StageHeader>) -> Result<()> {
        let data = IndexData {
            docs: self.docs.clone(),
            terms: self.terms.clone(),
            doc_freq: self.doc_freq.clone(),
            vectors: self.vectors.clone(),
        };
        jsonl::write_records(path, header, &[data])
    }

    pub fn load(path: &Path) -> Result<Self> {
        let mut records: Vec<IndexData<D>> = jsonl::read_records(path)?;
        let data = records
            .pop()
            .filter(|_| records.is_empty())
            .ok_or_else(|| Error::Invalid(format!("{} is not an index file", path.display())))?;
        Self::assemble(data.docs, data.terms, data.doc_freq, data.vectors, None)
    }
}
