//! Candidate evidence retrieval: document selection followed by sentence selection.

use std::collections::HashSet;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::claims::{Claim, SentenceRef};
use crate::corpus::{display_title, normalize_title, CorpusHandle};
use crate::error::{Error, Result};
use crate::text::{tokenize, Token};
use crate::tfidf::TfidfIndex;

const CONNECTORS: [&str; 8] = ["of", "the", "a", "an", "and", "in", "on", "for"];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum SentenceMode {
    /// The `k` best sentences by TF-IDF over the pooled sentences of all retrieved pages.
    TopK { k: usize },
    /// Every non-empty sentence among the first `max_lines` lines of each page.
    EntireArticles { max_lines: usize },
}

impl Default for SentenceMode {
    fn default() -> Self {
        SentenceMode::TopK { k: 5 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct RetrievalConfig {
    pub doc_k: usize,
    pub sentence_mode: SentenceMode,
    pub use_title_in_tfidf: bool,
    pub use_ne_retrieval: bool,
    pub use_film_heuristic: bool,
}

impl Default for RetrievalConfig {
    fn default() -> Self {
        RetrievalConfig::baseline()
    }
}

impl RetrievalConfig {
    /// Plain TF-IDF over pages and sentences.
    pub fn baseline() -> Self {
        RetrievalConfig {
            doc_k: 5,
            sentence_mode: SentenceMode::TopK { k: 5 },
            use_title_in_tfidf: false,
            use_ne_retrieval: false,
            use_film_heuristic: false,
        }
    }

    pub fn with_titles() -> Self {
        RetrievalConfig {
            use_title_in_tfidf: true,
            ..Self::baseline()
        }
    }

    pub fn with_titles_ne() -> Self {
        RetrievalConfig {
            use_ne_retrieval: true,
            ..Self::with_titles()
        }
    }

    pub fn with_titles_ne_film() -> Self {
        RetrievalConfig {
            use_film_heuristic: true,
            ..Self::with_titles_ne()
        }
    }

    pub fn entire_articles() -> Self {
        RetrievalConfig {
            sentence_mode: SentenceMode::EntireArticles { max_lines: 50 },
            ..Self::with_titles_ne_film()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.doc_k == 0 {
            return Err(Error::Config("doc_k must be at least 1".into()));
        }
        match self.sentence_mode {
            SentenceMode::TopK { k: 0 } => {
                return Err(Error::Config("sentence k must be at least 1".into()))
            }
            SentenceMode::EntireArticles { max_lines: 0 } => {
                return Err(Error::Config("max_lines must be at least 1".into()))
            }
            _ => {}
        }
        if self.use_film_heuristic && !self.use_ne_retrieval {
            return Err(Error::Config(
                "the film heuristic requires NE retrieval".into(),
            ));
        }
        Ok(())
    }
}

/// One premise sentence proposed for a claim.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EvidenceCandidate {
    pub claim_id: u64,
    pub page: String,
    pub line: u32,
    pub sentence: String,
    pub titled_premise: String,
}

impl EvidenceCandidate {
    pub fn new(claim_id: u64, page: &str, line: u32, sentence: &str) -> Self {
        EvidenceCandidate {
            claim_id,
            page: page.to_string(),
            line,
            sentence: sentence.to_string(),
            titled_premise: titled_premise(page, sentence),
        }
    }

    pub fn sentence_ref(&self) -> SentenceRef {
        SentenceRef::new(self.page.clone(), self.line)
    }
}

/// `[Display Title] sentence`.
pub fn titled_premise(raw_title: &str, sentence: &str) -> String {
    format!("[{}] {}", display_title(raw_title), sentence)
}

/// Retrieval output for one claim, as written to `retrieve` JSONL.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RetrievalRecord {
    pub id: u64,
    pub candidates: Vec<SentenceRef>,
}

fn is_connector(token: &Token) -> bool {
    CONNECTORS.contains(&token.surface.as_str())
}

fn opens_phrase(token: &Token) -> bool {
    token.is_capitalized || token.starts_with_digit()
}

/// Maximal runs of capitalized or digit-initial tokens, bridging lowercase
/// connectors that sit between two such tokens. Order of first appearance,
/// without duplicates.
pub fn extract_title_phrases(claim_text: &str) -> Vec<String> {
    let tokens = tokenize(claim_text);
    let mut phrases: Vec<String> = Vec::new();
    let mut i = 0;
    while i < tokens.len() {
        if !opens_phrase(&tokens[i]) {
            i += 1;
            continue;
        }
        let start = i;
        let mut end = i;
        let mut j = i + 1;
        while j < tokens.len() {
            if opens_phrase(&tokens[j]) {
                end = j;
                j += 1;
                continue;
            }
            let mut k = j;
            while k < tokens.len() && is_connector(&tokens[k]) {
                k += 1;
            }
            if k > j && k < tokens.len() && opens_phrase(&tokens[k]) {
                end = k;
                j = k + 1;
            } else {
                break;
            }
        }
        i = end + 1;

        let run = &tokens[start..=end];
        if run.len() == 1
            && (run[0].is_punctuation()
                || CONNECTORS.contains(&run[0].surface.to_lowercase().as_str()))
        {
            continue;
        }
        let phrase = run
            .iter()
            .map(|t| t.surface.as_str())
            .collect::<Vec<_>>()
            .join(" ");
        if !phrases.contains(&phrase) {
            phrases.push(phrase);
        }
    }
    phrases
}

/// Builds the page-level TF-IDF index, optionally with each page's display
/// title prepended to its text.
pub fn build_document_index(
    corpus: &CorpusHandle,
    use_titles: bool,
) -> Result<TfidfIndex<String>> {
    let mut docs = Vec::with_capacity(corpus.page_count());
    corpus.for_each_page(|page| {
        let text = if use_titles {
            format!("{} {}", page.display_title(), page.text())
        } else {
            page.text()
        };
        docs.push((page.raw_title.clone(), text));
    })?;
    TfidfIndex::build(docs)
}

fn film_titles(raw_title: &str) -> [String; 2] {
    [
        format!("{raw_title}_-LRB-film-RRB-"),
        format!("{raw_title}_(film)"),
    ]
}

/// Pages to read for a claim: TF-IDF pages by rank, then pages whose title
/// equals an extracted phrase, then `X (film)` pages for those NE matches.
pub fn retrieve_documents(
    claim_text: &str,
    config: &RetrievalConfig,
    index: &TfidfIndex<String>,
    corpus: &CorpusHandle,
) -> Vec<String> {
    let mut out: Vec<String> = Vec::new();
    let mut seen: HashSet<String> = HashSet::new();
    let mut push = |title: String, out: &mut Vec<String>| {
        if seen.insert(title.clone()) {
            out.push(title);
        }
    };

    for (title, _) in index.score_query(claim_text, config.doc_k) {
        push(title, &mut out);
    }

    if config.use_ne_retrieval {
        let matched: Vec<String> = extract_title_phrases(claim_text)
            .iter()
            .map(|p| normalize_title(p))
            .filter(|t| corpus.contains(t))
            .collect();
        for title in &matched {
            push(title.clone(), &mut out);
        }
        if config.use_film_heuristic {
            for title in &matched {
                for film in film_titles(title) {
                    if corpus.contains(&film) {
                        push(film, &mut out);
                    }
                }
            }
        }
    }
    out
}

/// Turns retrieved pages into candidate sentences. Absent titles are skipped.
pub fn select_sentences(
    claim_id: u64,
    claim_text: &str,
    pages: &[String],
    config: &RetrievalConfig,
    corpus: &CorpusHandle,
) -> Result<Vec<EvidenceCandidate>> {
    let mut seen = HashSet::new();
    let pages: Vec<_> = pages
        .iter()
        .filter(|t| seen.insert(normalize_title(t)))
        .filter_map(|t| corpus.get_page(t))
        .collect();

    match config.sentence_mode {
        SentenceMode::EntireArticles { max_lines } => Ok(pages
            .iter()
            .flat_map(|page| {
                page.lines
                    .iter()
                    .take(max_lines)
                    .filter(|(_, s)| !s.trim().is_empty())
                    .map(|(line, s)| EvidenceCandidate::new(claim_id, &page.raw_title, *line, s))
            })
            .collect()),
        SentenceMode::TopK { k } => {
            let mut pool = Vec::new();
            for page in &pages {
                let title = page.display_title();
                for (line, sentence) in &page.lines {
                    if sentence.trim().is_empty() {
                        continue;
                    }
                    let text = if config.use_title_in_tfidf {
                        format!("{title} {sentence}")
                    } else {
                        sentence.clone()
                    };
                    pool.push((SentenceRef::new(page.raw_title.clone(), *line), text));
                }
            }
            let index = TfidfIndex::build(pool)?;
            Ok(index
                .score_query(claim_text, k)
                .into_iter()
                .map(|(r, _)| {
                    let page = pages
                        .iter()
                        .find(|p| p.raw_title == r.page)
                        .expect("scored sentence comes from a loaded page");
                    let sentence = page.sentence(r.line).unwrap_or_default();
                    EvidenceCandidate::new(claim_id, &r.page, r.line, sentence)
                })
                .collect())
        }
    }
}

/// Document retrieval followed by sentence selection for one claim.
pub fn retrieve_claim(
    claim: &Claim,
    config: &RetrievalConfig,
    index: &TfidfIndex<String>,
    corpus: &CorpusHandle,
) -> Result<Vec<EvidenceCandidate>> {
    let pages = retrieve_documents(&claim.text, config, index, corpus);
    select_sentences(claim.id, &claim.text, &pages, config, corpus)
}

/// Retrieves candidates for every claim in parallel; output is ordered by claim id.
pub fn retrieve_all(
    claims: &[Claim],
    config: &RetrievalConfig,
    index: &TfidfIndex<String>,
    corpus: &CorpusHandle,
) -> Result<Vec<RetrievalRecord>> {
    config.validate()?;
    let mut records = claims
        .par_iter()
        .map(|claim| {
            retrieve_claim(claim, config, index, corpus).map(|cands| RetrievalRecord {
                id: claim.id,
                candidates: cands.iter().map(EvidenceCandidate::sentence_ref).collect(),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    records.sort_by_key(|r| r.id);
    Ok(records)
}

/// Re-materializes candidates from a retrieval record; references to missing
/// pages or lines are dropped and counted.
pub fn resolve_candidates(
    record: &RetrievalRecord,
    corpus: &CorpusHandle,
) -> (Vec<EvidenceCandidate>, usize) {
    let mut missing = 0;
    let mut out = Vec::with_capacity(record.candidates.len());
    let mut cached: Option<crate::corpus::Page> = None;
    for r in &record.candidates {
        if cached.as_ref().is_none_or(|p| p.raw_title != r.page) {
            cached = corpus.get_page(&r.page);
        }
        match cached.as_ref().and_then(|p| p.sentence(r.line)) {
            Some(sentence) => {
                out.push(EvidenceCandidate::new(record.id, &r.page, r.line, sentence))
            }
            None => missing += 1,
        }
    }
    (out, missing)
}
