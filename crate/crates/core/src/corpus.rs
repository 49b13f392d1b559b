//! Page store built from a FEVER-style wiki dump.
//!
//! The dump holds one JSON object per line with fields `id` (raw title),
//! `text` and `lines`. The `lines` field is a newline-joined list of
//! `lineno<TAB>sentence<TAB>anchor...` records; only the line number and the
//! sentence are kept.
//!
//! On disk a store is a directory with three files:
//!
//! ```text
//! pages.jsonl    one serialized Page per line, in dump order
//! titles.tsv     raw_title<TAB>byte offset<TAB>byte length, sorted by title
//! manifest.json  counts and the ingestion report
//! ```
//!
//! Only the title table is held in memory; pages are read on demand.

use std::collections::{BTreeMap, HashSet};
use std::fs::{self, File};
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{Error, Result};

const PAGES_FILE: &str = "pages.jsonl";
const TITLES_FILE: &str = "titles.tsv";
const MANIFEST_FILE: &str = "manifest.json";

/// Converts a title in either form to the stored underscore form.
pub fn normalize_title(title: &str) -> String {
    title.replace(' ', "_")
}

/// Display form of a raw title: underscores become spaces.
pub fn display_title(raw_title: &str) -> String {
    raw_title.replace('_', " ")
}

/// Decodes the bracket escapes used in dump titles and sentences, for display only.
pub fn decode_escapes(s: &str) -> String {
    const ESCAPES: [(&str, &str); 7] = [
        ("-LRB-", "("),
        ("-RRB-", ")"),
        ("-LSB-", "["),
        ("-RSB-", "]"),
        ("-LCB-", "{"),
        ("-RCB-", "}"),
        ("-COLON-", ":"),
    ];
    ESCAPES
        .iter()
        .fold(s.to_string(), |acc, (from, to)| acc.replace(from, to))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Page {
    #[serde(rename = "title")]
    pub raw_title: String,
    /// `(line_no, sentence)` in strictly increasing line order. Blank lines keep
    /// their number with an empty sentence.
    pub lines: Vec<(u32, String)>,
}

impl Page {
    pub fn new(raw_title: impl Into<String>, lines: Vec<(u32, String)>) -> Self {
        Page {
            raw_title: raw_title.into(),
            lines,
        }
    }

    pub fn display_title(&self) -> String {
        display_title(&self.raw_title)
    }

    pub fn sentence(&self, line_no: u32) -> Option<&str> {
        self.lines
            .binary_search_by_key(&line_no, |(n, _)| *n)
            .ok()
            .map(|i| self.lines[i].1.as_str())
    }

    /// All sentences joined by a single space.
    pub fn text(&self) -> String {
        let mut out = String::new();
        for (_, s) in &self.lines {
            if s.is_empty() {
                continue;
            }
            if !out.is_empty() {
                out.push(' ');
            }
            out.push_str(s);
        }
        out
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct IngestReport {
    pub pages_read: usize,
    pub lines_read: usize,
    pub malformed_records: usize,
    pub malformed_lines: usize,
    pub duplicate_pages: usize,
}

/// Outcome of parsing one dump line.
#[derive(Debug)]
enum ParsedRecord {
    Page { page: Page, bad_lines: usize },
    Malformed,
}

fn parse_lines_field(field: &str) -> (Vec<(u32, String)>, usize) {
    let mut lines: Vec<(u32, String)> = Vec::new();
    let mut bad = 0;
    for record in field.split('\n') {
        if record.trim().is_empty() {
            continue;
        }
        let mut fields = record.split('\t');
        let number = fields.next().unwrap_or("").trim();
        let Ok(line_no) = number.parse::<u32>() else {
            bad += 1;
            continue;
        };
        if lines.last().is_some_and(|(prev, _)| *prev >= line_no) {
            bad += 1;
            continue;
        }
        let sentence = fields.next().unwrap_or("").to_string();
        lines.push((line_no, sentence));
    }
    (lines, bad)
}

fn parse_record(line: &str) -> ParsedRecord {
    let Ok(value) = serde_json::from_str::<Value>(line) else {
        return ParsedRecord::Malformed;
    };
    let title = match value.get("id").and_then(Value::as_str) {
        Some(t) if !t.trim().is_empty() => t.to_string(),
        _ => return ParsedRecord::Malformed,
    };
    let (lines, bad_lines) = match value.get("lines") {
        Some(Value::String(s)) => parse_lines_field(s),
        None | Some(Value::Null) => (Vec::new(), 0),
        Some(_) => return ParsedRecord::Malformed,
    };
    ParsedRecord::Page {
        page: Page::new(title, lines),
        bad_lines,
    }
}

/// Streams dump records into `sink`, keeping the first occurrence of each title.
fn read_dump(dump_path: &Path, mut sink: impl FnMut(Page) -> Result<()>) -> Result<IngestReport> {
    let file = File::open(dump_path).map_err(|e| Error::io(dump_path, e))?;
    let mut report = IngestReport::default();
    let mut seen = HashSet::new();
    for line in BufReader::new(file).lines() {
        let line = line.map_err(|e| Error::io(dump_path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        match parse_record(&line) {
            ParsedRecord::Malformed => report.malformed_records += 1,
            ParsedRecord::Page { page, bad_lines } => {
                report.malformed_lines += bad_lines;
                if !seen.insert(page.raw_title.clone()) {
                    report.duplicate_pages += 1;
                    continue;
                }
                report.pages_read += 1;
                report.lines_read += page.lines.len();
                sink(page)?;
            }
        }
    }
    Ok(report)
}

#[derive(Debug, Serialize, Deserialize)]
struct Manifest {
    format: u32,
    page_count: usize,
    line_count: usize,
    report: IngestReport,
}

/// Builds a persistent store directory from a dump. Any previous store
/// contents at `out_store` are replaced.
pub fn ingest_dump(dump_path: &Path, out_store: &Path) -> Result<IngestReport> {
    fs::create_dir_all(out_store).map_err(|e| Error::io(out_store, e))?;
    let pages_tmp = out_store.join(format!("{PAGES_FILE}.partial"));
    let mut pages_out =
        BufWriter::new(File::create(&pages_tmp).map_err(|e| Error::io(&pages_tmp, e))?);
    let mut titles: Vec<(String, u64, u64)> = Vec::new();
    let mut offset = 0u64;

    let report = read_dump(dump_path, |page| {
        let mut bytes = serde_json::to_vec(&page).expect("page serializes");
        bytes.push(b'\n');
        pages_out
            .write_all(&bytes)
            .map_err(|e| Error::io(&pages_tmp, e))?;
        titles.push((page.raw_title, offset, bytes.len() as u64));
        offset += bytes.len() as u64;
        Ok(())
    })?;
    pages_out.flush().map_err(|e| Error::io(&pages_tmp, e))?;
    drop(pages_out);

    titles.sort();
    let titles_tmp = out_store.join(format!("{TITLES_FILE}.partial"));
    {
        let mut out =
            BufWriter::new(File::create(&titles_tmp).map_err(|e| Error::io(&titles_tmp, e))?);
        for (title, off, len) in &titles {
            writeln!(out, "{title}\t{off}\t{len}").map_err(|e| Error::io(&titles_tmp, e))?;
        }
        out.flush().map_err(|e| Error::io(&titles_tmp, e))?;
    }

    let manifest = Manifest {
        format: 1,
        page_count: report.pages_read,
        line_count: report.lines_read,
        report: report.clone(),
    };
    let manifest_path = out_store.join(MANIFEST_FILE);
    fs::write(
        &manifest_path,
        serde_json::to_vec_pretty(&manifest).expect("manifest serializes"),
    )
    .map_err(|e| Error::io(&manifest_path, e))?;

    let pages_path = out_store.join(PAGES_FILE);
    fs::rename(&pages_tmp, &pages_path).map_err(|e| Error::io(&pages_path, e))?;
    let titles_path = out_store.join(TITLES_FILE);
    fs::rename(&titles_tmp, &titles_path).map_err(|e| Error::io(&titles_path, e))?;
    Ok(report)
}

/// Store held fully in memory; used by tests and small corpora.
#[derive(Debug, Clone, Default)]
pub struct MemoryStore {
    pages: BTreeMap<String, Page>,
}

impl MemoryStore {
    pub fn from_pages(pages: impl IntoIterator<Item = Page>) -> Self {
        let mut map = BTreeMap::new();
        for page in pages {
            map.entry(page.raw_title.clone()).or_insert(page);
        }
        MemoryStore { pages: map }
    }

    pub fn from_dump(dump_path: &Path) -> Result<(Self, IngestReport)> {
        let mut pages = Vec::new();
        let report = read_dump(dump_path, |p| {
            pages.push(p);
            Ok(())
        })?;
        Ok((MemoryStore::from_pages(pages), report))
    }
}

/// Read-only view of an on-disk store.
#[derive(Debug)]
pub struct DiskStore {
    dir: PathBuf,
    pages_file: File,
    titles: Vec<(String, u64, u64)>,
}

impl DiskStore {
    pub fn open(dir: &Path) -> Result<Self> {
        let titles_path = dir.join(TITLES_FILE);
        let file = File::open(&titles_path).map_err(|e| Error::io(&titles_path, e))?;
        let mut titles = Vec::new();
        for line in BufReader::new(file).lines() {
            let line = line.map_err(|e| Error::io(&titles_path, e))?;
            let mut parts = line.rsplitn(3, '\t');
            let len = parts.next().and_then(|s| s.parse().ok());
            let off = parts.next().and_then(|s| s.parse().ok());
            let title = parts.next();
            match (title, off, len) {
                (Some(t), Some(o), Some(l)) => titles.push((t.to_string(), o, l)),
                _ => {
                    return Err(Error::Invalid(format!(
                        "corrupt title table {}: `{line}`",
                        titles_path.display()
                    )))
                }
            }
        }
        let pages_path = dir.join(PAGES_FILE);
        let pages_file = File::open(&pages_path).map_err(|e| Error::io(&pages_path, e))?;
        Ok(DiskStore {
            dir: dir.to_path_buf(),
            pages_file,
            titles,
        })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    fn read_at(&self, offset: u64, len: u64) -> std::io::Result<Vec<u8>> {
        use std::os::unix::fs::FileExt;
        let mut buf = vec![0u8; len as usize];
        self.pages_file.read_exact_at(&mut buf, offset)?;
        Ok(buf)
    }

    fn get(&self, raw_title: &str) -> Option<Page> {
        let i = self
            .titles
            .binary_search_by(|(t, _, _)| t.as_str().cmp(raw_title))
            .ok()?;
        let (_, off, len) = &self.titles[i];
        let parsed = self
            .read_at(*off, *len)
            .map_err(|e| e.to_string())
            .and_then(|bytes| serde_json::from_slice::<Page>(&bytes).map_err(|e| e.to_string()));
        match parsed {
            Ok(page) => Some(page),
            Err(e) => {
                log::warn!("store {}: cannot read page {raw_title}: {e}", self.dir.display());
                None
            }
        }
    }
}

/// A built corpus. Immutable; safe to share across threads.
#[derive(Debug)]
pub enum CorpusHandle {
    Memory(MemoryStore),
    Disk(DiskStore),
}

impl CorpusHandle {
    pub fn open(dir: &Path) -> Result<Self> {
        DiskStore::open(dir).map(CorpusHandle::Disk)
    }

    pub fn page_count(&self) -> usize {
        match self {
            CorpusHandle::Memory(m) => m.pages.len(),
            CorpusHandle::Disk(d) => d.titles.len(),
        }
    }

    /// Exact lookup by raw title or display title.
    pub fn get_page(&self, title: &str) -> Option<Page> {
        let key = normalize_title(title);
        match self {
            CorpusHandle::Memory(m) => m.pages.get(&key).cloned(),
            CorpusHandle::Disk(d) => d.get(&key),
        }
    }

    pub fn contains(&self, title: &str) -> bool {
        let key = normalize_title(title);
        match self {
            CorpusHandle::Memory(m) => m.pages.contains_key(&key),
            CorpusHandle::Disk(d) => d
                .titles
                .binary_search_by(|(t, _, _)| t.as_str().cmp(&key))
                .is_ok(),
        }
    }

    /// Raw titles in sorted order.
    pub fn titles(&self) -> Vec<String> {
        match self {
            CorpusHandle::Memory(m) => m.pages.keys().cloned().collect(),
            CorpusHandle::Disk(d) => d.titles.iter().map(|(t, _, _)| t.clone()).collect(),
        }
    }

    /// Visits every page in raw-title order.
    pub fn for_each_page(&self, mut f: impl FnMut(&Page)) -> Result<()> {
        match self {
            CorpusHandle::Memory(m) => m.pages.values().for_each(f),
            CorpusHandle::Disk(d) => {
                for (title, off, len) in &d.titles {
                    let bytes = d
                        .read_at(*off, *len)
                        .map_err(|e| Error::io(d.dir.join(PAGES_FILE), e))?;
                    let page: Page = serde_json::from_slice(&bytes).map_err(|e| {
                        Error::Invalid(format!("store page {title} is corrupt: {e}"))
                    })?;
                    f(&page);
                }
            }
        }
        Ok(())
    }

    pub fn line_count(&self) -> Result<usize> {
        let mut n = 0;
        self.for_each_page(|p| n += p.lines.len())?;
        Ok(n)
    }
}

impl From<MemoryStore> for CorpusHandle {
    fn from(m: MemoryStore) -> Self {
        CorpusHandle::Memory(m)
    }
}
