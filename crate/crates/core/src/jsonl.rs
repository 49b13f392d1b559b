//! JSON-lines reading and writing shared by every stage.
//!
//! Files written by the orchestrator start with one header object keyed by
//! [`HEADER_KEY`]; readers skip it, so stage files stay consumable by tools
//! that only understand the plain record format once the first line is dropped.

use std::fs::{self, File};
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const HEADER_KEY: &str = "__feverpipe__";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StageHeader {
    pub stage: String,
    pub fingerprint: String,
    pub config: serde_json::Value,
}

fn is_header(line: &str) -> bool {
    line.trim_start()
        .strip_prefix('{')
        .map(|rest| rest.trim_start().starts_with(&format!("\"{HEADER_KEY}\"")))
        .unwrap_or(false)
}

/// Reads every record of a JSONL file, skipping blank lines and the header.
pub fn read_records<T: DeserializeOwned>(path: &Path) -> Result<Vec<T>> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut out = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() || is_header(&line) {
            continue;
        }
        let record = serde_json::from_str(&line).map_err(|source| Error::Json {
            path: path.to_path_buf(),
            line: i + 1,
            source,
        })?;
        out.push(record);
    }
    Ok(out)
}

/// Returns the header of a stage file, if the file exists and carries one.
pub fn read_header(path: &Path) -> Option<StageHeader> {
    let file = File::open(path).ok()?;
    let mut first = String::new();
    BufReader::new(file).read_line(&mut first).ok()?;
    if !is_header(&first) {
        return None;
    }
    let mut value: serde_json::Value = serde_json::from_str(&first).ok()?;
    serde_json::from_value(value.get_mut(HEADER_KEY)?.take()).ok()
}

/// Path of the in-progress file that [`JsonlWriter`] writes before commit.
pub fn partial_path(path: &Path) -> PathBuf {
    let mut name = path.file_name().unwrap_or_default().to_os_string();
    name.push(".partial");
    path.with_file_name(name)
}

/// Writes records to `<path>.partial` and renames onto `path` on commit.
/// A writer dropped without commit leaves the partial file behind.
pub struct JsonlWriter {
    target: PathBuf,
    partial: PathBuf,
    out: BufWriter<File>,
}

impl JsonlWriter {
    pub fn create(path: &Path, header: Option<&StageHeader>) -> Result<Self> {
        if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
            fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
        }
        let partial = partial_path(path);
        let file = File::create(&partial).map_err(|e| Error::io(&partial, e))?;
        let mut writer = JsonlWriter {
            target: path.to_path_buf(),
            partial,
            out: BufWriter::new(file),
        };
        if let Some(header) = header {
            let wrapped = serde_json::json!({ HEADER_KEY: header });
            writer.write_value(&wrapped)?;
        }
        Ok(writer)
    }

    fn write_value<T: Serialize + ?Sized>(&mut self, value: &T) -> Result<()> {
        serde_json::to_writer(&mut self.out, value).map_err(|e| {
            Error::io(&self.partial, std::io::Error::other(e))
        })?;
        self.out
            .write_all(b"\n")
            .map_err(|e| Error::io(&self.partial, e))
    }

    pub fn write<T: Serialize>(&mut self, record: &T) -> Result<()> {
        self.write_value(record)
    }

    pub fn commit(mut self) -> Result<()> {
        self.out.flush().map_err(|e| Error::io(&self.partial, e))?;
        fs::rename(&self.partial, &self.target).map_err(|e| Error::io(&self.target, e))
    }
}

/// Writes all records and commits in one call.
pub fn write_records<T: Serialize>(
    path: &Path,
    header: Option<&StageHeader>,
    records: &[T],
) -> Result<()> {
    let mut writer = JsonlWriter::create(path, header)?;
    for record in records {
        writer.write(record)?;
    }
    writer.commit()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn header_is_skipped_and_recoverable() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("out.jsonl");
        let header = StageHeader {
            stage: "retrieve".into(),
            fingerprint: "abc".into(),
            config: serde_json::json!({"k": 5}),
        };
        write_records(&path, Some(&header), &[serde_json::json!({"id": 1})]).unwrap();
        let records: Vec<serde_json::Value> = read_records(&path).unwrap();
        assert_eq!(records, vec![serde_json::json!({"id": 1})]);
        assert_eq!(read_header(&path), Some(header));
        assert!(!partial_path(&path).exists());
    }

    #[test]
    fn uncommitted_writer_leaves_partial() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("out.jsonl");
        {
            let mut w = JsonlWriter::create(&path, None).unwrap();
            w.write(&1u32).unwrap();
        }
        assert!(!path.exists());
        assert!(partial_path(&path).exists());
    }
}
