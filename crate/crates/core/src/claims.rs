//! Claims and gold evidence, read from FEVER-format JSONL.

use std::collections::BTreeSet;
use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{Error, Result};
use crate::jsonl;
use crate::labels::ClaimLabel;

/// A sentence address: page raw title plus line number. Serialized as
/// `[page, line]`, the FEVER evidence convention.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(from = "(String, u32)", into = "(String, u32)")]
pub struct SentenceRef {
    pub page: String,
    pub line: u32,
}

impl SentenceRef {
    pub fn new(page: impl Into<String>, line: u32) -> Self {
        SentenceRef {
            page: page.into(),
            line,
        }
    }
}

impl From<(String, u32)> for SentenceRef {
    fn from((page, line): (String, u32)) -> Self {
        SentenceRef { page, line }
    }
}

impl From<SentenceRef> for (String, u32) {
    fn from(r: SentenceRef) -> Self {
        (r.page, r.line)
    }
}

impl fmt::Display for SentenceRef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.page, self.line)
    }
}

pub type EvidenceGroup = BTreeSet<SentenceRef>;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Claim {
    pub id: u64,
    pub text: String,
    pub gold_label: Option<ClaimLabel>,
    /// Alternative evidence sets; each one alone justifies the gold label.
    pub evidence_groups: Vec<EvidenceGroup>,
}

impl Claim {
    pub fn is_verifiable(&self) -> bool {
        matches!(self.gold_label, Some(l) if l.is_verifiable())
    }

    pub fn has_multi_sentence_group(&self) -> bool {
        self.evidence_groups.iter().any(|g| g.len() > 1)
    }

    pub fn has_singleton_group(&self) -> bool {
        self.evidence_groups.iter().any(|g| g.len() == 1)
    }

    pub fn singleton_sentences(&self) -> impl Iterator<Item = &SentenceRef> {
        self.evidence_groups
            .iter()
            .filter(|g| g.len() == 1)
            .flat_map(|g| g.iter())
    }

    pub fn in_any_group(&self, sentence: &SentenceRef) -> bool {
        self.evidence_groups.iter().any(|g| g.contains(sentence))
    }

    pub fn in_singleton_group(&self, sentence: &SentenceRef) -> bool {
        self.evidence_groups
            .iter()
            .any(|g| g.len() == 1 && g.contains(sentence))
    }

    /// Parses one FEVER claim object:
    /// `{"id", "claim", "label", "evidence": [[[ann, ev, page, line], ...], ...]}`.
    pub fn from_fever_value(value: &Value) -> Result<Claim> {
        let id = value
            .get("id")
            .and_then(Value::as_u64)
            .ok_or_else(|| Error::Invalid(format!("claim without integer id: {value}")))?;
        let text = value
            .get("claim")
            .and_then(Value::as_str)
            .ok_or_else(|| Error::Invalid(format!("claim {id} has no text")))?
            .to_string();
        let gold_label = match value.get("label").and_then(Value::as_str) {
            Some(s) => Some(s.parse()?),
            None => None,
        };

        let mut groups = BTreeSet::new();
        if let Some(Value::Array(raw_groups)) = value.get("evidence") {
            for raw_group in raw_groups {
                let mut group = EvidenceGroup::new();
                for item in raw_group.as_array().into_iter().flatten() {
                    let page = item.get(2).and_then(Value::as_str);
                    let line = item.get(3).and_then(Value::as_u64);
                    if let (Some(page), Some(line)) = (page, line) {
                        let line = u32::try_from(line).map_err(|_| {
                            Error::Invalid(format!("claim {id}: line number {line} out of range"))
                        })?;
                        group.insert(SentenceRef::new(page, line));
                    }
                }
                if !group.is_empty() {
                    groups.insert(group);
                }
            }
        }
        // Annotators repeat identical sets; keep one copy of each.
        let evidence_groups = if gold_label == Some(ClaimLabel::NotEnoughInfo) {
            Vec::new()
        } else {
            groups.into_iter().collect()
        };

        Ok(Claim {
            id,
            text,
            gold_label,
            evidence_groups,
        })
    }

    pub fn to_fever_value(&self) -> Value {
        let evidence: Vec<Value> = if self.evidence_groups.is_empty() {
            vec![serde_json::json!([[Value::Null, Value::Null, Value::Null, Value::Null]])]
        } else {
            self.evidence_groups
                .iter()
                .map(|g| {
                    Value::Array(
                        g.iter()
                            .map(|r| serde_json::json!([Value::Null, Value::Null, r.page, r.line]))
                            .collect(),
                    )
                })
                .collect()
        };
        let mut obj = serde_json::json!({
            "id": self.id,
            "claim": self.text,
            "evidence": evidence,
        });
        if let Some(label) = self.gold_label {
            obj["label"] = Value::String(label.as_str().into());
            obj["verifiable"] = Value::String(
                if label.is_verifiable() { "VERIFIABLE" } else { "NOT VERIFIABLE" }.into(),
            );
        }
        obj
    }
}

/// Loads a FEVER claims file. Claims come back sorted by id; duplicate ids are an error.
pub fn load_claims(path: &Path) -> Result<Vec<Claim>> {
    let values: Vec<Value> = jsonl::read_records(path)?;
    let mut claims = values
        .iter()
        .map(Claim::from_fever_value)
        .collect::<Result<Vec<_>>>()?;
    claims.sort_by_key(|c| c.id);
    if let Some(w) = claims.windows(2).find(|w| w[0].id == w[1].id) {
        return Err(Error::Invalid(format!("duplicate claim id {}", w[0].id)));
    }
    Ok(claims)
}
