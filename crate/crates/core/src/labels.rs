//! Claim-level and sentence-level label sets.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::Error;

/// Gold or predicted verdict for a whole claim.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum ClaimLabel {
    #[serde(rename = "SUPPORTS")]
    Supports,
    #[serde(rename = "REFUTES")]
    Refutes,
    #[serde(rename = "NOT ENOUGH INFO", alias = "NOT_ENOUGH_INFO")]
    NotEnoughInfo,
}

impl ClaimLabel {
    pub const ALL: [ClaimLabel; 3] = [
        ClaimLabel::Supports,
        ClaimLabel::Refutes,
        ClaimLabel::NotEnoughInfo,
    ];

    pub fn index(self) -> usize {
        match self {
            ClaimLabel::Supports => 0,
            ClaimLabel::Refutes => 1,
            ClaimLabel::NotEnoughInfo => 2,
        }
    }

    pub fn is_verifiable(self) -> bool {
        self != ClaimLabel::NotEnoughInfo
    }

    pub fn as_str(self) -> &'static str {
        match self {
            ClaimLabel::Supports => "SUPPORTS",
            ClaimLabel::Refutes => "REFUTES",
            ClaimLabel::NotEnoughInfo => "NOT ENOUGH INFO",
        }
    }
}

impl fmt::Display for ClaimLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ClaimLabel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_uppercase().replace('_', " ").as_str() {
            "SUPPORTS" => Ok(ClaimLabel::Supports),
            "REFUTES" => Ok(ClaimLabel::Refutes),
            "NOT ENOUGH INFO" => Ok(ClaimLabel::NotEnoughInfo),
            other => Err(Error::Invalid(format!("unknown claim label `{other}`"))),
        }
    }
}

/// Verdict of one premise sentence against a claim.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum EntailmentLabel {
    #[serde(rename = "SUPPORTS")]
    Supports,
    #[serde(rename = "REFUTES")]
    Refutes,
    #[serde(rename = "NEUTRAL")]
    Neutral,
}

impl EntailmentLabel {
    /// Order used for score vectors on the wire: `[S, R, N]`.
    pub const ALL: [EntailmentLabel; 3] = [
        EntailmentLabel::Supports,
        EntailmentLabel::Refutes,
        EntailmentLabel::Neutral,
    ];

    pub fn index(self) -> usize {
        match self {
            EntailmentLabel::Supports => 0,
            EntailmentLabel::Refutes => 1,
            EntailmentLabel::Neutral => 2,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            EntailmentLabel::Supports => "SUPPORTS",
            EntailmentLabel::Refutes => "REFUTES",
            EntailmentLabel::Neutral => "NEUTRAL",
        }
    }
}

impl fmt::Display for EntailmentLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl From<ClaimLabel> for EntailmentLabel {
    fn from(label: ClaimLabel) -> Self {
        match label {
            ClaimLabel::Supports => EntailmentLabel::Supports,
            ClaimLabel::Refutes => EntailmentLabel::Refutes,
            ClaimLabel::NotEnoughInfo => EntailmentLabel::Neutral,
        }
    }
}

impl From<EntailmentLabel> for ClaimLabel {
    fn from(label: EntailmentLabel) -> Self {
        match label {
            EntailmentLabel::Supports => ClaimLabel::Supports,
            EntailmentLabel::Refutes => ClaimLabel::Refutes,
            EntailmentLabel::Neutral => ClaimLabel::NotEnoughInfo,
        }
    }
}
