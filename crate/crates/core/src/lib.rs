//! Claim verification over an encyclopedia corpus.
//!
//! The pipeline retrieves candidate evidence sentences for each claim
//! ([`retrieval`]), classifies every sentence on its own against the claim
//! ([`entailment`]), folds the sentence verdicts into a claim label plus
//! submitted evidence ([`aggregation`]) and scores the result ([`scoring`]).
//! [`dataset`] emits entailment training sets from the same retrievals and
//! [`pipeline`] runs the stages end to end with resumable outputs.

pub mod aggregation;
pub mod claims;
pub mod corpus;
pub mod dataset;
pub mod entailment;
pub mod error;
pub mod jsonl;
pub mod labels;
pub mod pipeline;
pub mod retrieval;
pub mod scoring;
pub mod text;
pub mod tfidf;

pub use claims::{Claim, SentenceRef};
pub use error::{Error, Result};
pub use labels::{ClaimLabel, EntailmentLabel};
