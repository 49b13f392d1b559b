use std::collections::{HashMap, HashSet};

use super::{check_items, BatchOutcome, Classifier, ClassifyItem, SentenceVerdict};
use crate::claims::{Claim, SentenceRef};
use crate::error::Result;
use crate::labels::{ClaimLabel, EntailmentLabel};

/// Labels a sentence with its claim's gold label when the sentence belongs to
/// any gold evidence group, NEUTRAL otherwise. Evaluation only.
#[derive(Debug, Clone, Default)]
pub struct OracleClassifier {
    gold: HashMap<u64, (ClaimLabel, HashSet<SentenceRef>)>,
}

impl OracleClassifier {
    pub fn new(claims: &[Claim]) -> Self {
        let gold = claims
            .iter()
            .filter_map(|c| {
                let label = c.gold_label?;
                let sentences = c.evidence_groups.iter().flatten().cloned().collect();
                Some((c.id, (label, sentences)))
            })
            .collect();
        OracleClassifier { gold }
    }

    fn label_for(&self, item: &ClassifyItem<'_>) -> EntailmentLabel {
        match self.gold.get(&item.claim_id) {
            Some((label, sentences))
                if label.is_verifiable()
                    && sentences.contains(&SentenceRef::new(item.page, item.line)) =>
            {
                (*label).into()
            }
            _ => EntailmentLabel::Neutral,
        }
    }
}

impl Classifier for OracleClassifier {
    fn classify_batch(&self, items: &[ClassifyItem<'_>]) -> Result<BatchOutcome> {
        check_items(items)?;
        Ok(BatchOutcome {
            verdicts: items
                .iter()
                .map(|i| SentenceVerdict::one_hot(self.label_for(i)))
                .collect(),
            failed: 0,
            requests: 0,
        })
    }
}
