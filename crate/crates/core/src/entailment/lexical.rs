use std::collections::HashSet;

use super::{check_items, BatchOutcome, Classifier, ClassifyItem, SentenceVerdict};
use crate::error::Result;
use crate::labels::EntailmentLabel;
use crate::text::words;

const NEGATIONS: [&str; 6] = ["not", "never", "no", "refused", "incapable", "only"];
const MIN_OVERLAP: f64 = 0.5;

/// Deterministic word-overlap heuristic. A placeholder for a trained model,
/// useful for exercising the pipeline end to end.
///
/// Below half of the hypothesis words found in the premise the pair is
/// NEUTRAL. Otherwise it is REFUTES when exactly one side is negated, or when
/// the hypothesis names a number the premise does not while the premise names
/// some number; SUPPORTS in every other case.
#[derive(Debug, Clone, Copy, Default)]
pub struct LexicalBaseline;

fn is_negation(word: &str) -> bool {
    NEGATIONS.contains(&word) || word.ends_with("n't")
}

fn is_number(word: &str) -> bool {
    word.chars().next().is_some_and(|c| c.is_ascii_digit())
}

impl LexicalBaseline {
    pub fn verdict(premise: &str, hypothesis: &str) -> SentenceVerdict {
        let hyp: HashSet<String> = words(hypothesis).into_iter().collect();
        let prem: HashSet<String> = words(premise).into_iter().collect();
        if hyp.is_empty() {
            return SentenceVerdict::peaked(EntailmentLabel::Neutral);
        }
        let overlap = hyp.intersection(&prem).count() as f64 / hyp.len() as f64;
        if overlap < MIN_OVERLAP {
            return SentenceVerdict::peaked(EntailmentLabel::Neutral);
        }

        let negated = |set: &HashSet<String>| set.iter().any(|w| is_negation(w));
        let negation_mismatch = negated(&hyp) != negated(&prem);
        let premise_has_number = prem.iter().any(|w| is_number(w));
        let number_mismatch =
            premise_has_number && hyp.iter().any(|w| is_number(w) && !prem.contains(w));

        if negation_mismatch || number_mismatch {
            SentenceVerdict::peaked(EntailmentLabel::Refutes)
        } else {
            SentenceVerdict::peaked(EntailmentLabel::Supports)
        }
    }
}

impl Classifier for LexicalBaseline {
    fn classify_batch(&self, items: &[ClassifyItem<'_>]) -> Result<BatchOutcome> {
        check_items(items)?;
        Ok(BatchOutcome {
            verdicts: items
                .iter()
                .map(|i| Self::verdict(i.premise, i.hypothesis))
                .collect(),
            failed: 0,
            requests: 0,
        })
    }
}
