use feverpipe::aggregation::{aggregate, claim_label};
use feverpipe::claims::SentenceRef;
use feverpipe::entailment::SentenceVerdict;
use feverpipe::{ClaimLabel, EntailmentLabel};
use proptest::prelude::*;

const LABELS: [EntailmentLabel; 3] = [
    EntailmentLabel::Supports,
    EntailmentLabel::Refutes,
    EntailmentLabel::Neutral,
];

/// Every multiset of size 0..=4 over the three labels, as sorted vectors.
fn multisets() -> Vec<Vec<EntailmentLabel>> {
    fn extend(prefix: Vec<usize>, left: usize, out: &mut Vec<Vec<usize>>) {
        out.push(prefix.clone());
        if left == 0 {
            return;
        }
        let start = prefix.last().copied().unwrap_or(0);
        for i in start..3 {
            let mut next = prefix.clone();
            next.push(i);
            extend(next, left - 1, out);
        }
    }
    let mut out = Vec::new();
    extend(Vec::new(), 4, &mut out);
    out.into_iter()
        .map(|m| m.into_iter().map(|i| LABELS[i]).collect())
        .collect()
}

fn expected(labels: &[EntailmentLabel]) -> ClaimLabel {
    let s = labels.iter().filter(|l| **l == EntailmentLabel::Supports).count();
    let r = labels.iter().filter(|l| **l == EntailmentLabel::Refutes).count();
    if s > 0 {
        ClaimLabel::Supports
    } else if r > 0 {
        ClaimLabel::Refutes
    } else {
        ClaimLabel::NotEnoughInfo
    }
}

fn verdicts(labels: &[EntailmentLabel]) -> Vec<(SentenceRef, SentenceVerdict)> {
    labels
        .iter()
        .enumerate()
        .map(|(i, l)| (SentenceRef::new("Page", i as u32), SentenceVerdict::peaked(*l)))
        .collect()
}

#[test]
fn truth_table_over_all_small_multisets() {
    let all = multisets();
    // C(k + 2, 2) multisets of size k for k = 0..=4
    assert_eq!(all.len(), 1 + 3 + 6 + 10 + 15);
    for m in &all {
        assert_eq!(claim_label(m.iter().copied()), expected(m), "{m:?}");
        let sub = aggregate(1, &verdicts(m), None);
        assert_eq!(sub.predicted_label, expected(m), "{m:?}");
        let wanted = match sub.predicted_label {
            ClaimLabel::Supports => m.iter().filter(|l| **l == EntailmentLabel::Supports).count(),
            ClaimLabel::Refutes => m.iter().filter(|l| **l == EntailmentLabel::Refutes).count(),
            ClaimLabel::NotEnoughInfo => 0,
        };
        assert_eq!(sub.predicted_evidence.len(), wanted, "{m:?}");
    }
}

fn label_strategy() -> impl Strategy<Value = EntailmentLabel> {
    prop::sample::select(LABELS.to_vec())
}

proptest! {
    #[test]
    fn label_ignores_order(labels in prop::collection::vec(label_strategy(), 0..12).prop_shuffle()) {
        let mut sorted = labels.clone();
        sorted.sort();
        prop_assert_eq!(claim_label(labels), claim_label(sorted));
    }

    #[test]
    fn adding_support_yields_support(labels in prop::collection::vec(label_strategy(), 0..12)) {
        let mut more = labels;
        more.push(EntailmentLabel::Supports);
        prop_assert_eq!(claim_label(more), ClaimLabel::Supports);
    }

    #[test]
    fn adding_neutral_changes_nothing(labels in prop::collection::vec(label_strategy(), 0..12)) {
        let before = claim_label(labels.clone());
        let mut more = labels;
        more.push(EntailmentLabel::Neutral);
        prop_assert_eq!(claim_label(more), before);
    }

    #[test]
    fn submitted_evidence_agrees_with_label(
        labels in prop::collection::vec(label_strategy(), 0..12),
        cap in prop::option::of(1usize..4),
    ) {
        let v = verdicts(&labels);
        let sub = aggregate(9, &v, cap);
        for s in &sub.predicted_evidence {
            let verdict = &v.iter().find(|(r, _)| r == s).unwrap().1;
            prop_assert_eq!(ClaimLabel::from(verdict.label), sub.predicted_label);
        }
        if let Some(cap) = cap {
            prop_assert!(sub.predicted_evidence.len() <= cap);
        }
    }
}
