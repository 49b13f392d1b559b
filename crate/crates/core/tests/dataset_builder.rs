mod common;

use common::{fixture, fixture_claims, fixture_corpus};
use feverpipe::claims::Claim;
use feverpipe::corpus::display_title;
use feverpipe::dataset::{build, class_stats, DatasetVariant, VariantKind};
use feverpipe::jsonl::read_records;
use feverpipe::retrieval::RetrievalRecord;
use feverpipe::EntailmentLabel::{self, Neutral as N, Refutes as R, Supports as S};

const IDS: [u64; 7] = [1, 3, 11, 25, 26, 27, 28];

fn inputs() -> (Vec<Claim>, Vec<RetrievalRecord>) {
    let claims = fixture_claims().into_iter().filter(|c| IDS.contains(&c.id)).collect();
    let records = read_records(&fixture("retrievals.jsonl")).unwrap();
    (claims, records)
}

fn variant(kind: VariantKind, titled: bool) -> DatasetVariant {
    DatasetVariant { kind, titled }
}

#[test]
fn fever_one_matches_hand_count() {
    let (claims, records) = inputs();
    let corpus = fixture_corpus();
    let data = build(variant(VariantKind::One, true), &claims, &records, &corpus);

    let got: Vec<(u64, String, u32, EntailmentLabel)> = data
        .examples
        .iter()
        .map(|e| {
            let s = &e.provenance.evidence[0];
            (e.provenance.claim_id, s.page.clone(), s.line, e.label)
        })
        .collect();
    let want: Vec<(u64, String, u32, EntailmentLabel)> = [
        (1, "Ann_Richards", 0, N),
        (1, "Ann_Richards", 2, S),
        (1, "Ann_Richards", 3, N),
        (3, "Ann_Richards", 2, R),
        (3, "Ridley_Scott", 0, N),
        (11, "Marie_Curie", 1, N),
        (11, "Marie_Curie", 2, R),
        (11, "Marie_Curie", 4, R),
        (25, "Mercury_-LRB-planet-RRB-", 0, N),
        (28, "Ann_Richards", 0, N),
        (28, "Ann_Richards", 5, N),
    ]
    .into_iter()
    .map(|(c, p, l, lab)| (c, p.to_string(), l, lab))
    .collect();
    assert_eq!(got, want);

    assert_eq!(data.report.claims_seen, 7);
    assert_eq!(data.report.claims_dropped_multi_sentence, 2);
    assert_eq!(data.report.missing_candidates, 1);
    let stats = class_stats(&data.examples).unwrap();
    assert_eq!(stats.counts[&S], 1);
    assert_eq!(stats.counts[&R], 3);
    assert_eq!(stats.counts[&N], 7);
}

#[test]
fn fever_five_labels_by_claim() {
    let (claims, records) = inputs();
    let corpus = fixture_corpus();
    let five = build(variant(VariantKind::Five, true), &claims, &records, &corpus);
    let oracle = build(variant(VariantKind::FiveOracle, true), &claims, &records, &corpus);
    let ids: Vec<u64> = five.examples.iter().map(|e| e.provenance.claim_id).collect();
    assert_eq!(ids, [1, 3, 11, 25, 28]);
    let labels = |d: &feverpipe::dataset::Dataset| d.examples.iter().map(|e| e.label).collect::<Vec<_>>();
    assert_eq!(labels(&five), [S, R, R, N, N]);
    assert_eq!(labels(&oracle), [S, R, R, S, N]);
    assert_eq!(five.examples[1].provenance.evidence.len(), 2);
}

#[test]
fn titled_and_untitled_differ_only_in_prefix() {
    let (claims, records) = inputs();
    let corpus = fixture_corpus();
    for kind in [VariantKind::One, VariantKind::Five, VariantKind::FiveOracle] {
        let titled = build(variant(kind, true), &claims, &records, &corpus);
        let plain = build(variant(kind, false), &claims, &records, &corpus);
        assert_eq!(titled.examples.len(), plain.examples.len());
        assert_eq!(titled.report, plain.report);
        for (t, p) in titled.examples.iter().zip(&plain.examples) {
            assert_eq!((&t.hypothesis, t.label, &t.provenance), (&p.hypothesis, p.label, &p.provenance));
            let sentences: Vec<String> = t
                .provenance
                .evidence
                .iter()
                .map(|s| corpus.get_page(&s.page).unwrap().sentence(s.line).unwrap().to_string())
                .collect();
            let prefixed: Vec<String> = t
                .provenance
                .evidence
                .iter()
                .zip(&sentences)
                .map(|(s, text)| format!("[{}] {text}", display_title(&s.page)))
                .collect();
            assert_eq!(p.premise, sentences.join(" "));
            assert_eq!(t.premise, prefixed.join(" "));
        }
    }
}

#[test]
fn full_fixture_labels_are_sound() {
    let corpus = fixture_corpus();
    let claims = fixture_claims();
    let config = feverpipe::retrieval::RetrievalConfig::entire_articles();
    let index = feverpipe::retrieval::build_document_index(&corpus, true).unwrap();
    let records = feverpipe::retrieval::retrieve_all(&claims, &config, &index, &corpus).unwrap();
    let data = build(variant(VariantKind::One, true), &claims, &records, &corpus);
    for e in &data.examples {
        let claim = claims.iter().find(|c| c.id == e.provenance.claim_id).unwrap();
        assert!(!claim.has_multi_sentence_group() || !claim.is_verifiable());
        let s = &e.provenance.evidence[0];
        let expected = if claim.in_singleton_group(s) {
            EntailmentLabel::from(claim.gold_label.unwrap())
        } else {
            N
        };
        assert_eq!(e.label, expected, "claim {} {s:?}", claim.id);
    }
    assert_eq!(data.report.claims_dropped_multi_sentence, 2);
}
