use hypostrat_bench::{all_strategies, mock_table, texts, ALL_POLICY};
use hypostrat_core::{parse_policy, split_quotes, Label};

#[test]
fn samples_cover_both_labels_and_quotes() {
    let p = all_strategies();
    let m = mock_table();
    let labels: Vec<Label> = texts().iter().map(|t| p.classify(t, &m).unwrap().label).collect();
    assert!(labels.contains(&Label::Hate));
    assert!(labels.contains(&Label::NotHate));
    let quoted = texts().iter().filter(|t| split_quotes(t, p.quote_pairs()).is_some()).count();
    assert_eq!(quoted, 3);
}

#[test]
fn bench_policy_parses() {
    let doc = parse_policy(ALL_POLICY).unwrap();
    assert!(doc.pipeline().is_ok());
}
