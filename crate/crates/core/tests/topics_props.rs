mod common;

use judgesim::topics::{fit_lda, perplexity, LdaConfig};

#[test]
fn perplexity_drops_with_second_topic_on_separable_corpus() {
    let dtm = common::disjoint_vocab_dtm(21, 20, 40);
    let cfg = |k| LdaConfig {
        topics: k,
        alpha: Some(0.1),
        iterations: 200,
        burn_in: 100,
        ..LdaConfig::default()
    };
    let one = perplexity(&fit_lda(&dtm, &cfg(1)).unwrap(), &dtm).unwrap();
    let two = perplexity(&fit_lda(&dtm, &cfg(2)).unwrap(), &dtm).unwrap();
    assert!(two <= one, "K=1 {one}, K=2 {two}");
    // Each half is 10 equiprobable words: K=2 should approach 10, K=1 20.
    assert!(
        (two - 10.0).abs() < 1.0 && (one - 20.0).abs() < 2.0,
        "{one} {two}"
    );
}

#[test]
fn seed_changes_assignments_not_shape() {
    let dtm = common::disjoint_vocab_dtm(22, 5, 20);
    let a = fit_lda(
        &dtm,
        &LdaConfig {
            topics: 3,
            seed: 1,
            ..LdaConfig::default()
        },
    )
    .unwrap();
    let b = fit_lda(
        &dtm,
        &LdaConfig {
            topics: 3,
            seed: 2,
            ..LdaConfig::default()
        },
    )
    .unwrap();
    assert_eq!(a.theta.len(), b.theta.len());
    assert_ne!(a.assignments, b.assignments);
}
