#![allow(dead_code)]

use judgesim::corpus::{self, DocTermMatrix, Judgment, TokenizerMode};
use judgesim::embed::{self, Node2vecConfig, WalkGraph};
use judgesim::eval::{synth_corpus, SynthConfig, SynthOutput};
use judgesim::expert::FeatureSchema;
use judgesim::graph::{self, GraphOptions};
use judgesim::sim::{self, SimilarityMatrix};
use judgesim::topics::{self, LdaConfig};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn fixture_dir() -> std::path::PathBuf {
    std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures/synth30")
}

/// Two 6-cliques `a0..a5`, `b0..b5` joined by the bridge `a5–b0`.
pub fn two_cliques() -> (WalkGraph, Vec<String>, Vec<String>) {
    let a: Vec<String> = (0..6).map(|i| format!("a{i}")).collect();
    let b: Vec<String> = (0..6).map(|i| format!("b{i}")).collect();
    let mut edges = Vec::new();
    for side in [&a, &b] {
        for i in 0..6 {
            for j in (i + 1)..6 {
                edges.push((side[i].clone(), side[j].clone(), 1.0));
            }
        }
    }
    edges.push((a[5].clone(), b[0].clone(), 1.0));
    let nodes: Vec<String> = a.iter().chain(&b).cloned().collect();
    (WalkGraph::new(&nodes, &edges), a, b)
}

pub fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

/// Mean cosine within groups minus mean cosine across groups.
pub fn group_margin(m: &SimilarityMatrix, groups: &[Vec<String>]) -> f64 {
    let (mut intra, mut inter) = (Vec::new(), Vec::new());
    for (gi, g) in groups.iter().enumerate() {
        for (hi, h) in groups.iter().enumerate().skip(gi) {
            for (x, a) in g.iter().enumerate() {
                for (y, b) in h.iter().enumerate() {
                    if gi == hi && y <= x {
                        continue;
                    }
                    let s = m.by_label(a, b).unwrap();
                    if gi == hi {
                        intra.push(s)
                    } else {
                        inter.push(s)
                    }
                }
            }
        }
    }
    mean(&intra) - mean(&inter)
}

/// `docs_per_half` documents over `a0..a9` followed by as many over
/// `b0..b9`, each of `len` uniformly drawn tokens.
pub fn disjoint_vocab_dtm(seed: u64, docs_per_half: usize, len: usize) -> DocTermMatrix {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let corpus: Vec<Judgment> = (0..2 * docs_per_half)
        .map(|d| {
            let half = if d < docs_per_half { 'a' } else { 'b' };
            let tokens = (0..len)
                .map(|_| format!("{half}{}", rng.random_range(0..10)))
                .collect();
            Judgment {
                id: format!("d{d:03}"),
                year: 2000,
                court: "x".into(),
                text: None,
                tokens: Some(tokens),
                articles: Vec::new(),
            }
        })
        .collect();
    corpus::build_dtm(&corpus, TokenizerMode::Pretokenized, 1).unwrap()
}

/// Synthetic clustered corpus pushed through ingest → LDA → graph →
/// judgment2vec with default settings; returns the case cosine matrix.
pub fn clustered_case_similarity(seed: u64) -> (SynthOutput, SimilarityMatrix) {
    let cfg = SynthConfig {
        seed,
        ..SynthConfig::default()
    };
    let synth = synth_corpus(&cfg, &FeatureSchema::bundled()).unwrap();
    let dtm = corpus::build_dtm(&synth.corpus, TokenizerMode::Pretokenized, 1).unwrap();
    let weights = corpus::tfidf_transform(&dtm);
    let dtm = corpus::filter_vocabulary(&dtm, &weights, dtm.n_terms().min(500)).unwrap();
    let model = topics::fit_lda(
        &dtm,
        &LdaConfig {
            seed,
            ..LdaConfig::default()
        },
    )
    .unwrap();
    let assignment = topics::assign_topics(&model, 0.2);
    let (g, _) =
        graph::build_graph(&synth.corpus, Some(&assignment), &GraphOptions::default()).unwrap();
    let vectors = embed::judgment2vec(
        &g,
        &Node2vecConfig {
            seed,
            ..Node2vecConfig::default()
        },
    )
    .unwrap();
    let rows: Vec<(&str, &[f64])> = vectors.rows().collect();
    (synth, sim::similarity_matrix(&rows).unwrap())
}

pub fn cluster_groups(synth: &SynthOutput) -> Vec<Vec<String>> {
    let k = synth.clusters.iter().max().unwrap() + 1;
    let mut groups = vec![Vec::new(); k];
    for (j, &c) in synth.corpus.iter().zip(&synth.clusters) {
        groups[c].push(j.id.clone());
    }
    groups
}
