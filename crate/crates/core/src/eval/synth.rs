//! Clustered synthetic judgment corpora.
//!
//! Cases are split round-robin into clusters. Each cluster owns a pool of
//! statute articles, a set of cluster-specific words and its own feature
//! parameters (Bernoulli rates, Gaussian means, preferred categories), so
//! same-cluster cases share graph neighbors, topics and expert features.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::EvalError;
use crate::corpus::Judgment;
use crate::expert::{ExpertFeatureTable, FeatureKind, FeatureSchema, FeatureValue};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SynthConfig {
    pub n_cases: usize,
    pub n_articles: usize,
    pub n_clusters: usize,
    pub seed: u64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        Self {
            n_cases: 30,
            n_articles: 18,
            n_clusters: 3,
            seed: 42,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SynthOutput {
    pub corpus: Vec<Judgment>,
    pub features: ExpertFeatureTable,
    /// Cluster index of each case, aligned with `corpus`.
    pub clusters: Vec<usize>,
}

const COURTS: &[&str] = &[
    "Kaohsiung",
    "New Taipei",
    "Taichung",
    "Tainan",
    "Taipei",
    "Taoyuan",
];
const COMMON_WORDS: &[&str] = &[
    "support",
    "parent",
    "child",
    "living",
    "expense",
    "court",
    "plaintiff",
    "defendant",
    "claim",
    "payment",
    "ruling",
    "obligation",
];
const CLUSTER_WORDS: &[&str] = &[
    "income", "asset", "illness", "abuse", "divorce", "pension", "property", "labor", "subsidy",
    "medical", "custody", "sibling",
];
const MISSING_RATE: f64 = 0.03;

fn categories(name: &str) -> &'static [&'static str] {
    match name {
        "claimant_status" => &["father", "grandparent", "mother", "stepparent"],
        "claimant_gender" => &["female", "male"],
        _ => &["a", "b", "c"],
    }
}

enum FeatureParam {
    Rate(f64),
    Mean(f64),
    Prefer(usize),
}

pub fn synth_corpus(
    config: &SynthConfig,
    schema: &FeatureSchema,
) -> Result<SynthOutput, EvalError> {
    let bad = |m: &str| Err(EvalError::InvalidConfig(m.into()));
    if config.n_cases < 2 {
        return bad("n_cases must be >= 2");
    }
    if config.n_clusters == 0 || config.n_clusters > config.n_cases {
        return bad("n_clusters must be in 1..=n_cases");
    }
    if config.n_articles < config.n_clusters {
        return bad("n_articles must be >= n_clusters");
    }
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let k = config.n_clusters;

    let articles: Vec<String> = (0..config.n_articles)
        .map(|i| (1101 + i).to_string())
        .collect();
    let pools: Vec<Vec<&String>> = (0..k)
        .map(|c| articles.iter().skip(c).step_by(k).collect())
        .collect();

    let params: Vec<Vec<FeatureParam>> = (0..k)
        .map(|_| {
            schema
                .features()
                .iter()
                .map(|f| match f.kind {
                    FeatureKind::Boolean => {
                        FeatureParam::Rate(if rng.random_bool(0.5) { 0.85 } else { 0.15 })
                    }
                    FeatureKind::Numeric => FeatureParam::Mean(rng.random_range(0.0..1.0)),
                    FeatureKind::Categorical => {
                        FeatureParam::Prefer(rng.random_range(0..categories(&f.name).len()))
                    }
                })
                .collect()
        })
        .collect();
    let scales: Vec<f64> = schema
        .features()
        .iter()
        .map(|_| rng.random_range(10.0..50_000.0))
        .collect();
    let noise = Normal::new(0.0, 0.08).expect("valid normal");

    let width = config.n_cases.to_string().len().max(3);
    let mut corpus = Vec::with_capacity(config.n_cases);
    let mut rows = Vec::with_capacity(config.n_cases);
    let mut clusters = Vec::with_capacity(config.n_cases);
    for i in 0..config.n_cases {
        let c = i % k;
        let id = format!("case-{:0width$}", i + 1);

        let n_cited = rng.random_range(2..=4);
        let mut cited: Vec<String> = Vec::new();
        for _ in 0..n_cited {
            let pick = if rng.random_bool(0.85) {
                pools[c].choose(&mut rng).unwrap().to_string()
            } else {
                articles.choose(&mut rng).unwrap().clone()
            };
            if !cited.contains(&pick) {
                cited.push(pick);
            }
        }

        let len = rng.random_range(40..=80);
        let tokens: Vec<String> = (0..len)
            .map(|_| {
                if rng.random_bool(0.6) {
                    format!("k{c}_{}", CLUSTER_WORDS.choose(&mut rng).unwrap())
                } else {
                    COMMON_WORDS.choose(&mut rng).unwrap().to_string()
                }
            })
            .collect();

        let row: Vec<FeatureValue> = schema
            .features()
            .iter()
            .zip(&params[c])
            .zip(&scales)
            .map(|((f, param), &scale)| {
                if rng.random_bool(MISSING_RATE) {
                    return FeatureValue::Missing;
                }
                match param {
                    FeatureParam::Rate(p) => FeatureValue::Bool(rng.random_bool(*p)),
                    FeatureParam::Mean(m) => {
                        let x = (m + noise.sample(&mut rng)).clamp(0.0, 1.0);
                        FeatureValue::Real((x * scale * 100.0).round() / 100.0)
                    }
                    FeatureParam::Prefer(p) => {
                        let cats = categories(&f.name);
                        let idx = if rng.random_bool(0.8) {
                            *p
                        } else {
                            rng.random_range(0..cats.len())
                        };
                        FeatureValue::Category(cats[idx].to_owned())
                    }
                }
            })
            .collect();

        corpus.push(Judgment {
            id,
            year: rng.random_range(2013..=2018),
            court: COURTS.choose(&mut rng).unwrap().to_string(),
            text: Some(tokens.join(" ")),
            tokens: Some(tokens),
            articles: cited,
        });
        rows.push(row);
        clusters.push(c);
    }

    Ok(SynthOutput {
        features: ExpertFeatureTable {
            schema: schema.clone(),
            case_ids: corpus.iter().map(|j| j.id.clone()).collect(),
            rows,
        },
        corpus,
        clusters,
    })
}

impl SynthOutput {
    /// Writes `corpus.jsonl`, `features.csv` and `schema.json` into `dir`.
    pub fn write(&self, dir: impl AsRef<Path>) -> Result<(), EvalError> {
        let dir = dir.as_ref();
        std::fs::create_dir_all(dir)?;
        let mut w = BufWriter::new(File::create(dir.join("corpus.jsonl"))?);
        for j in &self.corpus {
            writeln!(w, "{}", serde_json::to_string(j)?)?;
        }
        w.flush()?;
        crate::expert::write_features(&self.features, dir.join("features.csv"))
            .map_err(|e| EvalError::Io(std::io::Error::other(e.to_string())))?;
        let schema = serde_json::to_string_pretty(&self.features.schema)?;
        std::fs::write(dir.join("schema.json"), schema + "\n")?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expert::{encode, expert_similarity};

    #[test]
    fn rejects_bad_config() {
        let s = FeatureSchema::bundled();
        let bad = SynthConfig {
            n_cases: 3,
            n_clusters: 4,
            ..SynthConfig::default()
        };
        assert!(synth_corpus(&bad, &s).is_err());
        let bad = SynthConfig {
            n_articles: 1,
            n_clusters: 2,
            ..SynthConfig::default()
        };
        assert!(synth_corpus(&bad, &s).is_err());
    }

    #[test]
    fn single_cluster_uses_one_pool() {
        let cfg = SynthConfig {
            n_clusters: 1,
            n_articles: 5,
            ..SynthConfig::default()
        };
        let out = synth_corpus(&cfg, &FeatureSchema::bundled()).unwrap();
        assert!(out.clusters.iter().all(|&c| c == 0));
        assert!(out
            .corpus
            .iter()
            .flat_map(|j| &j.articles)
            .all(|a| (1101..1106).contains(&a.parse::<i32>().unwrap())));
    }

    #[test]
    fn deterministic() {
        let s = FeatureSchema::bundled();
        let cfg = SynthConfig::default();
        assert_eq!(
            synth_corpus(&cfg, &s).unwrap(),
            synth_corpus(&cfg, &s).unwrap()
        );
    }

    #[test]
    fn articles_unique_per_case() {
        let out = synth_corpus(&SynthConfig::default(), &FeatureSchema::bundled()).unwrap();
        for j in &out.corpus {
            let mut a = j.articles.clone();
            a.sort();
            a.dedup();
            assert_eq!(a.len(), j.articles.len());
            assert!(!j.articles.is_empty());
        }
    }

    #[test]
    fn two_clusters_separate_in_expert_space() {
        let cfg = SynthConfig {
            n_cases: 40,
            n_clusters: 2,
            ..SynthConfig::default()
        };
        let out = synth_corpus(&cfg, &FeatureSchema::bundled()).unwrap();
        let sim = expert_similarity(&encode(&out.features).unwrap()).unwrap();
        let (mut within, mut between) = (Vec::new(), Vec::new());
        for i in 0..out.corpus.len() {
            for j in (i + 1)..out.corpus.len() {
                let s = sim.by_label(&out.corpus[i].id, &out.corpus[j].id).unwrap();
                if out.clusters[i] == out.clusters[j] {
                    within.push(s)
                } else {
                    between.push(s)
                }
            }
        }
        let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
        assert!(mean(&within) > mean(&between));
    }
}
