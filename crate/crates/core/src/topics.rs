//! Latent Dirichlet allocation by collapsed Gibbs sampling.
//!
//! The sampler draws each token's topic from
//! `(n_dk + α)(n_kw + β) / (n_k + Vβ)` with the token itself removed from
//! the counts. `phi` and `theta` are posterior means averaged over every
//! sweep after burn-in.

use std::fmt::Write as _;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::DocTermMatrix;

#[derive(Debug, Error)]
pub enum TopicError {
    #[error("document-term matrix has no tokens")]
    EmptyMatrix,
    #[error("K = {k} exceeds vocabulary size {vocab}")]
    KTooLarge { k: usize, vocab: usize },
    #[error("invalid LDA config: {0}")]
    InvalidConfig(String),
    #[error("n = {n} outside 1..={vocab}")]
    InvalidN { n: usize, vocab: usize },
    #[error("model and matrix vocabularies differ")]
    VocabMismatch,
    #[error("model and matrix documents differ")]
    DocMismatch,
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("model file: {0}")]
    Format(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LdaConfig {
    pub topics: usize,
    /// Symmetric document-topic prior; `None` means `50 / topics`.
    pub alpha: Option<f64>,
    pub beta: f64,
    pub iterations: usize,
    pub burn_in: usize,
    pub seed: u64,
}

impl Default for LdaConfig {
    fn default() -> Self {
        Self {
            topics: 8,
            alpha: None,
            beta: 0.01,
            iterations: 500,
            burn_in: 250,
            seed: 42,
        }
    }
}

impl LdaConfig {
    pub fn alpha(&self) -> f64 {
        self.alpha.unwrap_or(50.0 / self.topics as f64)
    }

    pub fn validate(&self) -> Result<(), TopicError> {
        let bad = |m: &str| Err(TopicError::InvalidConfig(m.into()));
        if self.topics == 0 {
            return bad("topics must be >= 1");
        }
        if self.alpha().is_nan() || self.alpha() <= 0.0 {
            return bad("alpha must be > 0");
        }
        if self.beta.is_nan() || self.beta <= 0.0 {
            return bad("beta must be > 0");
        }
        if self.iterations == 0 {
            return bad("iterations must be >= 1");
        }
        if self.burn_in >= self.iterations {
            return bad("burn_in must be < iterations");
        }
        Ok(())
    }
}

/// Sampler count tables, exposed to sweep observers.
pub struct GibbsCounts {
    topics: usize,
    vocab: usize,
    doc_topic: Vec<u32>,
    topic_word: Vec<u32>,
    topic_total: Vec<u32>,
    doc_len: Vec<u32>,
}

impl GibbsCounts {
    pub fn doc_topic(&self, d: usize, k: usize) -> u32 {
        self.doc_topic[d * self.topics + k]
    }

    pub fn topic_word(&self, k: usize, w: usize) -> u32 {
        self.topic_word[k * self.vocab + w]
    }

    pub fn topic_total(&self, k: usize) -> u32 {
        self.topic_total[k]
    }

    pub fn doc_len(&self, d: usize) -> u32 {
        self.doc_len[d]
    }

    pub fn n_topics(&self) -> usize {
        self.topics
    }

    pub fn n_docs(&self) -> usize {
        self.doc_len.len()
    }

    pub fn n_terms(&self) -> usize {
        self.vocab
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TopicModel {
    pub config: LdaConfig,
    pub terms: Vec<String>,
    pub doc_ids: Vec<String>,
    /// K × V topic-word distribution.
    pub phi: Vec<Vec<f64>>,
    /// D × K document-topic distribution.
    pub theta: Vec<Vec<f64>>,
    /// Final topic label of every token, per document, tokens expanded in
    /// column order.
    pub assignments: Vec<Vec<usize>>,
}

impl TopicModel {
    pub fn n_topics(&self) -> usize {
        self.phi.len()
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<(), TopicError> {
        let json =
            serde_json::to_string_pretty(self).map_err(|e| TopicError::Format(e.to_string()))?;
        std::fs::write(path, json)?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, TopicError> {
        let text = std::fs::read_to_string(path)?;
        serde_json::from_str(&text).map_err(|e| TopicError::Format(e.to_string()))
    }
}

pub fn fit_lda(dtm: &DocTermMatrix, config: &LdaConfig) -> Result<TopicModel, TopicError> {
    fit_lda_observed(dtm, config, |_, _| {})
}

/// Like [`fit_lda`], calling `observer(sweep, counts)` after every sweep
/// (sweeps numbered from 1).
pub fn fit_lda_observed(
    dtm: &DocTermMatrix,
    config: &LdaConfig,
    mut observer: impl FnMut(usize, &GibbsCounts),
) -> Result<TopicModel, TopicError> {
    config.validate()?;
    let (n_docs, vocab, k) = (dtm.n_docs(), dtm.n_terms(), config.topics);
    if dtm.total_tokens() == 0 {
        return Err(TopicError::EmptyMatrix);
    }
    if k > vocab {
        return Err(TopicError::KTooLarge { k, vocab });
    }
    let alpha = config.alpha();
    let beta = config.beta;
    let v_beta = vocab as f64 * beta;

    let docs: Vec<Vec<usize>> = dtm
        .rows
        .iter()
        .map(|row| {
            row.iter()
                .flat_map(|&(w, c)| std::iter::repeat_n(w, c as usize))
                .collect()
        })
        .collect();

    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut counts = GibbsCounts {
        topics: k,
        vocab,
        doc_topic: vec![0; n_docs * k],
        topic_word: vec![0; k * vocab],
        topic_total: vec![0; k],
        doc_len: docs.iter().map(|d| d.len() as u32).collect(),
    };
    let mut z: Vec<Vec<usize>> = Vec::with_capacity(n_docs);
    for (d, words) in docs.iter().enumerate() {
        let labels: Vec<usize> = words.iter().map(|_| rng.random_range(0..k)).collect();
        for (&w, &t) in words.iter().zip(&labels) {
            counts.doc_topic[d * k + t] += 1;
            counts.topic_word[t * vocab + w] += 1;
            counts.topic_total[t] += 1;
        }
        z.push(labels);
    }

    let mut phi_sum = vec![0.0; k * vocab];
    let mut theta_sum = vec![0.0; n_docs * k];
    let mut samples = 0usize;
    let mut weights = vec![0.0; k];

    for sweep in 1..=config.iterations {
        for (d, words) in docs.iter().enumerate() {
            for (i, &w) in words.iter().enumerate() {
                let old = z[d][i];
                counts.doc_topic[d * k + old] -= 1;
                counts.topic_word[old * vocab + w] -= 1;
                counts.topic_total[old] -= 1;

                let mut total = 0.0;
                for (t, slot) in weights.iter_mut().enumerate() {
                    let p = (counts.doc_topic[d * k + t] as f64 + alpha)
                        * (counts.topic_word[t * vocab + w] as f64 + beta)
                        / (counts.topic_total[t] as f64 + v_beta);
                    total += p;
                    *slot = total;
                }
                let u = rng.random::<f64>() * total;
                let new = weights.iter().position(|&c| u < c).unwrap_or(k - 1);

                z[d][i] = new;
                counts.doc_topic[d * k + new] += 1;
                counts.topic_word[new * vocab + w] += 1;
                counts.topic_total[new] += 1;
            }
        }

        if sweep > config.burn_in {
            samples += 1;
            for t in 0..k {
                let denom = counts.topic_total[t] as f64 + v_beta;
                for w in 0..vocab {
                    phi_sum[t * vocab + w] +=
                        (counts.topic_word[t * vocab + w] as f64 + beta) / denom;
                }
            }
            for d in 0..n_docs {
                let denom = counts.doc_len[d] as f64 + k as f64 * alpha;
                for t in 0..k {
                    theta_sum[d * k + t] += (counts.doc_topic[d * k + t] as f64 + alpha) / denom;
                }
            }
        }
        observer(sweep, &counts);
    }

    let s = samples as f64;
    Ok(TopicModel {
        config: LdaConfig {
            alpha: Some(alpha),
            ..config.clone()
        },
        terms: dtm.vocab.terms.clone(),
        doc_ids: dtm.doc_ids.clone(),
        phi: phi_sum
            .chunks(vocab)
            .map(|r| r.iter().map(|x| x / s).collect())
            .collect(),
        theta: theta_sum
            .chunks(k)
            .map(|r| r.iter().map(|x| x / s).collect())
            .collect(),
        assignments: z,
    })
}

/// The `n` highest-probability terms of every topic, ties lexicographic.
pub fn top_words(model: &TopicModel, n: usize) -> Result<Vec<Vec<(String, f64)>>, TopicError> {
    let vocab = model.terms.len();
    if n == 0 || n > vocab {
        return Err(TopicError::InvalidN { n, vocab });
    }
    Ok(model
        .phi
        .iter()
        .map(|row| {
            let mut idx: Vec<usize> = (0..vocab).collect();
            idx.sort_by(|&a, &b| {
                row[b]
                    .total_cmp(&row[a])
                    .then_with(|| model.terms[a].cmp(&model.terms[b]))
            });
            idx.into_iter()
                .take(n)
                .map(|w| (model.terms[w].clone(), row[w]))
                .collect()
        })
        .collect())
}

pub fn top_words_report(words: &[Vec<(String, f64)>]) -> String {
    let mut out = String::new();
    for (k, list) in words.iter().enumerate() {
        let _ = writeln!(out, "topic {k}");
        for (term, p) in list {
            let _ = writeln!(out, "  {term}\t{p:.6}");
        }
        out.push('\n');
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TopicEdge {
    pub case_id: String,
    pub topic: usize,
    pub weight: f64,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct TopicAssignment {
    pub edges: Vec<TopicEdge>,
}

impl TopicAssignment {
    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<(), TopicError> {
        let mut wtr =
            csv::Writer::from_path(path).map_err(|e| TopicError::Format(e.to_string()))?;
        for e in &self.edges {
            wtr.serialize(e)
                .map_err(|e| TopicError::Format(e.to_string()))?;
        }
        wtr.flush()?;
        Ok(())
    }

    pub fn read_csv(path: impl AsRef<Path>) -> Result<Self, TopicError> {
        let mut rdr =
            csv::Reader::from_path(path).map_err(|e| TopicError::Format(e.to_string()))?;
        let edges = rdr
            .deserialize()
            .collect::<Result<Vec<TopicEdge>, _>>()
            .map_err(|e| TopicError::Format(e.to_string()))?;
        Ok(Self { edges })
    }
}

/// Links each document to every topic with `θ_dk ≥ threshold`, falling
/// back to its argmax topic (lowest index on ties) when none qualify.
pub fn assign_topics(model: &TopicModel, threshold: f64) -> TopicAssignment {
    let mut edges = Vec::new();
    for (id, row) in model.doc_ids.iter().zip(&model.theta) {
        let before = edges.len();
        for (k, &w) in row.iter().enumerate() {
            if w >= threshold {
                edges.push(TopicEdge {
                    case_id: id.clone(),
                    topic: k,
                    weight: w,
                });
            }
        }
        if edges.len() == before {
            let (k, &w) = row
                .iter()
                .enumerate()
                .fold(None, |best: Option<(usize, &f64)>, (k, w)| match best {
                    Some((_, bw)) if *w <= *bw => best,
                    _ => Some((k, w)),
                })
                .expect("theta row is non-empty");
            edges.push(TopicEdge {
                case_id: id.clone(),
                topic: k,
                weight: w,
            });
        }
    }
    TopicAssignment { edges }
}

/// `exp(-Σ count · ln Σ_k θ_dk φ_kw / N)` over the model's own documents.
pub fn perplexity(model: &TopicModel, dtm: &DocTermMatrix) -> Result<f64, TopicError> {
    if model.terms != dtm.vocab.terms {
        return Err(TopicError::VocabMismatch);
    }
    if model.doc_ids != dtm.doc_ids {
        return Err(TopicError::DocMismatch);
    }
    let mut log_lik = 0.0;
    let mut n = 0u64;
    for (d, row) in dtm.rows.iter().enumerate() {
        for &(w, c) in row {
            let p: f64 = (0..model.n_topics())
                .map(|k| model.theta[d][k] * model.phi[k][w])
                .sum();
            log_lik += c as f64 * p.ln();
            n += c as u64;
        }
    }
    if n == 0 {
        return Err(TopicError::EmptyMatrix);
    }
    Ok((-log_lik / n as f64).exp())
}
