//! Expert vs. embedding similarity comparison.

pub mod synth;

use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::sim::SimilarityMatrix;

pub use synth::{synth_corpus, SynthConfig, SynthOutput};

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("only {0} shared case(s); need at least 2")]
    InsufficientOverlap(usize),
    #[error("empty input")]
    EmptyInput,
    #[error("input is constant")]
    ConstantInput,
    #[error("length mismatch: {0} vs {1}")]
    LengthMismatch(usize, usize),
    #[error("need at least 3 values, got {0}")]
    TooShort(usize),
    #[error("tau must be > 0, got {0}")]
    InvalidTau(f64),
    #[error("invalid synthetic config: {0}")]
    InvalidConfig(String),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

/// One unordered case pair, `case_a < case_b`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairwiseComparison {
    pub case_a: String,
    pub case_b: String,
    pub sim_expert: f64,
    pub sim_embed: f64,
    pub abs_diff: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Alignment {
    pub pairs: Vec<PairwiseComparison>,
    /// Labels present in only one of the two matrices.
    pub dropped: Vec<String>,
}

pub fn align_pairs(
    expert: &SimilarityMatrix,
    embed: &SimilarityMatrix,
) -> Result<Alignment, EvalError> {
    let shared: Vec<&String> = expert
        .labels()
        .iter()
        .filter(|l| embed.index_of(l).is_some())
        .collect();
    if shared.len() < 2 {
        return Err(EvalError::InsufficientOverlap(shared.len()));
    }
    let mut dropped: Vec<String> = expert
        .labels()
        .iter()
        .chain(embed.labels())
        .filter(|l| expert.index_of(l).is_none() || embed.index_of(l).is_none())
        .cloned()
        .collect();
    dropped.sort();
    dropped.dedup();
    if !dropped.is_empty() {
        log::warn!(
            "{} case(s) present in only one matrix were dropped",
            dropped.len()
        );
    }

    let ex: Vec<usize> = shared.iter().map(|l| expert.index_of(l).unwrap()).collect();
    let em: Vec<usize> = shared.iter().map(|l| embed.index_of(l).unwrap()).collect();
    let mut pairs = Vec::with_capacity(shared.len() * (shared.len() - 1) / 2);
    for i in 0..shared.len() {
        for j in (i + 1)..shared.len() {
            let sim_expert = expert.get(ex[i], ex[j]);
            let sim_embed = embed.get(em[i], em[j]);
            pairs.push(PairwiseComparison {
                case_a: shared[i].clone(),
                case_b: shared[j].clone(),
                sim_expert,
                sim_embed,
                abs_diff: (sim_expert - sim_embed).abs(),
            });
        }
    }
    Ok(Alignment { pairs, dropped })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DescribeStats {
    pub count: usize,
    pub mean: f64,
    pub std: f64,
    pub min: f64,
    pub q25: f64,
    pub median: f64,
    pub q75: f64,
    pub max: f64,
}

/// Linear interpolation between order statistics of sorted data.
fn quantile(sorted: &[f64], p: f64) -> f64 {
    let h = (sorted.len() - 1) as f64 * p;
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(sorted.len() - 1);
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

/// Summary statistics with sample (n − 1) standard deviation. Sums run
/// over the sorted values, so any permutation of the input gives
/// bit-identical output.
pub fn describe(values: &[f64]) -> Result<DescribeStats, EvalError> {
    if values.is_empty() {
        return Err(EvalError::EmptyInput);
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len();
    let mean = sorted.iter().sum::<f64>() / n as f64;
    let std = if n > 1 {
        (sorted.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64).sqrt()
    } else {
        0.0
    };
    Ok(DescribeStats {
        count: n,
        mean,
        std,
        min: sorted[0],
        q25: quantile(&sorted, 0.25),
        median: quantile(&sorted, 0.5),
        q75: quantile(&sorted, 0.75),
        max: sorted[n - 1],
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Correlation {
    pub pearson: f64,
    pub spearman: f64,
}

fn pearson(a: &[f64], b: &[f64]) -> Result<f64, EvalError> {
    let n = a.len() as f64;
    let ma = a.iter().sum::<f64>() / n;
    let mb = b.iter().sum::<f64>() / n;
    let (mut sab, mut saa, mut sbb) = (0.0, 0.0, 0.0);
    for (x, y) in a.iter().zip(b) {
        let (dx, dy) = (x - ma, y - mb);
        sab += dx * dy;
        saa += dx * dx;
        sbb += dy * dy;
    }
    if saa == 0.0 || sbb == 0.0 {
        return Err(EvalError::ConstantInput);
    }
    Ok((sab / (saa.sqrt() * sbb.sqrt())).clamp(-1.0, 1.0))
}

/// 1-based ranks with ties given their average rank.
fn ranks(values: &[f64]) -> Vec<f64> {
    let mut idx: Vec<usize> = (0..values.len()).collect();
    idx.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut out = vec![0.0; values.len()];
    let mut i = 0;
    while i < idx.len() {
        let mut j = i;
        while j + 1 < idx.len() && values[idx[j + 1]] == values[idx[i]] {
            j += 1;
        }
        let avg = (i + j) as f64 / 2.0 + 1.0;
        for &k in &idx[i..=j] {
            out[k] = avg;
        }
        i = j + 1;
    }
    out
}

pub fn correlation(a: &[f64], b: &[f64]) -> Result<Correlation, EvalError> {
    if a.len() != b.len() {
        return Err(EvalError::LengthMismatch(a.len(), b.len()));
    }
    if a.len() < 3 {
        return Err(EvalError::TooShort(a.len()));
    }
    Ok(Correlation {
        pearson: pearson(a, b)?,
        spearman: pearson(&ranks(a), &ranks(b))?,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct ThresholdReport {
    pub tau: f64,
    pub pairs_below: Vec<PairwiseComparison>,
    pub fraction: f64,
}

/// Pairs whose similarity gap is strictly below `tau`, smallest gap first.
pub fn threshold_report(
    comparisons: &[PairwiseComparison],
    tau: f64,
) -> Result<ThresholdReport, EvalError> {
    if tau.is_nan() || tau <= 0.0 {
        return Err(EvalError::InvalidTau(tau));
    }
    let mut pairs_below: Vec<PairwiseComparison> = comparisons
        .iter()
        .filter(|c| c.abs_diff < tau)
        .cloned()
        .collect();
    pairs_below.sort_by(|x, y| {
        x.abs_diff
            .total_cmp(&y.abs_diff)
            .then_with(|| (&x.case_a, &x.case_b).cmp(&(&y.case_a, &y.case_b)))
    });
    let fraction = if comparisons.is_empty() {
        0.0
    } else {
        pairs_below.len() as f64 / comparisons.len() as f64
    };
    Ok(ThresholdReport {
        tau,
        pairs_below,
        fraction,
    })
}

pub fn write_comparisons(
    pairs: &[PairwiseComparison],
    path: impl AsRef<Path>,
) -> Result<(), EvalError> {
    let mut wtr = csv::Writer::from_path(path)?;
    wtr.write_record(["case_a", "case_b", "sim_expert", "sim_embed", "abs_diff"])?;
    for p in pairs {
        wtr.write_record([
            p.case_a.clone(),
            p.case_b.clone(),
            format!("{:.6}", p.sim_expert),
            format!("{:.6}", p.sim_embed),
            format!("{:.6}", p.abs_diff),
        ])?;
    }
    wtr.flush()?;
    Ok(())
}

pub fn read_comparisons(path: impl AsRef<Path>) -> Result<Vec<PairwiseComparison>, EvalError> {
    let mut rdr = csv::Reader::from_path(path)?;
    Ok(rdr.deserialize().collect::<Result<Vec<_>, _>>()?)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThresholdSummary {
    pub tau: f64,
    pub pairs_below: usize,
    pub fraction: f64,
}

/// Describe-statistics for both similarity columns and their gap.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonStats {
    pub n_pairs: usize,
    pub node2vec_similarity: DescribeStats,
    pub expert_similarity: DescribeStats,
    pub abs_diff: DescribeStats,
    pub correlation: Option<Correlation>,
    pub threshold: ThresholdSummary,
    pub dropped_cases: Vec<String>,
}

pub fn comparison_stats(alignment: &Alignment, tau: f64) -> Result<ComparisonStats, EvalError> {
    let pairs = &alignment.pairs;
    let col = |f: fn(&PairwiseComparison) -> f64| pairs.iter().map(f).collect::<Vec<_>>();
    let (embed, expert, diff) = (
        col(|p| p.sim_embed),
        col(|p| p.sim_expert),
        col(|p| p.abs_diff),
    );
    let correlation = match correlation(&expert, &embed) {
        Ok(c) => Some(c),
        Err(EvalError::ConstantInput | EvalError::TooShort(_)) => None,
        Err(e) => return Err(e),
    };
    let report = threshold_report(pairs, tau)?;
    Ok(ComparisonStats {
        n_pairs: pairs.len(),
        node2vec_similarity: describe(&embed)?,
        expert_similarity: describe(&expert)?,
        abs_diff: describe(&diff)?,
        correlation,
        threshold: ThresholdSummary {
            tau,
            pairs_below: report.pairs_below.len(),
            fraction: report.fraction,
        },
        dropped_cases: alignment.dropped.clone(),
    })
}
