//! Skip-gram with negative sampling over walk sequences.
//!
//! For a center input vector `v`, a positive output vector `u₀` and
//! negative output vectors `u₁..u_k`, the loss is
//! `-ln σ(u₀·v) - Σ ln σ(-uᵢ·v)`. Writing `gᵢ = σ(uᵢ·v) - yᵢ` with `y₀ = 1`
//! and `yᵢ = 0` otherwise, `∂L/∂v = Σ gᵢ uᵢ` and `∂L/∂uᵢ = gᵢ v`.

use std::sync::atomic::{AtomicU64, AtomicUsize, Ordering};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::alias::AliasTable;
use super::walk::WalkCorpus;

fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// `-ln σ(x)`, stable for large |x|.
fn neg_log_sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        (-x).exp().ln_1p()
    } else {
        -x + x.exp().ln_1p()
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Loss of one (center, positive, negatives) example and the gradient
/// coefficients `gᵢ`, positive first.
pub fn sgns_terms(
    center: &[f64],
    positive: &[f64],
    negatives: &[&[f64]],
    coeffs: &mut Vec<f64>,
) -> f64 {
    coeffs.clear();
    let s = dot(positive, center);
    let mut loss = neg_log_sigmoid(s);
    coeffs.push(sigmoid(s) - 1.0);
    for n in negatives {
        let s = dot(n, center);
        loss += neg_log_sigmoid(-s);
        coeffs.push(sigmoid(s));
    }
    loss
}

pub fn sgns_loss(center: &[f64], positive: &[f64], negatives: &[&[f64]]) -> f64 {
    sgns_terms(center, positive, negatives, &mut Vec::new())
}

#[derive(Debug, Clone, PartialEq)]
pub struct SgnsGradient {
    pub center: Vec<f64>,
    pub positive: Vec<f64>,
    pub negatives: Vec<Vec<f64>>,
}

pub fn sgns_gradient(center: &[f64], positive: &[f64], negatives: &[&[f64]]) -> SgnsGradient {
    let mut g = Vec::new();
    sgns_terms(center, positive, negatives, &mut g);
    let outputs: Vec<&[f64]> = std::iter::once(positive)
        .chain(negatives.iter().copied())
        .collect();
    let mut d_center = vec![0.0; center.len()];
    for (gi, u) in g.iter().zip(&outputs) {
        for (d, x) in d_center.iter_mut().zip(*u) {
            *d += gi * x;
        }
    }
    let scaled = |gi: f64| center.iter().map(|x| gi * x).collect::<Vec<_>>();
    SgnsGradient {
        center: d_center,
        positive: scaled(g[0]),
        negatives: g[1..].iter().map(|&gi| scaled(gi)).collect(),
    }
}

/// Row storage the trainer reads and updates.
trait Rows {
    fn read(&self, row: usize, out: &mut [f64]);
    fn add_scaled(&mut self, row: usize, x: &[f64], scale: f64);
}

struct Dense<'a> {
    data: &'a mut [f64],
    dim: usize,
}

impl Rows for Dense<'_> {
    fn read(&self, row: usize, out: &mut [f64]) {
        out.copy_from_slice(&self.data[row * self.dim..(row + 1) * self.dim]);
    }

    fn add_scaled(&mut self, row: usize, x: &[f64], scale: f64) {
        for (d, v) in self.data[row * self.dim..(row + 1) * self.dim]
            .iter_mut()
            .zip(x)
        {
            *d += scale * v;
        }
    }
}

/// Lock-free shared rows; concurrent writers may overwrite each other.
#[derive(Clone, Copy)]
struct Shared<'a> {
    data: &'a [AtomicU64],
    dim: usize,
}

impl Rows for Shared<'_> {
    fn read(&self, row: usize, out: &mut [f64]) {
        for (o, a) in out
            .iter_mut()
            .zip(&self.data[row * self.dim..(row + 1) * self.dim])
        {
            *o = f64::from_bits(a.load(Ordering::Relaxed));
        }
    }

    fn add_scaled(&mut self, row: usize, x: &[f64], scale: f64) {
        for (a, v) in self.data[row * self.dim..(row + 1) * self.dim]
            .iter()
            .zip(x)
        {
            let cur = f64::from_bits(a.load(Ordering::Relaxed));
            a.store((cur + scale * v).to_bits(), Ordering::Relaxed);
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SgnsParams {
    pub dim: usize,
    pub window: usize,
    pub negatives: usize,
    pub epochs: usize,
    pub learning_rate: f64,
    pub seed: u64,
    pub parallel: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainOutput {
    /// Row-major `ids.len() × dim` input vectors.
    pub input: Vec<f64>,
    /// Mean per-example loss of each epoch.
    pub epoch_losses: Vec<f64>,
}

struct Scratch {
    center: Vec<f64>,
    outputs: Vec<Vec<f64>>,
    delta: Vec<f64>,
    coeffs: Vec<f64>,
    targets: Vec<usize>,
}

impl Scratch {
    fn new(dim: usize, negatives: usize) -> Self {
        Self {
            center: vec![0.0; dim],
            outputs: vec![vec![0.0; dim]; negatives + 1],
            delta: vec![0.0; dim],
            coeffs: Vec::with_capacity(negatives + 1),
            targets: Vec::with_capacity(negatives + 1),
        }
    }
}

/// One positive pair plus its negatives; returns the example loss.
#[allow(clippy::too_many_arguments)]
fn train_pair<I: Rows, O: Rows>(
    input: &mut I,
    output: &mut O,
    center: usize,
    context: usize,
    negatives: usize,
    noise: &AliasTable,
    rng: &mut ChaCha8Rng,
    lr: f64,
    s: &mut Scratch,
) -> f64 {
    s.targets.clear();
    s.targets.push(context);
    for _ in 0..negatives {
        let n = noise.sample(rng);
        if n != context {
            s.targets.push(n);
        }
    }
    input.read(center, &mut s.center);
    for (slot, &t) in s.outputs.iter_mut().zip(&s.targets) {
        output.read(t, slot);
    }
    let used = s.targets.len();
    let negs: Vec<&[f64]> = s.outputs[1..used].iter().map(Vec::as_slice).collect();
    let loss = sgns_terms(&s.center, &s.outputs[0], &negs, &mut s.coeffs);

    s.delta.iter_mut().for_each(|d| *d = 0.0);
    for (g, u) in s.coeffs.iter().zip(&s.outputs[..used]) {
        for (d, x) in s.delta.iter_mut().zip(u) {
            *d += g * x;
        }
    }
    for (&g, &t) in s.coeffs.iter().zip(&s.targets) {
        output.add_scaled(t, &s.center, -lr * g);
    }
    input.add_scaled(center, &s.delta, -lr);
    loss
}

fn pairs_in_walk(len: usize, window: usize) -> usize {
    (0..len)
        .map(|i| i.min(window) + (len - 1 - i).min(window))
        .sum()
}

#[allow(clippy::too_many_arguments)]
fn train_walk<I: Rows, O: Rows>(
    walk: &[usize],
    input: &mut I,
    output: &mut O,
    params: &SgnsParams,
    noise: &AliasTable,
    rng: &mut ChaCha8Rng,
    lr_at: impl Fn(usize) -> f64,
    step: &mut usize,
    s: &mut Scratch,
) -> f64 {
    let mut loss = 0.0;
    for (i, &center) in walk.iter().enumerate() {
        let lo = i.saturating_sub(params.window);
        let hi = (i + params.window + 1).min(walk.len());
        for (j, &context) in walk.iter().enumerate().take(hi).skip(lo) {
            if j == i {
                continue;
            }
            loss += train_pair(
                input,
                output,
                center,
                context,
                params.negatives,
                noise,
                rng,
                lr_at(*step),
                s,
            );
            *step += 1;
        }
    }
    loss
}

/// Trains input vectors for every id in `walks.ids`. Returns `None` when
/// the walks contain no (center, context) pair.
pub fn train(walks: &WalkCorpus, params: &SgnsParams) -> Option<TrainOutput> {
    let n = walks.ids.len();
    let dim = params.dim;
    let mut counts = vec![0.0f64; n];
    for w in &walks.walks {
        for &node in w {
            counts[node] += 1.0;
        }
    }
    let noise = AliasTable::new(&counts.iter().map(|c| c.powf(0.75)).collect::<Vec<_>>())?;

    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let bound = 0.5 / dim as f64;
    let mut input: Vec<f64> = (0..n * dim)
        .map(|_| rng.random_range(-bound..bound))
        .collect();
    let mut output = vec![0.0; n * dim];

    let pairs_per_epoch: usize = walks
        .walks
        .iter()
        .map(|w| pairs_in_walk(w.len(), params.window))
        .sum();
    if pairs_per_epoch == 0 {
        return Some(TrainOutput {
            input,
            epoch_losses: Vec::new(),
        });
    }
    let total = (pairs_per_epoch * params.epochs) as f64;
    let lr0 = params.learning_rate;
    let lr_at = |step: usize| lr0 - (lr0 - lr0 / 100.0) * (step as f64 / total).min(1.0);

    let mut epoch_losses = Vec::with_capacity(params.epochs);
    if !params.parallel {
        let mut s = Scratch::new(dim, params.negatives);
        let mut step = 0;
        let mut in_rows = Dense {
            data: &mut input,
            dim,
        };
        let mut out_rows = Dense {
            data: &mut output,
            dim,
        };
        for _ in 0..params.epochs {
            let mut loss = 0.0;
            for walk in &walks.walks {
                loss += train_walk(
                    walk,
                    &mut in_rows,
                    &mut out_rows,
                    params,
                    &noise,
                    &mut rng,
                    lr_at,
                    &mut step,
                    &mut s,
                );
            }
            epoch_losses.push(loss / pairs_per_epoch as f64);
        }
        return Some(TrainOutput {
            input,
            epoch_losses,
        });
    }

    let shared_in: Vec<AtomicU64> = input.iter().map(|x| AtomicU64::new(x.to_bits())).collect();
    let shared_out: Vec<AtomicU64> = output.iter().map(|x| AtomicU64::new(x.to_bits())).collect();
    let progress = AtomicUsize::new(0);
    let chunk = walks
        .walks
        .len()
        .div_ceil(rayon::current_num_threads().max(1));
    for epoch in 0..params.epochs {
        let loss: f64 = walks
            .walks
            .par_chunks(chunk.max(1))
            .enumerate()
            .map(|(c, batch)| {
                let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
                rng.set_stream(((epoch as u64) << 32) | (c as u64 + 1));
                let mut in_rows = Shared {
                    data: &shared_in,
                    dim,
                };
                let mut out_rows = Shared {
                    data: &shared_out,
                    dim,
                };
                let mut s = Scratch::new(dim, params.negatives);
                let mut loss = 0.0;
                for walk in batch {
                    let mut local = 0;
                    let base = progress.load(Ordering::Relaxed);
                    loss += train_walk(
                        walk,
                        &mut in_rows,
                        &mut out_rows,
                        params,
                        &noise,
                        &mut rng,
                        |k| lr_at(base + k),
                        &mut local,
                        &mut s,
                    );
                    progress.fetch_add(local, Ordering::Relaxed);
                }
                loss
            })
            .sum();
        epoch_losses.push(loss / pairs_per_epoch as f64);
    }
    Some(TrainOutput {
        input: shared_in
            .iter()
            .map(|a| f64::from_bits(a.load(Ordering::Relaxed)))
            .collect(),
        epoch_losses,
    })
}
