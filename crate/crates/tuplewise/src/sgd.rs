//! Repartitioned distributed mini-batch SGD for pairwise AUC-surrogate
//! minimization.
//!
//! The objective is the two-sample hinge surrogate
//! `g(x, z) = max(0, 1 + s(z) - s(x))` for a linear score `s(v) = w.v + b`,
//! plus an L2 penalty on `w`. The orientation makes minimization push
//! positive (X) scores above negative (Z) scores, which is what increases
//! the AUC under the strict pair indicator. Each iteration every worker
//! draws B pairs from its current partition, the master averages the worker
//! gradients, takes a momentum step and broadcasts the model; the partition
//! is refreshed every `n_r` iterations.
//!
//! The bias `b` cancels in `s(x) - s(z)`, so it receives no hinge gradient
//! and no penalty; it is kept in the model for interface fidelity.

use std::num::NonZeroU64;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::TwoSampleDataset;
use crate::error::{Error, Result};
use crate::kernels::score;
use crate::partition::{assign, PartitionAssignment, SchemeKind};
use crate::rng::{uniform_below, SeedProtocol, StreamPurpose};
use crate::util::KahanSum;

/// Abort training once the monitor loss passes this bound.
pub const DIVERGENCE_LOSS_BOUND: f64 = 1e6;

/// Linear scoring function s(v) = w . v + b.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LinearScorer {
    pub weights: Vec<f64>,
    pub bias: f64,
}

impl LinearScorer {
    pub fn zeros(dim: usize) -> Self {
        Self {
            weights: vec![0.0; dim],
            bias: 0.0,
        }
    }

    #[inline]
    pub fn score(&self, point: &[f64]) -> f64 {
        score(&self.weights, self.bias, point)
    }

    pub fn dim(&self) -> usize {
        self.weights.len()
    }
}

/// Hyperparameters of the distributed SGD loop.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SgdConfig {
    pub workers: usize,
    /// Pairs drawn per worker per iteration.
    pub batch: u64,
    /// Iterations between repartitions; `None` never repartitions.
    pub repartition_every: Option<NonZeroU64>,
    pub step_size: f64,
    pub momentum: f64,
    pub l2_coeff: f64,
    pub iterations: u64,
    pub scheme: SchemeKind,
    /// Fixed training pairs used for loss/AUC monitoring.
    pub monitor_pairs: u64,
    /// Evaluate test AUC every this many iterations (and at the last one).
    pub test_every: u64,
}

impl Default for SgdConfig {
    fn default() -> Self {
        Self {
            workers: 100,
            batch: 100,
            repartition_every: NonZeroU64::new(25),
            step_size: 0.01,
            momentum: 0.9,
            l2_coeff: 0.05,
            iterations: 1000,
            scheme: SchemeKind::PropSwor,
            monitor_pairs: 1000,
            test_every: 10,
        }
    }
}

impl SgdConfig {
    fn validate(&self) -> Result<()> {
        if self.batch == 0 || self.iterations == 0 || self.workers == 0 {
            return Err(Error::InvalidParameter {
                name: "sgd config",
                reason: "workers, batch and iterations must be positive".into(),
            });
        }
        if !(self.step_size >= 0.0) {
            return Err(Error::InvalidParameter {
                name: "step_size",
                reason: format!("must be nonnegative, got {}", self.step_size),
            });
        }
        if !(0.0..1.0).contains(&self.momentum) {
            return Err(Error::InvalidParameter {
                name: "momentum",
                reason: format!("must lie in [0, 1), got {}", self.momentum),
            });
        }
        if !(self.l2_coeff >= 0.0) {
            return Err(Error::InvalidParameter {
                name: "l2_coeff",
                reason: format!("must be nonnegative, got {}", self.l2_coeff),
            });
        }
        if self.monitor_pairs == 0 || self.test_every == 0 {
            return Err(Error::InvalidParameter {
                name: "sgd config",
                reason: "monitor_pairs and test_every must be positive".into(),
            });
        }
        Ok(())
    }

    /// Repartition epoch in effect at 1-based iteration s: ceil(s / n_r),
    /// or 1 forever when repartitioning is off.
    pub fn epoch_at(&self, iteration: u64) -> u64 {
        match self.repartition_every {
            Some(nr) => iteration.div_ceil(nr.get()),
            None => 1,
        }
    }
}

/// Everything recorded along one training run.
#[derive(Clone, Debug, PartialEq)]
pub struct TrainingTrace {
    /// Mean hinge loss on the monitor pairs, per iteration.
    pub monitor_loss: Vec<f64>,
    /// Strict-indicator AUC on the monitor pairs, per iteration.
    pub monitor_auc: Vec<f64>,
    /// Complete test AUC at the `test_every` cadence (and final iteration).
    pub test_auc: Vec<Option<f64>>,
    /// Iterations (1-based) at which the data moved to a fresh partition.
    pub repartition_iterations: Vec<u64>,
    /// N * B per iteration, summed.
    pub pairs_consumed: u64,
    pub final_scorer: LinearScorer,
}

impl TrainingTrace {
    pub fn final_test_auc(&self) -> Option<f64> {
        self.test_auc.iter().rev().find_map(|v| *v)
    }
}

/// Hinge surrogate on one (positive, negative) pair. The bias cancels in
/// `s(x) - s(z)` algebraically, so it is left out of the margin entirely:
/// bias invariance holds exactly, not just up to rounding.
pub fn hinge_pair_loss(scorer: &LinearScorer, x_pos: &[f64], z_neg: &[f64]) -> Result<f64> {
    check_dims(scorer, x_pos, z_neg)?;
    Ok((1.0 + score_margin(&scorer.weights, z_neg, x_pos)).max(0.0))
}

/// `w . a - w . b`, the bias-free score difference.
#[inline]
fn score_margin(weights: &[f64], a: &[f64], b: &[f64]) -> f64 {
    let mut acc = 0.0;
    for (w, (av, bv)) in weights.iter().zip(a.iter().zip(b)) {
        acc += w * (av - bv);
    }
    acc
}

/// Subgradient of `hinge + l2 ||w||^2` on one pair: `z - x` on the weights
/// when the margin is violated (zero at the kink), never anything on the
/// bias, plus `2 l2 w`. The aggregated estimator applies the penalty once
/// per step instead of per pair, which is the same gradient.
pub fn pair_gradient(
    scorer: &LinearScorer,
    x_pos: &[f64],
    z_neg: &[f64],
    l2_coeff: f64,
) -> Result<(Vec<f64>, f64)> {
    check_dims(scorer, x_pos, z_neg)?;
    let mut grad_w = vec![0.0; scorer.dim()];
    if hinge_active(scorer, x_pos, z_neg) {
        for (g, (z, x)) in grad_w.iter_mut().zip(z_neg.iter().zip(x_pos)) {
            *g = z - x;
        }
    }
    for (g, w) in grad_w.iter_mut().zip(&scorer.weights) {
        *g += 2.0 * l2_coeff * w;
    }
    Ok((grad_w, 0.0))
}

#[inline]
fn hinge_active(scorer: &LinearScorer, x_pos: &[f64], z_neg: &[f64]) -> bool {
    1.0 + score_margin(&scorer.weights, z_neg, x_pos) > 0.0
}

fn check_dims(scorer: &LinearScorer, x: &[f64], z: &[f64]) -> Result<()> {
    if x.len() != scorer.dim() || z.len() != scorer.dim() {
        return Err(Error::DimensionMismatch {
            expected: scorer.dim(),
            got: if x.len() != scorer.dim() { x.len() } else { z.len() },
        });
    }
    Ok(())
}

/// Mini-batch gradient of the surrogate risk: each worker averages the hinge
/// subgradient over `batch` with-replacement pairs from its partition, the
/// results are averaged over workers, and the L2 term is added once.
/// Workers without pairs contribute zero. Returns (grad_w, grad_b).
pub fn global_gradient_estimate(
    ds: &TwoSampleDataset,
    assignment: &PartitionAssignment,
    scorer: &LinearScorer,
    batch: u64,
    l2_coeff: f64,
    protocol: &SeedProtocol,
    draw_epoch: u64,
) -> Result<(Vec<f64>, f64)> {
    if ds.dim() != scorer.dim() {
        return Err(Error::DimensionMismatch {
            expected: scorer.dim(),
            got: ds.dim(),
        });
    }
    if batch == 0 {
        return Err(Error::InvalidParameter {
            name: "batch",
            reason: "need at least one pair per worker".into(),
        });
    }
    let dim = scorer.dim();
    let workers = assignment.workers();
    let mut grad = vec![0.0; dim];
    for (i, w) in assignment.per_worker.iter().enumerate() {
        let (nx, nz) = (w.x_indices.len(), w.z_indices.len());
        if nx.min(nz) == 0 {
            continue;
        }
        let mut rng = protocol.worker_stream(draw_epoch, i as u64);
        let mut local = vec![0.0; dim];
        for _ in 0..batch {
            let k = w.x_indices[uniform_below(&mut rng, nx as u64) as usize];
            let l = w.z_indices[uniform_below(&mut rng, nz as u64) as usize];
            let (x, z) = (ds.x(k), ds.z(l));
            if hinge_active(scorer, x, z) {
                for (g, (zv, xv)) in local.iter_mut().zip(z.iter().zip(x)) {
                    *g += zv - xv;
                }
            }
        }
        let scale = 1.0 / batch as f64;
        for (g, l) in grad.iter_mut().zip(&local) {
            *g += l * scale;
        }
    }
    let inv_workers = 1.0 / workers as f64;
    for (g, w) in grad.iter_mut().zip(&scorer.weights) {
        *g = *g * inv_workers + 2.0 * l2_coeff * w;
    }
    Ok((grad, 0.0))
}

/// How much AUC evaluation to pay for.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum AucBudget {
    /// All n*m pairs, counted exactly by sorting.
    Complete,
    /// `pairs` with-replacement draws from a dedicated stream.
    Sampled { pairs: u64, seed: u64 },
}

/// AUC of the scorer on a dataset: the mean of the strict pair indicator
/// `1{s(z) < s(x)}` (ties count zero).
pub fn evaluate_auc(scorer: &LinearScorer, ds: &TwoSampleDataset, budget: AucBudget) -> Result<f64> {
    if ds.dim() != scorer.dim() {
        return Err(Error::DimensionMismatch {
            expected: scorer.dim(),
            got: ds.dim(),
        });
    }
    match budget {
        AucBudget::Complete => {
            let x_scores: Vec<f64> = (0..ds.n()).map(|k| scorer.score(ds.x(k))).collect();
            let mut z_scores: Vec<f64> = (0..ds.m()).map(|l| scorer.score(ds.z(l))).collect();
            z_scores.sort_by(|a, b| a.partial_cmp(b).expect("finite scores"));
            // For each x, count z-scores strictly below it; exact integer
            // arithmetic, identical to the pairwise double loop.
            let mut wins: u64 = 0;
            for s in &x_scores {
                wins += z_scores.partition_point(|z| z < s) as u64;
            }
            Ok(wins as f64 / (ds.n() as f64 * ds.m() as f64))
        }
        AucBudget::Sampled { pairs, seed } => {
            if pairs == 0 {
                return Err(Error::InvalidParameter {
                    name: "pairs",
                    reason: "need at least one evaluation pair".into(),
                });
            }
            let mut rng = SeedProtocol::new(seed).run_stream(0, StreamPurpose::Eval);
            let mut wins = 0u64;
            for _ in 0..pairs {
                let k = uniform_below(&mut rng, ds.n() as u64) as usize;
                let l = uniform_below(&mut rng, ds.m() as u64) as usize;
                if scorer.score(ds.z(l)) < scorer.score(ds.x(k)) {
                    wins += 1;
                }
            }
            Ok(wins as f64 / pairs as f64)
        }
    }
}

/// Run S iterations of repartitioned mini-batch SGD with momentum from the
/// zero model. Deterministic given the protocol's master seed.
pub fn train(
    ds_train: &TwoSampleDataset,
    ds_test: &TwoSampleDataset,
    config: &SgdConfig,
    protocol: &SeedProtocol,
) -> Result<TrainingTrace> {
    config.validate()?;
    if ds_train.dim() != ds_test.dim() {
        return Err(Error::DimensionMismatch {
            expected: ds_train.dim(),
            got: ds_test.dim(),
        });
    }
    let dim = ds_train.dim();
    let (n, m) = (ds_train.n(), ds_train.m());

    // Fixed monitor pairs, drawn once before training.
    let mut monitor_rng = protocol.run_stream(0, StreamPurpose::Monitor);
    let monitor: Vec<(usize, usize)> = (0..config.monitor_pairs)
        .map(|_| {
            (
                uniform_below(&mut monitor_rng, n as u64) as usize,
                uniform_below(&mut monitor_rng, m as u64) as usize,
            )
        })
        .collect();

    let mut scorer = LinearScorer::zeros(dim);
    let mut velocity = vec![0.0; dim];
    let mut trace = TrainingTrace {
        monitor_loss: Vec::with_capacity(config.iterations as usize),
        monitor_auc: Vec::with_capacity(config.iterations as usize),
        test_auc: Vec::with_capacity(config.iterations as usize),
        repartition_iterations: Vec::new(),
        pairs_consumed: 0,
        final_scorer: scorer.clone(),
    };

    let mut assignment: Option<PartitionAssignment> = None;
    for s in 1..=config.iterations {
        let epoch = config.epoch_at(s);
        let stale = assignment.as_ref().map(|a| a.epoch != epoch).unwrap_or(true);
        if stale {
            assignment = Some(assign(config.scheme, n, m, config.workers, protocol, epoch)?);
            if s > 1 {
                trace.repartition_iterations.push(s);
            }
        }
        let current = assignment.as_ref().expect("assigned above");

        let (grad_w, grad_b) = global_gradient_estimate(
            ds_train,
            current,
            &scorer,
            config.batch,
            config.l2_coeff,
            protocol,
            s,
        )?;
        trace.pairs_consumed += config.workers as u64 * config.batch;

        for ((v, g), w) in velocity.iter_mut().zip(&grad_w).zip(scorer.weights.iter_mut()) {
            *v = config.momentum * *v + g;
            *w -= config.step_size * *v;
        }
        scorer.bias -= config.step_size * grad_b;

        let (loss, auc) = monitor_metrics(&scorer, ds_train, &monitor)?;
        if !loss.is_finite() || loss > DIVERGENCE_LOSS_BOUND {
            return Err(Error::Diverged { iteration: s, loss });
        }
        trace.monitor_loss.push(loss);
        trace.monitor_auc.push(auc);
        let test = if s % config.test_every == 0 || s == config.iterations {
            Some(evaluate_auc(&scorer, ds_test, AucBudget::Complete)?)
        } else {
            None
        };
        trace.test_auc.push(test);
    }
    trace.final_scorer = scorer;
    Ok(trace)
}

fn monitor_metrics(
    scorer: &LinearScorer,
    ds: &TwoSampleDataset,
    monitor: &[(usize, usize)],
) -> Result<(f64, f64)> {
    let mut loss = KahanSum::new();
    let mut wins = 0u64;
    for &(k, l) in monitor {
        let margin = score_margin(&scorer.weights, ds.x(k), ds.z(l));
        loss.add((1.0 - margin).max(0.0));
        wins += (margin > 0.0) as u64;
    }
    let count = monitor.len() as f64;
    Ok((loss.value() / count, wins as f64 / count))
}

/// Train independently for every (n_r, run) cell of a study; replications run
/// in parallel and are reduced in index order.
pub fn train_replicated(
    ds_train: &TwoSampleDataset,
    ds_test: &TwoSampleDataset,
    base: &SgdConfig,
    n_r_list: &[Option<NonZeroU64>],
    runs: u64,
    master_seed: u64,
) -> Result<Vec<(usize, u64, TrainingTrace)>> {
    let root = SeedProtocol::new(master_seed);
    let cells: Vec<(usize, u64)> = (0..n_r_list.len())
        .flat_map(|i| (0..runs).map(move |r| (i, r)))
        .collect();
    cells
        .into_par_iter()
        .map(|(i, r)| {
            let mut config = base.clone();
            config.repartition_every = n_r_list[i];
            // The same run index shares partition randomness across n_r
            // values, so cadences are compared on common draws.
            let trace = train(ds_train, ds_test, &config, &root.child(r))?;
            Ok((i, r, trace))
        })
        .collect()
}
