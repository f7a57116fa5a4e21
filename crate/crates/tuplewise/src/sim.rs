//! Logical master/worker simulation with cost accounting, plus the
//! replicated Monte Carlo harness.
//!
//! The simulation counts communication instead of timing it: one scalar
//! message per worker per round, records moved at each repartition, kernel
//! evaluations consumed. [`run_estimation`] re-implements the round loop as
//! the wire protocol would execute it, and its value must coincide exactly
//! with the algebraic estimators in [`crate::estimators`]; the two code paths
//! share only the worker-level leaf computations.
//!
//! Monte Carlo replications are embarrassingly parallel. Every replication
//! derives its dataset stream and child protocol from (master seed, run
//! index) alone, and results are reduced in run order, so the numbers are
//! bit-identical no matter how many threads execute them.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimators::{worker_complete, worker_incomplete, EstimateReport};
use crate::kernels::Kernel;
use crate::model::SyntheticModel;
use crate::partition::{assign, records_moved, PartitionAssignment, SchemeKind};
use crate::rng::{SeedProtocol, StreamPurpose};
use crate::util::{jackknife_se_of_variance, mean, sample_variance};
use crate::variance::{pair_budget, variance_for, Strategy};
use crate::TwoSampleDataset;

/// Communication and computation counters for one estimation run.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CostLedger {
    pub pairs_evaluated: u64,
    /// One scalar per worker per round.
    pub messages_to_master: u64,
    /// Master-to-worker model pushes; estimation runs push nothing.
    pub broadcasts: u64,
    /// Initial distribution of all records plus every record that changes
    /// worker at a repartition step.
    pub records_moved: u64,
    /// Repartition steps after the initial distribution (T - 1).
    pub repartitions: u64,
}

/// Summary of R independent replications of one estimator.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MonteCarloResult {
    pub run_values: Vec<f64>,
    pub mean: f64,
    /// Unbiased (R - 1 divisor) empirical variance.
    pub variance: f64,
    pub standard_error_of_mean: f64,
}

impl MonteCarloResult {
    pub fn from_values(run_values: Vec<f64>) -> Self {
        let mean = mean(&run_values);
        let variance = sample_variance(&run_values);
        let standard_error_of_mean = (variance / run_values.len() as f64).sqrt();
        Self {
            run_values,
            mean,
            variance,
            standard_error_of_mean,
        }
    }

    /// Jackknife standard error of the empirical variance, for tolerance
    /// bands around closed-form comparisons.
    pub fn variance_se(&self) -> f64 {
        jackknife_se_of_variance(&self.run_values)
    }
}

/// Complete or incomplete worker-local computation.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum EstimationMode {
    Complete,
    Incomplete { batch: u64 },
}

/// Full description of one estimation run on synthetic data.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EstimationConfig {
    pub model: SyntheticModel,
    pub n: usize,
    pub m: usize,
    pub scheme: SchemeKind,
    pub workers: usize,
    pub rounds: u64,
    pub mode: EstimationMode,
}

/// Map a named strategy onto the (scheme, workers, rounds, mode) cluster
/// configuration that realizes it.
pub fn strategy_run_shape(
    strategy: Strategy,
    scheme: SchemeKind,
    workers: usize,
    rounds: u64,
    batch: u64,
) -> (SchemeKind, usize, u64, EstimationMode) {
    match strategy {
        Strategy::Complete => (SchemeKind::PropSwor, 1, 1, EstimationMode::Complete),
        Strategy::IncompleteSingle => (
            SchemeKind::PropSwor,
            1,
            1,
            EstimationMode::Incomplete { batch },
        ),
        Strategy::BootstrapSingle => (SchemeKind::PropSwr, 1, 1, EstimationMode::Complete),
        Strategy::LocalComplete => (scheme, workers, 1, EstimationMode::Complete),
        Strategy::LocalIncomplete => (scheme, workers, 1, EstimationMode::Incomplete { batch }),
        Strategy::RepartComplete => (scheme, workers, rounds, EstimationMode::Complete),
        Strategy::RepartIncomplete => {
            (scheme, workers, rounds, EstimationMode::Incomplete { batch })
        }
    }
}

/// Execute the master/worker protocol: distribute, compute locally, send one
/// scalar per worker, average; repartition and repeat for T rounds.
pub fn run_estimation(
    ds: &TwoSampleDataset,
    kernel: &Kernel,
    scheme: SchemeKind,
    workers: usize,
    rounds: u64,
    mode: EstimationMode,
    protocol: &SeedProtocol,
) -> Result<(EstimateReport, CostLedger)> {
    if rounds == 0 {
        return Err(Error::InvalidParameter {
            name: "rounds",
            reason: "need at least one round".into(),
        });
    }
    let mut ledger = CostLedger::default();
    let mut per_round = Vec::with_capacity(rounds as usize);
    let mut zeros = 0u64;
    let mut prev: Option<PartitionAssignment> = None;

    for t in 0..rounds {
        let assignment = assign(scheme, ds.n(), ds.m(), workers, protocol, t)?;
        ledger.records_moved += match &prev {
            // Initial distribution ships every record to its worker.
            None => (ds.n() + ds.m()) as u64,
            Some(p) => {
                ledger.repartitions += 1;
                records_moved(p, &assignment)?
            }
        };

        let mut sum = 0.0;
        for (i, w) in assignment.per_worker.iter().enumerate() {
            let value = match mode {
                EstimationMode::Complete => {
                    let (v, pairs, fired) = worker_complete(ds, kernel, w)?;
                    ledger.pairs_evaluated += pairs;
                    zeros += fired as u64;
                    v
                }
                EstimationMode::Incomplete { batch } => {
                    if batch == 0 {
                        return Err(Error::InvalidParameter {
                            name: "batch",
                            reason: "need at least one pair per worker".into(),
                        });
                    }
                    let mut rng = protocol.worker_stream(t, i as u64);
                    let (v, fired) = worker_incomplete(ds, kernel, w, batch, &mut rng)?;
                    // The budget is charged whether or not the worker had
                    // pairs to draw from.
                    ledger.pairs_evaluated += batch;
                    zeros += fired as u64;
                    v
                }
            };
            ledger.messages_to_master += 1;
            sum += value;
        }
        per_round.push(sum / workers as f64);
        prev = Some(assignment);
    }

    let value = per_round.iter().sum::<f64>() / rounds as f64;
    let report = EstimateReport {
        value,
        pairs_evaluated: ledger.pairs_evaluated,
        rounds,
        per_round_values: Some(per_round),
        scheme,
        zero_partition_rounds: zeros,
    };
    Ok((report, ledger))
}

fn run_one(config: &EstimationConfig, root: &SeedProtocol, run: u64) -> Result<f64> {
    let mut ds_rng = root.run_stream(run, StreamPurpose::Dataset);
    let ds = config.model.sample(config.n, config.m, &mut ds_rng);
    let child = root.child(run);
    let (report, _) = run_estimation(
        &ds,
        &config.model.kernel(),
        config.scheme,
        config.workers,
        config.rounds,
        config.mode,
        &child,
    )?;
    Ok(report.value)
}

/// R independent replications: fresh dataset and fresh partition randomness
/// per run, all seeds pure functions of (master_seed, run index).
pub fn monte_carlo(
    config: &EstimationConfig,
    runs: u64,
    master_seed: u64,
) -> Result<MonteCarloResult> {
    if runs < 2 {
        return Err(Error::InvalidParameter {
            name: "runs",
            reason: "need at least two replications".into(),
        });
    }
    config.model.validate()?;
    let root = SeedProtocol::new(master_seed);
    let values: Vec<f64> = (0..runs)
        .into_par_iter()
        .map(|r| run_one(config, &root, r))
        .collect::<Result<Vec<f64>>>()?;
    Ok(MonteCarloResult::from_values(values))
}

/// One row of the relative-variance study.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RelVarRow {
    pub epsilon: f64,
    pub estimator: Strategy,
    pub empirical_rel_var: f64,
    pub theoretical_rel_var: f64,
    /// Jackknife standard error of the empirical relative variance.
    pub stderr: f64,
    pub runs: u64,
}

/// Empirical versus theoretical variance, both divided by Var(U_n), on the
/// hard-pair family p = 1 - q = epsilon.
#[allow(clippy::too_many_arguments)]
pub fn relative_variance_study(
    epsilons: &[f64],
    estimators: &[Strategy],
    n: usize,
    m: usize,
    workers: usize,
    rounds: u64,
    batch: u64,
    runs: u64,
    master_seed: u64,
    scheme: SchemeKind,
) -> Result<Vec<RelVarRow>> {
    let mut rows = Vec::with_capacity(epsilons.len() * estimators.len());
    let root = SeedProtocol::new(master_seed);
    for (ei, &eps) in epsilons.iter().enumerate() {
        if !(0.0 < eps && eps <= 0.5) {
            return Err(Error::InvalidParameter {
                name: "epsilon",
                reason: format!("epsilon must lie in (0, 0.5], got {eps}"),
            });
        }
        let model = SyntheticModel::discrete_auc(eps, 1.0 - eps)?;
        let comps = model.components()?;
        let var_un = crate::variance::var_complete(&comps, n as u64, m as u64);
        for (si, &strategy) in estimators.iter().enumerate() {
            let (run_scheme, run_workers, run_rounds, mode) =
                strategy_run_shape(strategy, scheme, workers, rounds, batch);
            let config = EstimationConfig {
                model,
                n,
                m,
                scheme: run_scheme,
                workers: run_workers,
                rounds: run_rounds,
                mode,
            };
            let cell = (ei * estimators.len() + si) as u64;
            let mc = monte_carlo(&config, runs, root.child(cell).master_seed())?;
            let theoretical = variance_for(
                strategy,
                scheme,
                &comps,
                n as u64,
                m as u64,
                workers as u64,
                batch,
                rounds,
            )?;
            rows.push(RelVarRow {
                epsilon: eps,
                estimator: strategy,
                empirical_rel_var: mc.variance / var_un,
                theoretical_rel_var: theoretical / var_un,
                stderr: mc.variance_se() / var_un,
                runs,
            });
        }
    }
    Ok(rows)
}

/// Lag-1 autocorrelation of the run values; near zero for independent
/// replications.
pub fn replication_autocorrelation(result: &MonteCarloResult) -> f64 {
    crate::util::lag1_autocorrelation(&result.run_values)
}

/// Check that the ledger's pair count equals the closed-form budget for the
/// strategy that produced it (proportional schemes only).
pub fn ledger_matches_budget(
    ledger: &CostLedger,
    strategy: Strategy,
    n: u64,
    m: u64,
    workers: u64,
    batch: u64,
    rounds: u64,
) -> Result<bool> {
    Ok(ledger.pairs_evaluated == pair_budget(strategy, n, m, workers, batch, rounds)?)
}
