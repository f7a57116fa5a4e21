//! Closed-form variances for every estimation strategy, pair-budget
//! arithmetic, and the dominance gap.
//!
//! All formulas take the Hoeffding components of the kernel under the data
//! distribution and plain sample/cluster sizes. Where a statement form and an
//! expanded form both exist, both are implemented and cross-asserted by the
//! theory checks, turning the algebra itself into a regression test.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::VarianceComponents;
use crate::partition::SchemeKind;

/// Estimation strategies whose variance is known in closed form.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Strategy {
    /// Complete statistic over the full samples, single machine.
    Complete,
    /// Incomplete statistic with B with-replacement pair draws, single machine.
    IncompleteSingle,
    /// Average of the workers' complete local statistics, no repartition.
    LocalComplete,
    /// Average of the workers' B-pair incomplete local statistics, no repartition.
    LocalIncomplete,
    /// T-round repartitioned average of complete local statistics.
    RepartComplete,
    /// T-round repartitioned average of B-pair incomplete local statistics.
    RepartIncomplete,
    /// Complete statistic over a single full-size bootstrap resample
    /// (the prop-SWR reference point).
    BootstrapSingle,
}

impl Strategy {
    pub const ALL: [Strategy; 7] = [
        Strategy::Complete,
        Strategy::IncompleteSingle,
        Strategy::LocalComplete,
        Strategy::LocalIncomplete,
        Strategy::RepartComplete,
        Strategy::RepartIncomplete,
        Strategy::BootstrapSingle,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Strategy::Complete => "complete",
            Strategy::IncompleteSingle => "incomplete-single",
            Strategy::LocalComplete => "local-complete",
            Strategy::LocalIncomplete => "local-incomplete",
            Strategy::RepartComplete => "repart-complete",
            Strategy::RepartIncomplete => "repart-incomplete",
            Strategy::BootstrapSingle => "bootstrap-single",
        }
    }

    pub fn uses_batch(&self) -> bool {
        matches!(
            self,
            Strategy::IncompleteSingle | Strategy::LocalIncomplete | Strategy::RepartIncomplete
        )
    }

    pub fn uses_rounds(&self) -> bool {
        matches!(self, Strategy::RepartComplete | Strategy::RepartIncomplete)
    }
}

/// A strategy's closed-form variance and its pair budget.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct StrategyVariance {
    pub strategy: Strategy,
    pub scheme: SchemeKind,
    pub variance: f64,
    pub pair_budget: u64,
}

fn require_divides(what: &'static str, size: u64, workers: u64) -> Result<u64> {
    if workers == 0 || size % workers != 0 {
        return Err(Error::Divisibility {
            what,
            size,
            workers,
        });
    }
    Ok(size / workers)
}

fn positive(name: &'static str, v: u64) -> Result<()> {
    if v == 0 {
        return Err(Error::InvalidParameter {
            name,
            reason: "must be at least 1".into(),
        });
    }
    Ok(())
}

/// Var(U_n) = sigma1^2/n + sigma2^2/m + sigma0^2/(nm).
pub fn var_complete(c: &VarianceComponents, n: u64, m: u64) -> f64 {
    debug_assert!(n >= 1 && m >= 1);
    let (nf, mf) = (n as f64, m as f64);
    c.sigma1_sq / nf + c.sigma2_sq / mf + c.sigma0_sq / (nf * mf)
}

/// Single-machine incomplete statistic:
/// (1 - 1/B) Var(U_n) + sigma^2 / B.
pub fn var_incomplete_single(c: &VarianceComponents, n: u64, m: u64, batch: u64) -> f64 {
    debug_assert!(batch >= 1);
    let b = batch as f64;
    (1.0 - 1.0 / b) * var_complete(c, n, m) + c.sigma_sq / b
}

/// Worker-local complete average under prop-SWOR:
/// Var(U_n) + (N - 1) sigma0^2 / (nm).
pub fn var_local_complete_propswor(
    c: &VarianceComponents,
    n: u64,
    m: u64,
    workers: u64,
) -> Result<f64> {
    require_divides("n", n, workers)?;
    require_divides("m", m, workers)?;
    let excess = (workers as f64 - 1.0) * c.sigma0_sq / (n as f64 * m as f64);
    Ok(var_complete(c, n, m) + excess)
}

/// Worker-local incomplete average under prop-SWOR:
/// (1 - 1/B) Var(U_{n,N}) + sigma^2 / (NB).
pub fn var_local_incomplete_propswor(
    c: &VarianceComponents,
    n: u64,
    m: u64,
    workers: u64,
    batch: u64,
) -> Result<f64> {
    positive("batch", batch)?;
    let b = batch as f64;
    let local = var_local_complete_propswor(c, n, m, workers)?;
    Ok((1.0 - 1.0 / b) * local + c.sigma_sq / (workers as f64 * b))
}

/// Repartitioned complete average under prop-SWOR:
/// Var(U_n) + (N - 1) sigma0^2 / (nmT).
pub fn var_repart_complete_propswor(
    c: &VarianceComponents,
    n: u64,
    m: u64,
    workers: u64,
    rounds: u64,
) -> Result<f64> {
    positive("rounds", rounds)?;
    require_divides("n", n, workers)?;
    require_divides("m", m, workers)?;
    let excess =
        (workers as f64 - 1.0) * c.sigma0_sq / (n as f64 * m as f64 * rounds as f64);
    Ok(var_complete(c, n, m) + excess)
}

/// Repartitioned incomplete average under prop-SWOR, statement form:
/// Var(repart complete) - Var(U_{n,N}) / (TB) + sigma^2 / (NTB).
pub fn var_repart_incomplete_propswor(
    c: &VarianceComponents,
    n: u64,
    m: u64,
    workers: u64,
    batch: u64,
    rounds: u64,
) -> Result<f64> {
    positive("batch", batch)?;
    positive("rounds", rounds)?;
    let tb = rounds as f64 * batch as f64;
    let repart = var_repart_complete_propswor(c, n, m, workers, rounds)?;
    let local = var_local_complete_propswor(c, n, m, workers)?;
    Ok(repart - local / tb + c.sigma_sq / (workers as f64 * tb))
}

/// Independently coded expanded form of [`var_repart_incomplete_propswor`]:
/// sigma^2/(NTB) + (1 - 1/(TB))(sigma1^2/n + sigma2^2/m)
/// + sigma0^2/(nm) [1 + (N-1)/T - N/(TB)].
pub(crate) fn var_repart_incomplete_propswor_expanded(
    c: &VarianceComponents,
    n: u64,
    m: u64,
    workers: u64,
    batch: u64,
    rounds: u64,
) -> f64 {
    let (nf, mf, wf) = (n as f64, m as f64, workers as f64);
    let tb = rounds as f64 * batch as f64;
    c.sigma_sq / (wf * tb)
        + (1.0 - 1.0 / tb) * (c.sigma1_sq / nf + c.sigma2_sq / mf)
        + c.sigma0_sq / (nf * mf) * (1.0 + (wf - 1.0) / rounds as f64 - wf / tb)
}

/// Complete statistic over one full-size with-replacement resample:
/// sigma1^2/n (2 - 1/n) + sigma2^2/m (2 - 1/m)
/// + sigma0^2/(nm) [4 - 2(1/n + 1/m) + 1/(nm)].
pub fn var_bootstrap_single(c: &VarianceComponents, n: u64, m: u64) -> f64 {
    debug_assert!(n >= 1 && m >= 1);
    let (nf, mf) = (n as f64, m as f64);
    c.sigma1_sq / nf * (2.0 - 1.0 / nf)
        + c.sigma2_sq / mf * (2.0 - 1.0 / mf)
        + c.sigma0_sq / (nf * mf) * (4.0 - 2.0 * (1.0 / nf + 1.0 / mf) + 1.0 / (nf * mf))
}

/// Worker-local complete average under prop-SWR:
/// Var(U_{n,1}) + sigma0^2/(nm) (N-1)(1 - 1/n)(1 - 1/m).
pub fn var_local_complete_propswr(
    c: &VarianceComponents,
    n: u64,
    m: u64,
    workers: u64,
) -> Result<f64> {
    require_divides("n", n, workers)?;
    require_divides("m", m, workers)?;
    let (nf, mf, wf) = (n as f64, m as f64, workers as f64);
    Ok(var_bootstrap_single(c, n, m)
        + c.sigma0_sq / (nf * mf) * (wf - 1.0) * (1.0 - 1.0 / nf) * (1.0 - 1.0 / mf))
}

/// Independently coded explicit form of [`var_local_complete_propswr`]:
/// sigma1^2/n (2-1/n) + sigma2^2/m (2-1/m)
/// + sigma0^2/(nm) [(3 - 1/n - 1/m) + N(1 - 1/n)(1 - 1/m)].
pub(crate) fn var_local_complete_propswr_explicit(
    c: &VarianceComponents,
    n: u64,
    m: u64,
    workers: u64,
) -> f64 {
    let (nf, mf, wf) = (n as f64, m as f64, workers as f64);
    c.sigma1_sq / nf * (2.0 - 1.0 / nf)
        + c.sigma2_sq / mf * (2.0 - 1.0 / mf)
        + c.sigma0_sq / (nf * mf)
            * ((3.0 - 1.0 / nf - 1.0 / mf) + wf * (1.0 - 1.0 / nf) * (1.0 - 1.0 / mf))
}

/// Correction term shared by the prop-SWR incomplete estimators: worker i's
/// local statistic is itself a bootstrap statistic on (n/N, m/N) points.
fn propswr_incomplete_correction(
    c: &VarianceComponents,
    n: u64,
    m: u64,
    workers: u64,
) -> Result<f64> {
    let n0 = require_divides("n", n, workers)?;
    let m0 = require_divides("m", m, workers)?;
    Ok(c.sigma_sq - var_bootstrap_single(c, n0, m0))
}

/// Worker-local incomplete average under prop-SWR:
/// Var(U_{n,N}) + [sigma^2 - Var(U_{n0,1})] / (NB), n0 = (n/N, m/N).
pub fn var_local_incomplete_propswr(
    c: &VarianceComponents,
    n: u64,
    m: u64,
    workers: u64,
    batch: u64,
) -> Result<f64> {
    positive("batch", batch)?;
    let local = var_local_complete_propswr(c, n, m, workers)?;
    let corr = propswr_incomplete_correction(c, n, m, workers)?;
    Ok(local + corr / (workers as f64 * batch as f64))
}

/// Repartitioned complete average under prop-SWR:
/// Var(U_n) + [Var(U_{n,N}) - Var(U_n)] / T.
pub fn var_repart_complete_propswr(
    c: &VarianceComponents,
    n: u64,
    m: u64,
    workers: u64,
    rounds: u64,
) -> Result<f64> {
    positive("rounds", rounds)?;
    let complete = var_complete(c, n, m);
    let local = var_local_complete_propswr(c, n, m, workers)?;
    Ok(complete + (local - complete) / rounds as f64)
}

/// Repartitioned incomplete average under prop-SWR:
/// Var(repart complete) + [sigma^2 - Var(U_{n0,1})] / (NBT).
pub fn var_repart_incomplete_propswr(
    c: &VarianceComponents,
    n: u64,
    m: u64,
    workers: u64,
    batch: u64,
    rounds: u64,
) -> Result<f64> {
    positive("batch", batch)?;
    positive("rounds", rounds)?;
    let repart = var_repart_complete_propswr(c, n, m, workers, rounds)?;
    let corr = propswr_incomplete_correction(c, n, m, workers)?;
    Ok(repart + corr / (workers as f64 * batch as f64 * rounds as f64))
}

/// Closed-form variance of `strategy` under `scheme`. `Complete` and
/// `IncompleteSingle` are scheme-independent; `BootstrapSingle` is only
/// defined for prop-SWR; SWOR has no concise closed form and errors.
pub fn variance_for(
    strategy: Strategy,
    scheme: SchemeKind,
    c: &VarianceComponents,
    n: u64,
    m: u64,
    workers: u64,
    batch: u64,
    rounds: u64,
) -> Result<f64> {
    let unsupported = |reason: &str| -> Result<f64> {
        Err(Error::InvalidParameter {
            name: "scheme",
            reason: reason.to_string(),
        })
    };
    match (strategy, scheme) {
        (Strategy::Complete, _) => Ok(var_complete(c, n, m)),
        (Strategy::IncompleteSingle, _) => {
            positive("batch", batch)?;
            Ok(var_incomplete_single(c, n, m, batch))
        }
        (Strategy::BootstrapSingle, SchemeKind::PropSwr) => Ok(var_bootstrap_single(c, n, m)),
        (Strategy::BootstrapSingle, _) => {
            unsupported("the bootstrap reference point is a prop-SWR quantity")
        }
        (Strategy::LocalComplete, SchemeKind::PropSwor) => {
            var_local_complete_propswor(c, n, m, workers)
        }
        (Strategy::LocalIncomplete, SchemeKind::PropSwor) => {
            var_local_incomplete_propswor(c, n, m, workers, batch)
        }
        (Strategy::RepartComplete, SchemeKind::PropSwor) => {
            var_repart_complete_propswor(c, n, m, workers, rounds)
        }
        (Strategy::RepartIncomplete, SchemeKind::PropSwor) => {
            var_repart_incomplete_propswor(c, n, m, workers, batch, rounds)
        }
        (Strategy::LocalComplete, SchemeKind::PropSwr) => {
            var_local_complete_propswr(c, n, m, workers)
        }
        (Strategy::LocalIncomplete, SchemeKind::PropSwr) => {
            var_local_incomplete_propswr(c, n, m, workers, batch)
        }
        (Strategy::RepartComplete, SchemeKind::PropSwr) => {
            var_repart_complete_propswr(c, n, m, workers, rounds)
        }
        (Strategy::RepartIncomplete, SchemeKind::PropSwr) => {
            var_repart_incomplete_propswr(c, n, m, workers, batch, rounds)
        }
        _ => unsupported("no closed-form variance for this scheme"),
    }
}

/// Total kernel evaluations a strategy consumes.
pub fn pair_budget(
    strategy: Strategy,
    n: u64,
    m: u64,
    workers: u64,
    batch: u64,
    rounds: u64,
) -> Result<u64> {
    if strategy.uses_batch() {
        positive("batch", batch)?;
    }
    if strategy.uses_rounds() {
        positive("rounds", rounds)?;
    }
    Ok(match strategy {
        Strategy::Complete | Strategy::BootstrapSingle => n * m,
        Strategy::IncompleteSingle => batch,
        Strategy::LocalComplete => require_divides("n * m", n * m, workers)?,
        Strategy::LocalIncomplete => workers * batch,
        Strategy::RepartComplete => rounds * require_divides("n * m", n * m, workers)?,
        Strategy::RepartIncomplete => workers * batch * rounds,
    })
}

/// Dominance gap under prop-SWOR at equal pair budgets:
/// Delta = Var(repart incomplete at (B, T)) - Var(repart complete at T0),
/// with the budget constraint NBT = nm T0 / N checked in exact integers.
///
/// Coded from the expanded expression; the theorem-form difference is a
/// second, independent route that the theory checks compare against:
/// Delta = sigma0^2 [ (N-1)/(nmT) (1 - 1/B) + (1/(TB)) (1/N^2 - 1/(nm)) ]
///       + sigma1^2/(TB) (1/N - 1/n) + sigma2^2/(TB) (1/N - 1/m).
pub fn dominance_gap(
    c: &VarianceComponents,
    n: u64,
    m: u64,
    workers: u64,
    rounds_incomplete: u64,
    rounds_complete: u64,
    batch: u64,
) -> Result<f64> {
    positive("batch", batch)?;
    positive("rounds_incomplete", rounds_incomplete)?;
    positive("rounds_complete", rounds_complete)?;
    require_divides("n", n, workers)?;
    require_divides("m", m, workers)?;
    let complete_pairs = require_divides("n * m * T0", n * m * rounds_complete, workers)?;
    let incomplete_pairs = workers * batch * rounds_incomplete;
    if incomplete_pairs != complete_pairs {
        return Err(Error::BudgetConstraint {
            incomplete: incomplete_pairs,
            complete: complete_pairs,
        });
    }
    let (nf, mf, wf) = (n as f64, m as f64, workers as f64);
    let t = rounds_incomplete as f64;
    let b = batch as f64;
    Ok(c.sigma0_sq
        * ((wf - 1.0) / (nf * mf * t) * (1.0 - 1.0 / b)
            + 1.0 / (t * b) * (1.0 / (wf * wf) - 1.0 / (nf * mf)))
        + c.sigma1_sq / (t * b) * (1.0 / wf - 1.0 / nf)
        + c.sigma2_sq / (t * b) * (1.0 / wf - 1.0 / mf))
}
