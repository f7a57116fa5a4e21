//! The theory-check harness: every closed-form result is exercised against
//! an independent route (exhaustive enumeration, an independently coded
//! expansion, or a Monte Carlo study at a pinned tolerance) and reported as
//! one pass/fail row. The `check-theory` CLI command prints these rows as
//! CSV and exits nonzero if any fails; the acceptance test suite asserts
//! them one by one.

use crate::config::CheckTheoryConfig;
use crate::error::Result;
use crate::estimators::complete_two_sample;
use crate::kernels::Kernel;
use crate::model::{
    closed_auc_mean, enumerated_h0, enumerated_mean, hoeffding_components_closed_auc,
    hoeffding_components_enumerated, DiscreteAucDistribution, SyntheticModel, VarianceComponents,
};
use crate::partition::{assign, simulate_coordination_free, SchemeKind};
use crate::rng::{unit_f64, SeedProtocol, StreamPurpose};
use crate::sgd::{hinge_pair_loss, pair_gradient, LinearScorer};
use crate::sim::{
    monte_carlo, relative_variance_study, run_estimation, strategy_run_shape, EstimationConfig,
    MonteCarloResult,
};
use crate::util::fmt_f64;
use crate::variance::{
    dominance_gap, pair_budget, var_bootstrap_single, var_complete, var_incomplete_single,
    var_local_complete_propswor, var_local_complete_propswr, var_local_complete_propswr_explicit,
    var_local_incomplete_propswor, var_local_incomplete_propswr, var_repart_complete_propswor,
    var_repart_complete_propswr, var_repart_incomplete_propswor,
    var_repart_incomplete_propswor_expanded, var_repart_incomplete_propswr, variance_for,
    Strategy,
};

/// Monte Carlo variance checks must land within 5% of the closed form.
pub const MC_REL_TOL: f64 = 0.05;
/// Closed-form components versus enumeration.
pub const CLOSED_VS_ENUM_TOL: f64 = 1e-10;
/// Exact algebraic identities.
pub const IDENTITY_TOL: f64 = 1e-12;
/// Two-sided 99% normal band: Phi^{-1}(0.995).
pub const Z_99: f64 = 2.575_829_303_548_901;
/// Repartitioned variance at T = 10^4 must sit this close to Var(U_n).
pub const T_LIMIT_REL_TOL: f64 = 1e-3;
/// Central finite differences of the hinge surrogate.
pub const FD_REL_TOL: f64 = 1e-6;
/// SWOR empirical variances versus the prop-SWOR closed forms.
pub const SWOR_PROXIMITY_TOL: f64 = 0.20;
/// Large-limit batch used by the B -> infinity reduction rows.
const HUGE_BATCH: u64 = 1_000_000_000;

/// Closed-form operations the harness must cover, asserted by name.
pub const VARIANCE_OP_NAMES: [&str; 13] = [
    "var-complete",
    "var-incomplete-single",
    "var-local-complete-propswor",
    "var-local-incomplete-propswor",
    "var-repart-complete-propswor",
    "var-repart-incomplete-propswor",
    "var-bootstrap-single",
    "var-local-complete-propswr",
    "var-local-incomplete-propswr",
    "var-repart-complete-propswr",
    "var-repart-incomplete-propswr",
    "pair-budget",
    "dominance-gap",
];

/// One pass/fail line of the harness.
#[derive(Clone, Debug, PartialEq)]
pub struct CheckRow {
    pub name: String,
    pub closed_form: f64,
    pub empirical: f64,
    pub rel_error: f64,
    pub tolerance: f64,
    pub pass: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct CheckReport {
    pub rows: Vec<CheckRow>,
}

impl CheckReport {
    pub fn all_pass(&self) -> bool {
        self.rows.iter().all(|r| r.pass)
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from(crate::experiments::CHECK_THEORY_HEADER);
        out.push('\n');
        for r in &self.rows {
            out.push_str(&format!(
                "{},{},{},{},{},{}\n",
                r.name,
                fmt_f64(r.closed_form),
                fmt_f64(r.empirical),
                fmt_f64(r.rel_error),
                fmt_f64(r.tolerance),
                r.pass
            ));
        }
        out
    }

    pub fn row(&self, name: &str) -> Option<&CheckRow> {
        self.rows.iter().find(|r| r.name == name)
    }
}

fn row_rel(name: impl Into<String>, closed: f64, empirical: f64, tol: f64) -> CheckRow {
    let rel = if closed != 0.0 {
        (empirical - closed).abs() / closed.abs()
    } else {
        empirical.abs()
    };
    CheckRow {
        name: name.into(),
        closed_form: closed,
        empirical,
        rel_error: rel,
        tolerance: tol,
        pass: rel <= tol,
    }
}

/// A quantity that must not exceed `bound` (absolute).
fn row_max(name: impl Into<String>, observed: f64, bound: f64) -> CheckRow {
    CheckRow {
        name: name.into(),
        closed_form: 0.0,
        empirical: observed,
        rel_error: observed,
        tolerance: bound,
        pass: observed <= bound,
    }
}

/// A quantity that must be strictly positive.
fn row_positive(name: impl Into<String>, observed: f64) -> CheckRow {
    CheckRow {
        name: name.into(),
        closed_form: 0.0,
        empirical: observed,
        rel_error: 0.0,
        tolerance: 0.0,
        pass: observed > 0.0,
    }
}

/// Run the full harness.
pub fn run_all(cfg: &CheckTheoryConfig) -> Result<CheckReport> {
    let root = SeedProtocol::new(cfg.master_seed);
    let mut rows = Vec::new();
    hoeffding_checks(&root, &mut rows)?;
    theorem1_checks(cfg, &root, &mut rows)?;
    theorem2_checks(cfg, &root, &mut rows)?;
    incomplete_single_checks(cfg, &root, &mut rows)?;
    propswr_checks(cfg, &root, &mut rows)?;
    dominance_checks(&root, &mut rows)?;
    curve_shape_checks(&mut rows)?;
    relative_variance_checks(cfg, &root, &mut rows)?;
    unbiasedness_checks(cfg, &root, &mut rows)?;
    subgradient_checks(&root, &mut rows)?;
    protocol_checks(&root, &mut rows)?;
    swor_checks(cfg, &root, &mut rows)?;
    formula_identity_checks(&mut rows)?;
    budget_ledger_check(&root, &mut rows)?;
    Ok(CheckReport { rows })
}

fn spec_model() -> SyntheticModel {
    SyntheticModel::DiscreteAuc { p: 0.1, q: 0.9 }
}

fn spec_components() -> VarianceComponents {
    hoeffding_components_closed_auc(0.1, 0.9).expect("valid probabilities")
}

fn mc_for_strategy(
    strategy: Strategy,
    scheme: SchemeKind,
    model: SyntheticModel,
    n: usize,
    m: usize,
    workers: usize,
    batch: u64,
    rounds: u64,
    runs: u64,
    seed: u64,
) -> Result<MonteCarloResult> {
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
    monte_carlo(&config, runs, seed)
}

/// One Monte Carlo variance comparison: a 5% relative row plus a jackknife
/// 99%-band row when `with_band`.
#[allow(clippy::too_many_arguments)]
fn mc_variance_rows(
    name: &str,
    strategy: Strategy,
    scheme: SchemeKind,
    model: SyntheticModel,
    n: usize,
    m: usize,
    workers: usize,
    batch: u64,
    rounds: u64,
    runs: u64,
    seed: u64,
    with_band: bool,
    rows: &mut Vec<CheckRow>,
) -> Result<()> {
    let comps = model.components()?;
    let closed = variance_for(
        strategy,
        scheme,
        &comps,
        n as u64,
        m as u64,
        workers as u64,
        batch,
        rounds,
    )?;
    let mc = mc_for_strategy(strategy, scheme, model, n, m, workers, batch, rounds, runs, seed)?;
    rows.push(row_rel(format!("{name}-mc"), closed, mc.variance, MC_REL_TOL));
    if with_band {
        let band = Z_99 * mc.variance_se();
        let diff = (mc.variance - closed).abs();
        rows.push(CheckRow {
            name: format!("{name}-jackknife99"),
            closed_form: closed,
            empirical: mc.variance,
            rel_error: if band > 0.0 { diff / band } else { f64::INFINITY },
            tolerance: 1.0,
            pass: diff <= band,
        });
    }
    Ok(())
}

fn hoeffding_checks(root: &SeedProtocol, rows: &mut Vec<CheckRow>) -> Result<()> {
    let mut rng = root.run_stream(0, StreamPurpose::Eval);
    let mut max_rel: f64 = 0.0;
    let mut max_identity: f64 = 0.0;
    let mut max_degeneracy: f64 = 0.0;
    let mut max_mean: f64 = 0.0;
    for _ in 0..100 {
        let p = unit_f64(&mut rng);
        let q = unit_f64(&mut rng);
        let dist = DiscreteAucDistribution::new(p, q)?;
        let closed = hoeffding_components_closed_auc(p, q)?;
        let enumerated = hoeffding_components_enumerated(&Kernel::AucIndicator, &dist)?;
        for (a, b) in [
            (closed.sigma0_sq, enumerated.sigma0_sq),
            (closed.sigma1_sq, enumerated.sigma1_sq),
            (closed.sigma2_sq, enumerated.sigma2_sq),
            (closed.sigma_sq, enumerated.sigma_sq),
        ] {
            let scale = a.abs().max(b.abs());
            if scale > 0.0 {
                max_rel = max_rel.max((a - b).abs() / scale);
            }
        }
        let sum = enumerated.sigma0_sq + enumerated.sigma1_sq + enumerated.sigma2_sq;
        max_identity = max_identity.max((sum - enumerated.sigma_sq).abs());
        for (x, _) in dist.x_support() {
            let mut acc = 0.0;
            for (z, pz) in dist.z_support() {
                acc += pz * enumerated_h0(&Kernel::AucIndicator, &dist, x, z)?;
            }
            max_degeneracy = max_degeneracy.max(acc.abs());
        }
        for (z, _) in dist.z_support() {
            let mut acc = 0.0;
            for (x, px) in dist.x_support() {
                acc += px * enumerated_h0(&Kernel::AucIndicator, &dist, x, z)?;
            }
            max_degeneracy = max_degeneracy.max(acc.abs());
        }
        let u = enumerated_mean(&Kernel::AucIndicator, &dist)?;
        max_mean = max_mean.max((u - closed_auc_mean(p, q)).abs());
    }
    rows.push(row_max(
        "hoeffding-closed-auc-vs-enumerated",
        max_rel,
        CLOSED_VS_ENUM_TOL,
    ));
    rows.push(row_max("hoeffding-identity", max_identity, IDENTITY_TOL));
    rows.push(row_max("hoeffding-degeneracy", max_degeneracy, IDENTITY_TOL));
    rows.push(row_max("auc-mean-enumeration", max_mean, IDENTITY_TOL));
    Ok(())
}

fn theorem1_checks(
    cfg: &CheckTheoryConfig,
    root: &SeedProtocol,
    rows: &mut Vec<CheckRow>,
) -> Result<()> {
    let (n, m, workers, batch) = (400, 40, 8, 10);
    mc_variance_rows(
        "var-complete",
        Strategy::Complete,
        SchemeKind::PropSwor,
        spec_model(),
        n,
        m,
        workers,
        0,
        1,
        cfg.mc_runs,
        root.child(10).master_seed(),
        false,
        rows,
    )?;
    mc_variance_rows(
        "var-local-complete-propswor",
        Strategy::LocalComplete,
        SchemeKind::PropSwor,
        spec_model(),
        n,
        m,
        workers,
        0,
        1,
        cfg.mc_runs,
        root.child(11).master_seed(),
        true,
        rows,
    )?;
    mc_variance_rows(
        "var-local-incomplete-propswor",
        Strategy::LocalIncomplete,
        SchemeKind::PropSwor,
        spec_model(),
        n,
        m,
        workers,
        batch,
        1,
        cfg.mc_runs,
        root.child(12).master_seed(),
        true,
        rows,
    )?;
    Ok(())
}

fn theorem2_checks(
    cfg: &CheckTheoryConfig,
    root: &SeedProtocol,
    rows: &mut Vec<CheckRow>,
) -> Result<()> {
    let (n, m, workers, batch, rounds) = (400, 40, 8, 10, 4);
    mc_variance_rows(
        "var-repart-complete-propswor",
        Strategy::RepartComplete,
        SchemeKind::PropSwor,
        spec_model(),
        n,
        m,
        workers,
        0,
        rounds,
        cfg.mc_runs,
        root.child(13).master_seed(),
        true,
        rows,
    )?;
    mc_variance_rows(
        "var-repart-incomplete-propswor",
        Strategy::RepartIncomplete,
        SchemeKind::PropSwor,
        spec_model(),
        n,
        m,
        workers,
        batch,
        rounds,
        cfg.mc_runs,
        root.child(14).master_seed(),
        true,
        rows,
    )?;
    Ok(())
}

fn incomplete_single_checks(
    cfg: &CheckTheoryConfig,
    root: &SeedProtocol,
    rows: &mut Vec<CheckRow>,
) -> Result<()> {
    // The symmetric model keeps the single-draw (B = 1) estimator's fourth
    // moment small enough for a 5% band at these run counts.
    let model = SyntheticModel::DiscreteAuc { p: 0.5, q: 0.5 };
    let (n, m) = (200, 40);
    for (i, batch) in [1u64, 10, 100].into_iter().enumerate() {
        mc_variance_rows(
            &format!("var-incomplete-single-b{batch}"),
            Strategy::IncompleteSingle,
            SchemeKind::PropSwor,
            model,
            n,
            m,
            1,
            batch,
            1,
            cfg.mc_runs,
            root.child(20 + i as u64).master_seed(),
            false,
            rows,
        )?;
    }
    Ok(())
}

fn propswr_checks(
    cfg: &CheckTheoryConfig,
    root: &SeedProtocol,
    rows: &mut Vec<CheckRow>,
) -> Result<()> {
    let (n, m, workers, batch, rounds) = (400, 40, 8, 10, 4);
    let cases: [(&str, Strategy, u64, u64); 5] = [
        ("var-bootstrap-single", Strategy::BootstrapSingle, 0, 1),
        ("var-local-complete-propswr", Strategy::LocalComplete, 0, 1),
        ("var-local-incomplete-propswr", Strategy::LocalIncomplete, batch, 1),
        ("var-repart-complete-propswr", Strategy::RepartComplete, 0, rounds),
        (
            "var-repart-incomplete-propswr",
            Strategy::RepartIncomplete,
            batch,
            rounds,
        ),
    ];
    for (i, (name, strategy, b, t)) in cases.into_iter().enumerate() {
        mc_variance_rows(
            name,
            strategy,
            SchemeKind::PropSwr,
            spec_model(),
            n,
            m,
            workers,
            b,
            t,
            cfg.mc_runs,
            root.child(30 + i as u64).master_seed(),
            false,
            rows,
        )?;
    }
    Ok(())
}

fn dominance_checks(root: &SeedProtocol, rows: &mut Vec<CheckRow>) -> Result<()> {
    let mut rng = root.run_stream(1, StreamPurpose::Eval);
    let mut min_gap = f64::INFINITY;
    let mut max_coding_diff: f64 = 0.0;
    for _ in 0..1000 {
        let c = VarianceComponents::from_parts(
            0.05 + unit_f64(&mut rng),
            0.05 + unit_f64(&mut rng),
            0.05 + unit_f64(&mut rng),
        );
        let workers = 2 + (unit_f64(&mut rng) * 5.0) as u64;
        let a = 2 + (unit_f64(&mut rng) * 5.0) as u64;
        let b_mul = 2 + (unit_f64(&mut rng) * 5.0) as u64;
        let (n, m) = (workers * a, workers * b_mul);
        let t0 = 1 + (unit_f64(&mut rng) * 4.0) as u64;
        let total_bt = a * b_mul * t0;
        let mut batch = a * b_mul;
        for cand in 2..=total_bt {
            if total_bt % cand == 0 && cand <= a * b_mul {
                batch = cand;
                break;
            }
        }
        let t = total_bt / batch;
        let gap = dominance_gap(&c, n, m, workers, t, t0, batch)?;
        min_gap = min_gap.min(gap);
        let direct = var_repart_incomplete_propswor(&c, n, m, workers, batch, t)?
            - var_repart_complete_propswor(&c, n, m, workers, t0)?;
        let scale = var_repart_complete_propswor(&c, n, m, workers, t0)?
            .abs()
            .max(gap.abs());
        max_coding_diff = max_coding_diff.max((gap - direct).abs() / scale);
    }
    rows.push(row_positive("dominance-gap-positive-grid", min_gap));
    rows.push(row_max(
        "dominance-gap-two-codings",
        max_coding_diff,
        IDENTITY_TOL,
    ));
    Ok(())
}

fn curve_shape_checks(rows: &mut Vec<CheckRow>) -> Result<()> {
    let c = spec_components();
    let (n, m, workers) = (100_000u64, 200u64, 100u64);
    let batch = n * m / (workers * workers); // aligns budgets round for round
    let t_grid: Vec<u64> = vec![1, 2, 3, 4, 5, 7, 10, 20, 50, 100, 200, 500, 1000, 10_000];

    let mut min_swor = f64::INFINITY;
    let mut min_swr = f64::INFINITY;
    for &t in &t_grid {
        let swor = var_repart_incomplete_propswor(&c, n, m, workers, batch, t)?
            - var_repart_complete_propswor(&c, n, m, workers, t)?;
        min_swor = min_swor.min(swor);
        let swr = var_repart_incomplete_propswr(&c, n, m, workers, batch, t)?
            - var_repart_complete_propswr(&c, n, m, workers, t)?;
        min_swr = min_swr.min(swr);
    }
    rows.push(row_positive("fig2-propswor-complete-dominates", min_swor));
    rows.push(row_positive("fig2-propswr-complete-dominates", min_swr));

    let at_limit = var_repart_complete_propswor(&c, n, m, workers, 10_000)?;
    rows.push(row_rel(
        "fig2-propswor-t-limit",
        var_complete(&c, n, m),
        at_limit,
        T_LIMIT_REL_TOL,
    ));
    Ok(())
}

fn relative_variance_checks(
    cfg: &CheckTheoryConfig,
    root: &SeedProtocol,
    rows: &mut Vec<CheckRow>,
) -> Result<()> {
    let epsilons = [0.1, 0.02, 0.004];
    let estimators = [
        Strategy::Complete,
        Strategy::LocalComplete,
        Strategy::RepartComplete,
    ];
    let study = relative_variance_study(
        &epsilons,
        &estimators,
        1000,
        40,
        8,
        4,
        10,
        cfg.estimate_runs,
        root.child(40).master_seed(),
        SchemeKind::PropSwor,
    )?;
    for row in &study {
        let band = 3.0 * row.stderr;
        let diff = (row.empirical_rel_var - row.theoretical_rel_var).abs();
        rows.push(CheckRow {
            name: format!("fig3-band-eps{}-{}", row.epsilon, row.estimator.name()),
            closed_form: row.theoretical_rel_var,
            empirical: row.empirical_rel_var,
            rel_error: if band > 0.0 { diff / band } else { f64::INFINITY },
            tolerance: 1.0,
            pass: diff <= band,
        });
    }
    // Gap between the non-repartitioned and repartitioned estimators grows
    // as epsilon shrinks.
    let gap_at = |eps: f64| -> f64 {
        let get = |strategy: Strategy| {
            study
                .iter()
                .find(|r| r.epsilon == eps && r.estimator == strategy)
                .map(|r| r.empirical_rel_var)
                .unwrap_or(f64::NAN)
        };
        get(Strategy::LocalComplete) - get(Strategy::RepartComplete)
    };
    let gaps: Vec<f64> = epsilons.iter().map(|&e| gap_at(e)).collect();
    let min_increase = (gaps[1] - gaps[0]).min(gaps[2] - gaps[1]);
    rows.push(row_positive("fig3-gap-monotone", min_increase));
    Ok(())
}

fn unbiasedness_checks(
    cfg: &CheckTheoryConfig,
    root: &SeedProtocol,
    rows: &mut Vec<CheckRow>,
) -> Result<()> {
    let truth = closed_auc_mean(0.1, 0.9);
    let strategies = [
        Strategy::LocalComplete,
        Strategy::LocalIncomplete,
        Strategy::RepartComplete,
        Strategy::RepartIncomplete,
    ];
    let schemes = [SchemeKind::PropSwor, SchemeKind::PropSwr];
    for (i, &strategy) in strategies.iter().enumerate() {
        for (j, &scheme) in schemes.iter().enumerate() {
            let mc = mc_for_strategy(
                strategy,
                scheme,
                spec_model(),
                400,
                40,
                8,
                10,
                4,
                cfg.unbias_runs,
                root.child(50 + (i * 2 + j) as u64).master_seed(),
            )?;
            let band = 3.0 * mc.standard_error_of_mean;
            let diff = (mc.mean - truth).abs();
            rows.push(CheckRow {
                name: format!("unbiased-{}-{}", strategy.name(), scheme.name()),
                closed_form: truth,
                empirical: mc.mean,
                rel_error: if band > 0.0 { diff / band } else { f64::INFINITY },
                tolerance: 1.0,
                pass: diff <= band,
            });
        }
    }
    Ok(())
}

fn subgradient_checks(root: &SeedProtocol, rows: &mut Vec<CheckRow>) -> Result<()> {
    let mut rng = root.run_stream(2, StreamPurpose::Eval);
    let dim = 4;
    let h = 1e-5;
    let l2 = 0.05;
    let mut max_fd_rel: f64 = 0.0;
    let mut checked = 0;
    while checked < 20 {
        let scorer = LinearScorer {
            weights: (0..dim).map(|_| 2.0 * unit_f64(&mut rng) - 1.0).collect(),
            bias: 2.0 * unit_f64(&mut rng) - 1.0,
        };
        let x: Vec<f64> = (0..dim).map(|_| 4.0 * unit_f64(&mut rng) - 2.0).collect();
        let z: Vec<f64> = (0..dim).map(|_| 4.0 * unit_f64(&mut rng) - 2.0).collect();
        let margin = scorer.score(&x) - scorer.score(&z);
        if (margin - 1.0).abs() < 1e-2 {
            continue; // too close to the hinge kink for finite differences
        }
        checked += 1;
        let (gw, _) = pair_gradient(&scorer, &x, &z, l2)?;
        let objective = |s: &LinearScorer| -> f64 {
            hinge_pair_loss(s, &x, &z).unwrap()
                + l2 * s.weights.iter().map(|w| w * w).sum::<f64>()
        };
        for d in 0..dim {
            let mut up = scorer.clone();
            up.weights[d] += h;
            let mut down = scorer.clone();
            down.weights[d] -= h;
            let fd = (objective(&up) - objective(&down)) / (2.0 * h);
            let denom = fd.abs().max(gw[d].abs()).max(1e-9);
            max_fd_rel = max_fd_rel.max((fd - gw[d]).abs() / denom);
        }
    }
    rows.push(row_max("subgradient-finite-difference", max_fd_rel, FD_REL_TOL));

    // Convexity lower bound at 100 random probe pairs.
    let mut min_slack = f64::INFINITY;
    for _ in 0..100 {
        let mk = |rng: &mut _| LinearScorer {
            weights: (0..dim).map(|_| 4.0 * unit_f64(rng) - 2.0).collect(),
            bias: 4.0 * unit_f64(rng) - 2.0,
        };
        let a = mk(&mut rng);
        let b = mk(&mut rng);
        let x: Vec<f64> = (0..dim).map(|_| 2.0 * unit_f64(&mut rng) - 1.0).collect();
        let z: Vec<f64> = (0..dim).map(|_| 2.0 * unit_f64(&mut rng) - 1.0).collect();
        let (gw, gb) = pair_gradient(&a, &x, &z, 0.0)?;
        let mut rhs = hinge_pair_loss(&a, &x, &z)? + gb * (b.bias - a.bias);
        for d in 0..dim {
            rhs += gw[d] * (b.weights[d] - a.weights[d]);
        }
        min_slack = min_slack.min(hinge_pair_loss(&b, &x, &z)? - rhs);
    }
    rows.push(CheckRow {
        name: "subgradient-convexity".into(),
        closed_form: 0.0,
        empirical: min_slack,
        rel_error: (-min_slack).max(0.0),
        tolerance: IDENTITY_TOL,
        pass: min_slack >= -IDENTITY_TOL,
    });
    Ok(())
}

fn protocol_checks(root: &SeedProtocol, rows: &mut Vec<CheckRow>) -> Result<()> {
    let (n, m, workers) = (40usize, 20usize, 4usize);
    let mut agreeing = 0u32;
    let rng = root.run_stream(3, StreamPurpose::Eval);
    for k in 0..20u64 {
        let seed = rng.clone().next_u64_at(k);
        let protocol = SeedProtocol::new(seed);
        let epoch = k;
        if simulate_coordination_free(5, &protocol, epoch, n, m, workers)? {
            agreeing += 1;
        }
    }
    rows.push(CheckRow {
        name: "propswor-coordination-free".into(),
        closed_form: 20.0,
        empirical: agreeing as f64,
        rel_error: (20.0 - agreeing as f64) / 20.0,
        tolerance: 0.0,
        pass: agreeing == 20,
    });

    let mut max_size_dev = 0u64;
    for epoch in 0..5 {
        let a = assign(SchemeKind::PropSwor, n, m, workers, root, epoch)?;
        for w in &a.per_worker {
            max_size_dev = max_size_dev
                .max(w.x_indices.len().abs_diff(n / workers) as u64)
                .max(w.z_indices.len().abs_diff(m / workers) as u64);
        }
    }
    rows.push(row_max("propswor-partition-sizes", max_size_dev as f64, 0.0));
    Ok(())
}

fn swor_checks(
    cfg: &CheckTheoryConfig,
    root: &SeedProtocol,
    rows: &mut Vec<CheckRow>,
) -> Result<()> {
    // Product kernel on Gaussians with a small cross-sample component: the
    // setting of the empirical SWOR study. A small mu_x keeps the channel
    // that SWOR's random per-worker class counts inflate (the minority
    // conditional mean) from dominating, and keeps the rare empty-minority
    // outlier harmless next to sigma^2.
    let model = SyntheticModel::GaussianProduct {
        mu_x: 0.1,
        sigma_x: 1.0,
        mu_z: 1.0,
        sigma_z: 1.0,
    };
    let comps = model.components()?;
    let (n, m, workers, rounds) = (10_000usize, 100usize, 10usize, 4u64);

    // SWOR has no concise closed form; its empirical variance should sit
    // near the prop-SWOR prediction when minority points are plentiful.
    let local = monte_carlo(
        &EstimationConfig {
            model,
            n,
            m,
            scheme: SchemeKind::Swor,
            workers,
            rounds: 1,
            mode: crate::sim::EstimationMode::Complete,
        },
        cfg.swor_runs,
        root.child(60).master_seed(),
    )?;
    let closed_local = var_local_complete_propswor(&comps, n as u64, m as u64, workers as u64)?;
    rows.push(row_rel(
        "swor-proximity-local-complete",
        closed_local,
        local.variance,
        SWOR_PROXIMITY_TOL,
    ));

    let repart = monte_carlo(
        &EstimationConfig {
            model,
            n,
            m,
            scheme: SchemeKind::Swor,
            workers,
            rounds,
            mode: crate::sim::EstimationMode::Complete,
        },
        cfg.swor_runs,
        root.child(61).master_seed(),
    )?;
    let closed_repart =
        var_repart_complete_propswor(&comps, n as u64, m as u64, workers as u64, rounds)?;
    rows.push(row_rel(
        "swor-proximity-repart-complete",
        closed_repart,
        repart.variance,
        SWOR_PROXIMITY_TOL,
    ));

    // Starved minority: with m = 10 points over 10 workers, empty minority
    // partitions fire the zero rule often enough to bias the estimator.
    // Checked on the discrete AUC model, where the truth is 0.99 and the
    // zero rule drags the mean far below it.
    let starved = monte_carlo(
        &EstimationConfig {
            model: spec_model(),
            n,
            m: 10,
            scheme: SchemeKind::Swor,
            workers,
            rounds: 1,
            mode: crate::sim::EstimationMode::Complete,
        },
        cfg.swor_runs,
        root.child(62).master_seed(),
    )?;
    let truth = closed_auc_mean(0.1, 0.9);
    let ratio = (starved.mean - truth).abs() / (3.0 * starved.standard_error_of_mean);
    rows.push(CheckRow {
        name: "swor-bias-small-m-exceeds-3se".into(),
        closed_form: truth,
        empirical: starved.mean,
        rel_error: ratio,
        tolerance: 1.0,
        // This row passes when the bias is DETECTED, i.e. the mean sits
        // strictly outside the three-standard-error band.
        pass: ratio > 1.0,
    });
    Ok(())
}

fn formula_identity_checks(rows: &mut Vec<CheckRow>) -> Result<()> {
    let c = spec_components();
    let (n, m, workers, batch) = (400u64, 40u64, 8u64, 10u64);

    let pairs: [(&str, f64, f64); 8] = [
        (
            "var-incomplete-single-b-limit",
            var_incomplete_single(&c, n, m, HUGE_BATCH),
            var_complete(&c, n, m),
        ),
        (
            "var-local-complete-propswor-n1",
            var_local_complete_propswor(&c, n, m, 1)?,
            var_complete(&c, n, m),
        ),
        (
            "var-local-incomplete-propswor-b1",
            var_local_incomplete_propswor(&c, n, m, workers, 1)?,
            c.sigma_sq / workers as f64,
        ),
        (
            "var-repart-complete-propswor-t1",
            var_repart_complete_propswor(&c, n, m, workers, 1)?,
            var_local_complete_propswor(&c, n, m, workers)?,
        ),
        (
            "var-repart-incomplete-propswor-t1",
            var_repart_incomplete_propswor(&c, n, m, workers, batch, 1)?,
            var_local_incomplete_propswor(&c, n, m, workers, batch)?,
        ),
        (
            "var-local-complete-propswr-explicit",
            var_local_complete_propswr(&c, n, m, workers)?,
            var_local_complete_propswr_explicit(&c, n, m, workers),
        ),
        (
            "var-repart-complete-propswr-n1t1",
            var_repart_complete_propswr(&c, n, m, 1, 1)?,
            var_bootstrap_single(&c, n, m),
        ),
        (
            "var-repart-incomplete-propswr-t1",
            var_repart_incomplete_propswr(&c, n, m, workers, batch, 1)?,
            var_local_incomplete_propswr(&c, n, m, workers, batch)?,
        ),
    ];
    for (name, a, b) in pairs {
        // The B -> infinity reduction leaves an exact (sigma^2 - Var)/B gap,
        // about 3e-7 relative at this component profile.
        let tol = if name.ends_with("b-limit") { 1e-6 } else { IDENTITY_TOL };
        rows.push(row_rel(name, b, a, tol));
    }

    // Statement form versus the independently coded expansion, over a grid.
    let mut max_rel: f64 = 0.0;
    for t in [1u64, 2, 4, 8] {
        for b in [1u64, 3, 10, 100] {
            let statement = var_repart_incomplete_propswor(&c, n, m, workers, b, t)?;
            let expanded = var_repart_incomplete_propswor_expanded(&c, n, m, workers, b, t);
            max_rel = max_rel.max(crate::util::rel_err(statement, expanded));
        }
    }
    rows.push(row_max(
        "var-repart-incomplete-propswor-expansion",
        max_rel,
        IDENTITY_TOL,
    ));
    Ok(())
}

fn budget_ledger_check(root: &SeedProtocol, rows: &mut Vec<CheckRow>) -> Result<()> {
    let model = spec_model();
    let (n, m, workers, batch, rounds) = (40usize, 16usize, 4usize, 7u64, 3u64);
    let ds = model.sample(n, m, &mut root.run_stream(4, StreamPurpose::Dataset));
    let mut max_diff = 0u64;
    for strategy in Strategy::ALL {
        let (scheme, w, t, mode) =
            strategy_run_shape(strategy, SchemeKind::PropSwor, workers, rounds, batch);
        let (_, ledger) = run_estimation(
            &ds,
            &Kernel::AucIndicator,
            scheme,
            w,
            t,
            mode,
            &root.child(70),
        )?;
        let budget = pair_budget(strategy, n as u64, m as u64, workers as u64, batch, rounds)?;
        max_diff = max_diff.max(ledger.pairs_evaluated.abs_diff(budget));
    }
    rows.push(row_max("pair-budget-ledger", max_diff as f64, 0.0));
    Ok(())
}

/// Sanity check on the complete statistic used by several rows: the mean of
/// a fresh complete statistic matches enumeration.
#[allow(dead_code)]
fn complete_statistic_mean(root: &SeedProtocol) -> Result<f64> {
    let model = spec_model();
    let ds = model.sample(100, 40, &mut root.run_stream(5, StreamPurpose::Dataset));
    complete_two_sample(&ds, &Kernel::AucIndicator)
}

trait NextAt {
    fn next_u64_at(self, k: u64) -> u64;
}

impl NextAt for rand_chacha::ChaCha8Rng {
    /// k-th u64 of the stream, consuming a clone; a tiny helper to derive a
    /// batch of independent seeds from one stream.
    fn next_u64_at(mut self, k: u64) -> u64 {
        use rand::RngCore;
        for _ in 0..k {
            self.next_u64();
        }
        self.next_u64()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::CheckTheoryConfig;

    fn quick_config() -> CheckTheoryConfig {
        CheckTheoryConfig {
            mc_runs: 300,
            unbias_runs: 300,
            estimate_runs: 200,
            swor_runs: 200,
            ..CheckTheoryConfig::default()
        }
    }

    #[test]
    fn harness_runs_and_covers_every_variance_op() {
        let report = run_all(&quick_config()).unwrap();
        assert!(!report.rows.is_empty());
        for op in VARIANCE_OP_NAMES {
            assert!(
                report.rows.iter().any(|r| r.name.contains(op)),
                "no check row covers {op}"
            );
        }
        // Exact identity rows hold even at smoke-run sizes.
        for name in [
            "hoeffding-closed-auc-vs-enumerated",
            "hoeffding-identity",
            "dominance-gap-positive-grid",
            "dominance-gap-two-codings",
            "fig2-propswor-complete-dominates",
            "fig2-propswr-complete-dominates",
            "fig2-propswor-t-limit",
            "propswor-coordination-free",
            "propswor-partition-sizes",
            "subgradient-finite-difference",
            "subgradient-convexity",
            "pair-budget-ledger",
            "var-repart-incomplete-propswor-expansion",
        ] {
            let row = report.row(name).unwrap_or_else(|| panic!("missing row {name}"));
            assert!(row.pass, "{name}: {row:?}");
        }
    }

    #[test]
    fn csv_shape_is_stable() {
        let report = CheckReport {
            rows: vec![CheckRow {
                name: "demo".into(),
                closed_form: 1.0,
                empirical: 1.02,
                rel_error: 0.02,
                tolerance: 0.05,
                pass: true,
            }],
        };
        let csv = report.to_csv();
        let mut lines = csv.lines();
        assert_eq!(lines.next().unwrap(), crate::experiments::CHECK_THEORY_HEADER);
        let row = lines.next().unwrap();
        assert!(row.starts_with("demo,"));
        assert!(row.ends_with(",true"));
        assert_eq!(row.split(',').count(), 6);
    }
}
