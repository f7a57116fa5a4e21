//! The experiment commands behind the CLI: closed-form variance curves, the
//! Monte Carlo relative-variance study, and the repartitioned-SGD learning
//! study. Each produces CSV with a fixed column order and floats printed at
//! 17 significant digits, byte-identical across runs and thread counts.

use std::num::NonZeroU64;
use std::path::Path;

use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::config::{DataConfig, EstimateConfig, LearnConfig, VarianceCurvesConfig};
use crate::data::{load_two_sample_csv, CsvLoadSpec, TwoSampleDataset};
use crate::error::{Error, Result};
use crate::partition::SchemeKind;
use crate::rng::{uniform_below, SeedProtocol, StreamPurpose};
use crate::sgd::{train_replicated, SgdConfig, TrainingTrace};
use crate::sim::relative_variance_study;
use crate::util::{fmt_f64, median, quantile};
use crate::variance::{pair_budget, variance_for, Strategy};

/// CSV header of `variance-curves`.
pub const VARIANCE_CURVES_HEADER: &str = "strategy,scheme,T,B,pair_budget,variance";
/// CSV header of `estimate`.
pub const ESTIMATE_HEADER: &str =
    "epsilon,estimator,empirical_rel_var,theoretical_rel_var,stderr,runs";
/// CSV header of `learn` (per-run rows; `test_auc` empty off-cadence).
pub const LEARN_HEADER: &str = "n_r,run,iteration,monitor_loss,monitor_auc,test_auc";
/// CSV header of the `learn` per-iteration aggregate file.
pub const LEARN_SUMMARY_HEADER: &str =
    "n_r,iteration,median_monitor_loss,median_monitor_auc,median_test_auc,q1_test_auc,q3_test_auc";
/// CSV header of `check-theory`.
pub const CHECK_THEORY_HEADER: &str = "check_name,closed_form,empirical,rel_error,tolerance,pass";

/// Closed-form variance as a function of the pair budget, for every strategy
/// under prop-SWOR and prop-SWR.
pub fn cmd_variance_curves(config: &VarianceCurvesConfig) -> Result<String> {
    config.model.validate()?;
    let comps = config.model.components()?;
    let (n, m, workers) = (config.n, config.m, config.workers);
    if n == 0 || m == 0 || workers == 0 {
        return Err(Error::InvalidParameter {
            name: "variance-curves",
            reason: "n, m and workers must be positive".into(),
        });
    }
    let repart_batch = match config.repart_batch {
        Some(b) if b >= 1 => b,
        Some(_) => {
            return Err(Error::InvalidParameter {
                name: "repart_batch",
                reason: "must be at least 1".into(),
            })
        }
        None => {
            let denom = workers * workers;
            if (n * m) % denom != 0 {
                return Err(Error::InvalidParameter {
                    name: "repart_batch",
                    reason: format!(
                        "default batch nm/N^2 is not an integer for n={n}, m={m}, N={workers}; \
                         set repart_batch explicitly"
                    ),
                });
            }
            n * m / denom
        }
    };
    if config.t_sweep.is_empty() || config.t_sweep.iter().any(|&t| t == 0) {
        return Err(Error::InvalidParameter {
            name: "t_sweep",
            reason: "need a nonempty sweep of positive repartition counts".into(),
        });
    }
    if config.b_sweep.iter().any(|&b| b == 0) {
        return Err(Error::InvalidParameter {
            name: "b_sweep",
            reason: "batch sizes must be positive".into(),
        });
    }

    let mut out = String::from(VARIANCE_CURVES_HEADER);
    out.push('\n');
    let mut push_row =
        |strategy: Strategy, scheme: SchemeKind, t: u64, b: u64| -> Result<()> {
            let variance = variance_for(strategy, scheme, &comps, n, m, workers, b, t)?;
            let budget = pair_budget(strategy, n, m, workers, b, t)?;
            out.push_str(&format!(
                "{},{},{},{},{},{}\n",
                strategy.name(),
                scheme.name(),
                t,
                b,
                budget,
                fmt_f64(variance)
            ));
            Ok(())
        };

    for scheme in [SchemeKind::PropSwor, SchemeKind::PropSwr] {
        push_row(Strategy::Complete, scheme, 1, 0)?;
        for &b in &config.b_sweep {
            push_row(Strategy::IncompleteSingle, scheme, 1, b)?;
        }
        push_row(Strategy::LocalComplete, scheme, 1, 0)?;
        for &b in &config.b_sweep {
            push_row(Strategy::LocalIncomplete, scheme, 1, b)?;
        }
        for &t in &config.t_sweep {
            push_row(Strategy::RepartComplete, scheme, t, 0)?;
        }
        for &t in &config.t_sweep {
            push_row(Strategy::RepartIncomplete, scheme, t, repart_batch)?;
        }
        if scheme == SchemeKind::PropSwr {
            push_row(Strategy::BootstrapSingle, scheme, 1, 0)?;
        }
    }
    Ok(out)
}

/// Monte Carlo relative-variance study on the p = 1 - q = epsilon family.
pub fn cmd_estimate(config: &EstimateConfig) -> Result<String> {
    let rows = relative_variance_study(
        &config.epsilons,
        &config.estimators,
        config.n,
        config.m,
        config.workers,
        config.rounds,
        config.batch,
        config.runs,
        config.master_seed,
        config.scheme,
    )?;
    let mut out = String::from(ESTIMATE_HEADER);
    out.push('\n');
    for row in rows {
        out.push_str(&format!(
            "{},{},{},{},{},{}\n",
            fmt_f64(row.epsilon),
            row.estimator.name(),
            fmt_f64(row.empirical_rel_var),
            fmt_f64(row.theoretical_rel_var),
            fmt_f64(row.stderr),
            row.runs
        ));
    }
    Ok(out)
}

/// The dataset pair the learning study trains and evaluates on.
pub struct LearnData {
    pub train: TwoSampleDataset,
    pub test: TwoSampleDataset,
}

fn gaussian_class(
    count: usize,
    dim: usize,
    mean_shift: f64,
    rng: &mut ChaCha8Rng,
) -> Vec<f64> {
    let normal = Normal::new(0.0, 1.0).expect("unit normal");
    let mut flat = Vec::with_capacity(count * dim);
    for _ in 0..count * dim {
        flat.push(normal.sample(rng) + mean_shift);
    }
    flat
}

/// Stratified per-class split: a seeded permutation of each class, the first
/// `test_fraction` going to test.
fn stratified_split(
    ds: &TwoSampleDataset,
    test_fraction: f64,
    rng: &mut ChaCha8Rng,
) -> Result<LearnData> {
    if !(0.0 < test_fraction && test_fraction < 1.0) {
        return Err(Error::InvalidParameter {
            name: "test_fraction",
            reason: format!("must lie in (0, 1), got {test_fraction}"),
        });
    }
    let split_class = |len: usize, rng: &mut ChaCha8Rng| {
        let mut perm: Vec<usize> = (0..len).collect();
        crate::rng::shuffle(rng, &mut perm);
        let cut = ((len as f64) * test_fraction).round() as usize;
        let cut = cut.clamp(1, len - 1);
        (perm[..cut].to_vec(), perm[cut..].to_vec())
    };
    let (x_test, x_train) = split_class(ds.n(), rng);
    let (z_test, z_train) = split_class(ds.m(), rng);
    let gather = |idx: &[usize], get: &dyn Fn(usize) -> Vec<f64>| {
        let mut flat = Vec::with_capacity(idx.len() * ds.dim());
        for &i in idx {
            flat.extend_from_slice(&get(i));
        }
        flat
    };
    let x_of = |i: usize| ds.x(i).to_vec();
    let z_of = |i: usize| ds.z(i).to_vec();
    Ok(LearnData {
        train: TwoSampleDataset::from_rows(
            ds.dim(),
            gather(&x_train, &x_of),
            gather(&z_train, &z_of),
        )?,
        test: TwoSampleDataset::from_rows(
            ds.dim(),
            gather(&x_test, &x_of),
            gather(&z_test, &z_of),
        )?,
    })
}

fn subsample_class(
    ds: &TwoSampleDataset,
    fraction: f64,
    rng: &mut ChaCha8Rng,
) -> Result<TwoSampleDataset> {
    if !(0.0 < fraction && fraction <= 1.0) {
        return Err(Error::InvalidParameter {
            name: "subsample",
            reason: format!("must lie in (0, 1], got {fraction}"),
        });
    }
    let pick = |len: usize, rng: &mut ChaCha8Rng| {
        let keep = (((len as f64) * fraction).round() as usize).max(1);
        let mut perm: Vec<usize> = (0..len).collect();
        crate::rng::shuffle(rng, &mut perm);
        let mut chosen = perm[..keep].to_vec();
        chosen.sort_unstable();
        chosen
    };
    let xs = pick(ds.n(), rng);
    let zs = pick(ds.m(), rng);
    let mut x_flat = Vec::with_capacity(xs.len() * ds.dim());
    for &i in &xs {
        x_flat.extend_from_slice(ds.x(i));
    }
    let mut z_flat = Vec::with_capacity(zs.len() * ds.dim());
    for &i in &zs {
        z_flat.extend_from_slice(ds.z(i));
    }
    TwoSampleDataset::from_rows(ds.dim(), x_flat, z_flat)
}

/// Standardize both datasets to the train set's per-coordinate mean and
/// standard deviation (constant coordinates are left unscaled).
fn standardize(data: LearnData) -> LearnData {
    let dim = data.train.dim();
    let count = (data.train.n() + data.train.m()) as f64;
    let mut mean = vec![0.0; dim];
    for k in 0..data.train.n() {
        for (d, v) in data.train.x(k).iter().enumerate() {
            mean[d] += v;
        }
    }
    for l in 0..data.train.m() {
        for (d, v) in data.train.z(l).iter().enumerate() {
            mean[d] += v;
        }
    }
    for v in &mut mean {
        *v /= count;
    }
    let mut var = vec![0.0; dim];
    for k in 0..data.train.n() {
        for (d, v) in data.train.x(k).iter().enumerate() {
            var[d] += (v - mean[d]) * (v - mean[d]);
        }
    }
    for l in 0..data.train.m() {
        for (d, v) in data.train.z(l).iter().enumerate() {
            var[d] += (v - mean[d]) * (v - mean[d]);
        }
    }
    let scale: Vec<f64> = var
        .iter()
        .map(|&v| {
            let sd = (v / count).sqrt();
            if sd > 0.0 {
                1.0 / sd
            } else {
                1.0
            }
        })
        .collect();
    let apply = |ds: &TwoSampleDataset| {
        let transform = |point: &[f64]| -> Vec<f64> {
            point
                .iter()
                .enumerate()
                .map(|(d, v)| (v - mean[d]) * scale[d])
                .collect()
        };
        let mut xs = Vec::with_capacity(ds.n() * dim);
        for k in 0..ds.n() {
            xs.extend_from_slice(&transform(ds.x(k)));
        }
        let mut zs = Vec::with_capacity(ds.m() * dim);
        for l in 0..ds.m() {
            zs.extend_from_slice(&transform(ds.z(l)));
        }
        TwoSampleDataset::from_rows(dim, xs, zs).expect("finite standardization")
    };
    LearnData {
        train: apply(&data.train),
        test: apply(&data.test),
    }
}

/// Materialize the learning datasets described by the config.
pub fn prepare_learn_data(config: &LearnConfig) -> Result<LearnData> {
    let root = SeedProtocol::new(config.master_seed);
    let mut data = match &config.data {
        DataConfig::Synthetic {
            dim,
            train_positives,
            train_negatives,
            test_positives,
            test_negatives,
            separation,
        } => {
            if *dim == 0 {
                return Err(Error::InvalidParameter {
                    name: "dim",
                    reason: "need at least one feature".into(),
                });
            }
            // Positives shifted by separation/sqrt(dim) per coordinate.
            let shift = separation / (*dim as f64).sqrt();
            let mut rng = root.run_stream(0, StreamPurpose::Dataset);
            let train = TwoSampleDataset::from_rows(
                *dim,
                gaussian_class(*train_positives, *dim, shift, &mut rng),
                gaussian_class(*train_negatives, *dim, 0.0, &mut rng),
            )?;
            let test = TwoSampleDataset::from_rows(
                *dim,
                gaussian_class(*test_positives, *dim, shift, &mut rng),
                gaussian_class(*test_negatives, *dim, 0.0, &mut rng),
            )?;
            LearnData { train, test }
        }
        DataConfig::Csv {
            path,
            positive_labels,
            label_column,
            feature_columns,
            header,
            test_fraction,
            subsample,
        } => {
            let spec = CsvLoadSpec {
                positive_labels: positive_labels.iter().cloned().collect(),
                label_column: *label_column,
                feature_columns: feature_columns.clone(),
                has_header: *header,
            };
            let mut ds = load_two_sample_csv(Path::new(path), &spec)?;
            let mut rng = root.run_stream(0, StreamPurpose::Eval);
            if let Some(fraction) = subsample {
                ds = subsample_class(&ds, *fraction, &mut rng)?;
            }
            stratified_split(&ds, *test_fraction, &mut rng)?
        }
    };
    if config.standardize {
        data = standardize(data);
    }
    if config.truncate_to_divisible {
        data.train = data.train.truncate_to_divisible(config.workers)?;
    } else if data.train.n() % config.workers != 0 || data.train.m() % config.workers != 0 {
        return Err(Error::Divisibility {
            what: "training class",
            size: data.train.n() as u64,
            workers: config.workers as u64,
        });
    }
    Ok(data)
}

/// The learning study: per-run trace rows plus a per-iteration aggregate
/// file (medians and quartiles over runs).
pub fn cmd_learn(config: &LearnConfig) -> Result<(String, String)> {
    let data = prepare_learn_data(config)?;
    let base = SgdConfig {
        workers: config.workers,
        batch: config.batch,
        repartition_every: None, // set per cell
        step_size: config.step_size,
        momentum: config.momentum,
        l2_coeff: config.l2_coeff,
        iterations: config.iterations,
        scheme: config.scheme,
        monitor_pairs: config.monitor_pairs,
        test_every: config.test_every,
    };
    let n_r_values: Vec<Option<NonZeroU64>> = config.n_r_list.iter().map(|v| v.0).collect();
    let traces = train_replicated(
        &data.train,
        &data.test,
        &base,
        &n_r_values,
        config.runs,
        config.master_seed,
    )?;

    let mut out = String::from(LEARN_HEADER);
    out.push('\n');
    for (cell, run, trace) in &traces {
        let label = config.n_r_list[*cell].label();
        for s in 0..trace.monitor_loss.len() {
            let test = trace.test_auc[s]
                .map(|v| fmt_f64(v))
                .unwrap_or_default();
            out.push_str(&format!(
                "{},{},{},{},{},{}\n",
                label,
                run,
                s + 1,
                fmt_f64(trace.monitor_loss[s]),
                fmt_f64(trace.monitor_auc[s]),
                test
            ));
        }
    }

    let summary = summarize_learn(config, &traces);
    Ok((out, summary))
}

fn summarize_learn(config: &LearnConfig, traces: &[(usize, u64, TrainingTrace)]) -> String {
    let mut out = String::from(LEARN_SUMMARY_HEADER);
    out.push('\n');
    let iterations = config.iterations as usize;
    for cell in 0..config.n_r_list.len() {
        let label = config.n_r_list[cell].label();
        let cell_traces: Vec<&TrainingTrace> = traces
            .iter()
            .filter(|(c, _, _)| *c == cell)
            .map(|(_, _, t)| t)
            .collect();
        for s in 0..iterations {
            let losses: Vec<f64> = cell_traces.iter().map(|t| t.monitor_loss[s]).collect();
            let aucs: Vec<f64> = cell_traces.iter().map(|t| t.monitor_auc[s]).collect();
            let tests: Vec<f64> = cell_traces
                .iter()
                .filter_map(|t| t.test_auc[s])
                .collect();
            let (med_t, q1_t, q3_t) = if tests.is_empty() {
                (String::new(), String::new(), String::new())
            } else {
                (
                    fmt_f64(median(&tests)),
                    fmt_f64(quantile(&tests, 0.25)),
                    fmt_f64(quantile(&tests, 0.75)),
                )
            };
            out.push_str(&format!(
                "{},{},{},{},{},{},{}\n",
                label,
                s + 1,
                fmt_f64(median(&losses)),
                fmt_f64(median(&aucs)),
                med_t,
                q1_t,
                q3_t
            ));
        }
    }
    out
}

/// Final test AUC per (n_r cell, run); the quantity the cadence comparison
/// is made on.
pub fn final_test_aucs(traces: &[(usize, u64, TrainingTrace)], cells: usize) -> Vec<Vec<f64>> {
    let mut by_cell = vec![Vec::new(); cells];
    for (cell, _, trace) in traces {
        if let Some(auc) = trace.final_test_auc() {
            by_cell[*cell].push(auc);
        }
    }
    by_cell
}

/// Shared sampled-pair helper for tests that need a quick AUC reference.
pub fn sample_pairs(
    n: usize,
    m: usize,
    count: u64,
    rng: &mut ChaCha8Rng,
) -> Vec<(usize, usize)> {
    (0..count)
        .map(|_| {
            (
                uniform_below(rng, n as u64) as usize,
                uniform_below(rng, m as u64) as usize,
            )
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::NrValue;

    #[test]
    fn variance_curves_have_aligned_repart_budgets() {
        let config = VarianceCurvesConfig {
            n: 1000,
            m: 100,
            workers: 10,
            t_sweep: vec![1, 2, 4],
            b_sweep: vec![10, 100],
            ..VarianceCurvesConfig::default()
        };
        let csv = cmd_variance_curves(&config).unwrap();
        let mut complete_budgets = Vec::new();
        let mut incomplete_budgets = Vec::new();
        for line in csv.lines().skip(1) {
            let fields: Vec<&str> = line.split(',').collect();
            assert_eq!(fields.len(), 6);
            if fields[1] != "prop-swor" {
                continue;
            }
            match fields[0] {
                "repart-complete" => complete_budgets.push(fields[4].to_string()),
                "repart-incomplete" => incomplete_budgets.push(fields[4].to_string()),
                _ => {}
            }
        }
        assert_eq!(complete_budgets, incomplete_budgets);
        assert_eq!(complete_budgets, vec!["10000", "20000", "40000"]);
    }

    #[test]
    fn variance_curves_include_the_bootstrap_reference() {
        let config = VarianceCurvesConfig {
            n: 100,
            m: 50,
            workers: 5,
            t_sweep: vec![1],
            b_sweep: vec![10],
            repart_batch: Some(10),
            ..VarianceCurvesConfig::default()
        };
        let csv = cmd_variance_curves(&config).unwrap();
        let bootstrap: Vec<&str> = csv
            .lines()
            .filter(|l| l.starts_with("bootstrap-single"))
            .collect();
        assert_eq!(bootstrap.len(), 1);
        assert!(bootstrap[0].contains("prop-swr"));
        assert!(bootstrap[0].contains(",5000,"));
    }

    #[test]
    fn estimate_csv_schema() {
        let config = EstimateConfig {
            n: 80,
            m: 16,
            workers: 4,
            rounds: 2,
            runs: 200,
            epsilons: vec![0.1],
            ..EstimateConfig::default()
        };
        let csv = cmd_estimate(&config).unwrap();
        let mut lines = csv.lines();
        assert_eq!(lines.next().unwrap(), ESTIMATE_HEADER);
        let body: Vec<&str> = lines.collect();
        assert_eq!(body.len(), 3);
        for line in body {
            assert_eq!(line.split(',').count(), 6);
            assert!(line.ends_with(",200"));
        }
    }

    #[test]
    fn synthetic_learn_data_respects_divisibility() {
        let config = LearnConfig::default();
        let data = prepare_learn_data(&config).unwrap();
        assert_eq!(data.train.n() % config.workers, 0);
        assert_eq!(data.train.m() % config.workers, 0);
        assert_eq!(data.train.dim(), 9);
        assert_eq!(data.test.n(), 140);
    }

    #[test]
    fn learn_emits_both_files() {
        let config = LearnConfig {
            data: DataConfig::Synthetic {
                dim: 2,
                train_positives: 10,
                train_negatives: 20,
                test_positives: 5,
                test_negatives: 10,
                separation: 2.0,
            },
            workers: 2,
            batch: 4,
            iterations: 6,
            runs: 3,
            n_r_list: vec![NrValue(NonZeroU64::new(2)), NrValue(None)],
            monitor_pairs: 16,
            test_every: 3,
            ..LearnConfig::default()
        };
        let (rows, summary) = cmd_learn(&config).unwrap();
        let mut lines = rows.lines();
        assert_eq!(lines.next().unwrap(), LEARN_HEADER);
        let body: Vec<&str> = lines.collect();
        // 2 cells x 3 runs x 6 iterations.
        assert_eq!(body.len(), 36);
        // test_auc empty off-cadence, populated on-cadence.
        let first = body[0].split(',').collect::<Vec<_>>();
        assert_eq!(first[0], "2");
        assert_eq!(first[2], "1");
        assert!(first[5].is_empty());
        let third = body[2].split(',').collect::<Vec<_>>();
        assert!(!third[5].is_empty());

        let mut sum_lines = summary.lines();
        assert_eq!(sum_lines.next().unwrap(), LEARN_SUMMARY_HEADER);
        assert_eq!(sum_lines.count(), 12);
    }

    #[test]
    fn gamma_zero_produces_flat_loss_columns() {
        let config = LearnConfig {
            data: DataConfig::Synthetic {
                dim: 2,
                train_positives: 10,
                train_negatives: 20,
                test_positives: 5,
                test_negatives: 10,
                separation: 2.0,
            },
            workers: 2,
            batch: 4,
            iterations: 5,
            runs: 2,
            n_r_list: vec![NrValue(NonZeroU64::new(1))],
            step_size: 0.0,
            monitor_pairs: 16,
            test_every: 2,
            ..LearnConfig::default()
        };
        let (rows, _) = cmd_learn(&config).unwrap();
        let losses: Vec<&str> = rows
            .lines()
            .skip(1)
            .map(|l| l.split(',').nth(3).unwrap())
            .collect();
        assert!(losses.iter().all(|&l| l == losses[0]));
    }

    #[test]
    fn standardization_centers_training_features() {
        let config = LearnConfig {
            data: DataConfig::Synthetic {
                dim: 3,
                train_positives: 40,
                train_negatives: 60,
                test_positives: 10,
                test_negatives: 10,
                separation: 3.0,
            },
            workers: 2,
            ..LearnConfig::default()
        };
        let data = prepare_learn_data(&config).unwrap();
        let dim = data.train.dim();
        let count = (data.train.n() + data.train.m()) as f64;
        for d in 0..dim {
            let mut sum = 0.0;
            let mut sq = 0.0;
            for k in 0..data.train.n() {
                sum += data.train.x(k)[d];
                sq += data.train.x(k)[d] * data.train.x(k)[d];
            }
            for l in 0..data.train.m() {
                sum += data.train.z(l)[d];
                sq += data.train.z(l)[d] * data.train.z(l)[d];
            }
            let mean = sum / count;
            let var = sq / count - mean * mean;
            assert!(mean.abs() < 1e-10, "coordinate {d} mean {mean}");
            assert!((var - 1.0).abs() < 1e-8, "coordinate {d} variance {var}");
        }
    }

    #[test]
    fn csv_learn_data_round_trip() {
        let dir = std::env::temp_dir().join(format!("tuplewise-test-{}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("toy.csv");
        let mut text = String::new();
        // 12 positives, 28 negatives, 2 features.
        for i in 0..40 {
            let label = if i % 10 < 3 { 1 } else { 0 };
            text.push_str(&format!("{}.5,{}.25,{label}\n", i, 40 - i));
        }
        std::fs::write(&path, text).unwrap();
        let config = LearnConfig {
            data: DataConfig::Csv {
                path: path.to_string_lossy().into_owned(),
                positive_labels: vec!["1".into()],
                label_column: None,
                feature_columns: None,
                header: false,
                test_fraction: 0.25,
                subsample: None,
            },
            workers: 3,
            standardize: false,
            ..LearnConfig::default()
        };
        let data = prepare_learn_data(&config).unwrap();
        assert_eq!(data.test.n(), 3);
        assert_eq!(data.test.m(), 7);
        assert_eq!(data.train.n() % 3, 0);
        assert_eq!(data.train.m() % 3, 0);
        std::fs::remove_dir_all(&dir).ok();
    }
}
