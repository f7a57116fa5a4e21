//! C ABI for the tuplewise estimation library.
//!
//! Datasets travel as opaque handles created and released by this library;
//! every other value crosses the boundary as plain scalars or the POD
//! [`TwComponents`] struct. All fallible calls return a [`TwStatus`] and
//! write results through out-pointers, which they touch only on `TW_OK`.
//! The header `include/tuplewise.h` is generated at build time by cbindgen.

use std::ffi::c_char;

use tuplewise::estimators::complete_two_sample;
use tuplewise::model::{
    closed_auc_mean, hoeffding_components_closed_auc, hoeffding_components_closed_product,
    hoeffding_components_enumerated, DiscreteAucDistribution, GaussianProductDistribution,
    SyntheticModel, VarianceComponents,
};
use tuplewise::partition::SchemeKind;
use tuplewise::rng::{SeedProtocol, StreamPurpose};
use tuplewise::sim::{monte_carlo, run_estimation, EstimationConfig, EstimationMode};
use tuplewise::variance::{dominance_gap, pair_budget, variance_for, Strategy};
use tuplewise::{Error, Kernel, TwoSampleDataset};

/// Call outcome. Anything other than `TW_OK` leaves out-parameters untouched.
#[repr(i32)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TwStatus {
    Ok = 0,
    NullArgument = 1,
    InvalidArgument = 2,
    Divisibility = 3,
    DimensionMismatch = 4,
    EmptySample = 5,
    BudgetExceeded = 6,
    Unsupported = 7,
    Internal = 8,
}

/// Built-in parameter-free pair kernels.
#[repr(i32)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TwKernel {
    AucIndicator = 0,
    AucHalfTies = 1,
    Product = 2,
    Gini = 3,
    SampleVariance = 4,
    KendallTau = 5,
    Vus = 6,
}

/// Repartitioning schemes.
#[repr(i32)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TwScheme {
    PropSwor = 0,
    Swor = 1,
    PropSwr = 2,
    DeterministicShuffle = 3,
}

/// Estimation strategies with closed-form variances.
#[repr(i32)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TwStrategy {
    Complete = 0,
    IncompleteSingle = 1,
    LocalComplete = 2,
    LocalIncomplete = 3,
    RepartComplete = 4,
    RepartIncomplete = 5,
    BootstrapSingle = 6,
}

/// Hoeffding variance components of a pair kernel.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TwComponents {
    pub sigma0_sq: f64,
    pub sigma1_sq: f64,
    pub sigma2_sq: f64,
    pub sigma_sq: f64,
}

/// Opaque two-sample dataset handle.
pub struct TwDataset(TwoSampleDataset);

fn status_of(err: &Error) -> TwStatus {
    match err {
        Error::DimensionMismatch { .. } => TwStatus::DimensionMismatch,
        Error::Divisibility { .. } => TwStatus::Divisibility,
        Error::EmptySample { .. } => TwStatus::EmptySample,
        Error::TupleBudgetExceeded { .. } | Error::BudgetConstraint { .. } => {
            TwStatus::BudgetExceeded
        }
        Error::NonFinite { .. }
        | Error::InvalidProbability { .. }
        | Error::InvalidParameter { .. }
        | Error::PartitionMismatch { .. } => TwStatus::InvalidArgument,
        _ => TwStatus::Internal,
    }
}

fn kernel_of(kernel: TwKernel) -> Kernel {
    match kernel {
        TwKernel::AucIndicator => Kernel::AucIndicator,
        TwKernel::AucHalfTies => Kernel::AucHalfTies,
        TwKernel::Product => Kernel::Product,
        TwKernel::Gini => Kernel::Gini,
        TwKernel::SampleVariance => Kernel::SampleVariance,
        TwKernel::KendallTau => Kernel::KendallTau,
        TwKernel::Vus => Kernel::Vus,
    }
}

fn scheme_of(scheme: TwScheme) -> SchemeKind {
    match scheme {
        TwScheme::PropSwor => SchemeKind::PropSwor,
        TwScheme::Swor => SchemeKind::Swor,
        TwScheme::PropSwr => SchemeKind::PropSwr,
        TwScheme::DeterministicShuffle => SchemeKind::DeterministicShuffle,
    }
}

fn strategy_of(strategy: TwStrategy) -> Strategy {
    match strategy {
        TwStrategy::Complete => Strategy::Complete,
        TwStrategy::IncompleteSingle => Strategy::IncompleteSingle,
        TwStrategy::LocalComplete => Strategy::LocalComplete,
        TwStrategy::LocalIncomplete => Strategy::LocalIncomplete,
        TwStrategy::RepartComplete => Strategy::RepartComplete,
        TwStrategy::RepartIncomplete => Strategy::RepartIncomplete,
        TwStrategy::BootstrapSingle => Strategy::BootstrapSingle,
    }
}

fn components_out(c: &VarianceComponents) -> TwComponents {
    TwComponents {
        sigma0_sq: c.sigma0_sq,
        sigma1_sq: c.sigma1_sq,
        sigma2_sq: c.sigma2_sq,
        sigma_sq: c.sigma_sq,
    }
}

fn components_in(c: &TwComponents) -> VarianceComponents {
    VarianceComponents {
        sigma0_sq: c.sigma0_sq,
        sigma1_sq: c.sigma1_sq,
        sigma2_sq: c.sigma2_sq,
        sigma_sq: c.sigma_sq,
    }
}

/// Static name for a status code; never null.
#[no_mangle]
pub extern "C" fn tw_status_name(status: TwStatus) -> *const c_char {
    let name: &'static [u8] = match status {
        TwStatus::Ok => b"ok\0",
        TwStatus::NullArgument => b"null argument\0",
        TwStatus::InvalidArgument => b"invalid argument\0",
        TwStatus::Divisibility => b"divisibility violation\0",
        TwStatus::DimensionMismatch => b"dimension mismatch\0",
        TwStatus::EmptySample => b"empty sample\0",
        TwStatus::BudgetExceeded => b"budget exceeded or mismatched\0",
        TwStatus::Unsupported => b"unsupported\0",
        TwStatus::Internal => b"internal error\0",
    };
    name.as_ptr() as *const c_char
}

/// Closed-form components of the AUC indicator under the two-atom model
/// (positives on {0, 2} with P(X=2)=q, negatives on {-1, +1} with P(Z=+1)=p).
///
/// # Safety
/// `out` must be a valid, writable pointer.
#[no_mangle]
pub unsafe extern "C" fn tw_components_auc(p: f64, q: f64, out: *mut TwComponents) -> TwStatus {
    if out.is_null() {
        return TwStatus::NullArgument;
    }
    match hoeffding_components_closed_auc(p, q) {
        Ok(c) => {
            *out = components_out(&c);
            TwStatus::Ok
        }
        Err(e) => status_of(&e),
    }
}

/// Closed-form components of the product kernel under independent Gaussians.
///
/// # Safety
/// `out` must be a valid, writable pointer.
#[no_mangle]
pub unsafe extern "C" fn tw_components_product(
    mu_x: f64,
    sigma_x: f64,
    mu_z: f64,
    sigma_z: f64,
    out: *mut TwComponents,
) -> TwStatus {
    if out.is_null() {
        return TwStatus::NullArgument;
    }
    match GaussianProductDistribution::new(mu_x, sigma_x, mu_z, sigma_z) {
        Ok(d) => {
            *out = components_out(&hoeffding_components_closed_product(&d));
            TwStatus::Ok
        }
        Err(e) => status_of(&e),
    }
}

/// Exact components of any built-in pair kernel under the two-atom AUC
/// model, by enumeration of the support.
///
/// # Safety
/// `out` must be a valid, writable pointer.
#[no_mangle]
pub unsafe extern "C" fn tw_components_enumerated(
    kernel: TwKernel,
    p: f64,
    q: f64,
    out: *mut TwComponents,
) -> TwStatus {
    if out.is_null() {
        return TwStatus::NullArgument;
    }
    let dist = match DiscreteAucDistribution::new(p, q) {
        Ok(d) => d,
        Err(e) => return status_of(&e),
    };
    match hoeffding_components_enumerated(&kernel_of(kernel), &dist) {
        Ok(c) => {
            *out = components_out(&c);
            TwStatus::Ok
        }
        Err(e) => status_of(&e),
    }
}

/// True AUC U(h) = q + (1-q)(1-p) of the two-atom model.
///
/// # Safety
/// `out` must be a valid, writable pointer.
#[no_mangle]
pub unsafe extern "C" fn tw_auc_mean(p: f64, q: f64, out: *mut f64) -> TwStatus {
    if out.is_null() {
        return TwStatus::NullArgument;
    }
    if !(0.0..=1.0).contains(&p) || !(0.0..=1.0).contains(&q) {
        return TwStatus::InvalidArgument;
    }
    *out = closed_auc_mean(p, q);
    TwStatus::Ok
}

/// Closed-form variance of a strategy. `batch`/`rounds` are ignored by
/// strategies that do not use them.
///
/// # Safety
/// `components` and `out` must be valid pointers.
#[no_mangle]
pub unsafe extern "C" fn tw_variance(
    strategy: TwStrategy,
    scheme: TwScheme,
    components: *const TwComponents,
    n: u64,
    m: u64,
    workers: u64,
    batch: u64,
    rounds: u64,
    out: *mut f64,
) -> TwStatus {
    if components.is_null() || out.is_null() {
        return TwStatus::NullArgument;
    }
    let c = components_in(&*components);
    match variance_for(
        strategy_of(strategy),
        scheme_of(scheme),
        &c,
        n,
        m,
        workers,
        batch,
        rounds,
    ) {
        Ok(v) => {
            *out = v;
            TwStatus::Ok
        }
        Err(e) => status_of(&e),
    }
}

/// Total kernel evaluations consumed by a strategy.
///
/// # Safety
/// `out` must be a valid, writable pointer.
#[no_mangle]
pub unsafe extern "C" fn tw_pair_budget(
    strategy: TwStrategy,
    n: u64,
    m: u64,
    workers: u64,
    batch: u64,
    rounds: u64,
    out: *mut u64,
) -> TwStatus {
    if out.is_null() {
        return TwStatus::NullArgument;
    }
    match pair_budget(strategy_of(strategy), n, m, workers, batch, rounds) {
        Ok(v) => {
            *out = v;
            TwStatus::Ok
        }
        Err(e) => status_of(&e),
    }
}

/// Dominance gap Var(repart incomplete at (batch, rounds_incomplete)) -
/// Var(repart complete at rounds_complete) at equal pair budgets, prop-SWOR.
///
/// # Safety
/// `components` and `out` must be valid pointers.
#[no_mangle]
pub unsafe extern "C" fn tw_dominance_gap(
    components: *const TwComponents,
    n: u64,
    m: u64,
    workers: u64,
    rounds_incomplete: u64,
    rounds_complete: u64,
    batch: u64,
    out: *mut f64,
) -> TwStatus {
    if components.is_null() || out.is_null() {
        return TwStatus::NullArgument;
    }
    let c = components_in(&*components);
    match dominance_gap(&c, n, m, workers, rounds_incomplete, rounds_complete, batch) {
        Ok(v) => {
            *out = v;
            TwStatus::Ok
        }
        Err(e) => status_of(&e),
    }
}

/// Build a dataset from row-major coordinate buffers: `xs` holds n*dim
/// doubles, `zs` holds m*dim. The buffers are copied.
///
/// # Safety
/// `xs` and `zs` must point to `n * dim` and `m * dim` readable doubles and
/// `out` must be a valid, writable pointer.
#[no_mangle]
pub unsafe extern "C" fn tw_dataset_new(
    xs: *const f64,
    n: usize,
    zs: *const f64,
    m: usize,
    dim: usize,
    out: *mut *mut TwDataset,
) -> TwStatus {
    if xs.is_null() || zs.is_null() || out.is_null() {
        return TwStatus::NullArgument;
    }
    if dim == 0 || n == 0 || m == 0 {
        return TwStatus::EmptySample;
    }
    let xs = std::slice::from_raw_parts(xs, n * dim).to_vec();
    let zs = std::slice::from_raw_parts(zs, m * dim).to_vec();
    match TwoSampleDataset::from_rows(dim, xs, zs) {
        Ok(ds) => {
            *out = Box::into_raw(Box::new(TwDataset(ds)));
            TwStatus::Ok
        }
        Err(e) => status_of(&e),
    }
}

/// Draw an i.i.d. dataset of the two-atom AUC model, deterministic in `seed`.
///
/// # Safety
/// `out` must be a valid, writable pointer.
#[no_mangle]
pub unsafe extern "C" fn tw_dataset_sample_auc(
    p: f64,
    q: f64,
    n: usize,
    m: usize,
    seed: u64,
    out: *mut *mut TwDataset,
) -> TwStatus {
    if out.is_null() {
        return TwStatus::NullArgument;
    }
    let model = match SyntheticModel::discrete_auc(p, q) {
        Ok(model) => model,
        Err(e) => return status_of(&e),
    };
    if n == 0 || m == 0 {
        return TwStatus::EmptySample;
    }
    let mut rng = SeedProtocol::new(seed).run_stream(0, StreamPurpose::Dataset);
    let ds = model.sample(n, m, &mut rng);
    *out = Box::into_raw(Box::new(TwDataset(ds)));
    TwStatus::Ok
}

/// Release a dataset handle; accepts null.
///
/// # Safety
/// `ds` must be null or a pointer returned by a `tw_dataset_*` constructor,
/// not yet freed.
#[no_mangle]
pub unsafe extern "C" fn tw_dataset_free(ds: *mut TwDataset) {
    if !ds.is_null() {
        drop(Box::from_raw(ds));
    }
}

/// Sample sizes and dimension of a dataset.
///
/// # Safety
/// `ds` must be a live dataset handle; out-pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn tw_dataset_shape(
    ds: *const TwDataset,
    n: *mut usize,
    m: *mut usize,
    dim: *mut usize,
) -> TwStatus {
    if ds.is_null() || n.is_null() || m.is_null() || dim.is_null() {
        return TwStatus::NullArgument;
    }
    let inner = &(*ds).0;
    *n = inner.n();
    *m = inner.m();
    *dim = inner.dim();
    TwStatus::Ok
}

/// Complete two-sample statistic of a built-in kernel over the dataset.
///
/// # Safety
/// `ds` must be a live dataset handle; `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn tw_complete_two_sample(
    ds: *const TwDataset,
    kernel: TwKernel,
    out: *mut f64,
) -> TwStatus {
    if ds.is_null() || out.is_null() {
        return TwStatus::NullArgument;
    }
    match complete_two_sample(&(*ds).0, &kernel_of(kernel)) {
        Ok(v) => {
            *out = v;
            TwStatus::Ok
        }
        Err(e) => status_of(&e),
    }
}

/// Run the simulated master/worker estimation protocol on a dataset:
/// `rounds` repartition epochs under `scheme`, complete local statistics
/// when `batch` is 0 and `batch`-pair incomplete ones otherwise. Writes the
/// estimate and the kernel evaluations consumed.
///
/// # Safety
/// `ds` must be a live dataset handle; out-pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn tw_estimate(
    ds: *const TwDataset,
    kernel: TwKernel,
    scheme: TwScheme,
    workers: usize,
    rounds: u64,
    batch: u64,
    seed: u64,
    out_value: *mut f64,
    out_pairs: *mut u64,
) -> TwStatus {
    if ds.is_null() || out_value.is_null() || out_pairs.is_null() {
        return TwStatus::NullArgument;
    }
    let mode = if batch == 0 {
        EstimationMode::Complete
    } else {
        EstimationMode::Incomplete { batch }
    };
    let protocol = SeedProtocol::new(seed);
    match run_estimation(
        &(*ds).0,
        &kernel_of(kernel),
        scheme_of(scheme),
        workers,
        rounds,
        mode,
        &protocol,
    ) {
        Ok((report, _ledger)) => {
            *out_value = report.value;
            *out_pairs = report.pairs_evaluated;
            TwStatus::Ok
        }
        Err(e) => status_of(&e),
    }
}

/// Monte Carlo study of the AUC estimator on the two-atom model: `runs`
/// replications with fresh data and partitions, reduced deterministically.
/// Writes the empirical mean and unbiased variance of the estimator.
///
/// # Safety
/// Out-pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn tw_monte_carlo_auc(
    p: f64,
    q: f64,
    n: usize,
    m: usize,
    scheme: TwScheme,
    workers: usize,
    rounds: u64,
    batch: u64,
    runs: u64,
    seed: u64,
    out_mean: *mut f64,
    out_variance: *mut f64,
) -> TwStatus {
    if out_mean.is_null() || out_variance.is_null() {
        return TwStatus::NullArgument;
    }
    let model = match SyntheticModel::discrete_auc(p, q) {
        Ok(model) => model,
        Err(e) => return status_of(&e),
    };
    let config = EstimationConfig {
        model,
        n,
        m,
        scheme: scheme_of(scheme),
        workers,
        rounds,
        mode: if batch == 0 {
            EstimationMode::Complete
        } else {
            EstimationMode::Incomplete { batch }
        },
    };
    match monte_carlo(&config, runs, seed) {
        Ok(result) => {
            *out_mean = result.mean;
            *out_variance = result.variance;
            TwStatus::Ok
        }
        Err(e) => status_of(&e),
    }
}
