//! The estimator family: complete and incomplete generalized U-statistics on
//! a single machine, and the four distributed two-sample estimators with and
//! without repartitioning.
//!
//! Distributed estimators average worker-local values over N workers and T
//! repartition epochs. A worker whose partition has no pairs (possible under
//! SWOR) contributes 0 to the N-term average; the same rule is applied to the
//! incomplete local estimator, where it is a modeling choice. Iteration over
//! pairs is row-major (x outer, z inner) and worker-local pair draws use the
//! per-(epoch, worker) streams, so every value is bit-reproducible.

use rand_chacha::ChaCha8Rng;

use crate::data::{GeneralizedSamples, TwoSampleDataset};
use crate::error::{Error, Result};
use crate::kernels::Kernel;
use crate::partition::{assign, PartitionAssignment, SchemeKind, WorkerIndices};
use crate::rng::{uniform_below, SeedProtocol};
use crate::util::KahanSum;

/// Cap on full enumeration in [`complete_generalized`].
pub const MAX_COMPLETE_TUPLES: u64 = 50_000_000;

/// An estimator value plus the accounting the trade-off studies need.
#[derive(Clone, Debug, PartialEq)]
pub struct EstimateReport {
    pub value: f64,
    /// Kernel evaluations consumed. Incomplete estimators charge their full
    /// N*B(*T) budget even when a pairless worker leaves part of it unused.
    pub pairs_evaluated: u64,
    pub rounds: u64,
    pub per_round_values: Option<Vec<f64>>,
    pub scheme: SchemeKind,
    /// Number of (worker, round) pairs where the zero rule fired.
    pub zero_partition_rounds: u64,
}

/// Complete generalized U-statistic: the kernel averaged over every
/// combination of d_k indices from each of the K samples.
pub fn complete_generalized(samples: &GeneralizedSamples, kernel: &Kernel) -> Result<f64> {
    let k = samples.num_samples();
    let mut total: u128 = 1;
    for i in 0..k {
        total = total.saturating_mul(binomial(samples.sample_len(i), samples.degrees()[i]));
    }
    if total > MAX_COMPLETE_TUPLES as u128 {
        return Err(Error::TupleBudgetExceeded {
            required: total,
            budget: MAX_COMPLETE_TUPLES,
        });
    }

    // Odometer over per-sample combinations, lexicographic within each block.
    let mut combos: Vec<Vec<usize>> = samples
        .degrees()
        .iter()
        .map(|&d| (0..d).collect())
        .collect();
    let mut blocks: Vec<Vec<&[f64]>> = Vec::with_capacity(k);
    for (i, combo) in combos.iter().enumerate() {
        blocks.push(combo.iter().map(|&j| samples.point(i, j)).collect());
    }

    let mut acc = KahanSum::new();
    let mut count = 0u64;
    'outer: loop {
        acc.add(kernel.eval_tuple(&blocks)?);
        count += 1;

        // Advance the odometer: bump the last block that still has a next
        // combination, reset the ones after it.
        let mut b = k;
        loop {
            if b == 0 {
                break 'outer;
            }
            b -= 1;
            if next_combination(&mut combos[b], samples.sample_len(b)) {
                for (j, &idx) in combos[b].iter().enumerate() {
                    blocks[b][j] = samples.point(b, idx);
                }
                for reset in b + 1..k {
                    let d = samples.degrees()[reset];
                    combos[reset] = (0..d).collect();
                    for (j, &idx) in combos[reset].iter().enumerate() {
                        blocks[reset][j] = samples.point(reset, idx);
                    }
                }
                break;
            }
        }
    }
    debug_assert_eq!(count as u128, total);
    Ok(acc.value() / count as f64)
}

/// Advance `combo` to the next d-combination of `0..n` in lexicographic
/// order; false when `combo` was the last one.
fn next_combination(combo: &mut [usize], n: usize) -> bool {
    let d = combo.len();
    let mut i = d;
    while i > 0 {
        i -= 1;
        if combo[i] < n - d + i {
            combo[i] += 1;
            for j in i + 1..d {
                combo[j] = combo[j - 1] + 1;
            }
            return true;
        }
    }
    false
}

/// Incomplete generalized U-statistic: the kernel averaged over `b` tuples
/// drawn uniformly with replacement from the full combination set.
pub fn incomplete_generalized(
    samples: &GeneralizedSamples,
    kernel: &Kernel,
    b: u64,
    rng: &mut ChaCha8Rng,
) -> Result<f64> {
    if b == 0 {
        return Err(Error::InvalidParameter {
            name: "b",
            reason: "need at least one tuple".into(),
        });
    }
    let k = samples.num_samples();
    let mut scratch: Vec<Vec<usize>> = (0..k)
        .map(|i| (0..samples.sample_len(i)).collect())
        .collect();
    let mut blocks: Vec<Vec<&[f64]>> = samples
        .degrees()
        .iter()
        .map(|&d| Vec::with_capacity(d))
        .collect();

    let mut acc = KahanSum::new();
    for _ in 0..b {
        for i in 0..k {
            let d = samples.degrees()[i];
            sample_combination(rng, &mut scratch[i], d);
            let (head, _) = scratch[i].split_at(d);
            blocks[i].clear();
            for &idx in head {
                blocks[i].push(samples.point(i, idx));
            }
        }
        acc.add(kernel.eval_tuple(&blocks)?);
    }
    Ok(acc.value() / b as f64)
}

/// Uniform d-subset of `pool` (a permutation of 0..n): partial Fisher–Yates,
/// then the prefix is sorted so the tuple is canonical.
fn sample_combination(rng: &mut ChaCha8Rng, pool: &mut [usize], d: usize) {
    let n = pool.len();
    for i in 0..d {
        let j = i + uniform_below(rng, (n - i) as u64) as usize;
        pool.swap(i, j);
    }
    pool[..d].sort_unstable();
}

fn binomial(n: usize, k: usize) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc.saturating_mul((n - i) as u128) / (i as u128 + 1);
    }
    acc
}

/// Complete two-sample U-statistic `(1/nm) sum_k sum_l h(X_k, Z_l)`.
pub fn complete_two_sample(ds: &TwoSampleDataset, kernel: &Kernel) -> Result<f64> {
    let mut acc = KahanSum::new();
    for k in 0..ds.n() {
        let x = ds.x(k);
        for l in 0..ds.m() {
            acc.add(kernel.eval_pair(x, ds.z(l))?);
        }
    }
    Ok(acc.value() / (ds.n() as f64 * ds.m() as f64))
}

/// One worker's complete local statistic: (value, pairs, fired zero rule).
pub(crate) fn worker_complete(
    ds: &TwoSampleDataset,
    kernel: &Kernel,
    w: &WorkerIndices,
) -> Result<(f64, u64, bool)> {
    let (nx, nz) = (w.x_indices.len(), w.z_indices.len());
    if nx.min(nz) == 0 {
        return Ok((0.0, 0, true));
    }
    let mut acc = KahanSum::new();
    for &k in &w.x_indices {
        let x = ds.x(k);
        for &l in &w.z_indices {
            acc.add(kernel.eval_pair(x, ds.z(l))?);
        }
    }
    Ok((acc.value() / (nx as f64 * nz as f64), (nx * nz) as u64, false))
}

/// One worker's incomplete local statistic over `b` with-replacement pair
/// draws from its partition: (value, fired zero rule).
pub(crate) fn worker_incomplete(
    ds: &TwoSampleDataset,
    kernel: &Kernel,
    w: &WorkerIndices,
    b: u64,
    rng: &mut ChaCha8Rng,
) -> Result<(f64, bool)> {
    let (nx, nz) = (w.x_indices.len(), w.z_indices.len());
    if nx.min(nz) == 0 {
        return Ok((0.0, true));
    }
    let mut acc = KahanSum::new();
    for _ in 0..b {
        let k = w.x_indices[uniform_below(rng, nx as u64) as usize];
        let l = w.z_indices[uniform_below(rng, nz as u64) as usize];
        acc.add(kernel.eval_pair(ds.x(k), ds.z(l))?);
    }
    Ok((acc.value() / b as f64, false))
}

fn check_assignment_covers(ds: &TwoSampleDataset, assignment: &PartitionAssignment) -> Result<()> {
    if assignment.n() != ds.n() || assignment.m() != ds.m() {
        return Err(Error::PartitionMismatch {
            reason: format!(
                "assignment built for ({}, {}) but dataset is ({}, {})",
                assignment.n(),
                assignment.m(),
                ds.n(),
                ds.m()
            ),
        });
    }
    Ok(())
}

/// Average of the workers' complete local statistics (one round).
pub fn local_complete_average(
    ds: &TwoSampleDataset,
    assignment: &PartitionAssignment,
    kernel: &Kernel,
) -> Result<EstimateReport> {
    check_assignment_covers(ds, assignment)?;
    let workers = assignment.workers() as f64;
    let mut sum = 0.0;
    let mut pairs = 0u64;
    let mut zeros = 0u64;
    for w in &assignment.per_worker {
        let (v, p, fired) = worker_complete(ds, kernel, w)?;
        sum += v;
        pairs += p;
        zeros += fired as u64;
    }
    let value = sum / workers;
    Ok(EstimateReport {
        value,
        pairs_evaluated: pairs,
        rounds: 1,
        per_round_values: Some(vec![value]),
        scheme: assignment.scheme,
        zero_partition_rounds: zeros,
    })
}

/// Average of the workers' incomplete local statistics (one round); each
/// worker draws `b` pairs from its own (epoch, worker) stream.
pub fn local_incomplete_average(
    ds: &TwoSampleDataset,
    assignment: &PartitionAssignment,
    kernel: &Kernel,
    b: u64,
    protocol: &SeedProtocol,
) -> Result<EstimateReport> {
    check_assignment_covers(ds, assignment)?;
    if b == 0 {
        return Err(Error::InvalidParameter {
            name: "b",
            reason: "need at least one pair per worker".into(),
        });
    }
    let workers = assignment.workers() as f64;
    let mut sum = 0.0;
    let mut zeros = 0u64;
    for (i, w) in assignment.per_worker.iter().enumerate() {
        let mut rng = protocol.worker_stream(assignment.epoch, i as u64);
        let (v, fired) = worker_incomplete(ds, kernel, w, b, &mut rng)?;
        sum += v;
        zeros += fired as u64;
    }
    let value = sum / workers;
    Ok(EstimateReport {
        value,
        pairs_evaluated: assignment.workers() as u64 * b,
        rounds: 1,
        per_round_values: Some(vec![value]),
        scheme: assignment.scheme,
        zero_partition_rounds: zeros,
    })
}

/// Repartitioned complete estimator: the T-round average of worker-local
/// complete statistics, one fresh assignment per epoch.
pub fn repartitioned_complete(
    ds: &TwoSampleDataset,
    scheme: SchemeKind,
    workers: usize,
    rounds: u64,
    kernel: &Kernel,
    protocol: &SeedProtocol,
) -> Result<EstimateReport> {
    if rounds == 0 {
        return Err(Error::InvalidParameter {
            name: "rounds",
            reason: "need at least one round".into(),
        });
    }
    let mut per_round = Vec::with_capacity(rounds as usize);
    let mut pairs = 0u64;
    let mut zeros = 0u64;
    for t in 0..rounds {
        let assignment = assign(scheme, ds.n(), ds.m(), workers, protocol, t)?;
        let round = local_complete_average(ds, &assignment, kernel)?;
        per_round.push(round.value);
        pairs += round.pairs_evaluated;
        zeros += round.zero_partition_rounds;
    }
    let value = per_round.iter().sum::<f64>() / rounds as f64;
    Ok(EstimateReport {
        value,
        pairs_evaluated: pairs,
        rounds,
        per_round_values: Some(per_round),
        scheme,
        zero_partition_rounds: zeros,
    })
}

/// Repartitioned incomplete estimator: as above with `b` with-replacement
/// pair draws per worker per round.
pub fn repartitioned_incomplete(
    ds: &TwoSampleDataset,
    scheme: SchemeKind,
    workers: usize,
    rounds: u64,
    b: u64,
    kernel: &Kernel,
    protocol: &SeedProtocol,
) -> Result<EstimateReport> {
    if rounds == 0 {
        return Err(Error::InvalidParameter {
            name: "rounds",
            reason: "need at least one round".into(),
        });
    }
    let mut per_round = Vec::with_capacity(rounds as usize);
    let mut zeros = 0u64;
    for t in 0..rounds {
        let assignment = assign(scheme, ds.n(), ds.m(), workers, protocol, t)?;
        let round = local_incomplete_average(ds, &assignment, kernel, b, protocol)?;
        per_round.push(round.value);
        zeros += round.zero_partition_rounds;
    }
    let value = per_round.iter().sum::<f64>() / rounds as f64;
    Ok(EstimateReport {
        value,
        pairs_evaluated: workers as u64 * b * rounds,
        rounds,
        per_round_values: Some(per_round),
        scheme,
        zero_partition_rounds: zeros,
    })
}
