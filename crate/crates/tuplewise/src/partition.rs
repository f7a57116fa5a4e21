//! Worker partition assignments for each repartition epoch.
//!
//! Four schemes are supported:
//!
//! * **prop-SWOR** — proportional sampling without replacement. One uniform
//!   permutation per sample (from the shared-seed protocol), cut into N
//!   contiguous blocks, so every worker holds exactly n/N X-points and m/N
//!   Z-points. This is the scheme the variance theorems are stated for, and
//!   the one that needs no coordination beyond the initial seed agreement.
//! * **SWOR** — one uniform permutation of all n+m interleaved records cut
//!   into N blocks of size (n+m)/N; the per-class counts on each worker are
//!   random, and a worker can end up with no minority points at all.
//! * **prop-SWR** — every worker draws a bootstrap-style resample: n/N
//!   X-draws and m/N Z-draws with replacement, duplicates allowed within and
//!   across workers.
//! * **deterministic shuffle** — round-robin by index modulo N after an
//!   epoch-dependent rotation; a pure function of (epoch, n, m, N) with no
//!   randomness, in the style of framework `repartition` operators.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::{random_permutation, uniform_below, SampleTag, SeedProtocol};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SchemeKind {
    PropSwor,
    Swor,
    PropSwr,
    DeterministicShuffle,
}

impl SchemeKind {
    pub fn name(&self) -> &'static str {
        match self {
            SchemeKind::PropSwor => "prop-swor",
            SchemeKind::Swor => "swor",
            SchemeKind::PropSwr => "prop-swr",
            SchemeKind::DeterministicShuffle => "deterministic-shuffle",
        }
    }
}

/// Index sets into the two samples held by one worker. Under prop-SWR these
/// are multisets in draw order; under the other schemes they are sorted and
/// duplicate-free.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct WorkerIndices {
    pub x_indices: Vec<usize>,
    pub z_indices: Vec<usize>,
}

/// Per-worker index sets at one repartition epoch.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PartitionAssignment {
    pub epoch: u64,
    pub scheme: SchemeKind,
    n: usize,
    m: usize,
    pub per_worker: Vec<WorkerIndices>,
}

impl PartitionAssignment {
    pub fn workers(&self) -> usize {
        self.per_worker.len()
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn m(&self) -> usize {
        self.m
    }
}

fn require_divides(what: &'static str, size: usize, workers: usize) -> Result<usize> {
    if size % workers != 0 {
        return Err(Error::Divisibility {
            what,
            size: size as u64,
            workers: workers as u64,
        });
    }
    Ok(size / workers)
}

/// Produce the assignment for `epoch` under `scheme`. Identical inputs give
/// identical (byte-equal) outputs regardless of the caller: all randomness
/// comes from the protocol's per-epoch streams.
pub fn assign(
    scheme: SchemeKind,
    n: usize,
    m: usize,
    workers: usize,
    protocol: &SeedProtocol,
    epoch: u64,
) -> Result<PartitionAssignment> {
    if workers == 0 {
        return Err(Error::InvalidParameter {
            name: "workers",
            reason: "need at least one worker".into(),
        });
    }
    if n == 0 || m == 0 {
        return Err(Error::EmptySample {
            which: if n == 0 { "first (X)" } else { "second (Z)" },
        });
    }
    let per_worker = match scheme {
        SchemeKind::PropSwor => {
            let cx = require_divides("n", n, workers)?;
            let cz = require_divides("m", m, workers)?;
            let perm_x = random_permutation(&mut protocol.partition_stream(epoch, SampleTag::X), n);
            let perm_z = random_permutation(&mut protocol.partition_stream(epoch, SampleTag::Z), m);
            (0..workers)
                .map(|i| {
                    let mut x_indices = perm_x[i * cx..(i + 1) * cx].to_vec();
                    let mut z_indices = perm_z[i * cz..(i + 1) * cz].to_vec();
                    x_indices.sort_unstable();
                    z_indices.sort_unstable();
                    WorkerIndices { x_indices, z_indices }
                })
                .collect()
        }
        SchemeKind::Swor => {
            let block = require_divides("n + m", n + m, workers)?;
            // One permutation of the interleaved records, drawn on the X
            // stream, cut into fixed-size blocks; per-class counts fall where
            // they may.
            let perm =
                random_permutation(&mut protocol.partition_stream(epoch, SampleTag::X), n + m);
            (0..workers)
                .map(|i| {
                    let mut x_indices = Vec::new();
                    let mut z_indices = Vec::new();
                    for &r in &perm[i * block..(i + 1) * block] {
                        if r < n {
                            x_indices.push(r);
                        } else {
                            z_indices.push(r - n);
                        }
                    }
                    x_indices.sort_unstable();
                    z_indices.sort_unstable();
                    WorkerIndices { x_indices, z_indices }
                })
                .collect()
        }
        SchemeKind::PropSwr => {
            let cx = require_divides("n", n, workers)?;
            let cz = require_divides("m", m, workers)?;
            let mut rng_x = protocol.partition_stream(epoch, SampleTag::X);
            let mut rng_z = protocol.partition_stream(epoch, SampleTag::Z);
            (0..workers)
                .map(|_| WorkerIndices {
                    x_indices: (0..cx)
                        .map(|_| uniform_below(&mut rng_x, n as u64) as usize)
                        .collect(),
                    z_indices: (0..cz)
                        .map(|_| uniform_below(&mut rng_z, m as u64) as usize)
                        .collect(),
                })
                .collect()
        }
        SchemeKind::DeterministicShuffle => {
            let cx = require_divides("n", n, workers)?;
            let cz = require_divides("m", m, workers)?;
            let rotation = (epoch % workers as u64) as usize;
            let mut per_worker: Vec<WorkerIndices> = (0..workers)
                .map(|_| WorkerIndices {
                    x_indices: Vec::with_capacity(cx),
                    z_indices: Vec::with_capacity(cz),
                })
                .collect();
            for j in 0..n {
                per_worker[(j + rotation) % workers].x_indices.push(j);
            }
            for j in 0..m {
                per_worker[(j + rotation) % workers].z_indices.push(j);
            }
            per_worker
        }
    };
    Ok(PartitionAssignment {
        epoch,
        scheme,
        n,
        m,
        per_worker,
    })
}

/// Count the records that change worker between two epochs. Under prop-SWR
/// (multisets) a draw counts as moved when it is not matched by a draw of the
/// same index on the same worker in the previous epoch.
pub fn records_moved(prev: &PartitionAssignment, next: &PartitionAssignment) -> Result<u64> {
    if prev.n != next.n || prev.m != next.m || prev.workers() != next.workers() {
        return Err(Error::PartitionMismatch {
            reason: format!(
                "(n, m, workers) = ({}, {}, {}) vs ({}, {}, {})",
                prev.n,
                prev.m,
                prev.workers(),
                next.n,
                next.m,
                next.workers()
            ),
        });
    }
    if prev.scheme != next.scheme {
        return Err(Error::PartitionMismatch {
            reason: format!("schemes {:?} vs {:?}", prev.scheme, next.scheme),
        });
    }

    if prev.scheme == SchemeKind::PropSwr {
        let mut moved = 0u64;
        for (pw, nw) in prev.per_worker.iter().zip(&next.per_worker) {
            moved += multiset_unmatched(&pw.x_indices, &nw.x_indices);
            moved += multiset_unmatched(&pw.z_indices, &nw.z_indices);
        }
        return Ok(moved);
    }

    let mut moved = 0u64;
    moved += owner_changes(prev, next, prev.n, |w| &w.x_indices);
    moved += owner_changes(prev, next, prev.m, |w| &w.z_indices);
    Ok(moved)
}

fn owner_changes(
    prev: &PartitionAssignment,
    next: &PartitionAssignment,
    len: usize,
    side: impl Fn(&WorkerIndices) -> &Vec<usize>,
) -> u64 {
    let owners = |a: &PartitionAssignment| {
        let mut owner = vec![usize::MAX; len];
        for (i, w) in a.per_worker.iter().enumerate() {
            for &idx in side(w) {
                owner[idx] = i;
            }
        }
        owner
    };
    let prev_owner = owners(prev);
    let next_owner = owners(next);
    prev_owner
        .iter()
        .zip(&next_owner)
        .filter(|(a, b)| a != b)
        .count() as u64
}

/// Draws in `next` without a same-index match on the same worker in `prev`.
fn multiset_unmatched(prev: &[usize], next: &[usize]) -> u64 {
    let mut p = prev.to_vec();
    let mut q = next.to_vec();
    p.sort_unstable();
    q.sort_unstable();
    let mut matched = 0u64;
    let (mut i, mut j) = (0, 0);
    while i < p.len() && j < q.len() {
        match p[i].cmp(&q[j]) {
            std::cmp::Ordering::Equal => {
                matched += 1;
                i += 1;
                j += 1;
            }
            std::cmp::Ordering::Less => i += 1,
            std::cmp::Ordering::Greater => j += 1,
        }
    }
    next.len() as u64 - matched
}

/// Simulate `simulated_workers` prop-SWOR participants that share nothing but
/// the seed protocol: each one derives the epoch's assignment locally. True
/// iff all copies are byte-identical.
pub fn simulate_coordination_free(
    simulated_workers: usize,
    protocol: &SeedProtocol,
    epoch: u64,
    n: usize,
    m: usize,
    workers: usize,
) -> Result<bool> {
    let mut first: Option<PartitionAssignment> = None;
    for _ in 0..simulated_workers.max(1) {
        // Each participant reconstructs the protocol from the agreed master
        // seed; no state is shared between iterations.
        let local = SeedProtocol::new(protocol.master_seed());
        let a = assign(SchemeKind::PropSwor, n, m, workers, &local, epoch)?;
        match &first {
            None => first = Some(a),
            Some(f) => {
                if *f != a {
                    return Ok(false);
                }
            }
        }
    }
    Ok(true)
}

#[cfg(test)]
pub(crate) fn validate_assignment(a: &PartitionAssignment) -> Result<()> {
    let check_disjoint_cover = |len: usize, side: &dyn Fn(&WorkerIndices) -> &Vec<usize>| {
        let mut seen = vec![false; len];
        for w in &a.per_worker {
            for &idx in side(w) {
                if idx >= len || seen[idx] {
                    return false;
                }
                seen[idx] = true;
            }
        }
        seen.iter().all(|&s| s)
    };
    let ok = match a.scheme {
        SchemeKind::PropSwor | SchemeKind::DeterministicShuffle => {
            let cx = a.n / a.workers();
            let cz = a.m / a.workers();
            a.per_worker
                .iter()
                .all(|w| w.x_indices.len() == cx && w.z_indices.len() == cz)
                && check_disjoint_cover(a.n, &|w| &w.x_indices)
                && check_disjoint_cover(a.m, &|w| &w.z_indices)
        }
        SchemeKind::Swor => {
            let block = (a.n + a.m) / a.workers();
            a.per_worker
                .iter()
                .all(|w| w.x_indices.len() + w.z_indices.len() == block)
                && check_disjoint_cover(a.n, &|w| &w.x_indices)
                && check_disjoint_cover(a.m, &|w| &w.z_indices)
        }
        SchemeKind::PropSwr => {
            let cx = a.n / a.workers();
            let cz = a.m / a.workers();
            a.per_worker.iter().all(|w| {
                w.x_indices.len() == cx
                    && w.z_indices.len() == cz
                    && w.x_indices.iter().all(|&i| i < a.n)
                    && w.z_indices.iter().all(|&i| i < a.m)
            })
        }
    };
    if ok {
        Ok(())
    } else {
        Err(Error::PartitionMismatch {
            reason: format!("invariants violated for {:?}", a.scheme),
        })
    }
}
