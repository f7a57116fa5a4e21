//! Simulated distributed estimation and learning with two-sample
//! U-statistics.
//!
//! The crate models a master/worker cluster in which two samples are
//! partitioned across N workers, each worker averages a pair kernel over its
//! local pairs (completely or by subsampling), and the partition is
//! occasionally reshuffled. It provides:
//!
//! * the estimator family: complete / incomplete statistics on a single
//!   machine, their worker-local averages, and the repartitioned versions
//!   ([`estimators`]);
//! * the repartitioning schemes, including the coordination-free shared-seed
//!   prop-SWOR protocol ([`partition`], [`rng`]);
//! * closed-form variances for every strategy, pair-budget arithmetic and the
//!   dominance gap, used as oracles ([`variance`], [`model`]);
//! * a logical cluster simulator with cost accounting and a deterministic
//!   parallel Monte Carlo harness ([`sim`]);
//! * repartitioned mini-batch SGD for pairwise (AUC-style) empirical risk
//!   minimization ([`sgd`]);
//! * the experiment drivers behind the `tuplewise` CLI ([`experiments`],
//!   [`checks`]).
//!
//! Everything is deterministic given a master seed, bit-for-bit, regardless
//! of how many threads run the work.

pub mod checks;
pub mod config;
pub mod data;
pub mod error;
pub mod estimators;
pub mod experiments;
pub mod kernels;
pub mod model;
pub mod partition;
pub mod rng;
pub mod sgd;
pub mod sim;
pub mod util;
pub mod variance;

pub use data::{DataPoint, GeneralizedSamples, TwoSampleDataset};
pub use error::{Error, Result};
pub use kernels::Kernel;
pub use model::{
    DiscreteAucDistribution, GaussianProductDistribution, SyntheticModel, VarianceComponents,
};
pub use partition::{PartitionAssignment, SchemeKind};
pub use rng::SeedProtocol;
pub use variance::Strategy;
