//! Experiment configuration documents.
//!
//! Each run is described by one JSON object whose `experiment` key selects
//! the command; unknown keys are rejected. CLI flags (`--seed`, `--out`)
//! override the corresponding document keys after parsing.

use std::num::NonZeroU64;

use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::model::SyntheticModel;
use crate::partition::SchemeKind;
use crate::variance::Strategy;

/// A parsed experiment document.
#[derive(Clone, Debug, PartialEq)]
pub enum ExperimentConfig {
    VarianceCurves(VarianceCurvesConfig),
    Estimate(EstimateConfig),
    Learn(LearnConfig),
    CheckTheory(CheckTheoryConfig),
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let value: serde_json::Value = serde_json::from_str(text)?;
        let kind = value
            .get("experiment")
            .and_then(|v| v.as_str())
            .ok_or_else(|| Error::Config("missing string key \"experiment\"".into()))?;
        let parsed = match kind {
            "variance-curves" => {
                ExperimentConfig::VarianceCurves(serde_json::from_value(value.clone())?)
            }
            "estimate" => ExperimentConfig::Estimate(serde_json::from_value(value.clone())?),
            "learn" => ExperimentConfig::Learn(serde_json::from_value(value.clone())?),
            "check-theory" => {
                ExperimentConfig::CheckTheory(serde_json::from_value(value.clone())?)
            }
            other => {
                return Err(Error::Config(format!(
                    "unknown experiment {other:?}; expected one of variance-curves, estimate, \
                     learn, check-theory"
                )))
            }
        };
        Ok(parsed)
    }

    pub fn set_seed(&mut self, seed: u64) {
        match self {
            ExperimentConfig::VarianceCurves(c) => c.master_seed = seed,
            ExperimentConfig::Estimate(c) => c.master_seed = seed,
            ExperimentConfig::Learn(c) => c.master_seed = seed,
            ExperimentConfig::CheckTheory(c) => c.master_seed = seed,
        }
    }

    pub fn set_out(&mut self, out: String) {
        match self {
            ExperimentConfig::VarianceCurves(c) => c.out = Some(out),
            ExperimentConfig::Estimate(c) => c.out = Some(out),
            ExperimentConfig::Learn(c) => c.out = Some(out),
            ExperimentConfig::CheckTheory(c) => c.out = Some(out),
        }
    }

    pub fn out(&self) -> Option<&str> {
        match self {
            ExperimentConfig::VarianceCurves(c) => c.out.as_deref(),
            ExperimentConfig::Estimate(c) => c.out.as_deref(),
            ExperimentConfig::Learn(c) => c.out.as_deref(),
            ExperimentConfig::CheckTheory(c) => c.out.as_deref(),
        }
    }
}

fn default_seed() -> u64 {
    0
}

fn is_zero(v: &u64) -> bool {
    *v == 0
}

/// Closed-form variance curves over pair budgets (no sampling).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VarianceCurvesConfig {
    pub experiment: String,
    #[serde(default = "default_seed", skip_serializing_if = "is_zero")]
    pub master_seed: u64,
    #[serde(default)]
    pub out: Option<String>,
    #[serde(default = "VarianceCurvesConfig::default_model")]
    pub model: SyntheticModel,
    #[serde(default = "VarianceCurvesConfig::default_n")]
    pub n: u64,
    #[serde(default = "VarianceCurvesConfig::default_m")]
    pub m: u64,
    #[serde(default = "VarianceCurvesConfig::default_workers")]
    pub workers: u64,
    /// Repartition counts swept by the repartitioned strategies.
    #[serde(default = "VarianceCurvesConfig::default_t_sweep")]
    pub t_sweep: Vec<u64>,
    /// Batch sizes swept by the single-machine and local incomplete curves.
    #[serde(default = "VarianceCurvesConfig::default_b_sweep")]
    pub b_sweep: Vec<u64>,
    /// Per-worker batch of the repartitioned incomplete curve; defaults to
    /// nm/N^2 so its budgets align with the complete curve round for round.
    #[serde(default)]
    pub repart_batch: Option<u64>,
}

impl VarianceCurvesConfig {
    fn default_model() -> SyntheticModel {
        SyntheticModel::DiscreteAuc { p: 0.1, q: 0.9 }
    }
    fn default_n() -> u64 {
        100_000
    }
    fn default_m() -> u64 {
        200
    }
    fn default_workers() -> u64 {
        100
    }
    fn default_t_sweep() -> Vec<u64> {
        vec![
            1, 2, 3, 4, 5, 7, 10, 15, 20, 30, 50, 70, 100, 150, 200, 300, 500, 700, 1000, 2000,
            5000, 10_000,
        ]
    }
    fn default_b_sweep() -> Vec<u64> {
        vec![
            1, 2, 5, 10, 20, 50, 100, 200, 500, 1000, 2000, 5000, 10_000, 20_000, 50_000, 100_000,
        ]
    }
}

impl Default for VarianceCurvesConfig {
    fn default() -> Self {
        Self {
            experiment: "variance-curves".into(),
            master_seed: 0,
            out: None,
            model: Self::default_model(),
            n: Self::default_n(),
            m: Self::default_m(),
            workers: Self::default_workers(),
            t_sweep: Self::default_t_sweep(),
            b_sweep: Self::default_b_sweep(),
            repart_batch: None,
        }
    }
}

/// Monte Carlo relative-variance study on the hard-pair family.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EstimateConfig {
    pub experiment: String,
    #[serde(default = "default_seed", skip_serializing_if = "is_zero")]
    pub master_seed: u64,
    #[serde(default)]
    pub out: Option<String>,
    #[serde(default = "EstimateConfig::default_n")]
    pub n: usize,
    #[serde(default = "EstimateConfig::default_m")]
    pub m: usize,
    #[serde(default = "EstimateConfig::default_workers")]
    pub workers: usize,
    #[serde(default = "EstimateConfig::default_rounds")]
    pub rounds: u64,
    #[serde(default = "EstimateConfig::default_batch")]
    pub batch: u64,
    #[serde(default = "EstimateConfig::default_runs")]
    pub runs: u64,
    #[serde(default = "EstimateConfig::default_epsilons")]
    pub epsilons: Vec<f64>,
    #[serde(default = "EstimateConfig::default_estimators")]
    pub estimators: Vec<Strategy>,
    #[serde(default = "EstimateConfig::default_scheme")]
    pub scheme: SchemeKind,
}

impl EstimateConfig {
    fn default_n() -> usize {
        1000
    }
    fn default_m() -> usize {
        40
    }
    fn default_workers() -> usize {
        8
    }
    fn default_rounds() -> u64 {
        4
    }
    fn default_batch() -> u64 {
        10
    }
    fn default_runs() -> u64 {
        2000
    }
    fn default_epsilons() -> Vec<f64> {
        vec![0.1, 0.02, 0.004]
    }
    fn default_estimators() -> Vec<Strategy> {
        vec![
            Strategy::Complete,
            Strategy::LocalComplete,
            Strategy::RepartComplete,
        ]
    }
    fn default_scheme() -> SchemeKind {
        SchemeKind::PropSwor
    }
}

impl Default for EstimateConfig {
    fn default() -> Self {
        Self {
            experiment: "estimate".into(),
            master_seed: 0,
            out: None,
            n: Self::default_n(),
            m: Self::default_m(),
            workers: Self::default_workers(),
            rounds: Self::default_rounds(),
            batch: Self::default_batch(),
            runs: Self::default_runs(),
            epsilons: Self::default_epsilons(),
            estimators: Self::default_estimators(),
            scheme: Self::default_scheme(),
        }
    }
}

/// Repartition cadence: a positive iteration count or "inf" (never).
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct NrValue(pub Option<NonZeroU64>);

impl NrValue {
    pub fn label(&self) -> String {
        match self.0 {
            Some(v) => v.to_string(),
            None => "inf".into(),
        }
    }
}

impl Serialize for NrValue {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        match self.0 {
            Some(v) => serializer.serialize_u64(v.get()),
            None => serializer.serialize_str("inf"),
        }
    }
}

impl<'de> Deserialize<'de> for NrValue {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let value = serde_json::Value::deserialize(deserializer)?;
        match &value {
            serde_json::Value::String(s) if s == "inf" => Ok(NrValue(None)),
            serde_json::Value::Number(n) => {
                let v = n
                    .as_u64()
                    .ok_or_else(|| D::Error::custom("n_r must be a positive integer or \"inf\""))?;
                NonZeroU64::new(v)
                    .map(|nz| NrValue(Some(nz)))
                    .ok_or_else(|| D::Error::custom("n_r must be positive"))
            }
            _ => Err(D::Error::custom("n_r must be a positive integer or \"inf\"")),
        }
    }
}

/// Data source for the learning experiment.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum DataConfig {
    /// Two Gaussian classes with unit covariance, class means separated by
    /// `separation` in Euclidean norm.
    Synthetic {
        #[serde(default = "defaults::dim")]
        dim: usize,
        #[serde(default = "defaults::train_positives")]
        train_positives: usize,
        #[serde(default = "defaults::train_negatives")]
        train_negatives: usize,
        #[serde(default = "defaults::test_positives")]
        test_positives: usize,
        #[serde(default = "defaults::test_negatives")]
        test_negatives: usize,
        #[serde(default = "defaults::separation")]
        separation: f64,
    },
    /// Labeled CSV (or whitespace-delimited) file, stratified-split into
    /// train and test.
    Csv {
        path: String,
        positive_labels: Vec<String>,
        #[serde(default)]
        label_column: Option<usize>,
        #[serde(default)]
        feature_columns: Option<Vec<usize>>,
        #[serde(default)]
        header: bool,
        #[serde(default = "defaults::test_fraction")]
        test_fraction: f64,
        /// Optional per-class subsample fraction applied before the split.
        #[serde(default)]
        subsample: Option<f64>,
    },
}

mod defaults {
    pub fn dim() -> usize {
        9
    }
    // One positive per worker at the default N = 10: the regime where stale
    // partitions visibly hurt, since a worker's pair pool is pinned to its
    // single minority point until the next repartition.
    pub fn train_positives() -> usize {
        10
    }
    pub fn train_negatives() -> usize {
        140
    }
    pub fn test_positives() -> usize {
        140
    }
    pub fn test_negatives() -> usize {
        1860
    }
    pub fn separation() -> f64 {
        2.0
    }
    pub fn test_fraction() -> f64 {
        0.2
    }
}

/// Repartitioned SGD learning study.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LearnConfig {
    pub experiment: String,
    #[serde(default = "default_seed", skip_serializing_if = "is_zero")]
    pub master_seed: u64,
    #[serde(default)]
    pub out: Option<String>,
    #[serde(default = "LearnConfig::default_data")]
    pub data: DataConfig,
    #[serde(default = "LearnConfig::default_workers")]
    pub workers: usize,
    #[serde(default = "LearnConfig::default_batch")]
    pub batch: u64,
    #[serde(default = "LearnConfig::default_iterations")]
    pub iterations: u64,
    #[serde(default = "LearnConfig::default_runs")]
    pub runs: u64,
    #[serde(default = "LearnConfig::default_n_r_list")]
    pub n_r_list: Vec<NrValue>,
    #[serde(default = "LearnConfig::default_step_size")]
    pub step_size: f64,
    #[serde(default = "LearnConfig::default_momentum")]
    pub momentum: f64,
    #[serde(default = "LearnConfig::default_l2_coeff")]
    pub l2_coeff: f64,
    #[serde(default = "LearnConfig::default_monitor_pairs")]
    pub monitor_pairs: u64,
    #[serde(default = "LearnConfig::default_test_every")]
    pub test_every: u64,
    /// Standardize features to train-set mean and unit variance.
    #[serde(default = "LearnConfig::default_standardize")]
    pub standardize: bool,
    /// Drop trailing points so the worker count divides both class sizes.
    #[serde(default = "LearnConfig::default_truncate")]
    pub truncate_to_divisible: bool,
    #[serde(default = "EstimateConfig::default_scheme")]
    pub scheme: SchemeKind,
}

impl LearnConfig {
    fn default_data() -> DataConfig {
        DataConfig::Synthetic {
            dim: defaults::dim(),
            train_positives: defaults::train_positives(),
            train_negatives: defaults::train_negatives(),
            test_positives: defaults::test_positives(),
            test_negatives: defaults::test_negatives(),
            separation: defaults::separation(),
        }
    }
    fn default_workers() -> usize {
        10
    }
    fn default_batch() -> u64 {
        20
    }
    fn default_iterations() -> u64 {
        500
    }
    fn default_runs() -> u64 {
        20
    }
    fn default_n_r_list() -> Vec<NrValue> {
        vec![
            NrValue(NonZeroU64::new(1)),
            NrValue(NonZeroU64::new(25)),
            NrValue(None),
        ]
    }
    fn default_step_size() -> f64 {
        0.01
    }
    fn default_momentum() -> f64 {
        0.9
    }
    fn default_l2_coeff() -> f64 {
        0.05
    }
    fn default_monitor_pairs() -> u64 {
        500
    }
    fn default_test_every() -> u64 {
        10
    }
    fn default_standardize() -> bool {
        true
    }
    fn default_truncate() -> bool {
        true
    }
}

impl Default for LearnConfig {
    fn default() -> Self {
        Self {
            experiment: "learn".into(),
            master_seed: 0,
            out: None,
            data: Self::default_data(),
            workers: Self::default_workers(),
            batch: Self::default_batch(),
            iterations: Self::default_iterations(),
            runs: Self::default_runs(),
            n_r_list: Self::default_n_r_list(),
            step_size: Self::default_step_size(),
            momentum: Self::default_momentum(),
            l2_coeff: Self::default_l2_coeff(),
            monitor_pairs: Self::default_monitor_pairs(),
            test_every: Self::default_test_every(),
            standardize: Self::default_standardize(),
            truncate_to_divisible: Self::default_truncate(),
            scheme: EstimateConfig::default_scheme(),
        }
    }
}

/// Theory-check harness configuration. Tolerances and the gated Monte Carlo
/// sizes are pinned in code; the run counts here exist so developers can do
/// quick smoke runs, and default to the gated values.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CheckTheoryConfig {
    pub experiment: String,
    #[serde(default = "default_seed", skip_serializing_if = "is_zero")]
    pub master_seed: u64,
    #[serde(default)]
    pub out: Option<String>,
    /// Replications for the theorem variance checks.
    #[serde(default = "CheckTheoryConfig::default_mc_runs")]
    pub mc_runs: u64,
    /// Replications for the unbiasedness checks.
    #[serde(default = "CheckTheoryConfig::default_unbias_runs")]
    pub unbias_runs: u64,
    /// Replications for the relative-variance study.
    #[serde(default = "CheckTheoryConfig::default_estimate_runs")]
    pub estimate_runs: u64,
    /// Replications for the SWOR proximity study.
    #[serde(default = "CheckTheoryConfig::default_swor_runs")]
    pub swor_runs: u64,
}

impl CheckTheoryConfig {
    pub fn default_mc_runs() -> u64 {
        20_000
    }
    pub fn default_unbias_runs() -> u64 {
        5_000
    }
    pub fn default_estimate_runs() -> u64 {
        2_000
    }
    pub fn default_swor_runs() -> u64 {
        500
    }
}

impl Default for CheckTheoryConfig {
    fn default() -> Self {
        Self {
            experiment: "check-theory".into(),
            master_seed: 0,
            out: None,
            mc_runs: Self::default_mc_runs(),
            unbias_runs: Self::default_unbias_runs(),
            estimate_runs: Self::default_estimate_runs(),
            swor_runs: Self::default_swor_runs(),
        }
    }
}
