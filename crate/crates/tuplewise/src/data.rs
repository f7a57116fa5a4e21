//! Data points, two-sample and K-sample datasets, and CSV ingestion.

use std::collections::HashSet;
use std::path::Path;

use crate::error::{Error, Result};

/// A point with finite real coordinates, dimension >= 1.
#[derive(Clone, Debug, PartialEq)]
pub struct DataPoint {
    coords: Vec<f64>,
}

impl DataPoint {
    pub fn new(coords: Vec<f64>) -> Result<Self> {
        if coords.is_empty() {
            return Err(Error::InvalidParameter {
                name: "coords",
                reason: "a data point needs at least one coordinate".into(),
            });
        }
        if coords.iter().any(|c| !c.is_finite()) {
            return Err(Error::NonFinite { context: "data point" });
        }
        Ok(Self { coords })
    }

    pub fn scalar(value: f64) -> Result<Self> {
        Self::new(vec![value])
    }

    pub fn coords(&self) -> &[f64] {
        &self.coords
    }

    pub fn dim(&self) -> usize {
        self.coords.len()
    }
}

/// Flat row-major point storage; keeps per-point overhead off the hot loops.
#[derive(Clone, Debug, PartialEq)]
pub(crate) struct Points {
    dim: usize,
    flat: Vec<f64>,
}

impl Points {
    pub(crate) fn from_rows(dim: usize, flat: Vec<f64>) -> Result<Self> {
        if dim == 0 || flat.len() % dim != 0 {
            return Err(Error::DimensionMismatch {
                expected: dim.max(1),
                got: flat.len(),
            });
        }
        if flat.iter().any(|c| !c.is_finite()) {
            return Err(Error::NonFinite { context: "sample" });
        }
        Ok(Self { dim, flat })
    }

    pub(crate) fn len(&self) -> usize {
        self.flat.len() / self.dim
    }

    #[inline]
    pub(crate) fn point(&self, i: usize) -> &[f64] {
        &self.flat[i * self.dim..(i + 1) * self.dim]
    }
}

/// The two samples every pairwise estimator works on: `xs` of size n and
/// `zs` of size m, all points of one common dimension.
#[derive(Clone, Debug, PartialEq)]
pub struct TwoSampleDataset {
    xs: Points,
    zs: Points,
}

impl TwoSampleDataset {
    pub fn new(xs: Vec<DataPoint>, zs: Vec<DataPoint>) -> Result<Self> {
        if xs.is_empty() {
            return Err(Error::EmptySample { which: "first (X)" });
        }
        if zs.is_empty() {
            return Err(Error::EmptySample { which: "second (Z)" });
        }
        let dim = xs[0].dim();
        for p in xs.iter().chain(zs.iter()) {
            if p.dim() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    got: p.dim(),
                });
            }
        }
        let flatten = |pts: Vec<DataPoint>| {
            let mut flat = Vec::with_capacity(pts.len() * dim);
            for p in pts {
                flat.extend_from_slice(p.coords());
            }
            flat
        };
        Ok(Self {
            xs: Points::from_rows(dim, flatten(xs))?,
            zs: Points::from_rows(dim, flatten(zs))?,
        })
    }

    /// Build from row-major coordinate buffers.
    pub fn from_rows(dim: usize, xs: Vec<f64>, zs: Vec<f64>) -> Result<Self> {
        let ds = Self {
            xs: Points::from_rows(dim, xs)?,
            zs: Points::from_rows(dim, zs)?,
        };
        if ds.n() == 0 {
            return Err(Error::EmptySample { which: "first (X)" });
        }
        if ds.m() == 0 {
            return Err(Error::EmptySample { which: "second (Z)" });
        }
        Ok(ds)
    }

    /// Convenience constructor for scalar samples.
    pub fn from_scalars(xs: Vec<f64>, zs: Vec<f64>) -> Result<Self> {
        Self::from_rows(1, xs, zs)
    }

    pub fn n(&self) -> usize {
        self.xs.len()
    }

    pub fn m(&self) -> usize {
        self.zs.len()
    }

    pub fn dim(&self) -> usize {
        self.xs.dim
    }

    #[inline]
    pub fn x(&self, k: usize) -> &[f64] {
        self.xs.point(k)
    }

    #[inline]
    pub fn z(&self, l: usize) -> &[f64] {
        self.zs.point(l)
    }

    /// Drop trailing points so that `workers` divides both sample sizes.
    /// Mirrors the `repartition`-style preprocessing offered by the CLI.
    pub fn truncate_to_divisible(&self, workers: usize) -> Result<Self> {
        let n = self.n() - self.n() % workers;
        let m = self.m() - self.m() % workers;
        if n == 0 || m == 0 {
            return Err(Error::InvalidParameter {
                name: "workers",
                reason: format!(
                    "truncating {}x{} points to a multiple of {workers} empties a sample",
                    self.n(),
                    self.m()
                ),
            });
        }
        Ok(Self {
            xs: Points::from_rows(self.dim(), self.xs.flat[..n * self.dim()].to_vec())?,
            zs: Points::from_rows(self.dim(), self.zs.flat[..m * self.dim()].to_vec())?,
        })
    }
}

/// K independent samples with per-sample tuple degrees, for generalized
/// (K-sample) statistics.
#[derive(Clone, Debug)]
pub struct GeneralizedSamples {
    samples: Vec<Points>,
    degrees: Vec<usize>,
}

impl GeneralizedSamples {
    pub fn new(samples: Vec<Vec<DataPoint>>, degrees: Vec<usize>) -> Result<Self> {
        if samples.is_empty() || samples.len() != degrees.len() {
            return Err(Error::InvalidParameter {
                name: "degrees",
                reason: format!(
                    "got {} samples and {} degrees",
                    samples.len(),
                    degrees.len()
                ),
            });
        }
        let mut blocks = Vec::with_capacity(samples.len());
        for (k, (sample, &d)) in samples.into_iter().zip(degrees.iter()).enumerate() {
            if d == 0 {
                return Err(Error::InvalidParameter {
                    name: "degrees",
                    reason: format!("degree of sample {k} must be positive"),
                });
            }
            if sample.len() < d {
                return Err(Error::InvalidParameter {
                    name: "samples",
                    reason: format!(
                        "sample {k} has {} points but degree {d} requires at least {d}",
                        sample.len()
                    ),
                });
            }
            let dim = sample[0].dim();
            let mut flat = Vec::with_capacity(sample.len() * dim);
            for p in &sample {
                if p.dim() != dim {
                    return Err(Error::DimensionMismatch {
                        expected: dim,
                        got: p.dim(),
                    });
                }
                flat.extend_from_slice(p.coords());
            }
            blocks.push(Points::from_rows(dim, flat)?);
        }
        Ok(Self {
            samples: blocks,
            degrees,
        })
    }

    /// Scalar-sample shortcut used all over the tests.
    pub fn from_scalar_samples(samples: Vec<Vec<f64>>, degrees: Vec<usize>) -> Result<Self> {
        let pts = samples
            .into_iter()
            .map(|s| s.into_iter().map(DataPoint::scalar).collect::<Result<Vec<_>>>())
            .collect::<Result<Vec<_>>>()?;
        Self::new(pts, degrees)
    }

    pub fn num_samples(&self) -> usize {
        self.samples.len()
    }

    pub fn degrees(&self) -> &[usize] {
        &self.degrees
    }

    pub fn sample_len(&self, k: usize) -> usize {
        self.samples[k].len()
    }

    #[inline]
    pub fn point(&self, k: usize, i: usize) -> &[f64] {
        self.samples[k].point(i)
    }
}

/// How to interpret a two-class CSV (or whitespace-delimited) file.
#[derive(Clone, Debug)]
pub struct CsvLoadSpec {
    /// Label tokens mapped to the X (positive / minority) sample.
    pub positive_labels: HashSet<String>,
    /// Column holding the label; defaults to the last column.
    pub label_column: Option<usize>,
    /// Feature columns; defaults to every column except the label.
    pub feature_columns: Option<Vec<usize>>,
    /// Skip the first non-empty line.
    pub has_header: bool,
}

/// Load a labeled point file; rows whose label is in `positive_labels` become
/// `xs`, the rest `zs`, row order preserved within each class. The delimiter
/// (comma or whitespace) is sniffed from the first data line.
pub fn load_two_sample_csv(path: &Path, spec: &CsvLoadSpec) -> Result<TwoSampleDataset> {
    let text = std::fs::read_to_string(path)?;
    parse_two_sample_text(&text, spec)
}

pub(crate) fn parse_two_sample_text(text: &str, spec: &CsvLoadSpec) -> Result<TwoSampleDataset> {
    let mut xs_flat = Vec::new();
    let mut zs_flat = Vec::new();
    let mut dim: Option<usize> = None;
    let mut header_pending = spec.has_header;
    let mut comma: Option<bool> = None;

    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw.trim();
        if line.is_empty() {
            continue;
        }
        if header_pending {
            header_pending = false;
            continue;
        }
        let is_comma = *comma.get_or_insert_with(|| line.contains(','));
        let tokens: Vec<&str> = if is_comma {
            line.split(',').map(str::trim).collect()
        } else {
            line.split_whitespace().collect()
        };
        let label_col = spec.label_column.unwrap_or(tokens.len().saturating_sub(1));
        if label_col >= tokens.len() {
            return Err(Error::CsvParse {
                line: line_no,
                reason: format!(
                    "label column {label_col} out of range for a row with {} fields",
                    tokens.len()
                ),
            });
        }
        let label = tokens[label_col];
        let feature_cols: Vec<usize> = match &spec.feature_columns {
            Some(cols) => cols.clone(),
            None => (0..tokens.len()).filter(|c| *c != label_col).collect(),
        };
        let mut row = Vec::with_capacity(feature_cols.len());
        for &c in &feature_cols {
            let tok = tokens.get(c).ok_or_else(|| Error::CsvParse {
                line: line_no,
                reason: format!("feature column {c} out of range"),
            })?;
            let v: f64 = tok.parse().map_err(|_| Error::CsvParse {
                line: line_no,
                reason: format!("cannot parse feature column {c} value {tok:?} as a number"),
            })?;
            if !v.is_finite() {
                return Err(Error::CsvParse {
                    line: line_no,
                    reason: format!("non-finite feature in column {c}"),
                });
            }
            row.push(v);
        }
        match dim {
            None => dim = Some(row.len()),
            Some(d) if d != row.len() => {
                return Err(Error::CsvParse {
                    line: line_no,
                    reason: format!("row has {} features, expected {d}", row.len()),
                });
            }
            _ => {}
        }
        if spec.positive_labels.contains(label) {
            xs_flat.extend_from_slice(&row);
        } else {
            zs_flat.extend_from_slice(&row);
        }
    }

    let dim = dim.ok_or(Error::EmptySample { which: "first (X)" })?;
    if xs_flat.is_empty() {
        return Err(Error::EmptySample { which: "positive (X)" });
    }
    if zs_flat.is_empty() {
        return Err(Error::EmptySample { which: "negative (Z)" });
    }
    TwoSampleDataset::from_rows(dim, xs_flat, zs_flat)
}
