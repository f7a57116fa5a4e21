//! Built-in kernels.
//!
//! Every kernel is deterministic and finite on finite inputs, and the
//! generalized (tuple) form is symmetric within each block of arguments.

use serde::{Deserialize, Serialize};

use crate::data::DataPoint;
use crate::error::{Error, Result};

/// The pairwise map h(x, z) being averaged, plus its generalized K-sample
/// form where one exists.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Kernel {
    /// AUC pair indicator `1{z < x}` on scalars. Ties score 0: the strict
    /// inequality is what the variance theory is written against.
    AucIndicator,
    /// AUC with ties scored one half; intended for real data where score
    /// collisions happen, never used by the theory checks.
    AucHalfTies,
    /// Dot product `x . z`.
    Product,
    /// Gini mean difference kernel `|x1 - x2|` (one sample, degree 2).
    Gini,
    /// Sample-variance kernel `(x1 - x2)^2` (one sample, degree 2), taken as
    /// written; note the resulting U-statistic equals twice the unbiased
    /// sample variance, since the conventional kernel carries a factor 1/2.
    SampleVariance,
    /// Kendall rank-correlation kernel on paired 2-d observations:
    /// `1{(a1 - b1)(a2 - b2) > 0}` (two samples, degree (1, 1)).
    KendallTau,
    /// Ordered-tuple indicator `1{x1 < x2 < ... < xK}` over K scalar samples
    /// of degree one each; the K = 2 case evaluated on (x, z) reads
    /// `1{x < z}`.
    Vus,
    /// Pairwise hinge surrogate `max(0, 1 + s(z) - s(x))` for a linear score
    /// `s(v) = w . v + b`, oriented so that minimizing it pushes first-sample
    /// scores above second-sample scores.
    HingeSurrogate { weights: Vec<f64>, bias: f64 },
    /// Constant kernel, handy for degenerate-variance tests.
    Constant { value: f64 },
}

impl Kernel {
    /// Dimension each argument point must have, when the kernel pins one.
    pub fn expected_dim(&self) -> Option<usize> {
        match self {
            Kernel::AucIndicator
            | Kernel::AucHalfTies
            | Kernel::Gini
            | Kernel::SampleVariance
            | Kernel::Vus => Some(1),
            Kernel::KendallTau => Some(2),
            Kernel::HingeSurrogate { weights, .. } => Some(weights.len()),
            Kernel::Product | Kernel::Constant { .. } => None,
        }
    }

    fn check_dim(&self, pt: &[f64]) -> Result<()> {
        if let Some(d) = self.expected_dim() {
            if pt.len() != d {
                return Err(Error::DimensionMismatch {
                    expected: d,
                    got: pt.len(),
                });
            }
        }
        Ok(())
    }

    /// Evaluate the two-sample degree-(1,1) form h(x, z).
    #[inline]
    pub fn eval_pair(&self, x: &[f64], z: &[f64]) -> Result<f64> {
        self.check_dim(x)?;
        self.check_dim(z)?;
        Ok(match self {
            Kernel::AucIndicator => {
                if z[0] < x[0] {
                    1.0
                } else {
                    0.0
                }
            }
            Kernel::AucHalfTies => {
                if z[0] < x[0] {
                    1.0
                } else if z[0] == x[0] {
                    0.5
                } else {
                    0.0
                }
            }
            Kernel::Product => {
                if x.len() != z.len() {
                    return Err(Error::DimensionMismatch {
                        expected: x.len(),
                        got: z.len(),
                    });
                }
                x.iter().zip(z).map(|(a, b)| a * b).sum()
            }
            Kernel::Gini => (x[0] - z[0]).abs(),
            Kernel::SampleVariance => {
                let d = x[0] - z[0];
                d * d
            }
            Kernel::KendallTau => {
                if (x[0] - z[0]) * (x[1] - z[1]) > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            Kernel::Vus => {
                if x[0] < z[0] {
                    1.0
                } else {
                    0.0
                }
            }
            Kernel::HingeSurrogate { weights, .. } => {
                // The bias cancels in s(z) - s(x); leaving it out keeps bias
                // invariance exact in floating point.
                let mut margin = 0.0;
                for (w, (xv, zv)) in weights.iter().zip(x.iter().zip(z)) {
                    margin += w * (xv - zv);
                }
                (1.0 - margin).max(0.0)
            }
            Kernel::Constant { value } => *value,
        })
    }

    /// Evaluate the generalized form on one tuple: `blocks[k]` holds the
    /// d_k points drawn from sample k.
    pub fn eval_tuple(&self, blocks: &[Vec<&[f64]>]) -> Result<f64> {
        match self {
            Kernel::Gini | Kernel::SampleVariance => {
                let block = single_block(blocks, 2)?;
                self.eval_pair(block[0], block[1])
            }
            Kernel::Vus => {
                for b in blocks {
                    if b.len() != 1 {
                        return Err(block_shape_error("one point per sample"));
                    }
                    self.check_dim(b[0])?;
                }
                if blocks.is_empty() {
                    return Err(block_shape_error("at least one sample"));
                }
                let increasing = blocks.windows(2).all(|w| w[0][0][0] < w[1][0][0]);
                Ok(if increasing { 1.0 } else { 0.0 })
            }
            Kernel::Constant { value } => Ok(*value),
            _ => {
                // Degree-(1,1) two-sample kernels.
                if blocks.len() != 2 || blocks[0].len() != 1 || blocks[1].len() != 1 {
                    return Err(block_shape_error("two samples of degree one"));
                }
                self.eval_pair(blocks[0][0], blocks[1][0])
            }
        }
    }
}

#[inline]
pub(crate) fn score(weights: &[f64], bias: f64, point: &[f64]) -> f64 {
    let mut s = bias;
    for (w, v) in weights.iter().zip(point) {
        s += w * v;
    }
    s
}

fn single_block<'a, 'b>(blocks: &'a [Vec<&'b [f64]>], degree: usize) -> Result<&'a Vec<&'b [f64]>> {
    if blocks.len() != 1 || blocks[0].len() != degree {
        return Err(block_shape_error("one sample of degree two"));
    }
    Ok(&blocks[0])
}

fn block_shape_error(expected: &str) -> Error {
    Error::InvalidParameter {
        name: "blocks",
        reason: format!("kernel expects {expected}"),
    }
}

/// Dispatch a pairwise kernel evaluation on two data points.
pub fn eval_kernel(kernel: &Kernel, x: &DataPoint, z: &DataPoint) -> Result<f64> {
    kernel.eval_pair(x.coords(), z.coords())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn auc_indicator_cases() {
        let k = Kernel::AucIndicator;
        assert_eq!(k.eval_pair(&[2.0], &[1.0]).unwrap(), 1.0);
        assert_eq!(k.eval_pair(&[0.0], &[0.0]).unwrap(), 0.0);
        assert_eq!(k.eval_pair(&[0.0], &[1.0]).unwrap(), 0.0);
    }

    #[test]
    fn half_tie_variant_scores_ties() {
        let k = Kernel::AucHalfTies;
        assert_eq!(k.eval_pair(&[1.0], &[1.0]).unwrap(), 0.5);
        assert_eq!(k.eval_pair(&[2.0], &[1.0]).unwrap(), 1.0);
    }

    #[test]
    fn product_is_plain_arithmetic() {
        assert_eq!(
            Kernel::Product.eval_pair(&[3.0], &[-2.0]).unwrap(),
            -6.0
        );
        assert_eq!(
            Kernel::Product.eval_pair(&[1.0, 2.0], &[3.0, 4.0]).unwrap(),
            11.0
        );
    }

    #[test]
    fn dimension_mismatch_is_an_error() {
        assert!(Kernel::AucIndicator.eval_pair(&[1.0, 2.0], &[0.0]).is_err());
        assert!(Kernel::Product.eval_pair(&[1.0, 2.0], &[0.0]).is_err());
        assert!(Kernel::KendallTau.eval_pair(&[1.0], &[0.0]).is_err());
    }

    #[test]
    fn kendall_concordance() {
        let k = Kernel::KendallTau;
        assert_eq!(k.eval_pair(&[0.0, 0.0], &[1.0, 1.0]).unwrap(), 1.0);
        assert_eq!(k.eval_pair(&[0.0, 1.0], &[1.0, 0.0]).unwrap(), 0.0);
    }

    #[test]
    fn vus_ordered_tuple() {
        let k = Kernel::Vus;
        let (a, b, c) = ([1.0], [2.0], [3.0]);
        let blocks: Vec<Vec<&[f64]>> = vec![vec![&a], vec![&b], vec![&c]];
        assert_eq!(k.eval_tuple(&blocks).unwrap(), 1.0);
        let blocks: Vec<Vec<&[f64]>> = vec![vec![&b], vec![&a], vec![&c]];
        assert_eq!(k.eval_tuple(&blocks).unwrap(), 0.0);
    }

    #[test]
    fn gini_tuple_matches_pair_form() {
        let k = Kernel::Gini;
        let (a, b) = ([0.0], [2.0]);
        let blocks: Vec<Vec<&[f64]>> = vec![vec![&a, &b]];
        assert_eq!(k.eval_tuple(&blocks).unwrap(), 2.0);
        assert_eq!(k.eval_pair(&a, &b).unwrap(), 2.0);
    }

    #[test]
    fn hinge_orientation() {
        let k = Kernel::HingeSurrogate {
            weights: vec![1.0],
            bias: 0.0,
        };
        // Positive scored well above negative: no loss.
        assert_eq!(k.eval_pair(&[3.0], &[0.0]).unwrap(), 0.0);
        // Zero weights: unit loss on every pair.
        let k0 = Kernel::HingeSurrogate {
            weights: vec![0.0],
            bias: 5.0,
        };
        assert_eq!(k0.eval_pair(&[3.0], &[0.0]).unwrap(), 1.0);
    }
}
