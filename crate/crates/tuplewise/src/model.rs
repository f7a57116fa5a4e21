//! Synthetic generating distributions and exact Hoeffding variance
//! components.
//!
//! The decomposition splits the variance of the pair kernel into the
//! single-sample parts `sigma1^2 = Var(h1(X))`, `sigma2^2 = Var(h2(Z))`
//! (with h1, h2 the conditional means) and the degenerate pairwise part
//! `sigma0^2 = Var(h0(X, Z))`, so that `sigma^2 = sigma0^2 + sigma1^2 +
//! sigma2^2`. These four numbers are the input to every closed-form variance
//! in [`crate::variance`].

use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::data::TwoSampleDataset;
use crate::error::{Error, Result};
use crate::kernels::Kernel;
use crate::rng::bernoulli;
use crate::util::KahanSum;

/// Relative slack allowed on the `sigma^2 = sigma0^2 + sigma1^2 + sigma2^2`
/// identity when components are assembled from separately computed pieces.
pub const COMPONENT_IDENTITY_TOL: f64 = 1e-12;

/// Hoeffding variance components of a kernel under a generating distribution.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct VarianceComponents {
    pub sigma0_sq: f64,
    pub sigma1_sq: f64,
    pub sigma2_sq: f64,
    pub sigma_sq: f64,
}

impl VarianceComponents {
    /// Assemble from independently computed parts, enforcing non-negativity
    /// and the decomposition identity.
    pub fn new(sigma0_sq: f64, sigma1_sq: f64, sigma2_sq: f64, sigma_sq: f64) -> Result<Self> {
        for (name, v) in [
            ("sigma0_sq", sigma0_sq),
            ("sigma1_sq", sigma1_sq),
            ("sigma2_sq", sigma2_sq),
            ("sigma_sq", sigma_sq),
        ] {
            if !v.is_finite() || v < -COMPONENT_IDENTITY_TOL {
                return Err(Error::InvalidParameter {
                    name,
                    reason: format!("variance component must be nonnegative, got {v}"),
                });
            }
        }
        let sum = sigma0_sq + sigma1_sq + sigma2_sq;
        let scale = sum.abs().max(sigma_sq.abs()).max(1e-300);
        if (sum - sigma_sq).abs() > COMPONENT_IDENTITY_TOL * scale.max(1.0) {
            return Err(Error::InvalidParameter {
                name: "sigma_sq",
                reason: format!(
                    "decomposition identity violated: {sigma_sq} vs component sum {sum}"
                ),
            });
        }
        Ok(Self {
            sigma0_sq: sigma0_sq.max(0.0),
            sigma1_sq: sigma1_sq.max(0.0),
            sigma2_sq: sigma2_sq.max(0.0),
            sigma_sq: sigma_sq.max(0.0),
        })
    }

    /// Build from the three orthogonal parts; `sigma_sq` is their sum.
    pub fn from_parts(sigma0_sq: f64, sigma1_sq: f64, sigma2_sq: f64) -> Self {
        Self {
            sigma0_sq,
            sigma1_sq,
            sigma2_sq,
            sigma_sq: sigma0_sq + sigma1_sq + sigma2_sq,
        }
    }
}

/// Two-atom model for AUC studies: positives X on {0, 2} with
/// P(X = 2) = q, negatives Z on {-1, +1} with P(Z = +1) = p.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DiscreteAucDistribution {
    p: f64,
    q: f64,
}

impl DiscreteAucDistribution {
    pub fn new(p: f64, q: f64) -> Result<Self> {
        check_probability("p", p)?;
        check_probability("q", q)?;
        Ok(Self { p, q })
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    pub fn q(&self) -> f64 {
        self.q
    }

    /// Support atoms of X as (value, probability).
    pub fn x_support(&self) -> [(f64, f64); 2] {
        [(0.0, 1.0 - self.q), (2.0, self.q)]
    }

    /// Support atoms of Z as (value, probability).
    pub fn z_support(&self) -> [(f64, f64); 2] {
        [(-1.0, 1.0 - self.p), (1.0, self.p)]
    }
}

fn check_probability(name: &'static str, value: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&value) || !value.is_finite() {
        return Err(Error::InvalidProbability { name, value });
    }
    Ok(())
}

/// Independent Gaussians X ~ N(mu_x, sigma_x^2), Z ~ N(mu_z, sigma_z^2) under
/// the product kernel x*z.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GaussianProductDistribution {
    pub mu_x: f64,
    pub sigma_x: f64,
    pub mu_z: f64,
    pub sigma_z: f64,
}

impl GaussianProductDistribution {
    pub fn new(mu_x: f64, sigma_x: f64, mu_z: f64, sigma_z: f64) -> Result<Self> {
        for (name, v) in [("sigma_x", sigma_x), ("sigma_z", sigma_z)] {
            if !(v > 0.0) || !v.is_finite() {
                return Err(Error::InvalidParameter {
                    name,
                    reason: format!("standard deviation must be positive, got {v}"),
                });
            }
        }
        if !mu_x.is_finite() || !mu_z.is_finite() {
            return Err(Error::NonFinite { context: "Gaussian mean" });
        }
        Ok(Self {
            mu_x,
            sigma_x,
            mu_z,
            sigma_z,
        })
    }
}

/// Exact components of any pairwise kernel under the discrete AUC model, by
/// enumeration of the 2x2 support: no sampling error, only rounding.
pub fn hoeffding_components_enumerated(
    kernel: &Kernel,
    dist: &DiscreteAucDistribution,
) -> Result<VarianceComponents> {
    let xs = dist.x_support();
    let zs = dist.z_support();

    let mut u = 0.0;
    for (x, px) in xs {
        for (z, pz) in zs {
            u += px * pz * kernel.eval_pair(&[x], &[z])?;
        }
    }

    let mut sigma1_sq = 0.0;
    for (x, px) in xs {
        let mut h1 = 0.0;
        for (z, pz) in zs {
            h1 += pz * kernel.eval_pair(&[x], &[z])?;
        }
        sigma1_sq += px * (h1 - u) * (h1 - u);
    }

    let mut sigma2_sq = 0.0;
    for (z, pz) in zs {
        let mut h2 = 0.0;
        for (x, px) in xs {
            h2 += px * kernel.eval_pair(&[x], &[z])?;
        }
        sigma2_sq += pz * (h2 - u) * (h2 - u);
    }

    let mut sigma0_sq = 0.0;
    let mut sigma_sq = 0.0;
    for (x, px) in xs {
        let mut h1 = 0.0;
        for (z, pz) in zs {
            h1 += pz * kernel.eval_pair(&[x], &[z])?;
        }
        for (z, pz) in zs {
            let mut h2 = 0.0;
            for (x2, px2) in xs {
                h2 += px2 * kernel.eval_pair(&[x2], &[z])?;
            }
            let h = kernel.eval_pair(&[x], &[z])?;
            let h0 = h - h1 - h2 + u;
            sigma0_sq += px * pz * h0 * h0;
            sigma_sq += px * pz * (h - u) * (h - u);
        }
    }

    VarianceComponents::new(sigma0_sq, sigma1_sq, sigma2_sq, sigma_sq)
}

/// Exact mean U(h) of a pairwise kernel under the discrete AUC model.
pub fn enumerated_mean(kernel: &Kernel, dist: &DiscreteAucDistribution) -> Result<f64> {
    let mut u = 0.0;
    for (x, px) in dist.x_support() {
        for (z, pz) in dist.z_support() {
            u += px * pz * kernel.eval_pair(&[x], &[z])?;
        }
    }
    Ok(u)
}

/// The degenerate part h0 evaluated on one support atom pair; used by the
/// degeneracy tests (its conditional means must vanish exactly).
pub fn enumerated_h0(
    kernel: &Kernel,
    dist: &DiscreteAucDistribution,
    x: f64,
    z: f64,
) -> Result<f64> {
    let u = enumerated_mean(kernel, dist)?;
    let mut h1 = 0.0;
    for (zv, pz) in dist.z_support() {
        h1 += pz * kernel.eval_pair(&[x], &[zv])?;
    }
    let mut h2 = 0.0;
    for (xv, px) in dist.x_support() {
        h2 += px * kernel.eval_pair(&[xv], &[z])?;
    }
    Ok(kernel.eval_pair(&[x], &[z])? - h1 - h2 + u)
}

/// Closed-form components of the AUC indicator kernel under the discrete
/// model: `sigma1^2 = p^2 q(1-q)`, `sigma2^2 = (1-q)^2 p(1-p)`,
/// `sigma0^2 = pq(1-p)(1-q)`, `sigma^2 = p(1-p+pq)(1-q)`.
pub fn hoeffding_components_closed_auc(p: f64, q: f64) -> Result<VarianceComponents> {
    check_probability("p", p)?;
    check_probability("q", q)?;
    let sigma1_sq = p * p * q * (1.0 - q);
    let sigma2_sq = (1.0 - q) * (1.0 - q) * p * (1.0 - p);
    let sigma0_sq = p * q * (1.0 - p) * (1.0 - q);
    let sigma_sq = p * (1.0 - p + p * q) * (1.0 - q);
    VarianceComponents::new(sigma0_sq, sigma1_sq, sigma2_sq, sigma_sq)
}

/// True mean of the AUC indicator under the discrete model:
/// `U(h) = P(X > Z) = q + (1-q)(1-p)`.
pub fn closed_auc_mean(p: f64, q: f64) -> f64 {
    q + (1.0 - q) * (1.0 - p)
}

/// Closed-form components of the product kernel under independent Gaussians:
/// `sigma1^2 = mu_z^2 sigma_x^2`, `sigma2^2 = mu_x^2 sigma_z^2`,
/// `sigma0^2 = sigma_x^2 sigma_z^2`.
pub fn hoeffding_components_closed_product(
    dist: &GaussianProductDistribution,
) -> VarianceComponents {
    let sx2 = dist.sigma_x * dist.sigma_x;
    let sz2 = dist.sigma_z * dist.sigma_z;
    VarianceComponents::from_parts(sx2 * sz2, dist.mu_z * dist.mu_z * sx2, dist.mu_x * dist.mu_x * sz2)
}

/// A generating distribution together with its canonical kernel, components
/// and mean: everything a Monte Carlo study needs to compare against theory.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum SyntheticModel {
    DiscreteAuc { p: f64, q: f64 },
    GaussianProduct { mu_x: f64, sigma_x: f64, mu_z: f64, sigma_z: f64 },
}

impl SyntheticModel {
    pub fn discrete_auc(p: f64, q: f64) -> Result<Self> {
        DiscreteAucDistribution::new(p, q)?;
        Ok(Self::DiscreteAuc { p, q })
    }

    pub fn gaussian_product(mu_x: f64, sigma_x: f64, mu_z: f64, sigma_z: f64) -> Result<Self> {
        GaussianProductDistribution::new(mu_x, sigma_x, mu_z, sigma_z)?;
        Ok(Self::GaussianProduct {
            mu_x,
            sigma_x,
            mu_z,
            sigma_z,
        })
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            Self::DiscreteAuc { p, q } => DiscreteAucDistribution::new(p, q).map(|_| ()),
            Self::GaussianProduct {
                mu_x,
                sigma_x,
                mu_z,
                sigma_z,
            } => GaussianProductDistribution::new(mu_x, sigma_x, mu_z, sigma_z).map(|_| ()),
        }
    }

    /// Kernel the model's closed forms are stated for.
    pub fn kernel(&self) -> Kernel {
        match self {
            Self::DiscreteAuc { .. } => Kernel::AucIndicator,
            Self::GaussianProduct { .. } => Kernel::Product,
        }
    }

    pub fn components(&self) -> Result<VarianceComponents> {
        match *self {
            Self::DiscreteAuc { p, q } => hoeffding_components_closed_auc(p, q),
            Self::GaussianProduct {
                mu_x,
                sigma_x,
                mu_z,
                sigma_z,
            } => Ok(hoeffding_components_closed_product(
                &GaussianProductDistribution::new(mu_x, sigma_x, mu_z, sigma_z)?,
            )),
        }
    }

    /// True kernel mean U(h).
    pub fn mean(&self) -> f64 {
        match *self {
            Self::DiscreteAuc { p, q } => closed_auc_mean(p, q),
            Self::GaussianProduct { mu_x, mu_z, .. } => mu_x * mu_z,
        }
    }

    /// Draw an i.i.d. dataset: the n X-draws first, then the m Z-draws, all
    /// from the one stream, so a dataset is a pure function of (seed, n, m).
    pub fn sample(&self, n: usize, m: usize, rng: &mut ChaCha8Rng) -> TwoSampleDataset {
        match *self {
            Self::DiscreteAuc { p, q } => {
                let xs: Vec<f64> = (0..n)
                    .map(|_| if bernoulli(rng, q) { 2.0 } else { 0.0 })
                    .collect();
                let zs: Vec<f64> = (0..m)
                    .map(|_| if bernoulli(rng, p) { 1.0 } else { -1.0 })
                    .collect();
                TwoSampleDataset::from_scalars(xs, zs).expect("finite by construction")
            }
            Self::GaussianProduct {
                mu_x,
                sigma_x,
                mu_z,
                sigma_z,
            } => {
                let nx = Normal::new(mu_x, sigma_x).expect("validated");
                let nz = Normal::new(mu_z, sigma_z).expect("validated");
                let xs: Vec<f64> = (0..n).map(|_| nx.sample(rng)).collect();
                let zs: Vec<f64> = (0..m).map(|_| nz.sample(rng)).collect();
                TwoSampleDataset::from_scalars(xs, zs).expect("finite by construction")
            }
        }
    }
}

/// Draw an i.i.d. two-sample dataset of sizes (n, m); deterministic given the
/// generator state.
pub fn sample_dataset(
    model: &SyntheticModel,
    n: usize,
    m: usize,
    rng: &mut ChaCha8Rng,
) -> Result<TwoSampleDataset> {
    if n == 0 {
        return Err(Error::EmptySample { which: "first (X)" });
    }
    if m == 0 {
        return Err(Error::EmptySample { which: "second (Z)" });
    }
    model.validate()?;
    Ok(model.sample(n, m, rng))
}

/// Monte Carlo estimate of the product-kernel components for independent
/// Gaussians, via the covariance identities
/// `sigma1^2 = Cov(h(X,Z), h(X,Z'))` and `sigma2^2 = Cov(h(X,Z), h(X',Z))`.
/// Independent of the closed form; used to validate it.
pub fn product_components_monte_carlo(
    dist: &GaussianProductDistribution,
    samples: u64,
    rng: &mut ChaCha8Rng,
) -> VarianceComponents {
    let nx = Normal::new(dist.mu_x, dist.sigma_x).expect("validated");
    let nz = Normal::new(dist.mu_z, dist.sigma_z).expect("validated");
    let mean = dist.mu_x * dist.mu_z;

    let mut c1 = KahanSum::new();
    let mut c2 = KahanSum::new();
    let mut v = KahanSum::new();
    for _ in 0..samples {
        let x = nx.sample(rng);
        let x2 = nx.sample(rng);
        let z = nz.sample(rng);
        let z2 = nz.sample(rng);
        let h = x * z;
        c1.add((h - mean) * (x * z2 - mean));
        c2.add((h - mean) * (x2 * z - mean));
        v.add((h - mean) * (h - mean));
    }
    let s = samples as f64;
    let sigma1_sq = c1.value() / s;
    let sigma2_sq = c2.value() / s;
    let sigma_sq = v.value() / s;
    VarianceComponents {
        sigma0_sq: sigma_sq - sigma1_sq - sigma2_sq,
        sigma1_sq,
        sigma2_sq,
        sigma_sq,
    }
}
