//! Numeric helpers shared across the crate: compensated summation, sample
//! statistics and the fixed CSV float format.

/// Kahan–Babuška–Neumaier compensated accumulator.
///
/// Pair sums routinely exceed 10^6 terms (a complete statistic on the larger
/// experiment datasets evaluates 10^7 pairs); plain accumulation would eat
/// into the 5% variance tolerances.
#[derive(Clone, Copy, Debug, Default)]
pub struct KahanSum {
    sum: f64,
    compensation: f64,
}

impl KahanSum {
    pub fn new() -> Self {
        Self::default()
    }

    #[inline]
    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.compensation += (self.sum - t) + x;
        } else {
            self.compensation += (x - t) + self.sum;
        }
        self.sum = t;
    }

    #[inline]
    pub fn value(&self) -> f64 {
        self.sum + self.compensation
    }
}

pub fn kahan_sum(values: impl IntoIterator<Item = f64>) -> f64 {
    let mut acc = KahanSum::new();
    for v in values {
        acc.add(v);
    }
    acc.value()
}

pub fn mean(values: &[f64]) -> f64 {
    kahan_sum(values.iter().copied()) / values.len() as f64
}

/// Unbiased sample variance (divisor `len - 1`), two-pass and compensated.
pub fn sample_variance(values: &[f64]) -> f64 {
    assert!(values.len() >= 2, "sample variance needs at least two values");
    let mu = mean(values);
    let ss = kahan_sum(values.iter().map(|v| {
        let d = v - mu;
        d * d
    }));
    ss / (values.len() - 1) as f64
}

/// Quantile with linear interpolation between order statistics on a sorted
/// copy (the common "type 7" rule).
pub fn quantile(values: &[f64], p: f64) -> f64 {
    assert!(!values.is_empty());
    assert!((0.0..=1.0).contains(&p));
    let mut sorted = values.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).expect("non-finite quantile input"));
    let h = (sorted.len() - 1) as f64 * p;
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    if lo == hi {
        sorted[lo]
    } else {
        let w = h - lo as f64;
        sorted[lo] * (1.0 - w) + sorted[hi] * w
    }
}

pub fn median(values: &[f64]) -> f64 {
    quantile(values, 0.5)
}

/// Interquartile range.
pub fn iqr(values: &[f64]) -> f64 {
    quantile(values, 0.75) - quantile(values, 0.25)
}

/// Lag-1 sample autocorrelation.
pub fn lag1_autocorrelation(values: &[f64]) -> f64 {
    assert!(values.len() >= 3);
    let mu = mean(values);
    let num = kahan_sum(
        values
            .windows(2)
            .map(|w| (w[0] - mu) * (w[1] - mu)),
    );
    let den = kahan_sum(values.iter().map(|v| (v - mu) * (v - mu)));
    num / den
}

/// Delete-one jackknife standard error of the unbiased sample variance.
///
/// Uses the O(R) identity for the delete-one sum of squares:
/// `SS_(i) = SS - d_i^2 * R / (R - 1)` with `d_i = x_i - mean`.
pub fn jackknife_se_of_variance(values: &[f64]) -> f64 {
    let r = values.len();
    assert!(r >= 3, "jackknife needs at least three replicates");
    let mu = mean(values);
    let ss = kahan_sum(values.iter().map(|v| (v - mu) * (v - mu)));
    let rf = r as f64;
    let leave_one: Vec<f64> = values
        .iter()
        .map(|v| {
            let d = v - mu;
            (ss - d * d * rf / (rf - 1.0)) / (rf - 2.0)
        })
        .collect();
    let jk_mean = mean(&leave_one);
    let dev = kahan_sum(leave_one.iter().map(|v| (v - jk_mean) * (v - jk_mean)));
    ((rf - 1.0) / rf * dev).sqrt()
}

/// Relative discrepancy |a-b| / max(|a|, |b|); zero when both are zero.
pub fn rel_err(a: f64, b: f64) -> f64 {
    let scale = a.abs().max(b.abs());
    if scale == 0.0 {
        0.0
    } else {
        (a - b).abs() / scale
    }
}

/// Serialize a float with 17 significant digits so that parsing the CSV back
/// reproduces the exact bit pattern.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}
