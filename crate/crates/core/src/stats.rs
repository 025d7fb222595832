//! Small statistics helpers for the Monte Carlo estimators.

use serde::{Deserialize, Serialize};
use statrs::distribution::{ChiSquared, ContinuousCDF};

/// 97.5% standard normal quantile.
pub const Z95: f64 = 1.959_963_984_540_054;

/// Running sums for a sample mean; merging is exact given a fixed merge order.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct MeanAcc {
    pub n: u64,
    pub sum: f64,
    pub sum_sq: f64,
}

impl MeanAcc {
    pub fn push(&mut self, x: f64) {
        self.n += 1;
        self.sum += x;
        self.sum_sq += x * x;
    }

    pub fn merge(mut self, other: MeanAcc) -> MeanAcc {
        self.n += other.n;
        self.sum += other.sum;
        self.sum_sq += other.sum_sq;
        self
    }

    pub fn estimate(&self) -> Estimate {
        let n = self.n as f64;
        let mean = self.sum / n;
        let var = if self.n > 1 { ((self.sum_sq - n * mean * mean) / (n - 1.0)).max(0.0) } else { 0.0 };
        Estimate { mean, std_err: (var / n).sqrt(), n: self.n }
    }
}

/// A sample mean with its standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub mean: f64,
    pub std_err: f64,
    pub n: u64,
}

impl Estimate {
    pub fn ci95(&self) -> (f64, f64) {
        (self.mean - Z95 * self.std_err, self.mean + Z95 * self.std_err)
    }

    pub fn contains(&self, x: f64) -> bool {
        let (lo, hi) = self.ci95();
        lo <= x && x <= hi
    }

    /// Whether two independent estimates agree within their joint 95% interval.
    pub fn agrees_with(&self, other: &Estimate) -> bool {
        let joint = (self.std_err.powi(2) + other.std_err.powi(2)).sqrt();
        (self.mean - other.mean).abs() <= Z95 * joint
    }
}

/// Wilson score interval for a binomial proportion.
pub fn wilson_ci(successes: u64, trials: u64, z: f64) -> (f64, f64) {
    if trials == 0 {
        return (0.0, 1.0);
    }
    let n = trials as f64;
    let phat = successes as f64 / n;
    let z2 = z * z;
    let denom = 1.0 + z2 / n;
    let center = (phat + z2 / (2.0 * n)) / denom;
    let half = z * ((phat * (1.0 - phat) + z2 / (4.0 * n)) / n).sqrt() / denom;
    ((center - half).max(0.0), (center + half).min(1.0))
}

/// Total variation distance between two (sub)probability vectors.
pub fn total_variation(a: &[f64], b: &[f64]) -> f64 {
    0.5 * a.iter().zip(b).map(|(x, y)| (x - y).abs()).sum::<f64>()
}

/// Normalizes counts into frequencies.
pub fn frequencies(counts: &[u64]) -> Vec<f64> {
    let total: u64 = counts.iter().sum();
    counts.iter().map(|&c| c as f64 / total.max(1) as f64).collect()
}

/// Pearson goodness-of-fit test of `observed` counts against `expected`
/// probabilities. Bins with expected count below 5 are pooled into their
/// neighbour (scanning from the right). Returns `(statistic, dof, p-value)`.
pub fn chi_square_gof(observed: &[u64], expected_probs: &[f64]) -> (f64, usize, f64) {
    assert_eq!(observed.len(), expected_probs.len());
    let n: u64 = observed.iter().sum();
    let nf = n as f64;
    let mut bins: Vec<(f64, f64)> = Vec::new();
    let (mut acc_o, mut acc_e) = (0.0, 0.0);
    for (&o, &p) in observed.iter().zip(expected_probs).rev() {
        acc_o += o as f64;
        acc_e += p * nf;
        if acc_e >= 5.0 {
            bins.push((acc_o, acc_e));
            acc_o = 0.0;
            acc_e = 0.0;
        }
    }
    if acc_e > 0.0 || acc_o > 0.0 {
        match bins.last_mut() {
            Some(last) => {
                last.0 += acc_o;
                last.1 += acc_e;
            }
            None => bins.push((acc_o, acc_e)),
        }
    }
    let stat: f64 = bins.iter().map(|&(o, e)| if e > 0.0 { (o - e).powi(2) / e } else { 0.0 }).sum();
    let dof = bins.len().saturating_sub(1);
    let p = if dof == 0 { 1.0 } else { ChiSquared::new(dof as f64).map(|d| 1.0 - d.cdf(stat)).unwrap_or(f64::NAN) };
    (stat, dof, p)
}

/// Poisson(rate) probabilities for `0..len`, the last entry absorbing the tail.
pub fn poisson_pmf_tail(rate: f64, len: usize) -> Vec<f64> {
    let mut probs = Vec::with_capacity(len);
    let mut term = (-rate).exp();
    for k in 0..len {
        probs.push(term);
        term *= rate / (k + 1) as f64;
    }
    if len > 0 {
        let head: f64 = probs[..len - 1].iter().sum();
        probs[len - 1] = (1.0 - head).max(0.0);
    }
    probs
}

/// Lag-`k` sample autocorrelations for `k = 1..=max_lag`.
pub fn autocorrelations(xs: &[f64], max_lag: usize) -> Vec<f64> {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let c0: f64 = xs.iter().map(|x| (x - mean).powi(2)).sum();
    (1..=max_lag).map(|k| xs.windows(k + 1).map(|w| (w[0] - mean) * (w[k] - mean)).sum::<f64>() / c0).collect()
}

/// Ljung-Box portmanteau test for zero autocorrelation; returns `(Q, p-value)`.
pub fn ljung_box(xs: &[f64], max_lag: usize) -> (f64, f64) {
    let n = xs.len() as f64;
    let q = n
        * (n + 2.0)
        * autocorrelations(xs, max_lag).iter().enumerate().map(|(i, r)| r * r / (n - (i + 1) as f64)).sum::<f64>();
    let p = ChiSquared::new(max_lag as f64).map(|d| 1.0 - d.cdf(q)).unwrap_or(f64::NAN);
    (q, p)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mean_acc() {
        let mut a = MeanAcc::default();
        for x in [1.0, 2.0, 3.0, 4.0] {
            a.push(x);
        }
        let e = a.estimate();
        assert_eq!(e.mean, 2.5);
        assert!((e.std_err - (5.0f64 / 3.0 / 4.0).sqrt()).abs() < 1e-12);
    }

    #[test]
    fn wilson_brackets_phat() {
        let (lo, hi) = wilson_ci(50, 100, Z95);
        assert!(lo < 0.5 && 0.5 < hi);
        assert!((hi - lo - 0.19).abs() < 0.01);
        assert_eq!(wilson_ci(0, 10, Z95).0, 0.0);
    }

    #[test]
    fn chi_square_exact_fit() {
        let (stat, dof, p) = chi_square_gof(&[250, 250, 500], &[0.25, 0.25, 0.5]);
        assert_eq!(stat, 0.0);
        assert_eq!(dof, 2);
        assert!((p - 1.0).abs() < 1e-12);
        let (_, _, p_bad) = chi_square_gof(&[400, 100, 500], &[0.25, 0.25, 0.5]);
        assert!(p_bad < 1e-10);
    }

    #[test]
    fn poisson_tail_sums_to_one() {
        let p = poisson_pmf_tail(2.0, 8);
        assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-15);
        assert!((p[0] - (-2.0f64).exp()).abs() < 1e-15);
    }

    #[test]
    fn tv() {
        assert_eq!(total_variation(&[1.0, 0.0], &[0.0, 1.0]), 1.0);
        assert_eq!(total_variation(&[0.5, 0.5], &[0.5, 0.5]), 0.0);
    }
}
