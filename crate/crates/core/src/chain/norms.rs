//! Norms of signed measures relative to `pi`, and two small-set inequalities.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeasureNorms {
    pub tv: f64,
    /// `||nu - pi||_{2,pi} = ||nu/pi - 1||_2`.
    pub l2: f64,
    pub linf: f64,
}

/// TV, `L2(pi)` and `Linf(pi)` norms of `nu - pi`.
pub fn signed_measure_norms(nu: &[f64], pi: &[f64]) -> MeasureNorms {
    let mut m = MeasureNorms { tv: 0.0, l2: 0.0, linf: 0.0 };
    for (&a, &b) in nu.iter().zip(pi) {
        let r = a / b - 1.0;
        m.tv += 0.5 * (a - b).abs();
        m.l2 += b * r * r;
        m.linf = m.linf.max(r.abs());
    }
    m.l2 = m.l2.sqrt();
    m
}

fn subset_mask(n: usize, a: &[usize]) -> Result<Vec<bool>> {
    let mut mask = vec![false; n];
    for &x in a {
        if x >= n || mask[x] {
            return Err(Error::BadSubset(format!("invalid or repeated state {x}")));
        }
        mask[x] = true;
    }
    Ok(mask)
}

/// `min { ||nu - pi||_{2,pi}^2 : nu(A) >= pi(A) + delta pi(A^c) } = delta^2 pi(A^c) / pi(A)`.
pub fn lagrange_min_distance(pi: &[f64], a: &[usize], delta: f64) -> Result<f64> {
    let mask = subset_mask(pi.len(), a)?;
    if a.is_empty() || a.len() == pi.len() {
        return Err(Error::BadSubset("A must be a nonempty proper subset".into()));
    }
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::InvalidArgument(format!("delta must lie in (0, 1), got {delta}")));
    }
    let pa: f64 = pi.iter().zip(&mask).filter(|(_, &m)| m).map(|(p, _)| p).sum();
    Ok(delta * delta * (1.0 - pa) / pa)
}

/// The minimizer `delta pi_A + (1 - delta) pi`.
pub fn lagrange_minimizer(pi: &[f64], a: &[usize], delta: f64) -> Result<Vec<f64>> {
    let mask = subset_mask(pi.len(), a)?;
    let pa: f64 = pi.iter().zip(&mask).filter(|(_, &m)| m).map(|(p, _)| p).sum();
    if pa <= 0.0 {
        return Err(Error::BadSubset("A has zero mass".into()));
    }
    Ok(pi.iter().zip(&mask).map(|(&p, &m)| (1.0 - delta) * p + if m { delta * p / pa } else { 0.0 }).collect())
}

/// Checks `||nu_A - pi||^2_{2,pi} <= (||nu - pi||^2_{2,pi} + 1) / nu(A)^2 - 1`,
/// `nu_A` being `nu` conditioned on `A`. Returns the two sides along with the
/// verdict (compared with a relative slack of `1e-12`).
pub fn conditioning_l2_bound_check(pi: &[f64], nu: &[f64], a: &[usize]) -> Result<(bool, f64, f64)> {
    let mask = subset_mask(pi.len(), a)?;
    let na: f64 = nu.iter().zip(&mask).filter(|(_, &m)| m).map(|(p, _)| p).sum();
    if na <= 0.0 {
        return Err(Error::ZeroMass);
    }
    let cond: Vec<f64> = nu.iter().zip(&mask).map(|(&v, &m)| if m { v / na } else { 0.0 }).collect();
    let lhs = signed_measure_norms(&cond, pi).l2.powi(2);
    let rhs = (signed_measure_norms(nu, pi).l2.powi(2) + 1.0) / (na * na) - 1.0;
    Ok((lhs <= rhs + 1e-12 * rhs.abs().max(1.0), lhs, rhs))
}
