//! Dense linear algebra shared by the chain analytics.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Truncation budget for the uniformization series of `exp(tQ)`.
pub const EXPM_TOL: f64 = 1e-12;

/// Eigenvalues of a symmetric matrix in ascending order.
pub fn sym_eigenvalues(m: DMatrix<f64>) -> Vec<f64> {
    let mut ev: Vec<f64> = m.symmetric_eigenvalues().iter().copied().collect();
    ev.sort_by(f64::total_cmp);
    ev
}

/// Smallest eigenvalue of a symmetric matrix.
pub fn sym_min_eigenvalue(m: DMatrix<f64>) -> f64 {
    if m.nrows() == 1 {
        return m[(0, 0)];
    }
    m.symmetric_eigenvalues().iter().copied().fold(f64::INFINITY, f64::min)
}

/// Solves `a x = b` by LU, rejecting singular or non-finite solutions.
pub fn solve(a: DMatrix<f64>, b: &DVector<f64>) -> Result<DVector<f64>> {
    let x = a.lu().solve(b).ok_or(Error::SingularSystem)?;
    if x.iter().all(|v| v.is_finite()) {
        Ok(x)
    } else {
        Err(Error::SingularSystem)
    }
}

/// `exp(tQ)` for a rate matrix `Q` (off-diagonal >= 0, rows summing to 0) by
/// uniformization.
///
/// With `q >= max_x -Q(x,x)` and `K = I + Q/q`, `exp(tQ) = sum_k Pois(qt; k) K^k`.
/// The horizon is cut into `m` pieces of Poisson mean at most 4; each piece's
/// series is truncated once its remaining Poisson mass is below `EXPM_TOL / m`,
/// and the pieces are combined by binary powering. The pieces are substochastic,
/// so row-sum errors add and the total truncation error is at most `EXPM_TOL`.
pub fn expm_generator(q: &DMatrix<f64>, t: f64) -> DMatrix<f64> {
    let n = q.nrows();
    if t <= 0.0 {
        return DMatrix::identity(n, n);
    }
    let rate = (0..n).map(|i| -q[(i, i)]).fold(0.0f64, f64::max);
    if rate <= 0.0 {
        return DMatrix::identity(n, n);
    }
    let total = rate * t;
    let pieces = (total / 4.0).ceil().max(1.0);
    let lam = total / pieces;
    let tol = EXPM_TOL / pieces;
    let k_mat = DMatrix::identity(n, n) + q / rate;

    let mut weight = (-lam).exp();
    let mut mass = weight;
    let mut power = DMatrix::identity(n, n);
    let mut piece = &power * weight;
    let mut k = 0u32;
    while 1.0 - mass > tol && k < 10_000 {
        k += 1;
        power = &power * &k_mat;
        weight *= lam / k as f64;
        mass += weight;
        piece += &power * weight;
    }
    matrix_power(&piece, pieces as u64)
}

/// `m^e` by binary powering.
pub fn matrix_power(m: &DMatrix<f64>, mut e: u64) -> DMatrix<f64> {
    let n = m.nrows();
    let mut result = DMatrix::identity(n, n);
    let mut base = m.clone();
    while e > 0 {
        if e & 1 == 1 {
            result = &result * &base;
        }
        e >>= 1;
        if e > 0 {
            base = &base * &base;
        }
    }
    result
}
