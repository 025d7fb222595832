//! Expected hitting times, commute times and the Dirichlet principle.
//!
//! Hitting times are measured in the chain's own time unit: steps for
//! transition matrices, continuous time for generators. In both cases
//! `h = E[T_A]` solves `-Q h = 1` off `A` with `h = 0` on `A`.

use nalgebra::{DMatrix, DVector};

use super::{ChainKind, ChainSpec};
use crate::error::{Error, Result};
use crate::linalg::solve;

/// `E_x[T_A]` for every state `x` (zero on `A`).
pub fn hitting_times_to_set(c: &ChainSpec, target: &[usize]) -> Result<Vec<f64>> {
    let n = c.n_states();
    if target.is_empty() {
        return Err(Error::EmptySet);
    }
    let mut in_target = vec![false; n];
    for &a in target {
        if a >= n {
            return Err(Error::BadSubset(format!("state {a} out of range")));
        }
        in_target[a] = true;
    }
    let free: Vec<usize> = (0..n).filter(|&x| !in_target[x]).collect();
    let mut out = vec![0.0; n];
    if free.is_empty() {
        return Ok(out);
    }
    let mut index = vec![usize::MAX; n];
    for (i, &x) in free.iter().enumerate() {
        index[x] = i;
    }
    let m = free.len();
    let mut a = DMatrix::zeros(m, m);
    for (i, &x) in free.iter().enumerate() {
        for &(y, _) in c.row(x) {
            if !in_target[y] {
                a[(i, index[y])] = -c.rate(x, y);
            }
        }
    }
    let h = solve(a, &DVector::from_element(m, 1.0))?;
    if h.iter().any(|&v| v < 0.0) {
        return Err(Error::SingularSystem);
    }
    for (i, &x) in free.iter().enumerate() {
        out[x] = h[i];
    }
    Ok(out)
}

/// The matrix of `E_x[T_y]` (rows `x`, columns `y`).
pub fn hitting_times(c: &ChainSpec) -> Result<DMatrix<f64>> {
    c.require_irreducible()?;
    let n = c.n_states();
    let mut h = DMatrix::zeros(n, n);
    for y in 0..n {
        let col = hitting_times_to_set(c, &[y])?;
        for x in 0..n {
            h[(x, y)] = col[x];
        }
    }
    Ok(h)
}

/// `E_a[T_b] + E_b[T_a]`.
pub fn commute_time(c: &ChainSpec, a: usize, b: usize) -> Result<f64> {
    if a == b {
        return Err(Error::SameState);
    }
    let to_b = hitting_times_to_set(c, &[b])?;
    let to_a = hitting_times_to_set(c, &[a])?;
    Ok(to_b[a] + to_a[b])
}

/// `inf { E(f, f) : f(a) = 1, f(b) = 0 }` for a reversible chain, found by
/// solving for the harmonic interpolant. Its reciprocal is the commute time.
pub fn effective_conductance(c: &ChainSpec, a: usize, b: usize) -> Result<f64> {
    if a == b {
        return Err(Error::SameState);
    }
    if !c.is_reversible() {
        return Err(Error::NotReversible);
    }
    let n = c.n_states();
    if a >= n || b >= n {
        return Err(Error::BadSubset("state out of range".into()));
    }
    let k = c.dirichlet_matrix();
    let interior: Vec<usize> = (0..n).filter(|&x| x != a && x != b).collect();
    let mut f = vec![0.0; n];
    f[a] = 1.0;
    if !interior.is_empty() {
        let m = interior.len();
        let kii = DMatrix::from_fn(m, m, |i, j| k[(interior[i], interior[j])]);
        let rhs = DVector::from_fn(m, |i, _| -k[(interior[i], a)]);
        let fi = solve(kii, &rhs)?;
        for (i, &x) in interior.iter().enumerate() {
            f[x] = fi[i];
        }
    }
    Ok(super::dirichlet_form(c, &f))
}

/// The additive symmetrization `(Q + Q*) / 2`, reversible with the same `pi`.
pub fn additive_symmetrization(c: &ChainSpec) -> Result<ChainSpec> {
    let rev = c.time_reversal()?;
    let mut triplets = Vec::new();
    for x in 0..c.n_states() {
        for &(y, v) in c.row(x) {
            triplets.push((x, y, 0.5 * v));
        }
        for &(y, v) in rev.row(x) {
            triplets.push((x, y, 0.5 * v));
        }
    }
    let kind = if c.kind() == ChainKind::Generator { ChainKind::Generator } else { ChainKind::Transition };
    ChainSpec::new(kind, c.n_states(), &triplets, c.pi().to_vec())
}
