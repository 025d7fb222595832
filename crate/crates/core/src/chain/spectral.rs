//! Dirichlet forms, spectral gaps, Dirichlet eigenvalues and the spectral profile.
//!
//! Every quantity here is defined through the Dirichlet form
//! `E(f, f) = f^T K f` with `K` the symmetric part of `diag(pi) (-Q)`, so for
//! non-reversible chains they are the quantities of the additive
//! symmetrization.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::ChainSpec;
use crate::error::{Error, Result};
use crate::linalg::{sym_eigenvalues, sym_min_eigenvalue};

/// `E(f, f) = 1/2 sum_{x != y} pi(x) Q(x, y) (f(x) - f(y))^2`.
pub fn dirichlet_form(c: &ChainSpec, f: &[f64]) -> f64 {
    0.5 * c.off_diagonal().map(|(x, y, q)| c.pi()[x] * q * (f[x] - f[y]).powi(2)).sum::<f64>()
}

/// `E(f, f) = <-Q f, f>_pi`, the quadratic-form expression of the same value.
pub fn dirichlet_form_quadratic(c: &ChainSpec, f: &[f64]) -> f64 {
    let qf = c.apply_rate(f);
    -(0..f.len()).map(|x| c.pi()[x] * qf[x] * f[x]).sum::<f64>()
}

/// `Pi^{-1/2} K Pi^{-1/2}` restricted to `states`.
fn normalized_dirichlet_block(k: &DMatrix<f64>, pi: &[f64], states: &[usize]) -> DMatrix<f64> {
    let m = states.len();
    DMatrix::from_fn(m, m, |i, j| {
        let (a, b) = (states[i], states[j]);
        k[(a, b)] / (pi[a] * pi[b]).sqrt()
    })
}

fn require_positive_pi(c: &ChainSpec) -> Result<()> {
    if c.pi().iter().any(|&p| p <= 0.0) {
        return Err(Error::NotIrreducible);
    }
    Ok(())
}

/// Smallest positive eigenvalue of `-Q` (of its additive symmetrization when the
/// chain is not reversible).
pub fn spectral_gap(c: &ChainSpec) -> Result<f64> {
    c.require_irreducible()?;
    require_positive_pi(c)?;
    if c.n_states() < 2 {
        return Err(Error::InvalidArgument("spectral gap needs at least two states".into()));
    }
    let all: Vec<usize> = (0..c.n_states()).collect();
    let m = normalized_dirichlet_block(&c.dirichlet_matrix(), c.pi(), &all);
    Ok(sym_eigenvalues(m)[1])
}

pub fn relaxation_time(c: &ChainSpec) -> Result<f64> {
    Ok(1.0 / spectral_gap(c)?)
}

fn check_subset(n: usize, a: &[usize]) -> Result<Vec<usize>> {
    if a.is_empty() {
        return Err(Error::EmptySet);
    }
    let mut s = a.to_vec();
    s.sort_unstable();
    s.dedup();
    if s.len() != a.len() {
        return Err(Error::BadSubset("repeated state".into()));
    }
    if let Some(&x) = s.iter().find(|&&x| x >= n) {
        return Err(Error::BadSubset(format!("state {x} out of range")));
    }
    if s.len() == n {
        return Err(Error::FullSet);
    }
    Ok(s)
}

/// `lambda(A)`: the smallest eigenvalue of `-Q` killed outside `A`, i.e. the
/// minimum of `E(h, h) / ||h||_2^2` over `h` supported in `A`.
pub fn dirichlet_eigenvalue(c: &ChainSpec, a: &[usize]) -> Result<f64> {
    let a = check_subset(c.n_states(), a)?;
    require_positive_pi(c)?;
    let m = normalized_dirichlet_block(&c.dirichlet_matrix(), c.pi(), &a);
    Ok(sym_min_eigenvalue(m))
}

/// Minimum of `E(h, h) / Var(h)` over `h` supported in the proper subset `A`.
pub fn subset_variance_ratio(c: &ChainSpec, a: &[usize]) -> Result<f64> {
    let a = check_subset(c.n_states(), a)?;
    require_positive_pi(c)?;
    let m = normalized_dirichlet_block(&c.dirichlet_matrix(), c.pi(), &a);
    Ok(subset_pair(m, &a, c.pi()).1)
}

/// `(lambda(A), Lambda_A)` from the normalized block `M`. With `s = sqrt(pi_A)`
/// and `m = pi(A)`, `Var(h) = g^T (I - s s^T) g` for `h = g / sqrt(pi)`, and
/// `(I - s s^T)^{-1/2} = I + alpha s s^T / m` with `alpha = (1 - m)^{-1/2} - 1`.
fn subset_pair(m: DMatrix<f64>, a: &[usize], pi: &[f64]) -> (f64, f64) {
    let mass: f64 = a.iter().map(|&x| pi[x]).sum();
    let s = DVector::from_iterator(a.len(), a.iter().map(|&x| (pi[x] / mass).sqrt()));
    let alpha = (1.0 - mass).max(f64::MIN_POSITIVE).powf(-0.5) - 1.0;
    let t = DMatrix::identity(a.len(), a.len()) + &s * s.transpose() * alpha;
    let tmt = &t * &m * &t;
    let lam0 = sym_min_eigenvalue(m);
    let lam = sym_min_eigenvalue((&tmt + tmt.transpose()) * 0.5);
    (lam0, lam)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ProfileMode {
    /// Exact enumeration when the state count allows it, sampling otherwise.
    Auto,
    Exact,
    Sampled,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProfileOptions {
    pub mode: ProfileMode,
    pub exact_subset_limit: usize,
    /// Metropolis proposals in sampled mode.
    pub sample_steps: usize,
    pub seed: u64,
}

impl Default for ProfileOptions {
    fn default() -> Self {
        Self { mode: ProfileMode::Auto, exact_subset_limit: 20, sample_steps: 20_000, seed: 0 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProfilePoint {
    pub eps: f64,
    pub lambda: f64,
    pub lambda0: f64,
}

/// Spectral profile `Lambda` and its `L2`-normalized variant `Lambda_0`.
///
/// Internally the profile is kept as a step function: subset masses sorted
/// increasingly, each carrying the running minima of `Lambda_A` and
/// `lambda(A)` over all subsets up to that mass. `Lambda(eps)` for `eps >= 1`
/// is the spectral gap; below the smallest state mass both are `+inf`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectralProfileTable {
    pub points: Vec<ProfilePoint>,
    pub exact: bool,
    pub pi_min: f64,
    pub gap: f64,
    steps: Vec<(f64, f64, f64)>,
}

/// Relative slack when comparing a subset mass against `eps`.
const MASS_SLACK: f64 = 1e-12;

impl SpectralProfileTable {
    fn step_index(&self, eps: f64) -> Option<usize> {
        let k = self.steps.partition_point(|&(mass, _, _)| mass <= eps * (1.0 + MASS_SLACK));
        k.checked_sub(1)
    }

    /// `Lambda(eps)`.
    pub fn lambda(&self, eps: f64) -> f64 {
        let sets = self.step_index(eps).map_or(f64::INFINITY, |k| self.steps[k].1);
        if eps >= 1.0 {
            sets.min(self.gap)
        } else {
            sets
        }
    }

    /// `Lambda_0(eps)`, minimum of `lambda(A)` over proper `A` with `pi(A) <= eps`.
    pub fn lambda0(&self, eps: f64) -> f64 {
        self.step_index(eps).map_or(f64::INFINITY, |k| self.steps[k].2)
    }

    /// Masses at which `Lambda` may change, increasing, with `1` appended.
    pub fn breakpoints(&self) -> Vec<f64> {
        let mut b: Vec<f64> = self.steps.iter().map(|s| s.0).collect();
        b.push(1.0);
        b
    }

    /// `(pi(A), running min Lambda, running min lambda)` for each step.
    pub fn steps(&self) -> &[(f64, f64, f64)] {
        &self.steps
    }

    fn from_candidates(mut raw: Vec<(f64, f64, f64)>, exact: bool, pi_min: f64, gap: f64, grid: &[f64]) -> Self {
        raw.sort_by(|a, b| a.0.total_cmp(&b.0));
        let mut steps: Vec<(f64, f64, f64)> = Vec::new();
        let (mut best_l, mut best_l0) = (f64::INFINITY, f64::INFINITY);
        for (mass, l, l0) in raw {
            best_l = best_l.min(l);
            best_l0 = best_l0.min(l0);
            match steps.last_mut() {
                Some(last) if last.0 == mass => {
                    last.1 = best_l;
                    last.2 = best_l0;
                }
                _ => steps.push((mass, best_l, best_l0)),
            }
        }
        let mut table = SpectralProfileTable { points: Vec::new(), exact, pi_min, gap, steps };
        table.points = grid
            .iter()
            .map(|&eps| ProfilePoint { eps, lambda: table.lambda(eps), lambda0: table.lambda0(eps) })
            .collect();
        table
    }
}

/// Computes the spectral profile on `eps_grid`.
///
/// Exact mode enumerates all `2^N - 2` proper subsets. Sampled mode evaluates
/// singletons, complements of singletons, breadth-first balls around every
/// state and a Metropolis walk over subsets that favours small `lambda(A)`; it
/// yields upper bounds on both profiles and the table is flagged non-exact.
pub fn spectral_profile(c: &ChainSpec, eps_grid: &[f64], opts: &ProfileOptions) -> Result<SpectralProfileTable> {
    let n = c.n_states();
    let exact = match opts.mode {
        ProfileMode::Exact if n > opts.exact_subset_limit => {
            return Err(Error::TooLargeForExact { size: n, limit: opts.exact_subset_limit })
        }
        ProfileMode::Exact => true,
        ProfileMode::Auto => n <= opts.exact_subset_limit,
        ProfileMode::Sampled => false,
    };
    let gap = spectral_gap(c)?;
    let k = c.dirichlet_matrix();
    let pi = c.pi();
    let eval = |a: &[usize]| -> (f64, f64, f64) {
        let m = normalized_dirichlet_block(&k, pi, a);
        let (l0, l) = subset_pair(m, a, pi);
        (a.iter().map(|&x| pi[x]).sum(), l, l0)
    };
    let raw: Vec<(f64, f64, f64)> = if exact {
        let full = (1u64 << n) - 1;
        (1..full)
            .into_par_iter()
            .map(|mask| {
                let a: Vec<usize> = (0..n).filter(|&i| mask >> i & 1 == 1).collect();
                eval(&a)
            })
            .collect()
    } else {
        sampled_subsets(c, opts).iter().map(|a| eval(a)).collect()
    };
    Ok(SpectralProfileTable::from_candidates(raw, exact, c.pi_min(), gap, eps_grid))
}

fn sampled_subsets(c: &ChainSpec, opts: &ProfileOptions) -> Vec<Vec<usize>> {
    let n = c.n_states();
    let mut out: Vec<Vec<usize>> = Vec::new();
    for x in 0..n {
        out.push(vec![x]);
        out.push((0..n).filter(|&y| y != x).collect());
    }
    let neighbours: Vec<Vec<usize>> = (0..n)
        .map(|x| {
            let mut v: Vec<usize> = c.row(x).iter().filter(|&&(y, r)| y != x && r > 0.0).map(|&(y, _)| y).collect();
            v.extend(c.off_diagonal().filter(|&(_, y, r)| y == x && r > 0.0).map(|(u, _, _)| u));
            v.sort_unstable();
            v.dedup();
            v
        })
        .collect();
    for root in 0..n {
        let mut seen = vec![false; n];
        let mut order = vec![root];
        seen[root] = true;
        let mut head = 0;
        while head < order.len() && order.len() < n - 1 {
            let u = order[head];
            head += 1;
            for &w in &neighbours[u] {
                if !seen[w] && order.len() < n - 1 {
                    seen[w] = true;
                    order.push(w);
                    let mut ball = order.clone();
                    ball.sort_unstable();
                    out.push(ball);
                }
            }
        }
    }
    // Metropolis walk on subsets targeting exp(-beta * lambda(A)).
    let k = c.dirichlet_matrix();
    let pi = c.pi();
    let lam0 = |set: &[bool]| -> f64 {
        let a: Vec<usize> = (0..n).filter(|&i| set[i]).collect();
        sym_min_eigenvalue(normalized_dirichlet_block(&k, pi, &a))
    };
    let mut rng = crate::rng::stream(opts.seed, 0);
    let mut set = vec![false; n];
    set[0] = true;
    let mut current = lam0(&set);
    let mut size = 1;
    let beta = 4.0 / c.max_exit_rate().max(1e-12);
    for _ in 0..opts.sample_steps {
        let i = rng.random_range(0..n);
        let grows = !set[i];
        if (grows && size + 1 == n) || (!grows && size == 1) {
            continue;
        }
        set[i] = grows;
        let proposal = lam0(&set);
        if proposal <= current || rng.random::<f64>() < (-beta * (proposal - current)).exp() {
            current = proposal;
            size = if grows { size + 1 } else { size - 1 };
            out.push((0..n).filter(|&j| set[j]).collect());
        } else {
            set[i] = !grows;
        }
    }
    out.sort();
    out.dedup();
    out
}

/// `int_{4 pi_*}^{4/eps} 2 d delta / (delta Lambda(delta))`, evaluated exactly
/// for the step function held by `table`. Zero when `4/eps <= 4 pi_*`.
pub fn spectral_profile_time(table: &SpectralProfileTable, eps: f64) -> Result<f64> {
    if !(eps > 0.0) {
        return Err(Error::InvalidArgument(format!("eps must be positive, got {eps}")));
    }
    let (lo, hi) = (4.0 * table.pi_min, 4.0 / eps);
    if hi <= lo {
        return Ok(0.0);
    }
    let mut cuts: Vec<f64> = table.breakpoints().into_iter().filter(|&b| b > lo && b < hi).collect();
    cuts.insert(0, lo);
    cuts.push(hi);
    let mut total = 0.0;
    for w in cuts.windows(2) {
        let (a, b) = (w[0], w[1]);
        if b <= a {
            continue;
        }
        let lam = table.lambda(a);
        if !lam.is_finite() || lam <= 0.0 {
            return Err(Error::ProfileUnavailable(format!("Lambda({a}) = {lam}")));
        }
        total += 2.0 * (b / a).ln() / lam;
    }
    Ok(total)
}

/// Alias for the Poincare constant `Lambda(1)`, equal to the spectral gap.
pub fn poincare_constant(c: &ChainSpec) -> Result<f64> {
    spectral_gap(c)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chain::{srw_chain, ChainKind};
    use crate::graph::Graph;

    fn k2() -> ChainSpec {
        srw_chain(&Graph::hypercube(1).unwrap(), true)
    }

    #[test]
    fn dirichlet_forms_agree() {
        let c = srw_chain(&Graph::cycle(4).unwrap(), true);
        let f = [0.3, -1.2, 2.0, 0.7];
        assert!((dirichlet_form(&c, &f) - dirichlet_form_quadratic(&c, &f)).abs() < 1e-12);
        assert_eq!(dirichlet_form(&c, &[1.0; 4]), 0.0);
        let d = srw_chain(&Graph::hypercube(1).unwrap(), false);
        assert!((dirichlet_form(&d, &[0.0, 1.0]) - 0.5).abs() < 1e-15);
    }

    #[test]
    fn gaps() {
        let d = srw_chain(&Graph::hypercube(1).unwrap(), false);
        assert!((spectral_gap(&d).unwrap() - 2.0).abs() < 1e-12);
        let c4 = srw_chain(&Graph::cycle(4).unwrap(), true);
        assert!((spectral_gap(&c4).unwrap() - 1.0).abs() < 1e-12);
        for n in 3..7 {
            let kn = srw_chain(&Graph::complete(n).unwrap(), true);
            let want = n as f64 / (n as f64 - 1.0);
            assert!((spectral_gap(&kn).unwrap() - want).abs() < 1e-12);
        }
    }

    #[test]
    fn dirichlet_eigenvalues() {
        let c4 = srw_chain(&Graph::cycle(4).unwrap(), true);
        assert_eq!(dirichlet_eigenvalue(&c4, &[2]).unwrap(), 1.0);
        // killed generator on {0, 1}: [[-1, 1/2], [1/2, -1]]
        assert!((dirichlet_eigenvalue(&c4, &[0, 1]).unwrap() - 0.5).abs() < 1e-12);
        assert!((dirichlet_eigenvalue(&k2(), &[1]).unwrap() - 1.0).abs() < 1e-12);
        assert_eq!(dirichlet_eigenvalue(&c4, &[]), Err(Error::EmptySet));
        assert_eq!(dirichlet_eigenvalue(&c4, &[0, 1, 2, 3]), Err(Error::FullSet));
    }

    #[test]
    fn k2_profile() {
        let t = spectral_profile(&k2(), &[0.25, 0.5, 1.0], &ProfileOptions::default()).unwrap();
        assert!(t.exact);
        assert_eq!(t.points[0].lambda, f64::INFINITY);
        assert!((t.points[1].lambda0 - 1.0).abs() < 1e-12);
        // Lambda_{0} = 1 / (1 - 1/2)
        assert!((t.points[1].lambda - 2.0).abs() < 1e-12);
        assert!((t.points[2].lambda - 2.0).abs() < 1e-12);
        assert!((spectral_profile_time(&t, 1.0).unwrap() - 2f64.ln()).abs() < 1e-12);
        assert_eq!(spectral_profile_time(&t, 2.0).unwrap(), 0.0);
    }

    #[test]
    fn sampled_profile_bounds_exact() {
        let c = srw_chain(&Graph::cycle(6).unwrap(), true);
        let grid = [0.2, 0.4, 0.6, 1.0];
        let exact = spectral_profile(&c, &grid, &ProfileOptions::default()).unwrap();
        let opts = ProfileOptions { mode: ProfileMode::Sampled, sample_steps: 2000, ..Default::default() };
        let sampled = spectral_profile(&c, &grid, &opts).unwrap();
        assert!(!sampled.exact);
        for (e, s) in exact.points.iter().zip(&sampled.points) {
            assert!(s.lambda0 >= e.lambda0 - 1e-12);
            assert!(s.lambda >= e.lambda - 1e-12);
        }
        let too_big = ProfileOptions { mode: ProfileMode::Exact, exact_subset_limit: 4, ..Default::default() };
        assert!(matches!(spectral_profile(&c, &grid, &too_big), Err(Error::TooLargeForExact { .. })));
    }

    #[test]
    fn nonreversible_gap_uses_symmetrization() {
        let rot =
            ChainSpec::with_computed_pi(ChainKind::Transition, 3, &[(0, 1, 1.0), (1, 2, 1.0), (2, 0, 1.0)]).unwrap();
        // S = (P + P^T)/2 is SRW on the triangle: gap of I - S is 3/2.
        assert!((spectral_gap(&rot).unwrap() - 1.5).abs() < 1e-12);
    }
}
