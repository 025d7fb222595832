//! Log-Sobolev constant `c_LS = inf E(h, h) / Ent(h^2)`.

use nalgebra::DVector;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{spectral_gap, spectral_profile, ChainSpec, ProfileOptions, SpectralProfileTable, EXACT_STATE_LIMIT};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogSobolevOptions {
    pub restarts: usize,
    pub iterations: usize,
    pub seed: u64,
    pub profile: ProfileOptions,
}

impl Default for LogSobolevOptions {
    fn default() -> Self {
        Self { restarts: 50, iterations: 400, seed: 0, profile: ProfileOptions::default() }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LogSobolevEstimate {
    pub lower: f64,
    pub upper: f64,
    pub estimate: f64,
    /// Whether `lower` comes from an exactly enumerated profile.
    pub certified: bool,
}

impl LogSobolevEstimate {
    pub fn contains(&self, x: f64) -> bool {
        self.lower <= x && x <= self.upper
    }
}

/// `Ent_pi(h^2) = E[h^2 log h^2] - E[h^2] log E[h^2]`, with `0 log 0 = 0`.
///
/// Summed as `m E[phi(h^2 / m)]` with `phi(r) = r log r - r + 1 >= 0`, which
/// avoids the cancellation of the textbook form when `h` is nearly constant.
fn entropy_sq(pi: &[f64], h: &[f64]) -> f64 {
    let m: f64 = pi.iter().zip(h).map(|(p, v)| p * v * v).sum();
    if m <= 0.0 {
        return 0.0;
    }
    let phi = |r: f64| {
        if r == 0.0 {
            1.0
        } else {
            let u = r - 1.0;
            r * u.ln_1p() - u
        }
    };
    m * pi.iter().zip(h).map(|(p, v)| p * phi(v * v / m)).sum::<f64>()
}

/// `E(h, h) / Ent(h^2)`; `+inf` when `h` is so close to constant that the
/// entropy is dominated by rounding (the limit there is half the gap).
pub fn entropy_ratio(c: &ChainSpec, h: &[f64]) -> f64 {
    let ent = entropy_sq(c.pi(), h);
    let m: f64 = c.pi().iter().zip(h).map(|(p, v)| p * v * v).sum();
    if !(ent > 1e-12 * m) {
        return f64::INFINITY;
    }
    super::dirichlet_form(c, h) / ent
}

/// Estimates `c_LS` and brackets it.
///
/// The estimate is the best of a seeded multi-start projected gradient descent
/// on `h >= 0`, the singleton indicators, and half the spectral gap (the limit
/// of the ratio at constants). The bracket intersects
/// `[F / 17, F]`, `F = sup_{pi_* <= eps <= 1/2} Lambda_0(eps) / log(1/eps)`,
/// with `c_LS <= min_x -Q(x,x) / log(1/pi(x))`. `F / 17` is only a certified
/// lower bound when the profile was enumerated exactly; otherwise the lower
/// end is reported as zero.
pub fn log_sobolev_constant(c: &ChainSpec, opts: &LogSobolevOptions) -> Result<LogSobolevEstimate> {
    if !c.is_reversible() {
        return Err(Error::NotReversible);
    }
    let n = c.n_states();
    if n > EXACT_STATE_LIMIT {
        return Err(Error::TooLarge { what: "chain", size: n, limit: EXACT_STATE_LIMIT });
    }
    let gap = spectral_gap(c)?;
    let pi = c.pi();
    let trivial =
        (0..n).filter(|&x| pi[x] < 1.0).map(|x| c.exit_rate(x) / (1.0 / pi[x]).ln()).fold(f64::INFINITY, f64::min);

    let table = spectral_profile(c, &[], &opts.profile)?;
    let f = profile_log_sup(&table);
    let upper = f.min(trivial);
    let lower = if table.exact { f / 17.0 } else { 0.0 };

    let k = c.dirichlet_matrix();
    let descend = |restart: usize| -> f64 {
        let mut rng = crate::rng::stream(opts.seed, restart as u64);
        let h0: Vec<f64> = (0..n).map(|_| rng.random::<f64>()).collect();
        minimize_from(c, &k, h0, opts.iterations)
    };
    let best =
        (0..opts.restarts).into_par_iter().map(descend).collect::<Vec<f64>>().into_iter().fold(f64::INFINITY, f64::min);
    let estimate = best.min(trivial).min(gap / 2.0);
    Ok(LogSobolevEstimate { lower, upper, estimate, certified: table.exact })
}

/// `sup Lambda_0(eps) / log(1/eps)` over `eps` in `[pi_*, 1/2]` for the step
/// function of `table`: on each step the supremum is approached at the right
/// end.
fn profile_log_sup(table: &SpectralProfileTable) -> f64 {
    let steps = table.steps();
    let mut best: f64 = 0.0;
    for (i, &(mass, _, l0)) in steps.iter().enumerate() {
        if mass > 0.5 * (1.0 + 1e-12) {
            break;
        }
        let right = steps.get(i + 1).map_or(0.5, |s| s.0.min(0.5));
        best = best.max(l0 / (1.0 / right).ln());
    }
    best
}

fn minimize_from(c: &ChainSpec, k: &nalgebra::DMatrix<f64>, h0: Vec<f64>, iterations: usize) -> f64 {
    let pi = c.pi();
    let n = h0.len();
    let normalize = |h: &mut Vec<f64>| {
        let norm = pi.iter().zip(h.iter()).map(|(p, v)| p * v * v).sum::<f64>().sqrt();
        if norm > 0.0 {
            h.iter_mut().for_each(|v| *v /= norm);
        }
    };
    let mut h = h0;
    normalize(&mut h);
    let mut value = entropy_ratio(c, &h);
    let mut step = 1.0;
    for _ in 0..iterations {
        let ent = entropy_sq(pi, &h);
        if !(ent > 0.0) {
            break;
        }
        let hv = DVector::from_column_slice(&h);
        let kh = k * &hv;
        let m: f64 = pi.iter().zip(&h).map(|(p, v)| p * v * v).sum();
        let grad: Vec<f64> = (0..n)
            .map(|x| {
                let d_ent = if h[x] > 0.0 { 2.0 * pi[x] * h[x] * (h[x] * h[x] / m).ln() } else { 0.0 };
                (2.0 * kh[x] - value * d_ent) / ent / pi[x]
            })
            .collect();
        let mut improved = false;
        while step > 1e-12 {
            let mut cand: Vec<f64> = h.iter().zip(&grad).map(|(v, g)| (v - step * g).max(0.0)).collect();
            normalize(&mut cand);
            let r = entropy_ratio(c, &cand);
            if r < value {
                h = cand;
                value = r;
                step *= 1.5;
                improved = true;
                break;
            }
            step *= 0.5;
        }
        if !improved {
            break;
        }
    }
    value
}
