//! Distances to stationarity and mixing times.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::{relaxation_time, ChainSpec, EXACT_STATE_LIMIT};
use crate::error::{Error, Result};
use crate::linalg::{expm_generator, matrix_power, EXPM_TOL};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Norm {
    #[serde(rename = "tv")]
    TotalVariation,
    #[serde(rename = "l2")]
    L2,
    #[serde(rename = "linf")]
    LInf,
}

impl Norm {
    /// Distance of the distribution `nu` from `pi` in this norm.
    pub fn distance(self, nu: &[f64], pi: &[f64]) -> f64 {
        match self {
            Norm::TotalVariation => 0.5 * nu.iter().zip(pi).map(|(a, b)| (a - b).abs()).sum::<f64>(),
            Norm::L2 => nu.iter().zip(pi).map(|(a, b)| b * (a / b - 1.0).powi(2)).sum::<f64>().sqrt(),
            Norm::LInf => nu.iter().zip(pi).map(|(a, b)| (a / b - 1.0).abs()).fold(0.0, f64::max),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Start {
    /// Worst initial state.
    Worst,
    State(usize),
    Distribution(Vec<f64>),
}

/// `P_t = e^{tL}` for generators, `P^floor(t)` for transition matrices.
pub fn transition_kernel(c: &ChainSpec, t: f64) -> DMatrix<f64> {
    if c.is_continuous() {
        expm_generator(&c.rate_matrix_dense(), t)
    } else {
        matrix_power(&c.matrix_dense(), t.max(0.0).floor() as u64)
    }
}

/// `nu P_t` without forming the kernel.
fn evolve(c: &ChainSpec, nu: &[f64], t: f64) -> Vec<f64> {
    let n = c.n_states();
    let step = |v: &[f64], scale: f64| -> Vec<f64> {
        // v (I + Q / scale)
        let mut out = v.to_vec();
        for x in 0..n {
            if v[x] == 0.0 {
                continue;
            }
            for &(y, _) in c.row(x) {
                out[y] += v[x] * c.rate(x, y) / scale;
            }
        }
        out
    };
    if !c.is_continuous() {
        let steps = t.max(0.0).floor() as u64;
        if steps > 64 {
            let p = transition_kernel(c, t);
            return (0..n).map(|y| (0..n).map(|x| nu[x] * p[(x, y)]).sum()).collect();
        }
        let mut v = nu.to_vec();
        for _ in 0..steps {
            v = step(&v, 1.0);
        }
        return v;
    }
    let rate = c.max_exit_rate();
    if t <= 0.0 || rate <= 0.0 {
        return nu.to_vec();
    }
    let total = rate * t;
    let pieces = (total / 4.0).ceil().max(1.0) as usize;
    let lam = total / pieces as f64;
    let tol = EXPM_TOL / pieces as f64;
    let mut v = nu.to_vec();
    for _ in 0..pieces {
        let mut weight = (-lam).exp();
        let mut mass = weight;
        let mut power = v.clone();
        let mut acc: Vec<f64> = power.iter().map(|p| p * weight).collect();
        let mut k = 0u32;
        while 1.0 - mass > tol && k < 10_000 {
            k += 1;
            power = step(&power, rate);
            weight *= lam / k as f64;
            mass += weight;
            for (a, p) in acc.iter_mut().zip(&power) {
                *a += p * weight;
            }
        }
        v = acc;
    }
    v
}

/// Distance from stationarity of each row of `P_t`.
pub fn distances_from(c: &ChainSpec, t: f64, norm: Norm) -> Vec<f64> {
    let p = transition_kernel(c, t);
    (0..c.n_states())
        .map(|x| {
            let row: Vec<f64> = p.row(x).iter().copied().collect();
            norm.distance(&row, c.pi())
        })
        .collect()
}

/// Distance from stationarity at time `t` from `start`.
pub fn distance_at(c: &ChainSpec, t: f64, norm: Norm, start: &Start) -> Result<f64> {
    match start {
        Start::Worst => Ok(distances_from(c, t, norm).into_iter().fold(0.0, f64::max)),
        Start::State(x) => {
            if *x >= c.n_states() {
                return Err(Error::OutOfRange { vertex: *x, n: c.n_states() });
            }
            let mut nu = vec![0.0; c.n_states()];
            nu[*x] = 1.0;
            Ok(norm.distance(&evolve(c, &nu, t), c.pi()))
        }
        Start::Distribution(nu) => {
            if nu.len() != c.n_states() {
                return Err(Error::InvalidArgument("initial distribution has the wrong length".into()));
            }
            Ok(norm.distance(&evolve(c, nu, t), c.pi()))
        }
    }
}

/// Smallest time at which the distance from `start` is at most `eps`.
///
/// Continuous chains: the time is bracketed by doubling from the relaxation
/// time and refined by bisection to `1e-4 * t_rel`; the upper end of the
/// final bracket is returned. Discrete chains: exact integer search. Periodic
/// chains that never mix yield [`Error::NoConvergence`].
pub fn mixing_time(c: &ChainSpec, eps: f64, norm: Norm, start: &Start) -> Result<f64> {
    if c.n_states() > EXACT_STATE_LIMIT {
        return Err(Error::TooLarge { what: "chain", size: c.n_states(), limit: EXACT_STATE_LIMIT });
    }
    if !(eps > 0.0) {
        return Err(Error::InvalidArgument(format!("eps must be positive, got {eps}")));
    }
    let d = |t: f64| distance_at(c, t, norm, start);
    if d(0.0)? <= eps {
        return Ok(0.0);
    }
    if c.is_continuous() {
        let t_rel = relaxation_time(c)?;
        let (mut lo, mut hi) = (0.0, t_rel);
        let mut doublings = 0;
        while d(hi)? > eps {
            lo = hi;
            hi *= 2.0;
            doublings += 1;
            if doublings > 60 {
                return Err(Error::NoConvergence(format!("distance stays above {eps}")));
            }
        }
        while hi - lo > 1e-4 * t_rel {
            let mid = 0.5 * (lo + hi);
            if d(mid)? <= eps {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        Ok(hi)
    } else {
        let (mut lo, mut hi) = (0u64, 1u64);
        while d(hi as f64)? > eps {
            lo = hi;
            hi *= 2;
            if hi > 1 << 40 {
                return Err(Error::NoConvergence(format!("distance stays above {eps}")));
            }
        }
        while hi - lo > 1 {
            let mid = lo + (hi - lo) / 2;
            if d(mid as f64)? <= eps {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        Ok(hi as f64)
    }
}
