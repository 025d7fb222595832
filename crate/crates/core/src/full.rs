//! The full process `(X_t, eta_t)`: walker position and edge environment.
//!
//! Simulation is event driven with a single clock of rate `1 + mu |E|`: with
//! probability `1 / (1 + mu |E|)` the event is a walk attempt (a uniform
//! neighbour is chosen and the walker crosses iff the edge is open), otherwise
//! a uniformly chosen edge is refreshed to a fresh Bernoulli(`p`) state.
//! Refreshes are kept literally, including those that leave the edge
//! unchanged.
//!
//! The exact generator lives on `V x {0,1}^E` with state index
//! `x * 2^|E| + bits(eta)`. There a refresh to the current state is not a
//! transition, so edges flip closed -> open at rate `mu p` and open -> closed
//! at rate `mu (1 - p)`.

use std::fmt::Write as _;

use rand::Rng;
use rand_distr::{Distribution, Exp1};
use serde::{Deserialize, Serialize};

use crate::chain::{ChainKind, ChainSpec, EXACT_STATE_LIMIT};
use crate::error::{Error, Result};
use crate::graph::{stationary_distribution, EdgeId, Graph};
use crate::rng::{run_batched, stream, SimRng};
use crate::stats::{Estimate, MeanAcc};

/// Largest edge count for which environments are enumerated.
pub const MAX_EXACT_EDGES: usize = 20;

/// One open/closed bit per edge, packed into words.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Environment {
    len: usize,
    words: Vec<u64>,
}

impl Environment {
    pub fn all_closed(len: usize) -> Self {
        Self { len, words: vec![0; len.div_ceil(64)] }
    }

    pub fn all_open(len: usize) -> Self {
        let mut env = Self::all_closed(len);
        for e in 0..len {
            env.set(e, true);
        }
        env
    }

    /// Environment whose bit `e` is bit `e` of `index`.
    pub fn from_index(len: usize, index: u64) -> Self {
        let mut env = Self::all_closed(len);
        if len > 0 {
            env.words[0] = if len >= 64 { index } else { index & ((1u64 << len) - 1) };
        }
        env
    }

    pub fn from_bits(bits: &[bool]) -> Self {
        let mut env = Self::all_closed(bits.len());
        for (e, &b) in bits.iter().enumerate() {
            env.set(e, b);
        }
        env
    }

    /// Inverse of [`Environment::from_index`]; only meaningful for `len <= 64`.
    pub fn index(&self) -> u64 {
        self.words.first().copied().unwrap_or(0)
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    #[inline]
    pub fn is_open(&self, e: EdgeId) -> bool {
        self.words[e / 64] >> (e % 64) & 1 == 1
    }

    #[inline]
    pub fn set(&mut self, e: EdgeId, open: bool) {
        let mask = 1u64 << (e % 64);
        if open {
            self.words[e / 64] |= mask;
        } else {
            self.words[e / 64] &= !mask;
        }
    }

    pub fn count_open(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }

    pub fn bits(&self) -> Vec<bool> {
        (0..self.len).map(|e| self.is_open(e)).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FullParams {
    pub mu: f64,
    pub p: f64,
}

impl FullParams {
    /// Validates `mu > 0` and `p` in `[0, 1]`. Rates `mu > 1` are accepted with a
    /// warning: the comparison results are stated for `mu <= 1`.
    pub fn new(mu: f64, p: f64) -> Result<Self> {
        if !(mu > 0.0 && mu.is_finite()) {
            return Err(Error::InvalidArgument(format!("refresh rate mu must be positive, got {mu}")));
        }
        if !(0.0..=1.0).contains(&p) {
            return Err(Error::InvalidArgument(format!("open probability p must lie in [0, 1], got {p}")));
        }
        if mu > 1.0 {
            log::warn!("mu = {mu} > 1: comparison constants are only claimed for mu <= 1");
        }
        Ok(Self { mu, p })
    }
}

/// I.i.d. Bernoulli(`p`) environment drawn from `rng`.
pub fn sample_environment_with<R: Rng + ?Sized>(n_edges: usize, p: f64, rng: &mut R) -> Environment {
    let mut env = Environment::all_closed(n_edges);
    for e in 0..n_edges {
        if rng.random::<f64>() < p {
            env.set(e, true);
        }
    }
    env
}

/// I.i.d. Bernoulli(`p`) environment on the edges of `g`.
pub fn sample_environment(g: &Graph, p: f64, seed: u64) -> Environment {
    sample_environment_with(g.n_edges(), p, &mut stream(seed, 0))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum EventKind {
    WalkAttempt { edge: EdgeId, success: bool },
    Refresh { edge: EdgeId, open: bool },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Event {
    pub time: f64,
    pub kind: EventKind,
    /// Walker position after the event.
    pub walk_pos: usize,
}

/// Position and environment of the full process.
#[derive(Debug, Clone, PartialEq)]
pub struct FullState {
    pub x: usize,
    pub env: Environment,
}

impl FullState {
    /// Advances by one event; returns the holding time and the event.
    pub fn step<R: Rng + ?Sized>(&mut self, g: &Graph, params: FullParams, rng: &mut R) -> (f64, EventKind) {
        let refresh_rate = params.mu * g.n_edges() as f64;
        let total = 1.0 + refresh_rate;
        let dt: f64 = Exp1.sample(rng);
        let dt = dt / total;
        let u = rng.random::<f64>() * total;
        let kind = if u < 1.0 {
            let nbrs = g.neighbors(self.x);
            let (y, e) = nbrs[rng.random_range(0..nbrs.len())];
            let success = self.env.is_open(e);
            if success {
                self.x = y;
            }
            EventKind::WalkAttempt { edge: e, success }
        } else {
            let e = rng.random_range(0..g.n_edges());
            let open = rng.random::<f64>() < params.p;
            self.env.set(e, open);
            EventKind::Refresh { edge: e, open }
        };
        (dt, kind)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FullTrajectory {
    pub x0: usize,
    pub eta0: Environment,
    pub horizon: f64,
    pub events: Vec<Event>,
    pub final_state: FullState,
}

impl FullTrajectory {
    /// CSV with header `time,kind,edge,open,walk_pos`; for walk attempts the
    /// `open` column records whether the attempt succeeded.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("time,kind,edge,open,walk_pos\n");
        for ev in &self.events {
            let (kind, edge, open) = match ev.kind {
                EventKind::WalkAttempt { edge, success } => ("walk", edge, success),
                EventKind::Refresh { edge, open } => ("refresh", edge, open),
            };
            let _ = writeln!(out, "{},{kind},{edge},{},{}", crate::fmt_f64(ev.time), open as u8, ev.walk_pos);
        }
        out
    }

    /// Walker position at time `t` (right-continuous).
    pub fn position_at(&self, t: f64) -> usize {
        let k = self.events.partition_point(|ev| ev.time <= t);
        if k == 0 {
            self.x0
        } else {
            self.events[k - 1].walk_pos
        }
    }
}

fn check_start(g: &Graph, x0: usize, eta0: &Environment) -> Result<()> {
    if x0 >= g.n_vertices() {
        return Err(Error::OutOfRange { vertex: x0, n: g.n_vertices() });
    }
    if eta0.len() != g.n_edges() {
        return Err(Error::InvalidArgument(format!("environment has {} bits for {} edges", eta0.len(), g.n_edges())));
    }
    Ok(())
}

/// Simulates the full process on `[0, horizon]` and records every event.
pub fn simulate(
    g: &Graph,
    params: FullParams,
    x0: usize,
    eta0: &Environment,
    horizon: f64,
    seed: u64,
) -> Result<FullTrajectory> {
    check_start(g, x0, eta0)?;
    if !(horizon > 0.0) {
        return Err(Error::InvalidArgument(format!("horizon must be positive, got {horizon}")));
    }
    let mut rng = stream(seed, 0);
    let mut state = FullState { x: x0, env: eta0.clone() };
    let mut time = 0.0;
    let mut events = Vec::new();
    loop {
        let (dt, kind) = state.step(g, params, &mut rng);
        time += dt;
        if time > horizon {
            break;
        }
        events.push(Event { time, kind, walk_pos: state.x });
    }
    Ok(FullTrajectory { x0, eta0: eta0.clone(), horizon, events, final_state: state })
}

/// Time spent in each full state (indexed as in [`build_full_generator`])
/// along one run of length `horizon`, normalized to fractions.
pub fn occupation_measure(
    g: &Graph,
    params: FullParams,
    x0: usize,
    eta0: &Environment,
    horizon: f64,
    seed: u64,
) -> Result<Vec<f64>> {
    check_start(g, x0, eta0)?;
    full_state_count(g)?;
    let shift = g.n_edges();
    let mut occ = vec![0.0; g.n_vertices() << shift];
    let mut rng = stream(seed, 0);
    let mut state = FullState { x: x0, env: eta0.clone() };
    let mut time = 0.0;
    while time < horizon {
        let here = (state.x << shift) | state.env.index() as usize;
        let (dt, _) = state.step(g, params, &mut rng);
        let dt = dt.min(horizon - time);
        occ[here] += dt;
        time += dt;
    }
    occ.iter_mut().for_each(|v| *v /= horizon);
    Ok(occ)
}

/// `|V| 2^|E|`, or `TooLarge` beyond the exact limits.
pub fn full_state_count(g: &Graph) -> Result<usize> {
    let m = g.n_edges();
    if m > MAX_EXACT_EDGES {
        return Err(Error::TooLarge { what: "environment space", size: m, limit: MAX_EXACT_EDGES });
    }
    let n = g.n_vertices() << m;
    if n > EXACT_STATE_LIMIT {
        return Err(Error::TooLarge { what: "full state space", size: n, limit: EXACT_STATE_LIMIT });
    }
    Ok(n)
}

/// Index of `(x, eta)` in the exact full chain.
pub fn full_state_index(g: &Graph, x: usize, eta: &Environment) -> usize {
    (x << g.n_edges()) | eta.index() as usize
}

/// Inverse of [`full_state_index`].
pub fn decode_full_state(g: &Graph, s: usize) -> (usize, Environment) {
    let m = g.n_edges();
    (s >> m, Environment::from_index(m, (s & ((1 << m) - 1)) as u64))
}

/// `pi_p(eta)` for the environment with index `bits` on `m` edges.
pub fn env_weight(m: usize, bits: u64, p: f64) -> f64 {
    let open = bits.count_ones() as i32;
    p.powi(open) * (1.0 - p).powi(m as i32 - open)
}

/// Exact generator of the full process with stationary law `pi x pi_p`.
pub fn build_full_generator(g: &Graph, params: FullParams) -> Result<ChainSpec> {
    let n = full_state_count(g)?;
    let m = g.n_edges();
    let (mu, p) = (params.mu, params.p);
    let pi_v = stationary_distribution(g);
    let mut triplets = Vec::with_capacity(n * (m + 3));
    let mut pi = Vec::with_capacity(n);
    for s in 0..n {
        let x = s >> m;
        let bits = (s & ((1 << m) - 1)) as u64;
        pi.push(pi_v.weights()[x] * env_weight(m, bits, p));
        let mut out = 0.0;
        let w = 1.0 / g.degree(x) as f64;
        for &(y, e) in g.neighbors(x) {
            if bits >> e & 1 == 1 {
                triplets.push((s, (y << m) | bits as usize, w));
                out += w;
            }
        }
        for e in 0..m {
            let rate = if bits >> e & 1 == 1 { mu * (1.0 - p) } else { mu * p };
            if rate > 0.0 {
                triplets.push((s, s ^ (1 << e), rate));
                out += rate;
            }
        }
        triplets.push((s, s, -out));
    }
    ChainSpec::new(ChainKind::Generator, n, &triplets, pi)
}

/// Monte Carlo estimate of `E_{x0, eta0}[T_{target x {0,1}^E}]`.
pub fn estimate_hitting_time_full(
    g: &Graph,
    params: FullParams,
    x0: usize,
    eta0: &Environment,
    target: usize,
    n_samples: usize,
    seed: u64,
    workers: Option<usize>,
) -> Result<Estimate> {
    check_start(g, x0, eta0)?;
    if target >= g.n_vertices() {
        return Err(Error::OutOfRange { vertex: target, n: g.n_vertices() });
    }
    if n_samples == 0 {
        return Err(Error::InvalidArgument("n_samples must be at least 1".into()));
    }
    if x0 == target {
        return Ok(Estimate { mean: 0.0, std_err: 0.0, n: n_samples as u64 });
    }
    if params.p == 0.0 {
        return Err(Error::InvalidArgument("target unreachable with p = 0".into()));
    }
    let work = |rng: &mut SimRng, _first: usize, count: usize| {
        let mut acc = MeanAcc::default();
        for _ in 0..count {
            acc.push(hitting_time_once(g, params, x0, eta0, target, rng));
        }
        acc
    };
    let acc = run_batched(n_samples, seed, workers, work, MeanAcc::merge).unwrap_or_default();
    Ok(acc.estimate())
}

/// One sample of the hitting time of `target` from `(x0, eta0)`.
pub fn hitting_time_once<R: Rng + ?Sized>(
    g: &Graph,
    params: FullParams,
    x0: usize,
    eta0: &Environment,
    target: usize,
    rng: &mut R,
) -> f64 {
    let mut state = FullState { x: x0, env: eta0.clone() };
    let mut time = 0.0;
    while state.x != target {
        time += state.step(g, params, rng).0;
    }
    time
}

/// Exact `E_{x0, eta0}[T_{target x {0,1}^E}]` by a linear solve on the full
/// generator.
pub fn exact_hitting_time_full(
    g: &Graph,
    params: FullParams,
    x0: usize,
    eta0: &Environment,
    target: usize,
) -> Result<f64> {
    check_start(g, x0, eta0)?;
    let chain = build_full_generator(g, params)?;
    let h = crate::chain::hitting_times_to_set(&chain, &target_fiber(g, target))?;
    Ok(h[full_state_index(g, x0, eta0)])
}

/// All full states whose walker sits at `y`.
pub fn target_fiber(g: &Graph, y: usize) -> Vec<usize> {
    let m = g.n_edges();
    (0..1usize << m).map(|b| (y << m) | b).collect()
}

fn check_tilted(p: f64) -> Result<()> {
    if !(p > 0.0 && p < 1.0) {
        return Err(Error::DegenerateP(p));
    }
    Ok(())
}

/// The `p`-tilted hypercube: `{0,1}^d` where each coordinate refreshes at rate
/// `mu` to Bernoulli(`p`); coordinates flip 0 -> 1 at rate `mu p` and
/// 1 -> 0 at rate `mu (1 - p)`.
pub fn tilted_hypercube_chain(d: usize, p: f64, mu: f64) -> Result<ChainSpec> {
    check_tilted(p)?;
    if d == 0 || d > 12 {
        return Err(Error::TooLarge { what: "tilted hypercube dimension", size: d, limit: 12 });
    }
    let n = 1usize << d;
    let mut triplets = Vec::with_capacity(n * (d + 1));
    let mut pi = Vec::with_capacity(n);
    for s in 0..n {
        pi.push(env_weight(d, s as u64, p));
        let mut out = 0.0;
        for i in 0..d {
            let rate = if s >> i & 1 == 1 { mu * (1.0 - p) } else { mu * p };
            triplets.push((s, s ^ (1 << i), rate));
            out += rate;
        }
        triplets.push((s, s, -out));
    }
    ChainSpec::new(ChainKind::Generator, n, &triplets, pi)
}

/// `t(delta) = (1/mu) log(d (1 - alpha) / (alpha log(1 + delta)))` with
/// `alpha = min(p, 1 - p)`.
pub fn tilted_mixing_time_bound(d: usize, p: f64, mu: f64, delta: f64) -> Result<f64> {
    check_tilted(p)?;
    if d == 0 || !(delta > 0.0) {
        return Err(Error::InvalidArgument("need d >= 1 and delta > 0".into()));
    }
    let alpha = p.min(1.0 - p);
    Ok((d as f64 * (1.0 - alpha) / (alpha * delta.ln_1p())).ln() / mu)
}

/// Exact `max_{x,y} |P_t(x,y)/pi_p(y) - 1|` on the tilted hypercube.
///
/// Per coordinate `Q_t(a, b) = e^{-mu t} 1(a = b) + (1 - e^{-mu t}) nu(b)`, so
/// the ratio `P_t(x,y)/pi_p(y)` is a product of per-coordinate ratios and its
/// extremes are products of the per-coordinate extremes.
pub fn tilted_linf_distance(d: usize, p: f64, mu: f64, t: f64) -> Result<f64> {
    check_tilted(p)?;
    let alpha = p.min(1.0 - p);
    let decay = (-mu * t.max(0.0)).exp();
    let r_max = 1.0 + decay * (1.0 - alpha) / alpha;
    let r_min = 1.0 - decay;
    let n = d as i32;
    Ok((r_max.powi(n) - 1.0).max(1.0 - r_min.powi(n)))
}

/// Exact `L_inf` mixing time of the tilted hypercube: the distance is
/// decreasing in `t`, and the crossing is located by bisection to relative
/// precision `1e-12`.
pub fn tilted_linf_mixing_time(d: usize, p: f64, mu: f64, eps: f64) -> Result<f64> {
    if tilted_linf_distance(d, p, mu, 0.0)? <= eps {
        return Ok(0.0);
    }
    let (mut lo, mut hi) = (0.0, 1.0 / mu);
    while tilted_linf_distance(d, p, mu, hi)? > eps {
        lo = hi;
        hi *= 2.0;
    }
    while hi - lo > 1e-12 * hi {
        let mid = 0.5 * (lo + hi);
        if tilted_linf_distance(d, p, mu, mid)? <= eps {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(hi)
}
