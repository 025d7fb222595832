//! Infected-edge bookkeeping, regeneration times and the auxiliary chain.
//!
//! `R_t` is a multiset over edges: every walk attempt adds the examined edge
//! to `R`, as its real element if that is absent and as an extra copy
//! otherwise. A clock of rate `mu |R|` removes a uniformly chosen element of
//! `R` (counting multiplicity); removing the real element of `e` refreshes
//! `e`. Edges whose real element is not in `R` carry their own rate-`mu`
//! refresh clocks. Every edge is therefore refreshed at total rate `mu` at all
//! times, and `e` has its real element in `R` exactly when it has been
//! examined since its last refresh.
//!
//! The real element is re-added whenever it is absent, regardless of
//! surviving copies. Letting surviving copies block the real element would
//! leave edges that were examined after their last refresh without their real
//! element, and `R = {}` would no longer certify a fresh environment.
//!
//! `|R|` is a birth-death chain with birth rate 1 and death rate `mu |R|`,
//! stationary law Poisson(`1/mu`). A regeneration is the first time `R`
//! empties after the first walk attempt following the previous regeneration;
//! spacings have mean `e^{1/mu}`.

use std::fmt::Write as _;

use rand::Rng;
use rand_distr::{Distribution, Exp1};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::full::{sample_environment_with, Environment, FullParams, FullState};
use crate::graph::{stationary_distribution, EdgeId, Graph};
use crate::rng::{run_batched, stream, SimRng};
use crate::stats::{total_variation, wilson_ci, Estimate, MeanAcc, Z95};

/// The infected multiset `R`, stored as per-edge counters.
#[derive(Debug, Clone, PartialEq)]
pub struct InfectionState {
    real_present: Vec<bool>,
    copy_count: Vec<u32>,
    /// One entry per element of `R`; a uniform entry is a uniform element.
    tokens: Vec<EdgeId>,
    /// Edges whose real element is not in `R`, with positions for O(1) removal.
    absent: Vec<EdgeId>,
    absent_pos: Vec<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InitialInfection {
    Empty,
    AllEdges,
}

impl InfectionState {
    pub fn empty(n_edges: usize) -> Self {
        Self {
            real_present: vec![false; n_edges],
            copy_count: vec![0; n_edges],
            tokens: Vec::new(),
            absent: (0..n_edges).collect(),
            absent_pos: (0..n_edges).collect(),
        }
    }

    pub fn all_edges(n_edges: usize) -> Self {
        Self {
            real_present: vec![true; n_edges],
            copy_count: vec![0; n_edges],
            tokens: (0..n_edges).collect(),
            absent: Vec::new(),
            absent_pos: vec![usize::MAX; n_edges],
        }
    }

    pub fn new(n_edges: usize, init: InitialInfection) -> Self {
        match init {
            InitialInfection::Empty => Self::empty(n_edges),
            InitialInfection::AllEdges => Self::all_edges(n_edges),
        }
    }

    /// `|R|`, counting copies.
    pub fn total(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn real_present(&self, e: EdgeId) -> bool {
        self.real_present[e]
    }

    pub fn copy_count(&self, e: EdgeId) -> u32 {
        self.copy_count[e]
    }

    pub fn absent_edges(&self) -> &[EdgeId] {
        &self.absent
    }

    fn add(&mut self, e: EdgeId) {
        if self.real_present[e] {
            self.copy_count[e] += 1;
        } else {
            self.real_present[e] = true;
            let k = self.absent_pos[e];
            let last = *self.absent.last().expect("absent edge list is non-empty");
            self.absent.swap_remove(k);
            if last != e {
                self.absent_pos[last] = k;
            }
            self.absent_pos[e] = usize::MAX;
        }
        self.tokens.push(e);
    }

    /// Removes a uniform element of `R`; returns the edge and whether the real
    /// element was the one removed.
    fn remove_uniform<R: Rng + ?Sized>(&mut self, rng: &mut R) -> (EdgeId, bool) {
        let k = rng.random_range(0..self.tokens.len());
        let e = self.tokens.swap_remove(k);
        let mult = self.real_present[e] as u32 + self.copy_count[e];
        let real = self.real_present[e] && rng.random_range(0..mult) == 0;
        if real {
            self.real_present[e] = false;
            self.absent_pos[e] = self.absent.len();
            self.absent.push(e);
        } else {
            self.copy_count[e] -= 1;
        }
        (e, real)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum InfectionEvent {
    WalkAttempt {
        edge: EdgeId,
        success: bool,
    },
    /// Refresh by the clock of an edge whose real element is absent.
    ClockRefresh {
        edge: EdgeId,
        open: bool,
    },
    /// Removal from `R`; refreshes the edge when the real element is removed.
    Removal {
        edge: EdgeId,
        real: bool,
        open: bool,
    },
}

/// Instrumentation for the bookkeeping invariant and refresh rates.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Audit {
    last_exam: Vec<Option<f64>>,
    last_refresh: Vec<Option<f64>>,
    pub refresh_counts: Vec<u64>,
    pub events: u64,
    pub violations: u64,
}

impl Audit {
    fn new(n_edges: usize, init: InitialInfection) -> Self {
        let exam = match init {
            InitialInfection::Empty => None,
            InitialInfection::AllEdges => Some(0.0),
        };
        Self {
            last_exam: vec![exam; n_edges],
            last_refresh: vec![None; n_edges],
            refresh_counts: vec![0; n_edges],
            events: 0,
            violations: 0,
        }
    }

    fn examined_since_refresh(&self, e: EdgeId) -> bool {
        match (self.last_exam[e], self.last_refresh[e]) {
            (None, _) => false,
            (Some(_), None) => true,
            (Some(x), Some(r)) => x > r,
        }
    }

    fn check_edge(&mut self, inf: &InfectionState, e: EdgeId) {
        if self.examined_since_refresh(e) != inf.real_present(e) {
            self.violations += 1;
        }
    }
}

/// The full process together with its infected set.
#[derive(Debug, Clone)]
pub struct InfectedProcess<'g> {
    g: &'g Graph,
    params: FullParams,
    pub state: FullState,
    pub infection: InfectionState,
    pub time: f64,
    audit: Option<Audit>,
}

impl<'g> InfectedProcess<'g> {
    pub fn new(g: &'g Graph, params: FullParams, x0: usize, eta0: Environment, init: InitialInfection) -> Result<Self> {
        if x0 >= g.n_vertices() {
            return Err(Error::OutOfRange { vertex: x0, n: g.n_vertices() });
        }
        if eta0.len() != g.n_edges() {
            return Err(Error::InvalidArgument("environment length differs from the edge count".into()));
        }
        Ok(Self {
            g,
            params,
            state: FullState { x: x0, env: eta0 },
            infection: InfectionState::new(g.n_edges(), init),
            time: 0.0,
            audit: None,
        })
    }

    /// Enables per-event checking of the bookkeeping invariant.
    pub fn with_audit(mut self, init: InitialInfection) -> Self {
        self.audit = Some(Audit::new(self.g.n_edges(), init));
        self
    }

    pub fn audit(&self) -> Option<&Audit> {
        self.audit.as_ref()
    }

    /// Advances by one event.
    pub fn step<R: Rng + ?Sized>(&mut self, rng: &mut R) -> InfectionEvent {
        let mu = self.params.mu;
        let clock_rate = mu * self.infection.absent.len() as f64;
        let removal_rate = mu * self.infection.total() as f64;
        let total = 1.0 + clock_rate + removal_rate;
        let dt: f64 = Exp1.sample(rng);
        self.time += dt / total;
        let u = rng.random::<f64>() * total;
        let (event, touched) = if u < 1.0 {
            let nbrs = self.g.neighbors(self.state.x);
            let (y, e) = nbrs[rng.random_range(0..nbrs.len())];
            self.infection.add(e);
            let success = self.state.env.is_open(e);
            if success {
                self.state.x = y;
            }
            if let Some(a) = self.audit.as_mut() {
                a.last_exam[e] = Some(self.time);
            }
            (InfectionEvent::WalkAttempt { edge: e, success }, e)
        } else if u < 1.0 + clock_rate {
            let e = self.infection.absent[rng.random_range(0..self.infection.absent.len())];
            let open = self.refresh(e, rng);
            (InfectionEvent::ClockRefresh { edge: e, open }, e)
        } else {
            let (e, real) = self.infection.remove_uniform(rng);
            let open = if real { self.refresh(e, rng) } else { self.state.env.is_open(e) };
            (InfectionEvent::Removal { edge: e, real, open }, e)
        };
        if let Some(a) = self.audit.as_mut() {
            a.events += 1;
            a.check_edge(&self.infection, touched);
            if a.events % 1024 == 0 {
                for e in 0..self.g.n_edges() {
                    a.check_edge(&self.infection, e);
                }
            }
        }
        event
    }

    fn refresh<R: Rng + ?Sized>(&mut self, e: EdgeId, rng: &mut R) -> bool {
        let open = rng.random::<f64>() < self.params.p;
        self.state.env.set(e, open);
        if let Some(a) = self.audit.as_mut() {
            a.last_refresh[e] = Some(self.time);
            a.refresh_counts[e] += 1;
        }
        open
    }

    /// Runs until `R` is empty (returns immediately if it already is).
    pub fn run_until_empty<R: Rng + ?Sized>(&mut self, rng: &mut R) -> f64 {
        while !self.infection.is_empty() {
            self.step(rng);
        }
        self.time
    }

    /// Runs to the next regeneration: the first emptying of `R` after the
    /// first walk attempt from now. Returns the regeneration time.
    pub fn run_to_regeneration<R: Rng + ?Sized>(&mut self, rng: &mut R) -> f64 {
        loop {
            if let InfectionEvent::WalkAttempt { .. } = self.step(rng) {
                break;
            }
        }
        self.run_until_empty(rng)
    }

    /// Runs until time `t` (the event crossing `t` is applied).
    pub fn run_until<R: Rng + ?Sized>(&mut self, t: f64, rng: &mut R) {
        while self.time < t {
            self.step(rng);
        }
    }
}

/// Regeneration times `tau_0 = 0 < tau_1 < ...` and positions `Y_i = X_{tau_i}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegenerationTrace {
    pub taus: Vec<f64>,
    pub positions: Vec<usize>,
}

impl RegenerationTrace {
    /// `tau_i - tau_{i-1}` for `i >= 1`.
    pub fn spacings(&self) -> Vec<f64> {
        self.taus.windows(2).map(|w| w[1] - w[0]).collect()
    }

    /// CSV with header `i,tau,spacing,position`; row 0 has spacing 0.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("i,tau,spacing,position\n");
        for (i, (&tau, &pos)) in self.taus.iter().zip(&self.positions).enumerate() {
            let spacing = if i == 0 { 0.0 } else { tau - self.taus[i - 1] };
            let _ = writeln!(out, "{i},{},{},{pos}", crate::fmt_f64(tau), crate::fmt_f64(spacing));
        }
        out
    }
}

/// Simulates `n_regens` regenerations from `(x0, eta0)` with the given initial
/// infected set. With `R_0` all edges, `tau_1` is the first emptying of `R`.
pub fn simulate_with_infection(
    g: &Graph,
    params: FullParams,
    x0: usize,
    eta0: &Environment,
    r0: InitialInfection,
    n_regens: usize,
    seed: u64,
) -> Result<RegenerationTrace> {
    if n_regens == 0 {
        return Err(Error::InvalidArgument("n_regens must be at least 1".into()));
    }
    let mut rng = stream(seed, 0);
    let mut proc = InfectedProcess::new(g, params, x0, eta0.clone(), r0)?;
    let mut taus = Vec::with_capacity(n_regens + 1);
    let mut positions = Vec::with_capacity(n_regens + 1);
    taus.push(0.0);
    positions.push(x0);
    for i in 0..n_regens {
        let tau = if i == 0 && !proc.infection.is_empty() {
            proc.run_until_empty(&mut rng)
        } else {
            proc.run_to_regeneration(&mut rng)
        };
        taus.push(tau);
        positions.push(proc.state.x);
    }
    Ok(RegenerationTrace { taus, positions })
}

/// `|R|` sampled at times `spacing, 2 spacing, ...` along one run started at
/// `(x0, eta ~ pi_p, R = {})`.
pub fn sample_infection_sizes(
    g: &Graph,
    params: FullParams,
    x0: usize,
    spacing: f64,
    n_samples: usize,
    seed: u64,
) -> Result<(Vec<usize>, u64)> {
    let mut rng = stream(seed, 0);
    let eta0 = sample_environment_with(g.n_edges(), params.p, &mut rng);
    let mut proc = InfectedProcess::new(g, params, x0, eta0, InitialInfection::Empty)?;
    let mut out = Vec::with_capacity(n_samples);
    let mut events = 0u64;
    // `before` is |R| just before the latest event, i.e. on the holding
    // interval that ends at `proc.time`.
    let mut before = proc.infection.total();
    for k in 1..=n_samples {
        let t = k as f64 * spacing;
        while proc.time <= t {
            before = proc.infection.total();
            proc.step(&mut rng);
            events += 1;
        }
        out.push(before);
    }
    Ok((out, events))
}

/// `n` regeneration spacings, in chunks of independent runs each started at
/// `(x0, eta ~ pi_p, R = {})`; spacings within a chunk are consecutive.
pub fn regeneration_spacings(
    g: &Graph,
    params: FullParams,
    x0: usize,
    n: usize,
    seed: u64,
    workers: Option<usize>,
) -> Result<Vec<f64>> {
    if x0 >= g.n_vertices() {
        return Err(Error::OutOfRange { vertex: x0, n: g.n_vertices() });
    }
    let work = |rng: &mut SimRng, _first: usize, count: usize| {
        let eta0 = sample_environment_with(g.n_edges(), params.p, rng);
        let mut proc = InfectedProcess::new(g, params, x0, eta0, InitialInfection::Empty).expect("valid start");
        let mut last = 0.0;
        let mut out = Vec::with_capacity(count);
        for _ in 0..count {
            let tau = proc.run_to_regeneration(rng);
            out.push(tau - last);
            last = tau;
        }
        out
    };
    let merge = |mut a: Vec<f64>, b: Vec<f64>| {
        a.extend(b);
        a
    };
    Ok(run_batched(n, seed, workers, work, merge).unwrap_or_default())
}

/// Histogram of `|R|` sampled every `spacing` time units along one run from
/// `(x0, eta ~ pi_p, R = {})`, stopping once `event_budget` events have been
/// simulated. The last cell collects sizes `>= cells - 1`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OccupancyHistogram {
    pub counts: Vec<u64>,
    pub samples: u64,
    pub events: u64,
}

pub fn infection_occupancy(
    g: &Graph,
    params: FullParams,
    spacing: f64,
    event_budget: u64,
    cells: usize,
    seed: u64,
) -> Result<OccupancyHistogram> {
    if !(spacing > 0.0) || cells < 2 {
        return Err(Error::InvalidArgument("need spacing > 0 and at least two cells".into()));
    }
    let mut rng = stream(seed, 0);
    let eta0 = sample_environment_with(g.n_edges(), params.p, &mut rng);
    let mut proc = InfectedProcess::new(g, params, 0, eta0, InitialInfection::Empty)?;
    let mut counts = vec![0u64; cells];
    let (mut events, mut samples) = (0u64, 0u64);
    let mut before = 0;
    let mut next = spacing;
    while events < event_budget {
        while proc.time <= next {
            before = proc.infection.total();
            proc.step(&mut rng);
            events += 1;
        }
        counts[before.min(cells - 1)] += 1;
        samples += 1;
        next += spacing;
    }
    Ok(OccupancyHistogram { counts, samples, events })
}

/// Mean of the first time `R` empties when it starts with every edge's real
/// element, from `x0 = 0` and `eta ~ pi_p`.
pub fn first_regeneration_from_all_infected(
    g: &Graph,
    params: FullParams,
    seed: u64,
    n_samples: usize,
    workers: Option<usize>,
) -> Result<Estimate> {
    if n_samples == 0 {
        return Err(Error::InvalidArgument("n_samples must be at least 1".into()));
    }
    let work = |rng: &mut SimRng, _first: usize, count: usize| {
        let mut acc = MeanAcc::default();
        for _ in 0..count {
            let eta0 = sample_environment_with(g.n_edges(), params.p, rng);
            let mut proc = InfectedProcess::new(g, params, 0, eta0, InitialInfection::AllEdges)
                .expect("vertex 0 exists and the environment matches");
            acc.push(proc.run_until_empty(rng));
        }
        acc
    };
    Ok(run_batched(n_samples, seed, workers, work, MeanAcc::merge).unwrap_or_default().estimate())
}

/// Exact `E_n[T_0]` for the birth-death chain of `|R|` (birth 1, death `mu k`):
/// `E_k[T_{k-1}] = sum_{j >= k} pi_j / (pi_k mu k)` with `pi` Poisson(`1/mu`).
pub fn expected_emptying_time(n: usize, mu: f64) -> f64 {
    let lam = 1.0 / mu;
    (1..=n)
        .map(|k| {
            let (mut sum, mut term, mut j) = (0.0f64, 1.0f64, k);
            while term > 1e-17 * sum.max(1.0) {
                sum += term;
                j += 1;
                term *= lam / j as f64;
            }
            sum / (mu * k as f64)
        })
        .sum()
}

/// `n_steps` auxiliary-chain states `Y_1, ..., Y_n` from `x0` with
/// `eta_0 ~ pi_p` and `R_0 = {}`.
pub fn aux_chain_sample(g: &Graph, params: FullParams, x0: usize, n_steps: usize, seed: u64) -> Result<Vec<usize>> {
    let mut rng = stream(seed, 0);
    let eta0 = sample_environment_with(g.n_edges(), params.p, &mut rng);
    let mut proc = InfectedProcess::new(g, params, x0, eta0, InitialInfection::Empty)?;
    let mut out = Vec::with_capacity(n_steps);
    for _ in 0..n_steps {
        proc.run_to_regeneration(&mut rng);
        out.push(proc.state.x);
    }
    Ok(out)
}

/// Empirical auxiliary transition matrix with Wilson 95% intervals.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AuxTransitionEstimate {
    pub counts: Vec<Vec<u64>>,
    pub samples_per_state: u64,
}

impl AuxTransitionEstimate {
    pub fn prob(&self, x: usize, y: usize) -> f64 {
        self.counts[x][y] as f64 / self.samples_per_state as f64
    }

    pub fn ci(&self, x: usize, y: usize) -> (f64, f64) {
        wilson_ci(self.counts[x][y], self.samples_per_state, Z95)
    }

    pub fn matrix(&self) -> Vec<Vec<f64>> {
        let n = self.counts.len();
        (0..n).map(|x| (0..n).map(|y| self.prob(x, y)).collect()).collect()
    }
}

/// Restart protocol: from every `x`, `n` independent runs from
/// `(x, eta ~ pi_p, R = {})` to `tau_1`, recording `X_{tau_1}`.
pub fn estimate_aux_transition(
    g: &Graph,
    params: FullParams,
    n_samples_per_state: usize,
    seed: u64,
    workers: Option<usize>,
) -> Result<AuxTransitionEstimate> {
    if n_samples_per_state == 0 {
        return Err(Error::InvalidArgument("need at least one sample per state".into()));
    }
    let n = g.n_vertices();
    let mut counts = Vec::with_capacity(n);
    for x in 0..n {
        let work = |rng: &mut SimRng, _first: usize, count: usize| {
            let mut row = vec![0u64; n];
            for _ in 0..count {
                let eta0 = sample_environment_with(g.n_edges(), params.p, rng);
                let mut proc =
                    InfectedProcess::new(g, params, x, eta0, InitialInfection::Empty).expect("start state is valid");
                proc.run_to_regeneration(rng);
                row[proc.state.x] += 1;
            }
            row
        };
        let merge = |mut a: Vec<u64>, b: Vec<u64>| {
            a.iter_mut().zip(b).for_each(|(u, v)| *u += v);
            a
        };
        let row_seed = seed ^ (x as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15);
        counts.push(run_batched(n_samples_per_state, row_seed, workers, work, merge).unwrap_or_default());
    }
    Ok(AuxTransitionEstimate { counts, samples_per_state: n_samples_per_state as u64 })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IndependenceResult {
    /// TV between the empirical law of `eta_{tau_1}` and `pi_p`.
    pub tv_marginal: f64,
    /// TV between the empirical joint law of `(X_{tau_1}, eta_{tau_1})` and the
    /// product of its empirical marginals.
    pub tv_product_gap: f64,
    /// Counts indexed by `x * 2^|E| + bits(eta)`.
    pub joint_counts: Vec<u64>,
}

/// Largest `|V| 2^|E|` accepted by [`regeneration_independence_test`].
pub const INDEPENDENCE_STATE_LIMIT: usize = 64;

/// Joint law of `(X_{tau_1}, eta_{tau_1})` from `x0 ~ pi`, `eta_0 ~ pi_p`,
/// `R_0 = {}`.
pub fn regeneration_independence_test(
    g: &Graph,
    params: FullParams,
    n_samples: usize,
    seed: u64,
    workers: Option<usize>,
) -> Result<IndependenceResult> {
    let m = g.n_edges();
    let states = if m < 16 { g.n_vertices() << m } else { usize::MAX };
    if states > INDEPENDENCE_STATE_LIMIT {
        return Err(Error::TooLarge { what: "joint law", size: states, limit: INDEPENDENCE_STATE_LIMIT });
    }
    let pi = stationary_distribution(g).into_vec();
    let work = |rng: &mut SimRng, _first: usize, count: usize| {
        let mut joint = vec![0u64; states];
        for _ in 0..count {
            let x0 = sample_index(&pi, rng);
            let eta0 = sample_environment_with(m, params.p, rng);
            let mut proc = InfectedProcess::new(g, params, x0, eta0, InitialInfection::Empty).expect("valid start");
            proc.run_to_regeneration(rng);
            joint[(proc.state.x << m) | proc.state.env.index() as usize] += 1;
        }
        joint
    };
    let merge = |mut a: Vec<u64>, b: Vec<u64>| {
        a.iter_mut().zip(b).for_each(|(u, v)| *u += v);
        a
    };
    let joint_counts = run_batched(n_samples, seed, workers, work, merge).unwrap_or_default();
    let total = n_samples as f64;
    let joint: Vec<f64> = joint_counts.iter().map(|&c| c as f64 / total).collect();
    let n_env = 1usize << m;
    let mut env_marg = vec![0.0; n_env];
    let mut x_marg = vec![0.0; g.n_vertices()];
    for (s, &q) in joint.iter().enumerate() {
        env_marg[s & (n_env - 1)] += q;
        x_marg[s >> m] += q;
    }
    let pi_p: Vec<f64> = (0..n_env as u64).map(|b| crate::full::env_weight(m, b, params.p)).collect();
    let product: Vec<f64> = (0..states).map(|s| x_marg[s >> m] * env_marg[s & (n_env - 1)]).collect();
    Ok(IndependenceResult {
        tv_marginal: total_variation(&env_marg, &pi_p),
        tv_product_gap: total_variation(&joint, &product),
        joint_counts,
    })
}

/// Draws an index with probabilities `w` (summing to one).
pub fn sample_index<R: Rng + ?Sized>(w: &[f64], rng: &mut R) -> usize {
    let u = rng.random::<f64>();
    let mut acc = 0.0;
    for (i, &p) in w.iter().enumerate() {
        acc += p;
        if u < acc {
            return i;
        }
    }
    w.len() - 1
}

/// Hitting time of `target` from `(x0, eta ~ pi_p)` three ways: directly on
/// the full process; as the regeneration time `tau_N` at which the auxiliary
/// chain first visits `target`; and as `E[N] e^{1/mu}` (Wald's identity).
/// The last two agree; the direct time is at most either since the walker may
/// pass `target` between regenerations.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WaldHitting {
    pub direct: Estimate,
    pub aux_regeneration_time: Estimate,
    pub aux_steps: Estimate,
    pub wald: Estimate,
}

pub fn aux_wald_hitting(
    g: &Graph,
    params: FullParams,
    x0: usize,
    target: usize,
    n_samples: usize,
    seed: u64,
    workers: Option<usize>,
) -> Result<WaldHitting> {
    if x0 >= g.n_vertices() || target >= g.n_vertices() {
        return Err(Error::OutOfRange { vertex: x0.max(target), n: g.n_vertices() });
    }
    if params.p == 0.0 && x0 != target {
        return Err(Error::InvalidArgument("target unreachable with p = 0".into()));
    }
    type Acc = (MeanAcc, MeanAcc, MeanAcc);
    let work = |rng: &mut SimRng, _first: usize, count: usize| -> Acc {
        let (mut direct, mut regen, mut steps) = Acc::default();
        for _ in 0..count {
            let eta0 = sample_environment_with(g.n_edges(), params.p, rng);
            direct.push(crate::full::hitting_time_once(g, params, x0, &eta0, target, rng));
            let eta1 = sample_environment_with(g.n_edges(), params.p, rng);
            let mut proc = InfectedProcess::new(g, params, x0, eta1, InitialInfection::Empty).expect("valid start");
            let mut n = 0u64;
            while proc.state.x != target {
                proc.run_to_regeneration(rng);
                n += 1;
            }
            regen.push(proc.time);
            steps.push(n as f64);
        }
        (direct, regen, steps)
    };
    let merge = |a: Acc, b: Acc| (a.0.merge(b.0), a.1.merge(b.1), a.2.merge(b.2));
    let (direct, regen, steps) = run_batched(n_samples, seed, workers, work, merge).unwrap_or_default();
    let steps = steps.estimate();
    let scale = (1.0 / params.mu).exp();
    let wald = Estimate { mean: steps.mean * scale, std_err: steps.std_err * scale, n: steps.n };
    Ok(WaldHitting { direct: direct.estimate(), aux_regeneration_time: regen.estimate(), aux_steps: steps, wald })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn infection_counters() {
        let mut inf = InfectionState::empty(3);
        inf.add(1);
        inf.add(1);
        assert!(inf.real_present(1));
        assert_eq!(inf.copy_count(1), 1);
        assert_eq!(inf.total(), 2);
        assert_eq!(inf.absent_edges().len(), 2);
        let mut rng = stream(3, 0);
        let mut real_removed = 0;
        while !inf.is_empty() {
            let (e, real) = inf.remove_uniform(&mut rng);
            assert_eq!(e, 1);
            real_removed += real as u32;
        }
        assert_eq!(real_removed, 1);
        assert_eq!(inf.absent_edges().len(), 3);
    }

    #[test]
    fn emptying_time_oracle() {
        // From |R| = 1 at mu = 1: e - 1.
        assert!((expected_emptying_time(1, 1.0) - (std::f64::consts::E - 1.0)).abs() < 1e-12);
        // Spacing = Exp(1) wait + emptying from 1 = e^{1/mu}.
        for mu in [0.25, 0.5, 1.0, 2.0] {
            assert!((1.0 + expected_emptying_time(1, mu) - (1.0 / mu).exp()).abs() < 1e-9);
        }
    }

    #[test]
    fn audit_holds_on_small_run() {
        let g = Graph::cycle(4).unwrap();
        let params = FullParams::new(0.7, 0.4).unwrap();
        let mut rng = stream(1, 0);
        let mut proc = InfectedProcess::new(&g, params, 0, Environment::all_closed(4), InitialInfection::Empty)
            .unwrap()
            .with_audit(InitialInfection::Empty);
        for _ in 0..20_000 {
            proc.step(&mut rng);
        }
        let audit = proc.audit().unwrap();
        assert_eq!(audit.violations, 0);
        assert_eq!(audit.events, 20_000);
    }

    #[test]
    fn closed_world_aux_chain_stays() {
        let g = Graph::cycle(5).unwrap();
        let ys = aux_chain_sample(&g, FullParams::new(1.0, 0.0).unwrap(), 3, 200, 4).unwrap();
        assert!(ys.iter().all(|&y| y == 3));
    }

    #[test]
    fn trace_csv() {
        let g = Graph::path(3).unwrap();
        let params = FullParams::new(1.0, 0.5).unwrap();
        let tr =
            simulate_with_infection(&g, params, 0, &Environment::all_open(2), InitialInfection::Empty, 5, 2).unwrap();
        assert_eq!(tr.taus.len(), 6);
        assert!(tr.spacings().iter().all(|&s| s > 0.0));
        let csv = tr.to_csv();
        assert!(csv.starts_with("i,tau,spacing,position\n0,"));
        assert_eq!(csv.lines().count(), 7);
    }
}
