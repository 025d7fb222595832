//! Finite-state Markov chains and their exact analytics.
//!
//! A [`ChainSpec`] is either a continuous-time generator `L` or a discrete-time
//! transition matrix `P`, stored sparsely together with its stationary
//! distribution. The analytics work with the rate matrix `Q`, which is `L` for
//! generators and `P - I` for transition matrices; Dirichlet forms, spectral
//! gaps, Dirichlet eigenvalues and expected hitting times agree between the two
//! readings, and only the mixing-time computation distinguishes them.

mod hitting;
mod logsobolev;
mod mixing;
mod norms;
mod spectral;

pub use hitting::{additive_symmetrization, commute_time, effective_conductance, hitting_times, hitting_times_to_set};
pub use logsobolev::{entropy_ratio, log_sobolev_constant, LogSobolevEstimate, LogSobolevOptions};
pub use mixing::{distance_at, distances_from, mixing_time, transition_kernel, Norm, Start};
pub use norms::{
    conditioning_l2_bound_check, lagrange_min_distance, lagrange_minimizer, signed_measure_norms, MeasureNorms,
};
pub use spectral::{
    dirichlet_eigenvalue, dirichlet_form, dirichlet_form_quadratic, poincare_constant, relaxation_time, spectral_gap,
    spectral_profile, spectral_profile_time, subset_variance_ratio, ProfileMode, ProfileOptions, ProfilePoint,
    SpectralProfileTable,
};

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{stationary_distribution, Graph};

/// Residual tolerance for stationarity and detailed balance.
pub const BALANCE_TOL: f64 = 1e-10;

/// Default cap on the state count for dense exact analysis.
pub const EXACT_STATE_LIMIT: usize = 4096;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ChainKind {
    Generator,
    Transition,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChainSpec {
    kind: ChainKind,
    /// Sparse rows including the diagonal, sorted by column.
    rows: Vec<Vec<(usize, f64)>>,
    pi: Vec<f64>,
    reversible: bool,
}

impl ChainSpec {
    /// Builds and validates a chain from `(i, j, value)` triplets. For generators
    /// the diagonal may be omitted, in which case it is filled in as minus the
    /// off-diagonal row sum. Repeated triplets are summed.
    pub fn new(kind: ChainKind, n: usize, triplets: &[(usize, usize, f64)], pi: Vec<f64>) -> Result<Self> {
        let rows = assemble_rows(kind, n, triplets)?;
        let chain = Self::from_rows(kind, rows, pi)?;
        chain.check_stationary()?;
        Ok(chain)
    }

    /// Like [`ChainSpec::new`] but solves for the stationary distribution.
    pub fn with_computed_pi(kind: ChainKind, n: usize, triplets: &[(usize, usize, f64)]) -> Result<Self> {
        let rows = assemble_rows(kind, n, triplets)?;
        let pi = solve_stationary(n, &rows, kind)?;
        let chain = Self::from_rows(kind, rows, pi)?;
        chain.check_stationary()?;
        Ok(chain)
    }

    pub fn from_dense(kind: ChainKind, m: &DMatrix<f64>, pi: Option<Vec<f64>>) -> Result<Self> {
        let n = m.nrows();
        let mut triplets = Vec::new();
        for i in 0..n {
            for j in 0..n {
                if m[(i, j)] != 0.0 {
                    triplets.push((i, j, m[(i, j)]));
                }
            }
        }
        match pi {
            Some(pi) => Self::new(kind, n, &triplets, pi),
            None => Self::with_computed_pi(kind, n, &triplets),
        }
    }

    fn from_rows(kind: ChainKind, rows: Vec<Vec<(usize, f64)>>, pi: Vec<f64>) -> Result<Self> {
        if pi.len() != rows.len() {
            return Err(Error::InvalidChain(format!("pi has {} entries for {} states", pi.len(), rows.len())));
        }
        if pi.iter().any(|&p| !(p >= 0.0) || !p.is_finite()) {
            return Err(Error::InvalidChain("pi has negative or non-finite entries".into()));
        }
        let total: f64 = pi.iter().sum();
        if (total - 1.0).abs() > 1e-10 {
            return Err(Error::InvalidChain(format!("pi sums to {total}")));
        }
        let mut chain = ChainSpec { kind, rows, pi, reversible: false };
        chain.reversible = chain.detailed_balance_residual() <= BALANCE_TOL * chain.scale();
        Ok(chain)
    }

    fn scale(&self) -> f64 {
        self.max_exit_rate().max(1.0)
    }

    fn check_stationary(&self) -> Result<()> {
        let r = self.stationarity_residual();
        if r > BALANCE_TOL * self.scale() {
            return Err(Error::InvalidChain(format!("pi Q residual {r:.3e} exceeds tolerance")));
        }
        Ok(())
    }

    pub fn kind(&self) -> ChainKind {
        self.kind
    }

    pub fn is_continuous(&self) -> bool {
        self.kind == ChainKind::Generator
    }

    pub fn n_states(&self) -> usize {
        self.rows.len()
    }

    pub fn pi(&self) -> &[f64] {
        &self.pi
    }

    pub fn pi_min(&self) -> f64 {
        self.pi.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn is_reversible(&self) -> bool {
        self.reversible
    }

    /// Stored entries of row `x` (including the diagonal).
    pub fn row(&self, x: usize) -> &[(usize, f64)] {
        &self.rows[x]
    }

    /// Stored matrix entry: `L(x, y)` or `P(x, y)`.
    pub fn entry(&self, x: usize, y: usize) -> f64 {
        self.rows[x].binary_search_by_key(&y, |&(j, _)| j).map(|k| self.rows[x][k].1).unwrap_or(0.0)
    }

    /// Rate-matrix entry `Q(x, y)`.
    pub fn rate(&self, x: usize, y: usize) -> f64 {
        let v = self.entry(x, y);
        match (self.kind, x == y) {
            (ChainKind::Transition, true) => v - 1.0,
            _ => v,
        }
    }

    /// `-Q(x, x)`, the total exit rate of `x`.
    pub fn exit_rate(&self, x: usize) -> f64 {
        -self.rate(x, x)
    }

    pub fn max_exit_rate(&self) -> f64 {
        (0..self.n_states()).map(|x| self.exit_rate(x)).fold(0.0, f64::max)
    }

    /// Off-diagonal rate entries `(x, y, Q(x, y))`.
    pub fn off_diagonal(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        self.rows
            .iter()
            .enumerate()
            .flat_map(|(i, row)| row.iter().filter(move |&&(j, _)| j != i).map(move |&(j, v)| (i, j, v)))
    }

    /// The stored matrix (`L` or `P`) as a dense matrix.
    pub fn matrix_dense(&self) -> DMatrix<f64> {
        let n = self.n_states();
        let mut m = DMatrix::zeros(n, n);
        for (i, row) in self.rows.iter().enumerate() {
            for &(j, v) in row {
                m[(i, j)] = v;
            }
        }
        m
    }

    /// The rate matrix `Q` as a dense matrix.
    pub fn rate_matrix_dense(&self) -> DMatrix<f64> {
        let mut m = self.matrix_dense();
        if self.kind == ChainKind::Transition {
            for i in 0..self.n_states() {
                m[(i, i)] -= 1.0;
            }
        }
        m
    }

    /// The symmetric matrix `K` with `E(f, f) = f^T K f`, i.e. the symmetric part
    /// of `diag(pi) (-Q)`.
    pub fn dirichlet_matrix(&self) -> DMatrix<f64> {
        let n = self.n_states();
        let mut k = DMatrix::zeros(n, n);
        for x in 0..n {
            for &(y, _) in &self.rows[x] {
                let v = -self.pi[x] * self.rate(x, y);
                k[(x, y)] += 0.5 * v;
                k[(y, x)] += 0.5 * v;
            }
        }
        k
    }

    /// `max |(pi Q)(y)|`.
    pub fn stationarity_residual(&self) -> f64 {
        let n = self.n_states();
        let mut flow = vec![0.0; n];
        for x in 0..n {
            for &(y, _) in &self.rows[x] {
                flow[y] += self.pi[x] * self.rate(x, y);
            }
        }
        flow.into_iter().map(f64::abs).fold(0.0, f64::max)
    }

    /// `max |pi(x) Q(x,y) - pi(y) Q(y,x)|`.
    pub fn detailed_balance_residual(&self) -> f64 {
        self.off_diagonal().map(|(x, y, v)| (self.pi[x] * v - self.pi[y] * self.rate(y, x)).abs()).fold(0.0, f64::max)
    }

    /// Strong connectivity of the transition graph.
    pub fn is_irreducible(&self) -> bool {
        let n = self.n_states();
        let mut reverse = vec![Vec::new(); n];
        for (x, y, v) in self.off_diagonal() {
            if v > 0.0 {
                reverse[y].push(x);
            }
        }
        let forward: Vec<Vec<usize>> = self
            .rows
            .iter()
            .enumerate()
            .map(|(x, row)| row.iter().filter(|&&(y, v)| y != x && v > 0.0).map(|&(y, _)| y).collect())
            .collect();
        reach_all(&forward) && reach_all(&reverse)
    }

    pub fn require_irreducible(&self) -> Result<()> {
        if self.is_irreducible() {
            Ok(())
        } else {
            Err(Error::NotIrreducible)
        }
    }

    /// The time reversal `Q*(x, y) = pi(y) Q(y, x) / pi(x)`.
    pub fn time_reversal(&self) -> Result<ChainSpec> {
        if self.pi.iter().any(|&p| p <= 0.0) {
            return Err(Error::InvalidChain("time reversal needs pi > 0".into()));
        }
        let n = self.n_states();
        let mut triplets = Vec::new();
        for (x, row) in self.rows.iter().enumerate() {
            for &(y, v) in row {
                triplets.push((y, x, self.pi[x] * v / self.pi[y]));
            }
        }
        Self::new(self.kind, n, &triplets, self.pi.clone())
    }

    /// Applies the rate matrix: `(Q f)(x)`.
    pub fn apply_rate(&self, f: &[f64]) -> Vec<f64> {
        (0..self.n_states()).map(|x| self.rows[x].iter().map(|&(y, _)| self.rate(x, y) * f[y]).sum()).collect()
    }

    pub fn to_json(&self) -> ChainJson {
        let mut triplets = Vec::new();
        for (i, row) in self.rows.iter().enumerate() {
            for &(j, v) in row {
                triplets.push((i, j, v));
            }
        }
        ChainJson { states: self.n_states(), kind: self.kind, triplets, pi: self.pi.clone() }
    }

    pub fn from_json(json: &ChainJson) -> Result<Self> {
        Self::new(json.kind, json.states, &json.triplets, json.pi.clone())
    }

    pub fn to_json_string(&self) -> String {
        serde_json::to_string(&self.to_json()).unwrap_or_default()
    }

    pub fn from_json_str(s: &str) -> Result<Self> {
        let json: ChainJson = serde_json::from_str(s).map_err(|e| Error::InvalidChain(e.to_string()))?;
        Self::from_json(&json)
    }
}

/// Wire form of a [`ChainSpec`]:
/// `{"states": N, "kind": "generator"|"transition", "triplets": [[i,j,v],...], "pi": [...]}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChainJson {
    pub states: usize,
    pub kind: ChainKind,
    pub triplets: Vec<(usize, usize, f64)>,
    pub pi: Vec<f64>,
}

fn reach_all(adj: &[Vec<usize>]) -> bool {
    let n = adj.len();
    let mut seen = vec![false; n];
    let mut stack = vec![0];
    seen[0] = true;
    while let Some(u) = stack.pop() {
        for &w in &adj[u] {
            if !seen[w] {
                seen[w] = true;
                stack.push(w);
            }
        }
    }
    seen.into_iter().all(|s| s)
}

fn assemble_rows(kind: ChainKind, n: usize, triplets: &[(usize, usize, f64)]) -> Result<Vec<Vec<(usize, f64)>>> {
    if n == 0 {
        return Err(Error::InvalidChain("empty state space".into()));
    }
    let mut rows: Vec<std::collections::BTreeMap<usize, f64>> = vec![Default::default(); n];
    for &(i, j, v) in triplets {
        if i >= n || j >= n {
            return Err(Error::InvalidChain(format!("entry ({i}, {j}) out of range")));
        }
        if !v.is_finite() {
            return Err(Error::InvalidChain(format!("entry ({i}, {j}) is not finite")));
        }
        *rows[i].entry(j).or_insert(0.0) += v;
    }
    let mut out = Vec::with_capacity(n);
    for (i, row) in rows.into_iter().enumerate() {
        let off: f64 = row.iter().filter(|&(&j, _)| j != i).map(|(_, &v)| v).sum();
        if row.iter().any(|(&j, &v)| j != i && v < 0.0) {
            return Err(Error::InvalidChain(format!("negative off-diagonal entry in row {i}")));
        }
        let mut row = row;
        match kind {
            ChainKind::Generator => {
                let diag = row.entry(i).or_insert(-off);
                let scale = off.max(1.0);
                if (*diag + off).abs() > 1e-10 * scale {
                    return Err(Error::InvalidChain(format!("generator row {i} sums to {}", *diag + off)));
                }
            }
            ChainKind::Transition => {
                let diag = *row.entry(i).or_insert(0.0);
                if diag < 0.0 || (diag + off - 1.0).abs() > 1e-10 {
                    return Err(Error::InvalidChain(format!("transition row {i} sums to {}", diag + off)));
                }
            }
        }
        out.push(row.into_iter().filter(|&(j, v)| v != 0.0 || j == i).collect());
    }
    Ok(out)
}

/// Solves `pi Q = 0`, `sum pi = 1` by replacing one balance equation with the
/// normalization.
fn solve_stationary(n: usize, rows: &[Vec<(usize, f64)>], kind: ChainKind) -> Result<Vec<f64>> {
    let mut a = DMatrix::zeros(n, n);
    for (x, row) in rows.iter().enumerate() {
        for &(y, v) in row {
            let q = if kind == ChainKind::Transition && x == y { v - 1.0 } else { v };
            a[(y, x)] += q;
        }
    }
    for x in 0..n {
        a[(n - 1, x)] = 1.0;
    }
    let mut b = DVector::zeros(n);
    b[n - 1] = 1.0;
    let pi = crate::linalg::solve(a, &b)?;
    Ok(pi.iter().map(|&p| if p.abs() < 1e-15 { 0.0 } else { p }).collect())
}

/// Simple random walk on `g`: transition `P(x,y) = 1/deg(x)` for neighbours, or
/// the rate-1 continuous version with generator `P - I`.
pub fn srw_chain(g: &Graph, continuous: bool) -> ChainSpec {
    let mut triplets = Vec::with_capacity(2 * g.n_edges() + g.n_vertices());
    for x in 0..g.n_vertices() {
        let w = 1.0 / g.degree(x) as f64;
        for &(y, _) in g.neighbors(x) {
            triplets.push((x, y, w));
        }
        if continuous {
            triplets.push((x, x, -1.0));
        }
    }
    let kind = if continuous { ChainKind::Generator } else { ChainKind::Transition };
    ChainSpec::new(kind, g.n_vertices(), &triplets, stationary_distribution(g).into_vec())
        .expect("simple random walk on a connected graph is a valid chain")
}
