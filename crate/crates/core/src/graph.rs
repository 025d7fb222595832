//! Finite simple graphs with stable edge ids.
//!
//! Every constructor returns a connected graph. Edge ids are `0..|E|` and never
//! change after construction; the lattice constructors order edges
//! lexicographically by `(min endpoint, max endpoint)` so that environments indexed
//! by edge id are reproducible across runs.

use std::collections::{HashSet, VecDeque};
use std::fmt;
use std::io::BufRead;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// An undirected edge id.
pub type EdgeId = usize;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Graph {
    n_vertices: usize,
    edges: Vec<(usize, usize)>,
    adjacency: Vec<Vec<(usize, EdgeId)>>,
    /// Set by constructors that produce vertex-transitive graphs.
    certified_transitive: bool,
    name: String,
}

impl Graph {
    /// Builds a graph from an edge list, keeping the input order as edge ids.
    pub fn from_edges(n: usize, pairs: &[(usize, usize)]) -> Result<Self> {
        Self::build(n, pairs.to_vec(), false, format!("edges(n={n},m={})", pairs.len()))
    }

    fn build(n: usize, pairs: Vec<(usize, usize)>, certified_transitive: bool, name: String) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidArgument("graph needs at least one vertex".into()));
        }
        let mut seen = HashSet::with_capacity(pairs.len());
        let mut edges = Vec::with_capacity(pairs.len());
        let mut adjacency = vec![Vec::new(); n];
        for (id, &(u, v)) in pairs.iter().enumerate() {
            for w in [u, v] {
                if w >= n {
                    return Err(Error::OutOfRange { vertex: w, n });
                }
            }
            if u == v {
                return Err(Error::LoopEdge(u));
            }
            let key = (u.min(v), u.max(v));
            if !seen.insert(key) {
                return Err(Error::DuplicateEdge(key.0, key.1));
            }
            edges.push(key);
            adjacency[u].push((v, id));
            adjacency[v].push((u, id));
        }
        let g = Graph { n_vertices: n, edges, adjacency, certified_transitive, name };
        if !g.is_connected() {
            return Err(Error::Disconnected);
        }
        Ok(g)
    }

    /// The torus `Z_n^d`. For `n = 2` the doubled edges are collapsed, which
    /// yields the hypercube `{0,1}^d` with identical vertex numbering.
    pub fn torus(n: usize, d: usize) -> Result<Self> {
        if n < 2 || d < 1 {
            return Err(Error::InvalidArgument(format!("torus needs n >= 2, d >= 1 (got n={n}, d={d})")));
        }
        let n_vertices = checked_pow(n, d)?;
        let mut set = std::collections::BTreeSet::new();
        for v in 0..n_vertices {
            let mut stride = 1;
            for _ in 0..d {
                let coord = (v / stride) % n;
                let w = v - coord * stride + ((coord + 1) % n) * stride;
                set.insert((v.min(w), v.max(w)));
                stride *= n;
            }
        }
        let name = if n == 2 { format!("hypercube(d={d})") } else { format!("torus(n={n},d={d})") };
        Self::build(n_vertices, set.into_iter().collect(), true, name)
    }

    /// The cycle `C_n`, `n >= 3`.
    pub fn cycle(n: usize) -> Result<Self> {
        if n < 3 {
            return Err(Error::InvalidArgument(format!("cycle needs n >= 3 (got {n})")));
        }
        let mut g = Self::torus(n, 1)?;
        g.name = format!("cycle(n={n})");
        Ok(g)
    }

    /// The hypercube `{0,1}^d`; vertex `v` is the bit string of `v`.
    pub fn hypercube(d: usize) -> Result<Self> {
        if d < 1 || d >= usize::BITS as usize {
            return Err(Error::InvalidArgument(format!("hypercube dimension {d} out of range")));
        }
        let n = 1usize << d;
        let mut edges = Vec::with_capacity(d << (d - 1));
        for v in 0..n {
            for i in 0..d {
                let w = v ^ (1 << i);
                if v < w {
                    edges.push((v, w));
                }
            }
        }
        edges.sort_unstable();
        Self::build(n, edges, true, format!("hypercube(d={d})"))
    }

    /// The path `P_n` on `n >= 2` vertices.
    pub fn path(n: usize) -> Result<Self> {
        if n < 2 {
            return Err(Error::InvalidArgument(format!("path needs n >= 2 (got {n})")));
        }
        let edges: Vec<_> = (0..n - 1).map(|i| (i, i + 1)).collect();
        Self::build(n, edges, n == 2, format!("path(n={n})"))
    }

    /// The complete graph `K_n`, `n >= 2`.
    pub fn complete(n: usize) -> Result<Self> {
        if n < 2 {
            return Err(Error::InvalidArgument(format!("complete graph needs n >= 2 (got {n})")));
        }
        let mut edges = Vec::new();
        for u in 0..n {
            for v in u + 1..n {
                edges.push((u, v));
            }
        }
        Self::build(n, edges, true, format!("complete(n={n})"))
    }

    /// The star `K_{1,k}` with center 0.
    pub fn star(leaves: usize) -> Result<Self> {
        if leaves < 1 {
            return Err(Error::InvalidArgument("star needs at least one leaf".into()));
        }
        let edges: Vec<_> = (1..=leaves).map(|v| (0, v)).collect();
        Self::build(leaves + 1, edges, leaves == 1, format!("star(k={leaves})"))
    }

    /// Parses the edge-list text format: a header line `n m` followed by `m`
    /// lines `u v`. Blank lines and lines starting with `#` are skipped.
    pub fn parse_edge_list<R: BufRead>(reader: R) -> Result<Self> {
        let mut lines = reader
            .lines()
            .map(|l| l.map_err(|e| Error::InvalidArgument(e.to_string())))
            .filter(|l| l.as_ref().map(|s| !s.trim().is_empty() && !s.trim_start().starts_with('#')).unwrap_or(true));
        let header = lines.next().ok_or_else(|| Error::InvalidArgument("empty edge list".into()))??;
        let (n, m) = parse_pair(&header)?;
        let mut pairs = Vec::with_capacity(m);
        for line in lines.by_ref().take(m) {
            pairs.push(parse_pair(&line?)?);
        }
        if pairs.len() != m {
            return Err(Error::InvalidArgument(format!("expected {m} edges, found {}", pairs.len())));
        }
        if lines.next().is_some() {
            return Err(Error::InvalidArgument(format!("more than the declared {m} edges")));
        }
        Self::from_edges(n, &pairs)
    }

    pub fn read_edge_list(path: &Path) -> Result<Self> {
        let file = std::fs::File::open(path).map_err(|e| Error::InvalidArgument(format!("{}: {e}", path.display())))?;
        Self::parse_edge_list(std::io::BufReader::new(file))
    }

    /// Serializes to the edge-list text format.
    pub fn to_edge_list(&self) -> String {
        let mut s = format!("{} {}\n", self.n_vertices, self.edges.len());
        for &(u, v) in &self.edges {
            s.push_str(&format!("{u} {v}\n"));
        }
        s
    }

    pub fn n_vertices(&self) -> usize {
        self.n_vertices
    }

    pub fn n_edges(&self) -> usize {
        self.edges.len()
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn edge(&self, id: EdgeId) -> (usize, usize) {
        self.edges[id]
    }

    /// Neighbours of `v` as `(neighbour, edge id)` pairs.
    pub fn neighbors(&self, v: usize) -> &[(usize, EdgeId)] {
        &self.adjacency[v]
    }

    pub fn degree(&self, v: usize) -> usize {
        self.adjacency[v].len()
    }

    pub fn degrees(&self) -> Vec<usize> {
        self.adjacency.iter().map(Vec::len).collect()
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn with_name(mut self, name: impl Into<String>) -> Self {
        self.name = name.into();
        self
    }

    /// Whether a constructor certified the graph as vertex-transitive.
    pub fn is_certified_transitive(&self) -> bool {
        self.certified_transitive
    }

    /// Looks up the id of the edge `{u, v}`.
    pub fn edge_id(&self, u: usize, v: usize) -> Option<EdgeId> {
        self.adjacency.get(u)?.iter().find(|&&(w, _)| w == v).map(|&(_, e)| e)
    }

    fn is_connected(&self) -> bool {
        self.bfs_distances(0).iter().all(|d| d.is_some())
    }

    /// Graph distances from `source`; `None` for unreachable vertices.
    pub fn bfs_distances(&self, source: usize) -> Vec<Option<usize>> {
        let mut dist = vec![None; self.n_vertices];
        let mut queue = VecDeque::from([source]);
        dist[source] = Some(0);
        while let Some(u) = queue.pop_front() {
            let du = dist[u].unwrap_or(0);
            for &(w, _) in &self.adjacency[u] {
                if dist[w].is_none() {
                    dist[w] = Some(du + 1);
                    queue.push_back(w);
                }
            }
        }
        dist
    }

    /// Distances from `source` (the graph is connected).
    pub fn distances(&self, source: usize) -> Vec<usize> {
        self.bfs_distances(source).into_iter().map(|d| d.unwrap_or(usize::MAX)).collect()
    }

    pub fn diameter(&self) -> usize {
        (0..self.n_vertices).map(|v| self.distances(v).into_iter().max().unwrap_or(0)).max().unwrap_or(0)
    }

    pub fn is_bipartite(&self) -> bool {
        let dist = self.distances(0);
        self.edges.iter().all(|&(u, v)| dist[u] % 2 != dist[v] % 2)
    }

    pub fn is_regular(&self) -> bool {
        let d0 = self.degree(0);
        (0..self.n_vertices).all(|v| self.degree(v) == d0)
    }

    /// Certified transitivity, or else a necessary-condition check: the graph is
    /// regular and every vertex sees the same multiset of distances.
    pub fn looks_transitive(&self) -> bool {
        if self.certified_transitive {
            return true;
        }
        if !self.is_regular() {
            return false;
        }
        let profile = |v: usize| {
            let mut d = self.distances(v);
            d.sort_unstable();
            d
        };
        let base = profile(0);
        (1..self.n_vertices).all(|v| profile(v) == base)
    }
}

impl fmt::Display for Graph {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} [|V|={}, |E|={}]", self.name, self.n_vertices, self.edges.len())
    }
}

fn checked_pow(n: usize, d: usize) -> Result<usize> {
    let mut acc: usize = 1;
    for _ in 0..d {
        acc = acc.checked_mul(n).ok_or_else(|| Error::InvalidArgument(format!("{n}^{d} vertices overflows")))?;
    }
    Ok(acc)
}

fn parse_pair(line: &str) -> Result<(usize, usize)> {
    let mut it = line.split_whitespace().map(str::parse::<usize>);
    match (it.next(), it.next(), it.next()) {
        (Some(Ok(a)), Some(Ok(b)), None) => Ok((a, b)),
        _ => Err(Error::InvalidArgument(format!("malformed line {line:?}"))),
    }
}

/// The degree-biased distribution `pi(x) = deg(x) / 2|E|`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StationaryDist {
    weights: Vec<f64>,
}

impl StationaryDist {
    pub fn of(g: &Graph) -> Self {
        let two_m = 2.0 * g.n_edges() as f64;
        Self { weights: g.degrees().into_iter().map(|d| d as f64 / two_m).collect() }
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.weights
    }

    pub fn min(&self) -> f64 {
        self.weights.iter().copied().fold(f64::INFINITY, f64::min)
    }
}

pub fn stationary_distribution(g: &Graph) -> StationaryDist {
    StationaryDist::of(g)
}
