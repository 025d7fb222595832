//! Percolation cluster statistics `M_p = E[|dK_x| |K_x|^2]` and `N_p = E[|K_x|]`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::full::{env_weight, sample_environment_with, Environment, MAX_EXACT_EDGES};
use crate::graph::Graph;
use crate::rng::{run_batched, SimRng};
use crate::stats::MeanAcc;
use crate::union_find::UnionFind;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "method")]
pub enum ClusterMethod {
    Exact,
    MonteCarlo { samples: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClusterStats {
    pub m_p: f64,
    pub n_p: f64,
    pub method: ClusterMethod,
    /// Standard errors (zero for exact enumeration).
    pub m_p_err: f64,
    pub n_p_err: f64,
}

/// Open clusters of `env` as a union-find structure.
pub fn clusters(g: &Graph, env: &Environment) -> UnionFind {
    let mut uf = UnionFind::new(g.n_vertices());
    for (e, &(u, v)) in g.edges().iter().enumerate() {
        if env.is_open(e) {
            uf.union(u, v);
        }
    }
    uf
}

/// `(|K_x|, |dK_x|)` for the open cluster of `x`; the edge boundary counts
/// edges with exactly one endpoint in the cluster.
pub fn cluster_and_boundary(g: &Graph, env: &Environment, x: usize) -> (usize, usize) {
    let mut uf = clusters(g, env);
    let size = uf.set_size(x);
    let boundary = g.edges().iter().filter(|&&(u, v)| uf.same(u, x) != uf.same(v, x)).count();
    (size, boundary)
}

/// Cluster statistics at `base` (vertex 0 by convention). Transitivity makes
/// the base immaterial; graphs that neither carry a transitivity certificate
/// nor pass the heuristic check are rejected.
pub fn cluster_stats(
    g: &Graph,
    p: f64,
    method: ClusterMethod,
    seed: u64,
    workers: Option<usize>,
) -> Result<ClusterStats> {
    if !g.looks_transitive() {
        return Err(Error::NotTransitive);
    }
    cluster_stats_at(g, p, 0, method, seed, workers)
}

/// As [`cluster_stats`] at an arbitrary base vertex, without the transitivity check.
pub fn cluster_stats_at(
    g: &Graph,
    p: f64,
    base: usize,
    method: ClusterMethod,
    seed: u64,
    workers: Option<usize>,
) -> Result<ClusterStats> {
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::InvalidArgument(format!("p must lie in [0, 1], got {p}")));
    }
    if base >= g.n_vertices() {
        return Err(Error::OutOfRange { vertex: base, n: g.n_vertices() });
    }
    let m = g.n_edges();
    match method {
        ClusterMethod::Exact => {
            if m > MAX_EXACT_EDGES {
                return Err(Error::TooLarge { what: "environment space", size: m, limit: MAX_EXACT_EDGES });
            }
            let (mut m_p, mut n_p) = (0.0, 0.0);
            for bits in 0..1u64 << m {
                let w = env_weight(m, bits, p);
                if w == 0.0 {
                    continue;
                }
                let (k, b) = cluster_and_boundary(g, &Environment::from_index(m, bits), base);
                m_p += w * (b * k * k) as f64;
                n_p += w * k as f64;
            }
            Ok(ClusterStats { m_p, n_p, method, m_p_err: 0.0, n_p_err: 0.0 })
        }
        ClusterMethod::MonteCarlo { samples } => {
            if samples == 0 {
                return Err(Error::InvalidArgument("need at least one sample".into()));
            }
            let work = |rng: &mut SimRng, _first: usize, count: usize| {
                let (mut ma, mut na) = (MeanAcc::default(), MeanAcc::default());
                for _ in 0..count {
                    let env = sample_environment_with(m, p, rng);
                    let (k, b) = cluster_and_boundary(g, &env, base);
                    ma.push((b * k * k) as f64);
                    na.push(k as f64);
                }
                (ma, na)
            };
            let merge = |a: (MeanAcc, MeanAcc), b: (MeanAcc, MeanAcc)| (a.0.merge(b.0), a.1.merge(b.1));
            let (ma, na) = run_batched(samples, seed, workers, work, merge).unwrap_or_default();
            let (me, ne) = (ma.estimate(), na.estimate());
            Ok(ClusterStats { m_p: me.mean, n_p: ne.mean, method, m_p_err: me.std_err, n_p_err: ne.std_err })
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn degenerate_p() {
        let g = Graph::cycle(6).unwrap();
        let s0 = cluster_stats(&g, 0.0, ClusterMethod::Exact, 0, None).unwrap();
        assert_eq!((s0.n_p, s0.m_p), (1.0, 2.0));
        let s1 = cluster_stats(&g, 1.0, ClusterMethod::Exact, 0, None).unwrap();
        assert_eq!((s1.n_p, s1.m_p), (6.0, 0.0));
    }

    #[test]
    fn path_cluster_boundary() {
        let g = Graph::path(4).unwrap();
        let env = Environment::from_bits(&[true, false, true]);
        assert_eq!(cluster_and_boundary(&g, &env, 0), (2, 1));
        assert_eq!(cluster_and_boundary(&g, &env, 3), (2, 1));
        assert!(matches!(
            cluster_stats(&Graph::star(3).unwrap(), 0.5, ClusterMethod::Exact, 0, None),
            Err(Error::NotTransitive)
        ));
    }
}
