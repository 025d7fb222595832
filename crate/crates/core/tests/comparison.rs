use dynperc_core::chain::*;
use dynperc_core::cluster::*;
use dynperc_core::comparison::*;
use dynperc_core::full::*;
use dynperc_core::identities::*;
use dynperc_core::{Error, Graph};
use proptest::prelude::*;

fn params(mu: f64, p: f64) -> FullParams {
    FullParams::new(mu, p).unwrap()
}

/// Worst `E_{x,eta}[T_y]` by Gauss-Seidel sweeps over the jump rates written
/// out from the model: each edge flips at rate `mu p` (closed) or
/// `mu (1 - p)` (open); the walker crosses an open incident edge at rate
/// `1 / deg`.
fn hitting_oracle(g: &Graph, mu: f64, p: f64) -> f64 {
    let (n, m) = (g.n_vertices(), g.n_edges());
    let ns = n << m;
    let mut jumps: Vec<Vec<(usize, f64)>> = vec![Vec::new(); ns];
    for x in 0..n {
        for b in 0..1usize << m {
            let s = (x << m) | b;
            for e in 0..m {
                let open = b >> e & 1 == 1;
                jumps[s].push(((x << m) | (b ^ 1 << e), if open { mu * (1.0 - p) } else { mu * p }));
            }
            for &(y, e) in g.neighbors(x) {
                if b >> e & 1 == 1 {
                    jumps[s].push(((y << m) | b, 1.0 / g.degree(x) as f64));
                }
            }
        }
    }
    let mut worst: f64 = 0.0;
    for y in 0..n {
        let mut h = vec![0.0; ns];
        loop {
            let mut delta: f64 = 0.0;
            for s in 0..ns {
                if s >> m == y {
                    continue;
                }
                let out: f64 = jumps[s].iter().map(|j| j.1).sum();
                let v = (1.0 + jumps[s].iter().map(|&(t, r)| r * h[t]).sum::<f64>()) / out;
                delta = delta.max((v - h[s]).abs() / v);
                h[s] = v;
            }
            if delta < 1e-14 {
                break;
            }
        }
        worst = h.iter().fold(worst, |a, &b| a.max(b));
    }
    worst
}

#[test]
fn exact_hitting_matches_sweep_oracle() {
    for (g, mu, p) in [
        (Graph::complete(2).unwrap(), 1.0, 0.5),
        (Graph::path(3).unwrap(), 0.5, 0.3),
        (Graph::cycle(3).unwrap(), 2.0, 0.7),
    ] {
        let (v, _) = exact_worst_hitting_time(&g, params(mu, p)).unwrap();
        let o = hitting_oracle(&g, mu, p);
        assert!((v - o).abs() < 1e-8 * o, "{}: {v} vs {o}", g.name());
    }
}

#[test]
fn path_hitting_ratio_bounded() {
    let g = Graph::path(4).unwrap();
    let grid = [(1.0, 0.2), (1.0, 0.5), (1.0, 0.8)];
    let r = check_hitting_comparison(&g, &grid, HittingMode::Exact, None).unwrap();
    assert!(r.exact_checks_pass());
    assert_eq!(r.cells.len(), 3);
    for c in &r.cells {
        assert!(c.ratio.is_finite() && c.ratio > 0.0);
        assert!(c.ratio <= r.empirical_constant);
        assert!((c.ratio - c.p * c.full / c.srw).abs() < 1e-12);
        // The worst start has every edge closed.
        assert_eq!(c.extra["worst_eta"], 0.0);
    }
    let o = hitting_oracle(&g, 1.0, 0.5);
    assert!((r.cells[1].full - o).abs() < 1e-8 * o);
}

#[test]
fn hitting_monte_carlo_agrees_with_exact() {
    let g = Graph::cycle(4).unwrap();
    let r =
        check_hitting_comparison(&g, &[(1.0, 0.5)], HittingMode::Both { n_samples: 20_000, seed: 3 }, None).unwrap();
    assert!(r.all_pass(), "{:?}", r.verdicts);
    let c = &r.cells[0];
    assert!(c.extra["mc_worst"] <= c.full + 4.0 * c.extra["mc_worst_se"]);
    assert!(c.extra.contains_key("second_bound_ratio"));
}

#[test]
fn hitting_constant_stable_under_more_samples() {
    let g = Graph::cycle(4).unwrap();
    let run = |n| {
        check_hitting_comparison(&g, &[(1.0, 0.5)], HittingMode::MonteCarlo { n_samples: n, seed: 11 }, None)
            .unwrap()
            .empirical_constant
    };
    assert!(relative_change(run(10_000), run(20_000)) < 0.2);
}

#[test]
fn relaxation_constant_stable_under_refinement() {
    let g = Graph::cycle(4).unwrap();
    let base: Vec<(f64, f64)> = [0.25, 0.5, 1.0].iter().flat_map(|&mu| [0.2, 0.5, 0.8].map(|p| (mu, p))).collect();
    let fine: Vec<(f64, f64)> =
        [0.25, 0.375, 0.5, 0.75, 1.0].iter().flat_map(|&mu| [0.2, 0.35, 0.5, 0.65, 0.8].map(|p| (mu, p))).collect();
    let a = check_relaxation_comparison(&g, &base).unwrap();
    let b = check_relaxation_comparison(&g, &fine).unwrap();
    assert!(a.exact_checks_pass() && b.exact_checks_pass());
    assert!(a.empirical_constant.is_finite());
    assert!(relative_change(a.empirical_constant, b.empirical_constant) < 0.2);
    for c in &a.cells {
        assert!(c.ratio <= a.empirical_constant);
    }
}

#[test]
fn relaxation_at_p_one() {
    let g = Graph::cycle(4).unwrap();
    let r = check_relaxation_comparison(&g, &[(1.0, 1.0), (1.0, 0.5)]).unwrap();
    let srw = relaxation_time(&srw_chain(&g, true)).unwrap();
    assert_eq!(r.cells[0].srw, srw);
    assert!((r.cells[0].full - srw).abs() < 1e-12);
    assert!(r.cells[0].ratio <= r.empirical_constant);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn two_vertex_spectrum(mu in 0.05f64..4.0, p in 0.01f64..0.99) {
        let chain = build_full_generator(&Graph::complete(2).unwrap(), params(mu, p)).unwrap();
        let neg_q = -chain.rate_matrix_dense();
        let mut ev: Vec<f64> = neg_q.complex_eigenvalues().iter().map(|z| z.re).collect();
        ev.sort_by(f64::total_cmp);
        for (a, b) in ev.iter().zip(two_vertex_full_spectrum(mu, p)) {
            prop_assert!((a - b).abs() < 1e-9 * (1.0 + b));
        }
    }
}

#[test]
fn log_sobolev_two_vertex() {
    let g = Graph::complete(2).unwrap();
    let r = check_ls_comparison(&g, &[(1.0, 0.5)], &LogSobolevOptions::default()).unwrap();
    assert!(r.exact_checks_pass());
    let c = &r.cells[0];
    assert!(c.ratio.is_finite() && c.ratio > 0.0);
    assert!(c.extra["full_lower"] <= c.full && c.full <= c.extra["full_upper"] + 1e-12);
    assert!(c.extra["certified_ratio"] > 0.0);
    // SRW on K_2 is the symmetric two-point chain with unit rates: c_LS = 1.
    assert!((c.extra["srw_estimate"] - 1.0).abs() < 1e-6);
}

#[test]
fn log_sobolev_rhs_guard_near_p_one() {
    let pi_min: f64 = 0.5;
    let p = 0.999;
    let rhs = ls_comparison_rhs(1.0, p, 0.5, pi_min);
    let second = 1.0 / ((1.0 / pi_min).ln() * (1.0 / (p * (1.0 - p))).ln());
    assert_eq!(rhs, second);
    assert!(second < p * 0.5);
}

#[test]
fn log_sobolev_triangle_grid() {
    let g = Graph::cycle(3).unwrap();
    let opts = LogSobolevOptions {
        restarts: 8,
        iterations: 200,
        profile: ProfileOptions { sample_steps: 3_000, ..Default::default() },
        ..Default::default()
    };
    let r = check_ls_comparison(&g, &[(0.5, 0.2), (0.5, 0.8), (1.0, 0.2), (1.0, 0.8)], &opts).unwrap();
    assert!(r.exact_checks_pass());
    assert!(r.empirical_constant.is_finite() && r.empirical_constant > 0.0);
    for c in &r.cells {
        assert!(c.ratio >= r.empirical_constant);
    }
}

#[test]
fn mixing_grids_bounded_and_stable() {
    for g in [Graph::complete(2).unwrap(), Graph::cycle(3).unwrap()] {
        let base = [(0.5, 0.2), (0.5, 0.8), (1.0, 0.2), (1.0, 0.8)];
        let fine = [
            (0.5, 0.2),
            (0.5, 0.5),
            (0.5, 0.8),
            (0.75, 0.2),
            (0.75, 0.5),
            (0.75, 0.8),
            (1.0, 0.2),
            (1.0, 0.5),
            (1.0, 0.8),
        ];
        let a = mixing_upper_bound_experiment(&g, &base).unwrap();
        let b = mixing_upper_bound_experiment(&g, &fine).unwrap();
        assert!(a.exact_checks_pass() && b.exact_checks_pass(), "{:?}", a.verdicts);
        assert!(relative_change(a.empirical_constant, b.empirical_constant) < 0.2, "{}", g.name());
    }
}

#[test]
fn mixing_near_p_one_dominated_by_additive_term() {
    let g = Graph::complete(2).unwrap();
    let r = mixing_upper_bound_experiment(&g, &[(1.0, 0.99), (1.0, 0.999)]).unwrap();
    assert!(r.exact_checks_pass());
    for c in &r.cells {
        assert!(c.extra["additive_term"] > c.srw - c.extra["additive_term"]);
        assert!(c.ratio.is_finite() && c.ratio < 2.0);
    }
    assert_eq!(mixing_upper_bound_experiment(&g, &[(1.0, 1.0)]), Err(Error::DegenerateP(1.0)));
}

#[test]
fn cluster_exact_vs_monte_carlo() {
    let g = Graph::cycle(4).unwrap();
    let ex = cluster_stats(&g, 0.5, ClusterMethod::Exact, 0, None).unwrap();
    let mc = cluster_stats(&g, 0.5, ClusterMethod::MonteCarlo { samples: 200_000 }, 5, None).unwrap();
    assert!((ex.m_p - mc.m_p).abs() < 4.0 * mc.m_p_err, "{ex:?} {mc:?}");
    assert!((ex.n_p - mc.n_p).abs() < 4.0 * mc.n_p_err, "{ex:?} {mc:?}");
    // Independent count over the 16 environments of C_4.
    let (mut n_p, mut m_p) = (0.0, 0.0);
    for bits in 0..16u64 {
        let open: Vec<bool> = (0..4).map(|e| bits >> e & 1 == 1).collect();
        let (k, b) = match open.iter().filter(|&&o| o).count() {
            4 => (4, 0),
            // Three open edges still connect all four vertices.
            3 => (4, 0),
            _ => {
                // Walk outwards from vertex 0 in both directions.
                let edges = g.edges();
                let mut seen = vec![0usize];
                loop {
                    let before = seen.len();
                    for (e, &(u, v)) in edges.iter().enumerate() {
                        if open[e] && (seen.contains(&u) ^ seen.contains(&v)) {
                            seen.push(if seen.contains(&u) { v } else { u });
                        }
                    }
                    if seen.len() == before {
                        break;
                    }
                }
                let b = edges.iter().filter(|&&(u, v)| seen.contains(&u) ^ seen.contains(&v)).count();
                (seen.len(), b)
            }
        };
        n_p += k as f64 / 16.0;
        m_p += (b * k * k) as f64 / 16.0;
    }
    assert!((ex.n_p - n_p).abs() < 1e-12 && (ex.m_p - m_p).abs() < 1e-12);
    assert!(matches!(
        cluster_stats(&Graph::path(4).unwrap(), 0.5, ClusterMethod::Exact, 0, None),
        Err(Error::NotTransitive)
    ));
}

#[test]
fn moderate_growth_mechanics_on_eight_cycle() {
    let g = Graph::cycle(8).unwrap();
    let mech = moderate_growth_mechanics(&g, params(1.0, 0.2)).unwrap();
    assert!(mech.passed(), "{:?}", mech.verdicts);
    assert_eq!(mech.gamma, 4);
    assert!(mech.dirichlet <= 4.0 * 1.0 * 0.2 * mech.cluster.m_p + 1e-8);
    assert!(mech.variational_bound <= mech.t_rel_full + 1e-8);
    assert!((mech.variational_bound - mech.variance / mech.dirichlet).abs() < 1e-12 * mech.variational_bound);
    assert!((mech.dirichlet - mech.dirichlet_alt).abs() < 1e-8);
}

#[test]
fn moderate_growth_precondition_and_small_p_limit() {
    let g = Graph::cycle(6).unwrap();
    assert!(matches!(moderate_growth_lower_bound(&g, params(1.0, 0.3)), Err(Error::PreconditionFailed(_))));
    let mech = moderate_growth_mechanics(&g, params(1.0, 1e-6)).unwrap();
    assert!((mech.cluster.m_p - 2.0).abs() < 1e-4 && (mech.cluster.n_p - 1.0).abs() < 1e-4);
    assert!(moderate_growth_mechanics(&Graph::star(3).unwrap(), params(1.0, 0.3)).is_err());
}

#[test]
fn identity_suite_on_small_full_processes() {
    let opts = IdentityOptions {
        profile_fuzz_cases: 2_000,
        conditioning_fuzz_cases: 2_000,
        lagrange_cases: 50,
        commute_chains: 50,
        random_subsets: 16,
        ..Default::default()
    };
    for g in [Graph::complete(2).unwrap(), Graph::path(3).unwrap(), Graph::cycle(3).unwrap()] {
        let c = build_full_generator(&g, params(0.5, 0.3)).unwrap();
        for v in chain_identity_suite(&c, &opts).unwrap() {
            assert!(v.passed, "{}: {v:?}", g.name());
        }
    }
    for v in measure_identity_suite(&opts).unwrap() {
        assert!(v.passed, "{v:?}");
    }
}

#[test]
fn reports_serialize() {
    let g = Graph::complete(2).unwrap();
    let r = check_relaxation_comparison(&g, &[(1.0, 0.5)]).unwrap();
    let back: ComparisonReport = serde_json::from_str(&r.to_json_string()).unwrap();
    assert_eq!(back, r);
}
