use dynperc_core::chain::*;
use dynperc_core::full::*;
use dynperc_core::stats::chi_square_gof;
use dynperc_core::{stationary_distribution, Graph};
use proptest::prelude::*;

fn params(mu: f64, p: f64) -> FullParams {
    FullParams::new(mu, p).unwrap()
}

#[test]
fn generator_is_reversible_with_product_law() {
    for (g, mu, p) in [
        (Graph::complete(2).unwrap(), 1.0, 0.5),
        (Graph::cycle(3).unwrap(), 1.0, 0.5),
        (Graph::path(3).unwrap(), 0.3, 0.7),
        (Graph::star(3).unwrap(), 0.5, 0.2),
    ] {
        let c = build_full_generator(&g, params(mu, p)).unwrap();
        assert!(c.is_reversible());
        assert!(c.stationarity_residual() < 1e-10);
        assert!(c.detailed_balance_residual() < 1e-10);
        let pi_v = stationary_distribution(&g).into_vec();
        let m = g.n_edges();
        for s in 0..c.n_states() {
            let (x, eta) = decode_full_state(&g, s);
            let expect = pi_v[x] * env_weight(m, eta.index(), p);
            assert!((c.pi()[s] - expect).abs() < 1e-14);
        }
    }
    let p3 = build_full_generator(&Graph::path(3).unwrap(), params(1.0, 0.5)).unwrap();
    assert_eq!(p3.n_states(), 12);
}

#[test]
fn full_relaxation_at_least_environment_relaxation() {
    for (mu, p) in [(0.25, 0.2), (1.0, 0.5), (0.5, 0.9)] {
        let c = build_full_generator(&Graph::cycle(4).unwrap(), params(mu, p)).unwrap();
        let env = tilted_hypercube_chain(4, p, mu).unwrap();
        let (tf, te) = (relaxation_time(&c).unwrap(), relaxation_time(&env).unwrap());
        assert!((te - 1.0 / mu).abs() < 1e-9);
        assert!(tf >= te * (1.0 - 1e-12));
    }
}

#[test]
fn environment_sampling_frequencies() {
    let g = Graph::cycle(4).unwrap();
    assert_eq!(sample_environment(&g, 0.0, 1).count_open(), 0);
    assert_eq!(sample_environment(&g, 1.0, 1).count_open(), 4);
    let n = 200_000;
    let mut rng = dynperc_core::rng::stream(9, 0);
    let mut open = [0u64; 4];
    for _ in 0..n {
        let env = sample_environment_with(4, 0.5, &mut rng);
        for (e, o) in open.iter_mut().enumerate() {
            *o += env.is_open(e) as u64;
        }
    }
    let sd = (0.25 / n as f64).sqrt();
    for o in open {
        assert!((o as f64 / n as f64 - 0.5).abs() < 4.0 * sd);
    }
}

#[test]
fn degenerate_environments() {
    let g = Graph::cycle(5).unwrap();
    let closed = simulate(&g, params(1.0, 0.0), 2, &Environment::all_closed(5), 50.0, 3).unwrap();
    assert!(closed.events.iter().all(|e| e.walk_pos == 2));
    let open = simulate(&g, params(1.0, 1.0), 2, &Environment::all_open(5), 200.0, 3).unwrap();
    let mut attempts = 0;
    for e in &open.events {
        if let EventKind::WalkAttempt { success, .. } = e.kind {
            assert!(success);
            attempts += 1;
        }
    }
    // Rate-1 Poisson count over 200 time units.
    assert!((attempts as f64 - 200.0).abs() < 5.0 * 200f64.sqrt());
    let times: Vec<f64> = open.events.iter().map(|e| e.time).collect();
    assert!(times.windows(2).all(|w| w[0] < w[1]));
}

#[test]
fn k2_time_fraction_is_half() {
    let g = Graph::complete(2).unwrap();
    let occ = occupation_measure(&g, params(1.0, 0.5), 0, &Environment::all_closed(1), 200_000.0, 5).unwrap();
    let at0 = occ[0] + occ[1];
    assert!((at0 - 0.5).abs() < 0.01, "{at0}");
}

#[test]
fn occupation_matches_product_law() {
    for g in [Graph::complete(2).unwrap(), Graph::cycle(3).unwrap()] {
        let pr = params(1.0, 0.4);
        let c = build_full_generator(&g, pr).unwrap();
        // Sample the state at unit-spaced times far apart relative to mixing.
        let horizon = 400_000.0;
        let traj = simulate(&g, pr, 0, &Environment::all_closed(g.n_edges()), horizon, 11).unwrap();
        let mut counts = vec![0u64; c.n_states()];
        let mut env = traj.eta0.clone();
        let mut x = traj.x0;
        let mut next = 20.0;
        for e in &traj.events {
            while e.time > next {
                counts[full_state_index(&g, x, &env)] += 1;
                next += 20.0;
            }
            if let EventKind::Refresh { edge, open } = e.kind {
                env.set(edge, open);
            }
            x = e.walk_pos;
        }
        let (_, _, pval) = chi_square_gof(&counts, c.pi());
        assert!(pval > 1e-3, "p-value {pval} on {}", g.name());
    }
}

#[test]
fn literal_refresh_matches_product_formula() {
    // P(edge open at t | open at 0) = p + (1 - p) e^{-mu t}, per edge.
    let g = Graph::path(4).unwrap();
    let (mu, p, t) = (0.7, 0.3, 1.3);
    let n = 100_000;
    let mut opens = [0u64; 3];
    let mut rng = dynperc_core::rng::stream(21, 0);
    for _ in 0..n {
        let mut s = FullState { x: 0, env: Environment::all_open(3) };
        let mut time = 0.0;
        loop {
            let snapshot = s.env.clone();
            time += s.step(&g, params(mu, p), &mut rng).0;
            if time > t {
                for (e, o) in opens.iter_mut().enumerate() {
                    *o += snapshot.is_open(e) as u64;
                }
                break;
            }
        }
    }
    let q = p + (1.0 - p) * (-mu * t).exp();
    let sd = (q * (1.0 - q) / n as f64).sqrt();
    for o in opens {
        assert!((o as f64 / n as f64 - q).abs() < 4.5 * sd);
    }
}

#[test]
fn hitting_time_examples() {
    let g = Graph::complete(2).unwrap();
    let open = Environment::all_open(1);
    let e = estimate_hitting_time_full(&g, params(1.0, 1.0), 0, &open, 0, 10, 1, None).unwrap();
    assert_eq!(e.mean, 0.0);
    let e = estimate_hitting_time_full(&g, params(1.0, 1.0), 0, &open, 1, 100_000, 1, None).unwrap();
    assert!((e.mean - 1.0).abs() < 4.0 * e.std_err);
    assert!((exact_hitting_time_full(&g, params(1.0, 1.0), 0, &open, 1).unwrap() - 1.0).abs() < 1e-12);
    // Worst start at mu = 1, p = 1/2 is the closed edge.
    let pr = params(1.0, 0.5);
    let closed = Environment::all_closed(1);
    let exact = exact_hitting_time_full(&g, pr, 0, &closed, 1).unwrap();
    // Closed-form oracle: a = 1/(mu p) + b, b = 1 / (1 + mu(1 - p)) * (1 + mu(1 - p) a).
    let (mu, p) = (1.0, 0.5);
    let a = (1.0 / (mu * p) + 1.0 / (1.0 + mu * (1.0 - p))) / (1.0 - mu * (1.0 - p) / (1.0 + mu * (1.0 - p)));
    assert!((exact - a).abs() < 1e-10, "{exact} vs {a}");
    let mc = estimate_hitting_time_full(&g, pr, 0, &closed, 1, 100_000, 2, None).unwrap();
    assert!((mc.mean - exact).abs() < 4.0 * mc.std_err, "{mc:?} vs {exact}");
}

#[test]
fn all_open_p_one_matches_srw() {
    let g = Graph::path(4).unwrap();
    let srw = hitting_times(&srw_chain(&g, true)).unwrap();
    let open = Environment::all_open(g.n_edges());
    for x in 0..4 {
        for y in 0..4 {
            let full = exact_hitting_time_full(&g, params(0.6, 1.0), x, &open, y).unwrap();
            assert!((full - srw[(x, y)]).abs() < 1e-9);
        }
    }
}

#[test]
fn tilted_examples() {
    let t = tilted_mixing_time_bound(8, 0.3, 1.0, 0.5).unwrap();
    assert!(tilted_linf_distance(8, 0.3, 1.0, t).unwrap() <= 0.5);
    let c = tilted_hypercube_chain(1, 0.5, 1.0).unwrap();
    assert!((spectral_gap(&c).unwrap() - 1.0).abs() < 1e-12);
    assert!(tilted_hypercube_chain(3, 0.0, 1.0).is_err());
    assert!(tilted_linf_distance(3, 1.0, 1.0, 1.0).is_err());
}

#[test]
fn trajectory_csv_header() {
    let g = Graph::cycle(3).unwrap();
    let traj = simulate(&g, params(1.0, 0.5), 0, &Environment::all_closed(3), 3.0, 1).unwrap();
    let csv = traj.to_csv();
    assert!(csv.starts_with("time,kind,edge,open,walk_pos\n"));
    assert_eq!(csv.lines().count(), traj.events.len() + 1);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn tilted_product_formula_matches_dense(d in 1usize..5, p in 0.05f64..0.95, mu in 0.1f64..2.0, t in 0.01f64..4.0) {
        let c = tilted_hypercube_chain(d, p, mu).unwrap();
        let dense = distances_from(&c, t, Norm::LInf).into_iter().fold(0.0, f64::max);
        let exact = tilted_linf_distance(d, p, mu, t).unwrap();
        prop_assert!((dense - exact).abs() < 1e-9 * exact.max(1.0), "{} vs {}", dense, exact);
    }

    #[test]
    fn tilted_bound_is_sufficient(d in 1usize..40, p in 0.01f64..0.99, mu in 0.05f64..2.0, delta in 0.05f64..2.0) {
        let t = tilted_mixing_time_bound(d, p, mu, delta).unwrap();
        prop_assume!(t > 0.0);
        prop_assert!(tilted_linf_distance(d, p, mu, t).unwrap() <= delta);
        let tm = tilted_linf_mixing_time(d, p, mu, delta).unwrap();
        prop_assert!(tm <= t * (1.0 + 1e-9));
    }

    #[test]
    fn mc_hitting_within_ci(seed in 0u64..1000) {
        let g = Graph::path(3).unwrap();
        let pr = params(0.8, 0.6);
        let eta = sample_environment(&g, 0.6, seed);
        let exact = exact_hitting_time_full(&g, pr, 0, &eta, 2).unwrap();
        let mc = estimate_hitting_time_full(&g, pr, 0, &eta, 2, 4096, seed, None).unwrap();
        prop_assert!((mc.mean - exact).abs() < 4.5 * mc.std_err, "{:?} vs {}", mc, exact);
    }
}
