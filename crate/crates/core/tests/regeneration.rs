use dynperc_core::full::{Environment, FullParams};
use dynperc_core::regeneration::*;
use dynperc_core::stats::{chi_square_gof, ljung_box, poisson_pmf_tail, total_variation};
use dynperc_core::{stationary_distribution, Graph};

fn params(mu: f64, p: f64) -> FullParams {
    FullParams::new(mu, p).unwrap()
}

/// `E_n[T_0]` for the birth-death chain with birth rate 1 and death rate
/// `mu k`, from the one-step recursion `mu k h_k = 1 + h_{k+1}` for
/// `h_k = E_k[T_{k-1}]`, truncated far above `n`.
fn emptying_oracle(n: usize, mu: f64) -> f64 {
    let top = n + 200;
    let mut h = vec![0.0; top + 2];
    h[top + 1] = 1.0 / (mu * (top + 1) as f64);
    for k in (1..=top).rev() {
        h[k] = (1.0 + h[k + 1]) / (mu * k as f64);
    }
    h[1..=n].iter().sum()
}

#[test]
fn oracle_agrees_with_library_formula() {
    for (n, mu) in [(1, 1.0), (4, 0.5), (80, 1.0), (5120, 1.0), (32, 0.25)] {
        let a = emptying_oracle(n, mu);
        let b = expected_emptying_time(n, mu);
        assert!((a - b).abs() < 1e-9 * a, "{n} {mu}: {a} vs {b}");
    }
}

#[test]
fn spacing_mean_is_exp_inverse_mu() {
    let g = Graph::cycle(4).unwrap();
    for (mu, seed) in [(1.0, 1), (0.5, 2)] {
        let tr = simulate_with_infection(
            &g,
            params(mu, 0.5),
            0,
            &Environment::all_open(4),
            InitialInfection::Empty,
            200_000,
            seed,
        )
        .unwrap();
        let sp = tr.spacings();
        let n = sp.len() as f64;
        let mean = sp.iter().sum::<f64>() / n;
        let sd = (sp.iter().map(|s| (s - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt();
        let truth = (1.0f64 / mu).exp();
        assert!((mean - truth).abs() < 4.0 * sd / n.sqrt(), "mu={mu}: {mean} vs {truth}");
        assert!((mean / truth - 1.0).abs() < 0.02);
    }
}

#[test]
fn spacings_uncorrelated_with_exponential_tail() {
    let g = Graph::cycle(4).unwrap();
    let tr = simulate_with_infection(
        &g,
        params(1.0, 0.4),
        0,
        &Environment::all_closed(4),
        InitialInfection::Empty,
        100_000,
        7,
    )
    .unwrap();
    let mut sp = tr.spacings();
    let (_, pval) = ljung_box(&sp, 10);
    assert!(pval > 1e-3, "Ljung-Box p = {pval}");
    // log S(t) should be linear past the bulk.
    sp.sort_by(f64::total_cmp);
    let n = sp.len() as f64;
    let pts: Vec<(f64, f64)> = (50..99)
        .map(|q| {
            let i = (q as f64 / 100.0 * n) as usize;
            (sp[i], (1.0 - i as f64 / n).ln())
        })
        .collect();
    let m = pts.len() as f64;
    let (mx, my) = (pts.iter().map(|p| p.0).sum::<f64>() / m, pts.iter().map(|p| p.1).sum::<f64>() / m);
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let syy: f64 = pts.iter().map(|p| (p.1 - my).powi(2)).sum();
    let r2 = sxy * sxy / (sxx * syy);
    assert!(sxy < 0.0 && r2 > 0.99, "r2 = {r2}");
}

#[test]
fn infection_size_is_poisson() {
    let g = Graph::cycle(4).unwrap();
    for mu in [1.0, 0.5] {
        // Samples 5 relaxation times apart are close to independent.
        let (sizes, _) = sample_infection_sizes(&g, params(mu, 0.5), 0, 5.0 / mu, 50_000, 3).unwrap();
        let cells = 10;
        let mut counts = vec![0u64; cells];
        for s in sizes {
            counts[s.min(cells - 1)] += 1;
        }
        let (_, _, pval) = chi_square_gof(&counts, &poisson_pmf_tail(1.0 / mu, cells));
        assert!(pval > 1e-3, "mu={mu}: p = {pval}");
    }
}

#[test]
fn aux_chain_is_stationary_for_pi() {
    for g in [Graph::cycle(5).unwrap(), Graph::star(3).unwrap()] {
        let ys = aux_chain_sample(&g, params(1.0, 0.5), 0, 200_000, 5).unwrap();
        let mut freq = vec![0.0; g.n_vertices()];
        for y in &ys {
            freq[*y] += 1.0 / ys.len() as f64;
        }
        let pi = stationary_distribution(&g).into_vec();
        let tv = total_variation(&freq, &pi);
        assert!(tv < 0.01, "{}: tv {tv}", g.name());
    }
}

#[test]
fn independence_at_regeneration() {
    let g = Graph::complete(2).unwrap();
    let r = regeneration_independence_test(&g, params(1.0, 0.5), 200_000, 4, None).unwrap();
    assert!(r.tv_marginal < 0.01 && r.tv_product_gap < 0.01, "{r:?}");
    for p in [0.0, 1.0] {
        let r = regeneration_independence_test(&Graph::cycle(3).unwrap(), params(1.0, p), 5_000, 4, None).unwrap();
        assert_eq!(r.tv_marginal, 0.0);
        assert_eq!(r.tv_product_gap, 0.0);
    }
    assert!(regeneration_independence_test(&Graph::cycle(5).unwrap(), params(1.0, 0.5), 10, 1, None).is_err());
}

#[test]
fn holding_probability_bounds() {
    let g = Graph::cycle(4).unwrap();
    for p in [0.2, 0.5, 0.8] {
        let est = estimate_aux_transition(&g, params(1.0, p), 20_000, 8, None).unwrap();
        for x in 0..4 {
            let (lo, hi) = est.ci(x, x);
            assert!(hi >= (1.0 - p) / 2.0 && lo <= 1.0 - p / 2.0, "p={p}: [{lo}, {hi}]");
        }
    }
    let p = 0.01;
    let est = estimate_aux_transition(&g, params(1.0, p), 20_000, 9, None).unwrap();
    let bound = 1.0 - 2.0 * std::f64::consts::E.powi(2) * p;
    for x in 0..4 {
        assert!(est.ci(x, x).1 >= bound);
    }
}

#[test]
fn aux_transition_lower_bound() {
    let g = Graph::cycle(4).unwrap();
    let (mu, p) = (1.0, 0.5);
    let est = estimate_aux_transition(&g, params(mu, p), 20_000, 10, None).unwrap();
    for x in 0..4 {
        let row: f64 = (0..4).map(|y| est.prob(x, y)).sum();
        assert!((row - 1.0).abs() < 1e-12);
        for &(y, _) in g.neighbors(x) {
            let bound = 0.5 * p * mu / (1.0 + mu);
            assert!((bound - 0.125).abs() < 1e-15);
            assert!(est.ci(x, y).0 >= bound, "({x},{y}): {:?}", est.ci(x, y));
        }
    }
}

#[test]
fn first_regeneration_matches_birth_death_oracle() {
    let one =
        first_regeneration_from_all_infected(&Graph::complete(2).unwrap(), params(1.0, 0.5), 1, 100_000, None).unwrap();
    let truth = emptying_oracle(1, 1.0);
    assert!((truth - (std::f64::consts::E - 1.0)).abs() < 1e-12);
    assert!((one.mean - truth).abs() < 4.0 * one.std_err, "{one:?}");

    let g = Graph::hypercube(5).unwrap();
    assert_eq!(g.n_edges(), 80);
    let est = first_regeneration_from_all_infected(&g, params(1.0, 0.5), 2, 20_000, None).unwrap();
    let truth = emptying_oracle(80, 1.0);
    assert!((est.mean - truth).abs() < 4.0 * est.std_err, "{est:?} vs {truth}");

    let fast = first_regeneration_from_all_infected(&g, params(2.0, 0.5), 3, 20_000, None).unwrap();
    assert!(fast.mean < est.mean);
}

#[test]
fn first_regeneration_grows_like_log_edges() {
    // Hypercubes d = 5 and d = 10 have 80 and 5120 edges.
    let ratio = emptying_oracle(5120, 1.0) / emptying_oracle(80, 1.0);
    let log_ratio = (5120f64).ln() / (80f64).ln();
    assert!((ratio / log_ratio - 1.0).abs() < 0.15, "{ratio} vs {log_ratio}");
    let big =
        first_regeneration_from_all_infected(&Graph::hypercube(10).unwrap(), params(1.0, 0.5), 4, 2_000, None).unwrap();
    assert!((big.mean - emptying_oracle(5120, 1.0)).abs() < 4.0 * big.std_err, "{big:?}");
}

#[test]
fn bookkeeping_invariant_and_refresh_rates() {
    for (g, mu, p) in
        [(Graph::cycle(4).unwrap(), 1.0, 0.5), (Graph::star(3).unwrap(), 0.3, 0.2), (Graph::path(5).unwrap(), 2.0, 0.8)]
    {
        let m = g.n_edges();
        let mut rng = dynperc_core::rng::stream(17, 0);
        let mut proc = InfectedProcess::new(&g, params(mu, p), 0, Environment::all_closed(m), InitialInfection::Empty)
            .unwrap()
            .with_audit(InitialInfection::Empty);
        for _ in 0..300_000 {
            proc.step(&mut rng);
        }
        let t = proc.time;
        let audit = proc.audit().unwrap();
        assert_eq!(audit.violations, 0);
        for &c in &audit.refresh_counts {
            assert!((c as f64 - mu * t).abs() < 5.0 * (mu * t).sqrt(), "{c} vs {}", mu * t);
        }
    }
}

#[test]
fn wald_cross_check() {
    let g = Graph::cycle(4).unwrap();
    let w = aux_wald_hitting(&g, params(1.0, 0.5), 0, 2, 20_000, 6, None).unwrap();
    let joint = (w.wald.std_err.powi(2) + w.aux_regeneration_time.std_err.powi(2)).sqrt();
    assert!((w.wald.mean - w.aux_regeneration_time.mean).abs() < 4.0 * joint, "{w:?}");
    assert!(w.direct.mean < w.aux_regeneration_time.mean);
}

#[test]
fn worker_count_does_not_change_results() {
    let g = Graph::cycle(4).unwrap();
    let a = estimate_aux_transition(&g, params(1.0, 0.5), 3_000, 12, Some(1)).unwrap();
    let b = estimate_aux_transition(&g, params(1.0, 0.5), 3_000, 12, Some(4)).unwrap();
    assert_eq!(a, b);
    let a = first_regeneration_from_all_infected(&g, params(1.0, 0.5), 3, 5_000, Some(1)).unwrap();
    let b = first_regeneration_from_all_infected(&g, params(1.0, 0.5), 3, 5_000, Some(3)).unwrap();
    assert_eq!(a, b);
}

#[test]
fn occupancy_histogram_is_poisson() {
    let g = Graph::cycle(4).unwrap();
    let h = infection_occupancy(&g, params(1.0, 0.5), 5.0, 300_000, 8, 21).unwrap();
    assert!(h.events >= 300_000);
    assert_eq!(h.counts.iter().sum::<u64>(), h.samples);
    let (_, _, pval) = chi_square_gof(&h.counts, &poisson_pmf_tail(1.0, 8));
    assert!(pval > 1e-3, "p = {pval}");
}

#[test]
fn batched_spacings_have_the_right_mean() {
    let g = Graph::star(3).unwrap();
    let a = regeneration_spacings(&g, params(0.5, 0.3), 0, 50_000, 2, Some(1)).unwrap();
    let b = regeneration_spacings(&g, params(0.5, 0.3), 0, 50_000, 2, Some(4)).unwrap();
    assert_eq!(a, b);
    let n = a.len() as f64;
    let mean = a.iter().sum::<f64>() / n;
    let sd = (a.iter().map(|s| (s - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt();
    assert!((mean - 2f64.exp()).abs() < 4.0 * sd / n.sqrt(), "{mean}");
}
