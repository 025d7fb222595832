//! The experiment registry.

use anyhow::{bail, Context};
use dynperc_core::chain::{LogSobolevOptions, ProfileOptions};
use dynperc_core::cluster::{cluster_stats, ClusterMethod};
use dynperc_core::comparison::{
    check_hitting_comparison, check_ls_comparison, check_relaxation_comparison, mixing_upper_bound_experiment,
    moderate_growth_lower_bound, moderate_growth_mechanics, relative_change, ComparisonReport, HittingMode, Verdict,
};
use dynperc_core::full::{
    build_full_generator, tilted_linf_distance, tilted_linf_mixing_time, tilted_mixing_time_bound, FullParams,
};
use dynperc_core::identities::{
    chain_identity_suite, measure_identity_suite, random_generator, random_reversible_generator, random_transition,
    IdentityOptions,
};
use dynperc_core::regeneration::{
    aux_chain_sample, aux_wald_hitting, estimate_aux_transition, expected_emptying_time,
    first_regeneration_from_all_infected, infection_occupancy, regeneration_independence_test, regeneration_spacings,
};
use dynperc_core::stats::{chi_square_gof, ljung_box, poisson_pmf_tail, total_variation};
use dynperc_core::{fmt_f64, stationary_distribution, Graph};
use serde_json::json;

use crate::config::{ExperimentConfig, GraphSpec, Mode, OneOrMany};
use crate::report::{Report, Table};

pub struct Experiment {
    pub name: &'static str,
    pub description: &'static str,
    /// The result the experiment reproduces.
    pub anchor: &'static str,
    /// Acceptance criteria exercising the experiment.
    pub criteria: &'static [u8],
    pub needs_graph: bool,
    pub defaults: fn(&mut ExperimentConfig),
    pub run: fn(&ExperimentConfig) -> anyhow::Result<Report>,
}

pub const EXPERIMENTS: &[Experiment] = &[
    Experiment {
        name: "regeneration-spacing",
        description: "mean, autocorrelation and tail of regeneration spacings",
        anchor: "regeneration spacings have mean e^{1/mu}",
        criteria: &[1, 11],
        needs_graph: true,
        defaults: defaults_regeneration_spacing,
        run: run_regeneration_spacing,
    },
    Experiment {
        name: "infection-occupancy",
        description: "law of the infected-set size |R| against Poisson(1/mu)",
        anchor: "|R| is a birth-death chain with rates 1 and mu |R|",
        criteria: &[2, 11],
        needs_graph: true,
        defaults: defaults_infection_occupancy,
        run: run_infection_occupancy,
    },
    Experiment {
        name: "aux-stationarity",
        description: "empirical law of the auxiliary chain against the SRW stationary law",
        anchor: "auxiliary chain is stationary for pi",
        criteria: &[3, 11],
        needs_graph: true,
        defaults: defaults_aux_stationarity,
        run: run_aux_stationarity,
    },
    Experiment {
        name: "regeneration-independence",
        description: "environment at the first regeneration: law and independence from the walker",
        anchor: "environment at regeneration is pi_p and independent of the position",
        criteria: &[4, 11],
        needs_graph: true,
        defaults: defaults_regeneration_independence,
        run: run_regeneration_independence,
    },
    Experiment {
        name: "holding-probability",
        description: "auxiliary-chain holding probabilities against their bounds",
        anchor: "holding probability bounds for the auxiliary chain",
        criteria: &[5, 11],
        needs_graph: true,
        defaults: defaults_holding_probability,
        run: run_holding_probability,
    },
    Experiment {
        name: "aux-transition-bound",
        description: "auxiliary transition probabilities against P_SRW p mu/(1+mu)",
        anchor: "auxiliary transition lower bound",
        criteria: &[6, 11],
        needs_graph: true,
        defaults: defaults_aux_transition_bound,
        run: run_aux_transition_bound,
    },
    Experiment {
        name: "exact-identities",
        description: "exact inequality suite on full processes and random chains",
        anchor: "spectral profile, hitting and Dirichlet identities",
        criteria: &[7, 11],
        needs_graph: true,
        defaults: defaults_exact_identities,
        run: run_exact_identities,
    },
    Experiment {
        name: "tilted-hypercube",
        description: "exact L-infinity distance of the p-tilted hypercube at its mixing time bound",
        anchor: "tilted hypercube mixing time bound",
        criteria: &[8, 11],
        needs_graph: false,
        defaults: defaults_tilted_hypercube,
        run: run_tilted_hypercube,
    },
    Experiment {
        name: "moderate-growth",
        description: "cluster test function, Dirichlet form bound and relaxation lower bound",
        anchor: "relaxation lower bound on moderate-growth graphs",
        criteria: &[9, 11],
        needs_graph: true,
        defaults: defaults_moderate_growth,
        run: run_moderate_growth,
    },
    Experiment {
        name: "cluster-stats",
        description: "M_p and N_p by exact enumeration and Monte Carlo",
        anchor: "percolation cluster moments M_p and N_p",
        criteria: &[9, 11],
        needs_graph: true,
        defaults: defaults_cluster_stats,
        run: run_cluster_stats,
    },
    Experiment {
        name: "hitting-comparison",
        description: "worst-case full-process hitting time against SRW hitting time / p",
        anchor: "hitting time comparison with SRW",
        criteria: &[10, 11],
        needs_graph: true,
        defaults: defaults_comparison,
        run: run_hitting_comparison,
    },
    Experiment {
        name: "relaxation-comparison",
        description: "full-process relaxation time against SRW relaxation time / (mu p)",
        anchor: "relaxation time comparison with SRW",
        criteria: &[10, 11],
        needs_graph: true,
        defaults: defaults_comparison,
        run: run_relaxation_comparison,
    },
    Experiment {
        name: "log-sobolev-comparison",
        description: "full-process log-Sobolev constant against the SRW-based lower bound",
        anchor: "log-Sobolev comparison with SRW",
        criteria: &[10, 11],
        needs_graph: true,
        defaults: defaults_log_sobolev,
        run: run_log_sobolev_comparison,
    },
    Experiment {
        name: "mixing-comparison",
        description: "L-infinity mixing time against the spectral-profile bound plus |log(1-p)|/mu",
        anchor: "mixing time comparison with SRW",
        criteria: &[10, 11],
        needs_graph: true,
        defaults: defaults_comparison,
        run: run_mixing_comparison,
    },
    Experiment {
        name: "first-regeneration-growth",
        description: "first emptying time from a fully infected start on hypercubes",
        anchor: "first regeneration time grows like log |E|",
        criteria: &[1, 11],
        needs_graph: false,
        defaults: defaults_first_regeneration,
        run: run_first_regeneration,
    },
    Experiment {
        name: "aux-wald-hitting",
        description: "hitting times from the auxiliary chain and Wald's identity against direct simulation",
        anchor: "hitting times through regenerations and Wald's identity",
        criteria: &[3, 11],
        needs_graph: true,
        defaults: defaults_aux_wald,
        run: run_aux_wald,
    },
];

pub fn find(name: &str) -> Option<&'static Experiment> {
    EXPERIMENTS.iter().find(|e| e.name == name)
}

/// `name (anchor): description`, one line per experiment.
pub fn catalog() -> String {
    EXPERIMENTS.iter().map(|e| format!("{} ({}): {}\n", e.name, e.anchor, e.description)).collect()
}

/// Independent seed for sub-run `k`.
pub fn sub_seed(seed: u64, k: usize) -> u64 {
    seed ^ (k as u64 + 1).wrapping_mul(0x9E37_79B9_7F4A_7C15)
}

fn set<T>(slot: &mut Option<T>, value: T) {
    if slot.is_none() {
        *slot = Some(value);
    }
}

fn many(v: &[f64]) -> OneOrMany {
    OneOrMany::Many(v.to_vec())
}

fn samples(cfg: &ExperimentConfig) -> usize {
    cfg.samples.unwrap_or(1)
}

fn params(mu: f64, p: f64) -> anyhow::Result<FullParams> {
    FullParams::new(mu, p).map_err(|e| anyhow::anyhow!("{e}"))
}

fn core<T>(r: dynperc_core::Result<T>) -> anyhow::Result<T> {
    r.map_err(|e| anyhow::anyhow!("{e}"))
}

fn graph_report(name: &str, g: &Graph) -> Report {
    Report::new(name, Some(g.name().to_string()))
}

/// Checks the parts of a configuration every experiment relies on.
pub fn validate(exp: &Experiment, cfg: &ExperimentConfig) -> anyhow::Result<()> {
    if exp.needs_graph {
        cfg.build_graph()?;
    }
    for (mu, p) in cfg.grid() {
        params(mu, p).context("invalid (mu, p)")?;
    }
    if cfg.samples == Some(0) {
        bail!("samples must be at least 1");
    }
    if cfg.workers == Some(0) {
        bail!("workers must be at least 1");
    }
    Ok(())
}

fn defaults_regeneration_spacing(c: &mut ExperimentConfig) {
    set(&mut c.graph, GraphSpec::Cycle { n: 4 });
    set(&mut c.mu, many(&[1.0, 0.5, 0.25]));
    set(&mut c.p, OneOrMany::One(0.5));
    set(&mut c.samples, 1_000_000);
}

fn run_regeneration_spacing(cfg: &ExperimentConfig) -> anyhow::Result<Report> {
    let g = cfg.build_graph()?;
    let mut rep = graph_report(&cfg.experiment, &g);
    let mut t = Table::new(&["mu", "p", "n", "mean", "std_err", "target", "rel_error", "ljung_box_p"]);
    let mut rows = Vec::new();
    for (i, (mu, p)) in cfg.grid().into_iter().enumerate() {
        let sp =
            core(regeneration_spacings(&g, params(mu, p)?, 0, samples(cfg), sub_seed(cfg.seed(), i), cfg.workers))?;
        let n = sp.len() as f64;
        let mean = sp.iter().sum::<f64>() / n;
        let sd =
            if sp.len() > 1 { (sp.iter().map(|s| (s - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt() } else { 0.0 };
        let se = sd / n.sqrt();
        let target = (1.0 / mu).exp();
        let rel = (mean - target).abs() / target;
        let lb = if sp.len() > 20 { ljung_box(&sp, 10).1 } else { f64::NAN };
        rep.line(format!(
            "mu={mu} p={p}: mean spacing {} vs e^(1/mu) = {} (relative error {:.4}%, n = {})",
            fmt_f64(mean),
            fmt_f64(target),
            100.0 * rel,
            sp.len()
        ));
        rep.verdicts.push(Verdict::statistical(
            format!("mean spacing matches e^(1/mu) at mu={mu} p={p}"),
            (mean - target).abs() <= 4.0 * se,
            format!("|mean - target| = {:.3e}, 4 se = {:.3e}", (mean - target).abs(), 4.0 * se),
        ));
        rep.verdicts.push(Verdict::statistical(
            format!("mean spacing relative error below 1% at mu={mu} p={p}"),
            rel < 0.01,
            format!("{:.4}%", 100.0 * rel),
        ));
        rep.verdicts.push(Verdict::statistical(
            format!("spacings uncorrelated at mu={mu} p={p}"),
            !(lb < 1e-3),
            format!("Ljung-Box p = {lb:.4}"),
        ));
        t.push(vec![
            mu.into(),
            p.into(),
            sp.len().into(),
            mean.into(),
            se.into(),
            target.into(),
            rel.into(),
            lb.into(),
        ]);
        rows.push(json!({"mu": mu, "p": p, "n": sp.len(), "mean": mean, "std_err": se, "target": target, "rel_error": rel, "ljung_box_p": lb}));
    }
    rep.csv = t.to_csv();
    rep.data = json!({ "rows": rows });
    Ok(rep)
}

fn defaults_infection_occupancy(c: &mut ExperimentConfig) {
    set(&mut c.graph, GraphSpec::Cycle { n: 4 });
    set(&mut c.mu, many(&[1.0, 0.5]));
    set(&mut c.p, OneOrMany::One(0.5));
    set(&mut c.samples, 1_000_000);
}

fn run_infection_occupancy(cfg: &ExperimentConfig) -> anyhow::Result<Report> {
    let g = cfg.build_graph()?;
    let mut rep = graph_report(&cfg.experiment, &g);
    let mut t = Table::new(&["mu", "p", "size", "observed", "expected"]);
    let mut rows = Vec::new();
    for (i, (mu, p)) in cfg.grid().into_iter().enumerate() {
        let lam = 1.0 / mu;
        // Samples a few relaxation times (1/mu) apart are nearly independent.
        let spacing = cfg.spacing.unwrap_or(5.0 / mu);
        let cells = (lam + 8.0 * lam.sqrt() + 6.0).ceil() as usize;
        let h = core(infection_occupancy(
            &g,
            params(mu, p)?,
            spacing,
            samples(cfg) as u64,
            cells,
            sub_seed(cfg.seed(), i),
        ))?;
        let probs = poisson_pmf_tail(lam, cells);
        let (stat, dof, pval) = chi_square_gof(&h.counts, &probs);
        for (k, (&o, &q)) in h.counts.iter().zip(&probs).enumerate() {
            t.push(vec![mu.into(), p.into(), k.into(), o.into(), (q * h.samples as f64).into()]);
        }
        rep.line(format!(
            "mu={mu} p={p}: chi-square {stat:.3} on {dof} dof, p-value {pval:.4} ({} samples over {} events)",
            h.samples, h.events
        ));
        rep.verdicts.push(Verdict::statistical(
            format!("|R| is Poisson(1/mu) at mu={mu} p={p}"),
            pval > 0.01,
            format!("p-value {pval:.4}"),
        ));
        rows.push(json!({"mu": mu, "p": p, "spacing": spacing, "histogram": h, "chi_square": stat, "dof": dof, "p_value": pval}));
    }
    rep.csv = t.to_csv();
    rep.data = json!({ "rows": rows });
    Ok(rep)
}

fn defaults_aux_stationarity(c: &mut ExperimentConfig) {
    set(&mut c.graph, GraphSpec::Cycle { n: 5 });
    set(&mut c.mu, OneOrMany::One(1.0));
    set(&mut c.p, OneOrMany::One(0.5));
    set(&mut c.samples, 1_000_000);
}

fn run_aux_stationarity(cfg: &ExperimentConfig) -> anyhow::Result<Report> {
    let g = cfg.build_graph()?;
    let pi = stationary_distribution(&g).into_vec();
    let mut rep = graph_report(&cfg.experiment, &g);
    let mut t = Table::new(&["mu", "p", "vertex", "count", "empirical", "pi"]);
    let mut rows = Vec::new();
    for (i, (mu, p)) in cfg.grid().into_iter().enumerate() {
        let ys =
            core(aux_chain_sample(&g, params(mu, p)?, cfg.x0.unwrap_or(0), samples(cfg), sub_seed(cfg.seed(), i)))?;
        let mut counts = vec![0u64; g.n_vertices()];
        for y in &ys {
            counts[*y] += 1;
        }
        let freq: Vec<f64> = counts.iter().map(|&c| c as f64 / ys.len() as f64).collect();
        let tv = total_variation(&freq, &pi);
        for v in 0..g.n_vertices() {
            t.push(vec![mu.into(), p.into(), v.into(), counts[v].into(), freq[v].into(), pi[v].into()]);
        }
        rep.line(format!("mu={mu} p={p}: TV(empirical, pi) = {tv:.5} over {} steps", ys.len()));
        rep.verdicts.push(Verdict::statistical(
            format!("auxiliary chain law close to pi at mu={mu} p={p}"),
            tv < 0.005,
            format!("TV {tv:.5} (threshold 0.005)"),
        ));
        rows.push(json!({"mu": mu, "p": p, "tv": tv, "counts": counts}));
    }
    rep.csv = t.to_csv();
    rep.data = json!({ "pi": pi, "rows": rows });
    Ok(rep)
}

fn defaults_regeneration_independence(c: &mut ExperimentConfig) {
    set(&mut c.graph, GraphSpec::Complete { n: 2 });
    set(&mut c.mu, OneOrMany::One(1.0));
    set(&mut c.p, OneOrMany::One(0.5));
    set(&mut c.samples, 1_000_000);
}

fn run_regeneration_independence(cfg: &ExperimentConfig) -> anyhow::Result<Report> {
    let g = cfg.build_graph()?;
    let mut rep = graph_report(&cfg.experiment, &g);
    let mut t = Table::new(&["mu", "p", "tv_marginal", "tv_product_gap"]);
    let mut rows = Vec::new();
    for (i, (mu, p)) in cfg.grid().into_iter().enumerate() {
        let r = core(regeneration_independence_test(
            &g,
            params(mu, p)?,
            samples(cfg),
            sub_seed(cfg.seed(), i),
            cfg.workers,
        ))?;
        rep.line(format!(
            "mu={mu} p={p}: TV(env, pi_p) = {:.5}, TV(joint, product) = {:.5}",
            r.tv_marginal, r.tv_product_gap
        ));
        rep.verdicts.push(Verdict::statistical(
            format!("environment at regeneration is pi_p at mu={mu} p={p}"),
            r.tv_marginal < 0.01,
            format!("TV {:.5}", r.tv_marginal),
        ));
        rep.verdicts.push(Verdict::statistical(
            format!("environment independent of position at mu={mu} p={p}"),
            r.tv_product_gap < 0.01,
            format!("TV {:.5}", r.tv_product_gap),
        ));
        t.push(vec![mu.into(), p.into(), r.tv_marginal.into(), r.tv_product_gap.into()]);
        rows.push(json!({"mu": mu, "p": p, "result": r}));
    }
    rep.csv = t.to_csv();
    rep.data = json!({ "rows": rows });
    Ok(rep)
}

fn defaults_holding_probability(c: &mut ExperimentConfig) {
    set(&mut c.graph, GraphSpec::Cycle { n: 4 });
    set(&mut c.mu, OneOrMany::One(1.0));
    set(&mut c.p, many(&[0.01, 0.2, 0.5, 0.8]));
    set(&mut c.samples, 100_000);
}

fn run_holding_probability(cfg: &ExperimentConfig) -> anyhow::Result<Report> {
    let g = cfg.build_graph()?;
    let mut rep = graph_report(&cfg.experiment, &g);
    let small_p = |p: f64| 1.0 - 2.0 * std::f64::consts::E.powi(2) * p;
    let mut t =
        Table::new(&["mu", "p", "x", "holding", "ci_low", "ci_high", "lower_bound", "upper_bound", "small_p_bound"]);
    let mut rows = Vec::new();
    for (i, (mu, p)) in cfg.grid().into_iter().enumerate() {
        let est =
            core(estimate_aux_transition(&g, params(mu, p)?, samples(cfg), sub_seed(cfg.seed(), i), cfg.workers))?;
        let (lo_b, hi_b) = ((1.0 - p) / 2.0, 1.0 - p / 2.0);
        let mut outside = Vec::new();
        let mut below_small = Vec::new();
        for x in 0..g.n_vertices() {
            let (lo, hi) = est.ci(x, x);
            if hi < lo_b || lo > hi_b {
                outside.push(format!("x={x} [{lo:.4}, {hi:.4}]"));
            }
            if hi < small_p(p) {
                below_small.push(format!("x={x} upper {hi:.4}"));
            }
            t.push(vec![
                mu.into(),
                p.into(),
                x.into(),
                est.prob(x, x).into(),
                lo.into(),
                hi.into(),
                lo_b.into(),
                hi_b.into(),
                small_p(p).into(),
            ]);
        }
        let mean_hold = (0..g.n_vertices()).map(|x| est.prob(x, x)).sum::<f64>() / g.n_vertices() as f64;
        rep.line(format!(
            "mu={mu} p={p}: mean holding probability {mean_hold:.4}, bounds [{lo_b:.4}, {hi_b:.4}], 1 - 2e^2 p = {:.4}",
            small_p(p)
        ));
        // The bounds are stated for mu = 1.
        if mu == 1.0 {
            rep.verdicts.push(Verdict::statistical(
                format!("holding probability within [(1-p)/2, 1-p/2] at p={p}"),
                outside.is_empty(),
                outside.join("; "),
            ));
            if small_p(p) > 0.0 {
                rep.verdicts.push(Verdict::statistical(
                    format!("holding probability at least 1 - 2e^2 p at p={p}"),
                    below_small.is_empty(),
                    below_small.join("; "),
                ));
            }
        }
        rows.push(json!({"mu": mu, "p": p, "estimate": est}));
    }
    rep.csv = t.to_csv();
    rep.data = json!({ "rows": rows });
    Ok(rep)
}

fn defaults_aux_transition_bound(c: &mut ExperimentConfig) {
    set(&mut c.graph, GraphSpec::Cycle { n: 4 });
    set(&mut c.mu, many(&[0.5, 1.0]));
    set(&mut c.p, many(&[0.2, 0.5]));
    set(&mut c.samples, 100_000);
}

fn run_aux_transition_bound(cfg: &ExperimentConfig) -> anyhow::Result<Report> {
    let g = cfg.build_graph()?;
    let mut rep = graph_report(&cfg.experiment, &g);
    let mut t = Table::new(&["mu", "p", "x", "y", "estimate", "ci_low", "ci_high", "bound"]);
    let mut rows = Vec::new();
    for (i, (mu, p)) in cfg.grid().into_iter().enumerate() {
        let est =
            core(estimate_aux_transition(&g, params(mu, p)?, samples(cfg), sub_seed(cfg.seed(), i), cfg.workers))?;
        let mut bad = Vec::new();
        let mut min_margin = f64::INFINITY;
        for x in 0..g.n_vertices() {
            for &(y, _) in g.neighbors(x) {
                let bound = p * mu / (1.0 + mu) / g.degree(x) as f64;
                let (lo, hi) = est.ci(x, y);
                if lo < bound {
                    bad.push(format!("({x},{y}) ci low {lo:.4} < {bound:.4}"));
                }
                min_margin = min_margin.min(lo - bound);
                t.push(vec![
                    mu.into(),
                    p.into(),
                    x.into(),
                    y.into(),
                    est.prob(x, y).into(),
                    lo.into(),
                    hi.into(),
                    bound.into(),
                ]);
            }
        }
        rep.line(format!("mu={mu} p={p}: smallest margin of CI lower edge over the bound {min_margin:.4}"));
        rep.verdicts.push(Verdict::statistical(
            format!("transition lower bound holds at mu={mu} p={p}"),
            bad.is_empty(),
            bad.join("; "),
        ));
        rows.push(json!({"mu": mu, "p": p, "estimate": est}));
    }
    rep.csv = t.to_csv();
    rep.data = json!({ "rows": rows });
    Ok(rep)
}

fn defaults_exact_identities(c: &mut ExperimentConfig) {
    set(&mut c.graph, GraphSpec::Complete { n: 2 });
    set(&mut c.mu, OneOrMany::One(0.5));
    set(&mut c.p, OneOrMany::One(0.3));
    set(&mut c.samples, 100_000);
}

/// Largest chain the identity suite is run on.
pub const IDENTITY_STATE_LIMIT: usize = 64;

fn run_exact_identities(cfg: &ExperimentConfig) -> anyhow::Result<Report> {
    let g = cfg.build_graph()?;
    let mut rep = graph_report(&cfg.experiment, &g);
    let opts = IdentityOptions {
        seed: cfg.seed(),
        profile_fuzz_cases: samples(cfg),
        conditioning_fuzz_cases: samples(cfg),
        ..Default::default()
    };
    let mut chains = Vec::new();
    for (mu, p) in cfg.grid() {
        let c = core(build_full_generator(&g, params(mu, p)?))?;
        if c.n_states() > IDENTITY_STATE_LIMIT {
            bail!(
                "full process on {} has {} states; the identity suite takes at most {IDENTITY_STATE_LIMIT}",
                g.name(),
                c.n_states()
            );
        }
        chains.push((format!("full {} mu={mu} p={p}", g.name()), c));
    }
    let mut rng = dynperc_core::rng::stream(cfg.seed(), 0x5eed);
    for n in [5, 8, 12] {
        chains.push((format!("random reversible generator n={n}"), random_reversible_generator(n, &mut rng)));
        chains.push((format!("random generator n={n}"), random_generator(n, &mut rng)));
        chains.push((format!("random transition matrix n={n}"), random_transition(n, &mut rng)));
    }
    let mut t = Table::new(&["chain", "property", "passed"]);
    let mut push = |rep: &mut Report, chain: &str, v: Verdict| {
        t.push(vec![chain.into(), v.property.replace(',', ";").into(), v.passed.into()]);
        rep.verdicts.push(Verdict { property: format!("{chain}: {}", v.property), ..v });
    };
    for (name, c) in &chains {
        for v in core(chain_identity_suite(c, &opts))? {
            push(&mut rep, name, v);
        }
    }
    for v in core(measure_identity_suite(&opts))? {
        push(&mut rep, "measures", v);
    }
    let failed = rep.verdicts.iter().filter(|v| !v.passed).count();
    rep.line(format!("{} checks over {} chains, {failed} failed", rep.verdicts.len(), chains.len()));
    rep.csv = t.to_csv();
    rep.data = json!({ "verdicts": rep.verdicts });
    Ok(rep)
}

fn defaults_tilted_hypercube(c: &mut ExperimentConfig) {
    set(&mut c.dims, vec![4, 8, 16]);
    set(&mut c.mu, OneOrMany::One(1.0));
    set(&mut c.p, many(&[0.1, 0.5, 0.9]));
    set(&mut c.deltas, vec![0.25, 1.0]);
}

fn run_tilted_hypercube(cfg: &ExperimentConfig) -> anyhow::Result<Report> {
    let mut rep = Report::new(&cfg.experiment, None);
    let mut t = Table::new(&["d", "mu", "p", "delta", "t_bound", "distance_at_bound", "mixing_time"]);
    let mut bad = Vec::new();
    let mut count = 0;
    for &d in cfg.dims.as_deref().unwrap_or_default() {
        for (mu, p) in cfg.grid() {
            for &delta in cfg.deltas.as_deref().unwrap_or_default() {
                let tb = core(tilted_mixing_time_bound(d, p, mu, delta))?;
                let dist = core(tilted_linf_distance(d, p, mu, tb))?;
                let tm = core(tilted_linf_mixing_time(d, p, mu, delta))?;
                if dist > delta {
                    bad.push(format!("d={d} mu={mu} p={p} delta={delta}: {dist}"));
                }
                count += 1;
                t.push(vec![d.into(), mu.into(), p.into(), delta.into(), tb.into(), dist.into(), tm.into()]);
            }
        }
    }
    rep.line(format!("{count} cases, {} with distance above delta at t(delta)", bad.len()));
    rep.verdicts.push(Verdict::exact(
        "L-infinity distance at t(delta) is at most delta",
        bad.is_empty(),
        bad.join("; "),
    ));
    rep.csv = t.to_csv();
    rep.data = json!({ "cases": count });
    Ok(rep)
}

fn defaults_moderate_growth(c: &mut ExperimentConfig) {
    set(&mut c.graph, GraphSpec::Cycle { n: 8 });
    set(&mut c.mu, OneOrMany::One(1.0));
    set(&mut c.p, OneOrMany::One(0.2));
    set(&mut c.samples, 1_000_000);
}

/// Two-sided 99% normal quantile, Bonferroni-corrected for two comparisons.
const Z_TWO_99: f64 = 2.807_033_768_343_811;

fn run_moderate_growth(cfg: &ExperimentConfig) -> anyhow::Result<Report> {
    let g = cfg.build_graph()?;
    let mut rep = graph_report(&cfg.experiment, &g);
    let mut t = Table::new(&[
        "mu",
        "p",
        "gamma",
        "m_p",
        "n_p",
        "m_p_mc",
        "m_p_mc_se",
        "n_p_mc",
        "n_p_mc_se",
        "dirichlet",
        "dirichlet_bound",
        "variance",
        "variational_bound",
        "t_rel_full",
        "lower_bound",
        "ratio",
    ]);
    let mut rows = Vec::new();
    for (i, (mu, p)) in cfg.grid().into_iter().enumerate() {
        let q = params(mu, p)?;
        let mech = core(moderate_growth_mechanics(&g, q))?;
        let mc = core(cluster_stats(
            &g,
            p,
            ClusterMethod::MonteCarlo { samples: samples(cfg) },
            sub_seed(cfg.seed(), i),
            cfg.workers,
        ))?;
        let agree = (mc.m_p - mech.cluster.m_p).abs() <= Z_TWO_99 * mc.m_p_err
            && (mc.n_p - mech.cluster.n_p).abs() <= Z_TWO_99 * mc.n_p_err;
        let (bound, ratio) = match moderate_growth_lower_bound(&g, q) {
            Ok(b) => {
                rep.line(format!(
                    "mu={mu} p={p}: lower bound {} , t_rel/bound = {}",
                    fmt_f64(b.bound),
                    fmt_f64(b.ratio)
                ));
                (b.bound, b.ratio)
            }
            Err(dynperc_core::Error::PreconditionFailed(why)) => {
                rep.line(format!("mu={mu} p={p}: lower bound not applicable ({why})"));
                (f64::NAN, f64::NAN)
            }
            Err(e) => return Err(anyhow::anyhow!("{e}")),
        };
        rep.line(format!(
            "mu={mu} p={p}: M_p = {} N_p = {}; E(f,f) = {} <= 4 mu p M_p = {}; Var/E = {} <= t_rel = {}",
            fmt_f64(mech.cluster.m_p),
            fmt_f64(mech.cluster.n_p),
            fmt_f64(mech.dirichlet),
            fmt_f64(mech.dirichlet_bound),
            fmt_f64(mech.variational_bound),
            fmt_f64(mech.t_rel_full)
        ));
        for v in &mech.verdicts {
            rep.verdicts.push(Verdict { property: format!("{} at mu={mu} p={p}", v.property), ..v.clone() });
        }
        rep.verdicts.push(Verdict::statistical(
            format!("cluster moments: exact and Monte Carlo agree at p={p}"),
            agree,
            format!(
                "M_p {} vs {} +- {}; N_p {} vs {} +- {}",
                mech.cluster.m_p, mc.m_p, mc.m_p_err, mech.cluster.n_p, mc.n_p, mc.n_p_err
            ),
        ));
        t.push(vec![
            mu.into(),
            p.into(),
            mech.gamma.into(),
            mech.cluster.m_p.into(),
            mech.cluster.n_p.into(),
            mc.m_p.into(),
            mc.m_p_err.into(),
            mc.n_p.into(),
            mc.n_p_err.into(),
            mech.dirichlet.into(),
            mech.dirichlet_bound.into(),
            mech.variance.into(),
            mech.variational_bound.into(),
            mech.t_rel_full.into(),
            bound.into(),
            ratio.into(),
        ]);
        rows.push(json!({"mu": mu, "p": p, "mechanics": mech, "monte_carlo": mc, "bound": bound, "ratio": ratio}));
    }
    rep.csv = t.to_csv();
    rep.data = json!({ "rows": rows });
    Ok(rep)
}

fn defaults_cluster_stats(c: &mut ExperimentConfig) {
    set(&mut c.graph, GraphSpec::Cycle { n: 4 });
    set(&mut c.p, many(&[0.0, 0.5, 1.0]));
    set(&mut c.samples, 1_000_000);
    set(&mut c.mode, Mode::Both);
}

fn run_cluster_stats(cfg: &ExperimentConfig) -> anyhow::Result<Report> {
    let g = cfg.build_graph()?;
    let mut rep = graph_report(&cfg.experiment, &g);
    let mode = cfg.mode.unwrap_or(Mode::Both);
    let mut t = Table::new(&["p", "method", "m_p", "m_p_se", "n_p", "n_p_se"]);
    let mut rows = Vec::new();
    for (i, p) in cfg.ps().into_iter().enumerate() {
        let exact = if mode != Mode::MonteCarlo {
            Some(core(cluster_stats(&g, p, ClusterMethod::Exact, 0, None))?)
        } else {
            None
        };
        let mc = if mode != Mode::Exact {
            let m = ClusterMethod::MonteCarlo { samples: samples(cfg) };
            Some(core(cluster_stats(&g, p, m, sub_seed(cfg.seed(), i), cfg.workers))?)
        } else {
            None
        };
        for s in exact.iter().chain(&mc) {
            let method = if s.method == ClusterMethod::Exact { "exact" } else { "monte-carlo" };
            t.push(vec![p.into(), method.into(), s.m_p.into(), s.m_p_err.into(), s.n_p.into(), s.n_p_err.into()]);
            rep.line(format!("p={p} {method}: M_p = {} N_p = {}", fmt_f64(s.m_p), fmt_f64(s.n_p)));
        }
        if let Some(e) = &exact {
            if p == 0.0 {
                let deg = g.degree(0) as f64;
                rep.verdicts.push(Verdict::exact(
                    "p=0: N_p = 1 and M_p = deg",
                    e.n_p == 1.0 && e.m_p == deg,
                    format!("{e:?}"),
                ));
            }
            if p == 1.0 {
                let n = g.n_vertices() as f64;
                rep.verdicts.push(Verdict::exact(
                    "p=1: N_p = |V| and M_p = 0",
                    e.n_p == n && e.m_p == 0.0,
                    format!("{e:?}"),
                ));
            }
        }
        if let (Some(e), Some(m)) = (&exact, &mc) {
            let ok = |a: f64, b: f64, se: f64| (a - b).abs() <= Z_TWO_99 * se || a == b;
            rep.verdicts.push(Verdict::statistical(
                format!("exact and Monte Carlo agree at p={p}"),
                ok(e.m_p, m.m_p, m.m_p_err) && ok(e.n_p, m.n_p, m.n_p_err),
                format!("M_p {} vs {}; N_p {} vs {}", e.m_p, m.m_p, e.n_p, m.n_p),
            ));
        }
        rows.push(json!({"p": p, "exact": exact, "monte_carlo": mc}));
    }
    rep.csv = t.to_csv();
    rep.data = json!({ "rows": rows });
    Ok(rep)
}

fn defaults_comparison(c: &mut ExperimentConfig) {
    set(&mut c.graph, GraphSpec::Cycle { n: 4 });
    set(&mut c.mu, many(&[0.25, 0.5, 1.0]));
    set(&mut c.p, many(&[0.2, 0.5, 0.8]));
    set(&mut c.stability, false);
}

/// The grid with midpoints inserted between consecutive values of each axis.
pub fn refine(values: &[f64]) -> Vec<f64> {
    let mut out = Vec::with_capacity(2 * values.len());
    for (i, &v) in values.iter().enumerate() {
        if i > 0 {
            out.push(0.5 * (values[i - 1] + v));
        }
        out.push(v);
    }
    out
}

fn refined_grid(cfg: &ExperimentConfig) -> Vec<(f64, f64)> {
    let ps = refine(&cfg.ps());
    refine(&cfg.mus()).into_iter().flat_map(|mu| ps.iter().map(move |&p| (mu, p))).collect()
}

/// Fills a report from a comparison, adding a refinement (and, for Monte
/// Carlo, a reseeding) stability verdict when requested.
fn comparison_report(
    cfg: &ExperimentConfig,
    g: &Graph,
    base: ComparisonReport,
    refined: Option<ComparisonReport>,
    reseeded: Option<ComparisonReport>,
) -> Report {
    let mut rep = graph_report(&cfg.experiment, g);
    rep.line(format!(
        "empirical constant ({:?} ratio over {} cells): {}",
        base.constant_kind,
        base.cells.len(),
        fmt_f64(base.empirical_constant)
    ));
    rep.verdicts = base.verdicts.clone();
    let mut extra = serde_json::Map::new();
    for (label, other) in [("refined grid", &refined), ("second seed", &reseeded)] {
        if let Some(o) = other {
            let change = relative_change(base.empirical_constant, o.empirical_constant);
            rep.line(format!(
                "{label}: constant {} (relative change {:.2}%)",
                fmt_f64(o.empirical_constant),
                100.0 * change
            ));
            rep.verdicts.push(Verdict::statistical(
                format!("empirical constant stable under {label}"),
                change < 0.2,
                format!("relative change {change:.4}"),
            ));
            for v in &o.verdicts {
                rep.verdicts.push(Verdict { property: format!("{label}: {}", v.property), ..v.clone() });
            }
            extra.insert(label.replace(' ', "_"), serde_json::to_value(o).expect("serializes"));
        }
    }
    rep.csv = base.to_csv();
    rep.data = json!({ "report": base, "stability": extra });
    rep
}

fn hitting_mode(cfg: &ExperimentConfig, seed: u64) -> HittingMode {
    let n_samples = cfg.samples.unwrap_or(20_000);
    match cfg.mode.unwrap_or(Mode::Exact) {
        Mode::Exact => HittingMode::Exact,
        Mode::MonteCarlo => HittingMode::MonteCarlo { n_samples, seed },
        Mode::Both => HittingMode::Both { n_samples, seed },
    }
}

fn run_hitting_comparison(cfg: &ExperimentConfig) -> anyhow::Result<Report> {
    let g = cfg.build_graph()?;
    let seed = cfg.seed();
    let base = core(check_hitting_comparison(&g, &cfg.grid(), hitting_mode(cfg, seed), cfg.workers))?;
    let (refined, reseeded) = if cfg.stability == Some(true) {
        let r = core(check_hitting_comparison(&g, &refined_grid(cfg), hitting_mode(cfg, seed), cfg.workers))?;
        let s = if cfg.mode.unwrap_or(Mode::Exact) == Mode::Exact {
            None
        } else {
            Some(core(check_hitting_comparison(&g, &cfg.grid(), hitting_mode(cfg, sub_seed(seed, 1)), cfg.workers))?)
        };
        (Some(r), s)
    } else {
        (None, None)
    };
    let mc = (mc_constant(&base), reseeded.as_ref().and_then(mc_constant));
    let mut rep = comparison_report(cfg, &g, base, refined, reseeded);
    if let (Some(a), Some(b)) = mc {
        let change = relative_change(a, b);
        rep.line(format!(
            "Monte Carlo constant {} vs {} with the second seed (relative change {:.2}%)",
            fmt_f64(a),
            fmt_f64(b),
            100.0 * change
        ));
        rep.verdicts.push(Verdict::statistical(
            "Monte Carlo constant stable under second seed",
            change < 0.2,
            format!("relative change {change:.4}"),
        ));
    }
    Ok(rep)
}

/// Largest `p t_hit / t_hit^SRW` over the grid using the Monte Carlo worst case.
fn mc_constant(r: &ComparisonReport) -> Option<f64> {
    let ratios: Option<Vec<f64>> = r.cells.iter().map(|c| c.extra.get("mc_worst").map(|w| c.p * w / c.srw)).collect();
    ratios.map(|v| v.into_iter().fold(f64::NEG_INFINITY, f64::max))
}

fn run_relaxation_comparison(cfg: &ExperimentConfig) -> anyhow::Result<Report> {
    let g = cfg.build_graph()?;
    let base = core(check_relaxation_comparison(&g, &cfg.grid()))?;
    let refined = if cfg.stability == Some(true) {
        Some(core(check_relaxation_comparison(&g, &refined_grid(cfg)))?)
    } else {
        None
    };
    Ok(comparison_report(cfg, &g, base, refined, None))
}

fn defaults_log_sobolev(c: &mut ExperimentConfig) {
    defaults_comparison(c);
    set(&mut c.restarts, 20);
    set(&mut c.profile_samples, 5_000);
}

fn ls_options(cfg: &ExperimentConfig, seed: u64) -> LogSobolevOptions {
    let d = LogSobolevOptions::default();
    LogSobolevOptions {
        restarts: cfg.restarts.unwrap_or(d.restarts),
        seed,
        profile: ProfileOptions {
            sample_steps: cfg.profile_samples.unwrap_or(d.profile.sample_steps),
            seed,
            ..d.profile
        },
        ..d
    }
}

fn run_log_sobolev_comparison(cfg: &ExperimentConfig) -> anyhow::Result<Report> {
    let g = cfg.build_graph()?;
    let seed = cfg.seed();
    let base = core(check_ls_comparison(&g, &cfg.grid(), &ls_options(cfg, seed)))?;
    let (refined, reseeded) = if cfg.stability == Some(true) {
        (
            Some(core(check_ls_comparison(&g, &refined_grid(cfg), &ls_options(cfg, seed)))?),
            Some(core(check_ls_comparison(&g, &cfg.grid(), &ls_options(cfg, sub_seed(seed, 1))))?),
        )
    } else {
        (None, None)
    };
    Ok(comparison_report(cfg, &g, base, refined, reseeded))
}

fn run_mixing_comparison(cfg: &ExperimentConfig) -> anyhow::Result<Report> {
    let g = cfg.build_graph()?;
    let base = core(mixing_upper_bound_experiment(&g, &cfg.grid()))?;
    let refined = if cfg.stability == Some(true) {
        Some(core(mixing_upper_bound_experiment(&g, &refined_grid(cfg)))?)
    } else {
        None
    };
    let mut rep = comparison_report(cfg, &g, base.clone(), refined, None);
    let frac = base.cells.iter().map(|c| c.extra["env_fraction"]).fold(f64::INFINITY, f64::min);
    rep.line(format!("environment-only mixing time is at least {frac:.4} of |log(1-p)|/mu on every cell"));
    Ok(rep)
}

fn defaults_first_regeneration(c: &mut ExperimentConfig) {
    set(&mut c.dims, vec![5, 6, 7, 8, 9, 10]);
    set(&mut c.mu, OneOrMany::One(1.0));
    set(&mut c.p, OneOrMany::One(0.5));
    set(&mut c.samples, 2_000);
}

fn run_first_regeneration(cfg: &ExperimentConfig) -> anyhow::Result<Report> {
    let mut rep = Report::new(&cfg.experiment, None);
    let mut t = Table::new(&["d", "edges", "mu", "p", "mean", "std_err", "exact", "log_edges"]);
    let dims = cfg.dims.clone().unwrap_or_default();
    let mut rows = Vec::new();
    let mut by_mu: Vec<(f64, Vec<(usize, f64, f64)>)> = Vec::new();
    let mut k = 0;
    for (mu, p) in cfg.grid() {
        let mut series = Vec::new();
        for &d in &dims {
            let g = core(Graph::hypercube(d))?;
            let m = g.n_edges();
            let est = core(first_regeneration_from_all_infected(
                &g,
                params(mu, p)?,
                sub_seed(cfg.seed(), k),
                samples(cfg),
                cfg.workers,
            ))?;
            k += 1;
            let exact = expected_emptying_time(m, mu);
            rep.verdicts.push(Verdict::statistical(
                format!("simulated mean matches the birth-death value at d={d} mu={mu}"),
                (est.mean - exact).abs() <= 4.0 * est.std_err,
                format!("{} vs {}", fmt_f64(est.mean), fmt_f64(exact)),
            ));
            t.push(vec![
                d.into(),
                m.into(),
                mu.into(),
                p.into(),
                est.mean.into(),
                est.std_err.into(),
                exact.into(),
                (m as f64).ln().into(),
            ]);
            rows.push(json!({"d": d, "edges": m, "mu": mu, "p": p, "estimate": est, "exact": exact}));
            series.push((m, est.mean, exact));
        }
        if let (Some(first), Some(last)) = (series.first(), series.last()) {
            if series.len() > 1 {
                let log_ratio = (last.0 as f64).ln() / (first.0 as f64).ln();
                let mc_ratio = last.1 / first.1;
                let exact_ratio = last.2 / first.2;
                let dev = (mc_ratio / log_ratio - 1.0).abs();
                rep.line(format!(
                    "mu={mu}: mean ratio {mc_ratio:.4} (exact {exact_ratio:.4}) between |E|={} and |E|={}, log ratio {log_ratio:.4}",
                    last.0, first.0
                ));
                rep.verdicts.push(Verdict::statistical(
                    format!("growth consistent with log |E| within 15% at mu={mu}"),
                    dev < 0.15,
                    format!("deviation {:.2}%", 100.0 * dev),
                ));
            }
        }
        by_mu.push((mu, series));
    }
    by_mu.sort_by(|a, b| a.0.total_cmp(&b.0));
    for w in by_mu.windows(2) {
        let slower = w[0].1.iter().zip(&w[1].1).all(|(a, b)| a.1 > b.1);
        rep.verdicts.push(Verdict::statistical(
            format!("larger mu empties faster (mu={} vs {})", w[0].0, w[1].0),
            slower,
            String::new(),
        ));
    }
    rep.csv = t.to_csv();
    rep.data = json!({ "rows": rows });
    Ok(rep)
}

fn defaults_aux_wald(c: &mut ExperimentConfig) {
    set(&mut c.graph, GraphSpec::Cycle { n: 4 });
    set(&mut c.mu, OneOrMany::One(1.0));
    set(&mut c.p, OneOrMany::One(0.5));
    set(&mut c.samples, 100_000);
    set(&mut c.x0, 0);
    set(&mut c.target, 2);
}

fn run_aux_wald(cfg: &ExperimentConfig) -> anyhow::Result<Report> {
    let g = cfg.build_graph()?;
    let mut rep = graph_report(&cfg.experiment, &g);
    let (x0, target) = (cfg.x0.unwrap_or(0), cfg.target.unwrap_or(0));
    let mut t =
        Table::new(&["mu", "p", "direct", "direct_se", "aux_time", "aux_time_se", "aux_steps", "wald", "wald_se"]);
    let mut rows = Vec::new();
    for (i, (mu, p)) in cfg.grid().into_iter().enumerate() {
        let w =
            core(aux_wald_hitting(&g, params(mu, p)?, x0, target, samples(cfg), sub_seed(cfg.seed(), i), cfg.workers))?;
        let joint = w.wald.std_err.hypot(w.aux_regeneration_time.std_err);
        rep.line(format!(
            "mu={mu} p={p}: direct {} ; through regenerations {} ; Wald {}",
            fmt_f64(w.direct.mean),
            fmt_f64(w.aux_regeneration_time.mean),
            fmt_f64(w.wald.mean)
        ));
        rep.verdicts.push(Verdict::statistical(
            format!("Wald estimate matches regeneration time at mu={mu} p={p}"),
            (w.wald.mean - w.aux_regeneration_time.mean).abs() <= Z_TWO_99 * joint,
            format!("difference {:.4e}, joint se {:.4e}", (w.wald.mean - w.aux_regeneration_time.mean).abs(), joint),
        ));
        t.push(vec![
            mu.into(),
            p.into(),
            w.direct.mean.into(),
            w.direct.std_err.into(),
            w.aux_regeneration_time.mean.into(),
            w.aux_regeneration_time.std_err.into(),
            w.aux_steps.mean.into(),
            w.wald.mean.into(),
            w.wald.std_err.into(),
        ]);
        rows.push(json!({"mu": mu, "p": p, "result": w}));
    }
    rep.csv = t.to_csv();
    rep.data = json!({ "rows": rows });
    Ok(rep)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn registry_names_unique_and_covered() {
        let mut names: Vec<&str> = EXPERIMENTS.iter().map(|e| e.name).collect();
        names.sort();
        names.dedup();
        assert_eq!(names.len(), EXPERIMENTS.len());
        assert!(EXPERIMENTS.len() >= 12);
        assert!(EXPERIMENTS.iter().all(|e| !e.criteria.is_empty()));
    }

    #[test]
    fn refine_inserts_midpoints() {
        assert_eq!(refine(&[0.2, 0.5, 0.8]), vec![0.2, 0.35, 0.5, 0.65, 0.8]);
        assert_eq!(refine(&[1.0]), vec![1.0]);
    }
}
