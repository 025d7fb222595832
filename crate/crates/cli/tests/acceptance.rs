//! Acceptance suite: one PASS/FAIL line per criterion, at full sample sizes.
//! Runs every experiment through the library so the CLI path is exercised.

use std::process::ExitCode;
use std::time::Instant;

use dynperc_cli::config::{ExperimentConfig, GraphSpec, Mode, OneOrMany};
use dynperc_cli::experiments::EXPERIMENTS;
use dynperc_cli::report::Report;
use dynperc_cli::runner::{resolve, run};
use dynperc_core::comparison::Verdict;

fn cfg(experiment: &str, edit: impl FnOnce(&mut ExperimentConfig)) -> ExperimentConfig {
    let mut c = ExperimentConfig { experiment: experiment.into(), seed: Some(20_240_601), ..Default::default() };
    edit(&mut c);
    c
}

fn execute(c: ExperimentConfig) -> Result<Report, String> {
    let (exp, c) = resolve(c).map_err(|e| format!("{e:#}"))?;
    run(exp, &c).map_err(|e| format!("{e:#}"))
}

struct Criterion {
    id: u8,
    title: &'static str,
    lines: Vec<String>,
    passed: bool,
}

impl Criterion {
    fn new(id: u8, title: &'static str) -> Self {
        Self { id, title, lines: Vec::new(), passed: true }
    }

    fn fail(&mut self, why: String) {
        self.passed = false;
        self.lines.push(format!("FAILED: {why}"));
    }

    fn check(&mut self, ok: bool, what: String) {
        if ok {
            self.lines.push(what);
        } else {
            self.fail(what);
        }
    }

    /// Runs an experiment and requires the verdicts selected by `keep`.
    fn experiment(&mut self, c: ExperimentConfig, keep: impl Fn(&Verdict) -> bool) -> Option<Report> {
        let label = format!("{} on {}", c.experiment, c.graph.as_ref().map(|g| format!("{g:?}")).unwrap_or_default());
        match execute(c) {
            Ok(rep) => {
                for l in &rep.summary {
                    self.lines.push(format!("{label}: {l}"));
                }
                let required: Vec<&Verdict> = rep.verdicts.iter().filter(|v| keep(v)).collect();
                if required.is_empty() {
                    self.fail(format!("{label}: no verdicts"));
                }
                for v in required {
                    let line = format!("{label}: {} ({})", v.property, v.detail);
                    self.check(v.passed, line);
                }
                Some(rep)
            }
            Err(e) => {
                self.fail(format!("{label}: {e}"));
                None
            }
        }
    }

    fn print(&self, secs: f64) {
        for l in &self.lines {
            println!("    {l}");
        }
        println!("criterion {}: {} ({}; {secs:.1}s)", self.id, if self.passed { "PASS" } else { "FAIL" }, self.title);
    }
}

fn all(_: &Verdict) -> bool {
    true
}

fn one(x: f64) -> Option<OneOrMany> {
    Some(OneOrMany::One(x))
}

fn many(x: &[f64]) -> Option<OneOrMany> {
    Some(OneOrMany::Many(x.to_vec()))
}

fn criterion_1() -> Criterion {
    let mut c = Criterion::new(1, "regeneration spacing mean e^(1/mu), relative error < 1%");
    c.experiment(
        cfg("regeneration-spacing", |c| {
            c.graph = Some(GraphSpec::Cycle { n: 4 });
            c.mu = many(&[1.0, 0.5, 0.25]);
            c.samples = Some(1_000_000);
        }),
        |v| v.property.contains("relative error below 1%"),
    );
    c
}

fn criterion_2() -> Criterion {
    let mut c = Criterion::new(2, "|R| occupancy Poisson(1/mu), chi-square p > 0.01 over 1e6 events");
    c.experiment(
        cfg("infection-occupancy", |c| {
            c.graph = Some(GraphSpec::Cycle { n: 4 });
            c.mu = many(&[1.0, 0.5, 0.25]);
            c.samples = Some(1_000_000);
        }),
        all,
    );
    c
}

fn criterion_3() -> Criterion {
    let mut c = Criterion::new(3, "auxiliary chain stationarity, TV < 0.005 at 1e6 steps on C_5 and K_{1,3}");
    for g in [GraphSpec::Cycle { n: 5 }, GraphSpec::Star { leaves: 3 }] {
        c.experiment(
            cfg("aux-stationarity", |c| {
                c.graph = Some(g);
                c.samples = Some(1_000_000);
            }),
            all,
        );
    }
    c
}

fn criterion_4() -> Criterion {
    let mut c = Criterion::new(4, "environment at regeneration is pi_p and independent of X, TV < 0.01 at 1e6 samples");
    c.experiment(
        cfg("regeneration-independence", |c| {
            c.graph = Some(GraphSpec::Complete { n: 2 });
            c.samples = Some(1_000_000);
        }),
        all,
    );
    c.experiment(
        cfg("regeneration-independence", |c| {
            c.graph = Some(GraphSpec::Cycle { n: 3 });
            c.mu = one(0.5);
            c.p = one(0.3);
            c.samples = Some(1_000_000);
        }),
        all,
    );
    c
}

fn criterion_5() -> Criterion {
    let mut c = Criterion::new(5, "holding probabilities within bounds at 95% CI, 1e5 samples per state");
    c.experiment(
        cfg("holding-probability", |c| {
            c.graph = Some(GraphSpec::Cycle { n: 4 });
            c.mu = one(1.0);
            c.p = many(&[0.01, 0.2, 0.5, 0.8]);
            c.samples = Some(100_000);
        }),
        all,
    );
    c
}

fn criterion_6() -> Criterion {
    let mut c = Criterion::new(6, "auxiliary transition CI lower edge >= P_SRW p mu/(1+mu) on C_4");
    c.experiment(
        cfg("aux-transition-bound", |c| {
            c.graph = Some(GraphSpec::Cycle { n: 4 });
            c.mu = many(&[0.5, 1.0]);
            c.p = many(&[0.2, 0.5]);
            c.samples = Some(100_000);
        }),
        all,
    );
    c
}

fn criterion_7() -> Criterion {
    let mut c = Criterion::new(7, "exact identity suite on all chains with at most 64 states");
    let graphs =
        [GraphSpec::Complete { n: 2 }, GraphSpec::Path { n: 3 }, GraphSpec::Cycle { n: 3 }, GraphSpec::Cycle { n: 4 }];
    for (i, g) in graphs.into_iter().enumerate() {
        let rep = c.experiment(
            cfg("exact-identities", |c| {
                c.seed = Some(100 + i as u64);
                c.graph = Some(g);
                c.mu = one(0.5);
                c.p = one(0.3);
                c.samples = Some(100_000);
            }),
            all,
        );
        if let Some(rep) = rep {
            c.check(rep.verdicts.iter().all(|v| v.exact), format!("all {} checks exact", rep.verdicts.len()));
        }
    }
    c
}

fn criterion_8() -> Criterion {
    let mut c = Criterion::new(8, "tilted hypercube L-infinity distance at t(delta) <= delta");
    c.experiment(
        cfg("tilted-hypercube", |c| {
            c.dims = Some(vec![4, 8, 16]);
            c.mu = one(1.0);
            c.p = many(&[0.1, 0.5, 0.9]);
            c.deltas = Some(vec![0.25, 1.0]);
        }),
        all,
    );
    c
}

fn criterion_9() -> Criterion {
    let mut c = Criterion::new(9, "cluster test function mechanics on C_8 and M_p, N_p exact vs 1e6-sample MC");
    c.experiment(
        cfg("moderate-growth", |c| {
            c.graph = Some(GraphSpec::Cycle { n: 8 });
            c.mu = one(1.0);
            c.p = one(0.2);
            c.samples = Some(1_000_000);
        }),
        all,
    );
    c
}

fn criterion_10() -> Criterion {
    let mut c =
        Criterion::new(10, "comparison constants finite and stable (< 20%) under refinement and reseeding on C_4");
    let grid = |c: &mut ExperimentConfig| {
        c.graph = Some(GraphSpec::Cycle { n: 4 });
        c.mu = many(&[0.25, 0.5, 1.0]);
        c.p = many(&[0.2, 0.5, 0.8]);
        c.stability = Some(true);
    };
    c.experiment(
        cfg("hitting-comparison", |c| {
            grid(c);
            c.mode = Some(Mode::Both);
            c.samples = Some(20_000);
        }),
        all,
    );
    for name in ["relaxation-comparison", "log-sobolev-comparison", "mixing-comparison"] {
        c.experiment(cfg(name, grid), all);
    }
    c
}

/// Small budgets: the point is byte equality, not precision.
fn small(c: &mut ExperimentConfig) {
    match c.experiment.as_str() {
        "log-sobolev-comparison" => {
            c.mu = many(&[0.5, 1.0]);
            c.p = many(&[0.5]);
            c.restarts = Some(2);
            c.profile_samples = Some(500);
        }
        "hitting-comparison" => {
            c.mode = Some(Mode::Both);
            c.samples = Some(3_000);
        }
        "exact-identities" => c.samples = Some(2_000),
        "tilted-hypercube" | "relaxation-comparison" | "mixing-comparison" => {}
        "first-regeneration-growth" => {
            c.dims = Some(vec![4, 6]);
            c.samples = Some(1_500);
        }
        _ => c.samples = Some(3_000),
    }
}

fn criterion_11() -> Criterion {
    let mut c = Criterion::new(11, "byte-identical CSVs across worker counts");
    for exp in EXPERIMENTS {
        let csvs: Vec<Result<String, String>> = [1, 4]
            .into_iter()
            .map(|w| {
                execute(cfg(exp.name, |c| {
                    c.workers = Some(w);
                    small(c);
                }))
                .map(|r| r.csv)
            })
            .collect();
        match (&csvs[0], &csvs[1]) {
            (Ok(a), Ok(b)) => c.check(
                a == b && !a.is_empty(),
                format!("{}: {} bytes, identical for 1 and 4 workers: {}", exp.name, a.len(), a == b),
            ),
            (Err(e), _) | (_, Err(e)) => c.fail(format!("{}: {e}", exp.name)),
        }
    }
    c
}

fn main() -> ExitCode {
    let args: Vec<String> = std::env::args().collect();
    // libtest-style listing, so `cargo test -- --list` works.
    if args.iter().any(|a| a == "--list") {
        println!("acceptance: test");
        return ExitCode::SUCCESS;
    }
    let criteria: [fn() -> Criterion; 11] = [
        criterion_1,
        criterion_2,
        criterion_3,
        criterion_4,
        criterion_5,
        criterion_6,
        criterion_7,
        criterion_8,
        criterion_9,
        criterion_10,
        criterion_11,
    ];
    let total = Instant::now();
    let mut failed = Vec::new();
    for f in criteria {
        let clock = Instant::now();
        let c = f();
        c.print(clock.elapsed().as_secs_f64());
        if !c.passed {
            failed.push(c.id);
        }
    }
    println!("acceptance: {} of 11 criteria pass in {:.1}s", 11 - failed.len(), total.elapsed().as_secs_f64());
    if failed.is_empty() {
        ExitCode::SUCCESS
    } else {
        println!("failed criteria: {failed:?}");
        ExitCode::FAILURE
    }
}
