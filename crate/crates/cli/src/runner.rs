//! Resolving, running and recording an experiment.

use std::path::PathBuf;
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use anyhow::Context;
use dynperc_core::rng::with_workers;

use crate::config::ExperimentConfig;
use crate::experiments::{find, validate, Experiment, EXPERIMENTS};
use crate::report::{write_outputs, Manifest, OutputPaths, Report};

/// Exit status when every exact check passed.
pub const EXIT_OK: i32 = 0;
/// Exit status when an exact check failed.
pub const EXIT_CHECK_FAILED: i32 = 1;
/// Exit status for configuration and runtime errors.
pub const EXIT_ERROR: i32 = 2;

/// Looks the experiment up, fills in its defaults and validates the result.
pub fn resolve(mut cfg: ExperimentConfig) -> anyhow::Result<(&'static Experiment, ExperimentConfig)> {
    let exp = find(&cfg.experiment).with_context(|| {
        let names: Vec<&str> = EXPERIMENTS.iter().map(|e| e.name).collect();
        format!("unknown experiment `{}`; known: {}", cfg.experiment, names.join(", "))
    })?;
    (exp.defaults)(&mut cfg);
    if cfg.output_dir.is_none() {
        cfg.output_dir = Some(PathBuf::from("results").join(exp.name));
    }
    validate(exp, &cfg)?;
    Ok((exp, cfg))
}

/// Runs a resolved configuration on its worker pool.
pub fn run(exp: &Experiment, cfg: &ExperimentConfig) -> anyhow::Result<Report> {
    log::info!("running {} with seed {}", exp.name, cfg.seed());
    with_workers(cfg.workers, || (exp.run)(cfg))
}

pub struct Outcome {
    pub report: Report,
    pub paths: OutputPaths,
}

/// Resolve, run and write outputs.
pub fn execute(cfg: ExperimentConfig) -> anyhow::Result<Outcome> {
    let (exp, cfg) = resolve(cfg)?;
    let started = SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0);
    let clock = Instant::now();
    let report = run(exp, &cfg)?;
    let manifest = Manifest {
        tool: env!("CARGO_PKG_NAME"),
        version: env!("CARGO_PKG_VERSION"),
        experiment: exp.name.to_string(),
        seed: cfg.seed(),
        workers: cfg.workers,
        started_unix_secs: started,
        wall_time_secs: clock.elapsed().as_secs_f64(),
        exact_checks_pass: report.exact_checks_pass(),
    };
    let dir = cfg.output_dir.clone().expect("resolved");
    let paths = write_outputs(&dir, &report, &manifest, &cfg.to_toml())?;
    Ok(Outcome { report, paths })
}

pub fn exit_code(report: &Report) -> i32 {
    if report.exact_checks_pass() {
        EXIT_OK
    } else {
        EXIT_CHECK_FAILED
    }
}
