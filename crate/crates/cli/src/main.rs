use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use dynperc_cli::config::{ExperimentConfig, Mode, Overrides};
use dynperc_cli::experiments::catalog;
use dynperc_cli::runner::{execute, exit_code, resolve, EXIT_ERROR};

#[derive(Parser)]
#[command(name = "dynperc", version, about = "Experiments on random walk on dynamical percolation")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run an experiment.
    Run {
        /// TOML or JSON configuration file.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        experiment: Option<String>,
        /// Graph shorthand such as `cycle:4`, `torus:3,2` or `edge_list:FILE`.
        #[arg(long)]
        graph: Option<String>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, value_delimiter = ',')]
        mu: Option<Vec<f64>>,
        #[arg(long, value_delimiter = ',')]
        p: Option<Vec<f64>>,
        #[arg(long)]
        samples: Option<usize>,
        #[arg(long, value_parser = parse_mode)]
        mode: Option<Mode>,
        /// Worker threads; overrides DYNPERC_WORKERS.
        #[arg(long)]
        workers: Option<usize>,
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// List the available experiments.
    ListExperiments,
    /// Check a configuration file without running it.
    ValidateConfig { path: PathBuf },
}

fn parse_mode(s: &str) -> Result<Mode, String> {
    match s {
        "exact" => Ok(Mode::Exact),
        "monte-carlo" => Ok(Mode::MonteCarlo),
        "both" => Ok(Mode::Both),
        _ => Err(format!("unknown mode `{s}` (exact, monte-carlo, both)")),
    }
}

/// Writes to stdout, ignoring a closed pipe.
fn emit(text: &str) {
    let _ = std::io::stdout().lock().write_all(text.as_bytes());
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match dispatch(cli.command) {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(EXIT_ERROR as u8)
        }
    }
}

fn dispatch(cmd: Command) -> anyhow::Result<i32> {
    match cmd {
        Command::ListExperiments => {
            emit(&catalog());
            Ok(0)
        }
        Command::ValidateConfig { path } => {
            let cfg = ExperimentConfig::load(&path)?;
            let (exp, cfg) = resolve(cfg)?;
            emit(&format!("{} is valid for {}\n{}", path.display(), exp.name, cfg.to_toml()));
            Ok(0)
        }
        Command::Run { config, experiment, graph, seed, mu, p, samples, mode, workers, output } => {
            let mut cfg = match &config {
                Some(path) => ExperimentConfig::load(path)?,
                None => ExperimentConfig::default(),
            };
            let o = Overrides { experiment, graph, seed, mu, p, samples, mode, workers, output_dir: output };
            let env = std::env::var("DYNPERC_WORKERS").ok();
            cfg.apply(&o, env.as_deref())?;
            let out = execute(cfg)?;
            let dir = out.paths.report_json.parent().map(|d| d.display().to_string()).unwrap_or_default();
            emit(&format!("{}outputs written to {dir}\n", out.report.summary_text()));
            Ok(exit_code(&out.report))
        }
    }
}
