//! Experiment results and the files written for them.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use anyhow::Context;
use dynperc_core::comparison::Verdict;
use dynperc_core::fmt_f64;
use serde::Serialize;

/// A CSV table; numbers are written with 12 significant digits.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(untagged)]
pub enum Cell {
    Num(f64),
    Int(i64),
    Text(String),
}

impl From<f64> for Cell {
    fn from(x: f64) -> Self {
        Cell::Num(x)
    }
}

impl From<usize> for Cell {
    fn from(x: usize) -> Self {
        Cell::Int(x as i64)
    }
}

impl From<u64> for Cell {
    fn from(x: u64) -> Self {
        Cell::Int(x as i64)
    }
}

impl From<bool> for Cell {
    fn from(x: bool) -> Self {
        Cell::Text(x.to_string())
    }
}

impl From<&str> for Cell {
    fn from(x: &str) -> Self {
        Cell::Text(x.to_string())
    }
}

impl From<String> for Cell {
    fn from(x: String) -> Self {
        Cell::Text(x)
    }
}

impl Table {
    pub fn new(header: &[&str]) -> Self {
        Self { header: header.iter().map(|s| s.to_string()).collect(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn to_csv(&self) -> String {
        let mut out = self.header.join(",");
        out.push('\n');
        for row in &self.rows {
            let cells: Vec<String> = row
                .iter()
                .map(|c| match c {
                    Cell::Num(x) => fmt_f64(*x),
                    Cell::Int(i) => i.to_string(),
                    Cell::Text(s) => s.clone(),
                })
                .collect();
            let _ = writeln!(out, "{}", cells.join(","));
        }
        out
    }
}

/// What an experiment returns.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Report {
    pub experiment: String,
    pub graph: Option<String>,
    pub verdicts: Vec<Verdict>,
    /// Human-readable result lines.
    pub summary: Vec<String>,
    #[serde(skip)]
    pub csv: String,
    /// Experiment-specific structured data.
    pub data: serde_json::Value,
}

impl Report {
    pub fn new(experiment: &str, graph: Option<String>) -> Self {
        Self {
            experiment: experiment.to_string(),
            graph,
            verdicts: Vec::new(),
            summary: Vec::new(),
            csv: String::new(),
            data: serde_json::Value::Null,
        }
    }

    pub fn exact_checks_pass(&self) -> bool {
        self.verdicts.iter().filter(|v| v.exact).all(|v| v.passed)
    }

    pub fn line(&mut self, s: impl Into<String>) {
        self.summary.push(s.into());
    }

    pub fn summary_text(&self) -> String {
        let mut out = format!("experiment: {}\n", self.experiment);
        if let Some(g) = &self.graph {
            let _ = writeln!(out, "graph: {g}");
        }
        for l in &self.summary {
            let _ = writeln!(out, "{l}");
        }
        if !self.verdicts.is_empty() {
            out.push_str("verdicts:\n");
            for v in &self.verdicts {
                let kind = if v.exact { "exact" } else { "statistical" };
                let status = if v.passed { "PASS" } else { "FAIL" };
                let _ = write!(out, "  [{status}] ({kind}) {}", v.property);
                if !v.detail.is_empty() {
                    let _ = write!(out, ": {}", v.detail);
                }
                out.push('\n');
            }
        }
        out
    }
}

/// Run metadata; the only output that varies between identical runs.
#[derive(Debug, Clone, Serialize)]
pub struct Manifest {
    pub tool: &'static str,
    pub version: &'static str,
    pub experiment: String,
    pub seed: u64,
    pub workers: Option<usize>,
    pub started_unix_secs: u64,
    pub wall_time_secs: f64,
    pub exact_checks_pass: bool,
}

/// Paths of the files written by [`write_outputs`].
#[derive(Debug, Clone)]
pub struct OutputPaths {
    pub report_json: PathBuf,
    pub report_csv: PathBuf,
    pub manifest: PathBuf,
    pub summary: PathBuf,
    pub config: PathBuf,
}

impl OutputPaths {
    pub fn in_dir(dir: &Path) -> Self {
        Self {
            report_json: dir.join("report.json"),
            report_csv: dir.join("report.csv"),
            manifest: dir.join("manifest.json"),
            summary: dir.join("summary.txt"),
            config: dir.join("config.toml"),
        }
    }
}

pub fn write_outputs(
    dir: &Path,
    report: &Report,
    manifest: &Manifest,
    resolved_config: &str,
) -> anyhow::Result<OutputPaths> {
    std::fs::create_dir_all(dir).with_context(|| format!("cannot create {}", dir.display()))?;
    let paths = OutputPaths::in_dir(dir);
    let write = |path: &Path, text: &str| {
        std::fs::write(path, text).with_context(|| format!("cannot write {}", path.display()))
    };
    write(&paths.report_json, &serde_json::to_string_pretty(report)?)?;
    write(&paths.report_csv, &report.csv)?;
    write(&paths.manifest, &serde_json::to_string_pretty(manifest)?)?;
    write(&paths.summary, &report.summary_text())?;
    write(&paths.config, resolved_config)?;
    Ok(paths)
}
