//! Experiment configuration files (TOML or JSON) and flag overrides.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context};
use dynperc_core::Graph;
use serde::{Deserialize, Serialize};

/// How to build the graph.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "builder", rename_all = "snake_case", deny_unknown_fields)]
pub enum GraphSpec {
    Cycle { n: usize },
    Path { n: usize },
    Complete { n: usize },
    Star { leaves: usize },
    Torus { n: usize, d: usize },
    Hypercube { d: usize },
    EdgeList { path: PathBuf },
}

impl GraphSpec {
    pub fn build(&self) -> dynperc_core::Result<Graph> {
        match self {
            GraphSpec::Cycle { n } => Graph::cycle(*n),
            GraphSpec::Path { n } => Graph::path(*n),
            GraphSpec::Complete { n } => Graph::complete(*n),
            GraphSpec::Star { leaves } => Graph::star(*leaves),
            GraphSpec::Torus { n, d } => Graph::torus(*n, *d),
            GraphSpec::Hypercube { d } => Graph::hypercube(*d),
            GraphSpec::EdgeList { path } => Graph::read_edge_list(path),
        }
    }

    /// Parses the flag shorthand `cycle:4`, `torus:3,2`, `edge_list:FILE`, ...
    pub fn parse_shorthand(s: &str) -> anyhow::Result<Self> {
        let (kind, arg) = s.split_once(':').with_context(|| format!("graph `{s}` is not of the form builder:args"))?;
        let int = |a: &str| a.trim().parse::<usize>().with_context(|| format!("bad integer `{a}` in graph `{s}`"));
        Ok(match kind {
            "cycle" => GraphSpec::Cycle { n: int(arg)? },
            "path" => GraphSpec::Path { n: int(arg)? },
            "complete" => GraphSpec::Complete { n: int(arg)? },
            "star" => GraphSpec::Star { leaves: int(arg)? },
            "hypercube" => GraphSpec::Hypercube { d: int(arg)? },
            "torus" => {
                let (n, d) = arg.split_once(',').with_context(|| format!("torus needs n,d in `{s}`"))?;
                GraphSpec::Torus { n: int(n)?, d: int(d)? }
            }
            "edge_list" | "file" => GraphSpec::EdgeList { path: PathBuf::from(arg) },
            other => bail!("unknown graph builder `{other}`"),
        })
    }
}

/// A scalar or a list of scalars.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum OneOrMany {
    One(f64),
    Many(Vec<f64>),
}

impl OneOrMany {
    pub fn values(&self) -> Vec<f64> {
        match self {
            OneOrMany::One(x) => vec![*x],
            OneOrMany::Many(v) => v.clone(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    Exact,
    MonteCarlo,
    Both,
}

/// One experiment run. Unset fields take the experiment's defaults; the
/// resolved configuration is written next to the outputs.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    /// May be left to `--experiment`.
    #[serde(default)]
    pub experiment: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mu: Option<OneOrMany>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub p: Option<OneOrMany>,
    /// Sample budget (regenerations, steps, events or samples, per experiment).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub samples: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mode: Option<Mode>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub workers: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output_dir: Option<PathBuf>,
    /// Hypercube dimensions (tilted-hypercube, first-regeneration-growth).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dims: Option<Vec<usize>>,
    /// Target distances (tilted-hypercube).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub deltas: Option<Vec<f64>>,
    /// Also rerun comparison grids refined and with a second seed.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub stability: Option<bool>,
    /// Multi-start count for log-Sobolev minimization.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub restarts: Option<usize>,
    /// Metropolis proposals for sampled spectral profiles.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub profile_samples: Option<usize>,
    /// Time between samples of `|R|` (infection-occupancy).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub spacing: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub x0: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub target: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub graph: Option<GraphSpec>,
}

/// Flag values that override the file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub experiment: Option<String>,
    pub graph: Option<String>,
    pub seed: Option<u64>,
    pub mu: Option<Vec<f64>>,
    pub p: Option<Vec<f64>>,
    pub samples: Option<usize>,
    pub mode: Option<Mode>,
    pub workers: Option<usize>,
    pub output_dir: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Toml,
    Json,
}

impl Format {
    pub fn of_path(path: &Path) -> Self {
        match path.extension().and_then(|e| e.to_str()) {
            Some("json") => Format::Json,
            _ => Format::Toml,
        }
    }
}

impl ExperimentConfig {
    pub fn parse(text: &str, format: Format) -> anyhow::Result<Self> {
        match format {
            Format::Toml => toml::from_str(text).map_err(|e| anyhow::anyhow!("invalid config: {}", e.message())),
            Format::Json => serde_json::from_str(text).map_err(|e| anyhow::anyhow!("invalid config: {e}")),
        }
    }

    pub fn load(path: &Path) -> anyhow::Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))?;
        Self::parse(&text, Format::of_path(path)).with_context(|| format!("in {}", path.display()))
    }

    /// Applies flags, then `DYNPERC_WORKERS` (which wins over the file but not
    /// over `--workers`).
    pub fn apply(&mut self, o: &Overrides, env_workers: Option<&str>) -> anyhow::Result<()> {
        if let Some(e) = &o.experiment {
            self.experiment = e.clone();
        }
        if let Some(g) = &o.graph {
            self.graph = Some(GraphSpec::parse_shorthand(g)?);
        }
        if let Some(s) = o.seed {
            self.seed = Some(s);
        }
        if let Some(v) = &o.mu {
            self.mu = Some(OneOrMany::Many(v.clone()));
        }
        if let Some(v) = &o.p {
            self.p = Some(OneOrMany::Many(v.clone()));
        }
        if let Some(n) = o.samples {
            self.samples = Some(n);
        }
        if let Some(m) = o.mode {
            self.mode = Some(m);
        }
        if let Some(w) = env_workers {
            let w = w.trim().parse::<usize>().with_context(|| format!("DYNPERC_WORKERS=`{w}` is not a count"))?;
            self.workers = Some(w);
        }
        if let Some(w) = o.workers {
            self.workers = Some(w);
        }
        if let Some(d) = &o.output_dir {
            self.output_dir = Some(d.clone());
        }
        if self.experiment.is_empty() {
            bail!("no experiment given");
        }
        Ok(())
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn mus(&self) -> Vec<f64> {
        self.mu.as_ref().map(OneOrMany::values).unwrap_or_default()
    }

    pub fn ps(&self) -> Vec<f64> {
        self.p.as_ref().map(OneOrMany::values).unwrap_or_default()
    }

    /// The `(mu, p)` grid, `mu` varying slowest.
    pub fn grid(&self) -> Vec<(f64, f64)> {
        let ps = self.ps();
        self.mus().into_iter().flat_map(|mu| ps.iter().map(move |&p| (mu, p))).collect()
    }

    pub fn seed(&self) -> u64 {
        self.seed.unwrap_or(0)
    }

    pub fn build_graph(&self) -> anyhow::Result<Graph> {
        let spec = self.graph.as_ref().with_context(|| format!("experiment `{}` needs a graph", self.experiment))?;
        spec.build().map_err(|e| anyhow::anyhow!("cannot build graph: {e}"))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn toml_roundtrip() {
        let text = r#"
experiment = "regeneration-spacing"
mu = [1.0, 0.5]
p = 0.5
samples = 1000
[graph]
builder = "cycle"
n = 4
"#;
        let c = ExperimentConfig::parse(text, Format::Toml).unwrap();
        assert_eq!(c.mus(), vec![1.0, 0.5]);
        assert_eq!(c.ps(), vec![0.5]);
        assert_eq!(c.graph, Some(GraphSpec::Cycle { n: 4 }));
        assert_eq!(ExperimentConfig::parse(&c.to_toml(), Format::Toml).unwrap(), c);
        assert_eq!(c.grid(), vec![(1.0, 0.5), (0.5, 0.5)]);
    }

    #[test]
    fn unknown_keys_named() {
        let err = ExperimentConfig::parse("experiment = \"x\"\nmew = 1.0\n", Format::Toml).unwrap_err();
        assert!(err.to_string().contains("mew"), "{err}");
        let err = ExperimentConfig::parse(r#"{"experiment": "x", "mew": 1}"#, Format::Json).unwrap_err();
        assert!(err.to_string().contains("mew"), "{err}");
        let err =
            ExperimentConfig::parse("experiment = \"x\"\n[graph]\nbuilder = \"cycle\"\nn = 4\nm = 2\n", Format::Toml)
                .unwrap_err();
        assert!(err.to_string().contains('m'), "{err}");
    }

    #[test]
    fn shorthand_and_overrides() {
        assert_eq!(GraphSpec::parse_shorthand("torus:3,2").unwrap(), GraphSpec::Torus { n: 3, d: 2 });
        assert!(GraphSpec::parse_shorthand("blob:3").is_err());
        let mut c = ExperimentConfig { experiment: "a".into(), workers: Some(2), ..Default::default() };
        let o = Overrides { seed: Some(9), mu: Some(vec![0.25]), ..Default::default() };
        c.apply(&o, Some("3")).unwrap();
        assert_eq!((c.seed, c.workers), (Some(9), Some(3)));
        c.apply(&Overrides { workers: Some(5), ..Default::default() }, Some("3")).unwrap();
        assert_eq!(c.workers, Some(5));
        assert!(c.apply(&Overrides::default(), Some("many")).is_err());
    }
}
