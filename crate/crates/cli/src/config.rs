//! Command-line flags, TOML config files and their merge into a [`RunConfig`].
//!
//! A config file holds the common keys at top level and one table per
//! subcommand:
//!
//! ```toml
//! seed = 7
//! format = "csv"
//!
//! [localfield]
//! engine = "gw"
//! root_pmf = [0.2, 0.3, 0.5]
//! ```
//!
//! Flags given on the command line override the file.

use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use crate::error::{invalid, CliError};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    #[default]
    Csv,
    Json,
}

#[derive(Debug, Parser)]
#[command(name = "pca", version, about = "Probabilistic cellular automata on sparse graphs: engines, local fields and checks")]
pub struct Cli {
    #[command(flatten)]
    pub common: CommonArgs,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Default, Args)]
pub struct CommonArgs {
    /// TOML config file; flags override its values.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Master seed for every random stream.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Worker threads; outputs do not depend on it.
    #[arg(long, global = true, env = "PCA_WORKERS")]
    pub workers: Option<usize>,
    /// Output directory; tables go to stdout when absent.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[arg(long, global = true, value_enum)]
    pub format: Option<Format>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run the synchronous dynamics on a finite graph.
    Simulate(SimulateArgs),
    /// Run a local-field engine on a tree.
    Localfield(LocalfieldArgs),
    /// Covariance sweeps of the affine Gaussian system and the counterexamples.
    Gaussian(GaussianArgs),
    /// Structural checks: MRF, consistency, exchangeability, mass transport, rerooting.
    Verify(VerifyArgs),
    /// Empirical measures on growing random graphs against their local limit.
    Converge(ConvergeArgs),
    /// The acceptance matrix.
    Selftest(SelftestArgs),
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Simulate(_) => "simulate",
            Command::Localfield(_) => "localfield",
            Command::Gaussian(_) => "gaussian",
            Command::Verify(_) => "verify",
            Command::Converge(_) => "converge",
            Command::Selftest(_) => "selftest",
        }
    }
}

/// Finite-rule selection shared by several subcommands.
#[derive(Clone, Debug, Default, Args, Serialize, Deserialize)]
#[serde(default)]
pub struct RuleArgs {
    /// Built-in kernel: voter:Q, contact:Q, majority:EPS, flip:Q, persistence, identity.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rule: Option<String>,
    /// TOML rule file.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rule_file: Option<PathBuf>,
    /// Initial one-site law, comma separated.
    #[arg(long, value_delimiter = ',')]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub pmf: Option<Vec<f64>>,
}

#[derive(Clone, Debug, Default, Args, Serialize, Deserialize)]
#[serde(default)]
pub struct SimulateArgs {
    /// path:N, cycle:N, star:L, complete:N, tree:KAPPA:DEPTH, er:N:LAMBDA, rr:N:KAPPA.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub graph: Option<String>,
    /// Edge-list file, one "u v" pair per line.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub graph_file: Option<PathBuf>,
    #[command(flatten)]
    #[serde(flatten)]
    pub rule: RuleArgs,
    /// Horizon: number of synchronous steps.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub k: Option<usize>,
    /// Independent runs.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub replicas: Option<usize>,
    /// Vertex functional for the empirical measure: trajectory or neighborhood.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub projection: Option<String>,
}

#[derive(Clone, Debug, Default, Args, Serialize, Deserialize)]
#[serde(default)]
pub struct LocalfieldArgs {
    /// regular-exact, regular-ensemble, regular-gaussian, gw or ugw.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub engine: Option<String>,
    /// Degree κ of the regular tree.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub kappa: Option<usize>,
    /// Root offspring law (gw, ugw).
    #[arg(long, value_delimiter = ',')]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub root_pmf: Option<Vec<f64>>,
    /// Offspring law below the root (gw).
    #[arg(long, value_delimiter = ',')]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rest_pmf: Option<Vec<f64>>,
    #[command(flatten)]
    #[serde(flatten)]
    pub rule: RuleArgs,
    /// Ensemble size M.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub replicas: Option<usize>,
    /// Horizon: number of synchronous steps.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub k: Option<usize>,
    /// Key-miss policy: strict or windowed.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub policy: Option<String>,
    /// Rematch window for the windowed policy.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub window: Option<usize>,
    #[command(flatten)]
    #[serde(flatten)]
    pub affine: AffineArgs,
}

#[derive(Clone, Debug, Default, Args, Serialize, Deserialize)]
#[serde(default)]
pub struct AffineArgs {
    /// Self coefficient.
    #[arg(long, allow_hyphen_values = true)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub a: Option<f64>,
    /// Neighbor coupling.
    #[arg(long, allow_hyphen_values = true)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub b: Option<f64>,
    /// Drift.
    #[arg(long, allow_hyphen_values = true)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub c: Option<f64>,
}

#[derive(Clone, Debug, Default, Args, Serialize, Deserialize)]
#[serde(default)]
pub struct GaussianArgs {
    /// Evaluate the two conditional-covariance counterexamples.
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub counterexamples: Option<bool>,
    /// Degree κ of the regular tree.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub kappa: Option<usize>,
    #[command(flatten)]
    #[serde(flatten)]
    pub affine: AffineArgs,
    /// Affine rule file (alternative to --a/--b/--c).
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rule_file: Option<PathBuf>,
    /// Horizon: number of synchronous steps.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub k: Option<usize>,
    /// Add a per-step wall-time column (the table is then not reproducible).
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub timing: Option<bool>,
    /// Also check the sweep against the distance recurrence.
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub oracle: Option<bool>,
}

#[derive(Clone, Debug, Default, Args, Serialize, Deserialize)]
#[serde(default)]
pub struct VerifyArgs {
    /// mrf, consistency, exchangeability, transport, rerooting or all.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub suite: Option<String>,
    #[command(flatten)]
    #[serde(flatten)]
    pub rule: RuleArgs,
    /// Boundary rule for the consistency suite.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub edge_rule: Option<String>,
    /// Horizon: number of synchronous steps.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub k: Option<usize>,
    /// Monte Carlo replicas for the tree suites.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub replicas: Option<usize>,
    /// Tolerance of the exact suites.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tolerance: Option<f64>,
}

#[derive(Clone, Debug, Default, Args, Serialize, Deserialize)]
#[serde(default)]
pub struct ConvergeArgs {
    /// er:LAMBDA, rr:KAPPA or config:P0,P1,...
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub family: Option<String>,
    #[arg(long, value_delimiter = ',')]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sizes: Option<Vec<usize>>,
    #[command(flatten)]
    #[serde(flatten)]
    pub rule: RuleArgs,
    /// Horizon: number of synchronous steps.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub k: Option<usize>,
    /// Independent graphs per size.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seeds: Option<usize>,
    /// Local-field ensemble size for the UGW limit.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lf_replicas: Option<usize>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tolerance: Option<f64>,
}

#[derive(Clone, Debug, Default, Args, Serialize, Deserialize)]
#[serde(default)]
pub struct SelftestArgs {
    /// Skip the large Monte Carlo criteria.
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub quick: Option<bool>,
    /// Run a single criterion.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub only: Option<usize>,
}

/// Fully merged configuration of one run.
#[derive(Clone, Debug)]
pub struct RunConfig {
    pub command: String,
    pub seed: Option<u64>,
    pub format: Format,
    pub out: Option<PathBuf>,
    pub workers: Option<usize>,
    /// Subcommand parameters after merging, as written to the manifest.
    pub params: Value,
}

impl RunConfig {
    /// Seed, required by every stochastic subcommand.
    pub fn seed(&self) -> Result<u64, CliError> {
        self.seed.ok_or_else(|| invalid("a seed is required (--seed or `seed` in the config file)"))
    }

    /// TOML manifest of the resolved configuration, in config-file layout,
    /// so `--config manifest.toml` repeats the run.
    pub fn manifest(&self) -> Result<String, CliError> {
        let mut m = Map::new();
        m.insert("command".into(), self.command.clone().into());
        if let Some(s) = self.seed {
            m.insert("seed".into(), s.into());
        }
        m.insert("format".into(), serde_json::to_value(self.format)?);
        m.insert(self.command.clone(), self.params.clone());
        let t: toml::Value = serde_json::from_value(Value::Object(m))?;
        toml::to_string(&t).map_err(|e| CliError::Runtime(e.to_string()))
    }
}

fn strip_nulls(v: &mut Value) {
    match v {
        Value::Object(m) => {
            m.retain(|_, x| !x.is_null());
            m.values_mut().for_each(strip_nulls);
        }
        Value::Array(a) => a.iter_mut().for_each(strip_nulls),
        _ => {}
    }
}

fn read_config(path: &Path) -> Result<Map<String, Value>, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| invalid(format!("{}: {e}", path.display())))?;
    let t: toml::Table = toml::from_str(&text).map_err(|e| invalid(format!("{}: {e}", path.display())))?;
    match serde_json::to_value(t).map_err(|e| invalid(e.to_string()))? {
        Value::Object(m) => Ok(m),
        _ => Err(invalid("config root must be a table")),
    }
}

/// Overlays the flags onto the config file and validates the result.
pub fn resolve<T: Serialize + DeserializeOwned>(common: &CommonArgs, command: &str, flags: &T) -> Result<(RunConfig, T), CliError> {
    let mut file = match &common.config {
        Some(p) => read_config(p)?,
        None => Map::new(),
    };
    let mut section = match file.remove(command) {
        Some(Value::Object(m)) => m,
        Some(_) => return Err(invalid(format!("[{command}] must be a table"))),
        None => Map::new(),
    };
    for key in file.keys() {
        if !matches!(key.as_str(), "command" | "seed" | "workers" | "out" | "format" | "simulate" | "localfield" | "gaussian" | "verify" | "converge" | "selftest") {
            return Err(invalid(format!("unknown config key `{key}`")));
        }
    }
    if let Value::Object(m) = serde_json::to_value(flags).map_err(|e| invalid(e.to_string()))? {
        for (k, v) in m {
            if !v.is_null() {
                section.insert(k, v);
            }
        }
    }
    let params: T = serde_json::from_value(Value::Object(section.clone())).map_err(|e| invalid(format!("[{command}]: {e}")))?;
    let mut pv = serde_json::to_value(&params).map_err(|e| invalid(e.to_string()))?;
    strip_nulls(&mut pv);
    // every set key reappears after a round trip unless serde ignored it
    if let Some(key) = section.keys().find(|k| pv.get(k.as_str()).is_none()) {
        return Err(invalid(format!("unknown key `{key}` for {command}")));
    }
    let from_file = |k: &str| -> Result<Option<Value>, CliError> { Ok(file.get(k).cloned()) };
    let seed = match common.seed {
        Some(s) => Some(s),
        None => from_file("seed")?.map(|v| v.as_u64().ok_or_else(|| invalid("seed must be a nonnegative integer"))).transpose()?,
    };
    let workers = match common.workers {
        Some(w) => Some(w),
        None => from_file("workers")?.map(|v| v.as_u64().map(|w| w as usize).ok_or_else(|| invalid("workers must be a positive integer"))).transpose()?,
    };
    if workers == Some(0) {
        return Err(invalid("workers must be positive"));
    }
    let out = match &common.out {
        Some(o) => Some(o.clone()),
        None => from_file("out")?.map(|v| v.as_str().map(PathBuf::from).ok_or_else(|| invalid("out must be a path"))).transpose()?,
    };
    let format = match common.format {
        Some(f) => f,
        None => from_file("format")?.map(|v| serde_json::from_value(v).map_err(|_| invalid("format must be csv or json"))).transpose()?.unwrap_or_default(),
    };
    Ok((RunConfig { command: command.into(), seed, format, out, workers, params: pv }, params))
}

/// Fails unless every referenced input file exists.
pub fn require_files<'a>(paths: impl IntoIterator<Item = &'a Option<PathBuf>>) -> Result<(), CliError> {
    for p in paths.into_iter().flatten() {
        if !p.is_file() {
            return Err(invalid(format!("{}: no such file", p.display())));
        }
    }
    Ok(())
}
