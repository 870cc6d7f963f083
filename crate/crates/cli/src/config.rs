//! Experiment configuration, read from flags or a JSON file.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::CliError;

/// Where a network comes from.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GraphSource {
    /// A graph file.
    File(PathBuf),
    /// A generator spec such as `ring:6,anon,classes=ababab`.
    Generate(String),
}

impl fmt::Display for GraphSource {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GraphSource::File(p) => write!(f, "{}", p.display()),
            GraphSource::Generate(s) => write!(f, "{s}"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum AlgorithmChoice {
    /// Enumeration knowing the exact size.
    M,
    /// Enumeration with stability counters, for any knowledge with a
    /// stopping radius.
    Mtau,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum ModeRequest {
    /// Whatever the knowledge guarantees.
    #[default]
    Auto,
    LasVegas,
    MonteCarlo,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum SchedulerChoice {
    Synchronous,
    /// Uniform choice among enabled events, seeded per trial.
    #[default]
    SeededRandom,
}

/// Everything that determines an election experiment. The worker count is
/// not part of it: results do not depend on it.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub graphs: Vec<GraphSource>,
    pub algorithm: AlgorithmChoice,
    pub knowledge: String,
    #[serde(default)]
    pub mode: ModeRequest,
    #[serde(default)]
    pub scheduler: SchedulerChoice,
    #[serde(default)]
    pub seed: u64,
    pub trials: u64,
    #[serde(default = "default_budget")]
    pub budget: u64,
    /// Directory receiving `summary.json` and `trials.csv`.
    #[serde(default)]
    pub output: Option<PathBuf>,
    /// When positive, the first trial on each network also writes its trace
    /// with a snapshot every this many events.
    #[serde(default)]
    pub snapshot_stride: usize,
    /// Check per-step invariants during every trial.
    #[serde(default)]
    pub verify: bool,
}

fn default_budget() -> u64 {
    1_000_000
}

impl ExperimentConfig {
    pub fn new(graphs: Vec<GraphSource>, algorithm: AlgorithmChoice, knowledge: impl Into<String>, trials: u64) -> Self {
        Self {
            graphs,
            algorithm,
            knowledge: knowledge.into(),
            mode: ModeRequest::Auto,
            scheduler: SchedulerChoice::SeededRandom,
            seed: 0,
            trials,
            budget: default_budget(),
            output: None,
            snapshot_stride: 0,
            verify: false,
        }
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Usage(format!("cannot read {}: {e}", path.display())))?;
        text.parse()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }
}

impl FromStr for ExperimentConfig {
    type Err = CliError;

    fn from_str(text: &str) -> Result<Self, CliError> {
        serde_json::from_str(text).map_err(|e| CliError::Usage(format!("bad config: {e}")))
    }
}
