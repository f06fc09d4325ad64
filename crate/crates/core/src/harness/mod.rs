//! Configuration, dataset ingestion and result persistence.
//!
//! Output layout of a run directory:
//!
//! - `manifest.json`: resolved configuration, seeds, outputs and timings.
//! - `<policy>_seed<seed>.jsonl`: one object per episode.
//! - `summary.csv`: one row per (policy, seed) run.

pub mod config;
pub mod data;

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::catalog::Catalog;
use crate::error::{Error, Result};
use crate::metrics::MetricsReport;
use crate::oracle::OfflineInstance;
use crate::sim::{self, ExperimentTrace, PolicyKind, RunSummary, World};

pub use config::{load_config, parse_config, DataSource, RunConfig};
pub use data::{
    load_interactions, load_provider_map, load_score_matrix, preprocess, write_dataset, Dataset, InteractionTable,
    LoadedScores, ProviderMap,
};

pub const ARTIFACT_VERSION: &str = env!("CARGO_PKG_VERSION");
pub const MANIFEST_FILE: &str = "manifest.json";
pub const SUMMARY_FILE: &str = "summary.csv";
pub const SUMMARY_HEADER: [&str; 10] = ["policy", "seed", "lambda", "K", "T", "ctr", "mmf", "r", "regret", "wall_ms"];

/// What was read from score and provider files.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DataReport {
    pub scores: PathBuf,
    pub providers: PathBuf,
    pub n_users: usize,
    pub n_items: usize,
    pub n_providers: usize,
    pub clamped: usize,
    pub filled: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub artifact_version: String,
    pub command: String,
    pub config: BTreeMap<String, Value>,
    pub seeds: Vec<u64>,
    pub policies: Vec<PolicyKind>,
    /// File names relative to the manifest's directory.
    pub outputs: Vec<String>,
    /// Wall-clock milliseconds per output file.
    pub timings_ms: BTreeMap<String, f64>,
    pub data: Option<DataReport>,
}

impl RunManifest {
    pub fn new(command: &str, config: &RunConfig) -> Self {
        Self {
            artifact_version: ARTIFACT_VERSION.to_string(),
            command: command.to_string(),
            config: config.entries(),
            seeds: Vec::new(),
            policies: Vec::new(),
            outputs: Vec::new(),
            timings_ms: BTreeMap::new(),
            data: None,
        }
    }

    pub fn write(&self, dir: &Path) -> Result<PathBuf> {
        let path = dir.join(MANIFEST_FILE);
        std::fs::write(&path, serde_json::to_string_pretty(self)? + "\n")?;
        Ok(path)
    }

    pub fn read(path: &Path) -> Result<Self> {
        Ok(serde_json::from_str(&std::fs::read_to_string(path)?)?)
    }
}

/// One line of an episode file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpisodeRow {
    pub manifest: String,
    pub policy: PolicyKind,
    pub seed: u64,
    #[serde(flatten)]
    pub report: MetricsReport,
}

pub fn episode_file_name(policy: PolicyKind, seed: u64) -> String {
    format!("{policy}_seed{seed}.jsonl")
}

/// Writes one JSON object per episode. The content depends only on the trace.
pub fn write_episodes(path: &Path, trace: &ExperimentTrace) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    for report in &trace.reports {
        let row = EpisodeRow {
            manifest: MANIFEST_FILE.to_string(),
            policy: trace.config.policy,
            seed: trace.config.seed,
            report: report.clone(),
        };
        serde_json::to_writer(&mut w, &row)?;
        w.write_all(b"\n")?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_episodes(path: &Path) -> Result<Vec<EpisodeRow>> {
    let mut rows = Vec::new();
    for (n, line) in BufReader::new(File::open(path)?).lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        rows.push(serde_json::from_str(&line).map_err(|e| Error::Parse {
            path: path.to_path_buf(),
            message: format!("line {}: {e}", n + 1),
        })?);
    }
    Ok(rows)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub policy: PolicyKind,
    pub seed: u64,
    pub lambda: f64,
    #[serde(rename = "K")]
    pub k: usize,
    #[serde(rename = "T")]
    pub t: usize,
    pub ctr: f64,
    pub mmf: f64,
    pub r: f64,
    pub regret: Option<f64>,
    pub wall_ms: f64,
}

impl From<&RunSummary> for SummaryRow {
    fn from(s: &RunSummary) -> Self {
        Self {
            policy: s.policy,
            seed: s.seed,
            lambda: s.lambda,
            k: s.k,
            t: s.t,
            ctr: s.ctr,
            mmf: s.mmf,
            r: s.r,
            regret: s.regret,
            wall_ms: s.wall_ms,
        }
    }
}

pub fn write_summary(path: &Path, runs: &[RunSummary]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    for s in runs {
        w.serialize(SummaryRow::from(s))?;
    }
    if runs.is_empty() {
        w.write_record(SUMMARY_HEADER)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_summary(path: &Path) -> Result<Vec<SummaryRow>> {
    let mut r = csv::Reader::from_path(path)?;
    r.deserialize().map(|row| row.map_err(Error::from)).collect()
}

/// Builds the world described by a configuration: loaded from files when a
/// data source is set, synthetic otherwise.
pub fn load_world(source: &DataSource) -> Result<(World, DataReport)> {
    let providers = load_provider_map(&source.providers)?;
    let scores = load_score_matrix(&source.scores, providers.len(), None)?;
    let report = DataReport {
        scores: source.scores.clone(),
        providers: source.providers.clone(),
        n_users: scores.matrix.n_users(),
        n_items: providers.len(),
        n_providers: providers.provider_ids.len(),
        clamped: scores.clamped,
        filled: scores.filled,
    };
    Ok((World::from_scores(providers.provider_of, scores.matrix)?, report))
}

/// Runs one (policy, seed) experiment and writes its episode file into `dir`.
pub fn run_into(config: &sim::ExperimentConfig, world: Option<&World>, dir: &Path) -> Result<(RunSummary, String)> {
    let trace = match world {
        Some(w) => sim::run_experiment_in(config, w)?,
        None => sim::run_experiment(config)?,
    };
    let name = episode_file_name(config.policy, config.seed);
    write_episodes(&dir.join(&name), &trace)?;
    Ok((trace.summary, name))
}

/// Tiny offline instance as stored on disk.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InstanceFile {
    /// One row of true scores per step.
    pub scores: Vec<Vec<f64>>,
    pub provider_of: Vec<usize>,
    pub k: usize,
    pub lambda: f64,
    /// Explicit budgets; derived from provider sizes when absent.
    #[serde(default)]
    pub gamma: Option<Vec<f64>>,
    #[serde(default)]
    pub richness: Option<f64>,
}

impl InstanceFile {
    pub fn into_instance(self) -> Result<OfflineInstance> {
        let t = self.scores.len();
        let catalog = match self.gamma {
            Some(g) => Catalog::with_budgets(self.provider_of, g, self.k, t.max(1))?,
            None => Catalog::new(self.provider_of, self.k, t.max(1), self.richness)?,
        };
        OfflineInstance::new(self.scores, catalog, self.lambda)
    }
}

pub fn load_offline_instance(path: &Path) -> Result<OfflineInstance> {
    let file: InstanceFile = serde_json::from_str(&std::fs::read_to_string(path)?).map_err(|e| Error::Parse {
        path: path.to_path_buf(),
        message: e.to_string(),
    })?;
    file.into_instance()
}

/// Reads a decision sequence: a JSON array of item lists, one per step.
pub fn load_decisions(path: &Path) -> Result<Vec<Vec<usize>>> {
    serde_json::from_str(&std::fs::read_to_string(path)?).map_err(|e| Error::Parse {
        path: path.to_path_buf(),
        message: e.to_string(),
    })
}
