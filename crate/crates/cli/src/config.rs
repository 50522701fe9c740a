//! Training flags, the optional JSON config file, and the run manifest.
//!
//! Every tunable is an `Option` on the command line so that an explicit flag
//! can be told apart from an omitted one: flag, then config file, then the
//! built-in default.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, ValueEnum};
use gforce::{ForceParams, SpeedSchedule, TrainConfig};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Schedule {
    Decay,
    Constant,
}

impl From<Schedule> for SpeedSchedule {
    fn from(s: Schedule) -> Self {
        match s {
            Schedule::Decay => SpeedSchedule::Decay,
            Schedule::Constant => SpeedSchedule::Constant,
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct TrainArgs {
    /// JSON file with default values for any of the flags below.
    #[arg(long, value_name = "FILE")]
    pub config: Option<PathBuf>,
    /// Embedding dimension [default: 100; 2 for grid-verify]
    #[arg(long)]
    pub dim: Option<usize>,
    /// Attraction strength [default: 1.0]
    #[arg(long)]
    pub p: Option<f64>,
    /// Repulsion strength [default: 5.0]
    #[arg(long)]
    pub q: Option<f64>,
    /// Distance bias [default: 0.01]
    #[arg(long)]
    pub bias: Option<f64>,
    /// Random seed for initialization [default: 0]
    #[arg(long)]
    pub seed: Option<u64>,
    /// Iteration cap [default: 500]
    #[arg(long)]
    pub max_iters: Option<usize>,
    /// Relative energy change treated as stable [default: 1e-4]
    #[arg(long)]
    pub tol: Option<f64>,
    /// Consecutive stable iterations needed to stop [default: 10]
    #[arg(long)]
    pub patience: Option<usize>,
    /// Initial learning speed [default: 0.1]
    #[arg(long)]
    pub h0: Option<f64>,
    /// Speed decay constant [default: 100]
    #[arg(long)]
    pub tau: Option<f64>,
    /// Speed schedule [default: decay]
    #[arg(long, value_enum)]
    pub schedule: Option<Schedule>,
    /// Per-iteration displacement cap [default: 1.0]
    #[arg(long)]
    pub delta_max: Option<f64>,
    /// Worker threads [default: available cores]
    #[arg(long)]
    pub threads: Option<usize>,
    /// Read edge weights from the third column.
    #[arg(long, conflicts_with = "binarize")]
    pub weighted: bool,
    /// Treat every edge as weight 1 (the default).
    #[arg(long)]
    pub binarize: bool,
}

/// Contents of `--config`. Unknown keys are rejected.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub dim: Option<usize>,
    pub p: Option<f64>,
    pub q: Option<f64>,
    pub bias: Option<f64>,
    pub seed: Option<u64>,
    pub max_iters: Option<usize>,
    pub tol: Option<f64>,
    pub patience: Option<usize>,
    pub h0: Option<f64>,
    pub tau: Option<f64>,
    pub schedule: Option<Schedule>,
    pub delta_max: Option<f64>,
    pub threads: Option<usize>,
    pub weighted: Option<bool>,
}

impl FileConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("cannot read config {}", path.display()))?;
        serde_json::from_str(&text).with_context(|| format!("invalid config {}", path.display()))
    }
}

/// Effective settings after merging flags, config file and defaults.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Resolved {
    pub dim: usize,
    pub p: f64,
    pub q: f64,
    pub bias: f64,
    pub seed: u64,
    pub max_iters: usize,
    pub tol: f64,
    pub patience: usize,
    pub h0: f64,
    pub tau: f64,
    pub schedule: Schedule,
    pub delta_max: f64,
    pub threads: usize,
    pub weighted: bool,
}

impl TrainArgs {
    pub fn resolve(&self, default_dim: usize) -> Result<Resolved> {
        let file = match &self.config {
            Some(path) => FileConfig::load(path)?,
            None => FileConfig::default(),
        };
        let d = TrainConfig::default();
        let threads = self
            .threads
            .or(file.threads)
            .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()));
        if threads == 0 {
            bail!("--threads must be at least 1");
        }
        let weighted = if self.weighted {
            true
        } else if self.binarize {
            false
        } else {
            file.weighted.unwrap_or(false)
        };
        Ok(Resolved {
            dim: self.dim.or(file.dim).unwrap_or(default_dim),
            p: self.p.or(file.p).unwrap_or(d.force.p),
            q: self.q.or(file.q).unwrap_or(d.force.q),
            bias: self.bias.or(file.bias).unwrap_or(d.force.bias),
            seed: self.seed.or(file.seed).unwrap_or(d.seed),
            max_iters: self.max_iters.or(file.max_iters).unwrap_or(d.max_iters),
            tol: self.tol.or(file.tol).unwrap_or(d.energy_rel_tol),
            patience: self.patience.or(file.patience).unwrap_or(d.patience),
            h0: self.h0.or(file.h0).unwrap_or(d.h0),
            tau: self.tau.or(file.tau).unwrap_or(d.tau),
            schedule: self.schedule.or(file.schedule).unwrap_or(Schedule::Decay),
            delta_max: self.delta_max.or(file.delta_max).unwrap_or(d.delta_max),
            threads,
            weighted,
        })
    }
}

impl Resolved {
    pub fn train_config(&self) -> Result<TrainConfig> {
        let cfg = TrainConfig {
            dim: self.dim,
            max_iters: self.max_iters,
            energy_rel_tol: self.tol,
            patience: self.patience,
            h0: self.h0,
            tau: self.tau,
            schedule: self.schedule.into(),
            delta_max: self.delta_max,
            seed: self.seed,
            worker_count: self.threads,
            force: ForceParams {
                p: self.p,
                q: self.q,
                bias: self.bias,
                ..ForceParams::default()
            },
            ..TrainConfig::default()
        };
        cfg.validate()?;
        Ok(cfg)
    }
}

/// Written next to the primary outputs so a run can be reproduced.
#[derive(Debug, Serialize)]
pub struct Manifest<'a> {
    pub command: &'a str,
    pub inputs: Vec<String>,
    pub outputs: Vec<String>,
    pub settings: &'a Resolved,
    pub iterations: Vec<usize>,
    pub stop: Vec<String>,
}
