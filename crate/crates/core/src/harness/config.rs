use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::agent::TrainConfig;
use crate::error::{Error, Result};
use crate::sim::{SimConfig, TaskPreset, Uncertainty};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Algo {
    Tsmpdqn,
    Mpdqn,
    DqnDiscrete,
}

impl Algo {
    pub const ALL: [Algo; 3] = [Algo::Tsmpdqn, Algo::Mpdqn, Algo::DqnDiscrete];

    pub fn name(self) -> &'static str {
        match self {
            Algo::Tsmpdqn => "tsmpdqn",
            Algo::Mpdqn => "mpdqn",
            Algo::DqnDiscrete => "dqn-discrete",
        }
    }
}

impl fmt::Display for Algo {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Algo {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Algo::ALL
            .into_iter()
            .find(|a| a.name() == s)
            .ok_or_else(|| Error::Config(format!("unknown algorithm `{s}` (expected tsmpdqn, mpdqn or dqn-discrete)")))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TransferMode {
    Direct,
    Finetune,
}

impl FromStr for TransferMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "direct" => Ok(TransferMode::Direct),
            "finetune" => Ok(TransferMode::Finetune),
            _ => Err(Error::Config(format!("unknown transfer mode `{s}` (expected direct or finetune)"))),
        }
    }
}

/// Everything that determines a run. Learner settings sit at the top level
/// next to the run settings; simulator constants live in `[sim]` and
/// `[uncertainty]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RunConfig {
    pub algo: Algo,
    pub task: String,
    pub episodes: usize,
    pub horizon: usize,
    pub seed: u64,
    pub out: PathBuf,
    /// Episodes between periodic evaluations; 0 turns them off.
    pub eval_every: usize,
    pub eval_trials: usize,
    /// Seed block shared by every periodic and final evaluation.
    pub eval_block: u64,
    /// Episodes between checkpoints; 0 writes only the final one.
    pub checkpoint_every: usize,
    pub phase1_episodes: usize,
    pub phase2_episodes: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub source_checkpoint: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub transfer_mode: Option<TransferMode>,
    #[serde(flatten)]
    pub train: TrainConfig,
    pub sim: SimConfig,
    pub uncertainty: Uncertainty,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            algo: Algo::Tsmpdqn,
            task: "square".into(),
            episodes: 3000,
            horizon: 20,
            seed: 0,
            out: PathBuf::from("runs/default"),
            eval_every: 250,
            eval_trials: 100,
            eval_block: 1_000_003,
            checkpoint_every: 250,
            phase1_episodes: 200,
            phase2_episodes: 300,
            source_checkpoint: None,
            transfer_mode: None,
            train: TrainConfig::default(),
            sim: SimConfig::default(),
            uncertainty: Uncertainty::default(),
        }
    }
}

impl RunConfig {
    pub fn validate(&self) -> Result<()> {
        if self.horizon == 0 {
            return Err(Error::Config("horizon must be at least 1".into()));
        }
        if self.episodes == 0 {
            return Err(Error::Config("episodes must be at least 1".into()));
        }
        if self.eval_trials == 0 {
            return Err(Error::Config("eval_trials must be at least 1".into()));
        }
        self.task.parse::<TaskPreset>()?;
        self.train.validate()
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        let table: toml::Table = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        // flattened learner keys would otherwise swallow typos silently
        let known = toml::Table::try_from(RunConfig::default()).map_err(|e| Error::Config(e.to_string()))?;
        for key in table.keys() {
            if !known.contains_key(key) && key != "source_checkpoint" && key != "transfer_mode" {
                return Err(Error::Config(format!("unknown configuration key `{key}`")));
            }
        }
        table.try_into().map_err(|e: toml::de::Error| Error::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_toml(&std::fs::read_to_string(path)?)
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }
}

/// A run small enough for unit tests.
#[cfg(test)]
pub(crate) fn tiny_config(algo: Algo, out: &Path) -> RunConfig {
    RunConfig {
        algo,
        episodes: 4,
        horizon: 6,
        out: out.to_path_buf(),
        eval_every: 2,
        eval_trials: 3,
        checkpoint_every: 2,
        phase1_episodes: 2,
        phase2_episodes: 2,
        train: TrainConfig { hidden: 12, batch_size: 4, warmup: 8, replay_capacity: 100, ..TrainConfig::default() },
        ..RunConfig::default()
    }
}
