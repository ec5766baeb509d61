//! Twin smoothed multi-pass DQN over the hybrid primitive space.

mod config;
pub mod gradcheck;
mod mpdqn;
mod networks;
mod replay;
mod tsmpdqn;
mod update;

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::action::ParameterizedAction;
use crate::error::Result;
use crate::sim::{Observation, PegInHoleEnv};

pub use config::TrainConfig;
pub use mpdqn::{MpDqn, MP_DQN_FORMAT};
pub use networks::{
    actor_normalized, argmax, clipped_noise, features, multi_pass_q, multi_pass_q_normalized, select_action,
    smooth_normalized, smooth_params, AgentNetworks, Selection, Q_INPUT_DIM,
};
pub use replay::{ReplayBuffer, Transition};
pub use tsmpdqn::{TsMpDqn, UpdateLosses, TS_MP_DQN_FORMAT};
pub use update::{actor_loss_grad, actor_step, compute_targets, critic_loss_grad, critic_step, Batch, Scratch};

/// One row of the training log.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EpisodeLog {
    pub episode: usize,
    /// Primitives executed so far in the run, this episode included.
    pub env_primitive_steps: u64,
    #[serde(rename = "return")]
    pub episode_return: f64,
    pub success: bool,
    pub primitives: usize,
    pub sigma: f64,
    pub epsilon: f64,
    pub loss_q1: Option<f64>,
    pub loss_q2: Option<f64>,
    pub loss_actor: Option<f64>,
}

/// Running mean of an optional loss series.
#[derive(Clone, Copy, Debug, Default)]
pub(crate) struct LossMean {
    sum: f64,
    count: usize,
}

impl LossMean {
    pub fn add(&mut self, v: f64) {
        self.sum += v;
        self.count += 1;
    }

    pub fn get(&self) -> Option<f64> {
        (self.count > 0).then(|| self.sum / self.count as f64)
    }
}

/// A trainable agent acting on the peg-in-hole environment.
pub trait Learner {
    fn algorithm(&self) -> &'static str;

    /// Evaluation-mode action: no exploration, no smoothing noise.
    fn greedy_action(&self, obs: &Observation) -> Result<ParameterizedAction>;

    /// Runs training episode number `episodes_done()` with the given
    /// exploration settings.
    fn train_episode_with(
        &mut self,
        env: &mut PegInHoleEnv,
        horizon: usize,
        epsilon: f64,
        sigma: f64,
    ) -> Result<EpisodeLog>;

    /// Exploration settings of the next episode in a `total`-episode run.
    fn schedule(&self, total: usize) -> (f64, f64);

    fn episodes_done(&self) -> usize;

    fn save(&self, path: &Path) -> Result<()>;

    fn train_episode(&mut self, env: &mut PegInHoleEnv, horizon: usize, total: usize) -> Result<EpisodeLog> {
        let (epsilon, sigma) = self.schedule(total);
        self.train_episode_with(env, horizon, epsilon, sigma)
    }

    /// Trains until `total` episodes have been run, calling `on_episode`
    /// after each one.
    fn train<F>(&mut self, env: &mut PegInHoleEnv, total: usize, horizon: usize, mut on_episode: F) -> Result<Vec<EpisodeLog>>
    where
        F: FnMut(&Self, &EpisodeLog) -> Result<()>,
        Self: Sized,
    {
        let mut logs = Vec::new();
        while self.episodes_done() < total {
            let log = self.train_episode(env, horizon, total)?;
            on_episode(self, &log)?;
            logs.push(log);
        }
        Ok(logs)
    }
}
