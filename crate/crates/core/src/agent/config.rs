use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    pub gamma: f64,
    /// Multiplies environment rewards before they enter the critics.
    pub reward_scale: f64,
    pub batch_size: usize,
    pub replay_capacity: usize,
    pub warmup: usize,
    pub sigma_start: f64,
    /// Trajectories over which sigma falls linearly to zero.
    pub sigma_decay_episodes: usize,
    pub noise_clip: f64,
    pub epsilon_start: f64,
    pub epsilon_end: f64,
    /// Fraction of the run's episodes over which epsilon decays.
    pub epsilon_decay_fraction: f64,
    pub tau: f64,
    pub lr_q: f64,
    pub lr_actor: f64,
    pub updates_per_step: usize,
    pub grad_clip: f64,
    pub hidden: usize,
    pub twin_enabled: bool,
    pub smoothing_enabled: bool,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            gamma: 0.95,
            reward_scale: 1.0,
            batch_size: 128,
            replay_capacity: 10_000,
            warmup: 1000,
            sigma_start: 0.2,
            sigma_decay_episodes: 10_000,
            noise_clip: (-2f64).exp(),
            epsilon_start: 1.0,
            epsilon_end: 0.05,
            epsilon_decay_fraction: 0.2,
            tau: 0.01,
            lr_q: 1e-3,
            lr_actor: 1e-4,
            updates_per_step: 1,
            grad_clip: 10.0,
            hidden: 128,
            twin_enabled: true,
            smoothing_enabled: true,
        }
    }
}

impl TrainConfig {
    /// Plain MP-DQN: one critic, no target smoothing.
    pub fn mp_dqn() -> Self {
        Self { twin_enabled: false, smoothing_enabled: false, sigma_start: 0.0, noise_clip: 0.0, ..Self::default() }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::Config(m.to_string()));
        if !(self.gamma > 0.0 && self.gamma < 1.0) {
            return bad("gamma must lie in (0, 1)");
        }
        if !(self.reward_scale > 0.0 && self.reward_scale.is_finite()) {
            return bad("reward_scale must be positive");
        }
        if self.batch_size == 0 || self.batch_size > self.replay_capacity {
            return bad("batch_size must be in 1..=replay_capacity");
        }
        if self.warmup < self.batch_size {
            return bad("warmup must be at least batch_size");
        }
        if !(self.sigma_start >= 0.0 && self.noise_clip >= 0.0) {
            return bad("sigma_start and noise_clip must be non-negative");
        }
        if !(0.0..=1.0).contains(&self.epsilon_start) || !(0.0..=1.0).contains(&self.epsilon_end) {
            return bad("epsilon values must lie in [0, 1]");
        }
        if !(0.0..=1.0).contains(&self.epsilon_decay_fraction) {
            return bad("epsilon_decay_fraction must lie in [0, 1]");
        }
        if !(0.0..=1.0).contains(&self.tau) {
            return bad("tau must lie in [0, 1]");
        }
        if !(self.lr_q >= 0.0 && self.lr_actor >= 0.0 && self.grad_clip > 0.0) {
            return bad("learning rates must be non-negative and grad_clip positive");
        }
        if self.hidden == 0 || self.updates_per_step == 0 {
            return bad("hidden and updates_per_step must be positive");
        }
        Ok(())
    }

    /// Smoothing scale after `episodes` collected trajectories.
    pub fn sigma_at(&self, episodes: usize) -> f64 {
        if !self.smoothing_enabled {
            return 0.0;
        }
        if self.sigma_decay_episodes == 0 {
            return 0.0;
        }
        let frac = 1.0 - episodes as f64 / self.sigma_decay_episodes as f64;
        self.sigma_start * frac.max(0.0)
    }

    /// Exploration probability for episode `episode` of a `total`-episode run.
    pub fn epsilon_at(&self, episode: usize, total: usize) -> f64 {
        let span = (self.epsilon_decay_fraction * total as f64).ceil() as usize;
        if episode >= span {
            return self.epsilon_end;
        }
        self.epsilon_start + (self.epsilon_end - self.epsilon_start) * episode as f64 / span as f64
    }
}
