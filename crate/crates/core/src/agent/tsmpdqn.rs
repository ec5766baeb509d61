use std::path::Path;

use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::action::{ActionSpace, ParameterizedAction, PARAM_DIM};
use crate::error::{Error, Result};
use crate::nn::checkpoint::{read_checkpoint, write_checkpoint};
use crate::nn::{polyak_update, AdamState};
use crate::seeding::{episode_seed, stream_rng, STREAM_NOISE, STREAM_REPLAY};
use crate::sim::{Observation, PegInHoleEnv};

use super::networks::{clipped_noise, new_actor, select_action, AgentNetworks};
use super::replay::{ReplayBuffer, Transition};
use super::update::{actor_step, compute_targets, critic_step, Batch, Scratch};
use super::{EpisodeLog, Learner, LossMean, TrainConfig};

pub const TS_MP_DQN_FORMAT: &str = "peg-insert/ts-mp-dqn";

/// Losses of one gradient update.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct UpdateLosses {
    pub q1: f64,
    pub q2: Option<f64>,
    pub actor: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct TsMpDqn {
    pub config: TrainConfig,
    pub space: ActionSpace,
    pub seed: u64,
    pub nets: AgentNetworks,
    opt_q1: AdamState,
    opt_q2: AdamState,
    opt_actor: AdamState,
    replay: ReplayBuffer<Transition>,
    noise_rng: ChaCha8Rng,
    replay_rng: ChaCha8Rng,
    episodes_done: usize,
    env_steps: u64,
    updates: u64,
    critics_frozen: bool,
    #[serde(skip)]
    scratch: Scratch,
}

impl TsMpDqn {
    pub fn new(config: TrainConfig, space: ActionSpace, seed: u64) -> Result<Self> {
        config.validate()?;
        let nets = AgentNetworks::new(seed, config.hidden)?;
        Ok(Self {
            opt_q1: AdamState::for_net(&nets.q1, config.lr_q),
            opt_q2: AdamState::for_net(&nets.q2, config.lr_q),
            opt_actor: AdamState::for_net(&nets.actor, config.lr_actor),
            replay: ReplayBuffer::new(config.replay_capacity),
            noise_rng: stream_rng(seed, STREAM_NOISE),
            replay_rng: stream_rng(seed, STREAM_REPLAY),
            episodes_done: 0,
            env_steps: 0,
            updates: 0,
            critics_frozen: false,
            scratch: Scratch::default(),
            nets,
            config,
            space,
            seed,
        })
    }

    pub fn replay(&self) -> &ReplayBuffer<Transition> {
        &self.replay
    }

    pub fn updates(&self) -> u64 {
        self.updates
    }

    pub fn env_steps(&self) -> u64 {
        self.env_steps
    }

    /// Holds both critics fixed: their losses are still computed but no
    /// step is applied and their targets stay put.
    pub fn set_critics_frozen(&mut self, frozen: bool) {
        self.critics_frozen = frozen;
    }

    pub fn critics_frozen(&self) -> bool {
        self.critics_frozen
    }

    /// Replaces the actor (and its target and optimiser) with a fresh one.
    pub fn reinit_actor(&mut self, seed: u64, stream: u64) -> Result<()> {
        self.nets.actor = new_actor(seed, stream, self.config.hidden)?;
        self.nets.actor_target = self.nets.actor.clone();
        self.opt_actor = AdamState::for_net(&self.nets.actor, self.config.lr_actor);
        Ok(())
    }

    /// Starts a new run on top of the current networks: counters, replay and
    /// random streams restart under `seed`; networks and optimisers are kept.
    pub fn restart(&mut self, seed: u64) {
        self.seed = seed;
        self.replay = ReplayBuffer::new(self.config.replay_capacity);
        self.noise_rng = stream_rng(seed, STREAM_NOISE);
        self.replay_rng = stream_rng(seed, STREAM_REPLAY);
        self.episodes_done = 0;
        self.env_steps = 0;
    }

    /// One gradient step on a fresh minibatch.
    pub fn update(&mut self, sigma: f64) -> Result<UpdateLosses> {
        let c = self.config.noise_clip;
        let n = self.config.batch_size;
        let sample = self.replay.sample(n, &mut self.replay_rng);
        let batch = Batch::from_transitions(&sample, &self.space, self.config.reward_scale)?;
        let target_noise = clipped_noise(&mut self.noise_rng, n * PARAM_DIM, sigma, c);
        let nets = &mut self.nets;
        let y = compute_targets(
            &nets.actor_target,
            &nets.q1_target,
            &nets.q2_target,
            &batch,
            self.config.gamma,
            self.config.twin_enabled,
            target_noise.as_deref(),
            &mut self.scratch,
        )?;
        let apply = !self.critics_frozen;
        let clip = self.config.grad_clip;
        let q1 = critic_step(&mut nets.q1, &mut self.opt_q1, &batch, &y, clip, apply, &mut self.scratch)?;
        let q2 = if self.config.twin_enabled {
            Some(critic_step(&mut nets.q2, &mut self.opt_q2, &batch, &y, clip, apply, &mut self.scratch)?)
        } else {
            None
        };
        let actor_noise = clipped_noise(&mut self.noise_rng, n * PARAM_DIM, sigma, c);
        let actor =
            actor_step(&mut nets.actor, &mut self.opt_actor, &nets.q1, &batch, actor_noise.as_deref(), clip, &mut self.scratch)?;
        let tau = self.config.tau;
        if apply {
            polyak_update(&mut nets.q1_target, &nets.q1, tau)?;
            if self.config.twin_enabled {
                polyak_update(&mut nets.q2_target, &nets.q2, tau)?;
            }
        }
        polyak_update(&mut nets.actor_target, &nets.actor, tau)?;
        self.updates += 1;
        Ok(UpdateLosses { q1, q2, actor })
    }

    pub fn load(path: &Path) -> Result<Self> {
        let agent: Self = read_checkpoint(path, TS_MP_DQN_FORMAT)?;
        agent.config.validate()?;
        if !agent.nets.targets_match_architecture() {
            return Err(Error::Checkpoint("target and main network architectures differ".into()));
        }
        Ok(agent)
    }
}

impl Learner for TsMpDqn {
    fn algorithm(&self) -> &'static str {
        "tsmpdqn"
    }

    fn greedy_action(&self, obs: &Observation) -> Result<ParameterizedAction> {
        // nothing is drawn with epsilon = sigma = 0
        let mut rng = self.noise_rng.clone();
        Ok(select_action(&self.nets.q1, &self.nets.actor, obs, 0.0, 0.0, 0.0, &self.space, &mut rng)?.action)
    }

    fn schedule(&self, total: usize) -> (f64, f64) {
        (self.config.epsilon_at(self.episodes_done, total), self.config.sigma_at(self.episodes_done))
    }

    fn train_episode_with(
        &mut self,
        env: &mut PegInHoleEnv,
        horizon: usize,
        epsilon: f64,
        sigma: f64,
    ) -> Result<EpisodeLog> {
        let episode = self.episodes_done;
        let mut obs = env.reset(episode_seed(self.seed, episode as u64));
        let c = self.config.noise_clip;
        let mut ret = 0.0;
        let mut primitives = 0;
        let (mut l1, mut l2, mut la) = (LossMean::default(), LossMean::default(), LossMean::default());
        for _ in 0..horizon {
            let sel = select_action(&self.nets.q1, &self.nets.actor, &obs, epsilon, sigma, c, &self.space, &mut self.noise_rng)?;
            let out = env.execute_primitive(&sel.action)?;
            ret += out.reward;
            primitives += 1;
            self.env_steps += 1;
            self.replay.push(Transition {
                s: obs,
                k: sel.action.kind.index(),
                x_k: sel.action.params,
                r: out.reward,
                s_next: out.next_obs,
                done: out.done,
            });
            if self.replay.len() >= self.config.warmup {
                for _ in 0..self.config.updates_per_step {
                    let u = self.update(sigma)?;
                    l1.add(u.q1);
                    if let Some(v) = u.q2 {
                        l2.add(v);
                    }
                    la.add(u.actor);
                }
            }
            obs = out.next_obs;
            if out.done {
                break;
            }
        }
        self.episodes_done += 1;
        Ok(EpisodeLog {
            episode,
            env_primitive_steps: self.env_steps,
            episode_return: ret,
            success: env.is_success(),
            primitives,
            sigma,
            epsilon,
            loss_q1: l1.get(),
            loss_q2: l2.get(),
            loss_actor: la.get(),
        })
    }

    fn episodes_done(&self) -> usize {
        self.episodes_done
    }

    fn save(&self, path: &Path) -> Result<()> {
        write_checkpoint(path, TS_MP_DQN_FORMAT, self)
    }
}
