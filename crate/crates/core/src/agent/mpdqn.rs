use std::path::Path;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::action::{ActionSpace, ParameterizedAction, PrimitiveKind, NUM_KINDS};
use crate::error::{Error, Result};
use crate::nn::checkpoint::{read_checkpoint, write_checkpoint};
use crate::nn::{polyak_update, AdamState, ForwardCache, Mlp};
use crate::seeding::{episode_seed, stream_rng, STREAM_INIT_ACTOR, STREAM_INIT_Q1, STREAM_NOISE, STREAM_REPLAY};
use crate::sim::{Observation, PegInHoleEnv, OBS_DIM};

use super::networks::{actor_normalized, argmax, multi_pass_batch, multi_pass_q_normalized, new_actor, Q_INPUT_DIM};
use super::replay::{ReplayBuffer, Transition};
use super::update::{actor_step, critic_step, Batch, Scratch};
use super::{EpisodeLog, Learner, LossMean, TrainConfig};

pub const MP_DQN_FORMAT: &str = "peg-insert/mp-dqn";

/// Multi-pass DQN: one critic, deterministic actor, no target smoothing.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct MpDqn {
    pub config: TrainConfig,
    pub space: ActionSpace,
    pub seed: u64,
    pub q: Mlp,
    pub q_target: Mlp,
    pub actor: Mlp,
    pub actor_target: Mlp,
    opt_q: AdamState,
    opt_actor: AdamState,
    replay: ReplayBuffer<Transition>,
    explore_rng: ChaCha8Rng,
    replay_rng: ChaCha8Rng,
    episodes_done: usize,
    env_steps: u64,
    #[serde(skip)]
    scratch: Scratch,
    #[serde(skip)]
    rows: Vec<f64>,
    #[serde(skip)]
    cache: ForwardCache,
}

impl MpDqn {
    /// Twin and smoothing settings in `config` are ignored.
    pub fn new(config: TrainConfig, space: ActionSpace, seed: u64) -> Result<Self> {
        config.validate()?;
        let h = config.hidden;
        let q = Mlp::new(&[Q_INPUT_DIM, h, h, NUM_KINDS], &mut stream_rng(seed, STREAM_INIT_Q1))?;
        let actor = new_actor(seed, STREAM_INIT_ACTOR, h)?;
        Ok(Self {
            opt_q: AdamState::for_net(&q, config.lr_q),
            opt_actor: AdamState::for_net(&actor, config.lr_actor),
            replay: ReplayBuffer::new(config.replay_capacity),
            explore_rng: stream_rng(seed, STREAM_NOISE),
            replay_rng: stream_rng(seed, STREAM_REPLAY),
            episodes_done: 0,
            env_steps: 0,
            scratch: Scratch::default(),
            rows: Vec::new(),
            cache: ForwardCache::default(),
            q_target: q.clone(),
            actor_target: actor.clone(),
            q,
            actor,
            config,
            space,
            seed,
        })
    }

    fn act(&mut self, obs: &Observation, epsilon: f64) -> Result<ParameterizedAction> {
        let x = actor_normalized(&self.actor, obs)?;
        let k = if epsilon > 0.0 && self.explore_rng.random::<f64>() < epsilon {
            self.explore_rng.random_range(0..NUM_KINDS)
        } else {
            argmax(&multi_pass_q_normalized(&self.q, obs, &x)?)
        };
        let joint = self.space.denormalize(&x)?;
        let kind = PrimitiveKind::from_index(k)?;
        ParameterizedAction::new(kind, joint[kind.slot_range()].to_vec(), &self.space)
    }

    /// `r + gamma * max_k Q'(s', k, x'_k(s'))`, or `r` at terminal states.
    fn targets(&mut self, batch: &Batch) -> Result<Vec<f64>> {
        let n = batch.n;
        self.actor_target.forward_batch(&batch.next_feats, n, &mut self.cache)?;
        let x: Vec<f64> = self.cache.output().iter().map(|v| v.tanh()).collect();
        let mut cache = ForwardCache::default();
        let q = multi_pass_batch(&self.q_target, &batch.next_feats, &x, n, &mut self.rows, &mut cache)?;
        let mut y = Vec::with_capacity(n);
        for i in 0..n {
            if batch.dones[i] {
                y.push(batch.rewards[i]);
            } else {
                let best = q[i * NUM_KINDS..(i + 1) * NUM_KINDS].iter().copied().fold(f64::NEG_INFINITY, f64::max);
                y.push(batch.rewards[i] + self.config.gamma * best);
            }
        }
        Ok(y)
    }

    fn update(&mut self) -> Result<(f64, f64)> {
        let sample = self.replay.sample(self.config.batch_size, &mut self.replay_rng);
        let batch = Batch::from_transitions(&sample, &self.space, self.config.reward_scale)?;
        let y = self.targets(&batch)?;
        let clip = self.config.grad_clip;
        let lq = critic_step(&mut self.q, &mut self.opt_q, &batch, &y, clip, true, &mut self.scratch)?;
        let la = actor_step(&mut self.actor, &mut self.opt_actor, &self.q, &batch, None, clip, &mut self.scratch)?;
        polyak_update(&mut self.q_target, &self.q, self.config.tau)?;
        polyak_update(&mut self.actor_target, &self.actor, self.config.tau)?;
        Ok((lq, la))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let agent: Self = read_checkpoint(path, MP_DQN_FORMAT)?;
        agent.config.validate()?;
        if agent.q.sizes()[0] != OBS_DIM + crate::action::PARAM_DIM || !agent.q.same_architecture(&agent.q_target) {
            return Err(Error::Checkpoint("unexpected critic architecture".into()));
        }
        Ok(agent)
    }
}

impl Learner for MpDqn {
    fn algorithm(&self) -> &'static str {
        "mpdqn"
    }

    fn greedy_action(&self, obs: &Observation) -> Result<ParameterizedAction> {
        let x = actor_normalized(&self.actor, obs)?;
        let k = argmax(&multi_pass_q_normalized(&self.q, obs, &x)?);
        let joint = self.space.denormalize(&x)?;
        let kind = PrimitiveKind::from_index(k)?;
        ParameterizedAction::new(kind, joint[kind.slot_range()].to_vec(), &self.space)
    }

    fn schedule(&self, total: usize) -> (f64, f64) {
        (self.config.epsilon_at(self.episodes_done, total), 0.0)
    }

    fn train_episode_with(
        &mut self,
        env: &mut PegInHoleEnv,
        horizon: usize,
        epsilon: f64,
        _sigma: f64,
    ) -> Result<EpisodeLog> {
        let episode = self.episodes_done;
        let mut obs = env.reset(episode_seed(self.seed, episode as u64));
        let mut ret = 0.0;
        let mut primitives = 0;
        let (mut lq, mut la) = (LossMean::default(), LossMean::default());
        for _ in 0..horizon {
            let action = self.act(&obs, epsilon)?;
            let out = env.execute_primitive(&action)?;
            ret += out.reward;
            primitives += 1;
            self.env_steps += 1;
            self.replay.push(Transition {
                s: obs,
                k: action.kind.index(),
                x_k: action.params,
                r: out.reward,
                s_next: out.next_obs,
                done: out.done,
            });
            if self.replay.len() >= self.config.warmup {
                for _ in 0..self.config.updates_per_step {
                    let (q, a) = self.update()?;
                    lq.add(q);
                    la.add(a);
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
            sigma: 0.0,
            epsilon,
            loss_q1: lq.get(),
            loss_q2: None,
            loss_actor: la.get(),
        })
    }

    fn episodes_done(&self) -> usize {
        self.episodes_done
    }

    fn save(&self, path: &Path) -> Result<()> {
        write_checkpoint(path, MP_DQN_FORMAT, self)
    }
}
