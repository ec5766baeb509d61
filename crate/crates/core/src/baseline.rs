//! Discrete-primitive DQN baseline over a fixed enumeration of primitives.

use std::path::Path;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::action::{ActionSpace, ParameterizedAction, PrimitiveKind, NO_FORCE_LIMIT};
use crate::agent::{argmax, features, EpisodeLog, Learner, LossMean, ReplayBuffer, TrainConfig};
use crate::error::{check_len, Error, Result};
use crate::nn::checkpoint::{read_checkpoint, write_checkpoint};
use crate::nn::{clip_grad_norm, polyak_update, AdamState, ForwardCache, Mlp};
use crate::seeding::{episode_seed, stream_rng, STREAM_INIT_Q1, STREAM_NOISE, STREAM_REPLAY};
use crate::sim::{Observation, PegInHoleEnv, OBS_DIM};

pub const DQN_FORMAT: &str = "peg-insert/dqn-discrete";

pub const NUM_DISCRETE: usize = 100;
pub const DISCRETE_SPEEDS: [f64; 2] = [0.2, 0.5];
pub const DISCRETE_FORCE_LIMITS: [f64; 4] = [1.0, 2.0, 3.0, NO_FORCE_LIMIT];

const AXES: [[f64; 3]; 6] = [
    [1.0, 0.0, 0.0],
    [-1.0, 0.0, 0.0],
    [0.0, 1.0, 0.0],
    [0.0, -1.0, 0.0],
    [0.0, 0.0, 1.0],
    [0.0, 0.0, -1.0],
];

/// The 100 fixed primitives: translation block, rotation block, then the
/// four insertions. Within a block the order is direction, speed, force limit.
pub fn enumerate_discrete_primitives(space: &ActionSpace) -> Result<Vec<ParameterizedAction>> {
    let mut out = Vec::with_capacity(NUM_DISCRETE);
    for kind in [PrimitiveKind::Translation, PrimitiveKind::Rotation] {
        for axis in AXES {
            for v in DISCRETE_SPEEDS {
                for f in DISCRETE_FORCE_LIMITS {
                    let p = vec![axis[0] * v, axis[1] * v, axis[2] * v, f];
                    out.push(ParameterizedAction::new(kind, p, space)?);
                }
            }
        }
    }
    for f in DISCRETE_FORCE_LIMITS {
        out.push(ParameterizedAction::new(PrimitiveKind::Insertion, vec![f], space)?);
    }
    debug_assert_eq!(out.len(), NUM_DISCRETE);
    Ok(out)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DqnTransition {
    pub s: Observation,
    pub a: usize,
    pub r: f64,
    pub s_next: Observation,
    pub done: bool,
}

/// `r + gamma * max_a Q'(s', a)`, or `r` at terminal states. `q_next` is
/// `n x actions` row-major.
pub fn dqn_targets(rewards: &[f64], dones: &[bool], q_next: &[f64], actions: usize, gamma: f64) -> Result<Vec<f64>> {
    let n = rewards.len();
    check_len(n, dones.len())?;
    check_len(n * actions, q_next.len())?;
    Ok((0..n)
        .map(|i| {
            if dones[i] {
                rewards[i]
            } else {
                let best = q_next[i * actions..(i + 1) * actions].iter().copied().fold(f64::NEG_INFINITY, f64::max);
                rewards[i] + gamma * best
            }
        })
        .collect())
}

/// Plain DQN over [`enumerate_discrete_primitives`].
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct DqnAgent {
    pub config: TrainConfig,
    pub space: ActionSpace,
    pub seed: u64,
    pub q: Mlp,
    pub q_target: Mlp,
    opt: AdamState,
    replay: ReplayBuffer<DqnTransition>,
    explore_rng: ChaCha8Rng,
    replay_rng: ChaCha8Rng,
    episodes_done: usize,
    env_steps: u64,
    #[serde(skip)]
    primitives: Vec<ParameterizedAction>,
    #[serde(skip)]
    cache: ForwardCache,
}

impl DqnAgent {
    /// Only the DQN-relevant fields of `config` are used.
    pub fn new(config: TrainConfig, space: ActionSpace, seed: u64) -> Result<Self> {
        config.validate()?;
        let h = config.hidden;
        let q = Mlp::new(&[OBS_DIM, h, h, NUM_DISCRETE], &mut stream_rng(seed, STREAM_INIT_Q1))?;
        Ok(Self {
            opt: AdamState::for_net(&q, config.lr_q),
            replay: ReplayBuffer::new(config.replay_capacity),
            explore_rng: stream_rng(seed, STREAM_NOISE),
            replay_rng: stream_rng(seed, STREAM_REPLAY),
            episodes_done: 0,
            env_steps: 0,
            primitives: enumerate_discrete_primitives(&space)?,
            cache: ForwardCache::default(),
            q_target: q.clone(),
            q,
            config,
            space,
            seed,
        })
    }

    pub fn primitives(&self) -> &[ParameterizedAction] {
        &self.primitives
    }

    pub fn replay(&self) -> &ReplayBuffer<DqnTransition> {
        &self.replay
    }

    pub fn q_values(&self, obs: &Observation) -> Result<Vec<f64>> {
        self.q.forward(&features(obs))
    }

    pub fn greedy_index(&self, obs: &Observation) -> Result<usize> {
        Ok(argmax(&self.q_values(obs)?))
    }

    fn act(&mut self, obs: &Observation, epsilon: f64) -> Result<usize> {
        if epsilon > 0.0 && self.explore_rng.random::<f64>() < epsilon {
            return Ok(self.explore_rng.random_range(0..NUM_DISCRETE));
        }
        self.greedy_index(obs)
    }

    /// One step on a replay minibatch; returns the loss before the step.
    pub fn update(&mut self) -> Result<f64> {
        let idx = self.replay.sample_indices(self.config.batch_size, &mut self.replay_rng);
        let sample: Vec<DqnTransition> = idx.iter().filter_map(|&i| self.replay.get(i).cloned()).collect();
        self.update_on(&sample)
    }

    /// One clipped Adam step on `sample`, then the target update.
    pub fn update_on(&mut self, sample: &[DqnTransition]) -> Result<f64> {
        let n = sample.len();
        if n == 0 {
            return Err(Error::Domain("empty batch".into()));
        }
        let mut feats = Vec::with_capacity(n * OBS_DIM);
        let mut next = Vec::with_capacity(n * OBS_DIM);
        let mut rewards = Vec::with_capacity(n);
        let mut dones = Vec::with_capacity(n);
        for t in sample {
            feats.extend_from_slice(&features(&t.s));
            next.extend_from_slice(&features(&t.s_next));
            rewards.push(t.r * self.config.reward_scale);
            dones.push(t.done);
        }
        self.q_target.forward_batch(&next, n, &mut self.cache)?;
        let y = dqn_targets(&rewards, &dones, self.cache.output(), NUM_DISCRETE, self.config.gamma)?;

        self.q.forward_batch(&feats, n, &mut self.cache)?;
        let out = self.cache.output();
        let mut d_out = vec![0.0; n * NUM_DISCRETE];
        let mut loss = 0.0;
        for (i, t) in sample.iter().enumerate() {
            let err = out[i * NUM_DISCRETE + t.a] - y[i];
            loss += err * err;
            d_out[i * NUM_DISCRETE + t.a] = 2.0 * err / n as f64;
        }
        loss /= n as f64;
        if !loss.is_finite() {
            return Err(Error::NonFinite("dqn loss"));
        }
        let mut grads = vec![0.0; self.q.num_params()];
        self.q.backward_batch(&self.cache, &d_out, Some(&mut grads), None)?;
        clip_grad_norm(&mut grads, self.config.grad_clip);
        self.opt.step(self.q.params_mut(), &grads)?;
        polyak_update(&mut self.q_target, &self.q, self.config.tau)?;
        Ok(loss)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let mut agent: Self = read_checkpoint(path, DQN_FORMAT)?;
        agent.config.validate()?;
        if agent.q.sizes()[0] != OBS_DIM
            || agent.q.output_dim() != NUM_DISCRETE
            || !agent.q.same_architecture(&agent.q_target)
        {
            return Err(Error::Checkpoint("unexpected dqn architecture".into()));
        }
        agent.primitives = enumerate_discrete_primitives(&agent.space)?;
        Ok(agent)
    }
}

impl Learner for DqnAgent {
    fn algorithm(&self) -> &'static str {
        "dqn-discrete"
    }

    fn greedy_action(&self, obs: &Observation) -> Result<ParameterizedAction> {
        Ok(self.primitives[self.greedy_index(obs)?].clone())
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
        let mut lq = LossMean::default();
        for _ in 0..horizon {
            let a = self.act(&obs, epsilon)?;
            let out = env.execute_primitive(&self.primitives[a])?;
            ret += out.reward;
            primitives += 1;
            self.env_steps += 1;
            self.replay.push(DqnTransition { s: obs, a, r: out.reward, s_next: out.next_obs, done: out.done });
            if self.replay.len() >= self.config.warmup {
                for _ in 0..self.config.updates_per_step {
                    lq.add(self.update()?);
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
            loss_actor: None,
        })
    }

    fn episodes_done(&self) -> usize {
        self.episodes_done
    }

    fn save(&self, path: &Path) -> Result<()> {
        write_checkpoint(path, DQN_FORMAT, self)
    }
}

/// Trains `agent` for `total` episodes on `env`.
pub fn dqn_train(env: &mut PegInHoleEnv, agent: &mut DqnAgent, total: usize, horizon: usize) -> Result<Vec<EpisodeLog>> {
    agent.train(env, total, horizon, |_, _| Ok(()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sim::TaskPreset;

    #[test]
    fn enumeration_order_and_count() {
        let space = ActionSpace::default();
        let p = enumerate_discrete_primitives(&space).unwrap();
        assert_eq!(p.len(), 100);
        assert_eq!(p[0].kind, PrimitiveKind::Translation);
        assert_eq!(p[0].params, vec![0.2, 0.0, 0.0, 1.0]);
        assert_eq!(p[3].params[3], NO_FORCE_LIMIT);
        assert_eq!(p[4].params, vec![0.5, 0.0, 0.0, 1.0]);
        assert_eq!(p[8].params, vec![-0.2, 0.0, 0.0, 1.0]);
        assert!(p[..48].iter().all(|a| a.kind == PrimitiveKind::Translation));
        assert!(p[48..96].iter().all(|a| a.kind == PrimitiveKind::Rotation));
        assert_eq!(p[48].params, vec![0.2, 0.0, 0.0, 1.0]);
        let ins: Vec<f64> = p[96..].iter().map(|a| a.params[0]).collect();
        assert_eq!(ins, vec![1.0, 2.0, 3.0, NO_FORCE_LIMIT]);
        for a in &p {
            space.to_velocity_command(a.kind, &a.params).unwrap();
        }
        assert_eq!(p, enumerate_discrete_primitives(&space).unwrap());
    }

    #[test]
    fn terminal_target_is_reward() {
        let q_next = vec![5.0, 9.0, 1.0, -3.0];
        let y = dqn_targets(&[1.5, 2.0], &[true, false], &q_next, 2, 0.9).unwrap();
        assert_eq!(y[0], 1.5);
        assert!((y[1] - (2.0 + 0.9 * 1.0)).abs() < 1e-15);
    }

    #[test]
    fn greedy_invariant_under_uniform_shift() {
        let space = ActionSpace::default();
        let mut agent = DqnAgent::new(TrainConfig::default(), space, 3).unwrap();
        let env = PegInHoleEnv::with_defaults(TaskPreset::Square.geometry());
        let obs = env.observation();
        let before = agent.greedy_index(&obs).unwrap();
        let last = agent.q.num_layers() - 1;
        agent.q.bias_mut(last).iter_mut().for_each(|b| *b += 7.25);
        assert_eq!(agent.greedy_index(&obs).unwrap(), before);
    }

    #[test]
    fn fixed_batch_overfit_is_monotone() {
        let space = ActionSpace::default();
        let config = TrainConfig { batch_size: 16, warmup: 16, replay_capacity: 16, tau: 0.0, lr_q: 1e-3, ..Default::default() };
        let mut agent = DqnAgent::new(config, space, 11).unwrap();
        let mut env = PegInHoleEnv::with_defaults(TaskPreset::Square.geometry());
        let mut obs = env.reset(4);
        let mut batch = Vec::new();
        for i in 0..16 {
            let a = (i * 7) % NUM_DISCRETE;
            let out = env.execute_primitive(&agent.primitives[a].clone()).unwrap();
            batch.push(DqnTransition { s: obs, a, r: 0.5 + 0.3 * i as f64, s_next: out.next_obs, done: true });
            obs = out.next_obs;
        }
        // terminal targets make the regression stationary
        let losses: Vec<f64> = (0..50).map(|_| agent.update_on(&batch).unwrap()).collect();
        for w in losses[5..].windows(2) {
            assert!(w[1] <= w[0] + 1e-12, "{} -> {}", w[0], w[1]);
        }
        assert!(losses[49] < losses[0]);
    }

    #[test]
    fn checkpoint_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("dqn.json");
        let mut agent = DqnAgent::new(TrainConfig { warmup: 128, ..Default::default() }, ActionSpace::default(), 2).unwrap();
        let mut env = PegInHoleEnv::with_defaults(TaskPreset::Square.geometry());
        agent.train_episode(&mut env, 3, 10).unwrap();
        agent.save(&path).unwrap();
        let back = DqnAgent::load(&path).unwrap();
        assert_eq!(back.q, agent.q);
        assert_eq!(back.episodes_done(), 1);
        assert_eq!(back.replay().len(), 3);
        assert_eq!(back.primitives(), agent.primitives());
    }
}
