use std::path::Path;

use serde::Deserialize;

use crate::action::{ActionSpace, ParameterizedAction};
use crate::agent::{EpisodeLog, Learner, MpDqn, TrainConfig, TsMpDqn, MP_DQN_FORMAT, TS_MP_DQN_FORMAT};
use crate::baseline::{DqnAgent, DQN_FORMAT};
use crate::error::{Error, Result};
use crate::sim::{Observation, PegInHoleEnv};

use super::config::Algo;

/// Any of the three learners, chosen at run time.
#[derive(Clone, Debug)]
pub enum Agent {
    Ts(Box<TsMpDqn>),
    Mp(Box<MpDqn>),
    Dqn(Box<DqnAgent>),
}

macro_rules! each {
    ($self:expr, $a:ident => $e:expr) => {
        match $self {
            Agent::Ts($a) => $e,
            Agent::Mp($a) => $e,
            Agent::Dqn($a) => $e,
        }
    };
}

impl Agent {
    pub fn new(algo: Algo, config: TrainConfig, space: ActionSpace, seed: u64) -> Result<Self> {
        Ok(match algo {
            Algo::Tsmpdqn => Agent::Ts(Box::new(TsMpDqn::new(config, space, seed)?)),
            Algo::Mpdqn => Agent::Mp(Box::new(MpDqn::new(config, space, seed)?)),
            Algo::DqnDiscrete => Agent::Dqn(Box::new(DqnAgent::new(config, space, seed)?)),
        })
    }

    /// Loads a checkpoint of any learner, dispatching on its format tag.
    pub fn load(path: &Path) -> Result<Self> {
        #[derive(Deserialize)]
        struct Header {
            format: String,
        }
        let text = std::fs::read_to_string(path)?;
        let header: Header = serde_json::from_str(&text)?;
        match header.format.as_str() {
            TS_MP_DQN_FORMAT => Ok(Agent::Ts(Box::new(TsMpDqn::load(path)?))),
            MP_DQN_FORMAT => Ok(Agent::Mp(Box::new(MpDqn::load(path)?))),
            DQN_FORMAT => Ok(Agent::Dqn(Box::new(DqnAgent::load(path)?))),
            other => Err(Error::Checkpoint(format!("unknown checkpoint format `{other}`"))),
        }
    }

    pub fn algo(&self) -> Algo {
        match self {
            Agent::Ts(_) => Algo::Tsmpdqn,
            Agent::Mp(_) => Algo::Mpdqn,
            Agent::Dqn(_) => Algo::DqnDiscrete,
        }
    }

    pub fn config(&self) -> &TrainConfig {
        each!(self, a => &a.config)
    }
}

impl Learner for Agent {
    fn algorithm(&self) -> &'static str {
        each!(self, a => a.algorithm())
    }

    fn greedy_action(&self, obs: &Observation) -> Result<ParameterizedAction> {
        each!(self, a => a.greedy_action(obs))
    }

    fn train_episode_with(
        &mut self,
        env: &mut PegInHoleEnv,
        horizon: usize,
        epsilon: f64,
        sigma: f64,
    ) -> Result<EpisodeLog> {
        each!(self, a => a.train_episode_with(env, horizon, epsilon, sigma))
    }

    fn schedule(&self, total: usize) -> (f64, f64) {
        each!(self, a => a.schedule(total))
    }

    fn episodes_done(&self) -> usize {
        each!(self, a => a.episodes_done())
    }

    fn save(&self, path: &Path) -> Result<()> {
        each!(self, a => a.save(path))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn load_dispatches_on_format() {
        let dir = tempfile::tempdir().unwrap();
        for algo in Algo::ALL {
            let cfg = TrainConfig { hidden: 8, ..TrainConfig::default() };
            let agent = Agent::new(algo, cfg.clone(), ActionSpace::default(), 1).unwrap();
            let path = dir.path().join(format!("{algo}.json"));
            agent.save(&path).unwrap();
            let back = Agent::load(&path).unwrap();
            assert_eq!(back.algo(), algo);
            assert_eq!(back.config(), &cfg);
            assert_eq!(back.algorithm(), algo.name());
        }
        let bogus = dir.path().join("bogus.json");
        std::fs::write(&bogus, r#"{"format":"something-else"}"#).unwrap();
        assert!(matches!(Agent::load(&bogus), Err(Error::Checkpoint(_))));
    }
}
