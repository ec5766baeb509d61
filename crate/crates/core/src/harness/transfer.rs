use std::fs;
use std::path::Path;

use crate::agent::{EpisodeLog, Learner};
use crate::error::{Error, Result};
use crate::seeding::STREAM_REINIT;

use super::agents::Agent;
use super::config::{RunConfig, TransferMode};
use super::eval::{evaluate, write_eval_report, EvalReport};
use super::policy::Greedy;
use super::run::{csv_writer, make_env, manifest_text, TrainRow, EVAL_REPORT, MANIFEST, TRAIN_HEADER, TRAIN_LOG};

pub struct TransferOutcome {
    pub report: EvalReport,
    /// Fine-tuning episodes; empty for direct transfer.
    pub logs: Vec<EpisodeLog>,
    pub agent: Agent,
}

/// Evaluates the policy in `checkpoint` on `cfg.task`, after optional
/// fine-tuning. The checkpoint file is only read.
///
/// Fine-tuning re-initialises the actor and trains it for
/// `cfg.phase1_episodes` against frozen critics, then trains everything for
/// `cfg.phase2_episodes`. Both phases keep the checkpoint's learner settings,
/// explore with its final epsilon and continue its smoothing schedule.
pub fn transfer(cfg: &RunConfig, checkpoint: &Path, mode: TransferMode) -> Result<TransferOutcome> {
    let mut agent = Agent::load(checkpoint)?;
    if agent.algo() != cfg.algo {
        return Err(Error::Config(format!("checkpoint holds a {} agent, config asks for {}", agent.algo(), cfg.algo)));
    }
    if agent.config().hidden != cfg.train.hidden {
        return Err(Error::Config(format!(
            "architecture mismatch: checkpoint hidden width {}, config {}",
            agent.config().hidden,
            cfg.train.hidden
        )));
    }
    let mut resolved = cfg.clone();
    resolved.train = agent.config().clone();
    resolved.source_checkpoint = Some(checkpoint.to_path_buf());
    resolved.transfer_mode = Some(mode);
    resolved.validate()?;
    fs::create_dir_all(&cfg.out)?;
    fs::write(cfg.out.join(MANIFEST), manifest_text(&resolved)?)?;

    let mut logs = Vec::new();
    if mode == TransferMode::Finetune {
        let Agent::Ts(ts) = &mut agent else {
            return Err(Error::Config("fine-tuning needs a tsmpdqn checkpoint".into()));
        };
        let source_episodes = ts.episodes_done();
        ts.restart(cfg.seed);
        ts.reinit_actor(cfg.seed, STREAM_REINIT)?;
        let epsilon = ts.config.epsilon_end;
        let mut env = make_env(&resolved, &cfg.task)?;
        let mut w = csv_writer(&cfg.out.join(TRAIN_LOG), &TRAIN_HEADER)?;
        for (frozen, episodes) in [(true, cfg.phase1_episodes), (false, cfg.phase2_episodes)] {
            ts.set_critics_frozen(frozen);
            for _ in 0..episodes {
                let sigma = ts.config.sigma_at(source_episodes + ts.episodes_done());
                let log = ts.train_episode_with(&mut env, cfg.horizon, epsilon, sigma)?;
                w.serialize(TrainRow::from(&log))?;
                logs.push(log);
            }
        }
        w.flush()?;
    }

    let mut env = make_env(&resolved, &cfg.task)?;
    let report = evaluate(&mut Greedy(&agent), &mut env, cfg.eval_trials, cfg.horizon, cfg.eval_block)?;
    write_eval_report(&cfg.out.join(EVAL_REPORT), &report)?;
    Ok(TransferOutcome { report, logs, agent })
}
