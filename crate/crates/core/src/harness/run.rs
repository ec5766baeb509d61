use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::action::ActionSpace;
use crate::agent::{EpisodeLog, Learner};
use crate::error::Result;
use crate::sim::{task_by_name, PegInHoleEnv};

use super::agents::Agent;
use super::config::RunConfig;
use super::eval::{evaluate, write_eval_report, EvalReport};
use super::policy::{Greedy, OraclePolicy, Policy, RandomPolicy};

pub const TRAIN_LOG: &str = "train_log.csv";
pub const EVAL_LOG: &str = "eval_log.csv";
pub const EVAL_REPORT: &str = "eval_report.csv";
pub const MANIFEST: &str = "run_manifest.toml";
pub const CHECKPOINT: &str = "checkpoint.json";

/// Row of `train_log.csv`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainRow {
    pub episode: usize,
    pub env_primitive_steps: u64,
    #[serde(rename = "return")]
    pub episode_return: f64,
    pub success: bool,
    pub sigma: f64,
    pub epsilon: f64,
    pub loss_q1: Option<f64>,
    pub loss_q2: Option<f64>,
    pub loss_actor: Option<f64>,
}

impl From<&EpisodeLog> for TrainRow {
    fn from(l: &EpisodeLog) -> Self {
        Self {
            episode: l.episode,
            env_primitive_steps: l.env_primitive_steps,
            episode_return: l.episode_return,
            success: l.success,
            sigma: l.sigma,
            epsilon: l.epsilon,
            loss_q1: l.loss_q1,
            loss_q2: l.loss_q2,
            loss_actor: l.loss_actor,
        }
    }
}

/// Row of `eval_log.csv`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvalRow {
    pub episode_at_eval: usize,
    pub trials: usize,
    pub success_rate: f64,
    pub mean_primitives: Option<f64>,
    pub mean_return: f64,
}

impl EvalRow {
    pub fn new(episode_at_eval: usize, r: &EvalReport) -> Self {
        Self {
            episode_at_eval,
            trials: r.trials,
            success_rate: r.success_rate,
            mean_primitives: r.mean_primitives,
            mean_return: r.mean_return,
        }
    }
}

/// What `run_evaluation` evaluates.
#[derive(Clone, Debug, PartialEq)]
pub enum EvalSource {
    Checkpoint(PathBuf),
    /// Scripted policy with access to the true hole pose.
    Oracle,
    /// Uniform random primitives seeded from the run seed.
    Random,
}

/// Evaluates `source` on `cfg.task` over `cfg.eval_trials` trials from the
/// `cfg.eval_block` seed block. Writes the manifest and `eval_report.csv`
/// into `cfg.out`; a checkpoint is only read.
pub fn run_evaluation(cfg: &RunConfig, source: &EvalSource) -> Result<EvalReport> {
    cfg.validate()?;
    let mut resolved = cfg.clone();
    let agent = match source {
        EvalSource::Checkpoint(path) => {
            let agent = Agent::load(path)?;
            resolved.algo = agent.algo();
            resolved.train = agent.config().clone();
            resolved.source_checkpoint = Some(path.clone());
            Some(agent)
        }
        EvalSource::Oracle | EvalSource::Random => None,
    };
    fs::create_dir_all(&cfg.out)?;
    let mut text = manifest_text(&resolved)?;
    match source {
        EvalSource::Oracle => text.insert_str(0, "# policy: oracle\n"),
        EvalSource::Random => text.insert_str(0, "# policy: random\n"),
        EvalSource::Checkpoint(_) => {}
    }
    fs::write(cfg.out.join(MANIFEST), text)?;
    let mut env = make_env(cfg, &cfg.task)?;
    let mut policy: Box<dyn Policy + '_> = match (&agent, source) {
        (Some(a), _) => Box::new(Greedy(a)),
        (None, EvalSource::Oracle) => Box::new(OraclePolicy::default()),
        _ => Box::new(RandomPolicy::new(ActionSpace::default(), cfg.seed)),
    };
    let report = evaluate(policy.as_mut(), &mut env, cfg.eval_trials, cfg.horizon, cfg.eval_block)?;
    write_eval_report(&cfg.out.join(EVAL_REPORT), &report)?;
    Ok(report)
}

pub fn make_env(cfg: &RunConfig, task: &str) -> Result<PegInHoleEnv> {
    Ok(PegInHoleEnv::new(task_by_name(task)?, cfg.sim.clone(), cfg.uncertainty.clone()))
}

/// The resolved configuration as loadable TOML.
pub fn manifest_text(cfg: &RunConfig) -> Result<String> {
    Ok(format!("# peg-insert {} run manifest\n{}", env!("CARGO_PKG_VERSION"), cfg.to_toml()?))
}

pub(crate) fn read_rows<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<Vec<T>> {
    if !path.exists() {
        return Ok(Vec::new());
    }
    let mut r = csv::Reader::from_path(path)?;
    let rows = r.deserialize().collect::<std::result::Result<Vec<T>, _>>()?;
    Ok(rows)
}

/// CSV writer that always emits the header, even before the first row.
pub(crate) fn csv_writer(path: &Path, header: &[&str]) -> Result<csv::Writer<fs::File>> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_path(path)?;
    w.write_record(header)?;
    Ok(w)
}

pub const TRAIN_HEADER: [&str; 9] =
    ["episode", "env_primitive_steps", "return", "success", "sigma", "epsilon", "loss_q1", "loss_q2", "loss_actor"];
pub const EVAL_HEADER: [&str; 5] = ["episode_at_eval", "trials", "success_rate", "mean_primitives", "mean_return"];

pub struct RunSummary {
    pub agent: Agent,
    /// Episodes already done when this invocation started.
    pub resumed_from: usize,
    pub final_eval: EvalReport,
}

/// Trains per `cfg`, writing logs, checkpoints, the manifest and the final
/// evaluation into `cfg.out`. A run whose manifest matches `cfg` resumes
/// from its last checkpoint and reproduces the uninterrupted artifacts.
pub fn run_training(cfg: &RunConfig) -> Result<RunSummary> {
    cfg.validate()?;
    fs::create_dir_all(&cfg.out)?;
    let manifest = cfg.out.join(MANIFEST);
    let ckpt = cfg.out.join(CHECKPOINT);

    let resumable = ckpt.exists() && manifest.exists() && RunConfig::load(&manifest).ok().as_ref() == Some(cfg);
    let mut agent = if resumable {
        Agent::load(&ckpt)?
    } else {
        if ckpt.exists() {
            fs::remove_file(&ckpt)?;
        }
        Agent::new(cfg.algo, cfg.train.clone(), ActionSpace::default(), cfg.seed)?
    };
    fs::write(&manifest, manifest_text(cfg)?)?;
    let done = agent.episodes_done();

    let train_path = cfg.out.join(TRAIN_LOG);
    let eval_path = cfg.out.join(EVAL_LOG);
    let (kept_train, kept_eval): (Vec<TrainRow>, Vec<EvalRow>) = if resumable {
        (
            read_rows::<TrainRow>(&train_path)?.into_iter().filter(|r| r.episode < done).collect(),
            read_rows::<EvalRow>(&eval_path)?.into_iter().filter(|r| r.episode_at_eval <= done).collect(),
        )
    } else {
        (Vec::new(), Vec::new())
    };
    let mut train_log = csv_writer(&train_path, &TRAIN_HEADER)?;
    for r in &kept_train {
        train_log.serialize(r)?;
    }
    train_log.flush()?;
    let mut eval_log = csv_writer(&eval_path, &EVAL_HEADER)?;
    for r in &kept_eval {
        eval_log.serialize(r)?;
    }
    eval_log.flush()?;

    let mut env = make_env(cfg, &cfg.task)?;
    let mut eval_env = make_env(cfg, &cfg.task)?;
    while agent.episodes_done() < cfg.episodes {
        let log = agent.train_episode(&mut env, cfg.horizon, cfg.episodes)?;
        train_log.serialize(TrainRow::from(&log))?;
        train_log.flush()?;
        let finished = log.episode + 1;
        if cfg.eval_every > 0 && finished % cfg.eval_every == 0 {
            let report = evaluate(&mut Greedy(&agent), &mut eval_env, cfg.eval_trials, cfg.horizon, cfg.eval_block)?;
            eval_log.serialize(EvalRow::new(finished, &report))?;
            eval_log.flush()?;
        }
        if cfg.checkpoint_every > 0 && finished % cfg.checkpoint_every == 0 {
            agent.save(&ckpt)?;
        }
    }
    agent.save(&ckpt)?;

    let final_eval = evaluate(&mut Greedy(&agent), &mut eval_env, cfg.eval_trials, cfg.horizon, cfg.eval_block)?;
    write_eval_report(&cfg.out.join(EVAL_REPORT), &final_eval)?;
    Ok(RunSummary { agent, resumed_from: done, final_eval })
}
