use serde::Serialize;

use crate::error::{Error, Result};
use crate::seeding::eval_seed;
use crate::sim::{PegInHoleEnv, StopReason};

use super::policy::Policy;

/// Outcome of one evaluation episode.
#[derive(Clone, Debug, PartialEq)]
pub struct TrialRecord {
    pub trial: usize,
    pub seed: u64,
    pub success: bool,
    pub primitives_used: usize,
    pub final_error_norm: f64,
    pub episode_return: f64,
    pub stop_reasons: Vec<StopReason>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct EvalReport {
    pub trials: usize,
    pub successes: usize,
    pub success_rate: f64,
    /// Mean primitive count over successful trials; `None` without any.
    pub mean_primitives: Option<f64>,
    pub mean_return: f64,
    pub records: Vec<TrialRecord>,
}

impl EvalReport {
    pub fn from_records(records: Vec<TrialRecord>) -> Self {
        let trials = records.len();
        let succ: Vec<&TrialRecord> = records.iter().filter(|r| r.success).collect();
        let successes = succ.len();
        let mean_primitives =
            (successes > 0).then(|| succ.iter().map(|r| r.primitives_used as f64).sum::<f64>() / successes as f64);
        let mean_return = if trials > 0 {
            records.iter().map(|r| r.episode_return).sum::<f64>() / trials as f64
        } else {
            0.0
        };
        Self {
            trials,
            successes,
            success_rate: if trials > 0 { successes as f64 / trials as f64 } else { 0.0 },
            mean_primitives,
            mean_return,
            records,
        }
    }
}

/// Row of `eval_report.csv`.
#[derive(Serialize)]
pub struct TrialRow {
    pub trial: usize,
    pub seed: u64,
    pub success: bool,
    pub primitives_used: usize,
    pub final_error_norm: f64,
}

impl From<&TrialRecord> for TrialRow {
    fn from(r: &TrialRecord) -> Self {
        Self {
            trial: r.trial,
            seed: r.seed,
            success: r.success,
            primitives_used: r.primitives_used,
            final_error_norm: r.final_error_norm,
        }
    }
}

/// Runs `trials` episodes of at most `horizon` primitives. Trial `i` starts
/// from `eval_seed(block, i)`, so equal blocks give equal start states.
pub fn evaluate(
    policy: &mut dyn Policy,
    env: &mut PegInHoleEnv,
    trials: usize,
    horizon: usize,
    block: u64,
) -> Result<EvalReport> {
    if horizon == 0 {
        return Err(Error::Config("horizon must be at least 1".into()));
    }
    let mut records = Vec::with_capacity(trials);
    for trial in 0..trials {
        let seed = eval_seed(block, trial as u64);
        let mut obs = env.reset(seed);
        policy.reset(seed);
        let mut rec = TrialRecord {
            trial,
            seed,
            success: false,
            primitives_used: 0,
            final_error_norm: 0.0,
            episode_return: 0.0,
            stop_reasons: Vec::new(),
        };
        for _ in 0..horizon {
            let action = policy.act(env, &obs)?;
            let out = env.execute_primitive(&action)?;
            rec.primitives_used += 1;
            rec.episode_return += out.reward;
            rec.stop_reasons.push(out.stop_reason);
            obs = out.next_obs;
            if out.done {
                break;
            }
        }
        rec.success = env.is_success();
        rec.final_error_norm = env.goal_error();
        records.push(rec);
    }
    Ok(EvalReport::from_records(records))
}

pub fn write_eval_report(path: &std::path::Path, report: &EvalReport) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    for r in &report.records {
        w.serialize(TrialRow::from(r))?;
    }
    w.flush()?;
    Ok(())
}
