//! Experiment orchestration: run configuration, evaluation, training runs
//! with CSV artifacts, and cross-task transfer.

mod agents;
mod config;
mod eval;
mod policy;
mod run;
mod transfer;

pub use agents::Agent;
pub use config::{Algo, RunConfig, TransferMode};
pub use eval::{evaluate, write_eval_report, EvalReport, TrialRecord, TrialRow};
pub use policy::{Greedy, OraclePolicy, Policy, RandomPolicy};
pub use run::{
    make_env, manifest_text, run_evaluation, run_training, EvalSource, EvalRow, RunSummary, TrainRow, CHECKPOINT, EVAL_HEADER, EVAL_LOG,
    EVAL_REPORT, MANIFEST, TRAIN_HEADER, TRAIN_LOG,
};
pub use transfer::{transfer, TransferOutcome};
