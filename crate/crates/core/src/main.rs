use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use peg_insert::action::ActionSpace;
use peg_insert::agent::gradcheck::gradient_suite;
use peg_insert::baseline::enumerate_discrete_primitives;
use peg_insert::harness::{run_evaluation, run_training, transfer, Algo, EvalReport, EvalSource, RunConfig, TransferMode};
use peg_insert::nn::gradcheck::GRAD_TOLERANCE;
use peg_insert::{Error, Result};

#[derive(Parser)]
#[command(name = "peg-insert", version, about = "Train and evaluate parameterized insertion policies")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Train an agent, writing logs, checkpoints and a final evaluation.
    Train(RunArgs),
    /// Evaluate a checkpoint or a scripted policy.
    Eval {
        #[command(flatten)]
        run: RunArgs,
        #[arg(long)]
        checkpoint: Option<PathBuf>,
        /// Scripted policy instead of a checkpoint: oracle or random.
        #[arg(long, value_parser = ["oracle", "random"])]
        policy: Option<String>,
    },
    /// Evaluate a checkpoint on another task, optionally after fine-tuning.
    Transfer {
        #[command(flatten)]
        run: RunArgs,
        #[arg(long)]
        checkpoint: PathBuf,
        /// direct or finetune.
        #[arg(long, default_value = "direct")]
        mode: TransferMode,
        #[arg(long)]
        phase1_episodes: Option<usize>,
        #[arg(long)]
        phase2_episodes: Option<usize>,
    },
    /// Finite-difference check of network, critic-loss and actor-loss gradients.
    Gradcheck {
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 100)]
        instances: usize,
    },
    /// Print the discrete baseline's primitive set in canonical order.
    EnumerateBaseline,
}

/// Flags shared by the run commands. Explicit flags override `--config`.
#[derive(Args)]
struct RunArgs {
    /// TOML run configuration.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// tsmpdqn, mpdqn or dqn-discrete.
    #[arg(long)]
    algo: Option<Algo>,
    /// square, triangle or pentagon.
    #[arg(long)]
    task: Option<String>,
    /// Maximum primitives per episode.
    #[arg(long)]
    horizon: Option<usize>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    episodes: Option<usize>,
    /// Trials per evaluation.
    #[arg(long)]
    trials: Option<usize>,
}

impl RunArgs {
    fn resolve(&self) -> Result<RunConfig> {
        let mut cfg = match &self.config {
            Some(path) => RunConfig::load(path)?,
            None => RunConfig::default(),
        };
        if let Some(v) = self.seed {
            cfg.seed = v;
        }
        if let Some(v) = self.algo {
            cfg.algo = v;
        }
        if let Some(v) = &self.task {
            cfg.task = v.clone();
        }
        if let Some(v) = self.horizon {
            cfg.horizon = v;
        }
        if let Some(v) = &self.out {
            cfg.out = v.clone();
        }
        if let Some(v) = self.episodes {
            cfg.episodes = v;
        }
        if let Some(v) = self.trials {
            cfg.eval_trials = v;
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

fn print_report(label: &str, horizon: usize, r: &EvalReport) {
    let prims = r.mean_primitives.map_or("n/a".to_string(), |m| format!("{m:.2}"));
    println!(
        "{label}: success {}/{} ({:.1}%) at H={horizon}, mean primitives on success {prims}, mean return {:.2}",
        r.successes,
        r.trials,
        100.0 * r.success_rate,
        r.mean_return
    );
}

fn run(cli: Cli) -> Result<bool> {
    match cli.command {
        Command::Train(args) => {
            let cfg = args.resolve()?;
            let summary = run_training(&cfg)?;
            if summary.resumed_from > 0 {
                println!("resumed from episode {}", summary.resumed_from);
            }
            print_report(&format!("{} on {}", cfg.algo, cfg.task), cfg.horizon, &summary.final_eval);
            println!("artifacts in {}", cfg.out.display());
        }
        Command::Eval { run, checkpoint, policy } => {
            let cfg = run.resolve()?;
            let source = match (checkpoint, policy.as_deref()) {
                (Some(path), None) => EvalSource::Checkpoint(path),
                (None, Some("oracle")) => EvalSource::Oracle,
                (None, Some(_)) => EvalSource::Random,
                (Some(_), Some(_)) => {
                    return Err(Error::Config("pass either --checkpoint or --policy, not both".into()))
                }
                (None, None) => {
                    return Err(Error::Config("eval needs --checkpoint <file> (or --policy oracle|random)".into()))
                }
            };
            let report = run_evaluation(&cfg, &source)?;
            print_report(&format!("eval on {}", cfg.task), cfg.horizon, &report);
        }
        Command::Transfer { run, checkpoint, mode, phase1_episodes, phase2_episodes } => {
            let mut cfg = run.resolve()?;
            if let Some(v) = phase1_episodes {
                cfg.phase1_episodes = v;
            }
            if let Some(v) = phase2_episodes {
                cfg.phase2_episodes = v;
            }
            let outcome = transfer(&cfg, &checkpoint, mode)?;
            print_report(&format!("{mode:?} transfer to {}", cfg.task).to_lowercase(), cfg.horizon, &outcome.report);
        }
        Command::Gradcheck { seed, instances } => {
            let r = gradient_suite(seed, instances)?;
            println!("mlp max relative error {:.3e}", r.mlp);
            println!("critic loss max relative error {:.3e}", r.critic);
            println!("actor loss max relative error {:.3e}", r.actor);
            println!("max relative error {:.3e} (tolerance {GRAD_TOLERANCE:e})", r.worst());
            return Ok(r.worst() < GRAD_TOLERANCE);
        }
        Command::EnumerateBaseline => {
            for (i, a) in enumerate_discrete_primitives(&ActionSpace::default())?.iter().enumerate() {
                let params: Vec<String> = a.params.iter().map(|v| v.to_string()).collect();
                println!("{i:3} {} [{}]", a.kind, params.join(", "));
            }
        }
    }
    Ok(true)
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
