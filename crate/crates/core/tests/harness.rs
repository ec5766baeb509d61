mod common;

use std::fs;

use peg_insert::action::ActionSpace;
use peg_insert::agent::{Learner, TrainConfig};
use peg_insert::harness::{
    evaluate, make_env, run_evaluation, run_training, transfer, Agent, Algo, EvalSource, Greedy, TrainRow,
    TransferMode, CHECKPOINT, EVAL_LOG, EVAL_REPORT, MANIFEST, TRAIN_HEADER, TRAIN_LOG,
};

use common::{csv_files, tiny_config};

#[test]
fn one_episode_gives_one_row() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = tiny_config(Algo::Tsmpdqn, dir.path());
    cfg.episodes = 1;
    run_training(&cfg).unwrap();
    let text = fs::read_to_string(dir.path().join(TRAIN_LOG)).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 2);
    assert_eq!(lines[0], TRAIN_HEADER.join(","));
    assert!(lines[1].starts_with("0,"));
}

#[test]
fn identical_runs_write_identical_csvs() {
    for algo in Algo::ALL {
        let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
        run_training(&tiny_config(algo, a.path())).unwrap();
        run_training(&tiny_config(algo, b.path())).unwrap();
        let files = csv_files(a.path());
        assert_eq!(files.len(), 3);
        assert_eq!(files, csv_files(b.path()), "{algo}");
    }
}

#[test]
fn log_rows_are_monotone() {
    let dir = tempfile::tempdir().unwrap();
    run_training(&tiny_config(Algo::Mpdqn, dir.path())).unwrap();
    let rows: Vec<TrainRow> =
        csv::Reader::from_path(dir.path().join(TRAIN_LOG)).unwrap().deserialize().map(|r| r.unwrap()).collect();
    for w in rows.windows(2) {
        assert!(w[1].episode > w[0].episode);
        assert!(w[1].env_primitive_steps >= w[0].env_primitive_steps);
    }
}

#[test]
fn interrupted_run_resumes_to_the_same_artifacts() {
    let full = tempfile::tempdir().unwrap();
    let cfg = tiny_config(Algo::Tsmpdqn, full.path());
    run_training(&cfg).unwrap();

    // state of the same run killed after episode 4, with log rows written
    // past its last checkpoint
    let part = tempfile::tempdir().unwrap();
    let mut pcfg = cfg.clone();
    pcfg.out = part.path().to_path_buf();
    let mut agent = Agent::new(pcfg.algo, pcfg.train.clone(), ActionSpace::default(), pcfg.seed).unwrap();
    let mut env = make_env(&pcfg, &pcfg.task).unwrap();
    for _ in 0..4 {
        agent.train_episode(&mut env, pcfg.horizon, pcfg.episodes).unwrap();
    }
    agent.save(&part.path().join(CHECKPOINT)).unwrap();
    fs::write(part.path().join(MANIFEST), peg_insert::harness::manifest_text(&pcfg).unwrap()).unwrap();
    let train = fs::read_to_string(full.path().join(TRAIN_LOG)).unwrap();
    fs::write(part.path().join(TRAIN_LOG), train.lines().take(6).collect::<Vec<_>>().join("\n") + "\n").unwrap();
    fs::copy(full.path().join(EVAL_LOG), part.path().join(EVAL_LOG)).unwrap();

    let summary = run_training(&pcfg).unwrap();
    assert_eq!(summary.resumed_from, 4);
    assert_eq!(csv_files(part.path()), csv_files(full.path()));
}

#[test]
fn flag_reduced_agent_logs_like_mp_dqn() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    let small = TrainConfig { hidden: 16, batch_size: 8, warmup: 16, replay_capacity: 200, ..TrainConfig::mp_dqn() };
    let mut ts = tiny_config(Algo::Tsmpdqn, a.path());
    ts.train = small.clone();
    let mut mp = tiny_config(Algo::Mpdqn, b.path());
    mp.train = small;
    run_training(&ts).unwrap();
    run_training(&mp).unwrap();
    let log = fs::read(a.path().join(TRAIN_LOG)).unwrap();
    assert!(String::from_utf8_lossy(&log).lines().skip(1).any(|l| !l.ends_with(",,,")));
    assert_eq!(log, fs::read(b.path().join(TRAIN_LOG)).unwrap());
    assert_eq!(fs::read(a.path().join(EVAL_LOG)).unwrap(), fs::read(b.path().join(EVAL_LOG)).unwrap());
}

#[test]
fn scripted_policies_bracket_the_task() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = tiny_config(Algo::Tsmpdqn, dir.path());
    cfg.horizon = 20;
    cfg.eval_trials = 100;
    for task in ["square", "triangle", "pentagon"] {
        cfg.task = task.into();
        assert_eq!(run_evaluation(&cfg, &EvalSource::Oracle).unwrap().success_rate, 1.0, "{task}");
    }
    cfg.task = "square".into();
    let random = run_evaluation(&cfg, &EvalSource::Random).unwrap();
    assert!(random.success_rate < 0.2, "{}", random.success_rate);
}

#[test]
fn longer_horizon_never_loses_a_success() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = tiny_config(Algo::Tsmpdqn, dir.path());
    cfg.episodes = 10;
    let agent = run_training(&cfg).unwrap().agent;
    let mut env = make_env(&cfg, "square").unwrap();
    let h10 = evaluate(&mut Greedy(&agent), &mut env, 50, 10, 5).unwrap();
    let h20 = evaluate(&mut Greedy(&agent), &mut env, 50, 20, 5).unwrap();
    assert!(h20.success_rate >= h10.success_rate);
    for (a, b) in h10.records.iter().zip(&h20.records) {
        assert_eq!(a.seed, b.seed);
        assert!(!a.success || b.success);
    }
}

#[test]
fn evaluation_and_direct_transfer_only_read_the_checkpoint() {
    let src = tempfile::tempdir().unwrap();
    let cfg = tiny_config(Algo::Tsmpdqn, src.path());
    run_training(&cfg).unwrap();
    let ckpt = src.path().join(CHECKPOINT);
    let bytes = fs::read(&ckpt).unwrap();

    let (e1, e2) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    for out in [e1.path(), e2.path()] {
        let mut ecfg = cfg.clone();
        ecfg.out = out.to_path_buf();
        run_evaluation(&ecfg, &EvalSource::Checkpoint(ckpt.clone())).unwrap();
    }
    assert_eq!(fs::read(e1.path().join(EVAL_REPORT)).unwrap(), fs::read(e2.path().join(EVAL_REPORT)).unwrap());

    let dst = tempfile::tempdir().unwrap();
    let mut tcfg = cfg.clone();
    tcfg.out = dst.path().to_path_buf();
    tcfg.task = "pentagon".into();
    let r = transfer(&tcfg, &ckpt, TransferMode::Direct).unwrap();
    assert_eq!(r.report.trials, tcfg.eval_trials);
    assert!(dst.path().join(EVAL_REPORT).exists());
    assert_eq!(fs::read(&ckpt).unwrap(), bytes);
}
