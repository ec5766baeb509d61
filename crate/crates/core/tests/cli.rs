use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use peg_insert::harness::{RunConfig, CHECKPOINT, EVAL_REPORT, MANIFEST, TRAIN_LOG};

fn cli(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_peg-insert")).args(args).output().unwrap()
}

fn text(bytes: &[u8]) -> String {
    String::from_utf8_lossy(bytes).into_owned()
}

const TINY: &str = r#"
episodes = 3
horizon = 6
seed = 1
eval_every = 0
eval_trials = 3
hidden = 8
batch_size = 4
warmup = 8
replay_capacity = 50
"#;

fn tiny_config_file(dir: &Path) -> String {
    let path = dir.join("run.toml");
    fs::write(&path, TINY).unwrap();
    path.to_string_lossy().into_owned()
}

#[test]
fn eval_without_checkpoint_fails_with_a_message() {
    let out = cli(&["eval", "--task", "square", "--horizon", "20"]);
    assert!(!out.status.success());
    assert!(text(&out.stderr).contains("--checkpoint"));
}

#[test]
fn unknown_input_prints_usage() {
    for args in [&["frobnicate"][..], &["train", "--bogus"][..], &[][..]] {
        let out = cli(args);
        assert!(!out.status.success());
        assert!(text(&out.stderr).contains("Usage"), "{args:?}");
    }
    let out = cli(&["train", "--algo", "ppo"]);
    assert!(!out.status.success());
}

#[test]
fn gradcheck_reports_and_passes() {
    let out = cli(&["gradcheck"]);
    assert!(out.status.success(), "{}", text(&out.stdout));
    assert!(text(&out.stdout).contains("max relative error"));
}

#[test]
fn enumerate_baseline_prints_the_set() {
    let out = cli(&["enumerate-baseline"]);
    assert!(out.status.success());
    let stdout = text(&out.stdout);
    let lines: Vec<&str> = stdout.lines().collect();
    assert_eq!(lines.len(), 100);
    assert_eq!(lines[0].split_whitespace().collect::<Vec<_>>(), ["0", "translation", "[0.2,", "0,", "0,", "1]"]);
    assert!(lines[99].ends_with("insertion [inf]"));
}

#[test]
fn flags_override_the_config_file_and_runs_chain() {
    let dir = tempfile::tempdir().unwrap();
    let config = tiny_config_file(dir.path());
    let run = dir.path().join("run");
    let run_s = run.to_string_lossy().into_owned();
    let out = cli(&["train", "--config", &config, "--seed", "4", "--algo", "mpdqn", "--out", &run_s]);
    assert!(out.status.success(), "{}", text(&out.stderr));
    let manifest = RunConfig::load(&run.join(MANIFEST)).unwrap();
    assert_eq!((manifest.seed, manifest.episodes, manifest.train.hidden), (4, 3, 8));
    assert_eq!(manifest.algo.name(), "mpdqn");
    assert_eq!(fs::read_to_string(run.join(TRAIN_LOG)).unwrap().lines().count(), 4);

    let ckpt = run.join(CHECKPOINT).to_string_lossy().into_owned();
    let ev = dir.path().join("eval").to_string_lossy().into_owned();
    let out = cli(&["eval", "--checkpoint", &ckpt, "--task", "triangle", "--trials", "5", "--out", &ev]);
    assert!(out.status.success(), "{}", text(&out.stderr));
    assert_eq!(fs::read_to_string(Path::new(&ev).join(EVAL_REPORT)).unwrap().lines().count(), 6);

    let tr = dir.path().join("transfer").to_string_lossy().into_owned();
    let out = cli(&["transfer", "--config", &config, "--algo", "mpdqn", "--checkpoint", &ckpt, "--task", "pentagon", "--out", &tr]);
    assert!(out.status.success(), "{}", text(&out.stderr));
    assert!(text(&out.stdout).contains("direct transfer to pentagon"));
}

#[test]
fn repeating_a_run_from_its_manifest_reproduces_its_csvs() {
    let dir = tempfile::tempdir().unwrap();
    let config = tiny_config_file(dir.path());
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    let a_s = a.to_string_lossy().into_owned();
    assert!(cli(&["train", "--config", &config, "--out", &a_s]).status.success());
    let manifest = a.join(MANIFEST).to_string_lossy().into_owned();
    let b_s = b.to_string_lossy().into_owned();
    assert!(cli(&["train", "--config", &manifest, "--out", &b_s]).status.success());
    for name in [TRAIN_LOG, "eval_log.csv", EVAL_REPORT] {
        assert_eq!(fs::read(a.join(name)).unwrap(), fs::read(b.join(name)).unwrap(), "{name}");
    }
}
