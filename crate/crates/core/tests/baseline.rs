use std::collections::HashSet;

use peg_insert::action::{ActionSpace, PrimitiveKind, NO_FORCE_LIMIT};
use peg_insert::agent::{Learner, TrainConfig};
use peg_insert::baseline::{dqn_train, enumerate_discrete_primitives, DqnAgent, NUM_DISCRETE};
use peg_insert::sim::{PegInHoleEnv, TaskPreset};

#[test]
fn enumeration_is_stable_distinct_and_executable() {
    let space = ActionSpace::default();
    let a = enumerate_discrete_primitives(&space).unwrap();
    assert_eq!(a, enumerate_discrete_primitives(&space).unwrap());
    assert_eq!(a.len(), NUM_DISCRETE);
    let keys: HashSet<String> = a.iter().map(|p| format!("{:?}", p)).collect();
    assert_eq!(keys.len(), NUM_DISCRETE);
    let count = |k| a.iter().filter(|p| p.kind == k).count();
    assert_eq!((count(PrimitiveKind::Translation), count(PrimitiveKind::Rotation)), (48, 48));
    assert_eq!(count(PrimitiveKind::Insertion), 4);
    assert_eq!(a[99].params, vec![NO_FORCE_LIMIT]);

    let mut env = PegInHoleEnv::with_defaults(TaskPreset::Square.geometry());
    for p in &a {
        env.reset(3);
        env.execute_primitive(p).unwrap();
    }
}

#[test]
fn short_training_run_is_reproducible() {
    let cfg = TrainConfig { hidden: 16, batch_size: 8, warmup: 16, replay_capacity: 200, ..TrainConfig::default() };
    let run = || {
        let mut agent = DqnAgent::new(cfg.clone(), ActionSpace::default(), 6).unwrap();
        let mut env = PegInHoleEnv::with_defaults(TaskPreset::Square.geometry());
        let logs = dqn_train(&mut env, &mut agent, 5, 10).unwrap();
        (logs, agent.episodes_done())
    };
    let (a, done) = run();
    assert_eq!(done, 5);
    assert_eq!(a.iter().map(|l| l.episode).collect::<Vec<_>>(), vec![0, 1, 2, 3, 4]);
    assert!(a.iter().any(|l| l.loss_q1.is_some()));
    assert!(a.iter().all(|l| l.loss_actor.is_none() && l.sigma == 0.0));
    assert_eq!(a, run().0);
}
