mod common;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use peg_insert::action::{ActionSpace, ParameterizedAction};
use peg_insert::harness::{evaluate, OraclePolicy};
use peg_insert::sim::{
    contact_wrench, max_penetration, HoleFrame, PegInHoleEnv, PegPose, StopReason, TaskPreset, K_EFF,
};

use common::{peg_depth, random_action, setup};

#[test]
fn random_primitives_never_leave_the_peg_inside_the_block() {
    let space = ActionSpace::default();
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut substeps = 0;
    for preset in [TaskPreset::Square, TaskPreset::Triangle, TaskPreset::Pentagon] {
        let mut env = PegInHoleEnv::with_defaults(preset.geometry());
        for episode in 0..15 {
            env.reset(1000 + episode);
            for _ in 0..20 {
                let out = env.execute_primitive(&random_action(&mut rng, &space)).unwrap();
                substeps += out.substeps;
                assert!(out.max_residual_penetration <= 0.01, "{}", out.max_residual_penetration);
                let depth = peg_depth(env.geometry(), &env.peg_pose(), &env.setup().hole_frame());
                assert!(depth <= 0.01, "{preset}: {depth}");
                if out.done {
                    break;
                }
            }
        }
    }
    assert!(substeps > 1000);
}

#[test]
fn wrench_vanishes_exactly_without_penetration() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut touching = 0;
    for preset in [TaskPreset::Square, TaskPreset::Triangle, TaskPreset::Pentagon] {
        let g = preset.geometry();
        let hole = HoleFrame::identity();
        for _ in 0..2000 {
            let pose = PegPose::new(
                [rng.random_range(-60.0..60.0), rng.random_range(-60.0..60.0), rng.random_range(-20.0..3.0)],
                [rng.random_range(-0.05..0.05), rng.random_range(-0.05..0.05), rng.random_range(-0.3..0.3)],
            );
            let depth = peg_depth(&g, &pose, &hole);
            let w = contact_wrench(&pose, &g, &hole);
            assert_eq!(w.is_zero(), depth == 0.0, "{pose:?}");
            assert!((max_penetration(&pose, &g, &hole) - depth).abs() < 1e-9);
            touching += usize::from(depth > 0.0);
        }
    }
    assert!(touching > 500);
}

#[test]
fn flat_press_force_is_stiffness_times_depth() {
    for preset in [TaskPreset::Square, TaskPreset::Triangle, TaskPreset::Pentagon] {
        let g = preset.geometry();
        for (x, y) in [(120.0, 0.0), (-110.0, 30.0), (0.0, 115.0)] {
            for delta in [0.005, 0.1, 0.25, 1.3] {
                let w = contact_wrench(&PegPose::at(x, y, -delta), &g, &HoleFrame::identity());
                let expect = K_EFF * delta;
                assert!(((w.f[2] - expect) / expect).abs() < 1e-9, "{preset} {x} {y} {delta}");
                assert_eq!((w.f[0], w.f[1]), (0.0, 0.0));
            }
        }
    }
}

#[test]
fn press_down_stops_just_past_the_force_limit() {
    for preset in [TaskPreset::Square, TaskPreset::Triangle, TaskPreset::Pentagon] {
        let mut env = PegInHoleEnv::with_defaults(preset.geometry());
        env.reset_to(setup(PegPose::at(55.0, 0.0, 3.0), PegPose::default()));
        let out = env.execute_primitive(&ParameterizedAction::translation([0.0, 0.0, -0.5], 2.0)).unwrap();
        assert_eq!(out.stop_reason, StopReason::ForceLimit);
        let f = env.wrench().f[2];
        assert!(f > 2.0 && f <= 2.0 + K_EFF * 0.25, "{preset}: {f}");
    }
}

#[test]
fn oracle_solves_the_three_shapes() {
    for preset in [TaskPreset::Square, TaskPreset::Triangle, TaskPreset::Pentagon] {
        let mut env = PegInHoleEnv::with_defaults(preset.geometry());
        let r = evaluate(&mut OraclePolicy::default(), &mut env, 100, 20, 77).unwrap();
        assert_eq!(r.successes, 100, "{preset}");
    }
}

#[test]
fn episodes_replay_exactly_from_their_seed() {
    let space = ActionSpace::default();
    let run = |seed: u64| {
        let mut env = PegInHoleEnv::with_defaults(TaskPreset::Triangle.geometry());
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut trace = vec![env.reset(seed)];
        for _ in 0..10 {
            trace.push(env.execute_primitive(&random_action(&mut rng, &space)).unwrap().next_obs);
        }
        trace
    };
    assert_eq!(run(5), run(5));
    assert_ne!(run(5), run(6));
}
