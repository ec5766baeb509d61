//! Quasi-static peg-in-hole environment.
//!
//! The robot drives a reference pose along the commanded velocity; the peg
//! is the reference projected out of the solid. The contact wrench is the
//! penalty wrench of the reference pose, so pressing into a surface builds
//! force while the peg itself never penetrates beyond the tolerance.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};
use std::fmt;

use super::contact::{contact_wrench_in, max_penetration, ContactMode, Resolver};
use super::geometry::TaskGeometry;
use super::pose::{norm, wrap_angle, HoleFrame, PegPose, Wrench};
use crate::action::{stop_on_force, ActionSpace, ParameterizedAction, PrimitiveKind, VelocityCommand};
use crate::error::{Error, Result};

/// Observation length: relative pose (6) + commanded velocity (6) + wrench (6).
pub const OBS_DIM: usize = 18;

/// Simulator constants.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimConfig {
    pub translation_step_mm: f64,
    pub rotation_step_deg: f64,
    pub translation_threshold_mm: f64,
    pub rotation_threshold_deg: f64,
    pub penetration_tolerance_mm: f64,
    pub resolve_iterations: usize,
    pub yaw_compliance: bool,
    /// Largest reference-to-peg offset the controller sustains, mm.
    pub max_deflection_mm: f64,
    pub max_yaw_deflection_deg: f64,
    pub workspace_xy_mm: f64,
    pub workspace_z_max_mm: f64,
    pub max_tilt_rad: f64,
    pub success_depth_mm: f64,
    pub success_tilt_deg: f64,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            translation_step_mm: 0.25,
            rotation_step_deg: 0.1,
            translation_threshold_mm: 25.0,
            rotation_threshold_deg: 4.0,
            penetration_tolerance_mm: 0.01,
            resolve_iterations: 10,
            yaw_compliance: true,
            max_deflection_mm: 2.0,
            max_yaw_deflection_deg: 2.0,
            workspace_xy_mm: 60.0,
            workspace_z_max_mm: 60.0,
            max_tilt_rad: 0.5,
            success_depth_mm: 15.0,
            success_tilt_deg: 1.0,
        }
    }
}

/// Hole-pose noise and peg start distribution.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Uncertainty {
    pub hole_sigma_xy_mm: f64,
    pub hole_sigma_yaw_deg: f64,
    pub truncation_sigmas: f64,
    pub start_height_mm: f64,
    pub start_xy_range_mm: f64,
    pub start_yaw_range_deg: f64,
}

impl Default for Uncertainty {
    fn default() -> Self {
        Self {
            hole_sigma_xy_mm: 2.0,
            hole_sigma_yaw_deg: 0.5,
            truncation_sigmas: 3.0,
            start_height_mm: 30.0,
            start_xy_range_mm: 30.0,
            start_yaw_range_deg: 10.0,
        }
    }
}

/// Hidden and visible quantities fixed at the start of an episode.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EpisodeSetup {
    pub nominal_hole: PegPose,
    pub true_hole: PegPose,
    pub initial_peg: PegPose,
    pub seed: u64,
}

impl EpisodeSetup {
    pub fn hole_frame(&self) -> HoleFrame {
        HoleFrame { x: self.true_hole.p[0], y: self.true_hole.p[1], yaw: self.true_hole.r[2] }
    }
}

/// `(x, xdot, F_ext)`: pose relative to the nominal hole (cm, rad), last
/// commanded velocity (cm/s, rad/s) and the contact wrench (N, N*cm).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Observation(pub [f64; OBS_DIM]);

impl Observation {
    pub fn relative_pose(&self) -> [f64; 6] {
        self.0[0..6].try_into().expect("slice of length 6")
    }

    pub fn velocity(&self) -> [f64; 6] {
        self.0[6..12].try_into().expect("slice of length 6")
    }

    pub fn wrench(&self) -> [f64; 6] {
        self.0[12..18].try_into().expect("slice of length 6")
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().all(|v| v.is_finite())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StopReason {
    ForceLimit,
    DistanceThreshold,
    Success,
    Clamp,
}

impl fmt::Display for StopReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            StopReason::ForceLimit => "force_limit",
            StopReason::DistanceThreshold => "distance_threshold",
            StopReason::Success => "success",
            StopReason::Clamp => "clamp",
        })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct PrimitiveOutcome {
    pub next_obs: Observation,
    pub reward: f64,
    pub done: bool,
    pub stop_reason: StopReason,
    pub substeps: usize,
    /// Largest peg penetration seen after any sub-step resolution, mm.
    pub max_residual_penetration: f64,
}

/// Goal pose in observation units and the success norm.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RewardSpec {
    pub x_goal: [f64; 6],
    pub success_tolerance: f64,
}

/// `10^(3 - ||x - x_goal||)` with `x` the first six observation entries.
pub fn reward(obs: &Observation, spec: &RewardSpec) -> f64 {
    10f64.powf(3.0 - goal_error(obs, spec))
}

pub fn goal_error(obs: &Observation, spec: &RewardSpec) -> f64 {
    obs.relative_pose()
        .iter()
        .zip(spec.x_goal.iter())
        .map(|(a, b)| (a - b) * (a - b))
        .sum::<f64>()
        .sqrt()
}

/// Samples a hole-pose perturbation and a peg start pose from `seed`.
pub fn sample_setup(uncertainty: &Uncertainty, seed: u64) -> EpisodeSetup {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let truncated = |rng: &mut ChaCha8Rng, sigma: f64| -> f64 {
        if sigma <= 0.0 {
            return 0.0;
        }
        let bound = uncertainty.truncation_sigmas * sigma;
        let normal = Normal::new(0.0, sigma).expect("positive sigma");
        loop {
            let v = normal.sample(rng);
            if v.abs() <= bound {
                return v;
            }
        }
    };
    let dx = truncated(&mut rng, uncertainty.hole_sigma_xy_mm);
    let dy = truncated(&mut rng, uncertainty.hole_sigma_xy_mm);
    let dyaw = truncated(&mut rng, uncertainty.hole_sigma_yaw_deg.to_radians());
    let r = uncertainty.start_xy_range_mm;
    let yr = uncertainty.start_yaw_range_deg.to_radians();
    let px = if r > 0.0 { rng.random_range(-r..=r) } else { 0.0 };
    let py = if r > 0.0 { rng.random_range(-r..=r) } else { 0.0 };
    let pyaw = if yr > 0.0 { rng.random_range(-yr..=yr) } else { 0.0 };
    EpisodeSetup {
        nominal_hole: PegPose::default(),
        true_hole: PegPose::new([dx, dy, 0.0], [0.0, 0.0, dyaw]),
        initial_peg: PegPose::new([px, py, uncertainty.start_height_mm], [0.0, 0.0, pyaw]),
        seed,
    }
}

/// Peg bottom at least `success_depth_mm` below the true hole top, laterally
/// within the clearance of the true centre and nearly upright.
pub fn check_success(pose: &PegPose, setup: &EpisodeSetup, geom: &TaskGeometry, config: &SimConfig) -> bool {
    let local = setup.hole_frame().to_local(pose.p);
    let tilt = config.success_tilt_deg.to_radians();
    local[2] <= -config.success_depth_mm
        && local[0].hypot(local[1]) <= geom.clearance
        && pose.r[0].abs() <= tilt
        && pose.r[1].abs() <= tilt
}

/// One peg-in-hole task instance.
#[derive(Clone, Debug)]
pub struct PegInHoleEnv {
    geom: TaskGeometry,
    config: SimConfig,
    uncertainty: Uncertainty,
    space: ActionSpace,
    resolver: Resolver,
    setup: EpisodeSetup,
    hole: HoleFrame,
    peg: PegPose,
    reference: PegPose,
    last_cmd: VelocityCommand,
    wrench: Wrench,
    finished: bool,
}

impl PegInHoleEnv {
    pub fn new(geom: TaskGeometry, config: SimConfig, uncertainty: Uncertainty) -> Self {
        let resolver = Resolver {
            max_iters: config.resolve_iterations,
            tolerance: config.penetration_tolerance_mm,
            yaw_compliance: config.yaw_compliance,
        };
        let setup = EpisodeSetup {
            nominal_hole: PegPose::default(),
            true_hole: PegPose::default(),
            initial_peg: PegPose::at(0.0, 0.0, uncertainty.start_height_mm),
            seed: 0,
        };
        let mut env = Self {
            geom,
            config,
            uncertainty,
            space: ActionSpace::default(),
            resolver,
            setup,
            hole: HoleFrame::identity(),
            peg: PegPose::default(),
            reference: PegPose::default(),
            last_cmd: VelocityCommand::default(),
            wrench: Wrench::default(),
            finished: false,
        };
        env.reset_to(setup);
        env
    }

    pub fn with_defaults(geom: TaskGeometry) -> Self {
        Self::new(geom, SimConfig::default(), Uncertainty::default())
    }

    /// Starts an episode from a seed-derived setup.
    pub fn reset(&mut self, seed: u64) -> Observation {
        let setup = sample_setup(&self.uncertainty, seed);
        self.reset_to(setup)
    }

    /// Starts an episode from an explicit setup.
    pub fn reset_to(&mut self, setup: EpisodeSetup) -> Observation {
        self.setup = setup;
        self.hole = setup.hole_frame();
        self.peg = setup.initial_peg;
        self.reference = setup.initial_peg;
        self.last_cmd = VelocityCommand::default();
        let mode = ContactMode::of(&self.peg, &self.geom, &self.hole);
        self.wrench = contact_wrench_in(&self.reference, &self.geom, &self.hole, mode);
        self.finished = check_success(&self.peg, &self.setup, &self.geom, &self.config);
        self.observation()
    }

    pub fn observation(&self) -> Observation {
        let mut o = [0.0; OBS_DIM];
        let p = self.peg.p;
        o[0] = p[0] / 10.0;
        o[1] = p[1] / 10.0;
        o[2] = p[2] / 10.0;
        o[3] = self.peg.r[0];
        o[4] = self.peg.r[1];
        o[5] = wrap_angle(self.peg.r[2]);
        o[6..12].copy_from_slice(&self.last_cmd.0);
        o[12..18].copy_from_slice(&self.wrench.as_array());
        Observation(o)
    }

    pub fn reward_spec(&self) -> RewardSpec {
        let t = self.setup.true_hole;
        RewardSpec {
            x_goal: [t.p[0] / 10.0, t.p[1] / 10.0, -self.config.success_depth_mm / 10.0, 0.0, 0.0, t.r[2]],
            success_tolerance: 0.1,
        }
    }

    pub fn geometry(&self) -> &TaskGeometry {
        &self.geom
    }

    pub fn config(&self) -> &SimConfig {
        &self.config
    }

    pub fn uncertainty(&self) -> &Uncertainty {
        &self.uncertainty
    }

    pub fn action_space(&self) -> &ActionSpace {
        &self.space
    }

    pub fn setup(&self) -> &EpisodeSetup {
        &self.setup
    }

    pub fn peg_pose(&self) -> PegPose {
        self.peg
    }

    pub fn reference_pose(&self) -> PegPose {
        self.reference
    }

    pub fn wrench(&self) -> Wrench {
        self.wrench
    }

    pub fn is_success(&self) -> bool {
        check_success(&self.peg, &self.setup, &self.geom, &self.config)
    }

    pub fn peg_penetration(&self) -> f64 {
        max_penetration(&self.peg, &self.geom, &self.hole)
    }

    /// Distance from the observation to the goal in observation units.
    pub fn goal_error(&self) -> f64 {
        goal_error(&self.observation(), &self.reward_spec())
    }

    fn clamp_workspace(&self, mut pose: PegPose) -> PegPose {
        let c = &self.config;
        pose.p[0] = pose.p[0].clamp(-c.workspace_xy_mm, c.workspace_xy_mm);
        pose.p[1] = pose.p[1].clamp(-c.workspace_xy_mm, c.workspace_xy_mm);
        pose.p[2] = pose.p[2].clamp(-self.geom.hole_depth, c.workspace_z_max_mm);
        pose.r[0] = pose.r[0].clamp(-c.max_tilt_rad, c.max_tilt_rad);
        pose.r[1] = pose.r[1].clamp(-c.max_tilt_rad, c.max_tilt_rad);
        pose
    }

    /// Keeps the reference within the sustainable deflection of the peg.
    fn limit_deflection(&self, mut reference: PegPose) -> PegPose {
        let d = [
            reference.p[0] - self.peg.p[0],
            reference.p[1] - self.peg.p[1],
            reference.p[2] - self.peg.p[2],
        ];
        let n = norm(d);
        let max = self.config.max_deflection_mm;
        if n > max {
            let s = max / n;
            for i in 0..3 {
                reference.p[i] = self.peg.p[i] + d[i] * s;
            }
        }
        let max_yaw = self.config.max_yaw_deflection_deg.to_radians();
        let dy = reference.r[2] - self.peg.r[2];
        reference.r[2] = self.peg.r[2] + dy.clamp(-max_yaw, max_yaw);
        reference
    }

    /// Runs one primitive to its exit condition.
    pub fn execute_primitive(&mut self, action: &ParameterizedAction) -> Result<PrimitiveOutcome> {
        self.space.validate(action)?;
        if self.finished {
            return Err(Error::Domain("episode already finished".into()));
        }
        let cmd = self.space.to_velocity_command(action.kind, &action.params)?;
        let f_lim = action.force_limit();
        self.last_cmd = cmd;

        let rotational = action.kind == PrimitiveKind::Rotation;
        let (dir_src, step_cap, threshold) = if rotational {
            (
                cmd.angular(),
                self.config.rotation_step_deg.to_radians(),
                self.config.rotation_threshold_deg.to_radians(),
            )
        } else {
            (cmd.linear(), self.config.translation_step_mm, self.config.translation_threshold_mm)
        };
        let speed = norm(dir_src);
        let mut substeps = 0;
        let mut max_residual: f64 = 0.0;
        let stop_reason = if speed == 0.0 {
            StopReason::Clamp
        } else {
            let dir = [dir_src[0] / speed, dir_src[1] / speed, dir_src[2] / speed];
            let mut travelled = 0.0;
            loop {
                let step = step_cap.min(threshold - travelled);
                travelled += step;
                let mut next = self.reference;
                if rotational {
                    for i in 0..3 {
                        next.r[i] += dir[i] * step;
                    }
                } else {
                    for i in 0..3 {
                        next.p[i] += dir[i] * step;
                    }
                }
                let next = self.clamp_workspace(next);
                if next == self.reference {
                    break StopReason::Clamp;
                }
                let delta = PegPose::new(
                    [next.p[0] - self.reference.p[0], next.p[1] - self.reference.p[1], next.p[2] - self.reference.p[2]],
                    [next.r[0] - self.reference.r[0], next.r[1] - self.reference.r[1], next.r[2] - self.reference.r[2]],
                );
                self.reference = next;
                let incremental = PegPose::new(
                    [self.peg.p[0] + delta.p[0], self.peg.p[1] + delta.p[1], self.peg.p[2] + delta.p[2]],
                    [self.peg.r[0] + delta.r[0], self.peg.r[1] + delta.r[1], self.peg.r[2] + delta.r[2]],
                );
                let mode = ContactMode::of(&self.peg, &self.geom, &self.hole);
                let resolved = self
                    .resolver
                    .resolve_in(next, &self.geom, &self.hole, mode)
                    .or_else(|| self.resolver.resolve_in(incremental, &self.geom, &self.hole, mode));
                if let Some((pose, residual)) = resolved {
                    self.peg = pose;
                    max_residual = max_residual.max(residual);
                }
                self.reference = self.limit_deflection(self.reference);
                let mode = ContactMode::of(&self.peg, &self.geom, &self.hole);
                self.wrench = contact_wrench_in(&self.reference, &self.geom, &self.hole, mode);
                substeps += 1;

                if check_success(&self.peg, &self.setup, &self.geom, &self.config) {
                    break StopReason::Success;
                }
                if stop_on_force(&cmd, &self.wrench, f_lim)? {
                    break StopReason::ForceLimit;
                }
                if travelled >= threshold - 1e-12 {
                    break StopReason::DistanceThreshold;
                }
            }
        };

        let done = stop_reason == StopReason::Success;
        self.finished = done;
        let next_obs = self.observation();
        let reward = reward(&next_obs, &self.reward_spec());
        Ok(PrimitiveOutcome {
            next_obs,
            reward,
            done,
            stop_reason,
            substeps,
            max_residual_penetration: max_residual,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sim::contact::K_EFF;
    use crate::sim::geometry::TaskPreset;

    fn env_with(start: PegPose, hole: PegPose) -> PegInHoleEnv {
        let mut env = PegInHoleEnv::with_defaults(TaskPreset::Square.geometry());
        env.reset_to(EpisodeSetup { nominal_hole: PegPose::default(), true_hole: hole, initial_peg: start, seed: 0 });
        env
    }

    #[test]
    fn free_space_translation_travels_threshold() {
        let mut env = env_with(PegPose::at(30.0, 0.0, 30.0), PegPose::default());
        let out = env.execute_primitive(&ParameterizedAction::translation([-0.5, 0.0, 0.0], 5.0)).unwrap();
        assert_eq!(out.stop_reason, StopReason::DistanceThreshold);
        assert_eq!(env.peg_pose().p, [5.0, 0.0, 30.0]);
        assert!(env.wrench().is_zero());
        assert_eq!(out.substeps, 100);
        assert_eq!(out.next_obs.velocity(), [-0.5, 0.0, 0.0, 0.0, 0.0, 0.0]);
    }

    #[test]
    fn free_space_rotation_turns_four_degrees() {
        let mut env = env_with(PegPose::at(0.0, 0.0, 30.0), PegPose::default());
        env.execute_primitive(&ParameterizedAction::rotation([0.0, 0.0, 0.3], 5.0)).unwrap();
        assert!((env.peg_pose().r[2] - 4f64.to_radians()).abs() < 1e-12);
        assert_eq!(env.peg_pose().p, [0.0, 0.0, 30.0]);
    }

    #[test]
    fn press_down_stops_on_force() {
        let mut env = env_with(PegPose::at(55.0, 0.0, 3.0), PegPose::default());
        let out = env.execute_primitive(&ParameterizedAction::translation([0.0, 0.0, -0.5], 2.0)).unwrap();
        assert_eq!(out.stop_reason, StopReason::ForceLimit);
        let projected = env.wrench().f[2];
        assert!(projected > 2.0 && projected <= 2.0 + K_EFF * 0.25, "{projected}");
        assert!(env.peg_penetration() <= 0.01);
    }

    #[test]
    fn aligned_insertion_succeeds() {
        let hole = PegPose::new([1.3, -0.7, 0.0], [0.0, 0.0, 0.01]);
        let start = PegPose::new([1.45, -0.6, 5.0], [0.0, 0.0, 0.01]);
        let mut env = env_with(start, hole);
        let out = env.execute_primitive(&ParameterizedAction::insertion(5.0)).unwrap();
        assert_eq!(out.stop_reason, StopReason::Success);
        assert!(out.done);
        assert!(env.peg_pose().p[2] <= -15.0);
        assert!(out.reward >= 794.0, "{}", out.reward);
    }

    #[test]
    fn zero_command_changes_nothing() {
        let mut env = env_with(PegPose::at(55.0, 0.0, 1.0), PegPose::default());
        env.execute_primitive(&ParameterizedAction::translation([0.0, 0.0, -0.5], 3.0)).unwrap();
        let (peg, w) = (env.peg_pose(), env.wrench());
        let out = env.execute_primitive(&ParameterizedAction::translation([0.0, 0.0, 0.0], 3.0)).unwrap();
        assert_eq!(out.stop_reason, StopReason::Clamp);
        assert_eq!(out.substeps, 0);
        assert_eq!(env.peg_pose(), peg);
        assert_eq!(env.wrench(), w);
    }

    #[test]
    fn workspace_clamp_stops_motion() {
        let mut env = env_with(PegPose::at(59.0, 0.0, 30.0), PegPose::default());
        let out = env.execute_primitive(&ParameterizedAction::translation([0.5, 0.0, 0.0], 5.0)).unwrap();
        assert_eq!(out.stop_reason, StopReason::Clamp);
        assert_eq!(env.peg_pose().p[0], 60.0);
    }

    #[test]
    fn invalid_action_is_rejected() {
        let mut env = env_with(PegPose::at(0.0, 0.0, 30.0), PegPose::default());
        assert!(env.execute_primitive(&ParameterizedAction::insertion(7.0)).is_err());
        let bad = ParameterizedAction { kind: PrimitiveKind::Rotation, params: vec![0.1] };
        assert!(env.execute_primitive(&bad).is_err());
    }

    #[test]
    fn reward_examples() {
        let spec = RewardSpec { x_goal: [0.0; 6], success_tolerance: 0.1 };
        let mut o = Observation([0.0; OBS_DIM]);
        assert_eq!(reward(&o, &spec), 1000.0);
        o.0[2] = 3.0;
        assert!((reward(&o, &spec) - 1.0).abs() < 1e-12);
        o.0[2] = 1.0;
        assert!((reward(&o, &spec) - 100.0).abs() < 1e-12);
        // velocity and wrench do not enter the error
        o.0[8] = 7.0;
        o.0[15] = 2.0;
        assert!((reward(&o, &spec) - 100.0).abs() < 1e-12);
    }

    #[test]
    fn reset_is_deterministic_and_bounded() {
        let u = Uncertainty::default();
        assert_eq!(sample_setup(&u, 42), sample_setup(&u, 42));
        assert_ne!(sample_setup(&u, 42), sample_setup(&u, 43));
        let mut sum2 = 0.0;
        let n = 10_000;
        for seed in 0..n {
            let s = sample_setup(&u, seed);
            assert!(s.true_hole.p[0].abs() <= 6.0 && s.true_hole.p[1].abs() <= 6.0);
            assert!(s.true_hole.r[2].abs() <= 1.5f64.to_radians() + 1e-15);
            assert_eq!(s.initial_peg.p[2], 30.0);
            assert!(s.initial_peg.p[0].abs() <= 30.0 && s.initial_peg.p[1].abs() <= 30.0);
            assert!(s.initial_peg.r[2].abs() <= 10f64.to_radians());
            sum2 += s.true_hole.p[0] * s.true_hole.p[0];
        }
        let std = (sum2 / n as f64).sqrt();
        assert!((std - 2.0).abs() <= 0.2, "{std}");
    }

    #[test]
    fn success_predicate() {
        let g = TaskPreset::Square.geometry();
        let c = SimConfig::default();
        let setup = sample_setup(&Uncertainty::default(), 3);
        let h = setup.true_hole;
        let at = |z: f64, tilt: f64| PegPose::new([h.p[0], h.p[1], z], [tilt, 0.0, h.r[2]]);
        assert!(check_success(&at(-20.0, 0.0), &setup, &g, &c));
        assert!(!check_success(&at(-5.0, 0.0), &setup, &g, &c));
        assert!(!check_success(&at(-20.0, 3f64.to_radians()), &setup, &g, &c));
    }

    #[test]
    fn initial_observation() {
        let mut env = PegInHoleEnv::with_defaults(TaskPreset::Square.geometry());
        let o = env.reset(11);
        let s = env.setup().initial_peg;
        assert_eq!(o.0[0], s.p[0] / 10.0);
        assert_eq!(o.0[2], 3.0);
        assert_eq!(o.velocity(), [0.0; 6]);
        assert_eq!(o.wrench(), [0.0; 6]);
    }
}
