use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::action::{ActionSpace, ParameterizedAction, PrimitiveKind, NUM_KINDS, PARAM_DIM};
use crate::agent::Learner;
use crate::error::Result;
use crate::sim::{Observation, PegInHoleEnv};

/// Chooses the next primitive of an evaluation episode.
pub trait Policy {
    fn name(&self) -> String;

    /// `env` is available for privileged policies; learned ones only look at `obs`.
    fn act(&mut self, env: &PegInHoleEnv, obs: &Observation) -> Result<ParameterizedAction>;

    /// Called before every trial.
    fn reset(&mut self, _trial_seed: u64) {}
}

/// Greedy (no exploration, no smoothing) action of a learner.
pub struct Greedy<'a, L: Learner + ?Sized>(pub &'a L);

impl<L: Learner + ?Sized> Policy for Greedy<'_, L> {
    fn name(&self) -> String {
        self.0.algorithm().to_string()
    }

    fn act(&mut self, _env: &PegInHoleEnv, obs: &Observation) -> Result<ParameterizedAction> {
        self.0.greedy_action(obs)
    }
}

/// Scripted policy that reads the true hole pose: level the peg, align yaw,
/// move over the hole, insert.
#[derive(Clone, Debug)]
pub struct OraclePolicy {
    pub force_limit: f64,
}

impl Default for OraclePolicy {
    fn default() -> Self {
        Self { force_limit: 5.0 }
    }
}

fn scaled(v: [f64; 3], speed: f64) -> [f64; 3] {
    let m = v.iter().fold(0.0f64, |a, b| a.max(b.abs()));
    [v[0] / m * speed, v[1] / m * speed, v[2] / m * speed]
}

impl Policy for OraclePolicy {
    fn name(&self) -> String {
        "oracle".into()
    }

    fn act(&mut self, env: &PegInHoleEnv, obs: &Observation) -> Result<ParameterizedAction> {
        let t = env.setup().true_hole;
        let x = obs.relative_pose();
        let (px, py, pz) = (x[0] * 10.0, x[1] * 10.0, x[2] * 10.0);
        let step = env.config().rotation_threshold_deg.to_radians();
        let reach = env.config().translation_threshold_mm;
        let speed = env.action_space().v_max_linear;
        let spin = env.action_space().v_max_angular;
        let f_lim = self.force_limit;
        let yaw_err = t.r[2] - x[5];
        let roll = x[3];
        if pz > 1.0 {
            // a rotation primitive always turns by `step` in total
            if roll.abs() > 1e-9 {
                let s = if yaw_err >= 0.0 { 1.0 } else { -1.0 };
                let w = [-roll, 0.0, s * (step * step - roll * roll).max(0.0).sqrt()];
                return Ok(ParameterizedAction::rotation(scaled(w, spin), f_lim));
            }
            if yaw_err.abs() >= step {
                return Ok(ParameterizedAction::rotation(scaled([0.0, 0.0, yaw_err.signum()], spin), f_lim));
            }
            if yaw_err.abs() > 1e-6 {
                // turn off-axis so the yaw part lands exactly; the roll is undone next
                let h = yaw_err / 2.0;
                let w = [(step * step - h * h).sqrt(), 0.0, h];
                return Ok(ParameterizedAction::rotation(scaled(w, spin), f_lim));
            }
            let d = [t.p[0] - px, t.p[1] - py];
            let dn = d[0].hypot(d[1]);
            if dn > 1e-3 {
                if dn > reach {
                    return Ok(ParameterizedAction::translation(scaled([d[0], d[1], 0.0], speed), f_lim));
                }
                let v = (reach * reach - dn * dn).sqrt();
                let vz = if pz - v >= 2.0 { -v } else { v };
                return Ok(ParameterizedAction::translation(scaled([d[0], d[1], vz], speed), f_lim));
            }
        }
        Ok(ParameterizedAction::insertion(f_lim))
    }
}

/// Uniform primitive type and uniform parameters within the bounds.
#[derive(Clone, Debug)]
pub struct RandomPolicy {
    space: ActionSpace,
    seed: u64,
    rng: ChaCha8Rng,
}

impl RandomPolicy {
    pub fn new(space: ActionSpace, seed: u64) -> Self {
        Self { space, seed, rng: ChaCha8Rng::seed_from_u64(seed) }
    }
}

impl Policy for RandomPolicy {
    fn name(&self) -> String {
        "random".into()
    }

    fn act(&mut self, _env: &PegInHoleEnv, _obs: &Observation) -> Result<ParameterizedAction> {
        let kind = PrimitiveKind::from_index(self.rng.random_range(0..NUM_KINDS))?;
        let mut joint = [0.0; PARAM_DIM];
        for (i, v) in joint.iter_mut().enumerate() {
            *v = self.rng.random_range(self.space.low[i]..=self.space.high[i]);
        }
        ParameterizedAction::new(kind, joint[kind.slot_range()].to_vec(), &self.space)
    }

    fn reset(&mut self, trial_seed: u64) {
        self.rng = ChaCha8Rng::seed_from_u64(self.seed ^ trial_seed);
    }
}
