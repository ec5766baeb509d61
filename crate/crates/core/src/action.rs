//! Hybrid action space: three primitive types, each with its own continuous
//! parameter slice inside a joint 9-vector.
//!
//! | type        | slots | parameters                     |
//! |-------------|-------|--------------------------------|
//! | translation | 0..4  | `v_x, v_y, v_z` (cm/s), `f_lim` |
//! | rotation    | 4..8  | `v_roll, v_pitch, v_yaw` (rad/s), `f_lim` |
//! | insertion   | 8..9  | `f_lim`                        |
//!
//! Parameters are stored in physical units; normalisation to `[-1, 1]`
//! happens only at the network boundary.

use std::fmt;
use std::ops::Range;

use serde::{Deserialize, Serialize};

use crate::error::{check_len, Error, Result};
use crate::sim::Wrench;

/// Number of discrete primitive types.
pub const NUM_KINDS: usize = 3;
/// Length of the joint parameter vector.
pub const PARAM_DIM: usize = 9;
/// Force-limit sentinel meaning "never stop on force".
pub const NO_FORCE_LIMIT: f64 = f64::INFINITY;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PrimitiveKind {
    Translation,
    Rotation,
    Insertion,
}

impl PrimitiveKind {
    pub const ALL: [PrimitiveKind; NUM_KINDS] = [
        PrimitiveKind::Translation,
        PrimitiveKind::Rotation,
        PrimitiveKind::Insertion,
    ];

    pub fn index(self) -> usize {
        match self {
            PrimitiveKind::Translation => 0,
            PrimitiveKind::Rotation => 1,
            PrimitiveKind::Insertion => 2,
        }
    }

    pub fn from_index(k: usize) -> Result<Self> {
        Self::ALL
            .get(k)
            .copied()
            .ok_or_else(|| Error::Domain(format!("primitive type index {k} out of range")))
    }

    /// Slice of the joint parameter vector owned by this type.
    pub fn slot_range(self) -> Range<usize> {
        match self {
            PrimitiveKind::Translation => 0..4,
            PrimitiveKind::Rotation => 4..8,
            PrimitiveKind::Insertion => 8..9,
        }
    }

    pub fn param_len(self) -> usize {
        self.slot_range().len()
    }
}

impl fmt::Display for PrimitiveKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            PrimitiveKind::Translation => "translation",
            PrimitiveKind::Rotation => "rotation",
            PrimitiveKind::Insertion => "insertion",
        };
        f.write_str(s)
    }
}

/// Six-axis velocity command: linear part in cm/s, angular part in rad/s.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct VelocityCommand(pub [f64; 6]);

impl VelocityCommand {
    pub fn linear(&self) -> [f64; 3] {
        [self.0[0], self.0[1], self.0[2]]
    }

    pub fn angular(&self) -> [f64; 3] {
        [self.0[3], self.0[4], self.0[5]]
    }

    pub fn norm(&self) -> f64 {
        self.0.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    pub fn is_zero(&self) -> bool {
        self.0.iter().all(|v| *v == 0.0)
    }
}

/// A discrete primitive type together with its parameter slice.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ParameterizedAction {
    pub kind: PrimitiveKind,
    pub params: Vec<f64>,
}

impl ParameterizedAction {
    /// Builds and validates an action against `space`.
    pub fn new(kind: PrimitiveKind, params: Vec<f64>, space: &ActionSpace) -> Result<Self> {
        let a = Self { kind, params };
        space.validate(&a)?;
        Ok(a)
    }

    pub fn translation(v: [f64; 3], f_lim: f64) -> Self {
        Self { kind: PrimitiveKind::Translation, params: vec![v[0], v[1], v[2], f_lim] }
    }

    pub fn rotation(w: [f64; 3], f_lim: f64) -> Self {
        Self { kind: PrimitiveKind::Rotation, params: vec![w[0], w[1], w[2], f_lim] }
    }

    pub fn insertion(f_lim: f64) -> Self {
        Self { kind: PrimitiveKind::Insertion, params: vec![f_lim] }
    }

    /// Contact force limit: the last slot of the parameter slice.
    pub fn force_limit(&self) -> f64 {
        force_limit_of(&self.params)
    }
}

/// Per-slot bounds and the velocity/force limits of the primitive set.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ActionSpace {
    /// Translation speed limit, cm/s.
    pub v_max_linear: f64,
    /// Rotation speed limit, rad/s.
    pub v_max_angular: f64,
    /// Upper bound of every force-limit slot, N.
    pub f_max: f64,
    pub low: [f64; PARAM_DIM],
    pub high: [f64; PARAM_DIM],
}

impl Default for ActionSpace {
    fn default() -> Self {
        Self::new(0.5, 0.5, 5.0).expect("default bounds are valid")
    }
}

impl ActionSpace {
    pub fn new(v_max_linear: f64, v_max_angular: f64, f_max: f64) -> Result<Self> {
        if !(v_max_linear > 0.0 && v_max_angular > 0.0 && f_max > 0.0) {
            return Err(Error::Domain("velocity and force limits must be positive".into()));
        }
        let (vl, va) = (v_max_linear, v_max_angular);
        Ok(Self {
            v_max_linear,
            v_max_angular,
            f_max,
            low: [-vl, -vl, -vl, 0.0, -va, -va, -va, 0.0, 0.0],
            high: [vl, vl, vl, f_max, va, va, va, f_max, f_max],
        })
    }

    fn is_force_slot(idx: usize) -> bool {
        matches!(idx, 3 | 7 | 8)
    }

    /// Checks slice length and bounds. The force slot also accepts
    /// [`NO_FORCE_LIMIT`].
    pub fn validate(&self, a: &ParameterizedAction) -> Result<()> {
        let range = a.kind.slot_range();
        check_len(range.len(), a.params.len())?;
        for (&v, idx) in a.params.iter().zip(range) {
            if Self::is_force_slot(idx) && v == NO_FORCE_LIMIT {
                continue;
            }
            if !v.is_finite() || v < self.low[idx] || v > self.high[idx] {
                return Err(Error::Domain(format!(
                    "parameter slot {idx} = {v} outside [{}, {}]",
                    self.low[idx], self.high[idx]
                )));
            }
        }
        Ok(())
    }

    /// Maps `[-1, 1]^9` to physical units slot by slot.
    pub fn denormalize(&self, x: &[f64]) -> Result<[f64; PARAM_DIM]> {
        check_len(PARAM_DIM, x.len())?;
        let mut out = [0.0; PARAM_DIM];
        for i in 0..PARAM_DIM {
            let t = x[i].clamp(-1.0, 1.0);
            out[i] = self.low[i] + (t + 1.0) * 0.5 * (self.high[i] - self.low[i]);
        }
        Ok(out)
    }

    /// Inverse of [`denormalize`](Self::denormalize).
    pub fn normalize(&self, x: &[f64]) -> Result<[f64; PARAM_DIM]> {
        check_len(PARAM_DIM, x.len())?;
        let mut out = [0.0; PARAM_DIM];
        for i in 0..PARAM_DIM {
            out[i] = 2.0 * (x[i] - self.low[i]) / (self.high[i] - self.low[i]) - 1.0;
        }
        Ok(out)
    }

    /// d(physical)/d(normalised) for each slot.
    pub fn half_range(&self) -> [f64; PARAM_DIM] {
        let mut out = [0.0; PARAM_DIM];
        for i in 0..PARAM_DIM {
            out[i] = 0.5 * (self.high[i] - self.low[i]);
        }
        out
    }

    /// Normalises a single slice into its position inside a zeroed 9-vector.
    /// A [`NO_FORCE_LIMIT`] force slot normalises to +1.
    pub fn normalize_slice(&self, kind: PrimitiveKind, params: &[f64]) -> Result<[f64; PARAM_DIM]> {
        let range = kind.slot_range();
        check_len(range.len(), params.len())?;
        let mut out = [0.0; PARAM_DIM];
        for (&v, idx) in params.iter().zip(range) {
            let v = v.min(self.high[idx]);
            out[idx] = 2.0 * (v - self.low[idx]) / (self.high[idx] - self.low[idx]) - 1.0;
        }
        Ok(out)
    }

    /// Velocity command sent to the robot for a primitive.
    pub fn to_velocity_command(&self, kind: PrimitiveKind, params: &[f64]) -> Result<VelocityCommand> {
        check_len(kind.param_len(), params.len())?;
        Ok(match kind {
            PrimitiveKind::Translation => {
                VelocityCommand([params[0], params[1], params[2], 0.0, 0.0, 0.0])
            }
            PrimitiveKind::Rotation => {
                VelocityCommand([0.0, 0.0, 0.0, params[0], params[1], params[2]])
            }
            PrimitiveKind::Insertion => {
                VelocityCommand([0.0, 0.0, -self.v_max_linear, 0.0, 0.0, 0.0])
            }
        })
    }

    /// Velocity command by raw type index.
    pub fn command_for_index(&self, k: usize, params: &[f64]) -> Result<VelocityCommand> {
        self.to_velocity_command(PrimitiveKind::from_index(k)?, params)
    }
}

/// Splits a joint vector into the three per-type slices.
pub fn split_joint(joint: &[f64; PARAM_DIM]) -> [Vec<f64>; NUM_KINDS] {
    PrimitiveKind::ALL.map(|k| joint[k.slot_range()].to_vec())
}

/// Concatenates the three per-type slices back into a joint vector.
pub fn join_slices(slices: &[Vec<f64>; NUM_KINDS]) -> Result<[f64; PARAM_DIM]> {
    let mut out = [0.0; PARAM_DIM];
    for k in PrimitiveKind::ALL {
        let r = k.slot_range();
        check_len(r.len(), slices[k.index()].len())?;
        out[r].copy_from_slice(&slices[k.index()]);
    }
    Ok(out)
}

/// Last slot of a parameter slice.
pub fn force_limit_of(params: &[f64]) -> f64 {
    params.last().copied().unwrap_or(0.0)
}

/// True when the wrench projected on the commanded direction exceeds
/// `f_lim` (strictly). Torques are in N*cm, angular rates in rad/s.
pub fn stop_on_force(cmd: &VelocityCommand, wrench: &Wrench, f_lim: f64) -> Result<bool> {
    let n = cmd.norm();
    if n == 0.0 {
        return Err(Error::Domain("zero velocity command has no direction".into()));
    }
    if f_lim == NO_FORCE_LIMIT {
        return Ok(false);
    }
    let w = wrench.as_array();
    let proj: f64 = cmd.0.iter().zip(w.iter()).map(|(a, b)| a * b).sum::<f64>().abs() / n;
    Ok(proj > f_lim)
}
