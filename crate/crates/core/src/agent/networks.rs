use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::action::{ActionSpace, ParameterizedAction, PrimitiveKind, NUM_KINDS, PARAM_DIM};
use crate::error::{check_len, Result};
use crate::nn::{ForwardCache, Mlp};
use crate::seeding::{stream_rng, STREAM_INIT_ACTOR, STREAM_INIT_Q1, STREAM_INIT_Q2};
use crate::sim::{Observation, OBS_DIM};

pub const Q_INPUT_DIM: usize = OBS_DIM + PARAM_DIM;

/// Per-channel input scale: pose (cm, rad), last velocity, force (N), torque (N*cm).
const FEATURE_SCALE: [f64; OBS_DIM] = [
    1.0, 1.0, 1.0, 1.0, 1.0, 1.0, 2.0, 2.0, 2.0, 2.0, 2.0, 2.0, 0.2, 0.2, 0.2, 0.1, 0.1, 0.1,
];

/// Network input derived from an observation.
pub fn features(obs: &Observation) -> [f64; OBS_DIM] {
    let mut f = obs.0;
    for (v, s) in f.iter_mut().zip(FEATURE_SCALE) {
        *v *= s;
    }
    f
}

pub(crate) fn features_into(obs: &Observation, out: &mut Vec<f64>) {
    out.extend_from_slice(&features(obs));
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AgentNetworks {
    pub q1: Mlp,
    pub q2: Mlp,
    pub actor: Mlp,
    pub q1_target: Mlp,
    pub q2_target: Mlp,
    pub actor_target: Mlp,
}

impl AgentNetworks {
    /// Fresh networks; each main network draws from its own init stream and
    /// its target starts as an exact copy.
    pub fn new(seed: u64, hidden: usize) -> Result<Self> {
        let q1 = Mlp::new(&[Q_INPUT_DIM, hidden, hidden, NUM_KINDS], &mut stream_rng(seed, STREAM_INIT_Q1))?;
        let q2 = Mlp::new(&[Q_INPUT_DIM, hidden, hidden, NUM_KINDS], &mut stream_rng(seed, STREAM_INIT_Q2))?;
        let actor = new_actor(seed, STREAM_INIT_ACTOR, hidden)?;
        Ok(Self {
            q1_target: q1.clone(),
            q2_target: q2.clone(),
            actor_target: actor.clone(),
            q1,
            q2,
            actor,
        })
    }

    pub fn targets_match_architecture(&self) -> bool {
        self.q1.same_architecture(&self.q1_target)
            && self.q2.same_architecture(&self.q2_target)
            && self.actor.same_architecture(&self.actor_target)
    }
}

pub(crate) fn new_actor(seed: u64, stream: u64, hidden: usize) -> Result<Mlp> {
    Mlp::new(&[OBS_DIM, hidden, hidden, PARAM_DIM], &mut stream_rng(seed, stream))
}

/// Writes the masked pass-`k` input rows for `n` states: row `3i + k` holds
/// state `i` followed by normalised parameters that are zero outside slice `k`.
pub(crate) fn multi_pass_rows(feats: &[f64], xnorm: &[f64], n: usize, out: &mut Vec<f64>) {
    out.clear();
    out.reserve(n * NUM_KINDS * Q_INPUT_DIM);
    for i in 0..n {
        let f = &feats[i * OBS_DIM..(i + 1) * OBS_DIM];
        let x = &xnorm[i * PARAM_DIM..(i + 1) * PARAM_DIM];
        for kind in PrimitiveKind::ALL {
            out.extend_from_slice(f);
            let base = out.len();
            out.resize(base + PARAM_DIM, 0.0);
            for j in kind.slot_range() {
                out[base + j] = x[j];
            }
        }
    }
}

/// `Q_k` of pass `k` for each of `n` states, row-major `n x 3`.
pub(crate) fn multi_pass_batch(
    q: &Mlp,
    feats: &[f64],
    xnorm: &[f64],
    n: usize,
    rows: &mut Vec<f64>,
    cache: &mut ForwardCache,
) -> Result<Vec<f64>> {
    multi_pass_rows(feats, xnorm, n, rows);
    q.forward_batch(rows, n * NUM_KINDS, cache)?;
    let out = cache.output();
    let mut q_values = vec![0.0; n * NUM_KINDS];
    for row in 0..n * NUM_KINDS {
        let k = row % NUM_KINDS;
        q_values[row] = out[row * NUM_KINDS + k];
    }
    Ok(q_values)
}

/// Multi-pass evaluation on normalised joint parameters.
pub fn multi_pass_q_normalized(q: &Mlp, obs: &Observation, xnorm: &[f64]) -> Result<[f64; NUM_KINDS]> {
    check_len(PARAM_DIM, xnorm.len())?;
    let f = features(obs);
    let mut rows = Vec::new();
    let mut cache = ForwardCache::default();
    let v = multi_pass_batch(q, &f, xnorm, 1, &mut rows, &mut cache)?;
    Ok([v[0], v[1], v[2]])
}

/// Q value of every primitive type, each computed from its own masked pass.
pub fn multi_pass_q(q: &Mlp, obs: &Observation, joint_params: &[f64], space: &ActionSpace) -> Result<[f64; NUM_KINDS]> {
    let xnorm = space.normalize(joint_params)?;
    multi_pass_q_normalized(q, obs, &xnorm)
}

/// Deterministic actor output in normalised space.
pub fn actor_normalized(actor: &Mlp, obs: &Observation) -> Result<[f64; PARAM_DIM]> {
    let z = actor.forward(&features(obs))?;
    let mut out = [0.0; PARAM_DIM];
    for (o, v) in out.iter_mut().zip(&z) {
        *o = v.tanh();
    }
    Ok(out)
}

/// Gaussian noise clipped to `[-c, c]`; `None` when `sigma` is zero, in which
/// case nothing is drawn from `rng`.
pub fn clipped_noise<R: Rng + ?Sized>(rng: &mut R, len: usize, sigma: f64, c: f64) -> Option<Vec<f64>> {
    if sigma <= 0.0 {
        return None;
    }
    let normal = Normal::new(0.0, sigma).expect("positive finite sigma");
    Some((0..len).map(|_| normal.sample(rng).clamp(-c, c)).collect())
}

/// Adds optional noise to normalised values and clips to `[-1, 1]`.
pub(crate) fn apply_noise(x: &mut [f64], noise: Option<&[f64]>) {
    if let Some(eps) = noise {
        for (v, e) in x.iter_mut().zip(eps) {
            *v = (*v + e).clamp(-1.0, 1.0);
        }
    }
}

/// Smoothed normalised parameters: actor output plus clipped noise.
pub fn smooth_normalized<R: Rng + ?Sized>(
    actor: &Mlp,
    obs: &Observation,
    sigma: f64,
    c: f64,
    rng: &mut R,
) -> Result<[f64; PARAM_DIM]> {
    let mut x = actor_normalized(actor, obs)?;
    let noise = clipped_noise(rng, PARAM_DIM, sigma, c);
    apply_noise(&mut x, noise.as_deref());
    Ok(x)
}

/// Smoothed joint parameters in physical units.
pub fn smooth_params<R: Rng + ?Sized>(
    actor: &Mlp,
    obs: &Observation,
    sigma: f64,
    c: f64,
    space: &ActionSpace,
    rng: &mut R,
) -> Result<[f64; PARAM_DIM]> {
    let x = smooth_normalized(actor, obs, sigma, c, rng)?;
    space.denormalize(&x)
}

/// Index of the largest value; ties go to the lowest index.
pub fn argmax(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, v) in values.iter().enumerate() {
        if *v > values[best] {
            best = i;
        }
    }
    best
}

/// Action chosen by the agent, with the joint parameter vector it came from.
#[derive(Clone, Debug, PartialEq)]
pub struct Selection {
    pub action: ParameterizedAction,
    pub joint: [f64; PARAM_DIM],
    pub explored: bool,
}

/// Epsilon-greedy over types with smoothed parameters.
///
/// Noise is drawn first (only when `sigma > 0`), then the exploration coin
/// (only when `epsilon > 0`), then the random type if exploring.
pub fn select_action<R: Rng + ?Sized>(
    q1: &Mlp,
    actor: &Mlp,
    obs: &Observation,
    epsilon: f64,
    sigma: f64,
    c: f64,
    space: &ActionSpace,
    rng: &mut R,
) -> Result<Selection> {
    let xnorm = smooth_normalized(actor, obs, sigma, c, rng)?;
    let explored = epsilon > 0.0 && rng.random::<f64>() < epsilon;
    let k = if explored {
        rng.random_range(0..NUM_KINDS)
    } else {
        argmax(&multi_pass_q_normalized(q1, obs, &xnorm)?)
    };
    let joint = space.denormalize(&xnorm)?;
    let kind = PrimitiveKind::from_index(k)?;
    let action = ParameterizedAction::new(kind, joint[kind.slot_range()].to_vec(), space)?;
    Ok(Selection { action, joint, explored })
}
