use crate::action::{ActionSpace, PrimitiveKind, NUM_KINDS, PARAM_DIM};
use crate::error::{check_len, Error, Result};
use crate::nn::{clip_grad_norm, AdamState, ForwardCache, Mlp};
use crate::sim::OBS_DIM;

use super::networks::{apply_noise, features_into, multi_pass_batch, Q_INPUT_DIM};
use super::replay::Transition;

/// Column-packed minibatch ready for the networks.
#[derive(Clone, Debug, PartialEq)]
pub struct Batch {
    pub n: usize,
    /// `n x 18` state features.
    pub feats: Vec<f64>,
    pub next_feats: Vec<f64>,
    pub kinds: Vec<usize>,
    /// `n x 27` critic inputs: state features then the stored parameters,
    /// normalised and masked to their own slice.
    pub q_inputs: Vec<f64>,
    pub rewards: Vec<f64>,
    pub dones: Vec<bool>,
}

impl Batch {
    pub fn from_transitions(ts: &[&Transition], space: &ActionSpace, reward_scale: f64) -> Result<Self> {
        let n = ts.len();
        if n == 0 {
            return Err(Error::Domain("empty batch".into()));
        }
        let mut b = Batch {
            n,
            feats: Vec::with_capacity(n * OBS_DIM),
            next_feats: Vec::with_capacity(n * OBS_DIM),
            kinds: Vec::with_capacity(n),
            q_inputs: Vec::with_capacity(n * Q_INPUT_DIM),
            rewards: Vec::with_capacity(n),
            dones: Vec::with_capacity(n),
        };
        for t in ts {
            let kind = PrimitiveKind::from_index(t.k)?;
            features_into(&t.s, &mut b.feats);
            features_into(&t.s_next, &mut b.next_feats);
            features_into(&t.s, &mut b.q_inputs);
            b.q_inputs.extend_from_slice(&space.normalize_slice(kind, &t.x_k)?);
            b.kinds.push(t.k);
            b.rewards.push(t.r * reward_scale);
            b.dones.push(t.done);
        }
        Ok(b)
    }
}

/// Reusable work buffers for the update step.
#[derive(Clone, Debug, Default)]
pub struct Scratch {
    rows: Vec<f64>,
    cache_a: ForwardCache,
    cache_b: ForwardCache,
}

impl Scratch {
    /// Critic input rows of the last multi-pass evaluation.
    pub(crate) fn q_rows(&self) -> &[f64] {
        &self.rows
    }
}

/// Elementwise tanh of an `n x 9` actor pre-activation.
fn squash(pre: &[f64]) -> Vec<f64> {
    pre.iter().map(|v| v.tanh()).collect()
}

/// Largest multi-pass value per state, `n` entries.
fn max_over_kinds(q_values: &[f64]) -> Vec<f64> {
    q_values.chunks_exact(NUM_KINDS).map(|c| c.iter().copied().fold(f64::NEG_INFINITY, f64::max)).collect()
}

/// Bootstrap targets from the target networks.
///
/// `noise` is the already-clipped smoothing noise for the target actor
/// (`n x 9`), or `None` for the unsmoothed output. With `twin` the smaller of
/// the two target critics' maxima is used, otherwise `q1_target` alone.
#[allow(clippy::too_many_arguments)]
pub fn compute_targets(
    actor_target: &Mlp,
    q1_target: &Mlp,
    q2_target: &Mlp,
    batch: &Batch,
    gamma: f64,
    twin: bool,
    noise: Option<&[f64]>,
    scratch: &mut Scratch,
) -> Result<Vec<f64>> {
    let n = batch.n;
    if let Some(e) = noise {
        check_len(n * PARAM_DIM, e.len())?;
    }
    actor_target.forward_batch(&batch.next_feats, n, &mut scratch.cache_a)?;
    let mut x = squash(scratch.cache_a.output());
    apply_noise(&mut x, noise);
    let m1 = max_over_kinds(&multi_pass_batch(q1_target, &batch.next_feats, &x, n, &mut scratch.rows, &mut scratch.cache_b)?);
    let best = if twin {
        let m2 =
            max_over_kinds(&multi_pass_batch(q2_target, &batch.next_feats, &x, n, &mut scratch.rows, &mut scratch.cache_b)?);
        m1.iter().zip(&m2).map(|(a, b)| a.min(*b)).collect()
    } else {
        m1
    };
    Ok((0..n)
        .map(|i| if batch.dones[i] { batch.rewards[i] } else { batch.rewards[i] + gamma * best[i] })
        .collect())
}

/// Mean squared error of head `k_i` against `y_i` and its parameter gradient.
pub fn critic_loss_grad(q: &Mlp, batch: &Batch, targets: &[f64], cache: &mut ForwardCache) -> Result<(f64, Vec<f64>)> {
    let n = batch.n;
    check_len(n, targets.len())?;
    q.forward_batch(&batch.q_inputs, n, cache)?;
    let out = cache.output();
    let mut d_out = vec![0.0; n * NUM_KINDS];
    let mut loss = 0.0;
    for i in 0..n {
        let err = out[i * NUM_KINDS + batch.kinds[i]] - targets[i];
        loss += err * err;
        d_out[i * NUM_KINDS + batch.kinds[i]] = 2.0 * err / n as f64;
    }
    loss /= n as f64;
    if !loss.is_finite() {
        return Err(Error::NonFinite("critic loss"));
    }
    let mut grads = vec![0.0; q.num_params()];
    q.backward_batch(cache, &d_out, Some(&mut grads), None)?;
    Ok((loss, grads))
}

/// `-mean_i sum_k Q1(s_i, k, x_k(s_i))` and its gradient in the actor's
/// parameters. `noise` is the clipped smoothing noise (`n x 9`) or `None`.
///
/// The gradient passes through the multi-pass inputs of `q1`, the outer
/// clip (identity strictly inside the bounds, zero outside) and tanh.
pub fn actor_loss_grad(
    actor: &Mlp,
    q1: &Mlp,
    feats: &[f64],
    n: usize,
    noise: Option<&[f64]>,
    scratch: &mut Scratch,
) -> Result<(f64, Vec<f64>)> {
    if let Some(e) = noise {
        check_len(n * PARAM_DIM, e.len())?;
    }
    actor.forward_batch(feats, n, &mut scratch.cache_a)?;
    let a = squash(scratch.cache_a.output());
    let mut x = a.clone();
    let mut gate = vec![1.0; n * PARAM_DIM];
    if let Some(e) = noise {
        for j in 0..x.len() {
            let u = a[j] + e[j];
            if u <= -1.0 || u >= 1.0 {
                gate[j] = 0.0;
            }
            x[j] = u.clamp(-1.0, 1.0);
        }
    }
    let q_values = multi_pass_batch(q1, feats, &x, n, &mut scratch.rows, &mut scratch.cache_b)?;
    let loss = -q_values.iter().sum::<f64>() / n as f64;
    if !loss.is_finite() {
        return Err(Error::NonFinite("actor loss"));
    }
    let rows = n * NUM_KINDS;
    let mut d_out = vec![0.0; rows * NUM_KINDS];
    for row in 0..rows {
        d_out[row * NUM_KINDS + row % NUM_KINDS] = -1.0 / n as f64;
    }
    let mut d_in = vec![0.0; rows * Q_INPUT_DIM];
    q1.backward_batch(&scratch.cache_b, &d_out, None, Some(&mut d_in))?;
    let mut d_pre = vec![0.0; n * PARAM_DIM];
    for i in 0..n {
        for kind in PrimitiveKind::ALL {
            let row = i * NUM_KINDS + kind.index();
            for j in kind.slot_range() {
                let dx = d_in[row * Q_INPUT_DIM + OBS_DIM + j];
                let idx = i * PARAM_DIM + j;
                d_pre[idx] = dx * gate[idx] * (1.0 - a[idx] * a[idx]);
            }
        }
    }
    let mut grads = vec![0.0; actor.num_params()];
    actor.backward_batch(&scratch.cache_a, &d_pre, Some(&mut grads), None)?;
    Ok((loss, grads))
}

/// Clipped Adam step on one critic; returns the loss before the step.
/// With `apply` false the loss is computed but the network is left alone.
pub fn critic_step(
    q: &mut Mlp,
    opt: &mut AdamState,
    batch: &Batch,
    targets: &[f64],
    grad_clip: f64,
    apply: bool,
    scratch: &mut Scratch,
) -> Result<f64> {
    let (loss, mut grads) = critic_loss_grad(q, batch, targets, &mut scratch.cache_a)?;
    if apply {
        clip_grad_norm(&mut grads, grad_clip);
        opt.step(q.params_mut(), &grads)?;
    }
    Ok(loss)
}

/// Clipped Adam step on the actor with `q1` held fixed.
#[allow(clippy::too_many_arguments)]
pub fn actor_step(
    actor: &mut Mlp,
    opt: &mut AdamState,
    q1: &Mlp,
    batch: &Batch,
    noise: Option<&[f64]>,
    grad_clip: f64,
    scratch: &mut Scratch,
) -> Result<f64> {
    let (loss, mut grads) = actor_loss_grad(actor, q1, &batch.feats, batch.n, noise, scratch)?;
    clip_grad_norm(&mut grads, grad_clip);
    opt.step(actor.params_mut(), &grads)?;
    Ok(loss)
}
