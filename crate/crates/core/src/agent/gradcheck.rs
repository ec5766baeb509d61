//! Finite-difference checks of the critic and actor losses.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::action::{ActionSpace, PrimitiveKind, NUM_KINDS, PARAM_DIM};
use crate::error::Result;
use crate::nn::gradcheck::{central_difference, max_relative_error, mlp_suite, FD_STEP, KINK_MARGIN};
use crate::nn::{ForwardCache, Mlp};
use crate::sim::{Observation, OBS_DIM};

use super::networks::Q_INPUT_DIM;
use super::replay::Transition;
use super::update::{actor_loss_grad, critic_loss_grad, Batch, Scratch};

/// Random transitions with in-bounds parameters and a mix of terminal flags.
pub fn random_transitions<R: Rng + ?Sized>(rng: &mut R, n: usize, space: &ActionSpace) -> Result<Vec<Transition>> {
    (0..n)
        .map(|_| {
            let mut s = [0.0; OBS_DIM];
            let mut s2 = [0.0; OBS_DIM];
            for j in 0..OBS_DIM {
                s[j] = rng.random_range(-2.0..2.0);
                s2[j] = rng.random_range(-2.0..2.0);
            }
            let k = rng.random_range(0..NUM_KINDS);
            let kind = PrimitiveKind::from_index(k)?;
            let xn: Vec<f64> = (0..PARAM_DIM).map(|_| rng.random_range(-1.0..1.0)).collect();
            let joint = space.denormalize(&xn)?;
            Ok(Transition {
                s: Observation(s),
                k,
                x_k: joint[kind.slot_range()].to_vec(),
                r: rng.random_range(0.0..100.0),
                s_next: Observation(s2),
                done: rng.random_bool(0.3),
            })
        })
        .collect()
}

/// Network with random biases. Zero biases put pre-activations exactly on
/// the ReLU kink whenever a whole layer is dead, where central differences
/// see half a slope.
fn random_net<R: Rng + ?Sized>(sizes: &[usize], rng: &mut R) -> Result<Mlp> {
    let mut net = Mlp::new(sizes, rng)?;
    for l in 0..net.num_layers() {
        for v in net.bias_mut(l) {
            *v = rng.random_range(-0.5..0.5);
        }
    }
    Ok(net)
}

/// Worst relative error of the critic loss gradient on one random instance.
pub fn critic_instance<R: Rng + ?Sized>(rng: &mut R, hidden: usize, n: usize) -> Result<f64> {
    let space = ActionSpace::default();
    let (q, b) = loop {
        let q = random_net(&[Q_INPUT_DIM, hidden, hidden, NUM_KINDS], rng)?;
        let ts = random_transitions(rng, n, &space)?;
        let b = Batch::from_transitions(&ts.iter().collect::<Vec<_>>(), &space, 1.0)?;
        if q.kink_margin(&b.q_inputs, b.n)? > KINK_MARGIN {
            break (q, b);
        }
    };
    let y: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
    let (_, g) = critic_loss_grad(&q, &b, &y, &mut ForwardCache::default())?;
    let idx: Vec<usize> = (0..q.num_params()).collect();
    let mut probe = q.clone();
    let num = central_difference(
        |p| {
            probe.params_mut().copy_from_slice(p);
            Ok(critic_loss_grad(&probe, &b, &y, &mut ForwardCache::default())?.0)
        },
        q.params(),
        &idx,
        FD_STEP,
    )?;
    Ok(max_relative_error(&g, &num))
}

/// Worst relative error of the noise-free actor loss gradient on one random instance.
pub fn actor_instance<R: Rng + ?Sized>(rng: &mut R, hidden: usize, n: usize) -> Result<f64> {
    let space = ActionSpace::default();
    let (q1, actor, b, g) = loop {
        let q1 = random_net(&[Q_INPUT_DIM, hidden, hidden, NUM_KINDS], rng)?;
        let actor = random_net(&[OBS_DIM, hidden, hidden, PARAM_DIM], rng)?;
        let ts = random_transitions(rng, n, &space)?;
        let b = Batch::from_transitions(&ts.iter().collect::<Vec<_>>(), &space, 1.0)?;
        let mut scratch = Scratch::default();
        let (_, g) = actor_loss_grad(&actor, &q1, &b.feats, b.n, None, &mut scratch)?;
        let margin = actor.kink_margin(&b.feats, b.n)?.min(q1.kink_margin(scratch.q_rows(), b.n * NUM_KINDS)?);
        if margin > KINK_MARGIN {
            break (q1, actor, b, g);
        }
    };
    let idx: Vec<usize> = (0..actor.num_params()).collect();
    let mut probe = actor.clone();
    let num = central_difference(
        |p| {
            probe.params_mut().copy_from_slice(p);
            Ok(actor_loss_grad(&probe, &q1, &b.feats, b.n, None, &mut Scratch::default())?.0)
        },
        actor.params(),
        &idx,
        FD_STEP,
    )?;
    Ok(max_relative_error(&g, &num))
}

/// Worst relative errors per gradient family.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GradReport {
    pub mlp: f64,
    pub critic: f64,
    pub actor: f64,
}

impl GradReport {
    pub fn worst(&self) -> f64 {
        self.mlp.max(self.critic).max(self.actor)
    }
}

/// `instances` random cases of each family: raw network (parameter and
/// input gradients), critic loss and actor loss.
pub fn gradient_suite(seed: u64, instances: usize) -> Result<GradReport> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mlp = mlp_suite(seed, instances)?;
    let mut critic = 0.0f64;
    let mut actor = 0.0f64;
    for _ in 0..instances {
        let hidden = rng.random_range(3..9);
        critic = critic.max(critic_instance(&mut rng, hidden, 6)?);
        actor = actor.max(actor_instance(&mut rng, hidden, 6)?);
    }
    Ok(GradReport { mlp, critic, actor })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::gradcheck::GRAD_TOLERANCE;

    #[test]
    fn small_suite_passes() {
        let r = gradient_suite(3, 10).unwrap();
        assert!(r.worst() < GRAD_TOLERANCE, "{r:?}");
    }

    #[test]
    fn transitions_are_valid() {
        let space = ActionSpace::default();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for t in random_transitions(&mut rng, 50, &space).unwrap() {
            let kind = PrimitiveKind::from_index(t.k).unwrap();
            crate::action::ParameterizedAction::new(kind, t.x_k, &space).unwrap();
        }
    }
}
