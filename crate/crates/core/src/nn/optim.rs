use serde::{Deserialize, Serialize};

use super::Mlp;
use crate::error::{check_len, Error, Result};

pub const ADAM_BETA1: f64 = 0.9;
pub const ADAM_BETA2: f64 = 0.999;
pub const ADAM_EPS: f64 = 1e-8;

/// Global gradient-norm ceiling applied before every optimiser step.
pub const GRAD_CLIP_NORM: f64 = 10.0;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AdamState {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    pub step: u64,
    m: Vec<f64>,
    v: Vec<f64>,
}

impl AdamState {
    pub fn new(num_params: usize, lr: f64) -> Self {
        Self {
            lr,
            beta1: ADAM_BETA1,
            beta2: ADAM_BETA2,
            eps: ADAM_EPS,
            step: 0,
            m: vec![0.0; num_params],
            v: vec![0.0; num_params],
        }
    }

    pub fn for_net(net: &Mlp, lr: f64) -> Self {
        Self::new(net.num_params(), lr)
    }

    pub fn len(&self) -> usize {
        self.m.len()
    }

    pub fn is_empty(&self) -> bool {
        self.m.is_empty()
    }

    pub fn first_moment(&self) -> &[f64] {
        &self.m
    }

    pub fn second_moment(&self) -> &[f64] {
        &self.v
    }

    /// One bias-corrected Adam step on a raw parameter slice.
    pub fn step(&mut self, params: &mut [f64], grads: &[f64]) -> Result<()> {
        check_len(self.m.len(), params.len())?;
        check_len(self.m.len(), grads.len())?;
        if grads.iter().any(|g| !g.is_finite()) {
            return Err(Error::NonFinite("gradient"));
        }
        self.step += 1;
        let t = self.step as i32;
        let c1 = 1.0 - self.beta1.powi(t);
        let c2 = 1.0 - self.beta2.powi(t);
        for i in 0..params.len() {
            let g = grads[i];
            self.m[i] = self.beta1 * self.m[i] + (1.0 - self.beta1) * g;
            self.v[i] = self.beta2 * self.v[i] + (1.0 - self.beta2) * g * g;
            let m_hat = self.m[i] / c1;
            let v_hat = self.v[i] / c2;
            params[i] -= self.lr * m_hat / (v_hat.sqrt() + self.eps);
        }
        Ok(())
    }
}

/// Adam update of every parameter of `net`.
pub fn adam_step(net: &mut Mlp, grads: &[f64], state: &mut AdamState) -> Result<()> {
    state.step(net.params_mut(), grads)
}

/// Rescales `grads` in place so its L2 norm is at most `max_norm`.
/// Returns the norm before clipping.
pub fn clip_grad_norm(grads: &mut [f64], max_norm: f64) -> f64 {
    let norm = grads.iter().map(|g| g * g).sum::<f64>().sqrt();
    if norm > max_norm && norm.is_finite() {
        let s = max_norm / norm;
        grads.iter_mut().for_each(|g| *g *= s);
    }
    norm
}

/// `target <- tau * source + (1 - tau) * target`, element-wise.
pub fn polyak_update(target: &mut Mlp, source: &Mlp, tau: f64) -> Result<()> {
    if !target.same_architecture(source) {
        return Err(Error::Shape { expected: target.num_params(), got: source.num_params() });
    }
    if !(0.0..=1.0).contains(&tau) {
        return Err(Error::Domain(format!("polyak coefficient {tau} outside [0, 1]")));
    }
    if tau == 1.0 {
        target.params_mut().copy_from_slice(source.params());
        return Ok(());
    }
    for (t, s) in target.params_mut().iter_mut().zip(source.params()) {
        *t = tau * s + (1.0 - tau) * *t;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn constant_gradient_reaches_lr_step() {
        let lr = 1e-3;
        let mut s = AdamState::new(2, lr);
        let mut p = vec![0.0, 0.0];
        let mut last = p.clone();
        for _ in 0..5000 {
            last.copy_from_slice(&p);
            s.step(&mut p, &[3.0, -0.5]).unwrap();
        }
        // bias-corrected moments of a constant g give m/sqrt(v) = sign(g)
        assert!(((last[0] - p[0]) - lr).abs() < 1e-9);
        assert!(((p[1] - last[1]) - lr).abs() < 1e-9);
    }

    #[test]
    fn per_coordinate_step_bounded_by_lr() {
        let lr = 0.01;
        let mut s = AdamState::new(3, lr);
        let mut p = vec![0.0; 3];
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        use rand::Rng;
        for _ in 0..200 {
            let before = p.clone();
            let g: Vec<f64> = (0..3).map(|_| rng.random_range(-1.0..1.0)).collect();
            s.step(&mut p, &g).unwrap();
            if s.step > 10 {
                for i in 0..3 {
                    assert!((p[i] - before[i]).abs() <= lr * 1.05);
                }
            }
        }
    }

    #[test]
    fn zero_gradient_and_zero_lr_leave_params() {
        let mut s = AdamState::new(2, 0.1);
        let mut p = vec![1.0, -2.0];
        s.step(&mut p, &[0.0, 0.0]).unwrap();
        assert_eq!(p, vec![1.0, -2.0]);
        assert_eq!(s.step, 1);
        let mut s = AdamState::new(2, 0.0);
        s.step(&mut p, &[4.0, -7.0]).unwrap();
        assert_eq!(p, vec![1.0, -2.0]);
    }

    #[test]
    fn non_finite_gradient_is_an_error() {
        let mut s = AdamState::new(2, 0.1);
        let mut p = vec![1.0, 1.0];
        assert!(s.step(&mut p, &[f64::NAN, 0.0]).is_err());
        assert!(s.step(&mut p, &[0.0, f64::INFINITY]).is_err());
        assert_eq!(p, vec![1.0, 1.0]);
        assert_eq!(s.step, 0);
    }

    #[test]
    fn clip_scales_to_ceiling() {
        let mut g = vec![30.0, 40.0];
        assert_eq!(clip_grad_norm(&mut g, 10.0), 50.0);
        assert!((g[0] - 6.0).abs() < 1e-12 && (g[1] - 8.0).abs() < 1e-12);
        let mut small = vec![0.3, 0.4];
        clip_grad_norm(&mut small, 10.0);
        assert_eq!(small, vec![0.3, 0.4]);
    }

    #[test]
    fn polyak_examples() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let src = Mlp::new(&[3, 8, 8, 2], &mut rng).unwrap();
        let init = Mlp::new(&[3, 8, 8, 2], &mut rng).unwrap();

        let mut t = init.clone();
        polyak_update(&mut t, &src, 0.0).unwrap();
        assert_eq!(t, init);

        polyak_update(&mut t, &src, 1.0).unwrap();
        assert_eq!(t, src);

        let mut t = init.clone();
        polyak_update(&mut t, &src, 0.5).unwrap();
        polyak_update(&mut t, &src, 0.5).unwrap();
        for i in 0..t.num_params() {
            let gap0 = (init.params()[i] - src.params()[i]).abs();
            let gap = (t.params()[i] - src.params()[i]).abs();
            assert!(gap <= 0.25 * gap0 + 1e-15);
        }
        assert!(t.is_finite());

        let other = Mlp::zeros(&[3, 4, 2]).unwrap();
        assert!(polyak_update(&mut t, &other, 0.5).is_err());
    }
}
