//! Central finite-difference checks of analytic gradients.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::Mlp;
use crate::error::Result;

pub const FD_STEP: f64 = 1e-5;
pub const GRAD_TOLERANCE: f64 = 1e-4;
/// Instances with a ReLU pre-activation closer than this to zero are redrawn:
/// a central difference straddling the kink measures neither side's slope.
pub const KINK_MARGIN: f64 = 1e-3;

/// Magnitudes below this are compared absolutely rather than relatively.
pub const RELATIVE_FLOOR: f64 = 1e-6;

pub fn relative_error(analytic: f64, numeric: f64) -> f64 {
    let scale = analytic.abs().max(numeric.abs()).max(RELATIVE_FLOOR);
    (analytic - numeric).abs() / scale
}

/// Central differences of `f` at `x` along the coordinates in `indices`.
pub fn central_difference<F>(mut f: F, x: &[f64], indices: &[usize], h: f64) -> Result<Vec<f64>>
where
    F: FnMut(&[f64]) -> Result<f64>,
{
    let mut probe = x.to_vec();
    let mut out = Vec::with_capacity(indices.len());
    for &i in indices {
        probe[i] = x[i] + h;
        let up = f(&probe)?;
        probe[i] = x[i] - h;
        let down = f(&probe)?;
        probe[i] = x[i];
        out.push((up - down) / (2.0 * h));
    }
    Ok(out)
}

/// Largest relative error between `analytic[i]` and `numeric[i]`.
pub fn max_relative_error(analytic: &[f64], numeric: &[f64]) -> f64 {
    analytic.iter().zip(numeric).map(|(a, n)| relative_error(*a, *n)).fold(0.0, f64::max)
}

/// Checks every parameter and input gradient of the scalar `<upstream, net(x)>`.
pub fn check_mlp(net: &Mlp, x: &[f64], upstream: &[f64], h: f64) -> Result<f64> {
    let (g, dx) = net.backward(x, upstream)?;
    let dot = |out: Vec<f64>| out.iter().zip(upstream).map(|(o, u)| o * u).sum::<f64>();

    let all_params: Vec<usize> = (0..net.num_params()).collect();
    let mut probe = net.clone();
    let num_g = central_difference(
        |p| {
            probe.params_mut().copy_from_slice(p);
            Ok(dot(probe.forward(x)?))
        },
        net.params(),
        &all_params,
        h,
    )?;
    let all_inputs: Vec<usize> = (0..x.len()).collect();
    let num_dx = central_difference(|xi| Ok(dot(net.forward(xi)?)), x, &all_inputs, h)?;
    Ok(max_relative_error(&g, &num_g).max(max_relative_error(&dx, &num_dx)))
}

/// Random small networks and inputs; returns the worst relative error seen.
pub fn mlp_suite(seed: u64, instances: usize) -> Result<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst = 0.0f64;
    for _ in 0..instances {
        let sizes = [rng.random_range(1..7), rng.random_range(2..9), rng.random_range(2..9), rng.random_range(1..4)];
        let (net, x) = loop {
            let mut net = Mlp::new(&sizes, &mut rng)?;
            for b in 0..net.num_layers() {
                for v in net.bias_mut(b) {
                    *v = rng.random_range(-0.5..0.5);
                }
            }
            let x: Vec<f64> = (0..sizes[0]).map(|_| rng.random_range(-2.0..2.0)).collect();
            if net.kink_margin(&x, 1)? > KINK_MARGIN {
                break (net, x);
            }
        };
        let up: Vec<f64> = (0..sizes[3]).map(|_| rng.random_range(-1.0..1.0)).collect();
        worst = worst.max(check_mlp(&net, &x, &up, FD_STEP)?);
    }
    Ok(worst)
}
