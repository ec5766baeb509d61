//! Dense ReLU multilayer perceptron with analytic reverse-mode gradients.
//!
//! Parameters live in one flat buffer, layer by layer: weights (row-major,
//! `out x in`) followed by biases. Batches are row-major `n x dim`.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{check_len, Error, Result};

/// `C = A * B + beta * C` with arbitrary strides, A is `m x k`, B is `k x n`.
#[allow(clippy::too_many_arguments)]
fn gemm(
    m: usize,
    k: usize,
    n: usize,
    a: &[f64],
    a_strides: (usize, usize),
    b: &[f64],
    b_strides: (usize, usize),
    beta: f64,
    c: &mut [f64],
) {
    if m == 0 || n == 0 {
        return;
    }
    let extent = |rows: usize, cols: usize, s: (usize, usize)| (rows - 1) * s.0 + (cols - 1) * s.1 + 1;
    assert!(k == 0 || a.len() >= extent(m, k, a_strides));
    assert!(k == 0 || b.len() >= extent(k, n, b_strides));
    assert!(c.len() >= m * n);
    // SAFETY: the extents of all three operands were checked above and the
    // output does not alias the inputs (distinct borrows).
    unsafe {
        matrixmultiply::dgemm(
            m,
            k,
            n,
            1.0,
            a.as_ptr(),
            a_strides.0 as isize,
            a_strides.1 as isize,
            b.as_ptr(),
            b_strides.0 as isize,
            b_strides.1 as isize,
            beta,
            c.as_mut_ptr(),
            n as isize,
            1,
        );
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Mlp {
    sizes: Vec<usize>,
    params: Vec<f64>,
}

/// Activations of one batched forward pass, kept for the backward pass.
#[derive(Clone, Debug, Default)]
pub struct ForwardCache {
    n: usize,
    /// `acts[0]` is the input, `acts[l + 1]` the output of layer `l`.
    acts: Vec<Vec<f64>>,
}

impl ForwardCache {
    pub fn output(&self) -> &[f64] {
        self.acts.last().map(|v| v.as_slice()).unwrap_or(&[])
    }

    pub fn batch_size(&self) -> usize {
        self.n
    }
}

impl Mlp {
    /// Uniform `+-1/sqrt(fan_in)` weights and zero biases.
    pub fn new<R: Rng + ?Sized>(sizes: &[usize], rng: &mut R) -> Result<Self> {
        let mut net = Self::zeros(sizes)?;
        for l in 0..net.num_layers() {
            let (w, _) = net.layer_offsets(l);
            let (fan_in, fan_out) = (sizes[l], sizes[l + 1]);
            let bound = 1.0 / (fan_in as f64).sqrt();
            for p in &mut net.params[w..w + fan_in * fan_out] {
                *p = rng.random_range(-bound..bound);
            }
        }
        Ok(net)
    }

    pub fn zeros(sizes: &[usize]) -> Result<Self> {
        if sizes.len() < 2 || sizes.contains(&0) {
            return Err(Error::Domain(format!("invalid layer sizes {sizes:?}")));
        }
        let n = sizes.windows(2).map(|w| w[0] * w[1] + w[1]).sum();
        Ok(Self { sizes: sizes.to_vec(), params: vec![0.0; n] })
    }

    pub fn from_parts(sizes: Vec<usize>, params: Vec<f64>) -> Result<Self> {
        let net = Self::zeros(&sizes)?;
        check_len(net.params.len(), params.len())?;
        if params.iter().any(|p| !p.is_finite()) {
            return Err(Error::NonFinite("network parameters"));
        }
        Ok(Self { sizes, params })
    }

    pub fn sizes(&self) -> &[usize] {
        &self.sizes
    }

    pub fn input_dim(&self) -> usize {
        self.sizes[0]
    }

    pub fn output_dim(&self) -> usize {
        *self.sizes.last().expect("at least two sizes")
    }

    pub fn num_layers(&self) -> usize {
        self.sizes.len() - 1
    }

    pub fn num_params(&self) -> usize {
        self.params.len()
    }

    pub fn params(&self) -> &[f64] {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut [f64] {
        &mut self.params
    }

    /// Offsets of the weight and bias blocks of layer `l`.
    pub fn layer_offsets(&self, l: usize) -> (usize, usize) {
        let mut off = 0;
        for i in 0..l {
            off += self.sizes[i] * self.sizes[i + 1] + self.sizes[i + 1];
        }
        (off, off + self.sizes[l] * self.sizes[l + 1])
    }

    /// Mutable bias block of layer `l`.
    pub fn bias_mut(&mut self, l: usize) -> &mut [f64] {
        let (_, b) = self.layer_offsets(l);
        let out = self.sizes[l + 1];
        &mut self.params[b..b + out]
    }

    /// Mutable weight block of layer `l`, row-major `out x in`.
    pub fn weights_mut(&mut self, l: usize) -> &mut [f64] {
        let (w, b) = self.layer_offsets(l);
        &mut self.params[w..b]
    }

    pub fn is_finite(&self) -> bool {
        self.params.iter().all(|p| p.is_finite())
    }

    pub fn same_architecture(&self, other: &Mlp) -> bool {
        self.sizes == other.sizes
    }

    /// Forward pass on a single input.
    pub fn forward(&self, x: &[f64]) -> Result<Vec<f64>> {
        let mut cache = ForwardCache::default();
        self.forward_batch(x, 1, &mut cache)?;
        Ok(cache.output().to_vec())
    }

    /// Batched forward pass; `x` holds `n` rows of `input_dim` values.
    pub fn forward_batch(&self, x: &[f64], n: usize, cache: &mut ForwardCache) -> Result<()> {
        check_len(n * self.input_dim(), x.len())?;
        let layers = self.num_layers();
        cache.n = n;
        cache.acts.resize(layers + 1, Vec::new());
        cache.acts[0].clear();
        cache.acts[0].extend_from_slice(x);
        for l in 0..layers {
            let (fan_in, fan_out) = (self.sizes[l], self.sizes[l + 1]);
            let (w, b) = self.layer_offsets(l);
            let weights = &self.params[w..b];
            let bias = &self.params[b..b + fan_out];
            let (prev, rest) = cache.acts.split_at_mut(l + 1);
            let input = &prev[l];
            let out = &mut rest[0];
            out.clear();
            out.resize(n * fan_out, 0.0);
            for row in out.chunks_exact_mut(fan_out) {
                row.copy_from_slice(bias);
            }
            gemm(n, fan_in, fan_out, input, (fan_in, 1), weights, (1, fan_in), 1.0, out);
            if l + 1 < layers {
                for v in out.iter_mut() {
                    if *v < 0.0 {
                        *v = 0.0;
                    }
                }
            }
        }
        Ok(())
    }

    /// Smallest `|z|` over all hidden pre-activations of a batch: how far the
    /// batch sits from the nearest ReLU kink.
    pub fn kink_margin(&self, x: &[f64], n: usize) -> Result<f64> {
        check_len(n * self.input_dim(), x.len())?;
        let layers = self.num_layers();
        let mut margin = f64::INFINITY;
        for row in x.chunks_exact(self.input_dim()) {
            let mut a = row.to_vec();
            for l in 0..layers - 1 {
                let (fan_in, fan_out) = (self.sizes[l], self.sizes[l + 1]);
                let (w, b) = self.layer_offsets(l);
                let z: Vec<f64> = (0..fan_out)
                    .map(|o| self.params[b + o] + (0..fan_in).map(|i| self.params[w + o * fan_in + i] * a[i]).sum::<f64>())
                    .collect();
                margin = z.iter().fold(margin, |m, v| m.min(v.abs()));
                a = z.into_iter().map(|v| v.max(0.0)).collect();
            }
        }
        Ok(margin)
    }

    /// Reverse pass through a cached forward pass.
    ///
    /// `d_out` is `n x output_dim`. Parameter gradients are written into
    /// `param_grads` (overwrite) when given; the input gradient into
    /// `d_input` when given.
    pub fn backward_batch(
        &self,
        cache: &ForwardCache,
        d_out: &[f64],
        mut param_grads: Option<&mut [f64]>,
        d_input: Option<&mut [f64]>,
    ) -> Result<()> {
        let n = cache.n;
        check_len(n * self.output_dim(), d_out.len())?;
        if let Some(g) = param_grads.as_deref() {
            check_len(self.num_params(), g.len())?;
        }
        let layers = self.num_layers();
        let mut delta = d_out.to_vec();
        let mut next = Vec::new();
        let want_input = d_input.is_some();
        for l in (0..layers).rev() {
            let (fan_in, fan_out) = (self.sizes[l], self.sizes[l + 1]);
            let (w, b) = self.layer_offsets(l);
            let input = &cache.acts[l];
            if let Some(g) = param_grads.as_deref_mut() {
                gemm(fan_out, n, fan_in, &delta, (1, fan_out), input, (fan_in, 1), 0.0, &mut g[w..b]);
                let gb = &mut g[b..b + fan_out];
                gb.iter_mut().for_each(|v| *v = 0.0);
                for row in delta.chunks_exact(fan_out) {
                    for (acc, d) in gb.iter_mut().zip(row) {
                        *acc += d;
                    }
                }
            }
            if l == 0 && !want_input {
                break;
            }
            next.clear();
            next.resize(n * fan_in, 0.0);
            gemm(n, fan_out, fan_in, &delta, (fan_out, 1), &self.params[w..b], (fan_in, 1), 0.0, &mut next);
            if l > 0 {
                for (d, a) in next.iter_mut().zip(input.iter()) {
                    if *a <= 0.0 {
                        *d = 0.0;
                    }
                }
            }
            std::mem::swap(&mut delta, &mut next);
        }
        if let Some(dx) = d_input {
            check_len(n * self.input_dim(), dx.len())?;
            dx.copy_from_slice(&delta);
        }
        Ok(())
    }

    /// Single-sample reverse pass: `(parameter gradient, input gradient)`.
    pub fn backward(&self, x: &[f64], d_out: &[f64]) -> Result<(Vec<f64>, Vec<f64>)> {
        let mut cache = ForwardCache::default();
        self.forward_batch(x, 1, &mut cache)?;
        let mut g = vec![0.0; self.num_params()];
        let mut dx = vec![0.0; self.input_dim()];
        self.backward_batch(&cache, d_out, Some(&mut g), Some(&mut dx))?;
        Ok((g, dx))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    /// Naive dense evaluation straight from the parameter layout.
    fn oracle_forward(net: &Mlp, x: &[f64]) -> Vec<f64> {
        let mut a = x.to_vec();
        for l in 0..net.num_layers() {
            let (fi, fo) = (net.sizes()[l], net.sizes()[l + 1]);
            let (w, b) = net.layer_offsets(l);
            let p = net.params();
            let mut out = vec![0.0; fo];
            for o in 0..fo {
                let mut s = p[b + o];
                for i in 0..fi {
                    s += p[w + o * fi + i] * a[i];
                }
                out[o] = if l + 1 < net.num_layers() { s.max(0.0) } else { s };
            }
            a = out;
        }
        a
    }

    #[test]
    fn zero_weights_output_bias() {
        let mut net = Mlp::zeros(&[4, 8, 8, 3]).unwrap();
        net.bias_mut(2).copy_from_slice(&[1.5, -2.0, 0.25]);
        assert_eq!(net.forward(&[3.0, -1.0, 0.0, 9.0]).unwrap(), vec![1.5, -2.0, 0.25]);
    }

    #[test]
    fn identity_chain_on_positive_input() {
        let mut net = Mlp::zeros(&[1, 1, 1, 1]).unwrap();
        for l in 0..3 {
            net.weights_mut(l)[0] = 1.0;
        }
        assert_eq!(net.forward(&[2.75]).unwrap(), vec![2.75]);
    }

    #[test]
    fn matches_naive_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let net = Mlp::new(&[27, 128, 128, 3], &mut rng).unwrap();
        let mut cache = ForwardCache::default();
        let xs: Vec<f64> = (0..27 * 5).map(|_| rng.random_range(-2.0..2.0)).collect();
        net.forward_batch(&xs, 5, &mut cache).unwrap();
        for s in 0..5 {
            let expect = oracle_forward(&net, &xs[s * 27..(s + 1) * 27]);
            for (a, b) in cache.output()[s * 3..(s + 1) * 3].iter().zip(&expect) {
                assert!((a - b).abs() <= 1e-12 * b.abs().max(1.0));
            }
        }
    }

    #[test]
    fn forward_is_pure() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let net = Mlp::new(&[5, 16, 16, 2], &mut rng).unwrap();
        let x = [0.1, 0.2, -0.3, 0.4, 0.5];
        assert_eq!(net.forward(&x).unwrap(), net.forward(&x).unwrap());
    }

    #[test]
    fn zero_upstream_gives_zero_gradients() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let net = Mlp::new(&[5, 16, 16, 2], &mut rng).unwrap();
        let (g, dx) = net.backward(&[1.0, 2.0, 3.0, 4.0, 5.0], &[0.0, 0.0]).unwrap();
        assert!(g.iter().all(|v| *v == 0.0));
        assert!(dx.iter().all(|v| *v == 0.0));
    }

    #[test]
    fn dead_relu_blocks_gradient() {
        let mut net = Mlp::zeros(&[1, 2, 1, 1]).unwrap();
        // unit 0 alive, unit 1 dead for positive input
        net.weights_mut(0).copy_from_slice(&[1.0, -1.0]);
        net.weights_mut(1).copy_from_slice(&[1.0, 1.0]);
        net.weights_mut(2)[0] = 1.0;
        let (g, dx) = net.backward(&[2.0], &[1.0]).unwrap();
        let (w0, b0) = net.layer_offsets(0);
        assert_eq!(g[w0], 2.0);
        assert_eq!(g[w0 + 1], 0.0);
        assert_eq!(g[b0 + 1], 0.0);
        assert_eq!(dx, vec![1.0]);
    }

    #[test]
    fn shape_errors() {
        let net = Mlp::zeros(&[3, 4, 2]).unwrap();
        assert!(net.forward(&[1.0, 2.0]).is_err());
        assert!(net.backward(&[1.0, 2.0, 3.0], &[1.0]).is_err());
        assert!(Mlp::zeros(&[3]).is_err());
        assert!(Mlp::zeros(&[3, 0, 1]).is_err());
        assert!(Mlp::from_parts(vec![1, 1], vec![f64::NAN, 0.0]).is_err());
    }

    #[test]
    fn init_bounds() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let net = Mlp::new(&[16, 128, 4], &mut rng).unwrap();
        let (w, b) = net.layer_offsets(0);
        assert!(net.params()[w..b].iter().all(|v| v.abs() <= 0.25));
        assert!(net.params()[b..b + 128].iter().all(|v| *v == 0.0));
    }

    #[test]
    fn kink_margin_is_distance_to_nearest_hidden_zero() {
        // z = 2x - 1 on the single hidden unit
        let net = Mlp::from_parts(vec![1, 1, 1], vec![2.0, -1.0, 1.0, 0.0]).unwrap();
        assert_eq!(net.kink_margin(&[0.5], 1).unwrap(), 0.0);
        assert_eq!(net.kink_margin(&[1.0, 0.25], 2).unwrap(), 0.5);
        assert!(net.kink_margin(&[1.0], 2).is_err());
    }
}
