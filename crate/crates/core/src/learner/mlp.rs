//! Small fully connected networks with hand-written backpropagation.
//!
//! Parameters live in one flat vector, layer by layer: the weight matrix
//! (row-major, `out x in`) followed by the bias.

use rand::Rng;
use serde::{Deserialize, Serialize};

/// `y = W x + b` for a row-major `out x in` matrix.
pub fn dense_forward(w: &[f64], b: &[f64], x: &[f64], y: &mut [f64]) {
    let n_in = x.len();
    for (o, yo) in y.iter_mut().enumerate() {
        let row = &w[o * n_in..(o + 1) * n_in];
        *yo = b[o] + row.iter().zip(x).map(|(wi, xi)| wi * xi).sum::<f64>();
    }
}

/// Accumulates `dW += dy x^T`, `db += dy` and writes `dx = W^T dy`.
pub fn dense_backward(w: &[f64], x: &[f64], dy: &[f64], dw: &mut [f64], db: &mut [f64], dx: &mut [f64]) {
    let n_in = x.len();
    dx.iter_mut().for_each(|v| *v = 0.0);
    for (o, &g) in dy.iter().enumerate() {
        db[o] += g;
        let row = &w[o * n_in..(o + 1) * n_in];
        let drow = &mut dw[o * n_in..(o + 1) * n_in];
        for i in 0..n_in {
            drow[i] += g * x[i];
            dx[i] += g * row[i];
        }
    }
}

/// Derivative of `tanh` expressed through its output.
pub fn tanh_grad_from_output(y: f64) -> f64 {
    1.0 - y * y
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Mlp {
    sizes: Vec<usize>,
    params: Vec<f64>,
}

/// Layer inputs recorded by [`Mlp::forward_cached`].
#[derive(Debug, Clone)]
pub struct MlpCache {
    /// `inputs[l]` is what layer `l` consumed; the last entry is the output.
    inputs: Vec<Vec<f64>>,
}

impl Mlp {
    /// Hidden layers use `tanh`; the output layer is linear and its initial
    /// weights are multiplied by `output_gain`.
    pub fn new<R: Rng + ?Sized>(sizes: &[usize], output_gain: f64, rng: &mut R) -> Self {
        assert!(sizes.len() >= 2, "an MLP needs at least an input and an output size");
        let n_params = Self::param_count(sizes);
        let mut params = Vec::with_capacity(n_params);
        let last = sizes.len() - 2;
        for (l, pair) in sizes.windows(2).enumerate() {
            let (n_in, n_out) = (pair[0], pair[1]);
            let bound = (6.0 / (n_in + n_out) as f64).sqrt();
            let gain = if l == last { output_gain } else { 1.0 };
            params.extend((0..n_in * n_out).map(|_| gain * rng.random_range(-bound..bound)));
            params.extend(std::iter::repeat(0.0).take(n_out));
        }
        Self {
            sizes: sizes.to_vec(),
            params,
        }
    }

    pub fn from_parts(sizes: Vec<usize>, params: Vec<f64>) -> Option<Self> {
        (sizes.len() >= 2 && Self::param_count(&sizes) == params.len()).then_some(Self { sizes, params })
    }

    pub fn param_count(sizes: &[usize]) -> usize {
        sizes.windows(2).map(|p| p[0] * p[1] + p[1]).sum()
    }

    pub fn sizes(&self) -> &[usize] {
        &self.sizes
    }

    pub fn params(&self) -> &[f64] {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut [f64] {
        &mut self.params
    }

    pub fn input_len(&self) -> usize {
        self.sizes[0]
    }

    pub fn output_len(&self) -> usize {
        *self.sizes.last().unwrap()
    }

    pub fn forward(&self, x: &[f64]) -> Vec<f64> {
        self.forward_cached(x).0
    }

    pub fn forward_cached(&self, x: &[f64]) -> (Vec<f64>, MlpCache) {
        assert_eq!(x.len(), self.input_len(), "input width");
        let n_layers = self.sizes.len() - 1;
        let mut inputs = Vec::with_capacity(n_layers + 1);
        inputs.push(x.to_vec());
        let mut offset = 0;
        for l in 0..n_layers {
            let (n_in, n_out) = (self.sizes[l], self.sizes[l + 1]);
            let w = &self.params[offset..offset + n_in * n_out];
            let b = &self.params[offset + n_in * n_out..offset + n_in * n_out + n_out];
            offset += n_in * n_out + n_out;
            let mut y = vec![0.0; n_out];
            dense_forward(w, b, inputs.last().unwrap(), &mut y);
            if l + 1 < n_layers {
                y.iter_mut().for_each(|v| *v = v.tanh());
            }
            inputs.push(y);
        }
        let out = inputs.last().unwrap().clone();
        (out, MlpCache { inputs })
    }

    /// Adds the parameter gradient of `grad_out . output` to `grad` and
    /// returns the gradient with respect to the input.
    pub fn backward(&self, cache: &MlpCache, grad_out: &[f64], grad: &mut [f64]) -> Vec<f64> {
        let n_layers = self.sizes.len() - 1;
        let mut offsets = Vec::with_capacity(n_layers);
        let mut offset = 0;
        for l in 0..n_layers {
            offsets.push(offset);
            offset += self.sizes[l] * self.sizes[l + 1] + self.sizes[l + 1];
        }
        let mut dy = grad_out.to_vec();
        for l in (0..n_layers).rev() {
            let (n_in, n_out) = (self.sizes[l], self.sizes[l + 1]);
            if l + 1 < n_layers {
                for (g, y) in dy.iter_mut().zip(&cache.inputs[l + 1]) {
                    *g *= tanh_grad_from_output(*y);
                }
            }
            let o = offsets[l];
            let w = &self.params[o..o + n_in * n_out];
            let (dw, db) = grad[o..o + n_in * n_out + n_out].split_at_mut(n_in * n_out);
            let mut dx = vec![0.0; n_in];
            dense_backward(w, &cache.inputs[l], &dy, dw, db, &mut dx);
            dy = dx;
        }
        dy
    }
}
