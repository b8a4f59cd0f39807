//! Multilayer perceptron with explicit reverse-mode gradients and Adam.
//!
//! Hidden layers use tanh, the output layer is affine. Parameters are f64;
//! batches are `Array2` with one row per sample so the heavy lifting is
//! delegated to `ndarray`'s matrix products.

use ndarray::{Array1, Array2, Axis};
use rand::Rng;
use rand_chacha::ChaCha12Rng;

use crate::error::{Error, Result};

/// One affine layer; `w` has shape (fan_in, fan_out).
#[derive(Debug, Clone)]
pub struct Layer {
    pub w: Array2<f64>,
    pub b: Array1<f64>,
}

impl Layer {
    fn zeros_like(other: &Layer) -> Layer {
        Layer {
            w: Array2::zeros(other.w.raw_dim()),
            b: Array1::zeros(other.b.raw_dim()),
        }
    }
}

/// Fully connected tanh network: affine layers with tanh on all hidden
/// activations and identity on the output.
#[derive(Debug, Clone)]
pub struct Mlp {
    pub layers: Vec<Layer>,
}

impl Mlp {
    /// Build a network with the given layer widths `[d_in, h_1, .., d_out]`,
    /// initialized like a stock torch Linear: W, b ~ U(-k, k), k = fan_in^-1/2.
    pub fn new(dims: &[usize], rng: &mut ChaCha12Rng) -> Result<Mlp> {
        if dims.len() < 2 {
            return Err(Error::Config("mlp needs at least one layer".into()));
        }
        if dims.iter().any(|&d| d == 0) {
            return Err(Error::Config("mlp layer widths must be positive".into()));
        }
        let mut layers = Vec::with_capacity(dims.len() - 1);
        for win in dims.windows(2) {
            let (fan_in, fan_out) = (win[0], win[1]);
            let k = 1.0 / (fan_in as f64).sqrt();
            let w = Array2::from_shape_fn((fan_in, fan_out), |_| rng.random_range(-k..k));
            let b = Array1::from_shape_fn(fan_out, |_| rng.random_range(-k..k));
            layers.push(Layer { w, b });
        }
        Ok(Mlp { layers })
    }

    pub fn input_dim(&self) -> usize {
        self.layers[0].w.nrows()
    }

    pub fn output_dim(&self) -> usize {
        self.layers[self.layers.len() - 1].w.ncols()
    }

    pub fn parameter_count(&self) -> usize {
        self.layers.iter().map(|l| l.w.len() + l.b.len()).sum()
    }

    /// Batch forward pass; rows are samples.
    pub fn forward(&self, x: &Array2<f64>) -> Array2<f64> {
        let mut a = x.clone();
        let last = self.layers.len() - 1;
        for (l, layer) in self.layers.iter().enumerate() {
            let mut z = a.dot(&layer.w);
            z += &layer.b;
            if l != last {
                z.mapv_inplace(f64::tanh);
            }
            a = z;
        }
        a
    }

    /// Forward pass retaining every post-activation value (`acts[0]` is the
    /// input, `acts.last()` the output) for use in [`Mlp::backward`].
    pub fn forward_cached(&self, x: &Array2<f64>) -> Vec<Array2<f64>> {
        let mut acts = Vec::with_capacity(self.layers.len() + 1);
        acts.push(x.clone());
        let last = self.layers.len() - 1;
        for (l, layer) in self.layers.iter().enumerate() {
            let mut z = acts[l].dot(&layer.w);
            z += &layer.b;
            if l != last {
                z.mapv_inplace(f64::tanh);
            }
            acts.push(z);
        }
        acts
    }

    /// Reverse-mode gradients given `d loss / d output` and the activation
    /// cache produced by [`Mlp::forward_cached`].
    pub fn backward(&self, acts: &[Array2<f64>], grad_out: Array2<f64>) -> Gradients {
        let last = self.layers.len() - 1;
        let mut layers: Vec<Layer> = self.layers.iter().map(Layer::zeros_like).collect();
        let mut g = grad_out;
        for l in (0..self.layers.len()).rev() {
            if l != last {
                // tanh'(z) expressed through the stored activation a = tanh(z)
                g.zip_mut_with(&acts[l + 1], |gi, &ai| *gi *= 1.0 - ai * ai);
            }
            layers[l].w = acts[l].t().dot(&g);
            layers[l].b = g.sum_axis(Axis(0));
            if l > 0 {
                g = g.dot(&self.layers[l].w.t());
            }
        }
        Gradients { layers }
    }
}

/// Parameter gradients, shaped exactly like the network.
#[derive(Debug, Clone)]
pub struct Gradients {
    pub layers: Vec<Layer>,
}

/// Single-vector forward pass (the batch API wraps a one-row matrix).
pub fn mlp_forward(net: &Mlp, x: &[f64]) -> Result<Vec<f64>> {
    if x.len() != net.input_dim() {
        return Err(Error::Dimension(format!(
            "mlp input has length {} but the first layer expects {}",
            x.len(),
            net.input_dim()
        )));
    }
    let xb = Array2::from_shape_vec((1, x.len()), x.to_vec()).expect("row shape");
    Ok(net.forward(&xb).row(0).to_vec())
}

/// Reverse-mode gradients of a scalar loss over a batch. `loss_fn` maps the
/// network output to the loss value and its gradient with respect to the
/// output; the returned gradients are with respect to every parameter.
pub fn mlp_gradient<F>(net: &Mlp, batch: &Array2<f64>, loss_fn: F) -> (f64, Gradients)
where
    F: FnOnce(&Array2<f64>) -> (f64, Array2<f64>),
{
    let acts = net.forward_cached(batch);
    let (loss, grad_out) = loss_fn(acts.last().expect("non-empty activation cache"));
    (loss, net.backward(&acts, grad_out))
}

/// Adam optimizer state (β₁ = 0.9, β₂ = 0.999, ε = 1e-8).
#[derive(Debug, Clone)]
pub struct AdamState {
    m: Vec<Layer>,
    v: Vec<Layer>,
    step: usize,
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
}

impl AdamState {
    pub fn new(net: &Mlp, learning_rate: f64) -> AdamState {
        AdamState {
            m: net.layers.iter().map(Layer::zeros_like).collect(),
            v: net.layers.iter().map(Layer::zeros_like).collect(),
            step: 0,
            learning_rate,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
        }
    }

    pub fn step_count(&self) -> usize {
        self.step
    }

    /// One Adam update; `lr_scale` multiplies the base learning rate (used
    /// for cosine annealing).
    pub fn update(&mut self, net: &mut Mlp, grads: &Gradients, lr_scale: f64) {
        self.step += 1;
        let lr = self.learning_rate * lr_scale;
        let (b1, b2, eps) = (self.beta1, self.beta2, self.epsilon);
        let bc1 = 1.0 - b1.powi(self.step as i32);
        let bc2 = 1.0 - b2.powi(self.step as i32);
        for (l, grad) in grads.layers.iter().enumerate() {
            let update = |p: &mut f64, g: f64, m: &mut f64, v: &mut f64| {
                *m = b1 * *m + (1.0 - b1) * g;
                *v = b2 * *v + (1.0 - b2) * g * g;
                let mhat = *m / bc1;
                let vhat = *v / bc2;
                *p -= lr * mhat / (vhat.sqrt() + eps);
            };
            let layer = &mut net.layers[l];
            for ((p, &g), (m, v)) in layer
                .w
                .iter_mut()
                .zip(grad.w.iter())
                .zip(self.m[l].w.iter_mut().zip(self.v[l].w.iter_mut()))
            {
                update(p, g, m, v);
            }
            for ((p, &g), (m, v)) in layer
                .b
                .iter_mut()
                .zip(grad.b.iter())
                .zip(self.m[l].b.iter_mut().zip(self.v[l].b.iter_mut()))
            {
                update(p, g, m, v);
            }
        }
    }
}
