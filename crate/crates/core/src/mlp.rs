//! Dense multilayer perceptron with ReLU hidden layers, a configurable
//! output activation, manual backpropagation and an Adam optimizer.

use ndarray::{Array1, Array2, ArrayView2, Axis};

use crate::error::{Error, Result};
use crate::sampling::RngStream;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OutputActivation {
    Softplus,
    Sigmoid,
}

impl OutputActivation {
    #[inline]
    pub fn apply(self, z: f64) -> f64 {
        match self {
            OutputActivation::Softplus => softplus(z),
            OutputActivation::Sigmoid => sigmoid(z),
        }
    }

    #[inline]
    fn derivative(self, z: f64) -> f64 {
        match self {
            OutputActivation::Softplus => sigmoid(z),
            OutputActivation::Sigmoid => {
                let s = sigmoid(z);
                s * (1.0 - s)
            }
        }
    }
}

/// `ln(1 + eᶻ)`, stable for large `|z|`.
#[inline]
pub fn softplus(z: f64) -> f64 {
    z.max(0.0) + (-z.abs()).exp().ln_1p()
}

#[inline]
pub fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// One affine layer `y = W x + b` with `W` stored as `out × in`.
#[derive(Debug, Clone, PartialEq)]
pub struct Layer {
    pub weights: Array2<f64>,
    pub biases: Array1<f64>,
}

impl Layer {
    pub fn zeros(inputs: usize, outputs: usize) -> Self {
        Layer { weights: Array2::zeros((outputs, inputs)), biases: Array1::zeros(outputs) }
    }

    pub fn inputs(&self) -> usize {
        self.weights.ncols()
    }

    pub fn outputs(&self) -> usize {
        self.weights.nrows()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Mlp {
    layers: Vec<Layer>,
    output: OutputActivation,
}

/// Activations kept from a batched forward pass for backpropagation.
#[derive(Debug, Clone)]
pub struct ForwardCache {
    /// Input to each layer (`inputs[0]` is the network input).
    inputs: Vec<Array2<f64>>,
    /// Pre-activation of each layer.
    pre: Vec<Array2<f64>>,
    pub output: Array2<f64>,
}

impl Mlp {
    /// `dims = [in, hidden…, out]`. Hidden layers use He-uniform weights,
    /// the output layer LeCun-uniform; biases start at zero.
    pub fn new(dims: &[usize], output: OutputActivation, rng: &mut RngStream) -> Result<Self> {
        if dims.len() < 2 || dims.iter().any(|&d| d == 0) {
            return Err(Error::InvalidArgument(format!("bad layer dims {dims:?}")));
        }
        let last = dims.len() - 2;
        let layers = dims
            .windows(2)
            .enumerate()
            .map(|(k, w)| {
                let gain = if k == last { 1.0 } else { 2.0 };
                let bound = (3.0 * gain / w[0] as f64).sqrt();
                let mut layer = Layer::zeros(w[0], w[1]);
                layer.weights.mapv_inplace(|_| bound * (2.0 * rng.uniform() - 1.0));
                layer
            })
            .collect();
        Ok(Mlp { layers, output })
    }

    pub fn from_layers(layers: Vec<Layer>, output: OutputActivation) -> Result<Self> {
        if layers.is_empty() {
            return Err(Error::InvalidArgument("network needs at least one layer".into()));
        }
        for (k, pair) in layers.windows(2).enumerate() {
            if pair[0].outputs() != pair[1].inputs() {
                return Err(Error::DimensionMismatch(format!(
                    "layer {k} outputs {} but layer {} takes {}",
                    pair[0].outputs(),
                    k + 1,
                    pair[1].inputs()
                )));
            }
        }
        if layers.iter().any(|l| l.biases.len() != l.outputs()) {
            return Err(Error::DimensionMismatch("bias length differs from layer width".into()));
        }
        let mlp = Mlp { layers, output };
        mlp.check_finite()?;
        Ok(mlp)
    }

    pub fn layers(&self) -> &[Layer] {
        &self.layers
    }

    pub fn layers_mut(&mut self) -> &mut [Layer] {
        &mut self.layers
    }

    pub fn output_activation(&self) -> OutputActivation {
        self.output
    }

    /// `[in, hidden…, out]`.
    pub fn dims(&self) -> Vec<usize> {
        let mut d = vec![self.layers[0].inputs()];
        d.extend(self.layers.iter().map(Layer::outputs));
        d
    }

    pub fn input_dim(&self) -> usize {
        self.layers[0].inputs()
    }

    pub fn output_dim(&self) -> usize {
        self.layers[self.layers.len() - 1].outputs()
    }

    pub fn param_count(&self) -> usize {
        self.layers.iter().map(|l| l.weights.len() + l.biases.len()).sum()
    }

    pub fn check_finite(&self) -> Result<()> {
        for (k, l) in self.layers.iter().enumerate() {
            if l.weights.iter().chain(l.biases.iter()).any(|x| !x.is_finite()) {
                return Err(Error::NonFinite(format!("parameters of layer {k}")));
            }
        }
        Ok(())
    }

    /// Sets the last layer to zero so every output equals `activation(0)`.
    pub fn zero_output_layer(&mut self) {
        let last = self.layers.last_mut().expect("non-empty");
        last.weights.fill(0.0);
        last.biases.fill(0.0);
    }

    /// Parameters in storage order: per layer, weights row-major then biases.
    pub fn params(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.param_count());
        for l in &self.layers {
            out.extend(l.weights.iter());
            out.extend(l.biases.iter());
        }
        out
    }

    pub fn set_params(&mut self, params: &[f64]) -> Result<()> {
        if params.len() != self.param_count() {
            return Err(Error::LengthMismatch(format!(
                "{} parameters for a network with {}",
                params.len(),
                self.param_count()
            )));
        }
        let mut it = params.iter();
        for l in &mut self.layers {
            for (p, v) in l.weights.iter_mut().chain(l.biases.iter_mut()).zip(&mut it) {
                *p = *v;
            }
        }
        Ok(())
    }

    /// Batched forward pass; rows of `x` are samples.
    pub fn forward(&self, x: ArrayView2<f64>) -> Array2<f64> {
        let mut a = x.to_owned();
        let last = self.layers.len() - 1;
        for (k, l) in self.layers.iter().enumerate() {
            let mut z = a.dot(&l.weights.t());
            z += &l.biases;
            if k == last {
                z.mapv_inplace(|v| self.output.apply(v));
            } else {
                z.mapv_inplace(|v| v.max(0.0));
            }
            a = z;
        }
        a
    }

    pub fn forward_cached(&self, x: ArrayView2<f64>) -> ForwardCache {
        let mut inputs = Vec::with_capacity(self.layers.len());
        let mut pre = Vec::with_capacity(self.layers.len());
        let mut a = x.to_owned();
        let last = self.layers.len() - 1;
        for (k, l) in self.layers.iter().enumerate() {
            let mut z = a.dot(&l.weights.t());
            z += &l.biases;
            let next = if k == last {
                z.mapv(|v| self.output.apply(v))
            } else {
                z.mapv(|v| v.max(0.0))
            };
            inputs.push(a);
            pre.push(z);
            a = next;
        }
        ForwardCache { inputs, pre, output: a }
    }

    /// Gradient of a loss with respect to every parameter, given
    /// `d_output = ∂loss/∂output` for each batch row.
    pub fn backward(&self, cache: &ForwardCache, d_output: ArrayView2<f64>) -> Vec<Layer> {
        let last = self.layers.len() - 1;
        let mut grads: Vec<Layer> = Vec::with_capacity(self.layers.len());
        let mut dz = d_output.to_owned();
        dz.zip_mut_with(&cache.pre[last], |d, &z| *d *= self.output.derivative(z));
        for k in (0..=last).rev() {
            let l = &self.layers[k];
            let dw = dz.t().dot(&cache.inputs[k]);
            let db = dz.sum_axis(Axis(0));
            grads.push(Layer { weights: dw, biases: db });
            if k > 0 {
                let mut da = dz.dot(&l.weights);
                da.zip_mut_with(&cache.pre[k - 1], |d, &z| {
                    if z <= 0.0 {
                        *d = 0.0;
                    }
                });
                dz = da;
            }
        }
        grads.reverse();
        grads
    }
}

/// Flattens gradients in the same order as [`Mlp::params`].
pub fn flatten(grads: &[Layer]) -> Vec<f64> {
    let mut out = Vec::new();
    for g in grads {
        out.extend(g.weights.iter());
        out.extend(g.biases.iter());
    }
    out
}

/// Adam with bias correction.
#[derive(Debug, Clone)]
pub struct Adam {
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    m: Vec<f64>,
    v: Vec<f64>,
    t: i32,
}

impl Adam {
    pub fn new(param_count: usize) -> Self {
        Adam { beta1: 0.9, beta2: 0.99, epsilon: 1e-8, m: vec![0.0; param_count], v: vec![0.0; param_count], t: 0 }
    }

    pub fn step(&mut self, mlp: &mut Mlp, grads: &[Layer], lr: f64) {
        self.t += 1;
        let c1 = 1.0 - self.beta1.powi(self.t);
        let c2 = 1.0 - self.beta2.powi(self.t);
        let mut i = 0;
        for (l, g) in mlp.layers.iter_mut().zip(grads) {
            let params = l.weights.iter_mut().chain(l.biases.iter_mut());
            let gs = g.weights.iter().chain(g.biases.iter());
            for (p, &gr) in params.zip(gs) {
                let m = &mut self.m[i];
                let v = &mut self.v[i];
                *m = self.beta1 * *m + (1.0 - self.beta1) * gr;
                *v = self.beta2 * *v + (1.0 - self.beta2) * gr * gr;
                *p -= lr * (*m / c1) / ((*v / c2).sqrt() + self.epsilon);
                i += 1;
            }
        }
    }
}

/// Linear warmup to `base` over `warmup` steps, then exponential decay
/// reaching `base · final_factor` at `total` steps.
pub fn learning_rate(step: usize, total: usize, warmup: usize, base: f64, final_factor: f64) -> f64 {
    if step < warmup {
        return base * (step + 1) as f64 / warmup as f64;
    }
    let span = total.saturating_sub(warmup).max(1) as f64;
    let f = ((step - warmup) as f64 / span).min(1.0);
    base * final_factor.powf(f)
}
