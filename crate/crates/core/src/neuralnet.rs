//! Small dense feed-forward networks with hand-written backpropagation.

use rand::distr::{Distribution, Uniform};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

pub const LEAKY_RELU_SLOPE: f64 = 0.01;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Activation {
    Tanh,
    Sigmoid,
    LeakyRelu,
    Identity,
}

pub fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

impl Activation {
    pub fn apply(self, z: f64) -> f64 {
        match self {
            Activation::Tanh => z.tanh(),
            Activation::Sigmoid => sigmoid(z),
            Activation::LeakyRelu => {
                if z >= 0.0 {
                    z
                } else {
                    LEAKY_RELU_SLOPE * z
                }
            }
            Activation::Identity => z,
        }
    }

    /// Derivative at pre-activation `z`, given the activated value `y`.
    fn derivative(self, z: f64, y: f64) -> f64 {
        match self {
            Activation::Tanh => 1.0 - y * y,
            Activation::Sigmoid => y * (1.0 - y),
            Activation::LeakyRelu => {
                if z >= 0.0 {
                    1.0
                } else {
                    LEAKY_RELU_SLOPE
                }
            }
            Activation::Identity => 1.0,
        }
    }
}

/// `activation(W x + b)`, with `W` stored row-major as `n_out x n_in`.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseLayer {
    pub n_in: usize,
    pub n_out: usize,
    pub weights: Vec<f64>,
    pub bias: Vec<f64>,
    pub activation: Activation,
}

impl DenseLayer {
    pub fn zeros(n_in: usize, n_out: usize, activation: Activation) -> Self {
        Self {
            n_in,
            n_out,
            weights: vec![0.0; n_in * n_out],
            bias: vec![0.0; n_out],
            activation,
        }
    }

    pub fn param_count(&self) -> usize {
        self.n_out * self.n_in + self.n_out
    }

    fn weight(&self, o: usize, i: usize) -> f64 {
        self.weights[o * self.n_in + i]
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Mlp {
    layers: Vec<DenseLayer>,
}

/// Per-layer inputs and pre-activations recorded by [`Mlp::forward`].
#[derive(Debug, Clone)]
pub struct ForwardCache {
    inputs: Vec<Vec<f64>>,
    pre: Vec<Vec<f64>>,
    output: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LayerGrads {
    pub weights: Vec<f64>,
    pub bias: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MlpGrads {
    pub layers: Vec<LayerGrads>,
}

impl MlpGrads {
    /// Same ordering as [`Mlp::params_flat`].
    pub fn flatten(&self) -> Vec<f64> {
        self.layers
            .iter()
            .flat_map(|l| l.weights.iter().chain(&l.bias).copied())
            .collect()
    }
}

impl Mlp {
    pub fn new(layers: Vec<DenseLayer>) -> Result<Self> {
        if layers.is_empty() {
            return Err(Error::Argument("network needs at least one layer".into()));
        }
        for (k, l) in layers.iter().enumerate() {
            if l.weights.len() != l.n_in * l.n_out || l.bias.len() != l.n_out {
                return Err(Error::Shape(format!("layer {k} storage does not match {}x{}", l.n_out, l.n_in)));
            }
        }
        for (k, pair) in layers.windows(2).enumerate() {
            if pair[0].n_out != pair[1].n_in {
                return Err(Error::Shape(format!(
                    "layer {k} emits {} values but layer {} expects {}",
                    pair[0].n_out,
                    k + 1,
                    pair[1].n_in
                )));
            }
        }
        Ok(Self { layers })
    }

    /// Zero-initialised network for the given layer widths and activations.
    pub fn from_sizes(sizes: &[usize], activations: &[Activation]) -> Result<Self> {
        if sizes.len() < 2 || activations.len() != sizes.len() - 1 {
            return Err(Error::Argument("need one activation per layer".into()));
        }
        if sizes.contains(&0) {
            return Err(Error::Argument("layer widths must be positive".into()));
        }
        Self::new(
            sizes
                .windows(2)
                .zip(activations)
                .map(|(w, &a)| DenseLayer::zeros(w[0], w[1], a))
                .collect(),
        )
    }

    pub fn layers(&self) -> &[DenseLayer] {
        &self.layers
    }

    pub fn n_inputs(&self) -> usize {
        self.layers[0].n_in
    }

    pub fn n_outputs(&self) -> usize {
        self.layers[self.layers.len() - 1].n_out
    }

    pub fn param_count(&self) -> usize {
        self.layers.iter().map(DenseLayer::param_count).sum()
    }

    /// Weights then bias, layer by layer.
    pub fn params_flat(&self) -> Vec<f64> {
        self.layers
            .iter()
            .flat_map(|l| l.weights.iter().chain(&l.bias).copied())
            .collect()
    }

    pub fn set_params_flat(&mut self, flat: &[f64]) -> Result<()> {
        if flat.len() != self.param_count() {
            return Err(Error::Shape(format!(
                "expected {} parameters, got {}",
                self.param_count(),
                flat.len()
            )));
        }
        let mut rest = flat;
        for l in &mut self.layers {
            let (w, tail) = rest.split_at(l.weights.len());
            let (b, tail) = tail.split_at(l.bias.len());
            l.weights.copy_from_slice(w);
            l.bias.copy_from_slice(b);
            rest = tail;
        }
        Ok(())
    }

    /// Xavier-uniform weights, zero biases.
    pub fn init_params(&mut self, seed: u64) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for l in &mut self.layers {
            let limit = (6.0 / (l.n_in + l.n_out) as f64).sqrt();
            let dist = Uniform::new_inclusive(-limit, limit).expect("finite bound");
            l.weights.iter_mut().for_each(|w| *w = dist.sample(&mut rng));
            l.bias.iter_mut().for_each(|b| *b = 0.0);
        }
    }

    pub fn forward(&self, input: &[f64]) -> Result<(Vec<f64>, ForwardCache)> {
        if input.len() != self.n_inputs() {
            return Err(Error::Shape(format!(
                "network expects {} inputs, got {}",
                self.n_inputs(),
                input.len()
            )));
        }
        let mut inputs = Vec::with_capacity(self.layers.len());
        let mut pre = Vec::with_capacity(self.layers.len());
        let mut a = input.to_vec();
        for l in &self.layers {
            let z: Vec<f64> = (0..l.n_out)
                .map(|o| l.bias[o] + (0..l.n_in).map(|i| l.weight(o, i) * a[i]).sum::<f64>())
                .collect();
            let next = z.iter().map(|&v| l.activation.apply(v)).collect();
            inputs.push(std::mem::replace(&mut a, next));
            pre.push(z);
        }
        let cache = ForwardCache {
            inputs,
            pre,
            output: a.clone(),
        };
        Ok((a, cache))
    }

    pub fn predict(&self, input: &[f64]) -> Result<Vec<f64>> {
        Ok(self.forward(input)?.0)
    }

    /// Reverse pass for `d_output = dL/d(output)`. Returns parameter
    /// gradients and `dL/d(input)`.
    pub fn backward(&self, cache: &ForwardCache, d_output: &[f64]) -> Result<(MlpGrads, Vec<f64>)> {
        if cache.pre.len() != self.layers.len() {
            return Err(Error::Shape("cache does not belong to this network".into()));
        }
        if d_output.len() != self.n_outputs() {
            return Err(Error::Shape(format!(
                "expected {} output gradients, got {}",
                self.n_outputs(),
                d_output.len()
            )));
        }
        let mut grads = Vec::with_capacity(self.layers.len());
        let mut delta_out = d_output.to_vec();
        for (k, l) in self.layers.iter().enumerate().rev() {
            let z = &cache.pre[k];
            let x = &cache.inputs[k];
            if z.len() != l.n_out || x.len() != l.n_in {
                return Err(Error::Shape(format!("cache shape mismatch at layer {k}")));
            }
            let y: Vec<f64> = match cache.inputs.get(k + 1) {
                Some(next_in) => next_in.clone(),
                None => cache.output.clone(),
            };
            let delta: Vec<f64> = (0..l.n_out)
                .map(|o| delta_out[o] * l.activation.derivative(z[o], y[o]))
                .collect();
            let mut gw = vec![0.0; l.weights.len()];
            for o in 0..l.n_out {
                for i in 0..l.n_in {
                    gw[o * l.n_in + i] = delta[o] * x[i];
                }
            }
            delta_out = (0..l.n_in)
                .map(|i| (0..l.n_out).map(|o| l.weight(o, i) * delta[o]).sum())
                .collect();
            grads.push(LayerGrads {
                weights: gw,
                bias: delta,
            });
        }
        grads.reverse();
        Ok((MlpGrads { layers: grads }, delta_out))
    }
}

/// `n -> n (tanh) -> n (tanh) -> 1 (sigmoid)`.
pub fn build_classical_net(n_inputs: usize) -> Result<Mlp> {
    if n_inputs == 0 {
        return Err(Error::Argument("classical net needs at least one input".into()));
    }
    Mlp::from_sizes(
        &[n_inputs, n_inputs, n_inputs, 1],
        &[Activation::Tanh, Activation::Tanh, Activation::Sigmoid],
    )
}

/// Single sigmoid unit that post-processes circuit readouts.
pub fn build_head(n_inputs: usize) -> Result<Mlp> {
    if n_inputs == 0 {
        return Err(Error::Argument("head needs at least one input".into()));
    }
    Mlp::from_sizes(&[n_inputs, 1], &[Activation::Sigmoid])
}
