use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::env::SimRng;
use crate::error::{Error, Result};

pub const LEAKY_SLOPE: f64 = 0.01;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Activation {
    LeakyRelu,
    Sigmoid,
    Tanh,
    Identity,
}

impl Activation {
    pub fn apply(self, x: f64) -> f64 {
        match self {
            Activation::LeakyRelu => {
                if x > 0.0 {
                    x
                } else {
                    LEAKY_SLOPE * x
                }
            }
            Activation::Sigmoid => crate::optimality::sigmoid(x),
            Activation::Tanh => x.tanh(),
            Activation::Identity => x,
        }
    }

    /// Derivative expressed through the pre-activation `x` and output `y`.
    fn derivative(self, x: f64, y: f64) -> f64 {
        match self {
            Activation::LeakyRelu => {
                if x > 0.0 {
                    1.0
                } else {
                    LEAKY_SLOPE
                }
            }
            Activation::Sigmoid => y * (1.0 - y),
            Activation::Tanh => 1.0 - y * y,
            Activation::Identity => 1.0,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Activation::LeakyRelu => "leaky_relu",
            Activation::Sigmoid => "sigmoid",
            Activation::Tanh => "tanh",
            Activation::Identity => "identity",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        match name {
            "leaky_relu" => Some(Activation::LeakyRelu),
            "sigmoid" => Some(Activation::Sigmoid),
            "tanh" => Some(Activation::Tanh),
            "identity" => Some(Activation::Identity),
            _ => None,
        }
    }
}

/// Fully connected layer; `weights` is row-major `output_dim x input_dim`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Layer {
    pub input_dim: usize,
    pub output_dim: usize,
    pub weights: Vec<f64>,
    pub bias: Vec<f64>,
    pub activation: Activation,
}

impl Layer {
    pub fn zeros(input_dim: usize, output_dim: usize, activation: Activation) -> Self {
        Layer {
            input_dim,
            output_dim,
            weights: vec![0.0; input_dim * output_dim],
            bias: vec![0.0; output_dim],
            activation,
        }
    }

    /// Uniform in `±sqrt(6 / (fan_in + fan_out))`, zero bias.
    pub fn glorot(input_dim: usize, output_dim: usize, activation: Activation, rng: &mut SimRng) -> Self {
        let limit = (6.0 / (input_dim + output_dim) as f64).sqrt();
        let mut layer = Self::zeros(input_dim, output_dim, activation);
        for w in &mut layer.weights {
            *w = rng.random_range(-limit..=limit);
        }
        layer
    }

    fn pre_activation(&self, input: &[f64]) -> Vec<f64> {
        self.weights
            .chunks_exact(self.input_dim)
            .zip(&self.bias)
            .map(|(row, b)| row.iter().zip(input).map(|(w, x)| w * x).sum::<f64>() + b)
            .collect()
    }
}

/// Dense feedforward network.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Network {
    layers: Vec<Layer>,
}

/// Intermediate values of one forward pass, kept for backpropagation.
#[derive(Clone, Debug)]
pub struct ForwardCache {
    /// `activations[0]` is the input, `activations[i + 1]` the output of layer `i`.
    pub activations: Vec<Vec<f64>>,
    pub pre_activations: Vec<Vec<f64>>,
}

impl ForwardCache {
    pub fn output(&self) -> &[f64] {
        self.activations.last().expect("cache holds at least the input")
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct LayerGrad {
    pub weights: Vec<f64>,
    pub bias: Vec<f64>,
}

/// Parameter gradients with the same shapes as a [`Network`], plus the
/// gradient with respect to the input.
#[derive(Clone, Debug, PartialEq)]
pub struct GradientBundle {
    pub layers: Vec<LayerGrad>,
    pub input: Vec<f64>,
}

impl GradientBundle {
    pub fn zeros_like(net: &Network) -> Self {
        GradientBundle {
            layers: net
                .layers
                .iter()
                .map(|l| LayerGrad { weights: vec![0.0; l.weights.len()], bias: vec![0.0; l.bias.len()] })
                .collect(),
            input: vec![0.0; net.input_dim()],
        }
    }

    /// `self += scale * other`
    pub fn add_scaled(&mut self, other: &GradientBundle, scale: f64) {
        for (a, b) in self.layers.iter_mut().zip(&other.layers) {
            a.weights.iter_mut().zip(&b.weights).for_each(|(x, y)| *x += scale * y);
            a.bias.iter_mut().zip(&b.bias).for_each(|(x, y)| *x += scale * y);
        }
        self.input.iter_mut().zip(&other.input).for_each(|(x, y)| *x += scale * y);
    }

    pub fn scale(&mut self, factor: f64) {
        for l in &mut self.layers {
            l.weights.iter_mut().chain(l.bias.iter_mut()).for_each(|x| *x *= factor);
        }
        self.input.iter_mut().for_each(|x| *x *= factor);
    }

    /// Parameter gradients in [`Network::params`] order.
    pub fn flat(&self) -> Vec<f64> {
        self.layers
            .iter()
            .flat_map(|l| l.weights.iter().chain(&l.bias).copied())
            .collect()
    }

    /// L2 norm over parameter gradients (the input gradient is excluded).
    pub fn norm(&self) -> f64 {
        self.layers
            .iter()
            .flat_map(|l| l.weights.iter().chain(&l.bias))
            .map(|g| g * g)
            .sum::<f64>()
            .sqrt()
    }

    pub fn is_finite(&self) -> bool {
        self.layers
            .iter()
            .flat_map(|l| l.weights.iter().chain(&l.bias))
            .all(|g| g.is_finite())
    }

    pub fn conforms_to(&self, net: &Network) -> bool {
        self.layers.len() == net.layers.len()
            && self
                .layers
                .iter()
                .zip(&net.layers)
                .all(|(g, l)| g.weights.len() == l.weights.len() && g.bias.len() == l.bias.len())
    }
}

impl Network {
    pub fn from_layers(layers: Vec<Layer>) -> Result<Self> {
        if layers.is_empty() {
            return Err(Error::InvalidArgument("network needs at least one layer".into()));
        }
        for l in &layers {
            if l.weights.len() != l.input_dim * l.output_dim || l.bias.len() != l.output_dim {
                return Err(Error::InvalidArgument("layer parameter shape does not match its dims".into()));
            }
            if !l.weights.iter().chain(&l.bias).all(|x| x.is_finite()) {
                return Err(Error::NonFinite("network parameters".into()));
            }
        }
        for w in layers.windows(2) {
            if w[0].output_dim != w[1].input_dim {
                return Err(Error::DimensionMismatch { expected: w[0].output_dim, got: w[1].input_dim });
            }
        }
        Ok(Network { layers })
    }

    /// Glorot-initialised network with `dims = [input, hidden..., output]`.
    pub fn new(dims: &[usize], hidden: Activation, output: Activation, rng: &mut SimRng) -> Self {
        Self::build(dims, hidden, output, |i, o, a| Layer::glorot(i, o, a, rng))
    }

    pub fn zeros(dims: &[usize], hidden: Activation, output: Activation) -> Self {
        Self::build(dims, hidden, output, Layer::zeros)
    }

    fn build(
        dims: &[usize],
        hidden: Activation,
        output: Activation,
        mut make: impl FnMut(usize, usize, Activation) -> Layer,
    ) -> Self {
        assert!(dims.len() >= 2, "need at least input and output dims");
        let n = dims.len() - 1;
        let layers = (0..n)
            .map(|i| make(dims[i], dims[i + 1], if i + 1 == n { output } else { hidden }))
            .collect();
        Network { layers }
    }

    pub fn layers(&self) -> &[Layer] {
        &self.layers
    }

    /// Mutable access for surgical initialisation. Callers keep shapes intact.
    pub fn layers_mut(&mut self) -> &mut [Layer] {
        &mut self.layers
    }

    pub fn input_dim(&self) -> usize {
        self.layers[0].input_dim
    }

    pub fn output_dim(&self) -> usize {
        self.layers.last().map(|l| l.output_dim).unwrap_or(0)
    }

    pub fn num_params(&self) -> usize {
        self.layers.iter().map(|l| l.weights.len() + l.bias.len()).sum()
    }

    /// All parameters, layer by layer, weights before biases.
    pub fn params(&self) -> Vec<f64> {
        self.layers
            .iter()
            .flat_map(|l| l.weights.iter().chain(&l.bias).copied())
            .collect()
    }

    pub fn set_params(&mut self, params: &[f64]) -> Result<()> {
        if params.len() != self.num_params() {
            return Err(Error::DimensionMismatch { expected: self.num_params(), got: params.len() });
        }
        let mut it = params.iter();
        for l in &mut self.layers {
            l.weights.iter_mut().chain(l.bias.iter_mut()).for_each(|p| *p = *it.next().unwrap());
        }
        Ok(())
    }

    pub fn is_finite(&self) -> bool {
        self.layers.iter().all(|l| l.weights.iter().chain(&l.bias).all(|x| x.is_finite()))
    }

    fn check_input(&self, input: &[f64]) -> Result<()> {
        if input.len() != self.input_dim() {
            return Err(Error::DimensionMismatch { expected: self.input_dim(), got: input.len() });
        }
        Ok(())
    }

    pub fn forward(&self, input: &[f64]) -> Result<Vec<f64>> {
        self.check_input(input)?;
        let mut x = input.to_vec();
        for l in &self.layers {
            x = l.pre_activation(&x).into_iter().map(|z| l.activation.apply(z)).collect();
        }
        Ok(x)
    }

    pub fn forward_cached(&self, input: &[f64]) -> Result<ForwardCache> {
        self.check_input(input)?;
        let mut activations = vec![input.to_vec()];
        let mut pre_activations = Vec::with_capacity(self.layers.len());
        for l in &self.layers {
            let z = l.pre_activation(activations.last().unwrap());
            activations.push(z.iter().map(|&z| l.activation.apply(z)).collect());
            pre_activations.push(z);
        }
        Ok(ForwardCache { activations, pre_activations })
    }

    /// Vector-Jacobian product: gradients of `upstream · output` with respect
    /// to every parameter and to the input.
    pub fn backward(&self, cache: &ForwardCache, upstream: &[f64]) -> Result<GradientBundle> {
        if upstream.len() != self.output_dim() {
            return Err(Error::DimensionMismatch { expected: self.output_dim(), got: upstream.len() });
        }
        if cache.activations.len() != self.layers.len() + 1 {
            return Err(Error::InvalidArgument("forward cache does not belong to this network".into()));
        }
        let mut grads = Vec::with_capacity(self.layers.len());
        let mut delta_out = upstream.to_vec();
        for (i, l) in self.layers.iter().enumerate().rev() {
            let input = &cache.activations[i];
            let output = &cache.activations[i + 1];
            let delta: Vec<f64> = delta_out
                .iter()
                .zip(&cache.pre_activations[i])
                .zip(output)
                .map(|((d, &z), &y)| d * l.activation.derivative(z, y))
                .collect();
            let mut gw = vec![0.0; l.weights.len()];
            for (row, d) in gw.chunks_exact_mut(l.input_dim).zip(&delta) {
                row.iter_mut().zip(input).for_each(|(g, x)| *g = d * x);
            }
            let mut delta_in = vec![0.0; l.input_dim];
            for (row, d) in l.weights.chunks_exact(l.input_dim).zip(&delta) {
                delta_in.iter_mut().zip(row).for_each(|(g, w)| *g += d * w);
            }
            grads.push(LayerGrad { weights: gw, bias: delta });
            delta_out = delta_in;
        }
        grads.reverse();
        Ok(GradientBundle { layers: grads, input: delta_out })
    }

    /// Forward and backward in one call.
    pub fn gradient(&self, input: &[f64], upstream: &[f64]) -> Result<(Vec<f64>, GradientBundle)> {
        let cache = self.forward_cached(input)?;
        let grads = self.backward(&cache, upstream)?;
        Ok((cache.output().to_vec(), grads))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;

    #[test]
    fn identity_layer_passes_input_through() {
        let mut layer = Layer::zeros(2, 2, Activation::Identity);
        layer.weights = vec![1.0, 0.0, 0.0, 1.0];
        let net = Network::from_layers(vec![layer]).unwrap();
        assert_eq!(net.forward(&[1.0, 2.0]).unwrap(), vec![1.0, 2.0]);
    }

    #[test]
    fn leaky_relu_negative_slope() {
        let mut layer = Layer::zeros(1, 1, Activation::LeakyRelu);
        layer.weights = vec![1.0];
        let net = Network::from_layers(vec![layer]).unwrap();
        assert_eq!(net.forward(&[-1.0]).unwrap(), vec![-0.01]);
    }

    #[test]
    fn bias_gradient_of_linear_layer_is_one() {
        let mut rng = SimRng::seed_from_u64(0);
        let net = Network::new(&[3, 1], Activation::Identity, Activation::Identity, &mut rng);
        let (_, g) = net.gradient(&[0.3, -1.0, 2.0], &[1.0]).unwrap();
        assert_eq!(g.layers[0].bias, vec![1.0]);
        assert_eq!(g.layers[0].weights, vec![0.3, -1.0, 2.0]);
    }

    #[test]
    fn zero_upstream_gives_zero_gradient() {
        let mut rng = SimRng::seed_from_u64(1);
        let net = Network::new(&[4, 5, 2], Activation::Tanh, Activation::Sigmoid, &mut rng);
        let (_, g) = net.gradient(&[0.1, 0.2, 0.3, 0.4], &[0.0, 0.0]).unwrap();
        assert_eq!(g.norm(), 0.0);
        assert!(g.input.iter().all(|&x| x == 0.0));
    }

    #[test]
    fn dimension_mismatches_are_errors() {
        let net = Network::zeros(&[3, 2], Activation::Identity, Activation::Identity);
        assert!(matches!(net.forward(&[1.0]), Err(Error::DimensionMismatch { expected: 3, got: 1 })));
        let cache = net.forward_cached(&[1.0, 2.0, 3.0]).unwrap();
        assert!(net.backward(&cache, &[1.0]).is_err());
        let bad = vec![Layer::zeros(3, 2, Activation::Identity), Layer::zeros(3, 1, Activation::Identity)];
        assert!(Network::from_layers(bad).is_err());
    }

    #[test]
    fn glorot_bounds() {
        let mut rng = SimRng::seed_from_u64(9);
        let net = Network::new(&[10, 6], Activation::LeakyRelu, Activation::Identity, &mut rng);
        let limit = (6.0f64 / 16.0).sqrt();
        assert!(net.layers()[0].weights.iter().all(|w| w.abs() <= limit));
        assert!(net.layers()[0].bias.iter().all(|&b| b == 0.0));
    }

    #[test]
    fn params_round_trip() {
        let mut rng = SimRng::seed_from_u64(2);
        let net = Network::new(&[3, 4, 2], Activation::Tanh, Activation::Identity, &mut rng);
        let mut other = Network::zeros(&[3, 4, 2], Activation::Tanh, Activation::Identity);
        other.set_params(&net.params()).unwrap();
        assert_eq!(net, other);
        assert!(other.set_params(&[1.0]).is_err());
    }
}
