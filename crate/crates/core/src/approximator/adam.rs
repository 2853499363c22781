use serde::{Deserialize, Serialize};

use super::network::{GradientBundle, Network};
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AdamConfig {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    /// Global L2 clip applied to the gradient before the moment update.
    pub max_grad_norm: Option<f64>,
}

impl AdamConfig {
    pub fn with_lr(learning_rate: f64) -> Self {
        AdamConfig { learning_rate, ..Self::default() }
    }
}

impl Default for AdamConfig {
    fn default() -> Self {
        AdamConfig { learning_rate: 1e-3, beta1: 0.9, beta2: 0.999, epsilon: 1e-8, max_grad_norm: Some(10.0) }
    }
}

/// Moment estimates for one network, stored flat in parameter order.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AdamState {
    pub config: AdamConfig,
    pub first_moment: Vec<f64>,
    pub second_moment: Vec<f64>,
    pub step: u64,
}

impl AdamState {
    pub fn new(net: &Network, config: AdamConfig) -> Self {
        let n = net.num_params();
        AdamState { config, first_moment: vec![0.0; n], second_moment: vec![0.0; n], step: 0 }
    }
}

/// One bias-corrected Adam update of `net` in place.
///
/// Non-finite gradients are rejected and leave both `net` and `state`
/// untouched.
pub fn adam_step(net: &mut Network, grads: &GradientBundle, state: &mut AdamState) -> Result<()> {
    if !grads.conforms_to(net) || state.first_moment.len() != net.num_params() {
        return Err(Error::DimensionMismatch { expected: net.num_params(), got: grads.flat().len() });
    }
    if !grads.is_finite() {
        return Err(Error::NonFinite("gradient passed to adam_step".into()));
    }
    let cfg = state.config;
    let mut g = grads.flat();
    if let Some(max) = cfg.max_grad_norm {
        let norm = grads.norm();
        if norm > max {
            let s = max / norm;
            g.iter_mut().for_each(|x| *x *= s);
        }
    }
    state.step += 1;
    let t = state.step as i32;
    let c1 = 1.0 - cfg.beta1.powi(t);
    let c2 = 1.0 - cfg.beta2.powi(t);
    let mut params = net.params();
    for (((p, g), m), v) in params
        .iter_mut()
        .zip(&g)
        .zip(&mut state.first_moment)
        .zip(&mut state.second_moment)
    {
        *m = cfg.beta1 * *m + (1.0 - cfg.beta1) * g;
        *v = cfg.beta2 * *v + (1.0 - cfg.beta2) * g * g;
        let m_hat = *m / c1;
        let v_hat = *v / c2;
        *p -= cfg.learning_rate * m_hat / (v_hat.sqrt() + cfg.epsilon);
    }
    net.set_params(&params)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::approximator::{Activation, Layer};

    fn scalar(w: f64) -> Network {
        let mut l = Layer::zeros(1, 1, Activation::Identity);
        l.weights = vec![w];
        Network::from_layers(vec![l]).unwrap()
    }

    fn grads_for(net: &Network, flat: &[f64]) -> GradientBundle {
        let mut g = GradientBundle::zeros_like(net);
        let mut it = flat.iter();
        for l in &mut g.layers {
            l.weights.iter_mut().chain(l.bias.iter_mut()).for_each(|x| *x = *it.next().unwrap());
        }
        g
    }

    #[test]
    fn zero_gradient_keeps_parameters() {
        let mut net = scalar(0.7);
        let before = net.clone();
        let mut st = AdamState::new(&net, AdamConfig::default());
        adam_step(&mut net, &GradientBundle::zeros_like(&before), &mut st).unwrap();
        assert_eq!(net, before);
        assert_eq!(st.step, 1);
    }

    #[test]
    fn first_step_closed_form() {
        let mut net = scalar(0.0);
        let cfg = AdamConfig { max_grad_norm: None, ..AdamConfig::with_lr(0.05) };
        let mut st = AdamState::new(&net, cfg);
        let g = [0.3, -2.0];
        let grads = grads_for(&net, &g);
        adam_step(&mut net, &grads, &mut st).unwrap();
        for (p, g) in net.params().iter().zip(g) {
            let expected = -0.05 * g / (g.abs() + 1e-8);
            assert!((p - expected).abs() < 1e-15, "{p} vs {expected}");
        }
    }

    #[test]
    fn minimises_a_parabola() {
        let mut net = scalar(5.0);
        let mut st = AdamState::new(&net, AdamConfig::with_lr(0.1));
        for _ in 0..500 {
            let w = net.params()[0];
            let g = grads_for(&net, &[2.0 * w, 0.0]);
            adam_step(&mut net, &g, &mut st).unwrap();
        }
        assert!(net.params()[0].abs() < 0.01, "{}", net.params()[0]);
    }

    #[test]
    fn non_finite_gradient_is_rejected() {
        let mut net = scalar(1.0);
        let before = net.clone();
        let mut st = AdamState::new(&net, AdamConfig::default());
        let grads = grads_for(&net, &[f64::NAN, 0.0]);
        let err = adam_step(&mut net, &grads, &mut st);
        assert!(matches!(err, Err(Error::NonFinite(_))));
        assert_eq!(net, before);
        assert_eq!(st.step, 0);
    }

    #[test]
    fn clipping_bounds_huge_gradients() {
        let mut net = scalar(0.0);
        let mut st = AdamState::new(&net, AdamConfig::with_lr(1e-3));
        for _ in 0..50 {
            let g = grads_for(&net, &[1e300, -1e300]);
            adam_step(&mut net, &g, &mut st).unwrap();
            assert!(net.is_finite());
        }
    }
}
