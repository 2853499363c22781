//! The two optimality distributions and the objective that matches them.
//!
//! `p(O | s, a)` is a logistic classifier separating expert from learner
//! pairs. `q(O | r)` is the sigmoid of the advantage
//! `r + γ v(s') - v(s)`, where `r = μ + σ ε` is drawn from a Gaussian
//! reward head by reparameterization. The reward head is trained to
//! minimise `KL(q || p)` plus a penalty on the predicted reward variance;
//! the classifier and critic act as frozen targets during that step.

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::approximator::{Activation, GradientBundle, Network};
use crate::env::{Action, MdpSpec, ObservedTransition, SimRng, State};
use crate::error::{Error, Result};
use crate::policy::{Critic, RewardSource};

/// Lower/upper clamp applied to both optimality probabilities.
pub const PROB_CLAMP: f64 = 1e-6;
/// Range of the reward head's log standard deviation.
pub const LOG_SIGMA_MIN: f64 = -10.0;
pub const LOG_SIGMA_MAX: f64 = 4.0;

pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

pub fn clamp_prob(p: f64) -> f64 {
    p.clamp(PROB_CLAMP, 1.0 - PROB_CLAMP)
}

fn logit(p: f64) -> f64 {
    (p / (1.0 - p)).ln()
}

/// `KL(Bern(q) || Bern(p))` after clamping both arguments.
pub fn bernoulli_reverse_kl(q: f64, p: f64) -> Result<f64> {
    for (name, x) in [("q", q), ("p", p)] {
        if !(0.0..=1.0).contains(&x) {
            return Err(Error::InvalidArgument(format!("{name} = {x} is not a probability")));
        }
    }
    let (q, p) = (clamp_prob(q), clamp_prob(p));
    let kl = q * (q / p).ln() + (1.0 - q) * ((1.0 - q) / (1.0 - p)).ln();
    // rounding can leave a tiny negative residue when q == p
    Ok(kl.max(0.0))
}

/// Clamped pair `(q(O | r), p(O | s, a))`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct OptimalityPair {
    pub q: f64,
    pub p: f64,
}

impl OptimalityPair {
    pub fn new(q: f64, p: f64) -> Self {
        OptimalityPair { q: clamp_prob(q), p: clamp_prob(p) }
    }

    pub fn kl(&self) -> f64 {
        bernoulli_reverse_kl(self.q, self.p).expect("clamped pair")
    }
}

/// `sigmoid(r + γ v(s') (1 - done) - v(s))`, clamped.
pub fn q_advantage(r: f64, v_s: f64, v_next: f64, gamma: f64, done: bool) -> f64 {
    let boot = if done { 0.0 } else { gamma * v_next };
    clamp_prob(sigmoid(r + boot - v_s))
}

/// Bounded monotone surrogate for `q ∝ exp(r)`.
pub fn q_exp_reward(r: f64, scale: f64) -> f64 {
    clamp_prob(sigmoid(r / scale))
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum OptimalityMode {
    #[default]
    Advantage,
    ExpReward { scale: f64 },
}

/// Gaussian reward model `(s, a) -> (μ_r, log σ_r)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RewardHead {
    pub net: Network,
    /// Treat σ as zero: `r = μ` and no variance penalty.
    pub deterministic: bool,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RewardSample {
    pub r: f64,
    pub mu: f64,
    pub sigma: f64,
}

impl RewardHead {
    pub fn new(feature_dim: usize, hidden: &[usize], deterministic: bool, rng: &mut SimRng) -> Self {
        let mut dims = vec![feature_dim];
        dims.extend_from_slice(hidden);
        dims.push(2);
        RewardHead { net: Network::new(&dims, Activation::LeakyRelu, Activation::Identity, rng), deterministic }
    }

    pub fn for_spec(spec: &MdpSpec, deterministic: bool, rng: &mut SimRng) -> Self {
        Self::new(spec.feature_dim(), &[16, 16], deterministic, rng)
    }

    /// `(μ_r, σ_r)` for a feature vector; σ is 0 in deterministic mode.
    pub fn moments(&self, features: &[f64]) -> Result<(f64, f64)> {
        let out = self.net.forward(features)?;
        let sigma = if self.deterministic { 0.0 } else { out[1].clamp(LOG_SIGMA_MIN, LOG_SIGMA_MAX).exp() };
        Ok((out[0], sigma))
    }

    /// Reparameterized draw `r = μ + σ ε` with externally supplied noise.
    pub fn sample(&self, features: &[f64], noise_eps: f64) -> Result<RewardSample> {
        let (mu, sigma) = self.moments(features)?;
        Ok(RewardSample { r: mu + sigma * noise_eps, mu, sigma })
    }

    pub fn sample_reward(&self, spec: &MdpSpec, state: &State, action: &Action, noise_eps: f64) -> Result<RewardSample> {
        self.sample(&spec.features(state, action), noise_eps)
    }

    pub fn mean_reward(&self, spec: &MdpSpec, state: &State, action: &Action) -> f64 {
        self.moments(&spec.features(state, action)).expect("reward head input dim").0
    }
}

impl RewardSource for RewardHead {
    fn reward(&self, spec: &MdpSpec, t: &ObservedTransition) -> f64 {
        self.mean_reward(spec, &t.state, &t.action)
    }
}

/// Logistic classifier: probability that a pair came from the expert.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Classifier {
    pub net: Network,
}

impl Classifier {
    pub fn new(feature_dim: usize, hidden: &[usize], rng: &mut SimRng) -> Self {
        let mut dims = vec![feature_dim];
        dims.extend_from_slice(hidden);
        dims.push(1);
        Classifier { net: Network::new(&dims, Activation::LeakyRelu, Activation::Identity, rng) }
    }

    pub fn for_spec(spec: &MdpSpec, rng: &mut SimRng) -> Self {
        Self::new(spec.feature_dim(), &[16, 16], rng)
    }

    pub fn zeros(feature_dim: usize, hidden: &[usize]) -> Self {
        let mut dims = vec![feature_dim];
        dims.extend_from_slice(hidden);
        dims.push(1);
        Classifier { net: Network::zeros(&dims, Activation::LeakyRelu, Activation::Identity) }
    }

    pub fn logit(&self, features: &[f64]) -> Result<f64> {
        Ok(self.net.forward(features)?[0])
    }

    pub fn probability(&self, features: &[f64]) -> Result<f64> {
        Ok(clamp_prob(sigmoid(self.logit(features)?)))
    }
}

pub fn p_optimality(clf: &Classifier, spec: &MdpSpec, state: &State, action: &Action) -> Result<f64> {
    clf.probability(&spec.features(state, action))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RewardLossParams {
    pub gamma: f64,
    pub lambda_var: f64,
    pub mode: OptimalityMode,
}

#[derive(Clone, Debug)]
pub struct RewardLoss {
    /// `kl + variance_term`
    pub loss: f64,
    pub kl: f64,
    pub variance_term: f64,
    /// Gradient of `loss` with respect to the reward head only.
    pub grads: GradientBundle,
    pub pairs: Vec<OptimalityPair>,
}

/// Reward objective with the reparameterization noise supplied by the caller.
///
/// `loss = mean_i KL(q_i || p_i) + λ mean_i σ_i²`. The classifier and critic
/// are read but never differentiated.
pub fn reward_loss_with_noise(
    head: &RewardHead,
    clf: &Classifier,
    critic: &Critic,
    spec: &MdpSpec,
    batch: &[ObservedTransition],
    params: &RewardLossParams,
    noise: &[f64],
) -> Result<RewardLoss> {
    if batch.is_empty() {
        return Err(Error::Empty("reward batch"));
    }
    if noise.len() != batch.len() {
        return Err(Error::DimensionMismatch { expected: batch.len(), got: noise.len() });
    }
    let n = batch.len() as f64;
    let mut grads = GradientBundle::zeros_like(&head.net);
    let mut kl_sum = 0.0;
    let mut var_sum = 0.0;
    let mut pairs = Vec::with_capacity(batch.len());
    for (i, (t, &eps)) in batch.iter().zip(noise).enumerate() {
        let features = spec.features(&t.state, &t.action);
        let cache = head.net.forward_cached(&features)?;
        let (mu, raw_log_sigma) = (cache.output()[0], cache.output()[1]);
        let log_sigma = raw_log_sigma.clamp(LOG_SIGMA_MIN, LOG_SIGMA_MAX);
        let sigma = if head.deterministic { 0.0 } else { log_sigma.exp() };
        let r = mu + sigma * eps;

        // dz/dr: the logit of q as a function of the sampled reward
        let (z, dz_dr) = match params.mode {
            OptimalityMode::Advantage => {
                let v_s = critic.value(spec, &t.state);
                let v_next = critic.bootstrap(spec, t);
                if !v_s.is_finite() || !v_next.is_finite() {
                    return Err(Error::NonFinite(format!("critic value for batch element {i}")));
                }
                (r + params.gamma * v_next - v_s, 1.0)
            }
            OptimalityMode::ExpReward { scale } => (r / scale, 1.0 / scale),
        };
        let q_raw = sigmoid(z);
        let q = clamp_prob(q_raw);
        let p = clf.probability(&features)?;
        let pair = OptimalityPair { q, p };
        kl_sum += pair.kl();
        pairs.push(pair);

        let dq_dz = if q == q_raw { q * (1.0 - q) } else { 0.0 };
        let dkl_dr = (logit(q) - logit(p)) * dq_dz * dz_dr / n;
        let mut upstream = [dkl_dr, 0.0];
        if !head.deterministic {
            var_sum += sigma * sigma;
            if (LOG_SIGMA_MIN..=LOG_SIGMA_MAX).contains(&raw_log_sigma) {
                // r = μ + exp(ℓ) ε and σ² = exp(2ℓ)
                upstream[1] = dkl_dr * sigma * eps + params.lambda_var * 2.0 * sigma * sigma / n;
            }
        }
        grads.add_scaled(&head.net.backward(&cache, &upstream)?, 1.0);
    }
    let kl = kl_sum / n;
    let variance_term = params.lambda_var * var_sum / n;
    Ok(RewardLoss { loss: kl + variance_term, kl, variance_term, grads, pairs })
}

/// Reward objective with fresh standard-normal noise drawn from `rng`.
pub fn reward_loss(
    head: &RewardHead,
    clf: &Classifier,
    critic: &Critic,
    spec: &MdpSpec,
    batch: &[ObservedTransition],
    params: &RewardLossParams,
    rng: &mut SimRng,
) -> Result<RewardLoss> {
    let noise: Vec<f64> = (0..batch.len()).map(|_| rng.sample(StandardNormal)).collect();
    reward_loss_with_noise(head, clf, critic, spec, batch, params, &noise)
}
