use serde::{Deserialize, Serialize};

use crate::approximator::{adam_step, Activation, AdamConfig, AdamState, GradientBundle, Network};
use crate::env::{Action, MdpSpec, ObservedTransition, SimRng, State};
use crate::error::{Error, Result};

use super::model::{softmax, Critic, PolicyModel, RewardSource, ValueTable, LOG_STD_MAX, LOG_STD_MIN};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ActorCriticConfig {
    pub gamma: f64,
    pub lr_actor: f64,
    pub lr_critic: f64,
    pub entropy_coef: f64,
    pub max_grad_norm: f64,
}

impl Default for ActorCriticConfig {
    fn default() -> Self {
        ActorCriticConfig { gamma: 0.99, lr_actor: 1e-3, lr_critic: 1e-3, entropy_coef: 0.01, max_grad_norm: 10.0 }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct UpdateStats {
    pub critic_loss: f64,
    pub mean_advantage: f64,
    pub entropy: f64,
}

/// Advantage actor-critic with TD(0) targets.
///
/// Tabular parts are updated by plain gradient steps, network parts by
/// Adam. Rewards always come from a [`RewardSource`]; the learner never
/// sees the environment's reward.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ActorCritic {
    pub policy: PolicyModel,
    pub critic: Critic,
    actor_opt: Option<AdamState>,
    critic_opt: Option<AdamState>,
}

fn clip(grads: &mut [f64], max_norm: f64) {
    let norm = grads.iter().map(|g| g * g).sum::<f64>().sqrt();
    if norm > max_norm {
        let s = max_norm / norm;
        grads.iter_mut().for_each(|g| *g *= s);
    }
}

/// Gradient of the softmax entropy with respect to the logits.
fn entropy_grad(probs: &[f64]) -> (f64, Vec<f64>) {
    let h: f64 = -probs.iter().filter(|&&p| p > 0.0).map(|p| p * p.ln()).sum::<f64>();
    let g = probs
        .iter()
        .map(|&p| if p > 0.0 { -p * (p.ln() + h) } else { 0.0 })
        .collect();
    (h, g)
}

impl ActorCritic {
    /// Uniform tabular policy and zero tabular critic.
    pub fn tabular(n_states: usize, n_actions: usize) -> Self {
        ActorCritic {
            policy: PolicyModel::uniform_tabular(n_states, n_actions),
            critic: Critic::Tabular(ValueTable::zeros(n_states)),
            actor_opt: None,
            critic_opt: None,
        }
    }

    /// Network actor (softmax or Gaussian by action type) and network critic.
    pub fn networks(spec: &MdpSpec, hidden: &[usize], rng: &mut SimRng) -> Self {
        let policy = if spec.is_tabular() {
            PolicyModel::discrete_net(spec, hidden, rng)
        } else {
            PolicyModel::gaussian_net(spec, hidden, rng)
        };
        let mut dims = vec![spec.state_dim()];
        dims.extend_from_slice(hidden);
        dims.push(1);
        let critic = Network::new(&dims, Activation::Tanh, Activation::Identity, rng);
        let actor_net = match &policy {
            PolicyModel::DiscreteNet { net } | PolicyModel::GaussianNet { net } => net,
            _ => unreachable!(),
        };
        ActorCritic {
            actor_opt: Some(AdamState::new(actor_net, AdamConfig::default())),
            critic_opt: Some(AdamState::new(&critic, AdamConfig::default())),
            policy,
            critic: Critic::Network(critic),
        }
    }

    /// Tabular learner for gridworlds, `[32, 32]` networks otherwise.
    pub fn for_spec(spec: &MdpSpec, rng: &mut SimRng) -> Self {
        match (spec.n_states(), spec.n_actions()) {
            (Some(s), Some(a)) => Self::tabular(s, a),
            _ => Self::networks(spec, &[32, 32], rng),
        }
    }

    /// One actor-critic step on `batch`. Advantages use the critic as it was
    /// before this call.
    pub fn update(
        &mut self,
        spec: &MdpSpec,
        batch: &[ObservedTransition],
        reward: &(impl RewardSource + ?Sized),
        cfg: &ActorCriticConfig,
    ) -> Result<UpdateStats> {
        if batch.is_empty() {
            return Err(Error::Empty("actor-critic batch"));
        }
        let rewards: Vec<f64> = batch.iter().map(|t| reward.reward(spec, t)).collect();
        if let Some(i) = rewards.iter().position(|r| !r.is_finite()) {
            return Err(Error::NonFinite(format!("learned reward of batch element {i}")));
        }
        let values: Vec<f64> = batch.iter().map(|t| self.critic.value(spec, &t.state)).collect();
        let targets: Vec<f64> = batch
            .iter()
            .zip(&rewards)
            .map(|(t, r)| r + cfg.gamma * self.critic.bootstrap(spec, t))
            .collect();
        if let Some(i) = targets.iter().position(|x| !x.is_finite()) {
            return Err(Error::NonFinite(format!("TD target of batch element {i}")));
        }
        let advantages: Vec<f64> = targets.iter().zip(&values).map(|(t, v)| t - v).collect();
        let n = batch.len() as f64;
        let critic_loss = advantages.iter().map(|a| 0.5 * a * a).sum::<f64>() / n;
        let mean_advantage = advantages.iter().sum::<f64>() / n;

        let entropy = self.update_actor(spec, batch, &advantages, cfg)?;
        self.update_critic(spec, batch, &targets, cfg)?;
        Ok(UpdateStats { critic_loss, mean_advantage, entropy })
    }

    fn update_actor(
        &mut self,
        spec: &MdpSpec,
        batch: &[ObservedTransition],
        advantages: &[f64],
        cfg: &ActorCriticConfig,
    ) -> Result<f64> {
        let obj = actor_objective(&self.policy, spec, batch, advantages, cfg.entropy_coef)?;
        match (&mut self.policy, obj.grads) {
            (PolicyModel::Tabular { logits, .. }, ActorGrads::Table(mut grad)) => {
                let n_actions = logits[0].len();
                clip(&mut grad, cfg.max_grad_norm);
                for (s, row) in logits.iter_mut().enumerate() {
                    for (b, l) in row.iter_mut().enumerate() {
                        *l -= cfg.lr_actor * grad[s * n_actions + b];
                    }
                }
            }
            (PolicyModel::DiscreteNet { net } | PolicyModel::GaussianNet { net }, ActorGrads::Network(total)) => {
                let opt = self.actor_opt.as_mut().expect("network actor has an optimizer");
                opt.config.learning_rate = cfg.lr_actor;
                opt.config.max_grad_norm = Some(cfg.max_grad_norm);
                adam_step(net, &total, opt)?;
            }
            _ => unreachable!("gradient kind follows the policy kind"),
        }
        Ok(obj.entropy)
    }

    fn update_critic(
        &mut self,
        spec: &MdpSpec,
        batch: &[ObservedTransition],
        targets: &[f64],
        cfg: &ActorCriticConfig,
    ) -> Result<()> {
        match &mut self.critic {
            Critic::Tabular(v) => {
                for (t, target) in batch.iter().zip(targets) {
                    let s = t.state.cell().ok_or_else(|| Error::InvalidState("tabular critic needs cells".into()))?;
                    v.0[s] += cfg.lr_critic * (target - v.0[s]);
                }
            }
            Critic::Network(net) => {
                let (_, total) = critic_objective(net, spec, batch, targets)?;
                let opt = self.critic_opt.as_mut().expect("network critic has an optimizer");
                opt.config.learning_rate = cfg.lr_critic;
                opt.config.max_grad_norm = Some(cfg.max_grad_norm);
                adam_step(net, &total, opt)?;
            }
        }
        Ok(())
    }
}

/// Actor gradients: one entry per logit for tables, a bundle for networks.
#[derive(Clone, Debug)]
pub enum ActorGrads {
    Table(Vec<f64>),
    Network(GradientBundle),
}

#[derive(Clone, Debug)]
pub struct ActorObjective {
    pub loss: f64,
    pub entropy: f64,
    pub grads: ActorGrads,
}

/// `-(A log π(a|s) + c H(π(·|s)))` with the advantages held fixed. Summed
/// over the batch for tabular policies, averaged for network policies.
pub fn actor_objective(
    policy: &PolicyModel,
    spec: &MdpSpec,
    batch: &[ObservedTransition],
    advantages: &[f64],
    entropy_coef: f64,
) -> Result<ActorObjective> {
    if batch.is_empty() {
        return Err(Error::Empty("actor batch"));
    }
    if advantages.len() != batch.len() {
        return Err(Error::DimensionMismatch { expected: batch.len(), got: advantages.len() });
    }
    let n = batch.len() as f64;
    let mut loss = 0.0;
    let mut entropy_sum = 0.0;
    let grads = match policy {
        PolicyModel::Tabular { logits, beta } => {
            let n_actions = logits[0].len();
            let mut grad = vec![0.0; logits.len() * n_actions];
            for (t, adv) in batch.iter().zip(advantages) {
                let (State::Cell(s), Action::Discrete(a)) = (t.state, t.action) else {
                    return Err(Error::InvalidState("tabular actor needs discrete transitions".into()));
                };
                let scaled: Vec<f64> = logits[s].iter().map(|l| *beta * l).collect();
                let probs = softmax(&scaled);
                let (h, dh) = entropy_grad(&probs);
                entropy_sum += h;
                loss -= adv * probs[a].ln() + entropy_coef * h;
                for b in 0..n_actions {
                    let score = if b == a { 1.0 } else { 0.0 } - probs[b];
                    grad[s * n_actions + b] -= *beta * (adv * score + entropy_coef * dh[b]);
                }
            }
            ActorGrads::Table(grad)
        }
        PolicyModel::DiscreteNet { net } => {
            let mut total = GradientBundle::zeros_like(net);
            for (t, adv) in batch.iter().zip(advantages) {
                let a = t.action.index().ok_or_else(|| Error::InvalidAction("expected a discrete action".into()))?;
                let cache = net.forward_cached(&spec.state_features(&t.state))?;
                let probs = softmax(cache.output());
                let (h, dh) = entropy_grad(&probs);
                entropy_sum += h;
                loss -= (adv * probs[a].ln() + entropy_coef * h) / n;
                let upstream: Vec<f64> = (0..probs.len())
                    .map(|b| -(adv * (if b == a { 1.0 } else { 0.0 } - probs[b]) + entropy_coef * dh[b]) / n)
                    .collect();
                total.add_scaled(&net.backward(&cache, &upstream)?, 1.0);
            }
            ActorGrads::Network(total)
        }
        PolicyModel::GaussianNet { net } => {
            let mut total = GradientBundle::zeros_like(net);
            let log_2pi = (2.0 * std::f64::consts::PI).ln();
            for (t, adv) in batch.iter().zip(advantages) {
                let Action::Force(f) = t.action else {
                    return Err(Error::InvalidAction("expected a continuous action".into()));
                };
                let cache = net.forward_cached(&spec.state_features(&t.state))?;
                let out = cache.output();
                let mut upstream = vec![0.0; 4];
                for i in 0..2 {
                    let raw = out[2 + i];
                    let log_std = raw.clamp(LOG_STD_MIN, LOG_STD_MAX);
                    let var = (2.0 * log_std).exp();
                    let diff = f[i] - out[i];
                    let h = log_std + 0.5 * (1.0 + log_2pi);
                    let log_prob = -0.5 * diff * diff / var - log_std - 0.5 * log_2pi;
                    entropy_sum += h;
                    loss -= (adv * log_prob + entropy_coef * h) / n;
                    upstream[i] = -adv * diff / var / n;
                    if (LOG_STD_MIN..=LOG_STD_MAX).contains(&raw) {
                        upstream[2 + i] = -(adv * (diff * diff / var - 1.0) + entropy_coef) / n;
                    }
                }
                total.add_scaled(&net.backward(&cache, &upstream)?, 1.0);
            }
            ActorGrads::Network(total)
        }
        PolicyModel::Deterministic { .. } => {
            return Err(Error::InvalidArgument("a deterministic table cannot be trained".into()))
        }
    };
    Ok(ActorObjective { loss, entropy: entropy_sum / n, grads })
}

/// `mean 0.5 (v(s) - target)²` and its gradient for a network critic.
pub fn critic_objective(
    net: &Network,
    spec: &MdpSpec,
    batch: &[ObservedTransition],
    targets: &[f64],
) -> Result<(f64, GradientBundle)> {
    if batch.is_empty() {
        return Err(Error::Empty("critic batch"));
    }
    if targets.len() != batch.len() {
        return Err(Error::DimensionMismatch { expected: batch.len(), got: targets.len() });
    }
    let n = batch.len() as f64;
    let mut loss = 0.0;
    let mut total = GradientBundle::zeros_like(net);
    for (t, target) in batch.iter().zip(targets) {
        let cache = net.forward_cached(&spec.state_features(&t.state))?;
        let err = cache.output()[0] - target;
        loss += 0.5 * err * err / n;
        total.add_scaled(&net.backward(&cache, &[err / n])?, 1.0);
    }
    Ok((loss, total))
}
