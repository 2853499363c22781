//! Comparison learners: behavior cloning and a Jensen-Shannon discriminator
//! imitator.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use serde::{Deserialize, Serialize};

use crate::approximator::{adam_step, AdamConfig, AdamState, GradientBundle, Network};
use crate::config::TrainConfig;
use crate::env::{Action, MdpSpec, ObservedTransition, SimRng, State};
use crate::error::{Error, Result};
use crate::optimality::Classifier;
use crate::policy::{softmax, ActorCritic, PolicyModel, LOG_STD_MAX, LOG_STD_MIN};
use crate::trainer::{run_loop, EvalSettings, Objective, TrainReport};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BaselineKind {
    BehaviorCloning,
    JsImitator,
}

impl BaselineKind {
    /// Name used on the command line and in reports.
    pub fn method_name(self) -> &'static str {
        match self {
            BaselineKind::BehaviorCloning => "bc",
            BaselineKind::JsImitator => "gail_js",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BcConfig {
    pub hidden: Vec<usize>,
    pub epochs: usize,
    pub lr: f64,
    pub patience: usize,
    pub seed: u64,
}

impl Default for BcConfig {
    fn default() -> Self {
        BcConfig { hidden: vec![], epochs: 500, lr: 5e-2, patience: 10, seed: 0 }
    }
}

impl BcConfig {
    pub fn from_config(b: &crate::config::BaselineConfig, seed: u64) -> Self {
        BcConfig { hidden: b.bc_hidden.clone(), epochs: b.bc_epochs, lr: b.bc_lr, patience: b.bc_patience, seed }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct BcOutput {
    pub policy: PolicyModel,
    /// Mean holdout negative log-likelihood after each epoch (training
    /// loss when there is no holdout).
    pub holdout_loss: Vec<f64>,
    pub best_epoch: usize,
}

/// Negative log-likelihood of one pair and its gradient with respect to the
/// network output.
fn nll(net_out: &[f64], action: &Action) -> Result<(f64, Vec<f64>)> {
    match action {
        Action::Discrete(a) => {
            let p = softmax(net_out);
            let loss = -p[*a].max(1e-300).ln();
            let g = p.iter().enumerate().map(|(b, pb)| pb - if b == *a { 1.0 } else { 0.0 }).collect();
            Ok((loss, g))
        }
        Action::Force(f) => {
            let mut loss = 0.0;
            let mut g = vec![0.0; 4];
            for i in 0..2 {
                let raw = net_out[2 + i];
                let ls = raw.clamp(LOG_STD_MIN, LOG_STD_MAX);
                let var = (2.0 * ls).exp();
                let d = f[i] - net_out[i];
                loss += 0.5 * d * d / var + ls + 0.5 * (2.0 * std::f64::consts::PI).ln();
                g[i] = -d / var;
                if (LOG_STD_MIN..=LOG_STD_MAX).contains(&raw) {
                    g[2 + i] = 1.0 - d * d / var;
                }
            }
            Ok((loss, g))
        }
    }
}

fn mean_nll(net: &Network, spec: &MdpSpec, data: &[(State, Action)]) -> Result<f64> {
    let mut total = 0.0;
    for (s, a) in data {
        total += nll(&net.forward(&spec.state_features(s))?, a)?.0;
    }
    Ok(total / data.len() as f64)
}

/// Maximum-likelihood fit of expert actions. A shuffled 10% holdout drives
/// early stopping; the best holdout parameters are returned.
pub fn behavior_cloning(spec: &MdpSpec, expert: &[Vec<ObservedTransition>], cfg: &BcConfig) -> Result<BcOutput> {
    if cfg.epochs == 0 {
        return Err(Error::InvalidArgument("behavior cloning needs epochs >= 1".into()));
    }
    if !(cfg.lr > 0.0) {
        return Err(Error::InvalidArgument("behavior cloning needs a positive learning rate".into()));
    }
    let mut data: Vec<(State, Action)> = expert.iter().flatten().map(|t| (t.state, t.action)).collect();
    if data.is_empty() {
        return Err(Error::Empty("expert trajectories"));
    }
    for (s, a) in &data {
        spec.check_state(s)?;
        spec.check_action(a)?;
    }
    let mut rng = SimRng::seed_from_u64(cfg.seed);
    let mut policy = if spec.is_tabular() {
        PolicyModel::discrete_net(spec, &cfg.hidden, &mut rng)
    } else {
        PolicyModel::gaussian_net(spec, &cfg.hidden, &mut rng)
    };
    data.shuffle(&mut rng);
    let n_hold = if data.len() >= 10 { data.len() / 10 } else { 0 };
    let (holdout, train) = data.split_at(n_hold);

    let net = match &mut policy {
        PolicyModel::DiscreteNet { net } | PolicyModel::GaussianNet { net } => net,
        _ => unreachable!("behavior cloning always builds a network policy"),
    };
    let mut opt = AdamState::new(net, AdamConfig::with_lr(cfg.lr));
    let mut best = (f64::INFINITY, net.clone(), 0usize);
    let mut since_best = 0;
    let mut history = Vec::new();
    let n = train.len() as f64;
    for epoch in 1..=cfg.epochs {
        let mut grads = GradientBundle::zeros_like(net);
        for (s, a) in train {
            let cache = net.forward_cached(&spec.state_features(s))?;
            let (_, g) = nll(cache.output(), a)?;
            let g: Vec<f64> = g.iter().map(|x| x / n).collect();
            grads.add_scaled(&net.backward(&cache, &g)?, 1.0);
        }
        adam_step(net, &grads, &mut opt)?;
        let eval_set = if holdout.is_empty() { train } else { holdout };
        let loss = mean_nll(net, spec, eval_set)?;
        if !loss.is_finite() {
            return Err(Error::Diverged { iteration: epoch, detail: format!("behavior cloning loss is {loss}") });
        }
        history.push(loss);
        if loss < best.0 {
            best = (loss, net.clone(), epoch);
            since_best = 0;
        } else {
            since_best += 1;
            if since_best >= cfg.patience {
                break;
            }
        }
    }
    *net = best.1;
    Ok(BcOutput { policy, holdout_loss: history, best_epoch: best.2 })
}

pub struct JsOutput {
    pub learner: ActorCritic,
    pub discriminator: Classifier,
    pub report: TrainReport,
}

impl JsOutput {
    pub fn policy(&self) -> &PolicyModel {
        &self.learner.policy
    }
}

/// Same loop as the main trainer with the reward head removed; the learner
/// is trained on `-ln(1 - D(s, a))` from the discriminator.
pub fn js_imitator_train(
    spec: &MdpSpec,
    expert: &[Vec<ObservedTransition>],
    cfg: &TrainConfig,
    eval: &EvalSettings,
) -> Result<JsOutput> {
    let out = run_loop(spec, expert, cfg, eval, Objective::Discriminator)?;
    Ok(JsOutput { learner: out.learner, discriminator: out.classifier, report: out.report })
}
