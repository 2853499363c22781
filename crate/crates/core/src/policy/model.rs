use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::approximator::{Activation, Network};
use crate::env::{sample_index, Action, MdpSpec, ObservedTransition, Policy, SimRng, State};
use crate::error::{Error, Result};

pub const LOG_STD_MIN: f64 = -5.0;
pub const LOG_STD_MAX: f64 = 2.0;

/// State values, indexed by gridworld cell or by evaluation-grid point.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ValueTable(pub Vec<f64>);

impl ValueTable {
    pub fn zeros(n: usize) -> Self {
        ValueTable(vec![0.0; n])
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn mean(&self) -> f64 {
        self.0.iter().sum::<f64>() / self.0.len() as f64
    }
}

/// State-value estimate used for bootstrapping and for the advantage in `q`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum Critic {
    Tabular(ValueTable),
    Network(Network),
}

impl Critic {
    pub fn value(&self, spec: &MdpSpec, state: &State) -> f64 {
        match (self, state) {
            (Critic::Tabular(v), State::Cell(c)) => v.0[*c],
            (Critic::Network(net), _) => net.forward(&spec.state_features(state)).expect("critic input dim")[0],
            (Critic::Tabular(_), State::Point(_)) => panic!("tabular critic queried with a continuous state"),
        }
    }

    /// `v(s')` with the terminal mask applied.
    pub fn bootstrap(&self, spec: &MdpSpec, t: &ObservedTransition) -> f64 {
        if t.done {
            0.0
        } else {
            self.value(spec, &t.next_state)
        }
    }
}

/// Anything that assigns a scalar reward to an observed transition.
pub trait RewardSource {
    fn reward(&self, spec: &MdpSpec, t: &ObservedTransition) -> f64;
}

/// The environment's hidden reward. Used for expert training and oracles.
#[derive(Clone, Copy, Debug, Default)]
pub struct TrueReward;

impl RewardSource for TrueReward {
    fn reward(&self, spec: &MdpSpec, t: &ObservedTransition) -> f64 {
        spec.true_reward(&t.state, &t.action, &t.next_state)
    }
}

impl<F: Fn(&MdpSpec, &ObservedTransition) -> f64> RewardSource for F {
    fn reward(&self, spec: &MdpSpec, t: &ObservedTransition) -> f64 {
        self(spec, t)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum PolicyModel {
    /// Softmax over `beta * logits[state]`.
    Tabular { logits: Vec<Vec<f64>>, beta: f64 },
    Deterministic { actions: Vec<usize> },
    /// Network emitting one logit per discrete action.
    DiscreteNet { net: Network },
    /// Network emitting `[mean_x, mean_y, log_std_x, log_std_y]`.
    GaussianNet { net: Network },
}

pub fn softmax(logits: &[f64]) -> Vec<f64> {
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = logits.iter().map(|l| (l - max).exp()).collect();
    let z: f64 = exps.iter().sum();
    exps.into_iter().map(|e| e / z).collect()
}

/// Lowest index among the maximal entries.
pub fn argmax(xs: &[f64]) -> usize {
    let mut best = 0;
    for (i, x) in xs.iter().enumerate().skip(1) {
        if *x > xs[best] {
            best = i;
        }
    }
    best
}

impl PolicyModel {
    pub fn uniform_tabular(n_states: usize, n_actions: usize) -> Self {
        PolicyModel::Tabular { logits: vec![vec![0.0; n_actions]; n_states], beta: 1.0 }
    }

    pub fn discrete_net(spec: &MdpSpec, hidden: &[usize], rng: &mut SimRng) -> Self {
        let mut dims = vec![spec.state_dim()];
        dims.extend_from_slice(hidden);
        dims.push(spec.action_dim());
        PolicyModel::DiscreteNet { net: Network::new(&dims, Activation::Tanh, Activation::Identity, rng) }
    }

    pub fn gaussian_net(spec: &MdpSpec, hidden: &[usize], rng: &mut SimRng) -> Self {
        let mut dims = vec![spec.state_dim()];
        dims.extend_from_slice(hidden);
        dims.push(2 * spec.action_dim());
        let mut net = Network::new(&dims, Activation::Tanh, Activation::Identity, rng);
        // start with a small mean and std 0.5 so exploration covers the arena
        let last = net.layers_mut().last_mut().unwrap();
        last.weights.iter_mut().for_each(|w| *w *= 0.1);
        for b in &mut last.bias[2..] {
            *b = 0.5f64.ln();
        }
        PolicyModel::GaussianNet { net }
    }

    /// Discrete action distribution, if the policy is discrete.
    pub fn action_probs(&self, spec: &MdpSpec, state: &State) -> Option<Vec<f64>> {
        match (self, state) {
            (PolicyModel::Tabular { logits, beta }, State::Cell(c)) => {
                Some(softmax(&logits[*c].iter().map(|l| beta * l).collect::<Vec<_>>()))
            }
            (PolicyModel::Deterministic { actions }, State::Cell(c)) => {
                let mut p = vec![0.0; spec.action_dim()];
                p[actions[*c]] = 1.0;
                Some(p)
            }
            (PolicyModel::DiscreteNet { net }, _) => {
                Some(softmax(&net.forward(&spec.state_features(state)).expect("actor input dim")))
            }
            _ => None,
        }
    }

    /// Mean and clamped log-std of a Gaussian policy.
    pub fn gaussian_params(&self, spec: &MdpSpec, state: &State) -> Option<([f64; 2], [f64; 2])> {
        match self {
            PolicyModel::GaussianNet { net } => {
                let out = net.forward(&spec.state_features(state)).expect("actor input dim");
                Some((
                    [out[0], out[1]],
                    [out[2].clamp(LOG_STD_MIN, LOG_STD_MAX), out[3].clamp(LOG_STD_MIN, LOG_STD_MAX)],
                ))
            }
            _ => None,
        }
    }

    /// Most likely action: argmax for discrete policies, the mean for Gaussian ones.
    pub fn greedy_action(&self, spec: &MdpSpec, state: &State) -> Action {
        match self {
            PolicyModel::GaussianNet { .. } => {
                let (mean, _) = self.gaussian_params(spec, state).unwrap();
                Action::Force(mean)
            }
            _ => Action::Discrete(argmax(&self.action_probs(spec, state).expect("discrete policy"))),
        }
    }

    /// Deterministic table of greedy actions for a tabular spec.
    pub fn greedy_table(&self, spec: &MdpSpec) -> Result<PolicyModel> {
        let n = spec.n_states().ok_or(Error::NotTabular)?;
        let actions = (0..n)
            .map(|c| self.greedy_action(spec, &State::Cell(c)).index().ok_or(Error::NotTabular))
            .collect::<Result<_>>()?;
        Ok(PolicyModel::Deterministic { actions })
    }

    /// Action-probability table for a tabular spec.
    pub fn probability_table(&self, spec: &MdpSpec) -> Result<Vec<Vec<f64>>> {
        let n = spec.n_states().ok_or(Error::NotTabular)?;
        (0..n)
            .map(|c| self.action_probs(spec, &State::Cell(c)).ok_or(Error::NotTabular))
            .collect()
    }
}

impl Policy for PolicyModel {
    fn act(&self, spec: &MdpSpec, state: &State, rng: &mut SimRng) -> Action {
        match self {
            PolicyModel::Deterministic { actions } => {
                Action::Discrete(actions[state.cell().expect("deterministic table needs a cell")])
            }
            PolicyModel::GaussianNet { .. } => {
                let (mean, log_std) = self.gaussian_params(spec, state).unwrap();
                let mut f = [0.0; 2];
                for i in 0..2 {
                    let z: f64 = rng.sample(StandardNormal);
                    f[i] = mean[i] + log_std[i].exp() * z;
                }
                Action::Force(f)
            }
            _ => Action::Discrete(sample_index(&self.action_probs(spec, state).unwrap(), rng)),
        }
    }

    fn probabilities(&self, spec: &MdpSpec, state: &State) -> Option<Vec<f64>> {
        self.action_probs(spec, state)
    }
}

/// Evaluation view of a policy that always takes its most likely action.
#[derive(Clone, Copy, Debug)]
pub struct Greedy<'a>(pub &'a PolicyModel);

impl Policy for Greedy<'_> {
    fn act(&self, spec: &MdpSpec, state: &State, _rng: &mut SimRng) -> Action {
        self.0.greedy_action(spec, state)
    }

    fn probabilities(&self, spec: &MdpSpec, state: &State) -> Option<Vec<f64>> {
        let a = self.0.greedy_action(spec, state).index()?;
        let mut p = vec![0.0; spec.action_dim()];
        p[a] = 1.0;
        Some(p)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::SeedableRng;

    proptest! {
        #[test]
        fn softmax_shift_invariance(logits in proptest::collection::vec(-20.0f64..20.0, 1..8), shift in -50.0f64..50.0) {
            let p = softmax(&logits);
            let shifted: Vec<f64> = logits.iter().map(|l| l + shift).collect();
            let q = softmax(&shifted);
            prop_assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-12);
            for (a, b) in p.iter().zip(&q) {
                prop_assert!((a - b).abs() < 1e-12);
            }
            prop_assert_eq!(argmax(&logits), argmax(&shifted));
        }
    }

    #[test]
    fn argmax_breaks_ties_low() {
        assert_eq!(argmax(&[1.0, 3.0, 3.0, 0.0]), 1);
        assert_eq!(argmax(&[2.0, 2.0]), 0);
    }

    #[test]
    fn greedy_view_of_tabular_policy() {
        let spec = MdpSpec::default_gridworld();
        let mut p = PolicyModel::uniform_tabular(25, 4);
        if let PolicyModel::Tabular { logits, .. } = &mut p {
            logits[3][2] = 1.0;
        }
        assert_eq!(Greedy(&p).act(&spec, &State::Cell(3), &mut SimRng::seed_from_u64(0)), Action::Discrete(2));
        assert_eq!(Greedy(&p).probabilities(&spec, &State::Cell(0)).unwrap(), vec![1.0, 0.0, 0.0, 0.0]);
        let table = p.greedy_table(&spec).unwrap();
        assert_eq!(table.action_probs(&spec, &State::Cell(3)).unwrap(), vec![0.0, 0.0, 1.0, 0.0]);
    }

    #[test]
    fn gaussian_log_std_is_bounded() {
        let spec = MdpSpec::default_point_mass();
        let mut rng = SimRng::seed_from_u64(4);
        let mut p = PolicyModel::gaussian_net(&spec, &[8], &mut rng);
        if let PolicyModel::GaussianNet { net } = &mut p {
            net.layers_mut().last_mut().unwrap().bias[2] = 40.0;
            net.layers_mut().last_mut().unwrap().bias[3] = -40.0;
        }
        let (_, ls) = p.gaussian_params(&spec, &State::Point([0.1, 0.2, 0.0, 0.0])).unwrap();
        assert_eq!(ls, [LOG_STD_MAX, LOG_STD_MIN]);
    }
}
