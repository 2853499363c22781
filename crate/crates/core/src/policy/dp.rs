//! Exact dynamic programming on tabular specs, plus a Monte Carlo
//! evaluator for specs where no transition table exists.

use crate::env::{rollout, MdpSpec, Policy, State};
use crate::error::{Error, Result};

use super::model::{argmax, PolicyModel, ValueTable};

/// Deterministic transition table.
#[derive(Clone, Debug, PartialEq)]
pub struct TabularModel {
    pub n_states: usize,
    pub n_actions: usize,
    pub gamma: f64,
    /// Indexed by `state * n_actions + action`.
    pub next: Vec<usize>,
    pub reward: Vec<f64>,
    /// The move ends the episode, so nothing is bootstrapped after it.
    pub done: Vec<bool>,
    /// Absorbing states with value fixed at zero.
    pub terminal: Vec<bool>,
}

impl TabularModel {
    pub fn from_spec(spec: &MdpSpec) -> Result<Self> {
        let g = spec.gridworld_ref().ok_or(Error::NotTabular)?;
        let n_actions = crate::env::GRID_ACTIONS;
        let mut next = Vec::with_capacity(g.n_states() * n_actions);
        let mut reward = Vec::with_capacity(next.capacity());
        let mut done = Vec::with_capacity(next.capacity());
        for s in 0..g.n_states() {
            for a in 0..n_actions {
                if g.is_terminal(s) {
                    next.push(s);
                    reward.push(0.0);
                    done.push(true);
                } else {
                    let n = g.move_cell(s, a);
                    next.push(n);
                    reward.push(g.reward(s, n));
                    done.push(g.is_terminal(n));
                }
            }
        }
        Ok(TabularModel {
            n_states: g.n_states(),
            n_actions,
            gamma: spec.discount,
            next,
            reward,
            done,
            terminal: (0..g.n_states()).map(|s| g.is_terminal(s)).collect(),
        })
    }

    fn backup(&self, v: &[f64], s: usize, a: usize) -> f64 {
        let i = s * self.n_actions + a;
        let boot = if self.done[i] { 0.0 } else { v[self.next[i]] };
        self.reward[i] + self.gamma * boot
    }

    pub fn q_values(&self, v: &[f64]) -> Vec<Vec<f64>> {
        (0..self.n_states)
            .map(|s| (0..self.n_actions).map(|a| if self.terminal[s] { 0.0 } else { self.backup(v, s, a) }).collect())
            .collect()
    }
}

#[derive(Clone, Debug)]
pub struct ValueIteration {
    pub values: ValueTable,
    pub q: Vec<Vec<f64>>,
    pub policy: PolicyModel,
    /// Sup-norm change per sweep.
    pub residuals: Vec<f64>,
}

const MAX_SWEEPS: usize = 1_000_000;

/// Synchronous value iteration until the sup-norm Bellman residual drops
/// below `tol`. The greedy policy breaks ties towards the lowest action index.
pub fn solve_value_iteration(model: &TabularModel, tol: f64) -> Result<ValueIteration> {
    if tol <= 0.0 {
        return Err(Error::InvalidArgument("tolerance must be positive".into()));
    }
    let mut v = vec![0.0; model.n_states];
    let mut residuals = Vec::new();
    for _ in 0..MAX_SWEEPS {
        let next: Vec<f64> = (0..model.n_states)
            .map(|s| {
                if model.terminal[s] {
                    0.0
                } else {
                    (0..model.n_actions).map(|a| model.backup(&v, s, a)).fold(f64::NEG_INFINITY, f64::max)
                }
            })
            .collect();
        let residual = next.iter().zip(&v).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        v = next;
        residuals.push(residual);
        if residual < tol {
            let q = model.q_values(&v);
            let actions = q.iter().map(|row| argmax(row)).collect();
            return Ok(ValueIteration {
                values: ValueTable(v),
                q,
                policy: PolicyModel::Deterministic { actions },
                residuals,
            });
        }
    }
    Err(Error::NonFinite("value iteration did not converge".into()))
}

pub fn value_iteration(spec: &MdpSpec, tol: f64) -> Result<(ValueTable, PolicyModel)> {
    let vi = solve_value_iteration(&TabularModel::from_spec(spec)?, tol)?;
    Ok((vi.values, vi.policy))
}

/// Softmax expert over optimal Q-values with inverse temperature `beta`.
pub fn softmax_expert(q: &[Vec<f64>], beta: f64) -> PolicyModel {
    PolicyModel::Tabular { logits: q.to_vec(), beta }
}

pub fn evaluate_model(model: &TabularModel, probs: &[Vec<f64>], tol: f64) -> Result<ValueTable> {
    if tol <= 0.0 {
        return Err(Error::InvalidArgument("tolerance must be positive".into()));
    }
    let mut v = vec![0.0; model.n_states];
    for _ in 0..MAX_SWEEPS {
        let next: Vec<f64> = (0..model.n_states)
            .map(|s| {
                if model.terminal[s] {
                    0.0
                } else {
                    probs[s].iter().enumerate().map(|(a, p)| p * model.backup(&v, s, a)).sum()
                }
            })
            .collect();
        let residual = next.iter().zip(&v).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        v = next;
        if residual < tol {
            return Ok(ValueTable(v));
        }
    }
    Err(Error::NonFinite("policy evaluation did not converge".into()))
}

/// `V^pi` under the true reward.
pub fn policy_evaluation<P: Policy + ?Sized>(spec: &MdpSpec, policy: &P, tol: f64) -> Result<ValueTable> {
    let model = TabularModel::from_spec(spec)?;
    let probs = (0..model.n_states)
        .map(|s| {
            policy
                .probabilities(spec, &State::Cell(s))
                .ok_or_else(|| Error::InvalidArgument("policy exposes no action probabilities".into()))
        })
        .collect::<Result<Vec<_>>>()?;
    evaluate_model(&model, &probs, tol)
}

/// Sample mean and standard error of the discounted true return from the
/// initial-state distribution.
pub fn mc_value_estimate<P: Policy + ?Sized>(
    spec: &MdpSpec,
    policy: &P,
    n_episodes: usize,
    base_seed: u64,
) -> Result<(f64, f64)> {
    if n_episodes < 2 {
        return Err(Error::InvalidArgument("need at least two episodes".into()));
    }
    let returns: Vec<f64> = rollout(spec, policy, n_episodes, base_seed)?
        .iter()
        .map(|t| t.discounted_return(spec.discount))
        .collect();
    let (mean, sd) = crate::evaluation::mean_std(&returns);
    Ok((mean, sd / (n_episodes as f64).sqrt()))
}
