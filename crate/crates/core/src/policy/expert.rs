//! Demonstrators used to produce expert trajectories.

use serde::{Deserialize, Serialize};

use crate::env::{Action, EnvKind, MdpSpec, Policy, SimRng, State};
use crate::error::{Error, Result};

use super::dp::{softmax_expert, solve_value_iteration, TabularModel};
use super::model::{PolicyModel, ValueTable};

/// Proportional-derivative controller that steers a point mass onto the
/// goal centre.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GoalSeeker {
    pub kp: f64,
    pub kd: f64,
}

impl Default for GoalSeeker {
    fn default() -> Self {
        GoalSeeker { kp: 4.0, kd: 3.0 }
    }
}

impl Policy for GoalSeeker {
    fn act(&self, spec: &MdpSpec, state: &State, _rng: &mut SimRng) -> Action {
        let (EnvKind::PointMass(pm), State::Point(s)) = (&spec.kind, state) else {
            panic!("goal seeker only drives a point mass");
        };
        let mut f = [0.0; 2];
        for i in 0..2 {
            let u = self.kp * (pm.goal_center[i] - s[i]) - self.kd * s[2 + i];
            f[i] = u.clamp(-pm.max_force, pm.max_force);
        }
        Action::Force(f)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Expert {
    /// Value-iteration policy on a tabular spec, greedy or softmax.
    Planner { policy: PolicyModel, values: ValueTable },
    Controller(GoalSeeker),
}

impl Expert {
    /// Greedy planner when `beta` is `None`, softmax over optimal Q with
    /// inverse temperature `beta` otherwise. Continuous specs get the
    /// goal seeker.
    pub fn for_spec(spec: &MdpSpec, beta: Option<f64>) -> Result<Self> {
        if !spec.is_tabular() {
            return Ok(Expert::Controller(GoalSeeker::default()));
        }
        let vi = solve_value_iteration(&TabularModel::from_spec(spec)?, 1e-10)?;
        let policy = match beta {
            None => vi.policy,
            Some(b) if b > 0.0 && b.is_finite() => softmax_expert(&vi.q, b),
            Some(b) => return Err(Error::InvalidArgument(format!("expert beta must be positive, got {b}"))),
        };
        Ok(Expert::Planner { policy, values: vi.values })
    }
}

impl Policy for Expert {
    fn act(&self, spec: &MdpSpec, state: &State, rng: &mut SimRng) -> Action {
        match self {
            Expert::Planner { policy, .. } => policy.act(spec, state, rng),
            Expert::Controller(c) => c.act(spec, state, rng),
        }
    }

    fn probabilities(&self, spec: &MdpSpec, state: &State) -> Option<Vec<f64>> {
        match self {
            Expert::Planner { policy, .. } => policy.probabilities(spec, state),
            Expert::Controller(_) => None,
        }
    }
}
