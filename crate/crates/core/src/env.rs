//! Built-in environments with a hidden ground-truth reward.
//!
//! Two families are provided: a deterministic gridworld with absorbing goal
//! and trap cells, and a noisy 2-D point mass. Learners only ever see
//! [`ObservedTransition`]s; the true reward lives on [`Transition`] and is
//! used by the evaluation code.

use rand::{Rng, SeedableRng};
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type SimRng = rand_chacha::ChaCha8Rng;

pub const GRID_ACTIONS: usize = 4;
pub const UP: usize = 0;
pub const DOWN: usize = 1;
pub const LEFT: usize = 2;
pub const RIGHT: usize = 3;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum State {
    Cell(usize),
    /// `[x, y, vx, vy]`
    Point([f64; 4]),
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Action {
    Discrete(usize),
    Force([f64; 2]),
}

impl State {
    pub fn cell(&self) -> Option<usize> {
        match self {
            State::Cell(c) => Some(*c),
            State::Point(_) => None,
        }
    }
}

impl Action {
    pub fn index(&self) -> Option<usize> {
        match self {
            Action::Discrete(a) => Some(*a),
            Action::Force(_) => None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Gridworld {
    pub width: usize,
    pub height: usize,
    pub goal_cells: Vec<usize>,
    pub trap_cells: Vec<usize>,
    pub step_penalty: f64,
    pub goal_reward: f64,
    pub trap_reward: f64,
}

impl Gridworld {
    pub fn n_states(&self) -> usize {
        self.width * self.height
    }

    pub fn is_goal(&self, cell: usize) -> bool {
        self.goal_cells.contains(&cell)
    }

    pub fn is_trap(&self, cell: usize) -> bool {
        self.trap_cells.contains(&cell)
    }

    pub fn is_terminal(&self, cell: usize) -> bool {
        self.is_goal(cell) || self.is_trap(cell)
    }

    /// Cell reached by moving from `cell`; walls leave the agent in place.
    pub fn move_cell(&self, cell: usize, action: usize) -> usize {
        let (row, col) = (cell / self.width, cell % self.width);
        let (row, col) = match action {
            UP => (row.saturating_sub(1), col),
            DOWN => ((row + 1).min(self.height - 1), col),
            LEFT => (row, col.saturating_sub(1)),
            _ => (row, (col + 1).min(self.width - 1)),
        };
        row * self.width + col
    }

    /// Reward for the move `cell -> next`. Entering a goal or trap pays its
    /// bonus on top of the step penalty; terminal cells pay nothing further.
    pub fn reward(&self, cell: usize, next: usize) -> f64 {
        if self.is_terminal(cell) {
            return 0.0;
        }
        let bonus = if self.is_goal(next) {
            self.goal_reward
        } else if self.is_trap(next) {
            self.trap_reward
        } else {
            0.0
        };
        bonus - self.step_penalty
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PointMass {
    pub arena_half_width: f64,
    pub goal_center: [f64; 2],
    pub goal_radius: f64,
    pub max_force: f64,
    pub max_speed: f64,
    pub dt: f64,
    pub noise_scale: f64,
    pub step_penalty: f64,
    pub distance_penalty: f64,
    pub goal_reward: f64,
}

impl PointMass {
    pub fn distance_to_goal(&self, s: &[f64; 4]) -> f64 {
        let dx = s[0] - self.goal_center[0];
        let dy = s[1] - self.goal_center[1];
        (dx * dx + dy * dy).sqrt()
    }

    pub fn in_goal(&self, s: &[f64; 4]) -> bool {
        self.distance_to_goal(s) <= self.goal_radius
    }

    fn reward(&self, next: &[f64; 4]) -> f64 {
        if self.in_goal(next) {
            self.goal_reward - self.step_penalty
        } else {
            -self.step_penalty - self.distance_penalty * self.distance_to_goal(next)
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum EnvKind {
    Gridworld(Gridworld),
    PointMass(PointMass),
}

/// An environment: dynamics, discount, horizon and the hidden true reward.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MdpSpec {
    pub name: String,
    pub kind: EnvKind,
    pub discount: f64,
    pub horizon: usize,
}

impl MdpSpec {
    /// 5x5 grid, goal in the bottom-right corner.
    pub fn default_gridworld() -> Self {
        Self::gridworld(5, 5, vec![24], vec![]).expect("default gridworld is valid")
    }

    pub fn gridworld(
        width: usize,
        height: usize,
        goal_cells: Vec<usize>,
        trap_cells: Vec<usize>,
    ) -> Result<Self> {
        let spec = MdpSpec {
            name: "gridworld".into(),
            kind: EnvKind::Gridworld(Gridworld {
                width,
                height,
                goal_cells,
                trap_cells,
                step_penalty: 0.01,
                goal_reward: 1.0,
                trap_reward: -1.0,
            }),
            discount: 0.99,
            horizon: 50,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn default_point_mass() -> Self {
        MdpSpec {
            name: "pointmass".into(),
            kind: EnvKind::PointMass(PointMass {
                arena_half_width: 1.0,
                goal_center: [0.5, 0.5],
                goal_radius: 0.1,
                max_force: 1.0,
                max_speed: 1.0,
                dt: 0.1,
                noise_scale: 0.01,
                step_penalty: 0.01,
                distance_penalty: 0.05,
                goal_reward: 1.0,
            }),
            discount: 0.99,
            horizon: 100,
        }
    }

    /// Looks up a registered environment by name.
    pub fn by_name(name: &str) -> Result<Self> {
        match name {
            "gridworld" => Ok(Self::default_gridworld()),
            "pointmass" => Ok(Self::default_point_mass()),
            other => Err(Error::InvalidArgument(format!(
                "unknown environment `{other}` (expected gridworld or pointmass)"
            ))),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.discount > 0.0 && self.discount < 1.0) {
            return Err(Error::InvalidArgument(format!(
                "discount must lie in (0,1), got {}",
                self.discount
            )));
        }
        if self.horizon == 0 {
            return Err(Error::InvalidArgument("horizon must be >= 1".into()));
        }
        if let EnvKind::Gridworld(g) = &self.kind {
            if g.width == 0 || g.height == 0 {
                return Err(Error::InvalidArgument("empty grid".into()));
            }
            if let Some(c) = g.goal_cells.iter().chain(&g.trap_cells).find(|&&c| c >= g.n_states()) {
                return Err(Error::InvalidArgument(format!("cell {c} outside the grid")));
            }
            if (0..g.n_states()).all(|c| g.is_terminal(c)) {
                return Err(Error::InvalidArgument("no non-terminal cell".into()));
            }
        }
        Ok(())
    }

    pub fn is_tabular(&self) -> bool {
        matches!(self.kind, EnvKind::Gridworld(_))
    }

    pub fn gridworld_ref(&self) -> Option<&Gridworld> {
        match &self.kind {
            EnvKind::Gridworld(g) => Some(g),
            EnvKind::PointMass(_) => None,
        }
    }

    pub fn n_states(&self) -> Option<usize> {
        self.gridworld_ref().map(Gridworld::n_states)
    }

    pub fn n_actions(&self) -> Option<usize> {
        self.gridworld_ref().map(|_| GRID_ACTIONS)
    }

    pub fn state_dim(&self) -> usize {
        match &self.kind {
            EnvKind::Gridworld(g) => g.n_states(),
            EnvKind::PointMass(_) => 4,
        }
    }

    pub fn action_dim(&self) -> usize {
        match &self.kind {
            EnvKind::Gridworld(_) => GRID_ACTIONS,
            EnvKind::PointMass(_) => 2,
        }
    }

    /// Length of the `(state, action)` feature vector fed to reward and
    /// classifier networks.
    pub fn feature_dim(&self) -> usize {
        self.state_dim() + self.action_dim()
    }

    pub fn check_state(&self, state: &State) -> Result<()> {
        match (&self.kind, state) {
            (EnvKind::Gridworld(g), State::Cell(c)) if *c < g.n_states() => Ok(()),
            (EnvKind::PointMass(pm), State::Point(s))
                if s.iter().all(|x| x.is_finite())
                    && s[0].abs() <= pm.arena_half_width
                    && s[1].abs() <= pm.arena_half_width =>
            {
                Ok(())
            }
            _ => Err(Error::InvalidState(format!("{state:?} is not a state of `{}`", self.name))),
        }
    }

    pub fn check_action(&self, action: &Action) -> Result<()> {
        match (&self.kind, action) {
            (EnvKind::Gridworld(_), Action::Discrete(a)) if *a < GRID_ACTIONS => Ok(()),
            (EnvKind::PointMass(_), Action::Force(f)) if f.iter().all(|x| x.is_finite()) => Ok(()),
            _ => Err(Error::InvalidAction(format!("{action:?} is not an action of `{}`", self.name))),
        }
    }

    pub fn state_features(&self, state: &State) -> Vec<f64> {
        match (&self.kind, state) {
            (EnvKind::Gridworld(g), State::Cell(c)) => {
                let mut v = vec![0.0; g.n_states()];
                v[*c] = 1.0;
                v
            }
            (EnvKind::PointMass(pm), State::Point(s)) => vec![
                s[0] / pm.arena_half_width,
                s[1] / pm.arena_half_width,
                s[2] / pm.max_speed,
                s[3] / pm.max_speed,
            ],
            _ => panic!("state {state:?} does not belong to `{}`", self.name),
        }
    }

    /// Concatenated state and action encoding.
    pub fn features(&self, state: &State, action: &Action) -> Vec<f64> {
        let mut v = self.state_features(state);
        match (&self.kind, action) {
            (EnvKind::Gridworld(_), Action::Discrete(a)) => {
                let mut onehot = [0.0; GRID_ACTIONS];
                onehot[*a] = 1.0;
                v.extend_from_slice(&onehot);
            }
            (EnvKind::PointMass(pm), Action::Force(f)) => {
                v.push(f[0].clamp(-pm.max_force, pm.max_force) / pm.max_force);
                v.push(f[1].clamp(-pm.max_force, pm.max_force) / pm.max_force);
            }
            _ => panic!("action {action:?} does not belong to `{}`", self.name),
        }
        v
    }

    /// True reward of a transition. Evaluation only.
    pub fn true_reward(&self, state: &State, _action: &Action, next: &State) -> f64 {
        match (&self.kind, state, next) {
            (EnvKind::Gridworld(g), State::Cell(c), State::Cell(n)) => g.reward(*c, *n),
            (EnvKind::PointMass(pm), State::Point(_), State::Point(n)) => pm.reward(n),
            _ => panic!("transition does not belong to `{}`", self.name),
        }
    }

    pub fn is_terminal(&self, state: &State) -> bool {
        match (&self.kind, state) {
            (EnvKind::Gridworld(g), State::Cell(c)) => g.is_terminal(*c),
            (EnvKind::PointMass(pm), State::Point(s)) => pm.in_goal(s),
            _ => false,
        }
    }

    pub fn sample_initial(&self, rng: &mut SimRng) -> State {
        match &self.kind {
            EnvKind::Gridworld(g) => {
                let starts: Vec<usize> = (0..g.n_states()).filter(|&c| !g.is_terminal(c)).collect();
                State::Cell(starts[rng.random_range(0..starts.len())])
            }
            EnvKind::PointMass(pm) => loop {
                let w = pm.arena_half_width;
                let s = [rng.random_range(-w..=w), rng.random_range(-w..=w), 0.0, 0.0];
                if !pm.in_goal(&s) {
                    break State::Point(s);
                }
            },
        }
    }

    /// Advances the environment by one step, returning
    /// `(next_state, true_reward, done)`.
    ///
    /// Gridworld moves are deterministic and never touch `rng`. Terminal
    /// cells are absorbing with zero reward.
    pub fn step(&self, state: &State, action: &Action, rng: &mut SimRng) -> Result<(State, f64, bool)> {
        self.check_state(state)?;
        self.check_action(action)?;
        match (&self.kind, state, action) {
            (EnvKind::Gridworld(g), State::Cell(c), Action::Discrete(a)) => {
                if g.is_terminal(*c) {
                    return Ok((State::Cell(*c), 0.0, true));
                }
                let next = g.move_cell(*c, *a);
                Ok((State::Cell(next), g.reward(*c, next), g.is_terminal(next)))
            }
            (EnvKind::PointMass(pm), State::Point(s), Action::Force(f)) => {
                let mut next = [0.0; 4];
                for i in 0..2 {
                    let force = f[i].clamp(-pm.max_force, pm.max_force);
                    let vel = (s[2 + i] + pm.dt * force).clamp(-pm.max_speed, pm.max_speed);
                    let noise: f64 = rng.sample(StandardNormal);
                    let pos = s[i] + pm.dt * vel + pm.noise_scale * noise;
                    let clipped = pos.clamp(-pm.arena_half_width, pm.arena_half_width);
                    next[i] = clipped;
                    next[2 + i] = if clipped != pos { 0.0 } else { vel };
                }
                Ok((State::Point(next), pm.reward(&next), pm.in_goal(&next)))
            }
            _ => unreachable!("checked above"),
        }
    }
}

/// A full transition record including the hidden true reward.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Transition {
    pub state: State,
    pub action: Action,
    pub next_state: State,
    pub done: bool,
    pub true_reward: f64,
}

/// The learner-visible part of a transition.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ObservedTransition {
    pub state: State,
    pub action: Action,
    pub next_state: State,
    pub done: bool,
}

impl Transition {
    pub fn observed(&self) -> ObservedTransition {
        ObservedTransition {
            state: self.state,
            action: self.action,
            next_state: self.next_state,
            done: self.done,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub transitions: Vec<Transition>,
    pub seed: u64,
}

impl Trajectory {
    pub fn observed(&self) -> Vec<ObservedTransition> {
        self.transitions.iter().map(Transition::observed).collect()
    }

    pub fn undiscounted_return(&self) -> f64 {
        self.transitions.iter().map(|t| t.true_reward).sum()
    }

    pub fn discounted_return(&self, gamma: f64) -> f64 {
        self.transitions
            .iter()
            .rev()
            .fold(0.0, |acc, t| t.true_reward + gamma * acc)
    }

    pub fn reached_terminal(&self) -> bool {
        self.transitions.last().is_some_and(|t| t.done)
    }

    /// Consecutive transitions chain and nothing follows a terminal step.
    pub fn is_chained(&self) -> bool {
        self.transitions
            .windows(2)
            .all(|w| !w[0].done && w[0].next_state == w[1].state)
    }
}

/// A behaviour policy that can be rolled out in an environment.
pub trait Policy {
    fn act(&self, spec: &MdpSpec, state: &State, rng: &mut SimRng) -> Action;

    /// Action probabilities at a discrete state, when the policy is discrete.
    fn probabilities(&self, _spec: &MdpSpec, _state: &State) -> Option<Vec<f64>> {
        None
    }
}

impl<P: Policy + ?Sized> Policy for &P {
    fn act(&self, spec: &MdpSpec, state: &State, rng: &mut SimRng) -> Action {
        (**self).act(spec, state, rng)
    }

    fn probabilities(&self, spec: &MdpSpec, state: &State) -> Option<Vec<f64>> {
        (**self).probabilities(spec, state)
    }
}

/// Draws an index from a discrete distribution.
pub fn sample_index(probs: &[f64], rng: &mut SimRng) -> usize {
    let u: f64 = rng.random();
    let mut acc = 0.0;
    for (i, p) in probs.iter().enumerate() {
        acc += p;
        if u < acc {
            return i;
        }
    }
    probs.len() - 1
}

pub fn uniform_action(spec: &MdpSpec, rng: &mut SimRng) -> Action {
    match &spec.kind {
        EnvKind::Gridworld(_) => Action::Discrete(rng.random_range(0..GRID_ACTIONS)),
        EnvKind::PointMass(pm) => {
            let m = pm.max_force;
            Action::Force([rng.random_range(-m..=m), rng.random_range(-m..=m)])
        }
    }
}

/// Uniformly random actions everywhere.
#[derive(Clone, Copy, Debug, Default)]
pub struct UniformPolicy;

impl Policy for UniformPolicy {
    fn act(&self, spec: &MdpSpec, _state: &State, rng: &mut SimRng) -> Action {
        uniform_action(spec, rng)
    }

    fn probabilities(&self, spec: &MdpSpec, _state: &State) -> Option<Vec<f64>> {
        spec.n_actions().map(|n| vec![1.0 / n as f64; n])
    }
}

/// Wraps a policy so that with probability `epsilon` a uniformly random
/// action replaces the wrapped one.
#[derive(Clone, Debug)]
pub struct EpsilonMix<P> {
    pub inner: P,
    pub epsilon: f64,
}

pub fn corrupt_policy<P: Policy>(policy: P, epsilon: f64) -> Result<EpsilonMix<P>> {
    if !(0.0..=1.0).contains(&epsilon) {
        return Err(Error::InvalidArgument(format!("epsilon must lie in [0,1], got {epsilon}")));
    }
    Ok(EpsilonMix { inner: policy, epsilon })
}

impl<P: Policy> Policy for EpsilonMix<P> {
    fn act(&self, spec: &MdpSpec, state: &State, rng: &mut SimRng) -> Action {
        // no draw at epsilon 0, so the wrapped policy sees the same stream
        if self.epsilon > 0.0 && rng.random::<f64>() < self.epsilon {
            uniform_action(spec, rng)
        } else {
            self.inner.act(spec, state, rng)
        }
    }

    fn probabilities(&self, spec: &MdpSpec, state: &State) -> Option<Vec<f64>> {
        let inner = self.inner.probabilities(spec, state)?;
        let n = inner.len() as f64;
        Some(inner.iter().map(|p| (1.0 - self.epsilon) * p + self.epsilon / n).collect())
    }
}

/// Runs one episode from `start`, stopping at a terminal step or the horizon.
pub fn rollout_from<P: Policy + ?Sized>(
    spec: &MdpSpec,
    policy: &P,
    start: State,
    rng: &mut SimRng,
) -> Result<Vec<Transition>> {
    let mut state = start;
    let mut transitions = Vec::with_capacity(spec.horizon);
    for _ in 0..spec.horizon {
        let action = policy.act(spec, &state, rng);
        let (next_state, true_reward, done) = spec.step(&state, &action, rng)?;
        transitions.push(Transition { state, action, next_state, done, true_reward });
        if done {
            break;
        }
        state = next_state;
    }
    Ok(transitions)
}

/// Collects `n_episodes` episodes. Episode `i` draws from its own stream
/// seeded with `base_seed + i`.
pub fn rollout<P: Policy + ?Sized>(
    spec: &MdpSpec,
    policy: &P,
    n_episodes: usize,
    base_seed: u64,
) -> Result<Vec<Trajectory>> {
    if n_episodes == 0 {
        return Err(Error::InvalidArgument("rollout needs n_episodes >= 1".into()));
    }
    (0..n_episodes as u64)
        .map(|i| {
            let seed = base_seed.wrapping_add(i);
            let mut rng = SimRng::seed_from_u64(seed);
            let start = spec.sample_initial(&mut rng);
            let transitions = rollout_from(spec, policy, start, &mut rng)?;
            Ok(Trajectory { transitions, seed })
        })
        .collect()
}
