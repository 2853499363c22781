//! Inverse reinforcement learning by optimality matching.
//!
//! A reward head is trained so that the sigmoid of its induced advantage,
//! `q(O | r)`, matches the expert/learner classifier `p(O | s, a)` under the
//! reverse Bernoulli KL divergence. The learner policy is an actor-critic
//! trained on the learned reward, and everything is evaluated against
//! exact dynamic-programming oracles on small built-in environments.

pub mod approximator;
pub mod baselines;
pub mod buffer;
pub mod config;
pub mod env;
pub mod error;
pub mod evaluation;
pub mod io;
pub mod optimality;
pub mod policy;
pub mod trainer;

pub use approximator::{adam_step, Activation, AdamConfig, AdamState, GradientBundle, Network};
pub use buffer::RolloutBuffer;
pub use baselines::{behavior_cloning, js_imitator_train, BaselineKind, BcConfig};
pub use config::{BaselineConfig, EnvConfig, EvalConfig, ExperimentConfig, OptimalityKind, TrainConfig};
pub use env::{
    corrupt_policy, rollout, Action, EnvKind, MdpSpec, ObservedTransition, Policy, SimRng, State,
    Trajectory, Transition,
};
pub use error::{Error, Result};
pub use optimality::{
    bernoulli_reverse_kl, p_optimality, q_advantage, q_exp_reward, reward_loss, Classifier,
    OptimalityMode, OptimalityPair, RewardHead,
};
pub use policy::{
    actor_objective, critic_objective, mc_value_estimate, policy_evaluation, value_iteration, ActorCritic, ActorCriticConfig, Critic,
    PolicyModel, RewardSource, TrueReward, ValueTable,
};
pub use evaluation::{ile, mean_return_eval, welch_t_test, EvalReport};
pub use trainer::{classifier_loss, classifier_update, train, train_with, EvalSettings, TrainOutput, TrainRecord, TrainReport};
