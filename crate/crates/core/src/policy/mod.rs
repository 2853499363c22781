//! Exact solvers, policy representations and the actor-critic learner.

mod actor_critic;
mod dp;
mod expert;
mod model;

pub use actor_critic::{actor_objective, critic_objective, ActorCritic, ActorCriticConfig, ActorGrads, ActorObjective, UpdateStats};
pub use dp::{
    evaluate_model, mc_value_estimate, policy_evaluation, softmax_expert, solve_value_iteration, value_iteration,
    TabularModel, ValueIteration,
};
pub use expert::{Expert, GoalSeeker};
pub use model::{
    argmax, softmax, Critic, Greedy, PolicyModel, RewardSource, TrueReward, ValueTable, LOG_STD_MAX, LOG_STD_MIN,
};
