mod common;

use rand::SeedableRng;
use vlbirl_core::evaluation::argmax_consistency;
use vlbirl_core::policy::Greedy;
use vlbirl_core::*;

#[test]
fn actor_critic_on_true_reward_reaches_optimal_return() {
    let spec = MdpSpec::default_gridworld();
    let (_, expert) = value_iteration(&spec, 1e-10).unwrap();
    let optimal = mean_return_eval(&spec, &Greedy(&expert), 50, common::EVAL_SEED).unwrap().0;
    let cfg = ActorCriticConfig { lr_actor: 0.1, lr_critic: 0.1, ..ActorCriticConfig::default() };
    let mut ac = ActorCritic::tabular(25, 4);
    let mut seen = 0;
    let mut seed = 0;
    while seen < 20_000 {
        let batch: Vec<_> = rollout(&spec, &ac.policy, 4, seed).unwrap().iter().flat_map(|t| t.observed()).collect();
        seed += 4;
        seen += batch.len();
        ac.update(&spec, &batch, &TrueReward, &cfg).unwrap();
    }
    let learned = mean_return_eval(&spec, &ac.policy, 50, common::EVAL_SEED).unwrap().0;
    assert!(learned >= 0.95 * optimal, "{learned} vs optimal {optimal}");
}

#[test]
fn random_reward_heads_rank_the_expert_action_at_chance() {
    let spec = MdpSpec::default_gridworld();
    let (_, expert) = value_iteration(&spec, 1e-10).unwrap();
    let fractions: Vec<f64> = (0..20)
        .map(|seed| {
            let head = RewardHead::for_spec(&spec, false, &mut SimRng::seed_from_u64(seed));
            argmax_consistency(&head, &Critic::Tabular(ValueTable::zeros(25)), &spec, &expert).unwrap()
        })
        .collect();
    let mean = fractions.iter().sum::<f64>() / 20.0;
    assert!((mean - 0.25).abs() <= 0.15, "{mean} from {fractions:?}");
}

#[test]
fn end_to_end_run_recovers_the_expert() {
    let (spec, expert, data) = common::gridworld_expert(0.0);
    let expert_return = common::noisy_expert_return(&spec, &expert, 0.0);
    let run = common::vlbirl_run(&spec, &expert, &data, 0);
    assert!(run.final_return >= 0.9 * expert_return, "{run:?}");
    assert!(run.final_ile < run.initial_ile, "{run:?}");
    assert!(run.argmax >= 0.8, "{run:?}");
}

#[test]
fn behavior_cloning_imitates_the_expert() {
    let (spec, expert, data) = common::gridworld_expert(0.0);
    let expert_return = common::noisy_expert_return(&spec, &expert, 0.0);
    let bc = behavior_cloning(&spec, &data, &BcConfig::default()).unwrap();
    let ret = mean_return_eval(&spec, &bc.policy, 50, common::EVAL_SEED).unwrap().0;
    assert!(ret >= 0.8 * expert_return, "{ret} vs {expert_return}");
}

#[test]
fn discriminator_stays_between_chance_and_perfect() {
    let (spec, _, data) = common::gridworld_expert(0.0);
    let cfg = TrainConfig { seed: 0, ..TrainConfig::gridworld() };
    let out = js_imitator_train(&spec, &data, &cfg, &EvalSettings::default()).unwrap();
    let (_, expert, _) = common::gridworld_expert(0.0);
    let fresh_expert: Vec<_> = rollout(&spec, &Greedy(&expert), 20, 500).unwrap().iter().flat_map(|t| t.observed()).collect();
    let learner: Vec<_> = rollout(&spec, out.policy(), 20, 600).unwrap().iter().flat_map(|t| t.observed()).collect();
    let n = fresh_expert.len().min(learner.len());
    let correct = fresh_expert[..n]
        .iter()
        .filter(|t| p_optimality(&out.discriminator, &spec, &t.state, &t.action).unwrap() > 0.5)
        .count()
        + learner[..n]
            .iter()
            .filter(|t| p_optimality(&out.discriminator, &spec, &t.state, &t.action).unwrap() <= 0.5)
            .count();
    let accuracy = correct as f64 / (2 * n) as f64;
    assert!(accuracy > 0.5 && accuracy < 1.0, "{accuracy}");
}

#[test]
#[ignore = "the -ln(1-D) reward is positive, so on a terminating gridworld the imitator learns to avoid the goal"]
fn js_imitator_reaches_most_of_the_expert_return() {
    let (spec, expert, data) = common::gridworld_expert(0.0);
    let expert_return = common::noisy_expert_return(&spec, &expert, 0.0);
    let ret = common::js_return(&spec, &data, 0);
    assert!(ret >= 0.8 * expert_return, "{ret} vs {expert_return}");
}

#[test]
fn reruns_are_bit_identical() {
    let (spec, _, data) = common::gridworld_expert(0.2);
    let cfg = TrainConfig { seed: 3, n_iterations: 40, ..TrainConfig::gridworld() };
    let a = train(&spec, &data, &cfg).unwrap();
    let b = train(&spec, &data, &cfg).unwrap();
    assert_eq!(a.report.to_csv().unwrap(), b.report.to_csv().unwrap());
    assert_eq!(a.reward_head, b.reward_head);
    assert_eq!(a.learner.policy, b.learner.policy);
}
