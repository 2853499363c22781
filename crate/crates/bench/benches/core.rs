use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BatchSize, Criterion};
use rand::SeedableRng;
use vlbirl_core::optimality::RewardLossParams;
use vlbirl_core::policy::{Expert, TrueReward};
use vlbirl_core::{
    classifier_loss, reward_loss, rollout, value_iteration, ActorCritic, ActorCriticConfig, Activation, Classifier,
    MdpSpec, Network, ObservedTransition, OptimalityMode, RewardHead, SimRng,
};

fn batch(spec: &MdpSpec, n: usize) -> Vec<ObservedTransition> {
    let expert = Expert::for_spec(spec, None).unwrap();
    rollout(spec, &expert, 64, 0).unwrap().iter().flat_map(|t| t.observed()).cycle().take(n).collect()
}

fn network(c: &mut Criterion) {
    let mut rng = SimRng::seed_from_u64(0);
    let net = Network::new(&[8, 64, 64, 2], Activation::Tanh, Activation::Identity, &mut rng);
    let x = [0.1, -0.2, 0.3, 0.0, 0.5, -0.5, 0.2, 0.9];
    c.bench_function("network/forward_8x64x64x2", |b| b.iter(|| net.forward(black_box(&x)).unwrap()));
    c.bench_function("network/gradient_8x64x64x2", |b| b.iter(|| net.gradient(black_box(&x), &[1.0, -1.0]).unwrap()));
}

fn objectives(c: &mut Criterion) {
    for spec in [MdpSpec::default_gridworld(), MdpSpec::default_point_mass()] {
        let mut rng = SimRng::seed_from_u64(1);
        let data = batch(&spec, 256);
        let head = RewardHead::for_spec(&spec, false, &mut rng);
        let clf = Classifier::for_spec(&spec, &mut rng);
        let learner = ActorCritic::for_spec(&spec, &mut rng);
        let params = RewardLossParams { gamma: 0.99, lambda_var: 0.01, mode: OptimalityMode::Advantage };
        c.bench_function(&format!("reward_loss/{}/256", spec.name), |b| {
            b.iter(|| reward_loss(&head, &clf, &learner.critic, &spec, black_box(&data), &params, &mut rng).unwrap())
        });
        let labelled: Vec<(Vec<f64>, f64)> =
            data.iter().enumerate().map(|(i, t)| (spec.features(&t.state, &t.action), (i % 2) as f64)).collect();
        c.bench_function(&format!("classifier_loss/{}/256", spec.name), |b| {
            b.iter(|| classifier_loss(&clf, black_box(&labelled)).unwrap())
        });
        let cfg = ActorCriticConfig::default();
        c.bench_function(&format!("actor_critic_update/{}/256", spec.name), |b| {
            b.iter_batched(
                || learner.clone(),
                |mut ac| ac.update(&spec, &data, &TrueReward, &cfg).unwrap(),
                BatchSize::SmallInput,
            )
        });
    }
}

fn planning(c: &mut Criterion) {
    let grid = MdpSpec::default_gridworld();
    c.bench_function("value_iteration/gridworld", |b| b.iter(|| value_iteration(black_box(&grid), 1e-10).unwrap()));
    for spec in [grid, MdpSpec::default_point_mass()] {
        let expert = Expert::for_spec(&spec, None).unwrap();
        c.bench_function(&format!("rollout/{}/100_episodes", spec.name), |b| {
            b.iter(|| rollout(&spec, &expert, 100, black_box(3)).unwrap())
        });
    }
}

criterion_group!(benches, network, objectives, planning);
criterion_main!(benches);
