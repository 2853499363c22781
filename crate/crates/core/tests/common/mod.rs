#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_distr::StandardNormal;

use vlbirl_core::evaluation::argmax_consistency;
use vlbirl_core::optimality::{reward_loss_with_noise, RewardLossParams};
use vlbirl_core::policy::{ActorGrads, Greedy};
use vlbirl_core::*;

pub const EVAL_SEED: u64 = 1_000_003;

/// 50 trajectories from the value-iteration expert, optionally with
/// ε-random actions.
pub fn gridworld_expert(epsilon: f64) -> (MdpSpec, PolicyModel, Vec<Vec<ObservedTransition>>) {
    let spec = MdpSpec::default_gridworld();
    let (_, expert) = value_iteration(&spec, 1e-10).unwrap();
    let data = {
        let noisy = corrupt_policy(Greedy(&expert), epsilon).unwrap();
        rollout(&spec, &noisy, 50, EnvConfig::default().expert_seed).unwrap().iter().map(|t| t.observed()).collect()
    };
    (spec, expert, data)
}

pub fn noisy_expert_return(spec: &MdpSpec, expert: &PolicyModel, epsilon: f64) -> f64 {
    let noisy = corrupt_policy(Greedy(expert), epsilon).unwrap();
    mean_return_eval(spec, &noisy, 50, EVAL_SEED).unwrap().0
}

#[derive(Clone, Debug)]
pub struct GridRun {
    pub seed: u64,
    pub final_return: f64,
    pub initial_ile: f64,
    pub final_ile: f64,
    pub argmax: f64,
}

pub fn vlbirl_run(spec: &MdpSpec, expert: &PolicyModel, data: &[Vec<ObservedTransition>], seed: u64) -> GridRun {
    let cfg = TrainConfig { seed, ..TrainConfig::gridworld() };
    let out = train(spec, data, &cfg).unwrap();
    let first = out.report.first().unwrap();
    let last = out.report.last().unwrap();
    GridRun {
        seed,
        final_return: last.learner_mean_return,
        initial_ile: first.ile.unwrap(),
        final_ile: last.ile.unwrap(),
        argmax: argmax_consistency(&out.reward_head, &out.learner.critic, spec, &Greedy(expert)).unwrap(),
    }
}

pub fn js_return(spec: &MdpSpec, data: &[Vec<ObservedTransition>], seed: u64) -> f64 {
    let cfg = TrainConfig { seed, ..TrainConfig::gridworld() };
    let out = js_imitator_train(spec, data, &cfg, &EvalSettings::default()).unwrap();
    out.report.last().unwrap().learner_mean_return
}

// ---------------------------------------------------------------------------
// finite differences

const FD_STEP: f64 = 1e-6;

/// `|a - n| / (|a| + |n|)` over whole gradient vectors.
pub fn relative_error(analytic: &[f64], numeric: &[f64]) -> f64 {
    let diff = analytic.iter().zip(numeric).map(|(a, n)| (a - n).powi(2)).sum::<f64>().sqrt();
    let scale = analytic.iter().map(|a| a * a).sum::<f64>().sqrt() + numeric.iter().map(|n| n * n).sum::<f64>().sqrt();
    if scale < 1e-12 {
        diff
    } else {
        diff / scale
    }
}

pub fn central_differences(params: &[f64], mut f: impl FnMut(&[f64]) -> f64) -> Vec<f64> {
    let mut p = params.to_vec();
    (0..params.len())
        .map(|j| {
            let orig = p[j];
            p[j] = orig + FD_STEP;
            let up = f(&p);
            p[j] = orig - FD_STEP;
            let down = f(&p);
            p[j] = orig;
            (up - down) / (2.0 * FD_STEP)
        })
        .collect()
}

/// Worst relative error per objective over a set of random configurations.
#[derive(Clone, Copy, Debug, Default)]
pub struct GradCheck {
    pub reward: f64,
    pub classifier: f64,
    pub actor: f64,
    pub critic: f64,
}

impl GradCheck {
    pub fn worst(&self) -> f64 {
        self.reward.max(self.classifier).max(self.actor).max(self.critic)
    }
}

fn normal(rng: &mut SimRng) -> f64 {
    rng.sample(StandardNormal)
}

fn random_hidden(rng: &mut SimRng) -> Vec<usize> {
    match rng.random_range(0..3) {
        0 => vec![],
        1 => vec![rng.random_range(2..7)],
        _ => vec![rng.random_range(2..6), rng.random_range(2..5)],
    }
}

fn random_batch(spec: &MdpSpec, rng: &mut SimRng) -> Vec<ObservedTransition> {
    let trajs = rollout(spec, &vlbirl_core::env::UniformPolicy, 3, rng.random()).unwrap();
    let mut all: Vec<ObservedTransition> = trajs.iter().flat_map(|t| t.observed()).collect();
    let n = rng.random_range(1..=all.len().min(12));
    all.truncate(n);
    all
}

/// One random configuration: environment, architectures, batch, critic,
/// optimality mode and noise are all drawn from `seed`.
pub fn check_configuration(seed: u64) -> GradCheck {
    let mut rng = SimRng::seed_from_u64(seed);
    let spec = if rng.random_bool(0.5) { MdpSpec::default_gridworld() } else { MdpSpec::default_point_mass() };
    let batch = random_batch(&spec, &mut rng);
    let n = batch.len();

    // reward objective
    let mut head = RewardHead::new(spec.feature_dim(), &random_hidden(&mut rng), rng.random_bool(0.2), &mut rng);
    let clf = Classifier::new(spec.feature_dim(), &random_hidden(&mut rng), &mut rng);
    let critic = if spec.is_tabular() {
        Critic::Tabular(ValueTable((0..25).map(|_| normal(&mut rng)).collect()))
    } else {
        Critic::Network(Network::new(&[spec.state_dim(), 4, 1], Activation::Tanh, Activation::Identity, &mut rng))
    };
    let mode = if rng.random_bool(0.75) {
        OptimalityMode::Advantage
    } else {
        OptimalityMode::ExpReward { scale: rng.random_range(0.5..2.0) }
    };
    let params = RewardLossParams { gamma: 0.99, lambda_var: rng.random_range(0.0..1.0), mode };
    let noise: Vec<f64> = (0..n).map(|_| normal(&mut rng)).collect();
    let analytic = reward_loss_with_noise(&head, &clf, &critic, &spec, &batch, &params, &noise).unwrap().grads.flat();
    let theta = head.net.params();
    let numeric = central_differences(&theta, |p| {
        head.net.set_params(p).unwrap();
        reward_loss_with_noise(&head, &clf, &critic, &spec, &batch, &params, &noise).unwrap().loss
    });
    head.net.set_params(&theta).unwrap();
    let reward = relative_error(&analytic, &numeric);

    // classifier cross-entropy
    let mut clf = clf;
    let data: Vec<(Vec<f64>, f64)> = batch
        .iter()
        .map(|t| (spec.features(&t.state, &t.action), if rng.random_bool(0.5) { 1.0 } else { 0.0 }))
        .collect();
    let analytic = classifier_loss(&clf, &data).unwrap().1.flat();
    let theta = clf.net.params();
    let numeric = central_differences(&theta, |p| {
        clf.net.set_params(p).unwrap();
        classifier_loss(&clf, &data).unwrap().0.loss
    });
    let classifier = relative_error(&analytic, &numeric);

    // actor
    let advantages: Vec<f64> = (0..n).map(|_| normal(&mut rng)).collect();
    let entropy_coef = rng.random_range(0.0..0.1);
    let actor = if spec.is_tabular() && rng.random_bool(0.5) {
        let beta = rng.random_range(0.5..2.0);
        let logits: Vec<Vec<f64>> = (0..25).map(|_| (0..4).map(|_| normal(&mut rng)).collect()).collect();
        let policy = PolicyModel::Tabular { logits: logits.clone(), beta };
        let ActorGrads::Table(analytic) = actor_objective(&policy, &spec, &batch, &advantages, entropy_coef).unwrap().grads
        else {
            panic!("tabular policy gives table gradients")
        };
        let flat: Vec<f64> = logits.iter().flatten().copied().collect();
        let numeric = central_differences(&flat, |p| {
            let logits = p.chunks(4).map(|c| c.to_vec()).collect();
            actor_objective(&PolicyModel::Tabular { logits, beta }, &spec, &batch, &advantages, entropy_coef).unwrap().loss
        });
        relative_error(&analytic, &numeric)
    } else {
        let hidden = random_hidden(&mut rng);
        let mut policy = if spec.is_tabular() {
            PolicyModel::discrete_net(&spec, &hidden, &mut rng)
        } else {
            PolicyModel::gaussian_net(&spec, &hidden, &mut rng)
        };
        let ActorGrads::Network(g) = actor_objective(&policy, &spec, &batch, &advantages, entropy_coef).unwrap().grads
        else {
            panic!("network policy gives network gradients")
        };
        let (PolicyModel::DiscreteNet { net } | PolicyModel::GaussianNet { net }) = &mut policy else { unreachable!() };
        let theta = net.params();
        let mut probe = net.clone();
        let numeric = central_differences(&theta, |p| {
            probe.set_params(p).unwrap();
            let m = if spec.is_tabular() {
                PolicyModel::DiscreteNet { net: probe.clone() }
            } else {
                PolicyModel::GaussianNet { net: probe.clone() }
            };
            actor_objective(&m, &spec, &batch, &advantages, entropy_coef).unwrap().loss
        });
        relative_error(&g.flat(), &numeric)
    };

    // critic
    let mut net = Network::new(
        &[spec.state_dim(), rng.random_range(2..8), 1],
        Activation::Tanh,
        Activation::Identity,
        &mut rng,
    );
    let targets: Vec<f64> = (0..n).map(|_| normal(&mut rng)).collect();
    let analytic = critic_objective(&net, &spec, &batch, &targets).unwrap().1.flat();
    let theta = net.params();
    let numeric = central_differences(&theta, |p| {
        net.set_params(p).unwrap();
        critic_objective(&net, &spec, &batch, &targets).unwrap().0
    });
    let critic = relative_error(&analytic, &numeric);

    GradCheck { reward, classifier, actor, critic }
}

pub fn gradient_sweep(n_configs: u64, base_seed: u64) -> GradCheck {
    (0..n_configs).map(|i| check_configuration(base_seed + i)).fold(GradCheck::default(), |acc, g| GradCheck {
        reward: acc.reward.max(g.reward),
        classifier: acc.classifier.max(g.classifier),
        actor: acc.actor.max(g.actor),
        critic: acc.critic.max(g.critic),
    })
}

// ---------------------------------------------------------------------------
// dynamic-programming oracles written directly against the grid layout

/// Iterative policy evaluation by plain Jacobi sweeps over
/// `V(s) = Σ_a π(a|s) [r(s, s') + γ V(s') 1{s' not terminal}]`.
pub fn sweep_evaluation(spec: &MdpSpec, probs: &[Vec<f64>], sweeps: usize) -> Vec<f64> {
    let g = spec.gridworld_ref().unwrap();
    let (w, h) = (g.width as i64, g.height as i64);
    let step = |s: usize, a: usize| -> usize {
        let (r, c) = ((s as i64) / w, (s as i64) % w);
        let (dr, dc) = [(-1, 0), (1, 0), (0, -1), (0, 1)][a];
        let (nr, nc) = (r + dr, c + dc);
        if nr < 0 || nr >= h || nc < 0 || nc >= w {
            s
        } else {
            (nr * w + nc) as usize
        }
    };
    let terminal = |s: usize| g.goal_cells.contains(&s) || g.trap_cells.contains(&s);
    let reward = |next: usize| {
        let bonus = if g.goal_cells.contains(&next) {
            g.goal_reward
        } else if g.trap_cells.contains(&next) {
            g.trap_reward
        } else {
            0.0
        };
        bonus - g.step_penalty
    };
    let n = g.width * g.height;
    let mut v = vec![0.0; n];
    for _ in 0..sweeps {
        let mut next = vec![0.0; n];
        for s in (0..n).filter(|&s| !terminal(s)) {
            next[s] = (0..4)
                .map(|a| {
                    let s2 = step(s, a);
                    let boot = if terminal(s2) { 0.0 } else { v[s2] };
                    probs[s][a] * (reward(s2) + spec.discount * boot)
                })
                .sum();
        }
        v = next;
    }
    v
}
