//! The interleaved classifier / reward / policy loop.
//!
//! Each iteration collects learner rollouts, refits the expert-vs-learner
//! classifier, takes reward steps on the reverse-KL objective over a mixed
//! expert and learner minibatch, then updates the learner on the learned
//! mean reward. No step is nested inside another.

use std::path::PathBuf;
use std::time::Instant;

use rand::{RngCore, SeedableRng};
use serde::{Deserialize, Serialize};

use crate::approximator::{adam_step, checkpoint, AdamConfig, AdamState, GradientBundle};
use crate::buffer::{sample_slice, RolloutBuffer};
use crate::config::TrainConfig;
use crate::env::{rollout, MdpSpec, ObservedTransition, SimRng};
use crate::error::{Error, Result};
use crate::evaluation::{continuous_value_grid, ile, mean_return_eval};
use crate::optimality::{reward_loss, sigmoid, Classifier, RewardHead, RewardLossParams, PROB_CLAMP};
use crate::policy::{
    policy_evaluation, value_iteration, ActorCritic, ActorCriticConfig, PolicyModel, RewardSource, ValueTable,
};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClassifierStats {
    /// Mean binary cross-entropy before the last step.
    pub loss: f64,
    /// Fraction of the balanced batch classified correctly before the last step.
    pub accuracy: f64,
}

fn softplus(z: f64) -> f64 {
    if z > 0.0 {
        z + (-z).exp().ln_1p()
    } else {
        z.exp().ln_1p()
    }
}

/// Logistic-regression steps with expert pairs labelled 1 and learner pairs
/// labelled 0. The larger batch is truncated so both classes count equally.
pub fn classifier_update(
    clf: &mut Classifier,
    opt: &mut AdamState,
    spec: &MdpSpec,
    expert_batch: &[ObservedTransition],
    learner_batch: &[ObservedTransition],
    steps: usize,
) -> Result<ClassifierStats> {
    if expert_batch.is_empty() {
        return Err(Error::Empty("expert batch"));
    }
    if learner_batch.is_empty() {
        return Err(Error::Empty("learner batch"));
    }
    if steps == 0 {
        return Err(Error::InvalidArgument("classifier steps must be >= 1".into()));
    }
    let n = expert_batch.len().min(learner_batch.len());
    let data: Vec<(Vec<f64>, f64)> = expert_batch[..n]
        .iter()
        .map(|t| (spec.features(&t.state, &t.action), 1.0))
        .chain(learner_batch[..n].iter().map(|t| (spec.features(&t.state, &t.action), 0.0)))
        .collect();
    classifier_steps(clf, opt, &data, steps)
}

/// Mean binary cross-entropy of the classifier logits, its gradient and the
/// accuracy on `data`.
pub fn classifier_loss(clf: &Classifier, data: &[(Vec<f64>, f64)]) -> Result<(ClassifierStats, GradientBundle)> {
    if data.is_empty() {
        return Err(Error::Empty("classifier data"));
    }
    let total = data.len() as f64;
    let mut grads = GradientBundle::zeros_like(&clf.net);
    let (mut loss, mut correct) = (0.0, 0usize);
    for (x, y) in data {
        let cache = clf.net.forward_cached(x)?;
        let z = cache.output()[0];
        loss += softplus(z) - y * z;
        if (z > 0.0) == (*y > 0.5) {
            correct += 1;
        }
        grads.add_scaled(&clf.net.backward(&cache, &[(sigmoid(z) - y) / total])?, 1.0);
    }
    Ok((ClassifierStats { loss: loss / total, accuracy: correct as f64 / total }, grads))
}

/// Cross-entropy descent on labelled feature vectors.
pub fn classifier_steps(
    clf: &mut Classifier,
    opt: &mut AdamState,
    data: &[(Vec<f64>, f64)],
    steps: usize,
) -> Result<ClassifierStats> {
    let mut stats = ClassifierStats { loss: f64::NAN, accuracy: f64::NAN };
    for _ in 0..steps {
        let (s, grads) = classifier_loss(clf, data)?;
        stats = s;
        if !stats.loss.is_finite() {
            return Err(Error::NonFinite("classifier loss".into()));
        }
        adam_step(&mut clf.net, &grads, opt)?;
    }
    Ok(stats)
}

/// One evaluation point of a training run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainRecord {
    pub iteration: usize,
    pub classifier_loss: Option<f64>,
    pub classifier_accuracy: Option<f64>,
    pub reward_kl_loss: Option<f64>,
    pub variance_term: Option<f64>,
    pub learner_mean_return: f64,
    pub learner_std_return: f64,
    pub ile: Option<f64>,
}

/// Evaluation records. Wall-clock times are kept apart from the records so
/// that reruns compare equal.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct TrainReport {
    pub records: Vec<TrainRecord>,
    /// Seconds since the start of training, one entry per record.
    pub wall_time_secs: Vec<f64>,
}

pub const REPORT_COLUMNS: [&str; 8] = [
    "iteration",
    "classifier_loss",
    "classifier_accuracy",
    "reward_kl_loss",
    "variance_term",
    "learner_mean_return",
    "learner_std_return",
    "ile",
];

impl TrainReport {
    pub fn last(&self) -> Option<&TrainRecord> {
        self.records.last()
    }

    pub fn first(&self) -> Option<&TrainRecord> {
        self.records.first()
    }

    /// Records as CSV, without timings.
    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        if self.records.is_empty() {
            w.write_record(REPORT_COLUMNS).map_err(|e| Error::Format(e.to_string()))?;
        }
        for r in &self.records {
            w.serialize(r).map_err(|e| Error::Format(e.to_string()))?;
        }
        let bytes = w.into_inner().map_err(|e| Error::Format(e.to_string()))?;
        Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
    }

    pub fn from_csv(text: &str) -> Result<Self> {
        let mut r = csv::Reader::from_reader(text.as_bytes());
        let records = r
            .deserialize()
            .collect::<std::result::Result<Vec<TrainRecord>, _>>()
            .map_err(|e| Error::Format(e.to_string()))?;
        let wall_time_secs = vec![0.0; records.len()];
        Ok(TrainReport { records, wall_time_secs })
    }

    /// `iteration,wall_time_secs` rows.
    pub fn timing_csv(&self) -> String {
        let mut out = String::from("iteration,wall_time_secs\n");
        for (r, t) in self.records.iter().zip(&self.wall_time_secs) {
            out.push_str(&format!("{},{}\n", r.iteration, t));
        }
        out
    }
}

/// How the learner is scored during training.
#[derive(Clone, Debug, PartialEq)]
pub struct EvalSettings {
    pub seed: u64,
    /// Reference values for ILE. Tabular specs default to the optimal values.
    pub expert_values: Option<ValueTable>,
    pub grid_resolution: usize,
    pub grid_episodes: usize,
    /// Write reward, classifier and learner snapshots here at every record.
    pub checkpoint_dir: Option<PathBuf>,
}

impl Default for EvalSettings {
    fn default() -> Self {
        let e = crate::config::EvalConfig::default();
        EvalSettings {
            seed: e.seed,
            expert_values: None,
            grid_resolution: e.grid_resolution,
            grid_episodes: e.grid_episodes,
            checkpoint_dir: None,
        }
    }
}

impl EvalSettings {
    pub fn from_config(eval: &crate::config::EvalConfig) -> Self {
        EvalSettings {
            seed: eval.seed,
            expert_values: None,
            grid_resolution: eval.grid_resolution,
            grid_episodes: eval.grid_episodes,
            checkpoint_dir: None,
        }
    }
}

pub struct TrainOutput {
    pub reward_head: RewardHead,
    pub learner: ActorCritic,
    pub classifier: Classifier,
    pub report: TrainReport,
}

impl TrainOutput {
    pub fn policy(&self) -> &PolicyModel {
        &self.learner.policy
    }
}

/// Runs the full loop with default evaluation settings.
pub fn train(spec: &MdpSpec, expert: &[Vec<ObservedTransition>], cfg: &TrainConfig) -> Result<TrainOutput> {
    train_with(spec, expert, cfg, &EvalSettings::default())
}

pub fn train_with(
    spec: &MdpSpec,
    expert: &[Vec<ObservedTransition>],
    cfg: &TrainConfig,
    eval: &EvalSettings,
) -> Result<TrainOutput> {
    let out = run_loop(spec, expert, cfg, eval, Objective::OptimalityMatching)?;
    Ok(TrainOutput {
        reward_head: out.reward_head.expect("optimality matching trains a reward head"),
        learner: out.learner,
        classifier: out.classifier,
        report: out.report,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub(crate) enum Objective {
    /// Reward head fitted by reverse KL; learner trained on its mean.
    OptimalityMatching,
    /// No reward head; learner trained on `-ln(1 - D)`.
    Discriminator,
}

pub(crate) struct LoopOutput {
    pub reward_head: Option<RewardHead>,
    pub learner: ActorCritic,
    pub classifier: Classifier,
    pub report: TrainReport,
}

fn check_expert(spec: &MdpSpec, expert: &[Vec<ObservedTransition>]) -> Result<Vec<ObservedTransition>> {
    let flat: Vec<ObservedTransition> = expert.iter().flatten().copied().collect();
    if flat.is_empty() {
        return Err(Error::Empty("expert trajectories"));
    }
    for t in &flat {
        spec.check_state(&t.state)?;
        spec.check_state(&t.next_state)?;
        spec.check_action(&t.action)?;
    }
    Ok(flat)
}

struct Evaluator<'a> {
    spec: &'a MdpSpec,
    settings: &'a EvalSettings,
    episodes: usize,
    reference: Option<ValueTable>,
}

impl<'a> Evaluator<'a> {
    fn new(spec: &'a MdpSpec, settings: &'a EvalSettings, episodes: usize) -> Result<Self> {
        let reference = match (&settings.expert_values, spec.is_tabular()) {
            (Some(v), _) => Some(v.clone()),
            (None, true) => Some(value_iteration(spec, 1e-10)?.0),
            (None, false) => None,
        };
        Ok(Evaluator { spec, settings, episodes, reference })
    }

    fn learner_values(&self, policy: &PolicyModel) -> Result<ValueTable> {
        if self.spec.is_tabular() {
            policy_evaluation(self.spec, policy, 1e-10)
        } else {
            continuous_value_grid(
                self.spec,
                policy,
                self.settings.grid_resolution,
                self.settings.grid_episodes,
                self.settings.seed,
            )
        }
    }

    fn score(&self, policy: &PolicyModel) -> Result<(f64, f64, Option<f64>)> {
        let (mean, std) = mean_return_eval(self.spec, policy, self.episodes, self.settings.seed)?;
        let ile = match &self.reference {
            Some(v) => Some(ile(v, &self.learner_values(policy)?)?),
            None => None,
        };
        Ok((mean, std, ile))
    }
}

fn diverged(iteration: usize, detail: impl Into<String>) -> Error {
    Error::Diverged { iteration, detail: detail.into() }
}

fn guard(iteration: usize, what: &str, x: f64) -> Result<f64> {
    if x.is_finite() {
        Ok(x)
    } else {
        Err(diverged(iteration, format!("{what} is {x}")))
    }
}

fn write_checkpoint(
    dir: &std::path::Path,
    iteration: usize,
    head: Option<&RewardHead>,
    clf: &Classifier,
    learner: &ActorCritic,
) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    if let Some(h) = head {
        checkpoint::save_network(&h.net, &dir.join(format!("iter_{iteration:06}_reward.net")))?;
    }
    checkpoint::save_network(&clf.net, &dir.join(format!("iter_{iteration:06}_classifier.net")))?;
    std::fs::write(dir.join(format!("iter_{iteration:06}_learner.json")), serde_json::to_string(learner)?)?;
    Ok(())
}

/// Reward `-ln(1 - D(s, a))` from a frozen discriminator.
pub(crate) struct DiscriminatorReward<'a>(pub &'a Classifier);

impl RewardSource for DiscriminatorReward<'_> {
    fn reward(&self, spec: &MdpSpec, t: &ObservedTransition) -> f64 {
        let d = self.0.probability(&spec.features(&t.state, &t.action)).expect("classifier input dim");
        -(1.0 - d).max(PROB_CLAMP).ln()
    }
}

pub(crate) fn run_loop(
    spec: &MdpSpec,
    expert: &[Vec<ObservedTransition>],
    cfg: &TrainConfig,
    eval: &EvalSettings,
    objective: Objective,
) -> Result<LoopOutput> {
    cfg.validate()?;
    spec.validate()?;
    let expert_flat = check_expert(spec, expert)?;
    let start = Instant::now();
    let mut rng = SimRng::seed_from_u64(cfg.seed);

    let mut head = match objective {
        Objective::OptimalityMatching => Some(RewardHead::for_spec(spec, cfg.deterministic_reward, &mut rng)),
        Objective::Discriminator => None,
    };
    let mut clf = Classifier::for_spec(spec, &mut rng);
    let mut learner = ActorCritic::for_spec(spec, &mut rng);
    let mut clf_opt = AdamState::new(&clf.net, AdamConfig::with_lr(cfg.lr_classifier));
    let mut head_opt = head.as_ref().map(|h| AdamState::new(&h.net, AdamConfig::with_lr(cfg.lr_reward)));
    let mut buffer = RolloutBuffer::new(cfg.buffer_capacity)?;

    let tabular = spec.is_tabular();
    let ac_cfg = ActorCriticConfig {
        gamma: cfg.gamma,
        lr_actor: if tabular { cfg.lr_actor_tabular } else { cfg.lr_actor },
        lr_critic: if tabular { cfg.lr_critic_tabular } else { cfg.lr_critic },
        entropy_coef: cfg.entropy_coef,
        max_grad_norm: AdamConfig::default().max_grad_norm.unwrap_or(10.0),
    };
    let loss_params = RewardLossParams { gamma: cfg.gamma, lambda_var: cfg.lambda_var, mode: cfg.optimality() };

    let evaluator = Evaluator::new(spec, eval, cfg.eval_episodes)?;
    let mut report = TrainReport::default();
    let (mean, std, ile0) = evaluator.score(&learner.policy)?;
    report.records.push(TrainRecord {
        iteration: 0,
        classifier_loss: None,
        classifier_accuracy: None,
        reward_kl_loss: None,
        variance_term: None,
        learner_mean_return: mean,
        learner_std_return: std,
        ile: ile0,
    });
    report.wall_time_secs.push(start.elapsed().as_secs_f64());

    for iteration in 1..=cfg.n_iterations {
        let base_seed = rng.next_u64();
        let fresh = rollout(spec, &learner.policy, cfg.rollout_episodes_per_iter, base_seed)?;
        for t in &fresh {
            buffer.push(t);
        }
        let on_policy: Vec<ObservedTransition> = fresh.iter().flat_map(|t| t.observed()).collect();

        let expert_batch = sample_slice(&expert_flat, cfg.batch_size, &mut rng)?;
        let learner_batch = buffer.sample(cfg.batch_size, &mut rng)?;
        let clf_stats =
            classifier_update(&mut clf, &mut clf_opt, spec, &expert_batch, &learner_batch, cfg.classifier_steps_per_iter)
                .map_err(|e| diverged(iteration, format!("classifier update: {e}")))?;
        guard(iteration, "classifier loss", clf_stats.loss)?;

        let mut kl_stats = None;
        if let (Some(head), Some(opt)) = (head.as_mut(), head_opt.as_mut()) {
            let mut last = (f64::NAN, f64::NAN);
            for _ in 0..cfg.reward_steps_per_iter {
                let mut union = sample_slice(&expert_flat, cfg.batch_size, &mut rng)?;
                union.extend(buffer.sample(cfg.batch_size, &mut rng)?);
                let loss = reward_loss(head, &clf, &learner.critic, spec, &union, &loss_params, &mut rng)
                    .map_err(|e| diverged(iteration, format!("reward loss: {e}")))?;
                guard(iteration, "reward KL loss", loss.kl)?;
                guard(iteration, "variance term", loss.variance_term)?;
                adam_step(&mut head.net, &loss.grads, opt).map_err(|e| diverged(iteration, format!("reward step: {e}")))?;
                last = (loss.kl, loss.variance_term);
            }
            kl_stats = Some(last);
        }

        for _ in 0..cfg.policy_steps_per_iter {
            let stats = match &head {
                Some(h) => learner.update(spec, &on_policy, h, &ac_cfg),
                None => learner.update(spec, &on_policy, &DiscriminatorReward(&clf), &ac_cfg),
            }
            .map_err(|e| diverged(iteration, format!("policy update: {e}")))?;
            guard(iteration, "critic loss", stats.critic_loss)?;
        }

        let due = iteration == cfg.n_iterations || (cfg.eval_every > 0 && iteration % cfg.eval_every == 0);
        if due {
            let (mean, std, ile) = evaluator.score(&learner.policy)?;
            report.records.push(TrainRecord {
                iteration,
                classifier_loss: Some(clf_stats.loss),
                classifier_accuracy: Some(clf_stats.accuracy),
                reward_kl_loss: kl_stats.map(|s| s.0),
                variance_term: kl_stats.map(|s| s.1),
                learner_mean_return: mean,
                learner_std_return: std,
                ile,
            });
            report.wall_time_secs.push(start.elapsed().as_secs_f64());
            if let Some(dir) = &eval.checkpoint_dir {
                write_checkpoint(dir, iteration, head.as_ref(), &clf, &learner)?;
            }
        }
    }
    Ok(LoopOutput { reward_head: head, learner, classifier: clf, report })
}
