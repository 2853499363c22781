//! Experiment configuration: flat `key = value` pairs grouped in sections.
//!
//! ```text
//! [env]
//! name = "gridworld"
//! noise_epsilon = 0.2
//!
//! [train]
//! n_iterations = 300
//! lambda_var = 0.1
//! ```
//!
//! Every field has a default, unknown keys are rejected by name, and
//! `section.key=value` overrides are applied on top of the file.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::optimality::OptimalityMode;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OptimalityKind {
    Advantage,
    ExpReward,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    pub n_iterations: usize,
    pub rollout_episodes_per_iter: usize,
    pub batch_size: usize,
    pub classifier_steps_per_iter: usize,
    pub reward_steps_per_iter: usize,
    pub policy_steps_per_iter: usize,
    pub gamma: f64,
    pub lambda_var: f64,
    pub lr_classifier: f64,
    pub lr_reward: f64,
    /// Applies to the network actor; the tabular actor uses `lr_actor_tabular`.
    pub lr_actor: f64,
    pub lr_critic: f64,
    pub lr_actor_tabular: f64,
    pub lr_critic_tabular: f64,
    pub entropy_coef: f64,
    pub buffer_capacity: usize,
    pub seed: u64,
    pub optimality_mode: OptimalityKind,
    pub exp_reward_scale: f64,
    pub deterministic_reward: bool,
    /// Evaluate every this many iterations; 0 records only the start and end.
    pub eval_every: usize,
    pub eval_episodes: usize,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            n_iterations: 300,
            rollout_episodes_per_iter: 4,
            batch_size: 64,
            classifier_steps_per_iter: 1,
            reward_steps_per_iter: 1,
            policy_steps_per_iter: 1,
            gamma: 0.99,
            lambda_var: 0.1,
            lr_classifier: 1e-3,
            lr_reward: 1e-3,
            lr_actor: 1e-3,
            lr_critic: 1e-3,
            lr_actor_tabular: 0.01,
            lr_critic_tabular: 0.1,
            entropy_coef: 0.01,
            buffer_capacity: crate::buffer::DEFAULT_CAPACITY,
            seed: 0,
            optimality_mode: OptimalityKind::Advantage,
            exp_reward_scale: 1.0,
            deterministic_reward: false,
            eval_every: 10,
            eval_episodes: 50,
        }
    }
}

impl TrainConfig {
    /// Settings used for the gridworld experiments: a faster classifier
    /// (lr 1e-2, 5 steps) and two policy steps per iteration. Same as
    /// `configs/gridworld.toml`.
    pub fn gridworld() -> Self {
        TrainConfig { lr_classifier: 1e-2, classifier_steps_per_iter: 5, policy_steps_per_iter: 2, ..TrainConfig::default() }
    }

    pub fn optimality(&self) -> OptimalityMode {
        match self.optimality_mode {
            OptimalityKind::Advantage => OptimalityMode::Advantage,
            OptimalityKind::ExpReward => OptimalityMode::ExpReward { scale: self.exp_reward_scale },
        }
    }

    pub fn validate(&self) -> Result<()> {
        let counts = [
            ("n_iterations", self.n_iterations),
            ("rollout_episodes_per_iter", self.rollout_episodes_per_iter),
            ("batch_size", self.batch_size),
            ("classifier_steps_per_iter", self.classifier_steps_per_iter),
            ("reward_steps_per_iter", self.reward_steps_per_iter),
            ("policy_steps_per_iter", self.policy_steps_per_iter),
            ("buffer_capacity", self.buffer_capacity),
        ];
        if let Some((key, _)) = counts.iter().find(|(_, v)| *v == 0) {
            return Err(Error::Config(format!("train.{key} must be >= 1")));
        }
        if self.eval_episodes < 2 {
            return Err(Error::Config("train.eval_episodes must be >= 2".into()));
        }
        if !(self.gamma > 0.0 && self.gamma < 1.0) {
            return Err(Error::Config(format!("train.gamma must lie in (0,1), got {}", self.gamma)));
        }
        if !(self.lambda_var >= 0.0) {
            return Err(Error::Config(format!("train.lambda_var must be >= 0, got {}", self.lambda_var)));
        }
        if !(self.exp_reward_scale > 0.0) {
            return Err(Error::Config("train.exp_reward_scale must be positive".into()));
        }
        let rates = [
            ("lr_classifier", self.lr_classifier),
            ("lr_reward", self.lr_reward),
            ("lr_actor", self.lr_actor),
            ("lr_critic", self.lr_critic),
            ("lr_actor_tabular", self.lr_actor_tabular),
            ("lr_critic_tabular", self.lr_critic_tabular),
        ];
        if let Some((key, v)) = rates.iter().find(|(_, v)| !(*v > 0.0 && v.is_finite())) {
            return Err(Error::Config(format!("train.{key} must be a positive number, got {v}")));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EnvConfig {
    pub name: String,
    /// Probability that the expert's action is replaced by a random one.
    pub noise_epsilon: f64,
    pub n_expert_trajectories: usize,
    /// Rollout seed for expert trajectories generated in-process.
    pub expert_seed: u64,
    /// Inverse temperature of a softmax expert; `None` means greedy.
    pub expert_beta: Option<f64>,
}

impl Default for EnvConfig {
    fn default() -> Self {
        EnvConfig {
            name: "gridworld".into(),
            noise_epsilon: 0.0,
            n_expert_trajectories: 50,
            expert_seed: 7,
            expert_beta: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvalConfig {
    pub episodes: usize,
    pub seed: u64,
    pub alpha: f64,
    /// Grid points per axis for continuous-spec value grids.
    pub grid_resolution: usize,
    pub grid_episodes: usize,
}

impl Default for EvalConfig {
    fn default() -> Self {
        EvalConfig { episodes: 50, seed: 1_000_003, alpha: 0.01, grid_resolution: 5, grid_episodes: 10 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BaselineConfig {
    pub bc_epochs: usize,
    pub bc_lr: f64,
    pub bc_patience: usize,
    pub bc_hidden: Vec<usize>,
}

impl Default for BaselineConfig {
    fn default() -> Self {
        BaselineConfig { bc_epochs: 500, bc_lr: 5e-2, bc_patience: 10, bc_hidden: vec![] }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub env: EnvConfig,
    pub train: TrainConfig,
    pub eval: EvalConfig,
    pub baselines: BaselineConfig,
}

fn parse_value(raw: &str) -> toml::Value {
    // accept bare TOML literals (numbers, booleans, arrays) and fall back to a string
    let doc = format!("v = {raw}");
    match doc.parse::<toml::Table>() {
        Ok(mut t) => t.remove("v").unwrap_or_else(|| toml::Value::String(raw.into())),
        Err(_) => toml::Value::String(raw.into()),
    }
}

impl ExperimentConfig {
    /// Parses `text` (may be empty) and applies `section.key=value` overrides.
    pub fn load(text: &str, overrides: &[(String, String)]) -> Result<Self> {
        let mut table: toml::Table = text.parse().map_err(|e: toml::de::Error| Error::Config(e.to_string()))?;
        for (key, raw) in overrides {
            let (section, field) = key
                .split_once('.')
                .ok_or_else(|| Error::Config(format!("override `{key}` must look like section.key")))?;
            let entry = table
                .entry(section.to_string())
                .or_insert_with(|| toml::Value::Table(toml::Table::new()));
            let toml::Value::Table(sec) = entry else {
                return Err(Error::Config(format!("`{section}` is not a section")));
            };
            sec.insert(field.to_string(), parse_value(raw));
        }
        let cfg: ExperimentConfig = toml::Value::Table(table)
            .try_into()
            .map_err(|e: toml::de::Error| Error::Config(e.to_string().trim().to_string()))?;
        cfg.train.validate()?;
        if !(0.0..=1.0).contains(&cfg.env.noise_epsilon) {
            return Err(Error::Config(format!("env.noise_epsilon must lie in [0,1], got {}", cfg.env.noise_epsilon)));
        }
        if cfg.env.n_expert_trajectories == 0 {
            return Err(Error::Config("env.n_expert_trajectories must be >= 1".into()));
        }
        if !(cfg.eval.alpha > 0.0 && cfg.eval.alpha < 1.0) {
            return Err(Error::Config("eval.alpha must lie in (0,1)".into()));
        }
        Ok(cfg)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_text_gives_defaults() {
        let cfg = ExperimentConfig::load("", &[]).unwrap();
        assert_eq!(cfg, ExperimentConfig::default());
        assert_eq!(cfg.train.batch_size, 64);
        assert_eq!(cfg.train.lambda_var, 0.1);
    }

    #[test]
    fn overrides_beat_file_values() {
        let text = "[train]\nseed = 4\nlambda_var = 0.5\n[env]\nname = \"pointmass\"\n";
        let cfg = ExperimentConfig::load(text, &[("train.seed".into(), "9".into())]).unwrap();
        assert_eq!(cfg.train.seed, 9);
        assert_eq!(cfg.train.lambda_var, 0.5);
        assert_eq!(cfg.env.name, "pointmass");
        let cfg = ExperimentConfig::load("", &[("env.name".into(), "gridworld".into())]).unwrap();
        assert_eq!(cfg.env.name, "gridworld");
    }

    #[test]
    fn unknown_key_is_named() {
        let err = ExperimentConfig::load("[train]\nlearning_rat = 3\n", &[]).unwrap_err();
        assert!(err.to_string().contains("learning_rat"), "{err}");
        let err = ExperimentConfig::load("[trian]\n", &[]).unwrap_err();
        assert!(err.to_string().contains("trian"), "{err}");
    }

    #[test]
    fn invalid_values_are_rejected() {
        assert!(ExperimentConfig::load("[train]\ngamma = 1.0\n", &[]).is_err());
        assert!(ExperimentConfig::load("[train]\nbatch_size = 0\n", &[]).is_err());
        assert!(ExperimentConfig::load("[train]\nlambda_var = -1.0\n", &[]).is_err());
        assert!(ExperimentConfig::load("[env]\nnoise_epsilon = 2.0\n", &[]).is_err());
        assert!(ExperimentConfig::load("[train]\nseed = \"x\"\n", &[]).is_err());
        assert!(ExperimentConfig::load("", &[("seed".into(), "1".into())]).is_err());
    }

    #[test]
    fn shipped_gridworld_config_matches_preset() {
        let text = include_str!("../../../configs/gridworld.toml");
        let cfg = ExperimentConfig::load(text, &[]).unwrap();
        assert_eq!(cfg.train, TrainConfig::gridworld());
        assert_eq!(cfg.env, EnvConfig::default());
    }

    #[test]
    fn round_trips_through_text() {
        let mut cfg = ExperimentConfig::default();
        cfg.train.optimality_mode = OptimalityKind::ExpReward;
        cfg.env.expert_beta = Some(10.0);
        let back = ExperimentConfig::load(&cfg.to_toml(), &[]).unwrap();
        assert_eq!(back, cfg);
    }
}
