use std::path::{Path, PathBuf};

use anyhow::Context;
use clap::Args;
use vlbirl_core::env::Trajectory;
use vlbirl_core::evaluation::{continuous_value_grid, mean_return_eval};
use vlbirl_core::io::{read_trajectories, write_trajectories, TrajectoryMeta};
use vlbirl_core::policy::Expert;
use vlbirl_core::{corrupt_policy, rollout, ExperimentConfig, MdpSpec, ObservedTransition, Policy, ValueTable};

use crate::failure::{usage, CliResult};

/// Flags shared by every command that reads an experiment config. Flags win
/// over `--set`, which wins over the file.
#[derive(Args, Debug, Clone, Default)]
pub struct ConfigArgs {
    /// TOML experiment config.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub env: Option<String>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Probability that an expert action is replaced by a random one.
    #[arg(long = "noise-eps")]
    pub noise_eps: Option<f64>,
    #[arg(long = "lambda-var")]
    pub lambda_var: Option<f64>,
    #[arg(long)]
    pub iterations: Option<usize>,
    #[arg(long = "eval-episodes")]
    pub eval_episodes: Option<usize>,
    /// Any config key, e.g. `--set train.lr_reward=0.01`. Repeatable.
    #[arg(long = "set", value_name = "SECTION.KEY=VALUE")]
    pub set: Vec<String>,
}

impl ConfigArgs {
    /// Resolved config. `seed_key` is the config key that `--seed` sets.
    pub fn load(&self, seed_key: &str) -> CliResult<ExperimentConfig> {
        let text = match &self.config {
            Some(p) => std::fs::read_to_string(p).map_err(|e| usage(format!("cannot read config {}: {e}", p.display())))?,
            None => String::new(),
        };
        let mut overrides = Vec::new();
        for s in &self.set {
            let (k, v) = s.split_once('=').ok_or_else(|| usage(format!("--set expects SECTION.KEY=VALUE, got `{s}`")))?;
            overrides.push((k.trim().to_string(), v.trim().to_string()));
        }
        let mut flag = |key: &str, value: Option<String>| {
            if let Some(v) = value {
                overrides.push((key.to_string(), v));
            }
        };
        flag("env.name", self.env.as_ref().map(|e| format!("\"{e}\"")));
        flag(seed_key, self.seed.map(|s| s.to_string()));
        flag("env.noise_epsilon", self.noise_eps.map(|x| format!("{x:?}")));
        flag("train.lambda_var", self.lambda_var.map(|x| format!("{x:?}")));
        flag("train.n_iterations", self.iterations.map(|x| x.to_string()));
        flag("train.eval_episodes", self.eval_episodes.map(|x| x.to_string()));
        flag("eval.episodes", self.eval_episodes.map(|x| x.to_string()));
        Ok(ExperimentConfig::load(&text, &overrides)?)
    }
}

pub fn spec_for(cfg: &ExperimentConfig) -> CliResult<MdpSpec> {
    Ok(MdpSpec::by_name(&cfg.env.name)?)
}

/// Expert rollouts as configured: `env.n_expert_trajectories` episodes from
/// `env.expert_seed`, with `env.noise_epsilon` random actions mixed in.
pub fn generate_expert(spec: &MdpSpec, cfg: &ExperimentConfig, n: usize) -> CliResult<Vec<Trajectory>> {
    let expert = Expert::for_spec(spec, cfg.env.expert_beta)?;
    let noisy = corrupt_policy(expert, cfg.env.noise_epsilon)?;
    Ok(rollout(spec, &noisy, n, cfg.env.expert_seed)?)
}

/// Mean true return of the (possibly noisy) data-generating expert.
pub fn expert_return(spec: &MdpSpec, cfg: &ExperimentConfig) -> CliResult<f64> {
    let expert = Expert::for_spec(spec, cfg.env.expert_beta)?;
    let noisy = corrupt_policy(expert, cfg.env.noise_epsilon)?;
    Ok(mean_return_eval(spec, &noisy, cfg.eval.episodes, cfg.eval.seed)?.0)
}

/// ILE reference values: optimal values on tabular specs, the controller's
/// Monte Carlo grid otherwise.
pub fn reference_values(spec: &MdpSpec, cfg: &ExperimentConfig) -> CliResult<ValueTable> {
    match Expert::for_spec(spec, None)? {
        Expert::Planner { values, .. } => Ok(values),
        Expert::Controller(c) => {
            Ok(continuous_value_grid(spec, &c, cfg.eval.grid_resolution, cfg.eval.grid_episodes, cfg.eval.seed)?)
        }
    }
}

/// Reads an expert file, checking that it was recorded on `spec`.
pub fn load_expert(path: &Path, spec: &MdpSpec) -> CliResult<Vec<Vec<ObservedTransition>>> {
    if !path.exists() {
        return Err(usage(format!("expert file not found: {}", path.display())));
    }
    let (episodes, meta) = read_trajectories(path)?;
    if meta.env != spec.name {
        return Err(usage(format!(
            "expert file {} was recorded on `{}`, but the config selects `{}`",
            path.display(),
            meta.env,
            spec.name
        )));
    }
    Ok(episodes)
}

pub fn write_expert(path: &Path, trajs: &[Trajectory], meta: &TrajectoryMeta) -> CliResult<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    }
    write_trajectories(path, trajs, meta).with_context(|| format!("writing {}", path.display()))?;
    Ok(())
}

pub fn write_file(path: &Path, contents: impl AsRef<[u8]>) -> CliResult<()> {
    std::fs::write(path, contents).with_context(|| format!("writing {}", path.display()))?;
    Ok(())
}

/// Refuses to replace an existing output file.
pub fn fresh_output(path: &Path) -> CliResult<()> {
    if path.exists() {
        return Err(usage(format!("{} already exists; choose another --out", path.display())));
    }
    Ok(())
}

pub fn policy_returns<P: Policy + ?Sized>(spec: &MdpSpec, policy: &P, cfg: &ExperimentConfig) -> CliResult<(f64, f64)> {
    Ok(mean_return_eval(spec, policy, cfg.eval.episodes, cfg.eval.seed)?)
}
