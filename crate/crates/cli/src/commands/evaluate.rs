use std::path::{Path, PathBuf};

use clap::Args;
use serde::Deserialize;
use vlbirl_core::evaluation::EvalReport;
use vlbirl_core::{ExperimentConfig, PolicyModel};

use super::score;
use crate::failure::{usage, CliResult};
use crate::options::{fresh_output, reference_values, spec_for};

#[derive(Args, Debug)]
pub struct EvaluateArgs {
    /// Run directories written by `train`, one per seed.
    #[arg(long, num_args = 1.., required = true)]
    pub runs: Vec<PathBuf>,
    #[arg(long = "eval-episodes")]
    pub eval_episodes: Option<usize>,
    /// Evaluation seed; defaults to the one in each run's config.
    #[arg(long = "eval-seed")]
    pub eval_seed: Option<u64>,
    /// Report CSV. Printed to stdout when omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Deserialize)]
struct RunInfo {
    method: String,
}

fn read(dir: &Path, name: &str) -> CliResult<String> {
    let path = dir.join(name);
    std::fs::read_to_string(&path).map_err(|e| usage(format!("{}: {e}", path.display())))
}

pub fn run(args: EvaluateArgs) -> CliResult<()> {
    if let Some(out) = &args.out {
        fresh_output(out)?;
    }
    let mut report: Option<EvalReport> = None;
    for dir in &args.runs {
        let mut cfg = ExperimentConfig::load(&read(dir, "config.toml")?, &[])?;
        if let Some(n) = args.eval_episodes {
            cfg.eval.episodes = n;
        }
        if let Some(s) = args.eval_seed {
            cfg.eval.seed = s;
        }
        let info: RunInfo = serde_json::from_str(&read(dir, "run.json")?)
            .map_err(|e| usage(format!("{}: {e}", dir.join("run.json").display())))?;
        let policy: PolicyModel = serde_json::from_str(&read(dir, "policy.json")?)
            .map_err(|e| usage(format!("{}: {e}", dir.join("policy.json").display())))?;
        let spec = spec_for(&cfg)?;
        let report = report.get_or_insert_with(|| EvalReport::new(info.method.clone(), spec.name.clone(), cfg.eval.episodes));
        if report.method != info.method || report.env != spec.name {
            return Err(usage(format!(
                "{} holds {} on {}, but earlier runs hold {} on {}",
                dir.display(),
                info.method,
                spec.name,
                report.method,
                report.env
            )));
        }
        let reference = reference_values(&spec, &cfg)?;
        report.seeds.push(score(&spec, &cfg, &policy, &reference)?);
    }
    let report = report.expect("clap requires at least one run");
    match &args.out {
        Some(out) => {
            report.save(out)?;
            let (mean, sd) = report.pooled();
            println!("{} on {}: {} seeds, return {mean:.4} ± {sd:.4}", report.method, report.env, report.seeds.len());
            println!("wrote {}", out.display());
        }
        None => print!("{}", report.to_csv()?),
    }
    Ok(())
}
