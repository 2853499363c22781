use std::path::PathBuf;

use clap::Args;
use serde::Serialize;
use vlbirl_core::evaluation::EvalReport;

use super::{eval_settings, fit, score, Method};
use crate::failure::CliResult;
use crate::options::{generate_expert, load_expert, reference_values, spec_for, write_file, ConfigArgs};
use crate::rundir;

#[derive(Args, Debug)]
pub struct TrainArgs {
    #[command(flatten)]
    pub cfg: ConfigArgs,
    #[arg(long, value_enum, default_value = "vlbirl")]
    pub method: Method,
    /// Expert trajectory file. Generated from the config when omitted.
    #[arg(long)]
    pub expert: Option<PathBuf>,
    /// Parent directory for run directories.
    #[arg(long, default_value = "runs")]
    pub out: PathBuf,
}

#[derive(Serialize)]
struct RunInfo<'a> {
    method: &'a str,
    env: &'a str,
    seed: u64,
    config_hash: &'a str,
    expert: Option<String>,
    n_expert_trajectories: usize,
    final_mean_return: f64,
    final_std_return: f64,
    final_ile: Option<f64>,
}

pub fn run(args: TrainArgs) -> CliResult<()> {
    let cfg = args.cfg.load("train.seed")?;
    let spec = spec_for(&cfg)?;
    let (data, expert_bytes) = match &args.expert {
        Some(path) => {
            let data = load_expert(path, &spec)?;
            let bytes = std::fs::read(path).map_err(anyhow::Error::from)?;
            (data, bytes)
        }
        None => {
            let trajs = generate_expert(&spec, &cfg, cfg.env.n_expert_trajectories)?;
            (trajs.iter().map(|t| t.observed()).collect::<Vec<_>>(), b"generated".to_vec())
        }
    };
    let method = args.method.name();
    let config_toml = cfg.to_toml();
    let hash = rundir::digest(&[method.as_bytes(), config_toml.as_bytes(), &expert_bytes]);
    let dir = rundir::create(&args.out, &format!("{method}-{}-{}-seed{}", spec.name, &hash[..12], cfg.train.seed))?;
    write_file(&dir.join("config.toml"), &config_toml)?;

    let reference = reference_values(&spec, &cfg)?;
    let mut settings = eval_settings(&spec, &cfg, &reference);
    if args.method != Method::Bc {
        let ckpt = dir.join("checkpoints");
        std::fs::create_dir(&ckpt).map_err(anyhow::Error::from)?;
        settings.checkpoint_dir = Some(ckpt);
    }
    let fitted = fit(args.method, &spec, &data, &cfg, &settings)?;
    fitted.save(&dir)?;

    let result = score(&spec, &cfg, fitted.policy(), &reference)?;
    let mut report = EvalReport::new(method, spec.name.clone(), cfg.eval.episodes);
    report.seeds.push(result.clone());
    report.save(&dir.join("eval.csv"))?;
    let info = RunInfo {
        method,
        env: &spec.name,
        seed: cfg.train.seed,
        config_hash: &hash,
        expert: args.expert.as_ref().map(|p| p.display().to_string()),
        n_expert_trajectories: data.len(),
        final_mean_return: result.mean_return,
        final_std_return: result.std_return,
        final_ile: result.ile,
    };
    write_file(&dir.join("run.json"), serde_json::to_string_pretty(&info).map_err(anyhow::Error::from)? + "\n")?;

    println!("run: {}", dir.display());
    println!(
        "{method} on {}: return {:.4} ± {:.4}, ILE {}",
        spec.name,
        result.mean_return,
        result.std_return,
        result.ile.map(|v| format!("{v:.4}")).unwrap_or_else(|| "-".into())
    );
    Ok(())
}
