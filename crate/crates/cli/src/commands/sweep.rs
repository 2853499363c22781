use std::path::PathBuf;

use anyhow::anyhow;
use clap::Args;
use vlbirl_core::env::UniformPolicy;

use super::{eval_settings, fit, Method};
use crate::failure::{usage, CliResult};
use crate::options::{expert_return, generate_expert, policy_returns, reference_values, spec_for, write_file, ConfigArgs};
use crate::rundir;

#[derive(Args, Debug)]
pub struct SweepArgs {
    #[command(flatten)]
    pub cfg: ConfigArgs,
    /// Ascending trajectory counts. Each run uses the first k episodes of
    /// one expert dataset.
    #[arg(long, value_delimiter = ',', default_value = "1,5,25,50")]
    pub counts: Vec<usize>,
    #[arg(long, value_enum, default_value = "vlbirl")]
    pub method: Method,
    #[arg(long, default_value = "runs")]
    pub out: PathBuf,
}

struct Point {
    count: usize,
    learner_return: f64,
}

pub fn run(args: SweepArgs) -> CliResult<()> {
    if args.counts.is_empty() || args.counts[0] == 0 || args.counts.windows(2).any(|w| w[0] >= w[1]) {
        return Err(usage(format!("--counts must be strictly ascending and positive, got {:?}", args.counts)));
    }
    let max = *args.counts.last().expect("non-empty");
    let mut cfg_args = args.cfg.clone();
    cfg_args.set.push(format!("env.n_expert_trajectories={max}"));
    let cfg = cfg_args.load("train.seed")?;
    let spec = spec_for(&cfg)?;
    let data: Vec<_> = generate_expert(&spec, &cfg, max)?.iter().map(|t| t.observed()).collect();
    let reference = reference_values(&spec, &cfg)?;
    let settings = eval_settings(&spec, &cfg, &reference);

    let points: Vec<CliResult<Point>> = std::thread::scope(|scope| {
        let handles: Vec<_> = args
            .counts
            .iter()
            .map(|&count| {
                let (spec, cfg, settings, data) = (&spec, &cfg, &settings, &data);
                scope.spawn(move || -> CliResult<Point> {
                    let fitted = fit(args.method, spec, &data[..count], cfg, settings)?;
                    let (learner_return, _) = policy_returns(spec, fitted.policy(), cfg)?;
                    Ok(Point { count, learner_return })
                })
            })
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().unwrap_or_else(|_| Err(anyhow!("sweep worker panicked").into())))
            .collect()
    });
    let points = points.into_iter().collect::<CliResult<Vec<_>>>()?;

    let (random, _) = policy_returns(&spec, &UniformPolicy, &cfg)?;
    let expert = expert_return(&spec, &cfg)?;
    if (expert - random).abs() < 1e-12 {
        return Err(anyhow!("expert and random returns coincide ({expert}); normalization undefined").into());
    }
    let method = args.method.name();
    let config_toml = cfg.to_toml();
    let counts = format!("{:?}", args.counts);
    let hash = rundir::digest(&[method.as_bytes(), config_toml.as_bytes(), counts.as_bytes()]);
    let dir = rundir::create(&args.out, &format!("sweep-{method}-{}-{}-seed{}", spec.name, &hash[..12], cfg.train.seed))?;
    write_file(&dir.join("config.toml"), &config_toml)?;

    let mut csv = String::from("n_trajectories,learner_return,normalized_return,random_return,expert_return\n");
    println!("run: {}", dir.display());
    println!("{method} on {}: random {random:.4}, expert {expert:.4}", spec.name);
    for p in &points {
        let normalized = (p.learner_return - random) / (expert - random);
        csv.push_str(&format!("{},{},{},{},{}\n", p.count, p.learner_return, normalized, random, expert));
        println!("  n = {:>4}  return {:.4}  normalized {normalized:.4}", p.count, p.learner_return);
    }
    write_file(&dir.join("curve.csv"), csv)?;
    Ok(())
}
