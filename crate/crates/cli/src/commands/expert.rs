use std::path::PathBuf;

use clap::Args;
use vlbirl_core::io::TrajectoryMeta;

use crate::failure::CliResult;
use crate::options::{fresh_output, generate_expert, spec_for, write_expert, ConfigArgs};

#[derive(Args, Debug)]
pub struct GenExpertArgs {
    #[command(flatten)]
    pub cfg: ConfigArgs,
    /// Number of episodes to record.
    #[arg(long = "n-trajectories")]
    pub n_trajectories: Option<usize>,
    /// Output JSONL file; a `.meta.json` sidecar is written next to it.
    #[arg(long)]
    pub out: PathBuf,
}

pub fn run(args: GenExpertArgs) -> CliResult<()> {
    let mut cfg_args = args.cfg.clone();
    if let Some(n) = args.n_trajectories {
        cfg_args.set.push(format!("env.n_expert_trajectories={n}"));
    }
    let cfg = cfg_args.load("env.expert_seed")?;
    let spec = spec_for(&cfg)?;
    fresh_output(&args.out)?;
    let n = cfg.env.n_expert_trajectories;
    let trajs = generate_expert(&spec, &cfg, n)?;
    let meta = TrajectoryMeta {
        env: spec.name.clone(),
        seed: cfg.env.expert_seed,
        n_trajectories: n,
        noise_epsilon: cfg.env.noise_epsilon,
        includes_true_reward: false,
    };
    write_expert(&args.out, &trajs, &meta)?;
    let reached = trajs.iter().filter(|t| t.reached_terminal()).count();
    let mean_len = trajs.iter().map(|t| t.transitions.len()).sum::<usize>() as f64 / n as f64;
    println!("wrote {n} trajectories to {}", args.out.display());
    println!("terminated: {reached}/{n}, mean length {mean_len:.2}");
    Ok(())
}
