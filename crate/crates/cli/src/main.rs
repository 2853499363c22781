//! `vlbirl`: expert generation, training, evaluation, comparison, theory
//! checks and trajectory-count sweeps.
//!
//! Exit codes: 0 success, 1 usage or configuration error, 2 runtime or
//! numerical failure.

mod commands;
mod failure;
mod options;
mod rundir;

use std::process::ExitCode;

use clap::{Parser, Subcommand};

#[derive(Parser)]
#[command(name = "vlbirl", version, about = "Inverse RL by optimality matching on small MDPs")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Roll out the expert and write reward-free trajectories.
    GenExpert(commands::expert::GenExpertArgs),
    /// Train one method on expert trajectories.
    Train(commands::train::TrainArgs),
    /// Score finished runs and write a per-seed report.
    Evaluate(commands::evaluate::EvaluateArgs),
    /// Pairwise Welch tests between reports.
    Compare(commands::compare::CompareArgs),
    /// Numerical checks of the Jensen-gap bound and the KL properties.
    VerifyTheory(commands::theory::TheoryArgs),
    /// Train on growing numbers of expert trajectories.
    Sweep(commands::sweep::SweepArgs),
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    let result = match cli.command {
        Command::GenExpert(a) => commands::expert::run(a),
        Command::Train(a) => commands::train::run(a),
        Command::Evaluate(a) => commands::evaluate::run(a),
        Command::Compare(a) => commands::compare::run(a),
        Command::VerifyTheory(a) => commands::theory::run(a),
        Command::Sweep(a) => commands::sweep::run(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {f}");
            ExitCode::from(f.code())
        }
    }
}
