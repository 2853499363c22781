use std::path::PathBuf;

use clap::Args;
use vlbirl_core::evaluation::{compare_reports, EvalReport};

use crate::failure::{usage, CliResult};
use crate::options::{fresh_output, write_file};

#[derive(Args, Debug)]
pub struct CompareArgs {
    /// Report CSVs written by `evaluate`.
    #[arg(required = true, num_args = 2..)]
    pub reports: Vec<PathBuf>,
    /// Significance level of the Welch tests.
    #[arg(long, default_value_t = 0.01)]
    pub alpha: f64,
    /// Write the pairwise tests as CSV.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

pub fn run(args: CompareArgs) -> CliResult<()> {
    if !(args.alpha > 0.0 && args.alpha < 1.0) {
        return Err(usage(format!("--alpha must lie in (0,1), got {}", args.alpha)));
    }
    if let Some(out) = &args.out {
        fresh_output(out)?;
    }
    let reports = args
        .reports
        .iter()
        .map(|p| EvalReport::load(p).map_err(|e| usage(format!("{}: {e}", p.display()))))
        .collect::<CliResult<Vec<_>>>()?;
    let table = compare_reports(&reports, args.alpha)?;
    print!("{}", table.render());
    if let Some(out) = &args.out {
        write_file(out, table.pairs_csv()?)?;
    }
    Ok(())
}
