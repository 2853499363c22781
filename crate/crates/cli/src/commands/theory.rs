use std::path::PathBuf;

use anyhow::anyhow;
use clap::{Args, ValueEnum};
use vlbirl_core::evaluation::theory::{jensen_settings, jensen_sweep, kl_property_suite, JensenFunction, JensenGapResult};
use vlbirl_core::SimRng;
use rand::SeedableRng;

use crate::failure::{usage, CliResult};
use crate::options::{fresh_output, write_file};

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Suite {
    All,
    Jensen,
    Kl,
}

#[derive(Args, Debug)]
pub struct TheoryArgs {
    #[arg(long, value_enum, default_value = "all")]
    pub suite: Suite,
    /// Monte Carlo samples per Gaussian setting.
    #[arg(long = "n-samples", default_value_t = 1_000_000)]
    pub n_samples: usize,
    /// Number of random (mu, sigma) settings.
    #[arg(long, default_value_t = 100)]
    pub settings: usize,
    /// Random (q, p) pairs for the KL checks.
    #[arg(long = "kl-pairs", default_value_t = 10_000)]
    pub kl_pairs: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Per-setting Jensen results as CSV.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

fn functions() -> [JensenFunction; 3] {
    [JensenFunction::Sigmoid, JensenFunction::Linear { slope: 2.5, intercept: -1.0 }, JensenFunction::SquareBounded]
}

fn to_csv(rows: &[JensenGapResult]) -> String {
    let mut out = String::from("function,mu,sigma,n_samples,empirical_gap,bound,standard_error,holds\n");
    for r in rows {
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{}\n",
            r.function, r.mu, r.sigma, r.n_samples, r.empirical_gap, r.bound, r.standard_error, r.holds
        ));
    }
    out
}

pub fn run(args: TheoryArgs) -> CliResult<()> {
    if let Some(out) = &args.out {
        fresh_output(out)?;
    }
    if args.kl_pairs == 0 || args.settings == 0 {
        return Err(usage("--kl-pairs and --settings must be >= 1"));
    }
    let mut failures = 0usize;
    if matches!(args.suite, Suite::All | Suite::Jensen) {
        let mut rng = SimRng::seed_from_u64(args.seed);
        let settings = jensen_settings(args.settings, &mut rng);
        let mut rows = Vec::new();
        for (k, f) in functions().into_iter().enumerate() {
            let seed = args.seed.wrapping_add(1 + (k as u64) * args.settings as u64);
            let results = jensen_sweep(f, &settings, args.n_samples, seed)?;
            let violations = results.iter().filter(|r| !r.holds).count();
            let worst = results
                .iter()
                .map(|r| r.empirical_gap - r.bound)
                .fold(f64::NEG_INFINITY, f64::max);
            println!(
                "jensen {:<14} M = {:<6} violations {violations}/{}  max(gap - bound) {worst:.3e}",
                f.name(),
                f.certified_bound(),
                results.len()
            );
            failures += violations;
            rows.extend(results);
        }
        if let Some(out) = &args.out {
            write_file(out, to_csv(&rows))?;
        }
    }
    if matches!(args.suite, Suite::All | Suite::Kl) {
        let kl = kl_property_suite(args.kl_pairs, args.seed)?;
        println!(
            "kl  pairs {}  negative {}  zero mismatches {}  KL(0.8 || 0.5) = {:.6}",
            kl.n_pairs, kl.negative, kl.zero_mismatch, kl.spot_value
        );
        if !kl.passed() {
            failures += 1;
        }
    }
    if failures > 0 {
        return Err(anyhow!("{failures} theory check(s) failed").into());
    }
    println!("all checks passed");
    Ok(())
}
