//! Acceptance run: one line per criterion, non-zero exit if any fails.

mod common;

use std::time::Instant;

use rand::SeedableRng;
use vlbirl_core::evaluation::theory::{jensen_settings, jensen_sweep, kl_property_suite, JensenFunction};
use vlbirl_core::evaluation::argmax_consistency;
use vlbirl_core::*;

const SEEDS: [u64; 5] = [0, 1, 2, 3, 4];

struct Outcome {
    passed: bool,
    detail: String,
}

fn outcome(passed: bool, detail: String) -> Outcome {
    Outcome { passed, detail }
}

fn fmt(xs: &[f64]) -> String {
    xs.iter().map(|x| format!("{x:.4}")).collect::<Vec<_>>().join(" ")
}

fn gradients() -> Outcome {
    let t = Instant::now();
    let g = common::gradient_sweep(100, 0);
    let secs = t.elapsed().as_secs_f64();
    outcome(
        g.worst() < 1e-4 && secs < 60.0,
        format!(
            "100 configurations, worst relative error reward {:.1e} classifier {:.1e} actor {:.1e} critic {:.1e}, {secs:.1}s",
            g.reward, g.classifier, g.actor, g.critic
        ),
    )
}

fn kl_properties() -> Outcome {
    let r = kl_property_suite(10_000, 0).unwrap();
    outcome(
        r.passed(),
        format!(
            "{} pairs, {} negative, {} zero-iff-equal mismatches, KL(0.8,0.5) = {:.6}",
            r.n_pairs, r.negative, r.zero_mismatch, r.spot_value
        ),
    )
}

fn jensen() -> Outcome {
    let t = Instant::now();
    let settings = jensen_settings(100, &mut SimRng::seed_from_u64(0));
    let results = jensen_sweep(JensenFunction::Sigmoid, &settings, 1_000_000, 1).unwrap();
    let violations = results.iter().filter(|r| !r.holds).count();
    let worst = results.iter().map(|r| r.empirical_gap / r.bound.max(f64::MIN_POSITIVE)).fold(0.0, f64::max);
    let secs = t.elapsed().as_secs_f64();
    outcome(
        violations == 0 && secs < 300.0,
        format!("sigmoid, M = 0.1, 100 settings x 1e6 samples, {violations} violations, max gap/bound {worst:.3}, {secs:.1}s"),
    )
}

fn welch() -> Outcome {
    let t = welch_t_test(&[1.0, 2.0, 3.0], &[2.0, 3.0, 4.0], 0.01).unwrap();
    let sep = welch_t_test(&[0.0, 0.1, -0.1, 0.05, -0.05], &[10.0, 10.1, 9.9, 10.05, 9.95], 0.01).unwrap();
    outcome(
        (t.t_statistic + 1.2247).abs() < 1e-4 && !t.significant && sep.significant,
        format!("t = {:.4}, separated samples p = {:.2e} significant = {}", t.t_statistic, sep.p_value, sep.significant),
    )
}

fn main() {
    let mut lines: Vec<(usize, &str, Outcome)> = vec![
        (1, "gradient correctness", gradients()),
        (2, "KL properties", kl_properties()),
        (3, "Jensen gap bound", jensen()),
    ];

    let (spec, expert, clean) = common::gridworld_expert(0.0);
    let expert_return = common::noisy_expert_return(&spec, &expert, 0.0);
    let mut secs = Vec::new();
    let clean_runs: Vec<common::GridRun> = SEEDS
        .iter()
        .map(|&s| {
            let t = Instant::now();
            let run = common::vlbirl_run(&spec, &expert, &clean, s);
            secs.push(t.elapsed().as_secs_f64());
            run
        })
        .collect();
    let returns: Vec<f64> = clean_runs.iter().map(|r| r.final_return).collect();
    let slowest = secs.iter().copied().fold(0.0, f64::max);
    lines.push((
        4,
        "expert recovery",
        outcome(
            returns.iter().all(|&r| r >= 0.9 * expert_return) && slowest < 600.0,
            format!("expert {expert_return:.4}, threshold {:.4}, learner {}, slowest seed {slowest:.1}s", 0.9 * expert_return, fmt(&returns)),
        ),
    ));

    let (_, _, noisy) = common::gridworld_expert(0.2);
    let noisy_return = common::noisy_expert_return(&spec, &expert, 0.2);
    let noisy_runs: Vec<common::GridRun> = SEEDS.iter().map(|&s| common::vlbirl_run(&spec, &expert, &noisy, s)).collect();
    let noisy_returns: Vec<f64> = noisy_runs.iter().map(|r| r.final_return).collect();
    let beats = noisy_returns.iter().filter(|&&r| r >= noisy_return).count();
    lines.push((
        5,
        "noisy expert",
        outcome(beats >= 4, format!("noisy expert {noisy_return:.4}, learner {}, {beats}/5 seeds at or above", fmt(&noisy_returns))),
    ));

    let ratios: Vec<f64> = clean_runs.iter().map(|r| r.final_ile / r.initial_ile).collect();
    lines.push((
        6,
        "ILE trend",
        outcome(
            ratios.iter().all(|&q| q <= 0.5),
            format!(
                "final/initial ILE {} (initial {:.3})",
                fmt(&ratios),
                clean_runs[0].initial_ile
            ),
        ),
    ));

    let argmax: Vec<f64> = clean_runs.iter().map(|r| r.argmax).collect();
    let random: f64 = (0..20)
        .map(|s| {
            let head = RewardHead::for_spec(&spec, false, &mut SimRng::seed_from_u64(s));
            argmax_consistency(&head, &Critic::Tabular(ValueTable::zeros(25)), &spec, &expert).unwrap()
        })
        .sum::<f64>()
        / 20.0;
    lines.push((
        7,
        "argmax consistency",
        outcome(
            argmax.iter().all(|&a| a >= 0.8) && (random - 0.25).abs() <= 0.15,
            format!("learned {}, random heads {random:.3}", fmt(&argmax)),
        ),
    ));

    let js: Vec<f64> = SEEDS.iter().map(|&s| common::js_return(&spec, &noisy, s)).collect();
    let w = welch_t_test(&noisy_returns, &js, 0.01).unwrap();
    let (vm, jm) = (noisy_returns.iter().sum::<f64>() / 5.0, js.iter().sum::<f64>() / 5.0);
    lines.push((
        8,
        "baseline ordering under noise",
        outcome(
            vm >= jm,
            format!("vlbirl {vm:.4} vs gail_js {jm:.4}, Welch t = {:.2}, p = {:.2e}, significant = {}", w.t_statistic, w.p_value, w.significant),
        ),
    ));

    let cfg = TrainConfig { seed: SEEDS[0], ..TrainConfig::gridworld() };
    let a = train(&spec, &noisy, &cfg).unwrap().report.to_csv().unwrap();
    let b = train(&spec, &noisy, &cfg).unwrap().report.to_csv().unwrap();
    let rerun_return = TrainReport::from_csv(&a).unwrap().last().unwrap().learner_mean_return;
    lines.push((
        9,
        "determinism",
        outcome(
            a == b && rerun_return == noisy_returns[0],
            format!("two reruns of seed {} give {} identical report bytes", SEEDS[0], a.len()),
        ),
    ));

    lines.push((10, "Welch harness", welch()));

    let mut failed = 0;
    for (n, name, o) in &lines {
        println!("criterion {n:>2} {}: {name}: {}", if o.passed { "PASS" } else { "FAIL" }, o.detail);
        failed += usize::from(!o.passed);
    }
    println!("acceptance: {}/{} criteria passed", lines.len() - failed, lines.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
