//! Metrics, significance tests, report tables and theory checks.

pub mod report;
pub mod stats;
pub mod theory;

use rand::SeedableRng;

pub use report::{compare_reports, EvalReport, PairwiseComparison, SeedResult};
pub use stats::{student_t_cdf, welch_t_test, WelchResult};
pub use theory::{
    argmax_consistency, jensen_settings, jensen_sweep, kl_property_suite, sigmoid_max_second_derivative,
    verify_jensen_gap, JensenFunction, JensenGapResult, KlSuiteResult,
};

use crate::env::{rollout, rollout_from, EnvKind, MdpSpec, Policy, SimRng, State};
use crate::error::{Error, Result};
use crate::policy::ValueTable;

/// Sample mean and sample standard deviation (`n - 1` denominator; 0 for a
/// single value).
pub fn mean_std(xs: &[f64]) -> (f64, f64) {
    if xs.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() == 1 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

/// Inverse learning error: Euclidean distance between two value tables.
pub fn ile(v_expert: &ValueTable, v_learner: &ValueTable) -> Result<f64> {
    if v_expert.len() != v_learner.len() {
        return Err(Error::DimensionMismatch { expected: v_expert.len(), got: v_learner.len() });
    }
    Ok(v_expert.0.iter().zip(&v_learner.0).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt())
}

/// Mean and standard deviation of undiscounted true returns over
/// `n_episodes` episodes seeded `seed, seed + 1, ...`.
pub fn mean_return_eval<P: Policy + ?Sized>(spec: &MdpSpec, policy: &P, n_episodes: usize, seed: u64) -> Result<(f64, f64)> {
    if n_episodes < 2 {
        return Err(Error::InvalidArgument(format!("need at least two evaluation episodes, got {n_episodes}")));
    }
    let returns = episode_returns(spec, policy, n_episodes, seed)?;
    Ok(mean_std(&returns))
}

pub fn episode_returns<P: Policy + ?Sized>(spec: &MdpSpec, policy: &P, n_episodes: usize, seed: u64) -> Result<Vec<f64>> {
    Ok(rollout(spec, policy, n_episodes, seed)?.iter().map(|t| t.undiscounted_return()).collect())
}

/// Fixed grid of start states for a continuous spec: `resolution²` positions
/// at rest, row-major over the arena.
pub fn evaluation_grid(spec: &MdpSpec, resolution: usize) -> Result<Vec<State>> {
    let EnvKind::PointMass(pm) = &spec.kind else {
        return Err(Error::InvalidArgument("evaluation grids are for continuous specs".into()));
    };
    if resolution < 2 {
        return Err(Error::InvalidArgument("grid resolution must be >= 2".into()));
    }
    let w = pm.arena_half_width;
    // cell centres, so no point sits on a wall
    let coord = |i: usize| -w + (2.0 * w) * (i as f64 + 0.5) / resolution as f64;
    Ok((0..resolution)
        .flat_map(|iy| (0..resolution).map(move |ix| State::Point([coord(ix), coord(iy), 0.0, 0.0])))
        .collect())
}

/// Monte Carlo discounted true-reward value at each grid start state.
/// Point `k`, episode `e` is seeded with `seed + k * episodes + e`.
pub fn continuous_value_grid<P: Policy + ?Sized>(
    spec: &MdpSpec,
    policy: &P,
    resolution: usize,
    episodes: usize,
    seed: u64,
) -> Result<ValueTable> {
    if episodes == 0 {
        return Err(Error::InvalidArgument("grid_episodes must be >= 1".into()));
    }
    let grid = evaluation_grid(spec, resolution)?;
    let mut values = Vec::with_capacity(grid.len());
    for (k, start) in grid.iter().enumerate() {
        let mut total = 0.0;
        for e in 0..episodes {
            let s = seed.wrapping_add((k * episodes + e) as u64);
            let mut rng = SimRng::seed_from_u64(s);
            let ts = rollout_from(spec, policy, *start, &mut rng)?;
            let mut discount = 1.0;
            for t in &ts {
                total += discount * t.true_reward;
                discount *= spec.discount;
            }
        }
        values.push(total / episodes as f64);
    }
    Ok(ValueTable(values))
}
