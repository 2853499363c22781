//! Numerical checks of the approximation bound and the consistency probe.
//!
//! The bound says that for `f` with `|f''| <= M`,
//! `|E[f(X)] - f(E[X])| <= M Var(X)`. [`verify_jensen_gap`] measures both
//! sides by Monte Carlo; [`argmax_consistency`] checks that a learned
//! advantage ranks the expert's action first.

use rand::{Rng, SeedableRng};
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::env::{MdpSpec, ObservedTransition, Policy, SimRng, State, Action};
use crate::error::{Error, Result};
use crate::optimality::{bernoulli_reverse_kl, sigmoid};
use crate::policy::{argmax, Critic, RewardSource};

pub const MIN_JENSEN_SAMPLES: usize = 10_000;
/// Slack, in standard errors, allowed on top of the bound.
pub const JENSEN_SLACK_SE: f64 = 5.0;

/// `max |σ''(x)| = 1 / (6 √3)`, attained where `σ(x) = (3 ± √3) / 6`.
pub fn sigmoid_max_second_derivative() -> f64 {
    1.0 / (6.0 * 3f64.sqrt())
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum JensenFunction {
    Sigmoid,
    Linear { slope: f64, intercept: f64 },
    /// `x² / 2`, whose curvature is exactly 1.
    SquareBounded,
}

impl JensenFunction {
    pub fn eval(&self, x: f64) -> f64 {
        match self {
            JensenFunction::Sigmoid => sigmoid(x),
            JensenFunction::Linear { slope, intercept } => slope * x + intercept,
            JensenFunction::SquareBounded => 0.5 * x * x,
        }
    }

    /// A curvature bound `M` valid for this function.
    pub fn certified_bound(&self) -> f64 {
        match self {
            JensenFunction::Sigmoid => 0.1,
            JensenFunction::Linear { .. } => 0.0,
            JensenFunction::SquareBounded => 1.0,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            JensenFunction::Sigmoid => "sigmoid",
            JensenFunction::Linear { .. } => "linear",
            JensenFunction::SquareBounded => "square_bounded",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct JensenGapResult {
    pub function: String,
    pub mu: f64,
    pub sigma: f64,
    pub n_samples: usize,
    /// `|mean f(x_i) - f(mean x_i)|`
    pub empirical_gap: f64,
    /// `M` times the empirical variance.
    pub bound: f64,
    /// Standard error of `mean f(x_i)`.
    pub standard_error: f64,
    pub holds: bool,
}

/// Monte Carlo comparison of the Jensen gap with `M Var(X)` for
/// `X ~ N(mu, sigma²)`.
pub fn verify_jensen_gap(
    function: JensenFunction,
    mu: f64,
    sigma: f64,
    second_derivative_bound: f64,
    n_samples: usize,
    rng: &mut SimRng,
) -> Result<JensenGapResult> {
    if n_samples < MIN_JENSEN_SAMPLES {
        return Err(Error::InvalidArgument(format!(
            "need at least {MIN_JENSEN_SAMPLES} samples, got {n_samples}"
        )));
    }
    if !(sigma >= 0.0) || !mu.is_finite() {
        return Err(Error::InvalidArgument(format!("bad distribution N({mu}, {sigma}²)")));
    }
    // running means stay exact when every draw is identical
    let (mut mean_x, mut m2_x, mut mean_f, mut m2_f) = (0.0, 0.0, 0.0, 0.0);
    for k in 1..=n_samples {
        let z: f64 = rng.sample(StandardNormal);
        let x = mu + sigma * z;
        let fx = function.eval(x);
        let dx = x - mean_x;
        mean_x += dx / k as f64;
        m2_x += dx * (x - mean_x);
        let df = fx - mean_f;
        mean_f += df / k as f64;
        m2_f += df * (fx - mean_f);
    }
    let n = n_samples as f64;
    let var_x = m2_x / n;
    let var_f = m2_f / n;
    let empirical_gap = (mean_f - function.eval(mean_x)).abs();
    let bound = second_derivative_bound * var_x;
    let standard_error = (var_f / n).sqrt();
    Ok(JensenGapResult {
        function: function.name().into(),
        mu,
        sigma,
        n_samples,
        empirical_gap,
        bound,
        standard_error,
        holds: empirical_gap <= bound + JENSEN_SLACK_SE * standard_error,
    })
}

/// `count` Gaussian settings with `mu ∈ [-4, 4]` and `sigma ∈ [0, 3]`.
pub fn jensen_settings(count: usize, rng: &mut SimRng) -> Vec<(f64, f64)> {
    (0..count).map(|_| (rng.random_range(-4.0..=4.0), rng.random_range(0.0..=3.0))).collect()
}

/// Runs [`verify_jensen_gap`] over many settings, each with its own stream.
pub fn jensen_sweep(
    function: JensenFunction,
    settings: &[(f64, f64)],
    n_samples: usize,
    seed: u64,
) -> Result<Vec<JensenGapResult>> {
    settings
        .iter()
        .enumerate()
        .map(|(i, &(mu, sigma))| {
            let mut rng = SimRng::seed_from_u64(seed.wrapping_add(i as u64));
            verify_jensen_gap(function, mu, sigma, function.certified_bound(), n_samples, &mut rng)
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct KlSuiteResult {
    pub n_pairs: usize,
    pub negative: usize,
    /// Pairs where "KL < 1e-12" and "|q - p| < 1e-9" disagree.
    pub zero_mismatch: usize,
    pub spot_value: f64,
}

impl KlSuiteResult {
    pub fn passed(&self) -> bool {
        self.negative == 0 && self.zero_mismatch == 0 && (self.spot_value - 0.192_745).abs() < 1e-5
    }
}

/// Non-negativity and zero-iff-equal over random pairs, half of which are
/// drawn independently and half with `q = p`.
pub fn kl_property_suite(n_pairs: usize, seed: u64) -> Result<KlSuiteResult> {
    let mut rng = SimRng::seed_from_u64(seed);
    let mut negative = 0;
    let mut zero_mismatch = 0;
    for i in 0..n_pairs {
        let q: f64 = rng.random();
        let p: f64 = if i % 2 == 0 { rng.random() } else { q };
        let (qc, pc) = (crate::optimality::clamp_prob(q), crate::optimality::clamp_prob(p));
        let kl = bernoulli_reverse_kl(q, p)?;
        if kl < 0.0 {
            negative += 1;
        }
        if (kl < 1e-12) != ((qc - pc).abs() < 1e-9) {
            zero_mismatch += 1;
        }
    }
    Ok(KlSuiteResult { n_pairs, negative, zero_mismatch, spot_value: bernoulli_reverse_kl(0.8, 0.5)? })
}

/// Fraction of non-terminal states where the expert's most likely action
/// also maximizes `reward(s, a) + γ v(s') - v(s)`.
pub fn argmax_consistency<R, P>(reward: &R, critic: &Critic, spec: &MdpSpec, expert: &P) -> Result<f64>
where
    R: RewardSource + ?Sized,
    P: Policy + ?Sized,
{
    let g = spec.gridworld_ref().ok_or(Error::NotTabular)?;
    let mut considered = 0usize;
    let mut agree = 0usize;
    for s in (0..g.n_states()).filter(|&s| !g.is_terminal(s)) {
        let state = State::Cell(s);
        let probs = expert
            .probabilities(spec, &state)
            .ok_or_else(|| Error::InvalidArgument("expert exposes no action probabilities".into()))?;
        let expert_action = argmax(&probs);
        let v_s = critic.value(spec, &state);
        let advantages: Vec<f64> = (0..crate::env::GRID_ACTIONS)
            .map(|a| {
                let next = g.move_cell(s, a);
                let t = ObservedTransition {
                    state,
                    action: Action::Discrete(a),
                    next_state: State::Cell(next),
                    done: g.is_terminal(next),
                };
                reward.reward(spec, &t) + spec.discount * critic.bootstrap(spec, &t) - v_s
            })
            .collect();
        let best = advantages.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        considered += 1;
        if advantages[expert_action] >= best - 1e-12 * best.abs().max(1.0) {
            agree += 1;
        }
    }
    Ok(agree as f64 / considered as f64)
}
