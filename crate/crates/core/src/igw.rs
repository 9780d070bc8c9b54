//! Inverse gap weighting.
//!
//! Given predicted *losses* `v̂` and a scale `γ ≥ 0`, the distribution puts
//! `1 / (λ + 2γ (v̂(a) − min v̂))` on every action, with the normalizer
//! `λ ∈ [1, K]` chosen so the entries sum to one. Callers that maximize a
//! reward must convert it to a loss first.

use serde::Serialize;

use crate::error::{CcbError, Result};
use crate::types::{validate_simplex, ActionIndex, SimplexDistribution};

/// Absolute bisection tolerance on `λ`.
pub const LAMBDA_TOLERANCE: f64 = 1e-12;

const MAX_BISECTION_STEPS: usize = 200;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IgwResult {
    pub dist: SimplexDistribution,
    pub lambda: f64,
    pub gamma: f64,
    pub greedy: ActionIndex,
}

/// Index of the smallest entry, lowest index on ties.
pub fn argmin(values: &[f64]) -> usize {
    let mut best = 0;
    for (a, &v) in values.iter().enumerate().skip(1) {
        if v < values[best] {
            best = a;
        }
    }
    best
}

/// Index of the largest entry, lowest index on ties.
pub fn argmax(values: &[f64]) -> usize {
    let mut best = 0;
    for (a, &v) in values.iter().enumerate().skip(1) {
        if v > values[best] {
            best = a;
        }
    }
    best
}

pub fn igw(vhat_loss: &[f64], gamma: f64) -> Result<IgwResult> {
    let k = vhat_loss.len();
    if k == 0 {
        return Err(CcbError::Validation("IGW needs at least one action".into()));
    }
    if !gamma.is_finite() || gamma < 0.0 {
        return Err(CcbError::Validation(format!(
            "IGW scale must be finite and >= 0, got {gamma}"
        )));
    }
    if let Some(v) = vhat_loss.iter().find(|v| !v.is_finite()) {
        return Err(CcbError::Validation(format!("IGW input contains non-finite value {v}")));
    }

    let greedy = argmin(vhat_loss);
    let best = vhat_loss[greedy];
    let scaled_gaps: Vec<f64> = vhat_loss.iter().map(|v| 2.0 * gamma * (v - best)).collect();

    let lambda = if scaled_gaps.iter().all(|&g| g == 0.0) {
        k as f64
    } else {
        solve_lambda(&scaled_gaps)
    };

    let probs: Vec<f64> = scaled_gaps.iter().map(|g| 1.0 / (lambda + g)).collect();
    let dist = validate_simplex(probs)?;
    Ok(IgwResult {
        dist,
        lambda,
        gamma,
        greedy: ActionIndex(greedy),
    })
}

/// Root of `h(λ) = Σ 1/(λ + g_a) − 1` on `[1, K]`. `h` is strictly
/// decreasing there, `h(1) ≥ 0` (the greedy term alone is 1) and `h(K) ≤ 0`.
fn solve_lambda(scaled_gaps: &[f64]) -> f64 {
    let h = |lambda: f64| scaled_gaps.iter().map(|g| 1.0 / (lambda + g)).sum::<f64>() - 1.0;
    let (mut lo, mut hi) = (1.0, scaled_gaps.len() as f64);
    for _ in 0..MAX_BISECTION_STEPS {
        if hi - lo <= LAMBDA_TOLERANCE {
            break;
        }
        let mid = 0.5 * (lo + hi);
        if h(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Slack of the IGW exploration inequality for `p = igw(vhat, γ)`:
///
/// `[K/(2γ) + γ Σ_a p(a)(v̂(a) − v(a))²] − [<v, p> − <v, μ>]`,
///
/// which is non-negative for every loss vector `v` and comparator `μ`.
pub fn lemma1_slack(vhat: &[f64], v: &[f64], mu: &SimplexDistribution, gamma: f64) -> Result<f64> {
    if gamma.is_nan() || gamma <= 0.0 {
        return Err(CcbError::Validation(format!("slack check needs γ > 0, got {gamma}")));
    }
    if v.len() != vhat.len() || mu.len() != vhat.len() {
        return Err(CcbError::Validation("dimension mismatch in slack check".into()));
    }
    let p = igw(vhat, gamma)?;
    let k = vhat.len() as f64;
    let estimation: f64 = p
        .dist
        .probs()
        .iter()
        .zip(vhat.iter().zip(v))
        .map(|(pa, (vh, va))| pa * (vh - va).powi(2))
        .sum();
    let rhs = k / (2.0 * gamma) + gamma * estimation;
    let lhs = p.dist.expect(v) - mu.expect(v);
    Ok(rhs - lhs)
}
