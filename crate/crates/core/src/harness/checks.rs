use rand::Rng;
use serde::{Deserialize, Serialize};

use super::config::{ExperimentConfig, OracleConfig};
use crate::env::{ContextSampler, EnvStreams};
use crate::error::Result;
use crate::igw::{igw, lemma1_slack};
use crate::oracle::{AnyOracle, ErrorLedger, FiniteClassOracle, RegressionOracle};
use crate::policy::{exploration_scale, surrogate_round, surrogate_slack, RoundDecision, SurrogateTruth};
use crate::rng::{stream, Stream, StreamRng};
use crate::types::{sample_action, validate_simplex, ContextId, Seed, SimplexDistribution};

/// If `x² ≤ a·x + b` with `a, b ≥ 0`, then `x ≤ a + √b`. Returns whether the
/// conclusion holds (up to rounding).
pub fn check_quadratic_lemma(a: f64, b: f64, x: f64) -> bool {
    x <= a + b.sqrt() + 1e-12 * (1.0 + a.abs() + x.abs())
}

fn uniform_vec(rng: &mut StreamRng, k: usize, lo: f64, hi: f64) -> Vec<f64> {
    (0..k).map(|_| rng.random_range(lo..=hi)).collect()
}

fn random_simplex(rng: &mut StreamRng, k: usize) -> SimplexDistribution {
    // Exponential spacings give a uniform point; sparsify now and then.
    let mut raw: Vec<f64> = (0..k).map(|_| -(1.0 - rng.random::<f64>()).ln()).collect();
    if rng.random_bool(0.3) {
        let keep = rng.random_range(0..k);
        for (a, r) in raw.iter_mut().enumerate() {
            if a != keep && rng.random_bool(0.5) {
                *r = 0.0;
            }
        }
    }
    let total: f64 = raw.iter().sum();
    validate_simplex(raw.iter().map(|r| r / total).collect()).expect("normalized weights")
}

/// Smallest IGW-inequality slack over `trials` random instances with `K ∈ 1..=8`.
pub fn fuzz_lemma1(trials: u64, seed: u64) -> Result<f64> {
    let mut rng = stream(Seed(seed), Stream::Fuzz);
    let mut worst = f64::INFINITY;
    for _ in 0..trials {
        let k = rng.random_range(1..=8);
        let mut vhat = uniform_vec(&mut rng, k, -1.0, 1.0);
        if k > 1 && rng.random_bool(0.2) {
            vhat[1] = vhat[0];
        }
        let v = uniform_vec(&mut rng, k, -1.0, 1.0);
        let gamma = 10f64.powf(rng.random_range(-3.0..4.0));
        let mu = random_simplex(&mut rng, k);
        worst = worst.min(lemma1_slack(&vhat, &v, &mu, gamma)?);
    }
    Ok(worst)
}

/// Smallest slack of the one-round surrogate bound over `trials` random
/// rounds with one or two resources.
pub fn fuzz_surrogate(trials: u64, seed: u64) -> Result<f64> {
    let mut rng = stream(Seed(seed), Stream::Fuzz);
    let mut worst = f64::INFINITY;
    for _ in 0..trials {
        let k = rng.random_range(1..=8);
        let m = rng.random_range(1..=2);
        let reward_pred = uniform_vec(&mut rng, k, -1.0, 1.0);
        let f = uniform_vec(&mut rng, k, -1.0, 1.0);
        let cost_preds: Vec<Vec<f64>> = (0..m).map(|_| uniform_vec(&mut rng, k, -1.0, 1.0)).collect();
        let g: Vec<Vec<f64>> = (0..m).map(|_| uniform_vec(&mut rng, k, -1.0, 1.0)).collect();
        let multipliers = uniform_vec(&mut rng, m, -10.0, 10.0);
        let z = multipliers.iter().map(|v| v * v).sum::<f64>().max(1.0);
        let z_sum = z * rng.random_range(1.0..1e4);
        let u_t = rng.random_range(0.1..50.0);
        let gamma = exploration_scale(k, u_t, z, z_sum);
        let (surrogate_hat, igw) = surrogate_round(&reward_pred, &cost_preds, &multipliers, gamma)?;
        let decision = RoundDecision {
            context: ContextId(0),
            reward_pred,
            cost_preds,
            multipliers,
            surrogate_hat,
            z,
            z_sum,
            gamma,
            action: igw.greedy,
            igw,
        };
        let pi_star = random_simplex(&mut rng, k);
        let costs: Vec<&[f64]> = g.iter().map(Vec::as_slice).collect();
        worst = worst.min(surrogate_slack(
            &decision,
            &pi_star,
            SurrogateTruth {
                reward: &f,
                costs: &costs,
            },
        ));
    }
    Ok(worst)
}

/// Standalone run of the reward oracle under a uniform logging policy.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleCheck {
    pub horizon: u64,
    pub seed: u64,
    /// Default (or overridden) error budget `U_T`.
    pub u_t: f64,
    /// `Σ_t (ŷ_t − f⋆(x_t, a_t))²`.
    pub error_vs_truth: f64,
    /// Cumulative loss against the observations minus that of the best
    /// candidate; finite classes only.
    pub aggregation_excess: Option<f64>,
    /// `ln|F| / η`; finite classes only.
    pub aggregation_bound: Option<f64>,
}

/// Feeds the reward oracle `horizon` observations drawn from the spec with
/// uniformly random actions.
pub fn verify_oracle(config: &ExperimentConfig, horizon: u64, seed: u64) -> Result<OracleCheck> {
    config.spec.validate()?;
    let spec = &config.spec;
    let run_seed = Seed(seed);
    let mut oracle = config.oracle.build(&spec.f_star, 0, run_seed)?;
    let mut contexts = ContextSampler::new(spec, run_seed)?;
    let mut env = EnvStreams::new(run_seed, spec.m());
    let mut logging = stream(run_seed, Stream::Policy);
    let uniform = SimplexDistribution::uniform(spec.k());
    let u_t = config.u_t(horizon);
    let mut ledger = ErrorLedger::new(u_t);

    let candidates = match (&oracle, &config.oracle) {
        (AnyOracle::Finite(o), OracleConfig::FiniteClass { .. }) => Some(o.clone()),
        _ => None,
    };
    let mut candidate_loss = vec![0.0; candidates.as_ref().map_or(0, FiniteClassOracle::class_size)];
    let mut aggregate_loss = 0.0;

    for _ in 0..horizon {
        let x = contexts.next_context();
        let a = sample_action(&uniform, &mut logging);
        contexts.observe(x, a);
        let y = spec.sample_outcome(x, a, &mut env).reward;
        let pred = oracle.predict(x)[a.0];
        ledger.record(pred, spec.f_star.get(x, a));
        aggregate_loss += (pred - y).powi(2);
        if let Some(class) = &candidates {
            for (loss, table) in candidate_loss.iter_mut().zip(class.candidates()) {
                *loss += (table.get(x, a) - y).powi(2);
            }
        }
        oracle.update(x, a, y)?;
    }

    let (excess, bound) = match (&candidates, &config.oracle) {
        (Some(class), OracleConfig::FiniteClass { eta, .. }) => {
            let best = candidate_loss.iter().copied().fold(f64::INFINITY, f64::min);
            (
                Some(aggregate_loss - best),
                Some((class.class_size() as f64).ln() / eta),
            )
        }
        _ => (None, None),
    };
    Ok(OracleCheck {
        horizon,
        seed,
        u_t,
        error_vs_truth: ledger.cumulative_sq_error,
        aggregation_excess: excess,
        aggregation_bound: bound,
    })
}

/// IGW contract on one input: normalization, `λ ∈ [1, K]`, greedy
/// dominance and invariance under a constant shift.
pub fn igw_contract_holds(losses: &[f64], gamma: f64, shift: f64) -> Result<bool> {
    let r = igw(losses, gamma)?;
    let k = losses.len() as f64;
    let p = r.dist.probs();
    let sum: f64 = p.iter().sum();
    let shifted: Vec<f64> = losses.iter().map(|v| v + shift).collect();
    let s = igw(&shifted, gamma)?;
    let top = p[r.greedy.0];
    Ok((sum - 1.0).abs() <= 1e-10
        && r.lambda >= 1.0 - 1e-12
        && r.lambda <= k + 1e-12
        && p.iter().all(|&q| q <= top)
        && p.iter().zip(s.dist.probs()).all(|(a, b)| (a - b).abs() <= 1e-9))
}
