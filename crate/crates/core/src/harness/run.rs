use std::io::Write;

use serde::{Deserialize, Serialize};

use super::config::{ExperimentConfig, SCHEMA_VERSION};
use crate::env::{opt_value, BenchmarkPolicy, ContextSampler, EnvStreams, FeasibilityCertificate};
use crate::error::{CcbError, Result};
use crate::lyapunov::{build_lyapunov, Regime};
use crate::oracle::{AnyOracle, ErrorLedger};
use crate::policy::{surrogate_slack, CcbState, SurrogateTruth};
use crate::rng::{stream, Stream};
use crate::types::{ContextId, Seed};

/// One round of a run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RoundLog {
    pub t: u64,
    pub context: usize,
    pub action: usize,
    pub reward: f64,
    pub costs: Vec<f64>,
    /// Queues after this round's update.
    pub queues: Vec<f64>,
    pub z: f64,
    pub gamma: f64,
    pub sqerr_f: f64,
    pub sqerr_g: Vec<f64>,
    pub surrogate_slack: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub schema_version: u32,
    pub regime: Regime,
    pub horizon: u64,
    pub seed: u64,
    pub u_t: f64,
    pub budget: Option<f64>,
    pub opt: f64,
    pub reward: f64,
    pub regret: f64,
    /// `Σ_t g_i,t` per resource, as realized (before any positive-part transform).
    pub ccv_per_resource: Vec<f64>,
    /// Largest entry of `ccv_per_resource`.
    pub ccv: f64,
    pub ccv_positive: f64,
    pub final_queues: Vec<f64>,
    /// `(1/T) Σ_τ Q_i(τ)`.
    pub avg_queue: Vec<f64>,
    pub queue_p50: Vec<f64>,
    pub queue_p90: Vec<f64>,
    pub queue_p99: Vec<f64>,
    /// `√(Σ_τ Q_i(τ)²)`.
    pub r_empirical: Vec<f64>,
    /// Cumulative squared error of the played predictions against the truth.
    pub realized_u_f: f64,
    pub realized_u_g: Vec<f64>,
    pub min_surrogate_slack: Option<f64>,
    /// Realized left side of the drift-plus-regret inequality:
    /// `Σ_i (Φ(Q_i(T)) − Φ(0)) + Regret_T`.
    pub decomposition_lhs: f64,
    /// Its right side evaluated on the realized queues.
    pub decomposition_rhs: f64,
    pub certificate: Option<FeasibilityCertificate>,
}

impl RunSummary {
    fn empty(config: &ExperimentConfig, seed: u64) -> Self {
        let m = config.spec.m();
        Self {
            schema_version: SCHEMA_VERSION,
            regime: config.regime(),
            horizon: 0,
            seed,
            u_t: config.u_t(0),
            budget: config.budget(0),
            opt: 0.0,
            reward: 0.0,
            regret: 0.0,
            ccv_per_resource: vec![0.0; m],
            ccv: 0.0,
            ccv_positive: 0.0,
            final_queues: vec![0.0; m],
            avg_queue: vec![0.0; m],
            queue_p50: vec![0.0; m],
            queue_p90: vec![0.0; m],
            queue_p99: vec![0.0; m],
            r_empirical: vec![0.0; m],
            realized_u_f: 0.0,
            realized_u_g: vec![0.0; m],
            min_surrogate_slack: None,
            decomposition_lhs: 0.0,
            decomposition_rhs: 0.0,
            certificate: None,
        }
    }
}

/// Logs and summary of one run.
#[derive(Debug, Clone)]
pub struct RunOutput {
    pub logs: Vec<RoundLog>,
    pub summary: RunSummary,
}

/// Runs one `(T, seed)` pair and keeps the full round log.
pub fn run_single(config: &ExperimentConfig, horizon: u64, seed: u64) -> Result<RunOutput> {
    let mut logs = Vec::with_capacity(horizon as usize);
    let summary = run_streaming(config, horizon, seed, |log| logs.push(log.clone()))?;
    Ok(RunOutput { logs, summary })
}

/// Runs one `(T, seed)` pair, handing each round to `sink` as it completes.
pub fn run_streaming(
    config: &ExperimentConfig,
    horizon: u64,
    seed: u64,
    mut sink: impl FnMut(&RoundLog),
) -> Result<RunSummary> {
    config.validate()?;
    if horizon == 0 {
        return Ok(RunSummary::empty(config, seed));
    }
    let spec = &config.spec;
    let params = config.params(horizon);
    let phi = build_lyapunov(&params)?;
    let run_seed = Seed(seed);

    let costs = config.effective_costs();
    let reward_oracle = config.oracle.build(&spec.f_star, 0, run_seed)?;
    let cost_oracles = costs
        .iter()
        .enumerate()
        .map(|(i, g)| config.oracle.build(g, i + 1, run_seed))
        .collect::<Result<Vec<AnyOracle>>>()?;
    let mut state = CcbState::new(reward_oracle, cost_oracles, phi, params)?;

    let check_benchmark = if config.record_per_round_checks {
        Some(config.nominal_benchmark(horizon)?)
    } else {
        None
    };
    let mut contexts = ContextSampler::new(spec, run_seed)?;
    let mut env_streams = EnvStreams::new(run_seed, spec.m());
    let mut policy_rng = stream(run_seed, Stream::Policy);

    let m = spec.m();
    let mut realized: Vec<ContextId> = Vec::with_capacity(horizon as usize);
    let mut ledger_f = ErrorLedger::new(params.u_t);
    let mut ledger_g: Vec<ErrorLedger> = (0..m).map(|_| ErrorLedger::new(params.u_t)).collect();
    let mut reward_sum = 0.0;
    let mut ccv = vec![0.0; m];
    let mut queue_trace: Vec<Vec<f64>> = vec![Vec::with_capacity(horizon as usize); m];
    let mut min_slack: Option<f64> = None;
    let mut phi2_sum = 0.0;
    let mut phi1_sq_before_last = 0.0;
    // Σ_i Φ′(Q_i(t−1)) of the latest round
    let mut last_multiplier_sum = 0.0;

    for t in 1..=horizon {
        let x = contexts.next_context();
        let decision = state.select(x, &mut policy_rng)?;
        let a = decision.action;
        last_multiplier_sum = decision.multipliers.iter().sum();
        let outcome = spec.sample_outcome(x, a, &mut env_streams);
        contexts.observe(x, a);

        let f_row = spec.f_star.row(x);
        let g_rows: Vec<&[f64]> = costs.iter().map(|g| g.row(x)).collect();
        let sqerr_f = ledger_f.record(decision.reward_pred[a.0], f_row[a.0]);
        let sqerr_g: Vec<f64> = ledger_g
            .iter_mut()
            .zip(&decision.cost_preds)
            .zip(&g_rows)
            .map(|((ledger, pred), row)| ledger.record(pred[a.0], row[a.0]))
            .collect();
        let slack = check_benchmark.as_ref().map(|b| {
            surrogate_slack(
                &decision,
                b.at(x),
                SurrogateTruth {
                    reward: f_row,
                    costs: &g_rows,
                },
            )
        });
        if let Some(s) = slack {
            min_slack = Some(min_slack.map_or(s, |m: f64| m.min(s)));
        }

        state.update(x, &decision, &outcome)?;
        realized.push(x);
        reward_sum += outcome.reward;
        for (c, o) in ccv.iter_mut().zip(&outcome.costs) {
            *c += o;
        }
        let queues = state.queues().to_vec();
        for (trace, &q) in queue_trace.iter_mut().zip(&queues) {
            trace.push(q);
        }
        let phi = state.phi();
        phi2_sum += queues.iter().map(|&q| phi.second_derivative(q)).sum::<f64>();
        if t < horizon {
            phi1_sq_before_last += queues.iter().map(|&q| phi.derivative(q).powi(2)).sum::<f64>();
        }
        sink(&RoundLog {
            t,
            context: x.0,
            action: a.0,
            reward: outcome.reward,
            costs: outcome.costs,
            queues,
            z: decision.z,
            gamma: decision.gamma,
            sqerr_f,
            sqerr_g,
            surrogate_slack: slack,
        });
    }

    let counts = context_counts(&realized, spec.n_contexts());
    let benchmark = run_benchmark(config, horizon, &counts)?;
    let certificate = config.certify(&benchmark, horizon, &certificate_counts(config, horizon, &counts));
    if !certificate.verified {
        return Err(CcbError::Invariant(format!(
            "benchmark failed its feasibility certificate: {certificate:?}"
        )));
    }
    let opt = opt_value(&benchmark, &realized);
    let regret = opt - reward_sum;
    let ccv_max = ccv.iter().copied().fold(f64::NEG_INFINITY, f64::max);

    let phi = *state.phi();
    let final_queues = state.queues().to_vec();
    let k = spec.k() as f64;
    let sqrt_ku = (k * params.u_t).sqrt();
    let lhs = final_queues.iter().map(|&q| phi.value(q) - phi.value(0.0)).sum::<f64>() + regret;
    let mut rhs =
        4.0 * (k * params.u_t * horizon as f64).sqrt() + phi2_sum + 4.0 * sqrt_ku * phi1_sq_before_last.sqrt();
    if params.regime.is_budgeted() {
        rhs += last_multiplier_sum * params.budget.unwrap_or(0.0);
    }

    let t = horizon as f64;
    Ok(RunSummary {
        schema_version: SCHEMA_VERSION,
        regime: config.regime(),
        horizon,
        seed,
        u_t: params.u_t,
        budget: params.budget,
        opt,
        reward: reward_sum,
        regret,
        ccv_per_resource: ccv.clone(),
        ccv: ccv_max,
        ccv_positive: ccv_max.max(0.0),
        final_queues,
        avg_queue: queue_trace.iter().map(|q| q.iter().sum::<f64>() / t).collect(),
        queue_p50: queue_trace.iter().map(|q| quantile(q, 0.50)).collect(),
        queue_p90: queue_trace.iter().map(|q| quantile(q, 0.90)).collect(),
        queue_p99: queue_trace.iter().map(|q| quantile(q, 0.99)).collect(),
        r_empirical: queue_trace
            .iter()
            .map(|q| q.iter().map(|v| v * v).sum::<f64>().sqrt())
            .collect(),
        realized_u_f: ledger_f.cumulative_sq_error,
        realized_u_g: ledger_g.iter().map(|l| l.cumulative_sq_error).collect(),
        min_surrogate_slack: min_slack,
        decomposition_lhs: lhs,
        decomposition_rhs: rhs,
        certificate: Some(certificate),
    })
}

fn context_counts(realized: &[ContextId], n: usize) -> Vec<f64> {
    let mut counts = vec![0.0; n];
    for x in realized {
        counts[x.0] += 1.0;
    }
    counts
}

/// The knapsack benchmark is measured against the realized context
/// frequencies; every other regime has a run-independent benchmark.
fn run_benchmark(config: &ExperimentConfig, horizon: u64, counts: &[f64]) -> Result<BenchmarkPolicy> {
    match config.regime() {
        Regime::Cbwk => config.benchmark(horizon, counts),
        _ => config.nominal_benchmark(horizon),
    }
}

fn certificate_counts(config: &ExperimentConfig, horizon: u64, counts: &[f64]) -> Vec<f64> {
    match config.regime() {
        Regime::Cbwlc => config
            .spec
            .context_process
            .nominal_weights(config.spec.n_contexts())
            .iter()
            .map(|w| w * horizon as f64)
            .collect(),
        _ => counts.to_vec(),
    }
}

/// Nearest-rank quantile: the smallest value with at least `p·n` values at
/// or below it.
pub fn quantile(values: &[f64], p: f64) -> f64 {
    if values.is_empty() {
        return 0.0;
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let rank = (p * sorted.len() as f64).ceil() as usize;
    sorted[rank.clamp(1, sorted.len()) - 1]
}

/// Writes the round log as CSV, one header row and one row per round.
pub fn write_round_csv<W: Write>(out: &mut W, m: usize, logs: &[RoundLog]) -> std::io::Result<()> {
    write_round_header(out, m)?;
    for log in logs {
        write_round_row(out, log)?;
    }
    Ok(())
}

pub fn write_round_header<W: Write>(out: &mut W, m: usize) -> std::io::Result<()> {
    let mut cols: Vec<String> = vec!["t".into(), "context".into(), "action".into(), "reward".into()];
    cols.extend((1..=m).map(|i| format!("cost_{i}")));
    cols.extend((1..=m).map(|i| format!("Q_{i}")));
    cols.extend(["z_t", "gamma_t", "sqerr_f"].map(String::from));
    cols.extend((1..=m).map(|i| format!("sqerr_g_{i}")));
    cols.push("surrogate_slack".into());
    writeln!(out, "{}", cols.join(","))
}

pub fn write_round_row<W: Write>(out: &mut W, log: &RoundLog) -> std::io::Result<()> {
    let mut fields = vec![
        log.t.to_string(),
        log.context.to_string(),
        log.action.to_string(),
        log.reward.to_string(),
    ];
    fields.extend(log.costs.iter().map(f64::to_string));
    fields.extend(log.queues.iter().map(f64::to_string));
    fields.extend([log.z, log.gamma, log.sqerr_f].map(|v| v.to_string()));
    fields.extend(log.sqerr_g.iter().map(f64::to_string));
    fields.push(log.surrogate_slack.map(|s| s.to_string()).unwrap_or_default());
    writeln!(out, "{}", fields.join(","))
}
