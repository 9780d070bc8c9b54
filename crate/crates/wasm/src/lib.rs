//! Browser entry points. Every function returns a JSON string so the page
//! can stay plain JavaScript.

use ccb_core::env::benchmark_budget;
use ccb_core::harness::{presets, run_streaming, ExperimentConfig};
use ccb_core::igw::igw;
use ccb_core::lyapunov::Regime;
use ccb_core::types::ContextId;
use serde_json::json;
use wasm_bindgen::prelude::*;

fn preset(name: &str) -> Result<ExperimentConfig, String> {
    presets::by_name(name).ok_or_else(|| format!("unknown preset `{name}`"))
}

/// Names of the built-in experiments.
#[wasm_bindgen]
pub fn preset_names() -> String {
    json!(Regime::ALL.iter().map(|r| r.name()).collect::<Vec<_>>()).to_string()
}

/// Exploration distribution for predicted losses at scale `gamma`.
pub fn explore(losses: &[f64], gamma: f64) -> Result<String, String> {
    let r = igw(losses, gamma).map_err(|e| e.to_string())?;
    Ok(json!({
        "probs": r.dist.probs(),
        "lambda": r.lambda,
        "greedy": r.greedy.0,
    })
    .to_string())
}

/// One run of a preset, sampled every `stride` rounds: cumulative regret
/// against the nominal benchmark, cumulative cost and the first queue.
pub fn simulate(name: &str, horizon: u32, seed: u32, stride: u32) -> Result<String, String> {
    let config = preset(name)?;
    let horizon = u64::from(horizon);
    let stride = u64::from(stride.max(1));
    let benchmark = config.nominal_benchmark(horizon).map_err(|e| e.to_string())?;
    let (mut t_axis, mut regret, mut ccv, mut queue) = (Vec::new(), Vec::new(), Vec::new(), Vec::new());
    let (mut opt, mut reward, mut cost) = (0.0, 0.0, 0.0);
    let summary = run_streaming(&config, horizon, u64::from(seed), |log| {
        opt += benchmark.value_per_context[log.context];
        reward += log.reward;
        cost += log.costs[0];
        if log.t % stride == 0 || log.t == horizon {
            t_axis.push(log.t);
            regret.push(opt - reward);
            ccv.push(cost);
            queue.push(log.queues[0]);
        }
    })
    .map_err(|e| e.to_string())?;
    Ok(json!({
        "t": t_axis,
        "regret": regret,
        "ccv": ccv,
        "queue": queue,
        "summary": summary,
    })
    .to_string())
}

/// Value of the budget program for a preset's first resource as the
/// per-round budget moves from the least to the greatest useful level.
pub fn frontier(name: &str, points: u32) -> Result<String, String> {
    let mut config = preset(name)?;
    config.spec.g_star.truncate(1);
    config.spec.cost_noise.truncate(1);
    let spec = &config.spec;
    let weights = spec.context_process.nominal_weights(spec.n_contexts());
    let g = &spec.g_star[0];
    let weighted = |pick: fn(&[f64]) -> f64| -> f64 {
        (0..spec.n_contexts())
            .map(|x| weights[x] * pick(g.row(ContextId(x))))
            .sum()
    };
    let lo = weighted(|r| r.iter().copied().fold(f64::INFINITY, f64::min));
    let hi = weighted(|r| r.iter().copied().fold(f64::NEG_INFINITY, f64::max));
    let n = points.max(2);
    let mut budgets = Vec::new();
    let mut values = Vec::new();
    let mut randomized = Vec::new();
    for i in 0..n {
        let b = lo + (hi - lo) * f64::from(i) / f64::from(n - 1);
        let policy = benchmark_budget(spec, &weights, b).map_err(|e| e.to_string())?;
        budgets.push(b);
        values.push(
            (0..spec.n_contexts())
                .map(|x| weights[x] * policy.value_per_context[x])
                .sum::<f64>(),
        );
        randomized.push(policy.randomized_contexts());
    }
    Ok(json!({ "budget": budgets, "value": values, "randomized_contexts": randomized }).to_string())
}

#[wasm_bindgen(js_name = igwExplore)]
pub fn igw_explore(losses: Vec<f64>, gamma: f64) -> Result<String, JsError> {
    explore(&losses, gamma).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen(js_name = simulatePreset)]
pub fn simulate_preset(name: &str, horizon: u32, seed: u32, stride: u32) -> Result<String, JsError> {
    simulate(name, horizon, seed, stride).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen(js_name = budgetFrontier)]
pub fn budget_frontier(name: &str, points: u32) -> Result<String, JsError> {
    frontier(name, points).map_err(|e| JsError::new(&e))
}
