use std::io::Write;

use serde::{Deserialize, Serialize};

use super::config::{ExperimentConfig, SCHEMA_VERSION};
use super::run::{run_streaming, RunSummary};
use crate::error::{CcbError, Result};
use crate::lyapunov::Regime;

/// Least-squares line through `(ln T, ln max(value, 1))`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SlopeFit {
    pub slope: f64,
    pub intercept: f64,
    pub r2: f64,
}

/// Fits `ln max(value, 1) = intercept + slope · ln T`.
///
/// When every floored value is equal the fit is exact and `r2` is 1.
pub fn fit_slope(points: &[(f64, f64)]) -> Result<SlopeFit> {
    let mut distinct: Vec<f64> = points.iter().map(|p| p.0).collect();
    distinct.sort_by(f64::total_cmp);
    distinct.dedup();
    if distinct.len() < 2 {
        return Err(CcbError::Validation(
            "slope fit needs at least two distinct horizons".into(),
        ));
    }
    if points.iter().any(|&(t, v)| !(t > 0.0 && t.is_finite()) || v.is_nan()) {
        return Err(CcbError::Validation(
            "slope fit needs positive horizons and numeric values".into(),
        ));
    }
    let xs: Vec<f64> = points.iter().map(|p| p.0.ln()).collect();
    let ys: Vec<f64> = points.iter().map(|p| p.1.max(1.0).ln()).collect();
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ss_tot: f64 = ys.iter().map(|y| (y - my).powi(2)).sum();
    let ss_res: f64 = xs
        .iter()
        .zip(&ys)
        .map(|(x, y)| (y - intercept - slope * x).powi(2))
        .sum();
    let r2 = if ss_tot == 0.0 { 1.0 } else { 1.0 - ss_res / ss_tot };
    Ok(SlopeFit { slope, intercept, r2 })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HorizonStats {
    pub horizon: u64,
    pub seeds: usize,
    pub regret_mean: f64,
    pub regret_std: f64,
    pub ccv_mean: f64,
    pub ccv_std: f64,
    pub ccv_positive_mean: f64,
    pub avg_queue_mean: f64,
    pub queue_p99_mean: f64,
    pub realized_u_f_mean: f64,
    pub min_surrogate_slack: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepSummary {
    pub schema_version: u32,
    pub regime: Regime,
    pub per_horizon: Vec<HorizonStats>,
    /// Fit of the per-horizon mean regret.
    pub regret_fit: SlopeFit,
    /// Fit of the per-horizon mean CCV.
    pub ccv_fit: SlopeFit,
}

/// Every run of a sweep, in `(T, seed)` order, with the aggregate.
#[derive(Debug, Clone)]
pub struct SweepOutput {
    pub runs: Vec<RunSummary>,
    pub summary: SweepSummary,
}

/// Runs every `(T, seed)` pair of the config on the global thread pool.
pub fn run_sweep(config: &ExperimentConfig) -> Result<SweepOutput> {
    run_sweep_with_threads(config, None)
}

/// Runs the sweep on a pool of `threads` workers (`None` for the default).
/// The output does not depend on the thread count.
pub fn run_sweep_with_threads(config: &ExperimentConfig, threads: Option<usize>) -> Result<SweepOutput> {
    config.validate()?;
    if config.horizons.len() < 3 {
        return Err(CcbError::Config("a sweep needs at least 3 horizons".into()));
    }
    if config.seeds.len() < 5 {
        return Err(CcbError::Config("a sweep needs at least 5 seeds".into()));
    }
    let pairs: Vec<(u64, u64)> = config
        .horizons
        .iter()
        .flat_map(|&t| config.seeds.iter().map(move |&s| (t, s)))
        .collect();
    let runs = run_pairs(config, &pairs, threads)?;
    let summary = aggregate(config, &runs)?;
    Ok(SweepOutput { runs, summary })
}

#[cfg(feature = "parallel")]
fn run_pairs(config: &ExperimentConfig, pairs: &[(u64, u64)], threads: Option<usize>) -> Result<Vec<RunSummary>> {
    use rayon::prelude::*;
    let work = || {
        pairs
            .par_iter()
            .map(|&(t, s)| run_streaming(config, t, s, |_| {}))
            .collect::<Result<Vec<_>>>()
    };
    match threads {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| CcbError::Config(format!("cannot build a pool of {n} threads: {e}")))?
            .install(work),
        None => work(),
    }
}

#[cfg(not(feature = "parallel"))]
fn run_pairs(config: &ExperimentConfig, pairs: &[(u64, u64)], _threads: Option<usize>) -> Result<Vec<RunSummary>> {
    pairs
        .iter()
        .map(|&(t, s)| run_streaming(config, t, s, |_| {}))
        .collect()
}

fn mean_std(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = if values.len() > 1 {
        values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)
    } else {
        0.0
    };
    (mean, var.sqrt())
}

fn aggregate(config: &ExperimentConfig, runs: &[RunSummary]) -> Result<SweepSummary> {
    let per_horizon: Vec<HorizonStats> = config
        .horizons
        .iter()
        .map(|&t| {
            let group: Vec<&RunSummary> = runs.iter().filter(|r| r.horizon == t).collect();
            let pick = |f: fn(&RunSummary) -> f64| group.iter().map(|r| f(r)).collect::<Vec<f64>>();
            let (regret_mean, regret_std) = mean_std(&pick(|r| r.regret));
            let (ccv_mean, ccv_std) = mean_std(&pick(|r| r.ccv));
            let largest = |v: &[f64]| v.iter().copied().fold(0.0, f64::max);
            HorizonStats {
                horizon: t,
                seeds: group.len(),
                regret_mean,
                regret_std,
                ccv_mean,
                ccv_std,
                ccv_positive_mean: mean_std(&pick(|r| r.ccv_positive)).0,
                avg_queue_mean: mean_std(&group.iter().map(|r| largest(&r.avg_queue)).collect::<Vec<_>>()).0,
                queue_p99_mean: mean_std(&group.iter().map(|r| largest(&r.queue_p99)).collect::<Vec<_>>()).0,
                realized_u_f_mean: mean_std(&pick(|r| r.realized_u_f)).0,
                min_surrogate_slack: group
                    .iter()
                    .filter_map(|r| r.min_surrogate_slack)
                    .fold(None, |acc: Option<f64>, s| Some(acc.map_or(s, |a| a.min(s)))),
            }
        })
        .collect();
    let fit = |f: fn(&HorizonStats) -> f64| {
        let pts: Vec<(f64, f64)> = per_horizon.iter().map(|h| (h.horizon as f64, f(h))).collect();
        fit_slope(&pts)
    };
    Ok(SweepSummary {
        schema_version: SCHEMA_VERSION,
        regime: config.regime(),
        regret_fit: fit(|h| h.regret_mean)?,
        ccv_fit: fit(|h| h.ccv_mean)?,
        per_horizon,
    })
}

/// One row per run: the scalar metrics of every `(T, seed)` pair.
pub fn write_sweep_csv<W: Write>(out: &mut W, runs: &[RunSummary]) -> std::io::Result<()> {
    writeln!(
        out,
        "horizon,seed,opt,reward,regret,ccv,ccv_positive,avg_queue,queue_p99,realized_u_f,min_surrogate_slack"
    )?;
    let largest = |v: &[f64]| v.iter().copied().fold(0.0, f64::max);
    for r in runs {
        writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{},{}",
            r.horizon,
            r.seed,
            r.opt,
            r.reward,
            r.regret,
            r.ccv,
            r.ccv_positive,
            largest(&r.avg_queue),
            largest(&r.queue_p99),
            r.realized_u_f,
            r.min_surrogate_slack.map(|s| s.to_string()).unwrap_or_default()
        )?;
    }
    Ok(())
}
