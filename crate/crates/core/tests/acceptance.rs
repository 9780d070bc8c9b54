//! End-to-end acceptance suite. Prints one PASS/FAIL line per criterion and
//! exits non-zero if any fails.

use std::process::ExitCode;
use std::time::{Duration, Instant};

use ccb_core::env::lp::vertex_max;
use ccb_core::env::{benchmark_budget, benchmark_per_context, ContextProcess, NoiseModel, ProblemSpec};
use ccb_core::harness::{
    fuzz_lemma1, igw_contract_holds, presets, run_single, run_streaming, run_sweep, run_sweep_with_threads,
    verify_oracle, write_round_csv, write_sweep_csv, ExperimentConfig, RunSummary, SweepOutput,
};
use ccb_core::lyapunov::Regime;
use ccb_core::rng::{stream, Stream};
use ccb_core::types::{MeanTable, Seed};
use nalgebra::DMatrix;
use rand::Rng;

const SLACK_TOL: f64 = -1e-9;

struct Verdict {
    pass: bool,
    detail: String,
}

fn verdict(pass: bool, detail: String) -> Verdict {
    Verdict { pass, detail }
}

struct Suite {
    failures: usize,
    /// Smallest per-round surrogate slack seen in any run, by regime and m.
    slacks: Vec<(Regime, usize, f64)>,
}

impl Suite {
    fn report(&mut self, id: u32, name: &str, limit: Duration, body: impl FnOnce(&mut Self) -> Verdict) {
        let start = Instant::now();
        let v = body(self);
        let elapsed = start.elapsed();
        let in_time = elapsed <= limit;
        let pass = v.pass && in_time;
        if !pass {
            self.failures += 1;
        }
        println!(
            "criterion {id:>2} {name}: {} ({}; {:.1}s of {}s){}",
            if pass { "PASS" } else { "FAIL" },
            v.detail,
            elapsed.as_secs_f64(),
            limit.as_secs(),
            if in_time { "" } else { " over time limit" }
        );
    }

    fn note_runs(&mut self, runs: &[RunSummary], m: usize) {
        for r in runs {
            if let Some(s) = r.min_surrogate_slack {
                self.slacks.push((r.regime, m, s));
            }
        }
    }
}

fn sweep(regime: Regime) -> SweepOutput {
    run_sweep(&presets::for_regime(regime)).expect("acceptance sweep runs")
}

fn slope_line(out: &SweepOutput) -> String {
    let s = &out.summary;
    format!(
        "regret slope {:.3} r2 {:.3}, ccv slope {:.3} r2 {:.3}",
        s.regret_fit.slope, s.regret_fit.r2, s.ccv_fit.slope, s.ccv_fit.r2
    )
}

fn sqrt_ktu(summary: &RunSummary, k: usize) -> f64 {
    (k as f64 * summary.horizon as f64 * summary.u_t).sqrt()
}

/// Same experiment with a second resource at half the first one's cost.
fn with_second_resource(mut config: ExperimentConfig) -> ExperimentConfig {
    let half = config.spec.g_star[0].map(|v| 0.5 * v).unwrap();
    config.spec.g_star.push(half);
    let noise = config.spec.cost_noise[0];
    config.spec.cost_noise.push(noise);
    config
}

/// Same experiment with a second resource that never costs anything.
fn with_null_resource(mut config: ExperimentConfig) -> ExperimentConfig {
    let zero = MeanTable::constant(config.spec.n_contexts(), config.spec.k(), 0.0).unwrap();
    config.spec.g_star.push(zero);
    config.spec.cost_noise.push(NoiseModel::Deterministic);
    config
}

fn round_csv(config: &ExperimentConfig, horizon: u64, seed: u64) -> Vec<u8> {
    let out = run_single(config, horizon, seed).unwrap();
    let mut buf = Vec::new();
    write_round_csv(&mut buf, config.spec.m(), &out.logs).unwrap();
    buf
}

fn sweep_bytes(out: &SweepOutput) -> Vec<u8> {
    let mut buf = Vec::new();
    write_sweep_csv(&mut buf, &out.runs).unwrap();
    buf.extend(serde_json::to_vec(&out.summary).unwrap());
    buf
}

fn table(rng: &mut impl Rng, n: usize, k: usize) -> MeanTable {
    MeanTable::new(
        (0..n)
            .map(|_| (0..k).map(|_| rng.random_range(-1.0..=1.0)).collect())
            .collect(),
    )
    .unwrap()
}

/// Independent LP: `max ⟨f,π⟩` over the simplex with `⟨g_i,π⟩ ≤ c0`.
fn lp_per_context(f: &[f64], g_rows: &[&[f64]], c0: f64) -> Option<f64> {
    let k = f.len();
    let m = g_rows.len();
    let cols = k + m;
    let a = DMatrix::from_fn(1 + m, cols, |i, j| match (i, j) {
        (0, j) if j < k => 1.0,
        (0, _) => 0.0,
        (i, j) if j < k => g_rows[i - 1][j],
        (i, j) => f64::from(j - k == i - 1),
    });
    let mut c = f.to_vec();
    c.extend(vec![0.0; m]);
    let mut b = vec![1.0];
    b.extend(vec![c0; m]);
    vertex_max(&c, &a, &b).unwrap().map(|(_, v)| v)
}

/// Independent LP for the weighted one-resource budget program.
fn lp_budget(f: &MeanTable, g: &MeanTable, w: &[f64], budget: f64) -> Option<f64> {
    let (n, k) = (f.n_contexts(), f.k());
    let cols = n * k + 1;
    let a = DMatrix::from_fn(n + 1, cols, |i, j| {
        if j == n * k {
            f64::from(i == n)
        } else if i < n {
            f64::from(j / k == i)
        } else {
            w[j / k] * g.row(ccb_core::types::ContextId(j / k))[j % k]
        }
    });
    let mut c: Vec<f64> = (0..n * k)
        .map(|j| w[j / k] * f.row(ccb_core::types::ContextId(j / k))[j % k])
        .collect();
    c.push(0.0);
    let mut b = vec![1.0; n];
    b.push(budget);
    vertex_max(&c, &a, &b).unwrap().map(|(_, v)| v)
}

/// Exhaustive grid over the simplex for `K ≤ 3`, step `1/steps`.
fn grid_per_context(f: &[f64], g_rows: &[&[f64]], c0: f64, steps: usize) -> Option<f64> {
    let k = f.len();
    let mut best: Option<f64> = None;
    let h = 1.0 / steps as f64;
    let mut visit = |p: &[f64]| {
        let ok = g_rows
            .iter()
            .all(|g| g.iter().zip(p).map(|(a, b)| a * b).sum::<f64>() <= c0 + 1e-12);
        if ok {
            let v: f64 = f.iter().zip(p).map(|(a, b)| a * b).sum();
            best = Some(best.map_or(v, |b: f64| b.max(v)));
        }
    };
    match k {
        1 => visit(&[1.0]),
        2 => (0..=steps).for_each(|i| visit(&[i as f64 * h, 1.0 - i as f64 * h])),
        3 => {
            for i in 0..=steps {
                for j in 0..=steps - i {
                    let (a, b) = (i as f64 * h, j as f64 * h);
                    visit(&[a, b, (1.0 - a - b).max(0.0)]);
                }
            }
        }
        _ => unreachable!("grid oracle is for K ≤ 3"),
    }
    best
}

fn criterion_10() -> Verdict {
    let mut rng = stream(Seed(10), Stream::Fuzz);
    let mut worst_gap: f64 = 0.0;
    let mut structure_ok = true;
    let mut infeasible = 0;
    let mut grid_checked = 0;
    for trial in 0..200 {
        let n = rng.random_range(1..=3);
        let k = rng.random_range(2..=4);
        let f = table(&mut rng, n, k);
        let g = table(&mut rng, n, k);
        let c0 = rng.random_range(-0.3..0.3);

        for x in 0..n {
            let xi = ccb_core::types::ContextId(x);
            let (fr, gr) = (f.row(xi), g.row(xi));
            let solved = benchmark_per_context(fr, &[gr], c0).ok();
            let reference = lp_per_context(fr, &[gr], c0);
            match (&solved, reference) {
                (Some((pi, v)), Some(r)) => {
                    worst_gap = worst_gap.max((v - r).abs());
                    structure_ok &= pi.support_size() <= 2;
                    if k <= 3 {
                        let grid = grid_per_context(fr, &[gr], c0, 2000).unwrap_or(f64::NEG_INFINITY);
                        worst_gap = worst_gap.max((v - grid).abs());
                        grid_checked += 1;
                    }
                }
                (None, None) => infeasible += 1,
                _ => {
                    return verdict(false, format!("trial {trial}: solver and LP disagree on feasibility"));
                }
            }
        }

        let mut w: Vec<f64> = (0..n).map(|_| rng.random_range(0.05..1.0)).collect();
        let total: f64 = w.iter().sum();
        w.iter_mut().for_each(|v| *v /= total);
        let least: f64 = (0..n)
            .map(|x| {
                w[x] * g
                    .row(ccb_core::types::ContextId(x))
                    .iter()
                    .copied()
                    .fold(f64::INFINITY, f64::min)
            })
            .sum();
        let budget = least + rng.random_range(0.0..0.8);
        let spec = ProblemSpec {
            f_star: f.clone(),
            g_star: vec![g.clone()],
            context_process: ContextProcess::Iid { probs: w.clone() },
            reward_noise: NoiseModel::Deterministic,
            cost_noise: vec![NoiseModel::Deterministic],
            budget: None,
        };
        let policy = benchmark_budget(&spec, &w, budget).unwrap();
        let value: f64 = (0..n).map(|x| w[x] * policy.value_per_context[x]).sum();
        let reference = lp_budget(&f, &g, &w, budget).unwrap();
        worst_gap = worst_gap.max((value - reference).abs());
        structure_ok &= policy.randomized_contexts() <= 1 && policy.per_context.iter().all(|p| p.support_size() <= 2);
    }
    verdict(
        worst_gap <= 2e-3 && structure_ok,
        format!(
            "worst objective gap {worst_gap:.2e}, support structure {}, {grid_checked} grid checks, {infeasible} infeasible contexts agreed",
            if structure_ok { "ok" } else { "violated" }
        ),
    )
}

fn main() -> ExitCode {
    let mut suite = Suite {
        failures: 0,
        slacks: Vec::new(),
    };
    let minute = |m: u64| Duration::from_secs(60 * m);

    suite.report(1, "IGW inequality fuzz", Duration::from_secs(10), |_| {
        let worst = fuzz_lemma1(100_000, 1).unwrap();
        verdict(worst >= SLACK_TOL, format!("min slack {worst:.3e} over 1e5 instances"))
    });

    suite.report(3, "IGW contract", Duration::from_secs(5), |_| {
        let mut rng = stream(Seed(3), Stream::Fuzz);
        let bad = (0..10_000)
            .filter(|_| {
                let k = rng.random_range(1..=8);
                let scale = 10f64.powf(rng.random_range(-2.0..1.0));
                let losses: Vec<f64> = (0..k).map(|_| scale * rng.random_range(-1.0..=1.0)).collect();
                let gamma = 10f64.powf(rng.random_range(-3.0..4.0));
                let shift = rng.random_range(-5.0..5.0);
                !igw_contract_holds(&losses, gamma, shift).unwrap()
            })
            .count();
        verdict(bad == 0, format!("{bad} of 1e4 inputs violate the contract"))
    });

    suite.report(4, "finite-class oracle guarantee", Duration::from_secs(30), |_| {
        let config = presets::for_regime(Regime::FeasibleExpectation);
        let bound = 8.0 * 16f64.ln();
        let checks: Vec<_> = (0..20).map(|s| verify_oracle(&config, 5000, s).unwrap()).collect();
        let worst_excess = checks
            .iter()
            .map(|c| c.aggregation_excess.unwrap())
            .fold(f64::NEG_INFINITY, f64::max);
        let mean_err = checks.iter().map(|c| c.error_vs_truth).sum::<f64>() / checks.len() as f64;
        verdict(
            worst_excess <= bound && mean_err <= bound + 5.0,
            format!("worst excess {worst_excess:.2} and mean error {mean_err:.2} vs 8 ln 16 = {bound:.2}"),
        )
    });

    let mut fe_sweep = None;
    suite.report(5, "quadratic scaling, feasible in expectation", minute(15), |s| {
        let out = sweep(Regime::FeasibleExpectation);
        s.note_runs(&out.runs, 1);
        let f = &out.summary;
        let pass =
            f.regret_fit.slope <= 0.85 && f.ccv_fit.slope <= 0.85 && f.regret_fit.r2 >= 0.9 && f.ccv_fit.r2 >= 0.9;
        let v = verdict(pass, slope_line(&out));
        fe_sweep = Some(out);
        v
    });

    suite.report(6, "exponential scaling, almost-sure benchmark", minute(15), |s| {
        let out = sweep(Regime::AlmostSure);
        s.note_runs(&out.runs, 1);
        let f = &out.summary;
        verdict(f.regret_fit.slope <= 0.65 && f.ccv_fit.slope <= 0.65, slope_line(&out))
    });

    suite.report(7, "Slater queue diagnostic", minute(5), |s| {
        let config = presets::for_regime(Regime::Slater);
        let eps = config.regime.epsilon.unwrap();
        let horizon = 1 << 16;
        let runs: Vec<RunSummary> = config
            .seeds
            .iter()
            .map(|&seed| run_streaming(&config, horizon, seed, |_| {}).unwrap())
            .collect();
        s.note_runs(&runs, 1);
        let c = runs
            .iter()
            .map(|r| r.avg_queue[0].max(r.queue_p99[0]) / (sqrt_ktu(r, config.spec.k()) / eps))
            .fold(0.0, f64::max);
        verdict(c <= 10.0, format!("C = {c:.4} at T = 2^16 over {} seeds", runs.len()))
    });

    suite.report(8, "knapsack regret and violation", minute(10), |s| {
        let config = presets::for_regime(Regime::Cbwk);
        let out = run_sweep(&config).unwrap();
        s.note_runs(&out.runs, 1);
        let k = config.spec.k() as f64;
        let c = out
            .runs
            .iter()
            .filter(|r| r.horizon == 1 << 16)
            .map(|r| {
                let t = r.horizon as f64;
                r.ccv / ((k * r.u_t * t).sqrt() + r.budget.unwrap() * t.ln())
            })
            .fold(f64::NEG_INFINITY, f64::max);
        verdict(
            out.summary.regret_fit.slope <= 0.65 && c <= 10.0,
            format!(
                "regret slope {:.3}, c = {c:.3} at T = 2^16",
                out.summary.regret_fit.slope
            ),
        )
    });

    suite.report(9, "linear-constraint scaling, stochastic contexts", minute(15), |s| {
        let out = sweep(Regime::Cbwlc);
        s.note_runs(&out.runs, 1);
        let f = &out.summary;
        verdict(f.regret_fit.slope <= 0.85 && f.ccv_fit.slope <= 0.85, slope_line(&out))
    });

    suite.report(
        10,
        "benchmark solvers vs independent oracles",
        Duration::from_secs(30),
        |_| criterion_10(),
    );

    suite.report(11, "multi-resource reduction", Duration::from_secs(10), |s| {
        let mut mismatched = Vec::new();
        // A resource that always costs zero has no ε margin, so Slater is
        // excluded: its benchmark is infeasible for such a spec.
        for regime in [Regime::FeasibleExpectation, Regime::NonNegRegret, Regime::Cbwlc] {
            let one = presets::for_regime(regime);
            let two = with_null_resource(one.clone());
            for seed in 0..3 {
                let a = run_single(&one, 1 << 12, seed).unwrap();
                let b = run_single(&two, 1 << 12, seed).unwrap();
                s.note_runs(std::slice::from_ref(&b.summary), 2);
                let trace =
                    |o: &ccb_core::harness::RunOutput| o.logs.iter().map(|l| l.action as u8).collect::<Vec<u8>>();
                if trace(&a) != trace(&b) {
                    mismatched.push(format!("{}/{seed}", regime.name()));
                }
            }
        }
        verdict(
            mismatched.is_empty(),
            if mismatched.is_empty() {
                "action traces identical for 3 quadratic regimes x 3 seeds; Slater excluded".into()
            } else {
                format!("traces differ for {}", mismatched.join(", "))
            },
        )
    });

    suite.report(12, "determinism", minute(5), |_| {
        let config = presets::for_regime(Regime::Cbwk);
        let same_run = round_csv(&config, 1 << 12, 7) == round_csv(&config, 1 << 12, 7);
        let fe = presets::for_regime(Regime::FeasibleExpectation);
        let reference = sweep_bytes(fe_sweep.as_ref().expect("criterion 5 ran"));
        let single = sweep_bytes(&run_sweep_with_threads(&fe, Some(1)).unwrap());
        let four = sweep_bytes(&run_sweep_with_threads(&fe, Some(4)).unwrap());
        let pass = same_run && single == reference && four == reference;
        verdict(
            pass,
            format!(
                "repeat run identical: {same_run}, sweep identical at 1/4/default threads: {}",
                single == reference && four == reference
            ),
        )
    });

    suite.report(2, "per-round surrogate inequality", minute(5), |s| {
        for regime in Regime::ALL {
            let one = presets::for_regime(regime);
            for config in [with_second_resource(one.clone()), one] {
                let runs: Vec<RunSummary> = [1u64 << 10, 1 << 13]
                    .iter()
                    .flat_map(|&t| (0..3).map(move |seed| (t, seed)))
                    .map(|(t, seed)| run_streaming(&config, t, seed, |_| {}).unwrap())
                    .collect();
                s.note_runs(&runs, config.spec.m());
            }
        }
        let worst = s.slacks.iter().map(|e| e.2).fold(f64::INFINITY, f64::min);
        let covered = Regime::ALL
            .iter()
            .all(|&r| (1..=2).all(|m| s.slacks.iter().any(|e| e.0 == r && e.1 == m)));
        verdict(
            worst >= SLACK_TOL && covered,
            format!(
                "min slack {worst:.3e} over {} runs, every regime with m = 1 and 2: {covered}",
                s.slacks.len()
            ),
        )
    });

    if suite.failures == 0 {
        println!("all 12 criteria pass");
        ExitCode::SUCCESS
    } else {
        println!("{} criteria failed", suite.failures);
        ExitCode::FAILURE
    }
}
