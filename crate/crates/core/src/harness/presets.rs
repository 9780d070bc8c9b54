//! Ready-made experiments, one per regime, on small instances with `K = 4`
//! actions and three contexts.

use super::config::{ExperimentConfig, OracleConfig, RegimeConfig, SCHEMA_VERSION};
use crate::env::{BudgetRule, ContextProcess, NoiseModel, ProblemSpec};
use crate::lyapunov::Regime;
use crate::oracle::FINITE_CLASS_ETA;
use crate::types::MeanTable;

/// Horizons `2^10, …, 2^17`.
pub fn scaling_horizons() -> Vec<u64> {
    (10..=17).map(|e| 1u64 << e).collect()
}

fn table(rows: [[f64; 4]; 3]) -> MeanTable {
    MeanTable::new(rows.iter().map(|r| r.to_vec()).collect()).expect("preset tables lie in [-1, 1]")
}

fn finite_class() -> OracleConfig {
    OracleConfig::FiniteClass {
        size: 16,
        spread: 0.5,
        eta: FINITE_CLASS_ETA,
        class_seed: None,
    }
}

/// A rewarding but costly action, a cost-reducing action, and two actions
/// that are bad on both counts. The feasible optimum mixes the first two.
fn mixing_spec(context_process: ContextProcess) -> ProblemSpec {
    ProblemSpec {
        f_star: table([[1.0, 0.6, -1.0, -1.0], [0.8, 0.5, -0.9, -1.0], [0.9, 0.5, -1.0, -0.8]]),
        g_star: vec![table([
            [1.0, -1.0, 0.0, 0.0],
            [0.8, -0.8, 0.0, 0.1],
            [0.6, -1.0, 0.1, 0.0],
        ])],
        context_process,
        reward_noise: NoiseModel::TwoPointSymmetric,
        cost_noise: vec![NoiseModel::TwoPointSymmetric],
        budget: None,
    }
}

fn cyclic() -> ContextProcess {
    ContextProcess::Cyclic {
        sequence: vec![0, 1, 2],
    }
}

/// Null action with zero cost at each context; the costly actions pay
/// less, so the safe action is also the best one.
fn null_action_spec() -> ProblemSpec {
    ProblemSpec {
        f_star: table([[0.8, 0.2, 0.0, -0.2], [0.1, 0.2, 0.8, -0.1], [0.0, -0.3, 0.1, 0.8]]),
        g_star: vec![table([
            [0.0, 0.5, 0.8, 1.0],
            [0.6, 0.9, 0.0, 0.4],
            [1.0, 0.7, 0.5, 0.0],
        ])],
        context_process: cyclic(),
        reward_noise: NoiseModel::TwoPointSymmetric,
        cost_noise: vec![NoiseModel::Deterministic],
        budget: None,
    }
}

/// Non-negative costs, free actions everywhere, and one context where the
/// best-paying action consumes the resource.
fn knapsack_spec() -> ProblemSpec {
    ProblemSpec {
        f_star: table([[0.9, 0.5, 0.0, -0.5], [0.2, 0.7, 0.1, 0.0], [0.0, 0.3, 0.6, -0.2]]),
        g_star: vec![table([
            [0.6, 0.0, 0.2, 0.4],
            [0.5, 0.0, 0.3, 0.1],
            [0.4, 0.2, 0.0, 0.3],
        ])],
        context_process: cyclic(),
        reward_noise: NoiseModel::TwoPointSymmetric,
        cost_noise: vec![NoiseModel::TwoPointNonNegative],
        budget: Some(BudgetRule {
            scale: 1.0,
            exponent: 0.5,
        }),
    }
}

pub fn for_regime(regime: Regime) -> ExperimentConfig {
    let (spec, epsilon) = match regime {
        Regime::FeasibleExpectation | Regime::NonNegRegret => (mixing_spec(cyclic()), None),
        Regime::Slater => (mixing_spec(cyclic()), Some(0.2)),
        Regime::AlmostSure => (null_action_spec(), None),
        Regime::Cbwk => (knapsack_spec(), None),
        Regime::Cbwlc => {
            let mut spec = mixing_spec(ContextProcess::Iid {
                probs: vec![0.5, 0.3, 0.2],
            });
            spec.budget = Some(BudgetRule {
                scale: 1.0,
                exponent: 0.5,
            });
            (spec, None)
        }
    };
    ExperimentConfig {
        schema_version: SCHEMA_VERSION,
        spec,
        regime: RegimeConfig { kind: regime, epsilon },
        oracle: finite_class(),
        u_t: None,
        horizons: scaling_horizons(),
        seeds: (0..20).collect(),
        record_per_round_checks: true,
        output_dir: None,
    }
}

/// Looks a preset up by its regime name.
pub fn by_name(name: &str) -> Option<ExperimentConfig> {
    Regime::ALL.into_iter().find(|r| r.name() == name).map(for_regime)
}
