use serde::{Deserialize, Serialize};

use super::{BenchmarkPolicy, ProblemSpec};
use crate::types::{ActionIndex, ContextId};

/// Which feasibility notion a benchmark is certified against.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum FeasibilityDefinition {
    /// `⟨g_i(x), π(x)⟩ ≤ 0` at every context.
    InExpectation,
    /// `⟨g_i(x), π(x)⟩ ≤ −ε` at every context.
    Slater { epsilon: f64 },
    /// Every played action has realized costs `≤ 0` with probability one.
    AlmostSure,
    /// `Σ_x count(x)·⟨g_i(x), π(x)⟩ ≤ B_T` for every resource, with
    /// `count` the (expected or realized) number of visits per context.
    BudgetFeasible { budget: f64, context_counts: Vec<f64> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeasibilityCertificate {
    pub definition: FeasibilityDefinition,
    pub verified: bool,
    /// Smallest margin by which the defining inequality holds; negative
    /// when it fails.
    pub worst_slack: f64,
}

pub fn feasibility_check(
    spec: &ProblemSpec,
    benchmark: &BenchmarkPolicy,
    definition: FeasibilityDefinition,
) -> FeasibilityCertificate {
    let contexts = (0..spec.n_contexts()).map(ContextId);
    let worst_level = |level: f64| {
        contexts
            .clone()
            .flat_map(|x| benchmark.consumption(spec, x))
            .map(|c| level - c)
            .fold(f64::INFINITY, f64::min)
    };
    let (worst_slack, verified) = match &definition {
        FeasibilityDefinition::InExpectation => {
            let w = worst_level(0.0);
            (w, w >= -1e-12)
        }
        FeasibilityDefinition::Slater { epsilon } => {
            let w = worst_level(-epsilon);
            (w, w >= -1e-12)
        }
        FeasibilityDefinition::AlmostSure => {
            let mut worst = f64::INFINITY;
            for x in contexts.clone() {
                for (a, &p) in benchmark.at(x).probs().iter().enumerate() {
                    if p > 0.0 {
                        for (g, noise) in spec.g_star.iter().zip(&spec.cost_noise) {
                            worst = worst.min(-noise.support_max(g.get(x, ActionIndex(a))));
                        }
                    }
                }
            }
            (worst, worst >= 0.0)
        }
        FeasibilityDefinition::BudgetFeasible { budget, context_counts } => {
            let w = (0..spec.m())
                .map(|i| {
                    let used: f64 = contexts
                        .clone()
                        .zip(context_counts)
                        .map(|(x, n)| n * benchmark.consumption(spec, x)[i])
                        .sum();
                    budget - used
                })
                .fold(f64::INFINITY, f64::min);
            (w, w >= -1e-9)
        }
    };
    FeasibilityCertificate {
        definition,
        verified,
        worst_slack,
    }
}
