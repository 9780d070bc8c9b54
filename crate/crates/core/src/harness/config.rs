use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::env::{
    almost_sure_benchmark, benchmark_budget, feasibility_check, per_context_benchmark, BenchmarkPolicy, ContextProcess,
    FeasibilityCertificate, FeasibilityDefinition, NoiseModel, ProblemSpec,
};
use crate::error::{CcbError, Result};
use crate::lyapunov::{Regime, RegimeParams};
use crate::oracle::{
    AnyOracle, ErrorBudget, FiniteClassOracle, LinearFeatures, LinearOracle, LinearVariant, FINITE_CLASS_ETA,
};
use crate::rng::{stream, Stream};
use crate::types::{ContextId, MeanTable, Seed};

/// Version stamped into every config and JSON summary.
pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegimeConfig {
    pub kind: Regime,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub epsilon: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum OracleConfig {
    /// A class of `size` tables around each true table, regenerated from the
    /// run seed (or from `class_seed` when given).
    FiniteClass {
        size: usize,
        spread: f64,
        #[serde(default = "default_eta")]
        eta: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        class_seed: Option<u64>,
    },
    /// One linear forecaster per function over shared features.
    Linear {
        features: LinearFeatures,
        #[serde(default = "default_regularizer")]
        regularizer: f64,
        #[serde(default)]
        variant: LinearVariant,
    },
}

fn default_eta() -> f64 {
    FINITE_CLASS_ETA
}

fn default_regularizer() -> f64 {
    1.0
}

impl OracleConfig {
    pub fn error_budget(&self) -> ErrorBudget {
        match self {
            OracleConfig::FiniteClass { size, .. } => ErrorBudget::FiniteClass { class_size: *size },
            OracleConfig::Linear { features, .. } => ErrorBudget::Linear { dim: features.dim() },
        }
    }

    /// Builds the oracle for function `index` (0 = reward, `i + 1` = cost
    /// `i`) whose true table is `truth`.
    pub fn build(&self, truth: &MeanTable, index: usize, seed: Seed) -> Result<AnyOracle> {
        match self {
            OracleConfig::FiniteClass {
                size,
                spread,
                eta,
                class_seed,
            } => {
                if *size == 0 {
                    return Err(CcbError::Config("finite class size must be positive".into()));
                }
                if !(spread.is_finite() && *spread >= 0.0) {
                    return Err(CcbError::Config(format!(
                        "class spread must be non-negative, got {spread}"
                    )));
                }
                let seed = class_seed.map(Seed).unwrap_or(seed);
                let mut rng = stream(seed, Stream::Class(index));
                let (class, _) = FiniteClassOracle::class_around(truth, *size, *spread, &mut rng);
                Ok(AnyOracle::Finite(FiniteClassOracle::new(class, *eta)?))
            }
            OracleConfig::Linear {
                features,
                regularizer,
                variant,
            } => {
                if features.n_contexts() != truth.n_contexts() || features.k() != truth.k() {
                    return Err(CcbError::Config("linear features do not match the spec shape".into()));
                }
                Ok(AnyOracle::Linear(LinearOracle::new(
                    features.clone(),
                    *regularizer,
                    *variant,
                )?))
            }
        }
    }
}

/// One JSON document describing an experiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub schema_version: u32,
    pub spec: ProblemSpec,
    pub regime: RegimeConfig,
    pub oracle: OracleConfig,
    /// Overrides the oracle's default error budget `U_T`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub u_t: Option<f64>,
    pub horizons: Vec<u64>,
    pub seeds: Vec<u64>,
    #[serde(default)]
    pub record_per_round_checks: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output_dir: Option<PathBuf>,
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_json(&text)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let config: Self = serde_json::from_str(text)?;
        config.validate()?;
        Ok(config)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    pub fn regime(&self) -> Regime {
        self.regime.kind
    }

    /// Cost tables as seen by the learner: positive parts under almost-sure
    /// feasibility, unchanged otherwise.
    pub fn effective_costs(&self) -> Vec<MeanTable> {
        if self.regime().positive_part_costs() {
            self.spec.g_star.iter().map(MeanTable::positive_part).collect()
        } else {
            self.spec.g_star.clone()
        }
    }

    pub fn u_t(&self, horizon: u64) -> f64 {
        self.u_t.unwrap_or_else(|| self.oracle.error_budget().value(horizon))
    }

    pub fn budget(&self, horizon: u64) -> Option<f64> {
        self.spec.budget.map(|rule| rule.total(horizon))
    }

    pub fn params(&self, horizon: u64) -> RegimeParams {
        RegimeParams {
            regime: self.regime(),
            k: self.spec.k(),
            horizon,
            u_t: self.u_t(horizon),
            budget: self.budget(horizon),
            epsilon: self.regime.epsilon,
        }
    }

    /// Checks everything that does not depend on a particular run.
    pub fn validate(&self) -> Result<()> {
        if self.schema_version != SCHEMA_VERSION {
            return Err(CcbError::Config(format!(
                "schema_version {} is not supported (expected {SCHEMA_VERSION})",
                self.schema_version
            )));
        }
        self.spec.validate()?;
        if self.horizons.is_empty() || self.seeds.is_empty() {
            return Err(CcbError::Config(
                "config needs at least one horizon and one seed".into(),
            ));
        }
        if let Some(u) = self.u_t {
            if !(u.is_finite() && u > 0.0) {
                return Err(CcbError::Config(format!("U_T override must be positive, got {u}")));
            }
        }
        let regime = self.regime();
        if regime == Regime::Slater && !matches!(self.regime.epsilon, Some(e) if e > 0.0) {
            return Err(CcbError::Config("slater regime requires epsilon > 0".into()));
        }
        if regime.is_budgeted() && self.spec.budget.is_none() {
            return Err(CcbError::Config(format!(
                "regime {} requires a budget rule",
                regime.name()
            )));
        }
        match regime {
            Regime::AlmostSure => {
                if let Some(i) = self
                    .spec
                    .cost_noise
                    .iter()
                    .position(|n| !n.preserves_positive_part_mean())
                {
                    return Err(CcbError::Config(format!(
                        "cost {i}: symmetric two-point noise breaks realizability of positive-part costs"
                    )));
                }
            }
            Regime::Cbwk => {
                for (i, (g, noise)) in self.spec.g_star.iter().zip(&self.spec.cost_noise).enumerate() {
                    let negative_mean = g.rows().flatten().any(|&v| v < 0.0);
                    let negative_draws = !matches!(noise, NoiseModel::Deterministic | NoiseModel::TwoPointNonNegative);
                    if negative_mean || negative_draws {
                        return Err(CcbError::Config(format!(
                            "cost {i}: knapsack regime needs non-negative realized costs"
                        )));
                    }
                }
            }
            Regime::Cbwlc if !matches!(self.spec.context_process, ContextProcess::Iid { .. }) => {
                return Err(CcbError::Config("cbwlc regime needs IID contexts".into()));
            }
            _ => {}
        }
        for &horizon in &self.horizons {
            self.params(horizon).validate()?;
            if horizon > 0 {
                self.nominal_benchmark(horizon)?;
            }
        }
        Ok(())
    }

    /// Benchmark used for per-round checks, built from the nominal context
    /// weights of the process.
    pub fn nominal_benchmark(&self, horizon: u64) -> Result<BenchmarkPolicy> {
        let weights = self.spec.context_process.nominal_weights(self.spec.n_contexts());
        self.benchmark(horizon, &weights)
    }

    /// Benchmark of the configured regime. `context_weights` only matter
    /// for the budgeted regimes.
    pub fn benchmark(&self, horizon: u64, context_weights: &[f64]) -> Result<BenchmarkPolicy> {
        let spec = &self.spec;
        match self.regime() {
            Regime::FeasibleExpectation | Regime::NonNegRegret => per_context_benchmark(spec, 0.0),
            Regime::Slater => per_context_benchmark(spec, -self.regime.epsilon.unwrap_or(0.0)),
            Regime::AlmostSure => almost_sure_benchmark(spec),
            Regime::Cbwk | Regime::Cbwlc => {
                let total = self.budget(horizon).unwrap_or(0.0);
                if self.regime() == Regime::Cbwk {
                    // Any context sequence must admit a feasible policy.
                    let per_round = total / horizon.max(1) as f64;
                    for x in 0..spec.n_contexts() {
                        for (i, g) in spec.g_star.iter().enumerate() {
                            let least = g.row(ContextId(x)).iter().copied().fold(f64::INFINITY, f64::min);
                            if least > per_round + 1e-12 {
                                return Err(CcbError::Infeasible(format!(
                                    "context {x}: cheapest cost {least} of resource {i} exceeds the per-round budget {per_round}"
                                )));
                            }
                        }
                    }
                }
                benchmark_budget(spec, context_weights, total / horizon.max(1) as f64)
            }
        }
    }

    /// The feasibility notion the regime's benchmark must meet.
    pub fn definition(&self, horizon: u64, context_counts: &[f64]) -> FeasibilityDefinition {
        match self.regime() {
            Regime::FeasibleExpectation | Regime::NonNegRegret => FeasibilityDefinition::InExpectation,
            Regime::Slater => FeasibilityDefinition::Slater {
                epsilon: self.regime.epsilon.unwrap_or(0.0),
            },
            Regime::AlmostSure => FeasibilityDefinition::AlmostSure,
            Regime::Cbwk | Regime::Cbwlc => FeasibilityDefinition::BudgetFeasible {
                budget: self.budget(horizon).unwrap_or(0.0),
                context_counts: context_counts.to_vec(),
            },
        }
    }

    pub fn certify(&self, benchmark: &BenchmarkPolicy, horizon: u64, context_counts: &[f64]) -> FeasibilityCertificate {
        feasibility_check(&self.spec, benchmark, self.definition(horizon, context_counts))
    }
}
