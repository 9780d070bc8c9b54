//! Simulated environments: ground-truth tables, context processes, noise,
//! benchmark programs and their feasibility certificates.

mod benchmark;
mod context;
mod feasibility;
pub mod lp;

pub use benchmark::{
    almost_sure_benchmark, benchmark_budget, benchmark_per_context, opt_value, per_context_benchmark, BenchmarkPolicy,
};
pub use context::{AdversaryStrategy, ContextProcess, ContextSampler};
pub use feasibility::{feasibility_check, FeasibilityCertificate, FeasibilityDefinition};

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{CcbError, Result};
use crate::rng::{stream, Stream, StreamRng};
use crate::types::{ActionIndex, ContextId, MeanTable, Outcome, Seed};

/// How a realized value is drawn around its mean. Every model is exact in
/// mean: `E[y | x, a]` equals the table entry.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NoiseModel {
    #[default]
    Deterministic,
    /// `+1` with probability `(1 + μ)/2`, else `−1`.
    TwoPointSymmetric,
    /// `−1` with probability `−μ`, else `0`. Requires `μ ≤ 0`.
    TwoPointNonPositive,
    /// `+1` with probability `μ`, else `0`. Requires `μ ≥ 0`.
    TwoPointNonNegative,
}

impl NoiseModel {
    pub fn admits(self, mean: f64) -> bool {
        match self {
            NoiseModel::Deterministic | NoiseModel::TwoPointSymmetric => (-1.0..=1.0).contains(&mean),
            NoiseModel::TwoPointNonPositive => (-1.0..=0.0).contains(&mean),
            NoiseModel::TwoPointNonNegative => (0.0..=1.0).contains(&mean),
        }
    }

    /// Draws one value. The deterministic model consumes no randomness; the
    /// others consume exactly one uniform.
    pub fn sample<R: Rng + ?Sized>(self, mean: f64, rng: &mut R) -> f64 {
        match self {
            NoiseModel::Deterministic => mean,
            NoiseModel::TwoPointSymmetric => {
                let u: f64 = rng.random();
                if u < 0.5 * (1.0 + mean) {
                    1.0
                } else {
                    -1.0
                }
            }
            NoiseModel::TwoPointNonPositive => {
                let u: f64 = rng.random();
                if u < -mean {
                    -1.0
                } else {
                    0.0
                }
            }
            NoiseModel::TwoPointNonNegative => {
                let u: f64 = rng.random();
                if u < mean {
                    1.0
                } else {
                    0.0
                }
            }
        }
    }

    /// Largest value drawn with positive probability.
    pub fn support_max(self, mean: f64) -> f64 {
        match self {
            NoiseModel::Deterministic => mean,
            NoiseModel::TwoPointSymmetric => {
                if mean <= -1.0 {
                    -1.0
                } else {
                    1.0
                }
            }
            NoiseModel::TwoPointNonPositive => {
                if mean <= -1.0 {
                    -1.0
                } else {
                    0.0
                }
            }
            NoiseModel::TwoPointNonNegative => {
                if mean > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
        }
    }

    /// Whether `E[max(0, y)] = max(0, μ)` for every admissible mean.
    pub fn preserves_positive_part_mean(self) -> bool {
        !matches!(self, NoiseModel::TwoPointSymmetric)
    }
}

/// Total budget as a function of the horizon: `B_T = scale · T^exponent`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BudgetRule {
    pub scale: f64,
    #[serde(default = "one")]
    pub exponent: f64,
}

fn one() -> f64 {
    1.0
}

impl BudgetRule {
    pub fn total(&self, horizon: u64) -> f64 {
        self.scale * (horizon as f64).powf(self.exponent)
    }
}

/// Ground truth of one environment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProblemSpec {
    pub f_star: MeanTable,
    pub g_star: Vec<MeanTable>,
    pub context_process: ContextProcess,
    #[serde(default)]
    pub reward_noise: NoiseModel,
    /// One model per cost channel.
    pub cost_noise: Vec<NoiseModel>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub budget: Option<BudgetRule>,
}

impl ProblemSpec {
    pub fn n_contexts(&self) -> usize {
        self.f_star.n_contexts()
    }

    pub fn k(&self) -> usize {
        self.f_star.k()
    }

    pub fn m(&self) -> usize {
        self.g_star.len()
    }

    pub fn cost_rows(&self, x: ContextId) -> Vec<&[f64]> {
        self.g_star.iter().map(|g| g.row(x)).collect()
    }

    pub fn validate(&self) -> Result<()> {
        let (n, k) = (self.n_contexts(), self.k());
        if n == 0 || k == 0 {
            return Err(CcbError::Config(
                "spec needs at least one context and one action".into(),
            ));
        }
        if self.g_star.is_empty() {
            return Err(CcbError::Config("spec needs at least one cost table".into()));
        }
        if self.g_star.iter().any(|g| g.n_contexts() != n || g.k() != k) {
            return Err(CcbError::Config("cost tables must match the reward table shape".into()));
        }
        if self.cost_noise.len() != self.m() {
            return Err(CcbError::Config(format!(
                "{} cost noise models for {} cost tables",
                self.cost_noise.len(),
                self.m()
            )));
        }
        check_noise(self.reward_noise, &self.f_star, "reward")?;
        for (i, (g, noise)) in self.g_star.iter().zip(&self.cost_noise).enumerate() {
            check_noise(*noise, g, &format!("cost {i}"))?;
        }
        self.context_process.validate(n)?;
        if let Some(rule) = self.budget {
            if !(rule.scale.is_finite() && rule.scale >= 0.0 && rule.exponent.is_finite()) {
                return Err(CcbError::Config(format!("invalid budget rule {rule:?}")));
            }
        }
        Ok(())
    }

    /// Draws the outcome of playing `a` at `x`, using one stream per channel.
    pub fn sample_outcome(&self, x: ContextId, a: ActionIndex, streams: &mut EnvStreams) -> Outcome {
        let reward = self.reward_noise.sample(self.f_star.get(x, a), &mut streams.reward);
        let costs = self
            .g_star
            .iter()
            .zip(&self.cost_noise)
            .zip(&mut streams.costs)
            .map(|((g, noise), rng)| noise.sample(g.get(x, a), rng))
            .collect();
        Outcome { reward, costs }
    }
}

fn check_noise(noise: NoiseModel, table: &MeanTable, what: &str) -> Result<()> {
    for (x, row) in table.rows().enumerate() {
        if let Some(a) = row.iter().position(|&v| !noise.admits(v)) {
            return Err(CcbError::Config(format!(
                "{what} noise {noise:?} cannot realize mean {} at context {x}, action {a}",
                row[a]
            )));
        }
    }
    Ok(())
}

/// Random streams owned by one simulated environment.
#[derive(Debug, Clone)]
pub struct EnvStreams {
    pub reward: StreamRng,
    pub costs: Vec<StreamRng>,
}

impl EnvStreams {
    pub fn new(seed: Seed, m: usize) -> Self {
        Self {
            reward: stream(seed, Stream::Reward),
            costs: (0..m).map(|i| stream(seed, Stream::Cost(i))).collect(),
        }
    }
}
