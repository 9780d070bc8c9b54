//! Lyapunov potentials of the cumulative-cost queue and the per-regime
//! parameter choices.

use serde::{Deserialize, Serialize};

use crate::error::{CcbError, Result};

/// A convex potential `Φ` with monotone `Φ″`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum LyapunovFunction {
    /// `Φ(x) = x²/V`, used on all of ℝ.
    Quadratic { v: f64 },
    /// `Φ(x) = exp(rate · x)`, used on `x ≥ 0`.
    Exponential { rate: f64 },
}

impl LyapunovFunction {
    pub fn value(&self, x: f64) -> f64 {
        match *self {
            Self::Quadratic { v } => x * x / v,
            Self::Exponential { rate } => (rate * x).exp(),
        }
    }

    pub fn derivative(&self, x: f64) -> f64 {
        match *self {
            Self::Quadratic { v } => 2.0 * x / v,
            Self::Exponential { rate } => rate * (rate * x).exp(),
        }
    }

    pub fn second_derivative(&self, x: f64) -> f64 {
        match *self {
            Self::Quadratic { v } => 2.0 / v,
            Self::Exponential { rate } => rate * rate * (rate * x).exp(),
        }
    }

    pub fn is_exponential(&self) -> bool {
        matches!(self, Self::Exponential { .. })
    }
}

/// Benchmark class / parameter regime.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Regime {
    /// Benchmark feasible in expectation every round.
    FeasibleExpectation,
    /// Feasible in expectation with margin ε (ε only enters diagnostics).
    Slater,
    /// Benchmark plays only actions whose cost is non-positive almost surely.
    AlmostSure,
    /// Knapsack: non-negative costs, long-term budget `B_T`.
    Cbwk,
    /// Feasible in expectation, learner assumed to have non-negative average regret.
    NonNegRegret,
    /// Signed costs with a long-term budget, stochastic contexts.
    Cbwlc,
}

impl Regime {
    pub const ALL: [Regime; 6] = [
        Regime::FeasibleExpectation,
        Regime::Slater,
        Regime::AlmostSure,
        Regime::Cbwk,
        Regime::NonNegRegret,
        Regime::Cbwlc,
    ];

    /// Regimes whose benchmark is defined by a long-term budget.
    pub fn is_budgeted(self) -> bool {
        matches!(self, Regime::Cbwk | Regime::Cbwlc)
    }

    /// Costs are replaced by their positive part before entering the queue.
    pub fn positive_part_costs(self) -> bool {
        matches!(self, Regime::AlmostSure)
    }

    pub fn name(self) -> &'static str {
        match self {
            Regime::FeasibleExpectation => "feasible_expectation",
            Regime::Slater => "slater",
            Regime::AlmostSure => "almost_sure",
            Regime::Cbwk => "cbwk",
            Regime::NonNegRegret => "non_neg_regret",
            Regime::Cbwlc => "cbwlc",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RegimeParams {
    pub regime: Regime,
    pub k: usize,
    pub horizon: u64,
    pub u_t: f64,
    /// Total budget `B_T`; required for the budgeted regimes.
    pub budget: Option<f64>,
    /// Slater margin; diagnostic only.
    pub epsilon: Option<f64>,
}

impl RegimeParams {
    pub fn validate(&self) -> Result<()> {
        if self.k == 0 {
            return Err(CcbError::Config("K must be at least 1".into()));
        }
        if !(self.u_t.is_finite() && self.u_t > 0.0) {
            return Err(CcbError::Config(format!("U_T must be positive, got {}", self.u_t)));
        }
        if self.regime.is_budgeted() && self.budget.is_none() {
            return Err(CcbError::Config(format!(
                "regime {} requires a budget B_T",
                self.regime.name()
            )));
        }
        if let Some(b) = self.budget {
            if !(b.is_finite() && b >= 0.0) {
                return Err(CcbError::Config(format!("budget must be non-negative, got {b}")));
            }
            if b > self.horizon as f64 {
                return Err(CcbError::Config(format!("budget {b} exceeds horizon {}", self.horizon)));
            }
        }
        if self.regime == Regime::Slater {
            match self.epsilon {
                Some(e) if e > 0.0 && e.is_finite() => {}
                _ => return Err(CcbError::Config("slater regime requires epsilon > 0".into())),
            }
        }
        Ok(())
    }

    /// `√(K·T·U_T)`, with `T` floored at one.
    pub fn scale(&self) -> f64 {
        (self.k as f64 * self.horizon.max(1) as f64 * self.u_t).sqrt()
    }
}

/// The Lyapunov function prescribed for each regime.
pub fn build_lyapunov(params: &RegimeParams) -> Result<LyapunovFunction> {
    params.validate()?;
    let scale = params.scale();
    let budget = params.budget.unwrap_or(0.0);
    Ok(match params.regime {
        Regime::FeasibleExpectation | Regime::Slater => LyapunovFunction::Quadratic { v: scale },
        Regime::AlmostSure => LyapunovFunction::Exponential {
            rate: 1.0 / (8.0 * scale),
        },
        Regime::Cbwk => LyapunovFunction::Exponential {
            rate: 1.0 / (8.0 * scale + 2.0 * budget),
        },
        Regime::NonNegRegret | Regime::Cbwlc => LyapunovFunction::Quadratic { v: scale + budget },
    })
}

/// `z = max(1, Σ_i Φ′(Q_i)²)`; for one queue this is `max(1, Φ′(Q)²)`.
pub fn z_of(phi: &LyapunovFunction, queues: &[f64]) -> f64 {
    let s: f64 = queues.iter().map(|&q| phi.derivative(q).powi(2)).sum();
    s.max(1.0)
}
