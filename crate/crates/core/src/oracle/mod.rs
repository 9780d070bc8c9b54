//! Online regression oracles for the mean reward and mean costs.
//!
//! Every oracle follows the same online contract: `predict` for the current
//! context (pure, repeatable), then `update` with the one observed
//! `(context, action, value)` triple.

mod finite;
mod ledger;
mod linear;

pub use finite::{FiniteClassOracle, FINITE_CLASS_ETA};
pub use ledger::ErrorLedger;
pub use linear::{LinearFeatures, LinearOracle, LinearVariant};

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::types::{ActionIndex, ContextId};

pub trait RegressionOracle {
    /// Number of actions predicted per context.
    fn k(&self) -> usize;

    /// Predictions for every action at context `x`, each in `[-1, 1]`.
    fn predict(&self, x: ContextId) -> Vec<f64>;

    /// Folds one observation into the oracle state.
    fn update(&mut self, x: ContextId, a: ActionIndex, y: f64) -> Result<()>;
}

/// Closed set of oracles selectable from an experiment config.
#[derive(Debug, Clone)]
pub enum AnyOracle {
    Finite(FiniteClassOracle),
    Linear(LinearOracle),
}

impl RegressionOracle for AnyOracle {
    fn k(&self) -> usize {
        match self {
            AnyOracle::Finite(o) => o.k(),
            AnyOracle::Linear(o) => o.k(),
        }
    }

    fn predict(&self, x: ContextId) -> Vec<f64> {
        match self {
            AnyOracle::Finite(o) => o.predict(x),
            AnyOracle::Linear(o) => o.predict(x),
        }
    }

    fn update(&mut self, x: ContextId, a: ActionIndex, y: f64) -> Result<()> {
        match self {
            AnyOracle::Finite(o) => o.update(x, a, y),
            AnyOracle::Linear(o) => o.update(x, a, y),
        }
    }
}

impl<O: RegressionOracle + ?Sized> RegressionOracle for Box<O> {
    fn k(&self) -> usize {
        (**self).k()
    }

    fn predict(&self, x: ContextId) -> Vec<f64> {
        (**self).predict(x)
    }

    fn update(&mut self, x: ContextId, a: ActionIndex, y: f64) -> Result<()> {
        (**self).update(x, a, y)
    }
}

/// Default error budgets `U_T` fed to the exploration schedule.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum ErrorBudget {
    /// `max(8 ln |F|, 1)` for a class of `|F|` candidates.
    FiniteClass { class_size: usize },
    /// `d ln T + d`.
    Linear { dim: usize },
}

impl ErrorBudget {
    pub fn value(self, horizon: u64) -> f64 {
        match self {
            ErrorBudget::FiniteClass { class_size } => (8.0 * (class_size.max(1) as f64).ln()).max(1.0),
            ErrorBudget::Linear { dim } => {
                let d = dim as f64;
                d * (horizon.max(1) as f64).ln() + d
            }
        }
    }
}

/// Clips a prediction into `[-1, 1]`. For a target inside that interval
/// this never increases the squared error.
pub(crate) fn clip_unit(v: f64) -> f64 {
    v.clamp(-1.0, 1.0)
}
