use serde::{Deserialize, Serialize};

/// Running squared error of an oracle against the true mean on the played
/// actions. Only available in simulation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ErrorLedger {
    pub cumulative_sq_error: f64,
    pub budget: f64,
}

impl ErrorLedger {
    pub fn new(budget: f64) -> Self {
        Self {
            cumulative_sq_error: 0.0,
            budget,
        }
    }

    /// Adds `(predicted − truth)²` and returns the increment.
    pub fn record(&mut self, predicted: f64, truth: f64) -> f64 {
        let e = (predicted - truth) * (predicted - truth);
        self.cumulative_sq_error += e;
        e
    }

    pub fn within_budget(&self) -> bool {
        self.cumulative_sq_error <= self.budget
    }
}
