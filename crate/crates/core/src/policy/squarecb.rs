use rand::RngCore;

use crate::error::{CcbError, Result};
use crate::igw::igw;
use crate::oracle::RegressionOracle;
use crate::types::{sample_action, ActionIndex, ContextId, SimplexDistribution};

/// Unconstrained SquareCB with a fixed exploration scale. The oracle predicts
/// losses.
#[derive(Debug, Clone)]
pub struct SquareCbState<O> {
    oracle: O,
    gamma: f64,
    round: u64,
    pending: Option<(ContextId, ActionIndex)>,
}

impl<O: RegressionOracle> SquareCbState<O> {
    pub fn new(oracle: O, gamma: f64) -> Result<Self> {
        if !(gamma.is_finite() && gamma > 0.0) {
            return Err(CcbError::Config(format!("γ must be positive, got {gamma}")));
        }
        Ok(Self {
            oracle,
            gamma,
            round: 0,
            pending: None,
        })
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn round(&self) -> u64 {
        self.round
    }

    pub fn oracle(&self) -> &O {
        &self.oracle
    }

    /// Chooses an action for `x`. A repeated call before feedback replaces
    /// the pending decision.
    pub fn step<R: RngCore + ?Sized>(
        &mut self,
        x: ContextId,
        rng: &mut R,
    ) -> Result<(ActionIndex, SimplexDistribution)> {
        let losses = self.oracle.predict(x);
        let p = igw(&losses, self.gamma)?;
        let a = sample_action(&p.dist, rng);
        self.pending = Some((x, a));
        Ok((a, p.dist))
    }

    pub fn feedback(&mut self, x: ContextId, a: ActionIndex, loss: f64) -> Result<()> {
        match self.pending {
            Some(p) if p == (x, a) => {}
            Some((px, pa)) => {
                return Err(CcbError::Sequencing(format!(
                    "feedback for ({x}, {a}) but the pending decision is ({px}, {pa})"
                )))
            }
            None => return Err(CcbError::Sequencing("feedback without a pending decision".into())),
        }
        self.oracle.update(x, a, loss)?;
        self.pending = None;
        self.round += 1;
        Ok(())
    }
}
