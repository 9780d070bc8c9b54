//! SquareCB and its constrained extension driven by Lyapunov surrogates.

mod ccb;
mod check;
mod squarecb;

pub use ccb::{exploration_scale, surrogate_round, CcbState, RoundDecision};
pub use check::{surrogate_slack, SurrogateTruth};
pub use squarecb::SquareCbState;
