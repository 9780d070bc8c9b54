//! Constrained contextual bandits with online regression oracles.
//!
//! The learner keeps one cumulative-cost queue per resource, turns the
//! oracle estimates into a single surrogate reward through the slope of a
//! Lyapunov potential at the queue, and explores with inverse gap
//! weighting. [`harness`] wires this to simulated environments from [`env`].

pub mod env;
pub mod error;
pub mod harness;
pub mod igw;
pub mod lyapunov;
pub mod oracle;
pub mod policy;
pub mod rng;
pub mod types;

pub use error::{CcbError, Result};
