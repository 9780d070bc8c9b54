//! Shared domain types: context and action indices, distributions over
//! actions, realized outcomes and mean tables.

use std::fmt;

use rand::{Rng, RngCore};
use serde::{Deserialize, Serialize};

use crate::error::{CcbError, Result};

/// Tolerance on `|sum - 1|` accepted (and re-normalized) by [`validate_simplex`].
pub const SIMPLEX_TOLERANCE: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ContextId(pub usize);

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ActionIndex(pub usize);

impl fmt::Display for ContextId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.fmt(f)
    }
}

impl fmt::Display for ActionIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.fmt(f)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Seed(pub u64);

/// A probability vector over `K` actions. Entries are non-negative and sum to
/// one within `1e-10` after construction.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(transparent)]
pub struct SimplexDistribution {
    probs: Vec<f64>,
}

impl SimplexDistribution {
    pub fn point_mass(k: usize, action: ActionIndex) -> Self {
        assert!(action.0 < k, "action {} out of range for K={k}", action.0);
        let mut probs = vec![0.0; k];
        probs[action.0] = 1.0;
        Self { probs }
    }

    pub fn uniform(k: usize) -> Self {
        assert!(k > 0, "uniform distribution needs K >= 1");
        Self {
            probs: vec![1.0 / k as f64; k],
        }
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }

    pub fn prob(&self, a: ActionIndex) -> f64 {
        self.probs[a.0]
    }

    /// `<values, p>`.
    pub fn expect(&self, values: &[f64]) -> f64 {
        debug_assert_eq!(values.len(), self.probs.len());
        self.probs.iter().zip(values).map(|(p, v)| p * v).sum()
    }

    /// Number of actions with strictly positive probability.
    pub fn support_size(&self) -> usize {
        self.probs.iter().filter(|&&p| p > 0.0).count()
    }
}

impl<'de> Deserialize<'de> for SimplexDistribution {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let probs = Vec::<f64>::deserialize(d)?;
        validate_simplex(probs).map_err(serde::de::Error::custom)
    }
}

/// Checks that `probs` is a probability vector. Sums within
/// [`SIMPLEX_TOLERANCE`] of one are re-normalized; anything further off, any
/// negative or non-finite entry, and the empty vector are rejected.
pub fn validate_simplex(probs: Vec<f64>) -> Result<SimplexDistribution> {
    if probs.is_empty() {
        return Err(CcbError::Validation("empty probability vector".into()));
    }
    if let Some((i, p)) = probs.iter().enumerate().find(|(_, p)| !p.is_finite()) {
        return Err(CcbError::Validation(format!("entry {i} is not finite ({p})")));
    }
    if let Some((i, p)) = probs.iter().enumerate().find(|(_, &p)| p < 0.0) {
        return Err(CcbError::Validation(format!("entry {i} is negative ({p})")));
    }
    let sum: f64 = probs.iter().sum();
    if (sum - 1.0).abs() > SIMPLEX_TOLERANCE {
        return Err(CcbError::Validation(format!(
            "probabilities sum to {sum}, outside 1 ± {SIMPLEX_TOLERANCE}"
        )));
    }
    let probs = if sum == 1.0 {
        probs
    } else {
        probs.into_iter().map(|p| p / sum).collect()
    };
    Ok(SimplexDistribution { probs })
}

/// Cumulative-sum inversion: the smallest `a` with `sum_{b<=a} p[b] > u`.
///
/// If rounding leaves the total below `u`, the last action with positive
/// mass is returned.
pub fn action_for_uniform(dist: &SimplexDistribution, u: f64) -> ActionIndex {
    let mut acc = 0.0;
    let mut last_positive = 0;
    for (a, &p) in dist.probs.iter().enumerate() {
        if p > 0.0 {
            last_positive = a;
        }
        acc += p;
        if acc > u {
            return ActionIndex(a);
        }
    }
    ActionIndex(last_positive)
}

/// Draws `a ~ dist` with exactly one uniform draw from `rng`.
pub fn sample_action<R: RngCore + ?Sized>(dist: &SimplexDistribution, rng: &mut R) -> ActionIndex {
    let u: f64 = rng.random();
    action_for_uniform(dist, u)
}

/// Realized reward and costs of one round.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Outcome {
    pub reward: f64,
    pub costs: Vec<f64>,
}

impl Outcome {
    pub fn new(reward: f64, costs: Vec<f64>) -> Result<Self> {
        let in_range = |v: f64| v.is_finite() && (-1.0..=1.0).contains(&v);
        if !in_range(reward) {
            return Err(CcbError::Validation(format!("reward {reward} outside [-1, 1]")));
        }
        if let Some(c) = costs.iter().find(|&&c| !in_range(c)) {
            return Err(CcbError::Validation(format!("cost {c} outside [-1, 1]")));
        }
        Ok(Self { reward, costs })
    }
}

/// An `n_contexts x K` table of conditional means with entries in `[-1, 1]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<Vec<f64>>", into = "Vec<Vec<f64>>")]
pub struct MeanTable {
    n_contexts: usize,
    k: usize,
    values: Vec<f64>,
}

impl MeanTable {
    pub fn new(rows: Vec<Vec<f64>>) -> Result<Self> {
        let n_contexts = rows.len();
        let k = rows.first().map_or(0, Vec::len);
        if n_contexts == 0 || k == 0 {
            return Err(CcbError::Validation("mean table must be non-empty".into()));
        }
        if rows.iter().any(|r| r.len() != k) {
            return Err(CcbError::Validation("mean table rows have unequal lengths".into()));
        }
        let values: Vec<f64> = rows.into_iter().flatten().collect();
        if let Some(v) = values.iter().find(|v| !(v.is_finite() && (-1.0..=1.0).contains(*v))) {
            return Err(CcbError::Validation(format!("mean table entry {v} outside [-1, 1]")));
        }
        Ok(Self { n_contexts, k, values })
    }

    pub fn constant(n_contexts: usize, k: usize, value: f64) -> Result<Self> {
        Self::new(vec![vec![value; k]; n_contexts])
    }

    pub fn n_contexts(&self) -> usize {
        self.n_contexts
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn row(&self, x: ContextId) -> &[f64] {
        &self.values[x.0 * self.k..(x.0 + 1) * self.k]
    }

    pub fn get(&self, x: ContextId, a: ActionIndex) -> f64 {
        self.values[x.0 * self.k + a.0]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.values.chunks(self.k)
    }

    /// Entry-wise `max(0, v)`.
    pub fn positive_part(&self) -> Self {
        Self {
            values: self.values.iter().map(|v| v.max(0.0)).collect(),
            ..self.clone()
        }
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Result<Self> {
        Self::new(self.rows().map(|r| r.iter().map(|&v| f(v)).collect()).collect())
    }
}

impl TryFrom<Vec<Vec<f64>>> for MeanTable {
    type Error = CcbError;

    fn try_from(rows: Vec<Vec<f64>>) -> Result<Self> {
        Self::new(rows)
    }
}

impl From<MeanTable> for Vec<Vec<f64>> {
    fn from(t: MeanTable) -> Self {
        t.rows().map(<[f64]>::to_vec).collect()
    }
}
