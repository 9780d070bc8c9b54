use nalgebra::{DMatrix, DVector};
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{clip_unit, RegressionOracle};
use crate::error::{CcbError, Result};
use crate::types::{ActionIndex, ContextId, MeanTable};

/// Feature vectors attached to every `(context, action)` pair.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<Vec<Vec<f64>>>", into = "Vec<Vec<Vec<f64>>>")]
pub struct LinearFeatures {
    n_contexts: usize,
    k: usize,
    dim: usize,
    vectors: Vec<DVector<f64>>,
}

impl LinearFeatures {
    /// `raw[x][a]` is the feature of action `a` at context `x`.
    pub fn new(raw: Vec<Vec<Vec<f64>>>) -> Result<Self> {
        let n_contexts = raw.len();
        let k = raw.first().map_or(0, Vec::len);
        let dim = raw.first().and_then(|r| r.first()).map_or(0, Vec::len);
        if n_contexts == 0 || k == 0 || dim == 0 {
            return Err(CcbError::Config("feature map must be non-empty".into()));
        }
        let mut vectors = Vec::with_capacity(n_contexts * k);
        for row in raw {
            if row.len() != k {
                return Err(CcbError::Config("feature rows have unequal action counts".into()));
            }
            for v in row {
                if v.len() != dim || v.iter().any(|x| !x.is_finite()) {
                    return Err(CcbError::Config(
                        "feature vectors must be finite with equal length".into(),
                    ));
                }
                vectors.push(DVector::from_vec(v));
            }
        }
        Ok(Self {
            n_contexts,
            k,
            dim,
            vectors,
        })
    }

    /// Random features in the unit ball (each coordinate uniform, then
    /// scaled by `1/√d`), suitable for a realizable model with `‖θ‖ ≤ 1`.
    pub fn random<R: Rng + ?Sized>(n_contexts: usize, k: usize, dim: usize, rng: &mut R) -> Self {
        let scale = 1.0 / (dim as f64).sqrt();
        let raw = (0..n_contexts)
            .map(|_| {
                (0..k)
                    .map(|_| (0..dim).map(|_| scale * (2.0 * rng.random::<f64>() - 1.0)).collect())
                    .collect()
            })
            .collect();
        Self::new(raw).expect("random features are well formed")
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn n_contexts(&self) -> usize {
        self.n_contexts
    }

    pub fn feature(&self, x: ContextId, a: ActionIndex) -> &DVector<f64> {
        &self.vectors[x.0 * self.k + a.0]
    }

    /// Mean table of the linear model `θ`, clipped to `[-1, 1]`.
    pub fn table_for(&self, theta: &[f64]) -> Result<MeanTable> {
        if theta.len() != self.dim {
            return Err(CcbError::Config("parameter dimension does not match features".into()));
        }
        let theta = DVector::from_column_slice(theta);
        let rows = (0..self.n_contexts)
            .map(|x| {
                (0..self.k)
                    .map(|a| clip_unit(self.feature(ContextId(x), ActionIndex(a)).dot(&theta)))
                    .collect()
            })
            .collect();
        MeanTable::new(rows)
    }
}

impl TryFrom<Vec<Vec<Vec<f64>>>> for LinearFeatures {
    type Error = CcbError;

    fn try_from(raw: Vec<Vec<Vec<f64>>>) -> Result<Self> {
        Self::new(raw)
    }
}

impl From<LinearFeatures> for Vec<Vec<Vec<f64>>> {
    fn from(f: LinearFeatures) -> Self {
        f.vectors
            .chunks(f.k)
            .map(|row| row.iter().map(|v| v.iter().copied().collect()).collect())
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LinearVariant {
    /// Regularized least squares on past observations only.
    Ridge,
    /// Vovk–Azoury–Warmuth: the queried feature also enters the Gram matrix.
    #[default]
    Vaw,
}

/// Online regularized least squares over fixed features.
#[derive(Debug, Clone)]
pub struct LinearOracle {
    features: LinearFeatures,
    regularizer: f64,
    variant: LinearVariant,
    gram: DMatrix<f64>,
    moment: DVector<f64>,
}

impl LinearOracle {
    pub fn new(features: LinearFeatures, regularizer: f64, variant: LinearVariant) -> Result<Self> {
        if !(regularizer.is_finite() && regularizer > 0.0) {
            return Err(CcbError::Config(format!(
                "regularizer must be positive, got {regularizer}"
            )));
        }
        let d = features.dim();
        Ok(Self {
            gram: DMatrix::identity(d, d) * regularizer,
            moment: DVector::zeros(d),
            features,
            regularizer,
            variant,
        })
    }

    pub fn regularizer(&self) -> f64 {
        self.regularizer
    }

    pub fn features(&self) -> &LinearFeatures {
        &self.features
    }
}

impl RegressionOracle for LinearOracle {
    fn k(&self) -> usize {
        self.features.k()
    }

    fn predict(&self, x: ContextId) -> Vec<f64> {
        // gram = λI + Σφφᵀ stays symmetric positive definite
        let chol = self
            .gram
            .clone()
            .cholesky()
            .expect("regularized Gram matrix is positive definite");
        let theta = chol.solve(&self.moment);
        (0..self.k())
            .map(|a| {
                let phi = self.features.feature(x, ActionIndex(a));
                let ridge = phi.dot(&theta);
                let pred = match self.variant {
                    LinearVariant::Ridge => ridge,
                    // (G + φφᵀ)⁻¹ via Sherman–Morrison, projected on φ
                    LinearVariant::Vaw => {
                        let leverage = phi.dot(&chol.solve(phi));
                        ridge / (1.0 + leverage)
                    }
                };
                clip_unit(pred)
            })
            .collect()
    }

    fn update(&mut self, x: ContextId, a: ActionIndex, y: f64) -> Result<()> {
        if !(y.is_finite() && (-1.0..=1.0).contains(&y)) {
            return Err(CcbError::Validation(format!("observation {y} outside [-1, 1]")));
        }
        let phi = self.features.feature(x, a);
        self.gram.ger(1.0, phi, phi, 1.0);
        self.moment.axpy(y, phi, 1.0);
        Ok(())
    }
}
