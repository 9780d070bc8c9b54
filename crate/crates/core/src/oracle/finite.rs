use rand::Rng;

use super::{clip_unit, RegressionOracle};
use crate::error::{CcbError, Result};
use crate::types::{ActionIndex, ContextId, MeanTable};

/// Learning rate for squared loss on `[-1, 1]`: the loss is
/// `1/(2·2²)`-exp-concave, so weighted-mean aggregation keeps the cumulative
/// loss within `8 ln |F|` of the best candidate on every sequence.
pub const FINITE_CLASS_ETA: f64 = 1.0 / 8.0;

/// Exponential-weights aggregation over a finite class of candidate tables.
#[derive(Debug, Clone)]
pub struct FiniteClassOracle {
    candidates: Vec<MeanTable>,
    log_weights: Vec<f64>,
    eta: f64,
}

impl FiniteClassOracle {
    pub fn new(candidates: Vec<MeanTable>, eta: f64) -> Result<Self> {
        let Some(first) = candidates.first() else {
            return Err(CcbError::Config(
                "finite class must contain at least one candidate".into(),
            ));
        };
        if candidates
            .iter()
            .any(|c| c.k() != first.k() || c.n_contexts() != first.n_contexts())
        {
            return Err(CcbError::Config("finite class candidates have different shapes".into()));
        }
        if !(eta.is_finite() && eta > 0.0) {
            return Err(CcbError::Config(format!("learning rate must be positive, got {eta}")));
        }
        Ok(Self {
            log_weights: vec![0.0; candidates.len()],
            candidates,
            eta,
        })
    }

    /// A class of `size` tables containing `truth` at a random position; the
    /// other members are `truth` plus uniform noise of half-width `spread`,
    /// clipped to `[-1, 1]`. Returns the class and the index of `truth`.
    pub fn class_around<R: Rng + ?Sized>(
        truth: &MeanTable,
        size: usize,
        spread: f64,
        rng: &mut R,
    ) -> (Vec<MeanTable>, usize) {
        let size = size.max(1);
        let truth_at = rng.random_range(0..size);
        let class = (0..size)
            .map(|i| {
                if i == truth_at {
                    truth.clone()
                } else {
                    let rows = truth
                        .rows()
                        .map(|r| {
                            r.iter()
                                .map(|&v| clip_unit(v + spread * (2.0 * rng.random::<f64>() - 1.0)))
                                .collect()
                        })
                        .collect();
                    MeanTable::new(rows).expect("clipped perturbation stays in range")
                }
            })
            .collect();
        (class, truth_at)
    }

    pub fn class_size(&self) -> usize {
        self.candidates.len()
    }

    pub fn eta(&self) -> f64 {
        self.eta
    }

    pub fn log_weights(&self) -> &[f64] {
        &self.log_weights
    }

    pub fn candidates(&self) -> &[MeanTable] {
        &self.candidates
    }

    /// Normalized weights (softmax of the log-weights).
    pub fn weights(&self) -> Vec<f64> {
        let max = self.log_weights.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let raw: Vec<f64> = self.log_weights.iter().map(|w| (w - max).exp()).collect();
        let total: f64 = raw.iter().sum();
        raw.into_iter().map(|w| w / total).collect()
    }

    /// Candidate with the largest weight (lowest index on ties).
    pub fn leader(&self) -> usize {
        crate::igw::argmax(&self.log_weights)
    }
}

impl RegressionOracle for FiniteClassOracle {
    fn k(&self) -> usize {
        self.candidates[0].k()
    }

    fn predict(&self, x: ContextId) -> Vec<f64> {
        let weights = self.weights();
        let mut out = vec![0.0; self.k()];
        for (w, table) in weights.iter().zip(&self.candidates) {
            for (o, v) in out.iter_mut().zip(table.row(x)) {
                *o += w * v;
            }
        }
        out.into_iter().map(clip_unit).collect()
    }

    fn update(&mut self, x: ContextId, a: ActionIndex, y: f64) -> Result<()> {
        if !(y.is_finite() && (-1.0..=1.0).contains(&y)) {
            return Err(CcbError::Validation(format!("observation {y} outside [-1, 1]")));
        }
        for (lw, table) in self.log_weights.iter_mut().zip(&self.candidates) {
            let err = table.get(x, a) - y;
            *lw -= self.eta * err * err;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{stream, Stream};
    use crate::types::Seed;

    fn table(v: f64) -> MeanTable {
        MeanTable::constant(2, 3, v).unwrap()
    }

    #[test]
    fn singleton_class_predicts_its_member() {
        let t = MeanTable::new(vec![vec![0.1, -0.7, 0.3], vec![1.0, 0.0, -1.0]]).unwrap();
        let o = FiniteClassOracle::new(vec![t.clone()], FINITE_CLASS_ETA).unwrap();
        assert_eq!(o.predict(ContextId(0)), t.row(ContextId(0)));
        assert_eq!(o.predict(ContextId(1)), t.row(ContextId(1)));
    }

    #[test]
    fn symmetric_pair_predicts_zero() {
        let o = FiniteClassOracle::new(vec![table(-1.0), table(1.0)], FINITE_CLASS_ETA).unwrap();
        assert_eq!(o.predict(ContextId(0)), vec![0.0; 3]);
    }

    #[test]
    fn exact_candidate_loses_nothing() {
        let mut o = FiniteClassOracle::new(vec![table(0.5), table(-0.5)], FINITE_CLASS_ETA).unwrap();
        o.update(ContextId(0), ActionIndex(1), 0.5).unwrap();
        assert_eq!(o.log_weights()[0], 0.0);
        assert_eq!(o.log_weights()[1], -FINITE_CLASS_ETA);
    }

    #[test]
    fn gap_grows_by_four_eta() {
        // candidates at y and y ± 2 (here y = -1 and +1)
        let mut o = FiniteClassOracle::new(vec![table(-1.0), table(1.0)], FINITE_CLASS_ETA).unwrap();
        let before = o.log_weights()[0] - o.log_weights()[1];
        o.update(ContextId(1), ActionIndex(2), -1.0).unwrap();
        let after = o.log_weights()[0] - o.log_weights()[1];
        assert!((after - before - 4.0 * FINITE_CLASS_ETA).abs() < 1e-15);
    }

    #[test]
    fn out_of_range_observation_rejected() {
        let mut o = FiniteClassOracle::new(vec![table(0.0)], FINITE_CLASS_ETA).unwrap();
        assert!(o.update(ContextId(0), ActionIndex(0), 1.5).is_err());
        assert!(o.update(ContextId(0), ActionIndex(0), f64::NAN).is_err());
    }

    #[test]
    fn rejects_bad_classes() {
        assert!(FiniteClassOracle::new(vec![], FINITE_CLASS_ETA).is_err());
        let odd = MeanTable::constant(1, 3, 0.0).unwrap();
        assert!(FiniteClassOracle::new(vec![table(0.0), odd], FINITE_CLASS_ETA).is_err());
        assert!(FiniteClassOracle::new(vec![table(0.0)], 0.0).is_err());
    }

    #[test]
    fn predict_is_pure() {
        let mut rng = stream(Seed(3), Stream::Fuzz);
        let truth = table(0.2);
        let (class, _) = FiniteClassOracle::class_around(&truth, 8, 0.6, &mut rng);
        let mut o = FiniteClassOracle::new(class, FINITE_CLASS_ETA).unwrap();
        o.update(ContextId(0), ActionIndex(1), 0.9).unwrap();
        let a = o.predict(ContextId(1));
        let b = o.predict(ContextId(1));
        assert_eq!(a, b);
        let w: f64 = o.weights().iter().sum();
        assert!((w - 1.0).abs() < 1e-10);
    }

    #[test]
    fn leader_identifies_generating_candidate() {
        let mut rng = stream(Seed(11), Stream::Fuzz);
        let truth = MeanTable::new(vec![vec![0.3, -0.2, 0.6], vec![-0.5, 0.1, 0.0]]).unwrap();
        let (class, j) = FiniteClassOracle::class_around(&truth, 10, 0.8, &mut rng);
        let mut o = FiniteClassOracle::new(class, FINITE_CLASS_ETA).unwrap();
        for t in 0..1000 {
            let x = ContextId(t % 2);
            let a = ActionIndex(rng.random_range(0..3));
            let mean = truth.get(x, a);
            let y = if rng.random::<f64>() < (1.0 + mean) / 2.0 {
                1.0
            } else {
                -1.0
            };
            o.update(x, a, y).unwrap();
        }
        assert_eq!(o.leader(), j);
    }

    #[test]
    fn class_contains_truth() {
        let mut rng = stream(Seed(5), Stream::Class(0));
        let truth = table(0.4);
        let (class, j) = FiniteClassOracle::class_around(&truth, 16, 0.5, &mut rng);
        assert_eq!(class.len(), 16);
        assert_eq!(class[j], truth);
    }
}
