use serde::{Deserialize, Serialize};

use super::benchmark::benchmark_per_context;
use super::ProblemSpec;
use crate::error::{CcbError, Result};
use crate::igw::argmax;
use crate::rng::{stream, Stream, StreamRng};
use crate::types::{action_for_uniform, validate_simplex, ActionIndex, ContextId, Seed, SimplexDistribution};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AdversaryStrategy {
    /// Serve the context where the learner's empirical play trails the best
    /// feasible per-context reward the most.
    #[default]
    LargestRewardGap,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ContextProcess {
    Iid {
        probs: Vec<f64>,
    },
    Cyclic {
        sequence: Vec<usize>,
    },
    AdaptiveAdversary {
        #[serde(default)]
        strategy: AdversaryStrategy,
    },
}

impl ContextProcess {
    pub fn validate(&self, n_contexts: usize) -> Result<()> {
        match self {
            ContextProcess::Iid { probs } => {
                if probs.len() != n_contexts {
                    return Err(CcbError::Config(format!(
                        "IID distribution has {} entries for {n_contexts} contexts",
                        probs.len()
                    )));
                }
                validate_simplex(probs.clone()).map(|_| ())
            }
            ContextProcess::Cyclic { sequence } => {
                if sequence.is_empty() {
                    return Err(CcbError::Config("cyclic sequence is empty".into()));
                }
                match sequence.iter().find(|&&x| x >= n_contexts) {
                    Some(x) => Err(CcbError::Config(format!("cyclic sequence names context {x}"))),
                    None => Ok(()),
                }
            }
            ContextProcess::AdaptiveAdversary { .. } => Ok(()),
        }
    }

    /// Long-run context frequencies when they exist in advance, uniform for
    /// the adaptive adversary.
    pub fn nominal_weights(&self, n_contexts: usize) -> Vec<f64> {
        match self {
            ContextProcess::Iid { probs } => probs.clone(),
            ContextProcess::Cyclic { sequence } => {
                let mut w = vec![0.0; n_contexts];
                for &x in sequence {
                    w[x] += 1.0 / sequence.len() as f64;
                }
                w
            }
            ContextProcess::AdaptiveAdversary { .. } => vec![1.0 / n_contexts as f64; n_contexts],
        }
    }
}

/// Stateful context generator for one run.
#[derive(Debug, Clone)]
pub struct ContextSampler {
    process: ContextProcess,
    iid: Option<SimplexDistribution>,
    rng: StreamRng,
    round: u64,
    /// Per-context feasible benchmark value, used by the adversary.
    targets: Vec<f64>,
    rewards: Vec<Vec<f64>>,
    counts: Vec<Vec<u64>>,
}

impl ContextSampler {
    pub fn new(spec: &ProblemSpec, seed: Seed) -> Result<Self> {
        spec.context_process.validate(spec.n_contexts())?;
        let iid = match &spec.context_process {
            ContextProcess::Iid { probs } => Some(validate_simplex(probs.clone())?),
            _ => None,
        };
        let n = spec.n_contexts();
        let targets = (0..n)
            .map(|x| {
                let x = ContextId(x);
                let f = spec.f_star.row(x);
                match benchmark_per_context(f, &spec.cost_rows(x), 0.0) {
                    Ok((_, v)) => v,
                    Err(_) => f[argmax(f)],
                }
            })
            .collect();
        Ok(Self {
            process: spec.context_process.clone(),
            iid,
            rng: stream(seed, Stream::Context),
            round: 0,
            targets,
            rewards: spec.f_star.rows().map(<[f64]>::to_vec).collect(),
            counts: vec![vec![0; spec.k()]; n],
        })
    }

    /// The context of the next round. Must be followed by [`observe`](Self::observe)
    /// before the adversary can react to the action.
    pub fn next_context(&mut self) -> ContextId {
        let t = self.round;
        self.round += 1;
        match &self.process {
            ContextProcess::Iid { .. } => {
                let dist = self.iid.as_ref().expect("validated IID distribution");
                let u: f64 = rand::Rng::random(&mut self.rng);
                ContextId(action_for_uniform(dist, u).0)
            }
            ContextProcess::Cyclic { sequence } => ContextId(sequence[(t % sequence.len() as u64) as usize]),
            ContextProcess::AdaptiveAdversary { strategy } => match strategy {
                AdversaryStrategy::LargestRewardGap => ContextId(argmax(&self.gaps())),
            },
        }
    }

    /// Records the learner's action at `x`.
    pub fn observe(&mut self, x: ContextId, a: ActionIndex) {
        self.counts[x.0][a.0] += 1;
    }

    fn gaps(&self) -> Vec<f64> {
        self.counts
            .iter()
            .zip(&self.rewards)
            .zip(&self.targets)
            .map(|((counts, f), target)| {
                let total: u64 = counts.iter().sum();
                let achieved = if total == 0 {
                    f.iter().sum::<f64>() / f.len() as f64
                } else {
                    counts.iter().zip(f).map(|(&c, v)| c as f64 * v).sum::<f64>() / total as f64
                };
                target - achieved
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::env::NoiseModel;
    use crate::types::MeanTable;

    fn spec(process: ContextProcess, n: usize) -> ProblemSpec {
        let rows: Vec<Vec<f64>> = (0..n).map(|x| vec![0.1 * x as f64, 0.5]).collect();
        ProblemSpec {
            f_star: MeanTable::new(rows).unwrap(),
            g_star: vec![MeanTable::constant(n, 2, 0.0).unwrap()],
            context_process: process,
            reward_noise: NoiseModel::Deterministic,
            cost_noise: vec![NoiseModel::Deterministic],
            budget: None,
        }
    }

    #[test]
    fn cyclic_wraps() {
        let s = spec(ContextProcess::Cyclic { sequence: vec![0, 1] }, 2);
        let mut c = ContextSampler::new(&s, Seed(0)).unwrap();
        let xs: Vec<usize> = (0..6).map(|_| c.next_context().0).collect();
        assert_eq!(xs[5], 1);
        assert_eq!(xs, vec![0, 1, 0, 1, 0, 1]);
    }

    #[test]
    fn iid_frequencies() {
        let s = spec(
            ContextProcess::Iid {
                probs: vec![1.0 / 3.0; 3],
            },
            3,
        );
        let mut c = ContextSampler::new(&s, Seed(5)).unwrap();
        let n = 100_000;
        let mut counts = [0usize; 3];
        for _ in 0..n {
            counts[c.next_context().0] += 1;
        }
        for k in counts {
            assert!((k as f64 / n as f64 - 1.0 / 3.0).abs() < 0.01);
        }
    }

    #[test]
    fn adversary_replays_and_reacts() {
        let s = spec(
            ContextProcess::AdaptiveAdversary {
                strategy: AdversaryStrategy::LargestRewardGap,
            },
            3,
        );
        let play = |seed| {
            let mut c = ContextSampler::new(&s, Seed(seed)).unwrap();
            (0..30)
                .map(|t| {
                    let x = c.next_context();
                    c.observe(x, ActionIndex(t % 2));
                    x.0
                })
                .collect::<Vec<_>>()
        };
        assert_eq!(play(1), play(2));
        // context 0 has the largest initial gap: target 0.5 vs uniform 0.25
        assert_eq!(play(1)[0], 0);
        let mut c = ContextSampler::new(&s, Seed(0)).unwrap();
        let x = c.next_context();
        c.observe(x, ActionIndex(1));
        assert_ne!(c.next_context(), x);
    }

    #[test]
    fn validation() {
        assert!(ContextProcess::Cyclic { sequence: vec![] }.validate(2).is_err());
        assert!(ContextProcess::Cyclic { sequence: vec![2] }.validate(2).is_err());
        assert!(ContextProcess::Iid { probs: vec![0.5, 0.6] }.validate(2).is_err());
        assert!(ContextProcess::Iid { probs: vec![1.0] }.validate(2).is_err());
    }

    #[test]
    fn nominal_weights_follow_the_cycle() {
        let w = ContextProcess::Cyclic {
            sequence: vec![0, 1, 1, 1],
        }
        .nominal_weights(3);
        assert_eq!(w, vec![0.25, 0.75, 0.0]);
    }
}
