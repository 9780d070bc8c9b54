use rand::RngCore;
use serde::Serialize;

use crate::error::{CcbError, Result};
use crate::igw::{igw, IgwResult};
use crate::lyapunov::{z_of, LyapunovFunction, RegimeParams};
use crate::oracle::RegressionOracle;
use crate::types::{sample_action, ActionIndex, ContextId, Outcome};

/// Everything decided in one round, kept for feedback and diagnostics.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RoundDecision {
    pub context: ContextId,
    pub reward_pred: Vec<f64>,
    pub cost_preds: Vec<Vec<f64>>,
    /// `Φ′(Q_i(t−1))` per resource.
    pub multipliers: Vec<f64>,
    /// Estimated surrogate reward `L̂_t`.
    pub surrogate_hat: Vec<f64>,
    pub z: f64,
    pub z_sum: f64,
    pub gamma: f64,
    pub igw: IgwResult,
    pub action: ActionIndex,
}

/// `γ_t = (1/(2 z_t)) √((K/U_T) Σ_{τ≤t} z_τ)`.
pub fn exploration_scale(k: usize, u_t: f64, z: f64, z_sum: f64) -> f64 {
    (k as f64 / u_t * z_sum).sqrt() / (2.0 * z)
}

/// Surrogate `L̂(a) = f̂(a) − Σ_i m_i ĝ_i(a)` and the IGW distribution over the
/// converted loss `max_b L̂(b) − L̂(a)`.
pub fn surrogate_round(
    reward_pred: &[f64],
    cost_preds: &[Vec<f64>],
    multipliers: &[f64],
    gamma: f64,
) -> Result<(Vec<f64>, IgwResult)> {
    let mut surrogate = reward_pred.to_vec();
    for (m, g) in multipliers.iter().zip(cost_preds) {
        for (l, gv) in surrogate.iter_mut().zip(g) {
            *l -= m * gv;
        }
    }
    let top = surrogate.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let losses: Vec<f64> = surrogate.iter().map(|l| top - l).collect();
    let dist = igw(&losses, gamma)?;
    Ok((surrogate, dist))
}

/// Full mutable state of the constrained learner.
#[derive(Debug, Clone)]
pub struct CcbState<O> {
    reward_oracle: O,
    cost_oracles: Vec<O>,
    queues: Vec<f64>,
    z_sum: f64,
    round: u64,
    phi: LyapunovFunction,
    params: RegimeParams,
    positive_part: bool,
    pending: Option<(ContextId, ActionIndex)>,
}

impl<O: RegressionOracle> CcbState<O> {
    pub fn new(reward_oracle: O, cost_oracles: Vec<O>, phi: LyapunovFunction, params: RegimeParams) -> Result<Self> {
        params.validate()?;
        if cost_oracles.is_empty() {
            return Err(CcbError::Config("at least one cost oracle is required".into()));
        }
        let k = reward_oracle.k();
        if k != params.k || cost_oracles.iter().any(|o| o.k() != k) {
            return Err(CcbError::Config("oracle action counts disagree with K".into()));
        }
        Ok(Self {
            queues: vec![0.0; cost_oracles.len()],
            reward_oracle,
            cost_oracles,
            z_sum: 0.0,
            round: 0,
            phi,
            positive_part: params.regime.positive_part_costs(),
            params,
            pending: None,
        })
    }

    pub fn queues(&self) -> &[f64] {
        &self.queues
    }

    pub fn z_sum(&self) -> f64 {
        self.z_sum
    }

    pub fn round(&self) -> u64 {
        self.round
    }

    pub fn phi(&self) -> &LyapunovFunction {
        &self.phi
    }

    pub fn params(&self) -> &RegimeParams {
        &self.params
    }

    pub fn positive_part_costs(&self) -> bool {
        self.positive_part
    }

    pub fn reward_oracle(&self) -> &O {
        &self.reward_oracle
    }

    pub fn cost_oracles(&self) -> &[O] {
        &self.cost_oracles
    }

    /// Costs as they enter the queues and the cost oracles.
    pub fn effective_costs(&self, outcome: &Outcome) -> Vec<f64> {
        outcome
            .costs
            .iter()
            .map(|&c| if self.positive_part { c.max(0.0) } else { c })
            .collect()
    }

    pub fn select<R: RngCore + ?Sized>(&mut self, x: ContextId, rng: &mut R) -> Result<RoundDecision> {
        if let Some((px, pa)) = self.pending {
            return Err(CcbError::Sequencing(format!(
                "round {} still awaits feedback for ({px}, {pa})",
                self.round + 1
            )));
        }
        if self.phi.is_exponential() {
            if let Some(q) = self.queues.iter().find(|&&q| q < 0.0) {
                return Err(CcbError::Invariant(format!(
                    "exponential potential with negative queue {q}"
                )));
            }
        }

        let reward_pred = self.reward_oracle.predict(x);
        let cost_preds: Vec<Vec<f64>> = self.cost_oracles.iter().map(|o| o.predict(x)).collect();
        let multipliers: Vec<f64> = self.queues.iter().map(|&q| self.phi.derivative(q)).collect();

        let z = z_of(&self.phi, &self.queues);
        let z_sum = self.z_sum + z;
        let gamma = exploration_scale(self.params.k, self.params.u_t, z, z_sum);
        let (surrogate_hat, igw) = surrogate_round(&reward_pred, &cost_preds, &multipliers, gamma)?;
        let action = sample_action(&igw.dist, rng);

        self.z_sum = z_sum;
        self.pending = Some((x, action));
        Ok(RoundDecision {
            context: x,
            reward_pred,
            cost_preds,
            multipliers,
            surrogate_hat,
            z,
            z_sum,
            gamma,
            igw,
            action,
        })
    }

    /// Applies the realized outcome of the pending decision.
    pub fn update(&mut self, x: ContextId, decision: &RoundDecision, outcome: &Outcome) -> Result<()> {
        let a = decision.action;
        if self.pending != Some((x, a)) || decision.context != x {
            return Err(CcbError::Sequencing(format!(
                "update for ({x}, {a}) does not match the pending decision {:?}",
                self.pending
            )));
        }
        if outcome.costs.len() != self.queues.len() {
            return Err(CcbError::Validation(format!(
                "outcome has {} costs, expected {}",
                outcome.costs.len(),
                self.queues.len()
            )));
        }
        let effective = self.effective_costs(outcome);
        self.reward_oracle.update(x, a, outcome.reward)?;
        for ((oracle, q), &c) in self.cost_oracles.iter_mut().zip(&mut self.queues).zip(&effective) {
            oracle.update(x, a, c)?;
            *q += c;
        }
        self.pending = None;
        self.round += 1;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lyapunov::{build_lyapunov, Regime};
    use crate::oracle::{FiniteClassOracle, FINITE_CLASS_ETA};
    use crate::rng::{stream, Stream};
    use crate::types::{MeanTable, Seed};

    fn fixed(rows: Vec<Vec<f64>>) -> FiniteClassOracle {
        FiniteClassOracle::new(vec![MeanTable::new(rows).unwrap()], FINITE_CLASS_ETA).unwrap()
    }

    fn params(regime: Regime) -> RegimeParams {
        RegimeParams {
            regime,
            k: 4,
            horizon: 100,
            u_t: 1.0,
            budget: Some(10.0),
            epsilon: Some(0.1),
        }
    }

    fn state(regime: Regime) -> CcbState<FiniteClassOracle> {
        let p = params(regime);
        CcbState::new(
            fixed(vec![vec![0.9, 0.1, -0.2, 0.4]]),
            vec![fixed(vec![vec![0.5, -0.5, 0.0, 0.2]])],
            build_lyapunov(&p).unwrap(),
            p,
        )
        .unwrap()
    }

    #[test]
    fn first_round_is_reward_only() {
        let mut s = state(Regime::FeasibleExpectation);
        let d = s.select(ContextId(0), &mut stream(Seed(0), Stream::Policy)).unwrap();
        assert_eq!(d.multipliers, vec![0.0]);
        assert_eq!(d.surrogate_hat, d.reward_pred);
        assert_eq!(d.z, 1.0);
        assert!((d.gamma - 0.5 * (4.0f64).sqrt()).abs() < 1e-15);
        assert_eq!(d.igw.greedy, ActionIndex(0));
    }

    #[test]
    fn gamma_after_four_unit_rounds() {
        // z = (1, 1, 1, 1), K = 4, U_T = 1  ⇒  γ_4 = ½ √16 = 2
        assert_eq!(exploration_scale(4, 1.0, 1.0, 4.0), 2.0);
        let mut s = state(Regime::FeasibleExpectation);
        let mut rng = stream(Seed(1), Stream::Policy);
        let mut last = None;
        for _ in 0..4 {
            let d = s.select(ContextId(0), &mut rng).unwrap();
            // zero-cost outcome keeps the queue at zero, so z stays 1
            s.update(ContextId(0), &d, &Outcome::new(0.0, vec![0.0]).unwrap())
                .unwrap();
            last = Some(d);
        }
        assert_eq!(last.unwrap().gamma, 2.0);
    }

    #[test]
    fn gamma_decreases_in_z() {
        let prev = 7.0;
        let mut last = f64::INFINITY;
        for z in [1.0, 2.0, 5.0, 25.0, 100.0] {
            let g = exploration_scale(4, 3.0, z, prev + z);
            assert!(g < last);
            last = g;
        }
    }

    #[test]
    fn large_multiplier_suppresses_costly_action() {
        let reward = vec![0.5, 0.4, 0.3, 0.2];
        let cheap = surrogate_round(&reward, &[vec![0.0; 4]], &[10.0], 3.0).unwrap();
        let costly = surrogate_round(&reward, &[vec![1.0, 0.0, 0.0, 0.0]], &[10.0], 3.0).unwrap();
        assert_eq!(costly.0[0], reward[0] - 10.0);
        assert!(costly.1.dist.probs()[0] < cheap.1.dist.probs()[0]);
        assert_eq!(costly.1.greedy, ActionIndex(1));
    }

    #[test]
    fn greedy_is_argmax_of_surrogate() {
        let (l, r) = surrogate_round(&[0.1, 0.7, 0.3], &[vec![0.2, 0.9, -0.1]], &[0.8], 4.0).unwrap();
        let best = crate::igw::argmax(&l);
        assert_eq!(r.greedy.0, best);
    }

    #[test]
    fn signed_and_positive_part_queues() {
        let mut s = state(Regime::FeasibleExpectation);
        let mut rng = stream(Seed(2), Stream::Policy);
        for c in [0.5, -0.2] {
            let d = s.select(ContextId(0), &mut rng).unwrap();
            s.update(ContextId(0), &d, &Outcome::new(0.0, vec![c]).unwrap())
                .unwrap();
        }
        assert!((s.queues()[0] - 0.3).abs() < 1e-15);

        let mut s = state(Regime::AlmostSure);
        for c in [0.5, -0.2] {
            let d = s.select(ContextId(0), &mut rng).unwrap();
            s.update(ContextId(0), &d, &Outcome::new(0.0, vec![c]).unwrap())
                .unwrap();
        }
        assert_eq!(s.queues()[0], 0.5);
    }

    #[test]
    fn sequencing_errors() {
        let mut s = state(Regime::FeasibleExpectation);
        let mut rng = stream(Seed(3), Stream::Policy);
        let d = s.select(ContextId(0), &mut rng).unwrap();
        assert!(matches!(s.select(ContextId(0), &mut rng), Err(CcbError::Sequencing(_))));
        let mut wrong = d.clone();
        wrong.action = ActionIndex((d.action.0 + 1) % 4);
        let o = Outcome::new(0.0, vec![0.0]).unwrap();
        assert!(s.update(ContextId(0), &wrong, &o).is_err());
        s.update(ContextId(0), &d, &o).unwrap();
        assert!(s.update(ContextId(0), &d, &o).is_err());
        assert_eq!(s.round(), 1);
    }

    #[test]
    fn exponential_rejects_negative_queue() {
        let p = params(Regime::Cbwk);
        let mut s = CcbState::new(
            fixed(vec![vec![0.0; 4]]),
            vec![fixed(vec![vec![0.0; 4]])],
            build_lyapunov(&p).unwrap(),
            p,
        )
        .unwrap();
        let mut rng = stream(Seed(4), Stream::Policy);
        let d = s.select(ContextId(0), &mut rng).unwrap();
        s.update(ContextId(0), &d, &Outcome::new(0.0, vec![-0.5]).unwrap())
            .unwrap();
        assert!(matches!(s.select(ContextId(0), &mut rng), Err(CcbError::Invariant(_))));
    }

    #[test]
    fn mismatched_oracles_rejected() {
        let p = params(Regime::FeasibleExpectation);
        let phi = build_lyapunov(&p).unwrap();
        let three = fixed(vec![vec![0.0; 3]]);
        assert!(CcbState::new(three.clone(), vec![three.clone()], phi, p).is_err());
        assert!(CcbState::new(fixed(vec![vec![0.0; 4]]), vec![], phi, p).is_err());
    }
}
