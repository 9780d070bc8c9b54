use super::RoundDecision;
use crate::types::SimplexDistribution;

/// True means at the round's context: `f⋆(x, ·)` and `g⋆_i(x, ·)` (the
/// latter after any positive-part transform).
#[derive(Debug, Clone, Copy)]
pub struct SurrogateTruth<'a> {
    pub reward: &'a [f64],
    pub costs: &'a [&'a [f64]],
}

/// Slack of the one-round surrogate regret bound
///
/// `<L⋆, π⋆> − <L⋆, π_t> ≤ K/(2γ_t) + 2γ_t (E_π_t (f⋆ − f̂)² + z_t Σ_i E_π_t (g⋆_i − ĝ_i)²)`
///
/// with `L⋆ = f⋆ − Σ_i Φ′(Q_i(t−1)) g⋆_i`. The bound holds for every
/// realization, so the slack is non-negative up to rounding.
pub fn surrogate_slack(decision: &RoundDecision, pi_star: &SimplexDistribution, truth: SurrogateTruth<'_>) -> f64 {
    let k = decision.reward_pred.len();
    let mut target = truth.reward.to_vec();
    for (m, g) in decision.multipliers.iter().zip(truth.costs) {
        for (l, gv) in target.iter_mut().zip(g.iter()) {
            *l -= m * gv;
        }
    }
    let p = &decision.igw.dist;
    let lhs = pi_star.expect(&target) - p.expect(&target);

    let sq = |a: &[f64], b: &[f64]| -> Vec<f64> { a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).collect() };
    let reward_err = p.expect(&sq(truth.reward, &decision.reward_pred));
    let cost_err: f64 = truth
        .costs
        .iter()
        .zip(&decision.cost_preds)
        .map(|(g, gh)| p.expect(&sq(g, gh)))
        .sum();

    let gamma = decision.gamma;
    let rhs = k as f64 / (2.0 * gamma) + 2.0 * gamma * (reward_err + decision.z * cost_err);
    rhs - lhs
}
