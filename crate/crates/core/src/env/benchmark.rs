use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::lp::vertex_max;
use super::ProblemSpec;
use crate::error::{CcbError, Result};
use crate::igw::argmax;
use crate::types::{validate_simplex, ActionIndex, ContextId, SimplexDistribution};

/// Constraint tolerance shared by the benchmark solvers.
const TOL: f64 = 1e-12;

/// A stationary comparator policy and its expected reward at each context.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkPolicy {
    pub per_context: Vec<SimplexDistribution>,
    pub value_per_context: Vec<f64>,
}

impl BenchmarkPolicy {
    fn from_policy(spec: &ProblemSpec, per_context: Vec<SimplexDistribution>) -> Self {
        let value_per_context = per_context
            .iter()
            .enumerate()
            .map(|(x, p)| p.expect(spec.f_star.row(ContextId(x))))
            .collect();
        Self {
            per_context,
            value_per_context,
        }
    }

    pub fn at(&self, x: ContextId) -> &SimplexDistribution {
        &self.per_context[x.0]
    }

    /// Expected cost of each resource at `x`.
    pub fn consumption(&self, spec: &ProblemSpec, x: ContextId) -> Vec<f64> {
        spec.g_star.iter().map(|g| self.at(x).expect(g.row(x))).collect()
    }

    /// Number of contexts where the policy is not a point mass.
    pub fn randomized_contexts(&self) -> usize {
        self.per_context.iter().filter(|p| p.support_size() > 1).count()
    }
}

/// Best distribution at one context subject to `⟨g_i, π⟩ ≤ c0` for every
/// cost row.
///
/// With one row an optimum is supported on at most two actions, so single
/// actions and tight two-action mixtures are enumerated. More rows go
/// through vertex enumeration.
pub fn benchmark_per_context(f: &[f64], g_rows: &[&[f64]], c0: f64) -> Result<(SimplexDistribution, f64)> {
    let k = f.len();
    if k == 0 || g_rows.iter().any(|g| g.len() != k) {
        return Err(CcbError::Validation("benchmark rows have inconsistent lengths".into()));
    }
    match g_rows {
        [] => {
            let a = argmax(f);
            Ok((SimplexDistribution::point_mass(k, ActionIndex(a)), f[a]))
        }
        [g] => single_constraint(f, g, c0),
        _ => several_constraints(f, g_rows, c0),
    }
}

fn single_constraint(f: &[f64], g: &[f64], c0: f64) -> Result<(SimplexDistribution, f64)> {
    let k = f.len();
    let lowest = g.iter().copied().fold(f64::INFINITY, f64::min);
    if lowest > c0 + TOL {
        return Err(CcbError::Infeasible(format!(
            "smallest cost {lowest} exceeds the allowed level {c0}"
        )));
    }
    let mut best: Option<(Vec<f64>, f64)> = None;
    let mut offer = |probs: Vec<f64>, value: f64| {
        if best.as_ref().is_none_or(|(_, v)| value > v + TOL) {
            best = Some((probs, value));
        }
    };
    for a in 0..k {
        if g[a] <= c0 + TOL {
            let mut p = vec![0.0; k];
            p[a] = 1.0;
            offer(p, f[a]);
        }
    }
    for a in 0..k {
        for b in a + 1..k {
            let (lo, hi) = match (g[a] < c0, g[b] < c0) {
                (true, false) if g[b] > c0 => (a, b),
                (false, true) if g[a] > c0 => (b, a),
                _ => continue,
            };
            let w_hi = (c0 - g[lo]) / (g[hi] - g[lo]);
            let mut p = vec![0.0; k];
            p[lo] = 1.0 - w_hi;
            p[hi] = w_hi;
            offer(p, (1.0 - w_hi) * f[lo] + w_hi * f[hi]);
        }
    }
    let (probs, value) = best.expect("a feasible single action exists");
    Ok((validate_simplex(probs)?, value))
}

fn several_constraints(f: &[f64], g_rows: &[&[f64]], c0: f64) -> Result<(SimplexDistribution, f64)> {
    let (k, m) = (f.len(), g_rows.len());
    // columns: π(0..K), slack(0..m); rows: one per cost, then Σπ = 1
    let a = DMatrix::from_fn(m + 1, k + m, |i, j| match (i < m, j < k) {
        (true, true) => g_rows[i][j],
        (true, false) => f64::from(j - k == i),
        (false, true) => 1.0,
        (false, false) => 0.0,
    });
    let mut b = vec![c0; m];
    b.push(1.0);
    let mut c = f.to_vec();
    c.extend(std::iter::repeat_n(0.0, m));
    match vertex_max(&c, &a, &b)? {
        Some((y, value)) => Ok((normalized(&y[..k])?, value)),
        None => Err(CcbError::Infeasible(format!(
            "no distribution meets all {m} cost constraints at level {c0}"
        ))),
    }
}

fn normalized(p: &[f64]) -> Result<SimplexDistribution> {
    let total: f64 = p.iter().sum();
    validate_simplex(p.iter().map(|v| v / total).collect())
}

/// Per-context benchmark for every context: `⟨g_i(x), π(x)⟩ ≤ c0` for all
/// `x` and `i` (`c0 = 0` for feasibility in expectation, `−ε` under a
/// Slater margin).
pub fn per_context_benchmark(spec: &ProblemSpec, c0: f64) -> Result<BenchmarkPolicy> {
    let per_context = (0..spec.n_contexts())
        .map(|x| {
            let x = ContextId(x);
            benchmark_per_context(spec.f_star.row(x), &spec.cost_rows(x), c0)
                .map(|(p, _)| p)
                .map_err(|e| match e {
                    CcbError::Infeasible(msg) => CcbError::Infeasible(format!("context {x}: {msg}")),
                    other => other,
                })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(BenchmarkPolicy::from_policy(spec, per_context))
}

/// Best policy among those that play, at every context, only actions whose
/// realized costs are non-positive with probability one.
pub fn almost_sure_benchmark(spec: &ProblemSpec) -> Result<BenchmarkPolicy> {
    let k = spec.k();
    let per_context = (0..spec.n_contexts())
        .map(|x| {
            let x = ContextId(x);
            let f = spec.f_star.row(x);
            let safe = (0..k).filter(|&a| {
                spec.g_star
                    .iter()
                    .zip(&spec.cost_noise)
                    .all(|(g, noise)| noise.support_max(g.get(x, ActionIndex(a))) <= 0.0)
            });
            let best = safe.fold(None, |best: Option<usize>, a| match best {
                Some(b) if f[b] >= f[a] => Some(b),
                _ => Some(a),
            });
            best.map(|a| SimplexDistribution::point_mass(k, ActionIndex(a)))
                .ok_or_else(|| {
                    CcbError::Infeasible(format!("context {x} has no action with non-positive cost support"))
                })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(BenchmarkPolicy::from_policy(spec, per_context))
}

/// Best stationary policy under a long-term budget:
/// `max Σ_x w(x)⟨f(x), π(x)⟩` subject to `Σ_x w(x)⟨g_i(x), π(x)⟩ ≤ b`.
///
/// `context_weights` are normalized to sum to one; `b` is the budget per
/// round. With one resource the program is solved through its dual
/// multiplier and randomizes in at most one context.
pub fn benchmark_budget(spec: &ProblemSpec, context_weights: &[f64], per_round_budget: f64) -> Result<BenchmarkPolicy> {
    let n = spec.n_contexts();
    if context_weights.len() != n {
        return Err(CcbError::Validation(format!(
            "{} context weights for {n} contexts",
            context_weights.len()
        )));
    }
    let total: f64 = context_weights.iter().sum();
    if total.is_nan() || total <= 0.0 || context_weights.iter().any(|w| !(w.is_finite() && *w >= 0.0)) {
        return Err(CcbError::Validation(
            "context weights must be non-negative with positive sum".into(),
        ));
    }
    if !per_round_budget.is_finite() {
        return Err(CcbError::Validation("budget must be finite".into()));
    }
    let w: Vec<f64> = context_weights.iter().map(|v| v / total).collect();
    let per_context = if spec.m() == 1 {
        DualBudget::new(spec, &w, per_round_budget).solve()?
    } else {
        joint_budget(spec, &w, per_round_budget)?
    };
    Ok(BenchmarkPolicy::from_policy(spec, per_context))
}

struct DualBudget<'a> {
    spec: &'a ProblemSpec,
    w: &'a [f64],
    b: f64,
}

impl DualBudget<'_> {
    fn new<'a>(spec: &'a ProblemSpec, w: &'a [f64], b: f64) -> DualBudget<'a> {
        DualBudget { spec, w, b }
    }

    fn f(&self, x: usize) -> &[f64] {
        self.spec.f_star.row(ContextId(x))
    }

    fn g(&self, x: usize) -> &[f64] {
        self.spec.g_star[0].row(ContextId(x))
    }

    /// `argmax_a f − θ g` at every context, lowest index on ties.
    fn lagrangian_policy(&self, theta: f64) -> Vec<usize> {
        (0..self.w.len())
            .map(|x| {
                let score: Vec<f64> = self.f(x).iter().zip(self.g(x)).map(|(f, g)| f - theta * g).collect();
                argmax(&score)
            })
            .collect()
    }

    fn consumption(&self, actions: &[usize]) -> f64 {
        actions.iter().enumerate().map(|(x, &a)| self.w[x] * self.g(x)[a]).sum()
    }

    /// Cheapest action at each context, best reward among the cheapest.
    fn frugal_policy(&self) -> Vec<usize> {
        (0..self.w.len())
            .map(|x| {
                let g = self.g(x);
                let f = self.f(x);
                let lowest = g.iter().copied().fold(f64::INFINITY, f64::min);
                (0..g.len())
                    .filter(|&a| g[a] <= lowest + TOL)
                    .fold(None, |best: Option<usize>, a| match best {
                        Some(b) if f[b] >= f[a] => Some(b),
                        _ => Some(a),
                    })
                    .expect("non-empty action set")
            })
            .collect()
    }

    fn point_masses(&self, actions: &[usize]) -> Vec<SimplexDistribution> {
        let k = self.spec.k();
        actions
            .iter()
            .map(|&a| SimplexDistribution::point_mass(k, ActionIndex(a)))
            .collect()
    }

    fn solve(&self) -> Result<Vec<SimplexDistribution>> {
        let frugal = self.frugal_policy();
        let least = self.consumption(&frugal);
        if least > self.b + TOL {
            return Err(CcbError::Infeasible(format!(
                "least possible consumption {least} exceeds the per-round budget {}",
                self.b
            )));
        }
        let greedy = self.lagrangian_policy(0.0);
        if self.consumption(&greedy) <= self.b + TOL {
            return Ok(self.point_masses(&greedy));
        }
        let gap = self.b - least;
        if gap <= TOL {
            return Ok(self.point_masses(&frugal));
        }

        // At θ = 2/gap an action is preferred to the cheapest one only if it
        // costs at most `gap` more, so the consumption is within budget.
        let mut hi = 2.0 / gap;
        let mut doublings = 0;
        while self.consumption(&self.lagrangian_policy(hi)) > self.b + TOL {
            hi *= 2.0;
            doublings += 1;
            if doublings > 60 {
                return Ok(self.point_masses(&frugal));
            }
        }
        let mut lo = 0.0;
        for _ in 0..200 {
            if hi - lo <= 1e-10 * hi.max(1.0) {
                break;
            }
            let mid = 0.5 * (lo + hi);
            if self.consumption(&self.lagrangian_policy(mid)) <= self.b + TOL {
                hi = mid;
            } else {
                lo = mid;
            }
        }

        let over = self.lagrangian_policy(lo);
        let under = self.lagrangian_policy(hi);
        let mut current = over.clone();
        let mut used = self.consumption(&current);
        for x in 0..current.len() {
            if over[x] == under[x] {
                continue;
            }
            let delta = self.w[x] * (self.g(x)[under[x]] - self.g(x)[over[x]]);
            if used + delta <= self.b + TOL {
                // Move the fraction of mass at x that makes the budget tight.
                let share = ((used - self.b) / -delta).clamp(0.0, 1.0);
                let mut policy = self.point_masses(&current);
                let mut probs = vec![0.0; self.spec.k()];
                probs[over[x]] = 1.0 - share;
                probs[under[x]] += share;
                policy[x] = validate_simplex(probs)?;
                return Ok(policy);
            }
            current[x] = under[x];
            used += delta;
        }
        Ok(self.point_masses(&under))
    }
}

fn joint_budget(spec: &ProblemSpec, w: &[f64], b: f64) -> Result<Vec<SimplexDistribution>> {
    let (n, k, m) = (spec.n_contexts(), spec.k(), spec.m());
    // columns: π(x, a) at x·K + a, then one slack per resource;
    // rows: one per resource, then Σ_a π(x, a) = 1 for each x
    let cols = n * k + m;
    let a = DMatrix::from_fn(m + n, cols, |i, j| {
        if j >= n * k {
            return f64::from(i < m && j - n * k == i);
        }
        let (x, act) = (j / k, j % k);
        if i < m {
            w[x] * spec.g_star[i].get(ContextId(x), ActionIndex(act))
        } else {
            f64::from(i - m == x)
        }
    });
    let mut rhs = vec![b; m];
    rhs.extend(std::iter::repeat_n(1.0, n));
    let mut c: Vec<f64> = (0..n * k)
        .map(|j| w[j / k] * spec.f_star.get(ContextId(j / k), ActionIndex(j % k)))
        .collect();
    c.extend(std::iter::repeat_n(0.0, m));
    let Some((y, _)) = vertex_max(&c, &a, &rhs)? else {
        return Err(CcbError::Infeasible(format!(
            "no policy meets the per-round budget {b}"
        )));
    };
    (0..n)
        .map(|x| {
            if w[x] == 0.0 {
                let f = spec.f_star.row(ContextId(x));
                Ok(SimplexDistribution::point_mass(k, ActionIndex(argmax(f))))
            } else {
                normalized(&y[x * k..(x + 1) * k])
            }
        })
        .collect()
}

/// Cumulative expected benchmark reward over the realized contexts.
pub fn opt_value(benchmark: &BenchmarkPolicy, realized_contexts: &[ContextId]) -> f64 {
    realized_contexts.iter().map(|x| benchmark.value_per_context[x.0]).sum()
}
