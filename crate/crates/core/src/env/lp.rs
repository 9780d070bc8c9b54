//! Exact small linear programs by enumeration of basic solutions.
//!
//! Used for benchmark programs with several cost constraints, where the
//! one-constraint shortcuts do not apply. The work grows as
//! `C(columns, rows)`, so only small programs are accepted.

use nalgebra::{DMatrix, DVector};

use crate::error::{CcbError, Result};

/// Largest number of candidate bases examined before giving up.
pub const MAX_BASES: u128 = 5_000_000;

const FEASIBILITY_TOL: f64 = 1e-10;

/// Maximizes `cᵀy` subject to `A y = b`, `y ≥ 0`.
///
/// Returns the best basic feasible solution, or `None` when no basis is
/// feasible. The earliest basis in lexicographic order wins ties.
pub fn vertex_max(c: &[f64], a: &DMatrix<f64>, b: &[f64]) -> Result<Option<(Vec<f64>, f64)>> {
    let (rows, cols) = a.shape();
    if c.len() != cols || b.len() != rows {
        return Err(CcbError::Validation("linear program dimensions disagree".into()));
    }
    if rows > cols {
        return Err(CcbError::Validation("more equality rows than variables".into()));
    }
    let count = binomial(cols, rows);
    if count > MAX_BASES {
        return Err(CcbError::Config(format!(
            "program with {cols} variables and {rows} rows has {count} bases, above the limit {MAX_BASES}"
        )));
    }

    let rhs = DVector::from_column_slice(b);
    let mut basis: Vec<usize> = (0..rows).collect();
    let mut best: Option<(Vec<f64>, f64)> = None;
    loop {
        let sub = DMatrix::from_fn(rows, rows, |i, j| a[(i, basis[j])]);
        if let Some(y_b) = sub.lu().solve(&rhs) {
            if y_b.iter().all(|v| v.is_finite() && *v >= -FEASIBILITY_TOL) && residual_ok(a, &basis, &y_b, b) {
                let mut y = vec![0.0; cols];
                for (j, &col) in basis.iter().enumerate() {
                    y[col] = y_b[j].max(0.0);
                }
                let value: f64 = c.iter().zip(&y).map(|(ci, yi)| ci * yi).sum();
                if best.as_ref().is_none_or(|(_, v)| value > v + 1e-12) {
                    best = Some((y, value));
                }
            }
        }
        if !next_combination(&mut basis, cols) {
            break;
        }
    }
    Ok(best)
}

fn residual_ok(a: &DMatrix<f64>, basis: &[usize], y_b: &DVector<f64>, b: &[f64]) -> bool {
    (0..a.nrows()).all(|i| {
        let lhs: f64 = basis.iter().enumerate().map(|(j, &col)| a[(i, col)] * y_b[j]).sum();
        (lhs - b[i]).abs() <= 1e-9 * (1.0 + b[i].abs())
    })
}

/// Advances `comb` (strictly increasing indices below `n`) to the next
/// combination in lexicographic order.
fn next_combination(comb: &mut [usize], n: usize) -> bool {
    let r = comb.len();
    for i in (0..r).rev() {
        if comb[i] < n - r + i {
            comb[i] += 1;
            for j in i + 1..r {
                comb[j] = comb[j - 1] + 1;
            }
            return true;
        }
    }
    false
}

fn binomial(n: usize, k: usize) -> u128 {
    let k = k.min(n - k);
    (0..k).fold(1u128, |acc, i| acc * (n - i) as u128 / (i + 1) as u128)
}
