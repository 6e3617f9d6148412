//! Thomas algorithm for tridiagonal systems and its extension to one
//! extra upper band.

use crate::error::{McfError, Result};

/// Solve `lower[i] x[i-1] + diag[i] x[i] + upper[i] x[i+1] = rhs[i]`.
///
/// `lower[0]` and `upper[n-1]` are ignored. The solution overwrites `rhs`.
pub fn solve_tridiagonal(lower: &[f64], diag: &[f64], upper: &[f64], rhs: &mut [f64]) -> Result<()> {
    let n = rhs.len();
    if diag.len() != n || lower.len() != n || upper.len() != n {
        return Err(McfError::InvalidInput("tridiagonal band lengths differ".into()));
    }
    if n == 0 {
        return Ok(());
    }
    let mut c = vec![0.0; n];
    let mut beta = diag[0];
    if beta == 0.0 {
        return Err(McfError::Numerical("zero pivot in tridiagonal solve at row 0".into()));
    }
    rhs[0] /= beta;
    for i in 1..n {
        c[i - 1] = upper[i - 1] / beta;
        beta = diag[i] - lower[i] * c[i - 1];
        if beta == 0.0 || !beta.is_finite() {
            return Err(McfError::Numerical(format!("zero pivot in tridiagonal solve at row {i}")));
        }
        rhs[i] = (rhs[i] - lower[i] * rhs[i - 1]) / beta;
    }
    for i in (0..n - 1).rev() {
        rhs[i] -= c[i] * rhs[i + 1];
    }
    Ok(())
}

/// Solve a system with one lower and two upper bands,
/// `lower[i] x[i-1] + diag[i] x[i] + up1[i] x[i+1] + up2[i] x[i+2] = rhs[i]`,
/// by elimination without pivoting. The solution overwrites `rhs`.
pub fn solve_banded_upper2(lower: &[f64], diag: &[f64], up1: &[f64], up2: &[f64], rhs: &mut [f64]) -> Result<()> {
    let n = rhs.len();
    if [lower.len(), diag.len(), up1.len(), up2.len()].iter().any(|&l| l != n) {
        return Err(McfError::InvalidInput("band lengths differ".into()));
    }
    let mut d = diag.to_vec();
    let mut u1 = up1.to_vec();
    for i in 0..n.saturating_sub(1) {
        if d[i] == 0.0 || !d[i].is_finite() {
            return Err(McfError::Numerical(format!("zero pivot in banded solve at row {i}")));
        }
        let f = lower[i + 1] / d[i];
        d[i + 1] -= f * u1[i];
        if i + 1 < n - 1 {
            u1[i + 1] -= f * up2[i];
        }
        rhs[i + 1] -= f * rhs[i];
    }
    for i in (0..n).rev() {
        if d[i] == 0.0 || !d[i].is_finite() {
            return Err(McfError::Numerical(format!("zero pivot in banded solve at row {i}")));
        }
        let mut v = rhs[i];
        if i + 1 < n {
            v -= u1[i] * rhs[i + 1];
        }
        if i + 2 < n {
            v -= up2[i] * rhs[i + 2];
        }
        rhs[i] = v / d[i];
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    proptest! {
        #[test]
        fn solves_diagonally_dominant_systems(
            vals in proptest::collection::vec((-1.0f64..1.0, -1.0f64..1.0, -5.0f64..5.0), 2..60)
        ) {
            let n = vals.len();
            let lower: Vec<f64> = vals.iter().map(|v| v.0).collect();
            let upper: Vec<f64> = vals.iter().map(|v| v.1).collect();
            let diag: Vec<f64> = vals.iter().map(|v| 2.5 + v.0.abs() + v.1.abs()).collect();
            let x: Vec<f64> = vals.iter().map(|v| v.2).collect();
            let mut rhs: Vec<f64> = (0..n)
                .map(|i| {
                    let mut s = diag[i] * x[i];
                    if i > 0 { s += lower[i] * x[i - 1]; }
                    if i + 1 < n { s += upper[i] * x[i + 1]; }
                    s
                })
                .collect();
            solve_tridiagonal(&lower, &diag, &upper, &mut rhs).unwrap();
            for i in 0..n {
                prop_assert!((rhs[i] - x[i]).abs() < 1e-10);
            }
        }

        #[test]
        fn banded_solver_inverts_its_matrix(
            vals in proptest::collection::vec((-1.0f64..1.0, -1.0f64..1.0, -1.0f64..1.0, -5.0f64..5.0), 3..60)
        ) {
            let n = vals.len();
            let lower: Vec<f64> = vals.iter().map(|v| v.0).collect();
            let up1: Vec<f64> = vals.iter().map(|v| v.1).collect();
            let up2: Vec<f64> = vals.iter().map(|v| v.2).collect();
            let diag: Vec<f64> = vals.iter().map(|v| 3.5 + v.0.abs() + v.1.abs() + v.2.abs()).collect();
            let x: Vec<f64> = vals.iter().map(|v| v.3).collect();
            let mut rhs: Vec<f64> = (0..n)
                .map(|i| {
                    let mut s = diag[i] * x[i];
                    if i > 0 { s += lower[i] * x[i - 1]; }
                    if i + 1 < n { s += up1[i] * x[i + 1]; }
                    if i + 2 < n { s += up2[i] * x[i + 2]; }
                    s
                })
                .collect();
            solve_banded_upper2(&lower, &diag, &up1, &up2, &mut rhs).unwrap();
            for i in 0..n {
                prop_assert!((rhs[i] - x[i]).abs() < 1e-10);
            }
        }
    }
}
