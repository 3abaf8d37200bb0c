//! Least squares by Householder QR.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Solution of a least-squares problem with its covariance ingredients.
#[derive(Debug, Clone, PartialEq)]
pub struct LeastSquares {
    pub coefficients: Vec<f64>,
    pub std_errors: Vec<f64>,
    pub fitted: Vec<f64>,
    pub residuals: Vec<f64>,
    /// `RSS / (n - p)`, or 0 when there are no residual degrees of freedom.
    pub residual_variance: f64,
}

/// Minimizes `‖y − Xβ‖²` through `X = QR`. Standard errors come from the
/// diagonal of `σ̂² (XᵀX)⁻¹ = σ̂² R⁻¹R⁻ᵀ`.
pub fn least_squares(rows: &[Vec<f64>], y: &[f64]) -> Result<LeastSquares> {
    let n = rows.len();
    if n == 0 {
        return Err(Error::EmptyInput("design matrix"));
    }
    if y.len() != n {
        return Err(Error::LengthMismatch { expected: n, actual: y.len() });
    }
    let p = rows[0].len();
    if n < p {
        return Err(Error::InvalidInput(format!("{n} rows cannot identify {p} coefficients")));
    }
    if let Some(bad) = rows.iter().find(|r| r.len() != p) {
        return Err(Error::LengthMismatch { expected: p, actual: bad.len() });
    }

    let x = DMatrix::from_fn(n, p, |i, j| rows[i][j]);
    let target = DVector::from_column_slice(y);
    let qr = x.clone().qr();
    let r = qr.r();

    let max_diag = (0..p).map(|j| r[(j, j)].abs()).fold(0.0, f64::max);
    let tol = max_diag * f64::EPSILON * n.max(p) as f64;
    if let Some(column) = (0..p).find(|&j| !(r[(j, j)].abs() > tol)) {
        return Err(Error::RankDeficient { column });
    }

    let qty = qr.q().transpose() * &target;
    let beta = r
        .solve_upper_triangular(&qty)
        .ok_or(Error::RankDeficient { column: p - 1 })?;
    let r_inv = r
        .solve_upper_triangular(&DMatrix::identity(p, p))
        .ok_or(Error::RankDeficient { column: p - 1 })?;

    let fitted: Vec<f64> = rows
        .iter()
        .map(|row| row.iter().zip(beta.iter()).map(|(a, b)| a * b).sum())
        .collect();
    let residuals: Vec<f64> = y.iter().zip(&fitted).map(|(a, b)| a - b).collect();
    let rss: f64 = residuals.iter().map(|e| e * e).sum();
    let dof = n - p;
    let residual_variance = if dof > 0 { rss / dof as f64 } else { 0.0 };
    let std_errors = (0..p)
        .map(|j| {
            let row_norm2: f64 = (0..p).map(|k| r_inv[(j, k)].powi(2)).sum();
            (residual_variance * row_norm2).sqrt()
        })
        .collect();

    Ok(LeastSquares {
        coefficients: beta.iter().copied().collect(),
        std_errors,
        fitted,
        residuals,
        residual_variance,
    })
}
