//! Small linear least-squares helper shared by the scaling and kernel fits.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Reciprocal condition number below which a design counts as collinear.
pub const COLLINEAR_RCOND: f64 = 1e-10;

#[derive(Clone, Debug, PartialEq)]
pub struct LinearFit {
    pub coefficients: Vec<f64>,
    pub residuals: Vec<f64>,
}

impl LinearFit {
    pub fn max_residual(&self) -> f64 {
        self.residuals.iter().fold(0.0, |m, r| m.max(r.abs()))
    }
}

/// Solves `min ‖X β − y‖₂` with `X` given row by row.
pub fn least_squares(rows: &[Vec<f64>], y: &[f64]) -> Result<LinearFit> {
    let m = rows.len();
    if m == 0 || m != y.len() {
        return Err(Error::Data("empty or mismatched regression data".into()));
    }
    let n = rows[0].len();
    if m < n {
        return Err(Error::Collinear(format!("{m} observations for {n} unknowns")));
    }
    if rows.iter().flatten().chain(y).any(|v| !v.is_finite()) {
        return Err(Error::Data("non-finite regression input".into()));
    }
    let x = DMatrix::from_fn(m, n, |i, j| rows[i][j]);
    // column scaling so the condition number reflects geometry, not units
    let scales: Vec<f64> = (0..n).map(|j| x.column(j).norm().max(f64::MIN_POSITIVE)).collect();
    let xs = DMatrix::from_fn(m, n, |i, j| x[(i, j)] / scales[j]);
    let svd = xs.clone().svd(true, true);
    let sv = &svd.singular_values;
    let top = sv.max();
    let bottom = sv.min();
    if top == 0.0 || bottom / top < COLLINEAR_RCOND {
        return Err(Error::Collinear(format!("design condition number {:.3e}", top / bottom)));
    }
    let yv = DVector::from_column_slice(y);
    let beta = svd.solve(&yv, 0.0).map_err(|e| Error::Collinear(e.to_string()))?;
    let coefficients: Vec<f64> = (0..n).map(|j| beta[j] / scales[j]).collect();
    let fitted = &xs * &beta;
    let residuals = (0..m).map(|i| y[i] - fitted[i]).collect();
    Ok(LinearFit { coefficients, residuals })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn recovers_exact_line() {
        let rows: Vec<Vec<f64>> = (0..5).map(|i| vec![i as f64, 1.0]).collect();
        let y: Vec<f64> = (0..5).map(|i| 2.0 * i as f64 - 1.0).collect();
        let f = least_squares(&rows, &y).unwrap();
        assert!((f.coefficients[0] - 2.0).abs() < 1e-12);
        assert!((f.coefficients[1] + 1.0).abs() < 1e-12);
        assert!(f.max_residual() < 1e-12);
    }

    #[test]
    fn flags_collinear_columns() {
        let rows: Vec<Vec<f64>> = (0..5).map(|i| vec![i as f64, 2.0 * i as f64, 1.0]).collect();
        let y = vec![0.0; 5];
        assert!(matches!(least_squares(&rows, &y), Err(Error::Collinear(_))));
    }
}
