//! Small dense helpers on top of nalgebra shared by the regression modules.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Relative residual norm below which a column is declared a linear
/// combination of the columns before it.
pub const COLLINEARITY_TOL: f64 = 1e-9;

/// Indices of columns that are (numerically) linear combinations of earlier
/// columns, found by modified Gram-Schmidt in column order.
pub fn collinear_columns(x: &DMatrix<f64>) -> Vec<usize> {
    let mut basis: Vec<DVector<f64>> = Vec::new();
    let mut bad = Vec::new();
    for j in 0..x.ncols() {
        let col = x.column(j).into_owned();
        let norm0 = col.norm();
        if norm0 == 0.0 {
            bad.push(j);
            continue;
        }
        let mut v = col;
        for q in &basis {
            let proj = q.dot(&v);
            v.axpy(-proj, q, 1.0);
        }
        let norm = v.norm();
        if norm <= COLLINEARITY_TOL * norm0 {
            bad.push(j);
        } else {
            basis.push(v / norm);
        }
    }
    bad
}

pub fn rank_guard(x: &DMatrix<f64>, names: &[String]) -> Result<()> {
    let bad = collinear_columns(x);
    if bad.is_empty() {
        Ok(())
    } else {
        Err(Error::RankDeficient {
            terms: bad.into_iter().map(|j| names[j].clone()).collect(),
        })
    }
}

pub fn solve_spd(a: &DMatrix<f64>, b: &DVector<f64>) -> Option<DVector<f64>> {
    a.clone().cholesky().map(|c| c.solve(b))
}

pub fn inverse_spd(a: &DMatrix<f64>) -> Option<DMatrix<f64>> {
    a.clone().cholesky().map(|c| c.inverse())
}

/// `Xᵀ diag(w) X` and `Xᵀ diag(w) z`, accumulated row by row in a fixed order.
pub fn weighted_normal_equations(x: &DMatrix<f64>, w: &[f64], z: &[f64]) -> (DMatrix<f64>, DVector<f64>) {
    let p = x.ncols();
    let mut xtwx = DMatrix::zeros(p, p);
    let mut xtwz = DVector::zeros(p);
    for i in 0..x.nrows() {
        let wi = w[i];
        if wi == 0.0 {
            continue;
        }
        for a in 0..p {
            let xa = x[(i, a)] * wi;
            if xa == 0.0 {
                continue;
            }
            xtwz[a] += xa * z[i];
            for b in a..p {
                xtwx[(a, b)] += xa * x[(i, b)];
            }
        }
    }
    for a in 0..p {
        for b in 0..a {
            xtwx[(a, b)] = xtwx[(b, a)];
        }
    }
    (xtwx, xtwz)
}

/// Ordinary least squares.
#[derive(Debug, Clone)]
pub struct Ols {
    pub beta: DVector<f64>,
    pub residuals: DVector<f64>,
    /// `(XᵀX)⁻¹`
    pub xtx_inv: DMatrix<f64>,
}

pub fn ols(y: &DVector<f64>, x: &DMatrix<f64>) -> Result<Ols> {
    let xtx = x.transpose() * x;
    let xtx_inv = inverse_spd(&xtx)
        .ok_or_else(|| Error::Numeric("XᵀX is not positive definite".into()))?;
    let beta = &xtx_inv * (x.transpose() * y);
    let residuals = y - x * &beta;
    Ok(Ols {
        beta,
        residuals,
        xtx_inv,
    })
}

impl Ols {
    /// Classical covariance `s² (XᵀX)⁻¹`.
    pub fn classical_covariance(&self) -> DMatrix<f64> {
        let n = self.residuals.len() as f64;
        let p = self.beta.len() as f64;
        let s2 = self.residuals.norm_squared() / (n - p);
        &self.xtx_inv * s2
    }

    /// HC1 heteroskedasticity-consistent covariance.
    pub fn hc1_covariance(&self, x: &DMatrix<f64>) -> DMatrix<f64> {
        let n = x.nrows();
        let p = x.ncols();
        let mut meat = DMatrix::zeros(p, p);
        for i in 0..n {
            let e2 = self.residuals[i] * self.residuals[i];
            let row = x.row(i);
            for a in 0..p {
                for b in 0..p {
                    meat[(a, b)] += e2 * row[a] * row[b];
                }
            }
        }
        let scale = n as f64 / (n - p) as f64;
        &self.xtx_inv * meat * &self.xtx_inv * scale
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn detects_duplicate_column() {
        let x = DMatrix::from_row_slice(4, 3, &[1.0, 2.0, 2.0, 1.0, 3.0, 3.0, 1.0, 5.0, 5.0, 1.0, 7.0, 7.0]);
        assert_eq!(collinear_columns(&x), vec![2]);
    }

    #[test]
    fn detects_sum_of_dummies() {
        // intercept = d1 + d2
        let x = DMatrix::from_row_slice(4, 3, &[1.0, 1.0, 0.0, 1.0, 0.0, 1.0, 1.0, 1.0, 0.0, 1.0, 0.0, 1.0]);
        assert_eq!(collinear_columns(&x), vec![2]);
    }

    #[test]
    fn ols_exact_fit() {
        let x = DMatrix::from_row_slice(3, 2, &[1.0, 0.0, 1.0, 1.0, 1.0, 2.0]);
        let y = DVector::from_vec(vec![1.0, 3.0, 5.0]);
        let fit = ols(&y, &x).unwrap();
        assert!((fit.beta[0] - 1.0).abs() < 1e-12 && (fit.beta[1] - 2.0).abs() < 1e-12);
    }
}
