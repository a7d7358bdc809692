use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::features::Features;
use crate::error::{Error, Result};

/// Linear model fit by weighted ridge regression with an unpenalized intercept.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RidgeModel {
    pub intercept: f64,
    pub coef: Vec<f64>,
    pub alpha: f64,
    pub train_rmse: f64,
}

impl RidgeModel {
    pub fn predict(&self, x: &[f64]) -> f64 {
        self.intercept + x.iter().zip(&self.coef).map(|(a, b)| a * b).sum::<f64>()
    }
}

/// Minimize Σ wᵢ (yᵢ − b − xᵢᵀβ)² + α‖β‖². The problem is centered with the
/// weighted means, so the intercept carries no penalty. Positive α uses a
/// Cholesky solve; α = 0 falls back to an SVD least-squares solve, which
/// returns the minimum-norm solution for collinear one-hot blocks.
pub fn fit_ridge(x: &Features, y: &[f64], weights: Option<&[f64]>, alpha: f64) -> Result<RidgeModel> {
    let n = x.n_rows();
    let p = x.n_cols();
    if n == 0 || y.len() != n || weights.is_some_and(|w| w.len() != n) {
        return Err(Error::data(format!(
            "ridge: {} rows of X, {} targets",
            n,
            y.len()
        )));
    }
    if !(alpha >= 0.0) || !alpha.is_finite() {
        return Err(Error::config(format!("ridge penalty must be >= 0, got {alpha}")));
    }
    if y.iter().any(|v| !v.is_finite()) {
        return Err(Error::numeric("ridge: non-finite target"));
    }
    let w = |i: usize| weights.map_or(1.0, |w| w[i]);
    let sw: f64 = (0..n).map(w).sum();
    if !(sw > 0.0) {
        return Err(Error::numeric("ridge: total sample weight is zero"));
    }

    let mut xm = vec![0.0; p];
    let mut ym = 0.0;
    for i in 0..n {
        let wi = w(i);
        ym += wi * y[i];
        for &j in x.nonzero(i) {
            xm[j as usize] += wi * x.get(i, j as usize);
        }
    }
    ym /= sw;
    xm.iter_mut().for_each(|v| *v /= sw);

    // Σ w (x − x̄)(x − x̄)ᵀ = Σ w x xᵀ − sw x̄ x̄ᵀ ; the raw sums use sparsity.
    let mut gram = DMatrix::<f64>::zeros(p, p);
    let mut rhs = DVector::<f64>::zeros(p);
    for i in 0..n {
        let wi = w(i);
        let nz = x.nonzero(i);
        let row = x.row(i);
        for &a in nz {
            let a = a as usize;
            let wa = wi * row[a];
            rhs[a] += wa * y[i];
            for &b in nz {
                gram[(a, b as usize)] += wa * row[b as usize];
            }
        }
    }
    for a in 0..p {
        rhs[a] -= sw * xm[a] * ym;
        for b in 0..p {
            gram[(a, b)] -= sw * xm[a] * xm[b];
        }
    }
    for a in 0..p {
        gram[(a, a)] += alpha;
    }

    let beta = if alpha > 0.0 {
        match gram.clone().cholesky() {
            Some(ch) => ch.solve(&rhs),
            None => svd_solve(gram, &rhs)?,
        }
    } else {
        svd_solve(gram, &rhs)?
    };
    if beta.iter().any(|v| !v.is_finite()) {
        return Err(Error::numeric("ridge: non-finite coefficients"));
    }
    let coef: Vec<f64> = beta.iter().copied().collect();
    let intercept = ym - coef.iter().zip(&xm).map(|(c, m)| c * m).sum::<f64>();
    let mut model = RidgeModel {
        intercept,
        coef,
        alpha,
        train_rmse: 0.0,
    };
    let mut sse = 0.0;
    for i in 0..n {
        sse += w(i) * (y[i] - model.predict(x.row(i))).powi(2);
    }
    model.train_rmse = (sse / sw).sqrt();
    Ok(model)
}

fn svd_solve(a: DMatrix<f64>, b: &DVector<f64>) -> Result<DVector<f64>> {
    let scale = a.amax().max(1.0);
    a.svd(true, true)
        .solve(b, scale * 1e-12)
        .map_err(|e| Error::numeric(format!("ridge least-squares solve failed: {e}")))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn two_point_closed_form() {
        // x = (0, 2), y = (1, 5): centered x = (−1, 1), centered y = (−2, 2)
        // β = Σxy / (Σx² + λ) = 4 / 3
        let x = Features::from_rows(&[vec![0.0], vec![2.0]]).unwrap();
        let m = fit_ridge(&x, &[1.0, 5.0], None, 1.0).unwrap();
        assert!((m.coef[0] - 4.0 / 3.0).abs() < 1e-12);
        assert!((m.intercept - (3.0 - 4.0 / 3.0)).abs() < 1e-12);
    }

    #[test]
    fn exact_fit_without_penalty() {
        let rows: Vec<Vec<f64>> = (0..20).map(|i| vec![i as f64, (i * i % 7) as f64]).collect();
        let y: Vec<f64> = rows.iter().map(|r| 3.0 + 2.0 * r[0] - 0.5 * r[1]).collect();
        let x = Features::from_rows(&rows).unwrap();
        let m = fit_ridge(&x, &y, None, 0.0).unwrap();
        assert!(m.train_rmse < 1e-8);
    }

    #[test]
    fn huge_penalty_predicts_the_mean() {
        let x = Features::from_rows(&[vec![1.0], vec![2.0], vec![4.0]]).unwrap();
        let m = fit_ridge(&x, &[1.0, 2.0, 6.0], None, 1e15).unwrap();
        assert!(m.coef[0].abs() < 1e-10);
        assert!((m.predict(&[10.0]) - 3.0).abs() < 1e-6);
    }

    #[test]
    fn collinear_one_hot_is_solvable_at_zero_penalty() {
        let x = Features::from_rows(&[vec![1.0, 0.0], vec![0.0, 1.0], vec![1.0, 0.0]]).unwrap();
        let m = fit_ridge(&x, &[1.0, 3.0, 1.0], None, 0.0).unwrap();
        assert!(m.train_rmse < 1e-9);
    }

    #[test]
    fn dimension_mismatch() {
        let x = Features::from_rows(&[vec![1.0]]).unwrap();
        assert!(fit_ridge(&x, &[1.0, 2.0], None, 1.0).is_err());
    }
}
