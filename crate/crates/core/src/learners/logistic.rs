use serde::{Deserialize, Serialize};

use super::features::Features;
use crate::error::{Error, Result};

/// Logit assigned to classes that never occur in the training data.
const ABSENT_LOGIT: f64 = -50.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LbfgsOptions {
    pub max_iter: usize,
    pub tol: f64,
    pub memory: usize,
}

impl Default for LbfgsOptions {
    fn default() -> Self {
        Self {
            max_iter: 1000,
            tol: 1e-6,
            memory: 10,
        }
    }
}

/// Multinomial logistic regression: one weight row and intercept per class.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogisticModel {
    pub n_classes: usize,
    pub n_features: usize,
    /// Row-major k x p.
    pub coef: Vec<f64>,
    pub intercept: Vec<f64>,
    pub c: f64,
    pub iterations: usize,
    pub grad_norm: f64,
}

impl LogisticModel {
    pub fn logits(&self, x: &[f64]) -> Vec<f64> {
        let p = self.n_features;
        (0..self.n_classes)
            .map(|c| {
                self.intercept[c]
                    + self.coef[c * p..(c + 1) * p]
                        .iter()
                        .zip(x)
                        .map(|(w, v)| w * v)
                        .sum::<f64>()
            })
            .collect()
    }

    pub fn predict_proba(&self, x: &[f64]) -> Vec<f64> {
        softmax(&self.logits(x))
    }
}

pub fn softmax(logits: &[f64]) -> Vec<f64> {
    let m = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let e: Vec<f64> = logits.iter().map(|l| (l - m).exp()).collect();
    let s: f64 = e.iter().sum();
    e.into_iter().map(|v| v / s).collect()
}

/// Penalized negative log-likelihood, normalized by total sample weight:
/// F(W, b) = Σ wᵢ·CE(xᵢ, yᵢ) / Σw + ‖W‖² / (2·C·Σw).
/// Parameters are packed as [W (k x p row-major), b (k)].
pub struct LogisticProblem<'a> {
    x: &'a Features,
    y: Vec<usize>,
    weights: Option<&'a [f64]>,
    k: usize,
    c: f64,
    sw: f64,
}

impl<'a> LogisticProblem<'a> {
    pub fn new(x: &'a Features, y: &[usize], k: usize, weights: Option<&'a [f64]>, c: f64) -> Result<Self> {
        if y.len() != x.n_rows() || weights.is_some_and(|w| w.len() != y.len()) {
            return Err(Error::data("logistic: length mismatch between X and y"));
        }
        if !(c > 0.0) {
            return Err(Error::config(format!("logistic: C must be > 0, got {c}")));
        }
        if let Some(&bad) = y.iter().find(|&&l| l >= k) {
            return Err(Error::data(format!("logistic: label {bad} outside {k} classes")));
        }
        let sw = weights.map_or(y.len() as f64, |w| w.iter().sum());
        Ok(Self {
            x,
            y: y.to_vec(),
            weights,
            k,
            c,
            sw,
        })
    }

    pub fn n_params(&self) -> usize {
        self.k * (self.x.n_cols() + 1)
    }

    pub fn value_grad(&self, theta: &[f64], grad: &mut [f64]) -> f64 {
        let p = self.x.n_cols();
        let k = self.k;
        let (w_mat, b) = theta.split_at(k * p);
        grad.iter_mut().for_each(|g| *g = 0.0);
        let mut loss = 0.0;
        let mut z = vec![0.0; k];
        for i in 0..self.y.len() {
            let wi = self.weights.map_or(1.0, |w| w[i]);
            if wi == 0.0 {
                continue;
            }
            let row = self.x.row(i);
            let nz = self.x.nonzero(i);
            for c in 0..k {
                let wc = &w_mat[c * p..(c + 1) * p];
                z[c] = b[c] + nz.iter().map(|&j| wc[j as usize] * row[j as usize]).sum::<f64>();
            }
            let m = z.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let s: f64 = z.iter().map(|v| (v - m).exp()).sum();
            let lse = m + s.ln();
            loss += wi * (lse - z[self.y[i]]);
            for c in 0..k {
                let r = wi * ((z[c] - lse).exp() - if c == self.y[i] { 1.0 } else { 0.0 });
                for &j in nz {
                    grad[c * p + j as usize] += r * row[j as usize];
                }
                grad[k * p + c] += r;
            }
        }
        let inv = 1.0 / self.sw;
        let pen = 1.0 / (self.c * self.sw);
        grad.iter_mut().for_each(|g| *g *= inv);
        let mut reg = 0.0;
        for (g, w) in grad[..k * p].iter_mut().zip(w_mat) {
            *g += pen * w;
            reg += w * w;
        }
        loss * inv + 0.5 * pen * reg
    }
}

/// Fit by L-BFGS until the largest gradient component falls below `opts.tol`
/// or the iteration cap is reached.
pub fn fit_logistic(
    x: &Features,
    y: &[usize],
    k: usize,
    weights: Option<&[f64]>,
    c: f64,
    opts: LbfgsOptions,
) -> Result<LogisticModel> {
    if k < 2 {
        return Err(Error::data("logistic: need at least two classes"));
    }
    let mut present = vec![false; k];
    for (i, &l) in y.iter().enumerate() {
        if l < k && weights.is_none_or(|w| w[i] > 0.0) {
            present[l] = true;
        }
    }
    let classes: Vec<usize> = (0..k).filter(|&c| present[c]).collect();
    if classes.len() < 2 {
        return Err(Error::data("logistic: y has a single class"));
    }
    // Fit on the observed classes only; absent classes get a fixed low logit.
    let mut remap = vec![usize::MAX; k];
    for (r, &c) in classes.iter().enumerate() {
        remap[c] = r;
    }
    let y_local: Vec<usize> = y.iter().map(|&l| remap.get(l).copied().unwrap_or(usize::MAX)).collect();
    let kk = classes.len();
    let problem = LogisticProblem::new(x, &y_local, kk, weights, c)?;
    let p = x.n_cols();
    let mut theta = vec![0.0; problem.n_params()];
    // Start the intercepts at the log class frequencies.
    let mut freq = vec![0.0; kk];
    for (i, &l) in y_local.iter().enumerate() {
        freq[l] += weights.map_or(1.0, |w| w[i]);
    }
    let total: f64 = freq.iter().sum();
    for r in 0..kk {
        theta[kk * p + r] = (freq[r] / total).ln();
    }
    let (iterations, grad_norm) = lbfgs(&mut theta, opts, |t, g| problem.value_grad(t, g))?;

    let mut coef = vec![0.0; k * p];
    let mut intercept = vec![ABSENT_LOGIT; k];
    for (r, &cl) in classes.iter().enumerate() {
        coef[cl * p..(cl + 1) * p].copy_from_slice(&theta[r * p..(r + 1) * p]);
        intercept[cl] = theta[kk * p + r];
    }
    Ok(LogisticModel {
        n_classes: k,
        n_features: p,
        coef,
        intercept,
        c,
        iterations,
        grad_norm,
    })
}

/// Limited-memory BFGS with a backtracking Armijo line search. Returns the
/// iteration count and the final max-norm of the gradient.
pub fn lbfgs<F>(x: &mut [f64], opts: LbfgsOptions, mut f: F) -> Result<(usize, f64)>
where
    F: FnMut(&[f64], &mut [f64]) -> f64,
{
    let n = x.len();
    let mut g = vec![0.0; n];
    let mut fx = f(x, &mut g);
    if !fx.is_finite() {
        return Err(Error::numeric("objective is not finite at the starting point"));
    }
    let mut s_hist: Vec<Vec<f64>> = Vec::new();
    let mut y_hist: Vec<Vec<f64>> = Vec::new();
    let mut rho: Vec<f64> = Vec::new();
    let mut x_new = vec![0.0; n];
    let mut g_new = vec![0.0; n];
    let norm_inf = |v: &[f64]| v.iter().fold(0.0f64, |m, a| m.max(a.abs()));

    let mut iter = 0;
    while iter < opts.max_iter {
        if norm_inf(&g) < opts.tol {
            break;
        }
        // two-loop recursion
        let mut d: Vec<f64> = g.iter().map(|v| -v).collect();
        let m = s_hist.len();
        let mut alpha = vec![0.0; m];
        for i in (0..m).rev() {
            alpha[i] = rho[i] * dot(&s_hist[i], &d);
            axpy(-alpha[i], &y_hist[i], &mut d);
        }
        if m > 0 {
            let gamma = dot(&s_hist[m - 1], &y_hist[m - 1]) / dot(&y_hist[m - 1], &y_hist[m - 1]);
            d.iter_mut().for_each(|v| *v *= gamma);
        } else {
            let gn = dot(&g, &g).sqrt();
            d.iter_mut().for_each(|v| *v /= gn.max(1.0));
        }
        for i in 0..m {
            let beta = rho[i] * dot(&y_hist[i], &d);
            axpy(alpha[i] - beta, &s_hist[i], &mut d);
        }
        let mut slope = dot(&g, &d);
        if !(slope < 0.0) {
            // not a descent direction: reset memory and use steepest descent
            s_hist.clear();
            y_hist.clear();
            rho.clear();
            d = g.iter().map(|v| -v).collect();
            slope = -dot(&g, &g);
        }

        let mut step = 1.0;
        let mut accepted = false;
        for _ in 0..60 {
            for i in 0..n {
                x_new[i] = x[i] + step * d[i];
            }
            let f_new = f(&x_new, &mut g_new);
            if f_new.is_finite() && f_new <= fx + 1e-4 * step * slope {
                let s: Vec<f64> = (0..n).map(|i| x_new[i] - x[i]).collect();
                let yv: Vec<f64> = (0..n).map(|i| g_new[i] - g[i]).collect();
                let sy = dot(&s, &yv);
                if sy > 1e-12 * dot(&yv, &yv).max(f64::MIN_POSITIVE) {
                    if s_hist.len() == opts.memory {
                        s_hist.remove(0);
                        y_hist.remove(0);
                        rho.remove(0);
                    }
                    s_hist.push(s);
                    y_hist.push(yv);
                    rho.push(1.0 / sy);
                }
                x.copy_from_slice(&x_new);
                g.copy_from_slice(&g_new);
                fx = f_new;
                accepted = true;
                break;
            }
            step *= 0.5;
        }
        iter += 1;
        if !accepted {
            // the line search can no longer make progress at machine precision
            break;
        }
    }
    Ok((iter, norm_inf(&g)))
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn axpy(a: f64, x: &[f64], y: &mut [f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += a * xi;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toy() -> (Features, Vec<usize>) {
        let rows: Vec<Vec<f64>> = (0..40)
            .map(|i| vec![(i % 7) as f64 / 3.0 - 1.0, (i % 5) as f64 / 2.0 - 1.0])
            .collect();
        let y: Vec<usize> = (0..40).map(|i| (i * 7 + i / 3) % 3).collect();
        (Features::from_rows(&rows).unwrap(), y)
    }

    #[test]
    fn converges_to_tolerance() {
        let (x, y) = toy();
        let m = fit_logistic(&x, &y, 3, None, 1.0, LbfgsOptions::default()).unwrap();
        assert!(m.grad_norm < 1e-6, "grad {}", m.grad_norm);
    }

    #[test]
    fn probabilities_on_simplex() {
        let (x, y) = toy();
        let m = fit_logistic(&x, &y, 3, None, 10.0, LbfgsOptions::default()).unwrap();
        for i in 0..x.n_rows() {
            let p = m.predict_proba(x.row(i));
            assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-9);
            assert!(p.iter().all(|v| *v >= 0.0));
        }
    }

    #[test]
    fn absent_class_gets_low_finite_logit() {
        let (x, y) = toy();
        let y2: Vec<usize> = y.iter().map(|&l| if l == 1 { 0 } else { l }).collect();
        let m = fit_logistic(&x, &y2, 4, None, 1.0, LbfgsOptions::default()).unwrap();
        let l = m.logits(x.row(0));
        assert!(l.iter().all(|v| v.is_finite()));
        assert!(m.predict_proba(x.row(0))[3] < 1e-15);
    }

    #[test]
    fn single_class_is_an_error() {
        let (x, _) = toy();
        assert!(fit_logistic(&x, &vec![1; 40], 2, None, 1.0, LbfgsOptions::default()).is_err());
    }
}
