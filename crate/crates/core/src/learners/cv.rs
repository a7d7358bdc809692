use serde::{Deserialize, Serialize};

use super::features::Features;
use super::metrics::{macro_auc, r2};
use super::{fit_classifier, fit_regressor, Classifier, LearnerSpec, Regressor};
use crate::error::{Error, Result};
use crate::noise::{index_below, seeded_rng};
use crate::par;

#[derive(Debug, Clone, Copy)]
pub enum CvTarget<'a> {
    /// Scored by R².
    Regression(&'a [f64]),
    /// Scored by macro one-vs-rest AUC.
    Classification { labels: &'a [usize], n_classes: usize },
}

impl CvTarget<'_> {
    fn len(&self) -> usize {
        match self {
            CvTarget::Regression(y) => y.len(),
            CvTarget::Classification { labels, .. } => labels.len(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CvResult {
    pub grid: Vec<LearnerSpec>,
    /// Mean held-out score per grid entry.
    pub scores: Vec<f64>,
    pub selected: usize,
    /// Held-out index ranges [start, end).
    pub folds: Vec<(usize, usize)>,
}

impl CvResult {
    pub fn best_score(&self) -> f64 {
        self.scores[self.selected]
    }

    pub fn selected_spec(&self) -> &LearnerSpec {
        &self.grid[self.selected]
    }
}

/// Non-random folds: k contiguous blocks in row order.
pub fn contiguous_folds(n: usize, k: usize) -> Result<Vec<(usize, usize)>> {
    if k < 2 || n < k {
        return Err(Error::data(format!("cannot split {n} rows into {k} folds")));
    }
    Ok((0..k).map(|f| (f * n / k, (f + 1) * n / k)).collect())
}

/// Up to `max` settings drawn uniformly without replacement, kept in grid order.
pub fn sample_grid<T: Clone>(grid: &[T], max: usize, seed: u64) -> Vec<T> {
    if grid.len() <= max {
        return grid.to_vec();
    }
    let mut rng = seeded_rng(seed, 0x6772_6964);
    let mut idx: Vec<usize> = (0..grid.len()).collect();
    for j in 0..max {
        let r = j + index_below(&mut rng, grid.len() - j);
        idx.swap(j, r);
    }
    let mut chosen = idx[..max].to_vec();
    chosen.sort_unstable();
    chosen.into_iter().map(|i| grid[i].clone()).collect()
}

fn fold_score(spec: &LearnerSpec, x: &Features, target: CvTarget, weights: Option<&[f64]>, fold: (usize, usize)) -> Result<f64> {
    let n = x.n_rows();
    let train: Vec<usize> = (0..fold.0).chain(fold.1..n).collect();
    let test: Vec<usize> = (fold.0..fold.1).collect();
    let xtr = x.take_rows(&train);
    let xte = x.take_rows(&test);
    let wtr: Option<Vec<f64>> = weights.map(|w| train.iter().map(|&i| w[i]).collect());
    match target {
        CvTarget::Regression(y) => {
            let ytr: Vec<f64> = train.iter().map(|&i| y[i]).collect();
            let m = fit_regressor(spec, &xtr, &ytr, wtr.as_deref())?;
            let pred = m.predict_all(&xte);
            let truth: Vec<f64> = test.iter().map(|&i| y[i]).collect();
            Ok(match weights {
                None => r2(&pred, &truth),
                Some(w) => weighted_r2(&pred, &truth, &test.iter().map(|&i| w[i]).collect::<Vec<_>>()),
            })
        }
        CvTarget::Classification { labels, n_classes } => {
            let ytr: Vec<usize> = train.iter().map(|&i| labels[i]).collect();
            let m = fit_classifier(spec, &xtr, &ytr, n_classes, wtr.as_deref())?;
            let proba = m.predict_proba_all(&xte);
            let truth: Vec<usize> = test.iter().map(|&i| labels[i]).collect();
            Ok(macro_auc(&proba, n_classes, &truth))
        }
    }
}

fn weighted_r2(pred: &[f64], truth: &[f64], w: &[f64]) -> f64 {
    let sw: f64 = w.iter().sum();
    let mean = truth.iter().zip(w).map(|(t, w)| t * w).sum::<f64>() / sw;
    let ss_tot: f64 = truth.iter().zip(w).map(|(t, w)| w * (t - mean).powi(2)).sum();
    let ss_res: f64 = pred.iter().zip(truth).zip(w).map(|((p, t), w)| w * (t - p).powi(2)).sum();
    if ss_tot == 0.0 {
        f64::NAN
    } else {
        1.0 - ss_res / ss_tot
    }
}

/// Score every grid entry on every contiguous fold. The winner has the
/// largest mean score; ties go to the earliest entry, NaN scores never win.
pub fn cross_validate(
    grid: &[LearnerSpec],
    x: &Features,
    target: CvTarget,
    weights: Option<&[f64]>,
    k: usize,
) -> Result<CvResult> {
    if grid.is_empty() {
        return Err(Error::config("empty hyperparameter grid"));
    }
    if target.len() != x.n_rows() {
        return Err(Error::data("cross-validation: length mismatch between X and target"));
    }
    let folds = contiguous_folds(x.n_rows(), k)?;
    let jobs = grid.len() * folds.len();
    let fold_scores = par::try_map_range(jobs, |j| {
        fold_score(&grid[j / folds.len()], x, target, weights, folds[j % folds.len()])
    })?;
    let scores: Vec<f64> = fold_scores
        .chunks(folds.len())
        .map(|s| s.iter().sum::<f64>() / s.len() as f64)
        .collect();
    let mut selected = 0;
    for (i, s) in scores.iter().enumerate() {
        if *s > scores[selected] || scores[selected].is_nan() && !s.is_nan() {
            selected = i;
        }
    }
    Ok(CvResult {
        grid: grid.to_vec(),
        scores,
        selected,
        folds,
    })
}

/// Cross-validate, then refit the winning setting on all rows.
pub fn select_regressor(grid: &[LearnerSpec], x: &Features, y: &[f64], weights: Option<&[f64]>, k: usize) -> Result<(Regressor, CvResult)> {
    let cv = cross_validate(grid, x, CvTarget::Regression(y), weights, k)?;
    let model = fit_regressor(cv.selected_spec(), x, y, weights)?;
    Ok((model, cv))
}

pub fn select_classifier(
    grid: &[LearnerSpec],
    x: &Features,
    labels: &[usize],
    n_classes: usize,
    weights: Option<&[f64]>,
    k: usize,
) -> Result<(Classifier, CvResult)> {
    let cv = cross_validate(grid, x, CvTarget::Classification { labels, n_classes }, weights, k)?;
    let model = fit_classifier(cv.selected_spec(), x, labels, n_classes, weights)?;
    Ok((model, cv))
}
