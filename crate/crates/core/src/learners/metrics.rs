//! Scores used for model selection and reporting.

/// Area under the ROC curve via the rank-sum statistic, with tied scores
/// given their average rank. Returns 0.5 when either class is absent.
pub fn auc(scores: &[f64], positive: &[bool]) -> f64 {
    let n = scores.len();
    let n_pos = positive.iter().filter(|p| **p).count();
    let n_neg = n - n_pos;
    if n_pos == 0 || n_neg == 0 {
        return 0.5;
    }
    let mut idx: Vec<usize> = (0..n).collect();
    idx.sort_by(|&a, &b| scores[a].total_cmp(&scores[b]));
    let mut rank_sum = 0.0;
    let mut i = 0;
    while i < n {
        let mut j = i;
        while j + 1 < n && scores[idx[j + 1]] == scores[idx[i]] {
            j += 1;
        }
        let avg = (i + j) as f64 / 2.0 + 1.0;
        for &k in &idx[i..=j] {
            if positive[k] {
                rank_sum += avg;
            }
        }
        i = j + 1;
    }
    let np = n_pos as f64;
    (rank_sum - np * (np + 1.0) / 2.0) / (np * n_neg as f64)
}

/// Macro-averaged one-vs-rest AUC over the classes present in `labels`.
/// `proba` is row-major n x k.
pub fn macro_auc(proba: &[f64], k: usize, labels: &[usize]) -> f64 {
    let n = labels.len();
    let mut total = 0.0;
    let mut used = 0;
    for c in 0..k {
        let pos: Vec<bool> = labels.iter().map(|&l| l == c).collect();
        let n_pos = pos.iter().filter(|p| **p).count();
        if n_pos == 0 || n_pos == n {
            continue;
        }
        let scores: Vec<f64> = (0..n).map(|i| proba[i * k + c]).collect();
        total += auc(&scores, &pos);
        used += 1;
    }
    if used == 0 {
        0.5
    } else {
        total / used as f64
    }
}

/// Coefficient of determination. NaN if the truth has zero variance.
pub fn r2(pred: &[f64], truth: &[f64]) -> f64 {
    let n = truth.len() as f64;
    let mean = truth.iter().sum::<f64>() / n;
    let ss_tot: f64 = truth.iter().map(|t| (t - mean).powi(2)).sum();
    let ss_res: f64 = pred.iter().zip(truth).map(|(p, t)| (t - p).powi(2)).sum();
    if ss_tot == 0.0 {
        return f64::NAN;
    }
    1.0 - ss_res / ss_tot
}

pub fn rmse(pred: &[f64], truth: &[f64]) -> f64 {
    let n = truth.len().max(1) as f64;
    (pred.iter().zip(truth).map(|(p, t)| (t - p).powi(2)).sum::<f64>() / n).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn auc_perfect_and_reversed() {
        let s = [0.1, 0.2, 0.8, 0.9];
        let y = [false, false, true, true];
        assert_eq!(auc(&s, &y), 1.0);
        let r: Vec<f64> = s.iter().map(|v| -v).collect();
        assert_eq!(auc(&r, &y), 0.0);
    }

    #[test]
    fn auc_ties_count_half() {
        assert_eq!(auc(&[0.5, 0.5], &[false, true]), 0.5);
        // brute-force pair count
        let s = [0.3, 0.3, 0.7, 0.1, 0.7];
        let y = [true, false, true, false, false];
        let mut num = 0.0;
        let mut den = 0.0;
        for i in 0..5 {
            for j in 0..5 {
                if y[i] && !y[j] {
                    den += 1.0;
                    num += if s[i] > s[j] { 1.0 } else if s[i] == s[j] { 0.5 } else { 0.0 };
                }
            }
        }
        assert!((auc(&s, &y) - num / den).abs() < 1e-12);
    }

    #[test]
    fn r2_reference_values() {
        let t = [1.0, -1.0, 2.0, -2.0];
        assert_eq!(r2(&t, &t), 1.0);
        assert_eq!(r2(&[0.0; 4], &t), 0.0);
        let neg: Vec<f64> = t.iter().map(|v| -v).collect();
        assert!((r2(&neg, &t) + 3.0).abs() < 1e-12);
        assert!(r2(&[1.0, 1.0], &[2.0, 2.0]).is_nan());
    }
}
