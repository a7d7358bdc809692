use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use seqscm::estimators::*;
use seqscm::evaluation::{bootstrap_distribution, r2_cate};
use seqscm::learners::LearnerSpec;
use seqscm::table::{Table, VariableSchema};

fn table(z: Vec<Vec<f64>>, a: Vec<f64>, y: Vec<f64>) -> EstimationTable {
    let schema = (0..z.len()).map(|j| VariableSchema::continuous(format!("z{j}"), "")).collect();
    EstimationTable::new(Table::from_columns(schema, z).unwrap(), a, y).unwrap()
}

fn normal(rng: &mut ChaCha8Rng) -> f64 {
    StandardNormal.sample(rng)
}

fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

fn ridge(alpha: f64) -> Vec<LearnerSpec> {
    vec![LearnerSpec::Ridge { alpha }]
}

/// OLS of y on [1, columns...] via the normal equations.
fn ols(columns: &[&[f64]], y: &[f64]) -> Vec<f64> {
    let n = y.len();
    let p = columns.len() + 1;
    let x = DMatrix::from_fn(n, p, |i, j| if j == 0 { 1.0 } else { columns[j - 1][i] });
    let xtx = x.transpose() * &x;
    let xty = x.transpose() * DVector::from_column_slice(y);
    xtx.lu().solve(&xty).unwrap().iter().copied().collect()
}

#[test]
fn ipw_with_true_propensities_recovers_effect() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let n = 10_000;
    let tau = 5.0;
    let z: Vec<f64> = (0..n).map(|_| normal(&mut rng)).collect();
    let e: Vec<f64> = z.iter().map(|z| sigmoid(0.8 * z)).collect();
    let a: Vec<f64> = e.iter().map(|p| f64::from(rng.random::<f64>() < *p)).collect();
    let y: Vec<f64> = (0..n).map(|i| tau * a[i] + z[i] + 0.5 * normal(&mut rng)).collect();
    for v in [IpwVariant::HorvitzThompson, IpwVariant::Hayek] {
        let (ate, _) = ipw_ate(&a, &y, &e, v, 0.0).unwrap();
        assert!((ate - tau).abs() < 0.05 * tau, "{v:?}: {ate}");
    }
    // Ignoring confounding is visibly biased here.
    let (naive, _) = ipw_ate(&a, &y, &vec![0.5; n], IpwVariant::Hayek, 0.0).unwrap();
    assert!((naive - tau).abs() > 0.5);
}

#[test]
fn hayek_with_constant_half_is_difference_of_means() {
    let a = [1.0, 0.0, 1.0, 0.0, 0.0];
    let y = [4.0, 1.0, 6.0, 2.0, 3.0];
    let (ate, _) = ipw_ate(&a, &y, &[0.5; 5], IpwVariant::Hayek, 0.01).unwrap();
    assert!((ate - (5.0 - 2.0)).abs() < 1e-12);
}

#[test]
fn horvitz_thompson_equals_hayek_on_balanced_design() {
    let a = [1.0, 0.0, 1.0, 0.0, 1.0, 0.0];
    let y = [3.5, 1.0, 2.0, 7.0, 4.0, 0.5];
    let ht = ipw_ate(&a, &y, &[0.5; 6], IpwVariant::HorvitzThompson, 0.0).unwrap().0;
    let hk = ipw_ate(&a, &y, &[0.5; 6], IpwVariant::Hayek, 0.0).unwrap().0;
    assert_eq!(ht, hk);
}

#[test]
fn dml_matches_frisch_waugh_coefficient() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let n = 10_000;
    let z1: Vec<f64> = (0..n).map(|_| normal(&mut rng)).collect();
    let z2: Vec<f64> = (0..n).map(|_| normal(&mut rng)).collect();
    let a: Vec<f64> = (0..n)
        .map(|i| f64::from(0.5 * z1[i] - 0.3 * z2[i] + normal(&mut rng) > 0.0))
        .collect();
    let y: Vec<f64> = (0..n)
        .map(|i| 2.0 * a[i] + z1[i] + 0.5 * z2[i] + normal(&mut rng))
        .collect();
    let oracle = ols(&[&a, &z1, &z2], &y)[1];
    let t = table(vec![z1, z2], a, y);
    let settings = EstimatorSettings::default();
    let ctx = EstimationContext::new(&t, None, &settings).unwrap();
    let est = ctx.dml(&ridge(1e-8), &ridge(1e-8), &ridge(1e-8)).unwrap();
    assert!((est.ate - oracle).abs() < 1e-2, "dml {} vs oracle {oracle}", est.ate);
    assert!((est.ate - 2.0).abs() < 0.1);
    let cate = est.cate.unwrap();
    let mean = cate.iter().sum::<f64>() / cate.len() as f64;
    assert!((mean - est.ate).abs() < 1e-9);
}

#[test]
fn dml_with_logistic_propensity_recovers_effect() {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let n = 10_000;
    let z: Vec<f64> = (0..n).map(|_| normal(&mut rng)).collect();
    let a: Vec<f64> = z.iter().map(|z| f64::from(rng.random::<f64>() < sigmoid(*z))).collect();
    let y: Vec<f64> = (0..n).map(|i| 3.0 * a[i] + z[i] * z[i] + normal(&mut rng)).collect();
    let t = table(vec![z], a, y);
    let settings = EstimatorSettings::default();
    let ctx = EstimationContext::new(&t, None, &settings).unwrap();
    let boosted = vec![LearnerSpec::Boosted {
        n_rounds: 100,
        eta: 0.1,
        max_depth: 3,
        min_samples_leaf: 1,
        lambda: 1.0,
        min_child_weight: 1.0,
    }];
    let est = ctx
        .dml(&boosted, &[LearnerSpec::Logistic { c: 1.0, max_iter: 500 }], &ridge(1e-6))
        .unwrap();
    assert!((est.ate - 3.0).abs() < 0.05 * 3.0, "{}", est.ate);
}

#[test]
fn dml_without_treatment_variation_fails() {
    let t = table(vec![vec![0.1, 0.5, 0.9, 1.3, 1.7, 2.1]], vec![1.0; 6], vec![1.0, 2.0, 3.0, 4.0, 5.0, 6.0]);
    let settings = EstimatorSettings::default();
    let ctx = EstimationContext::new(&t, None, &settings).unwrap();
    assert!(ctx.dml(&ridge(1.0), &ridge(1.0), &ridge(1.0)).is_err());
}

#[test]
fn t_learner_recovers_heterogeneous_effect() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let n = 10_000;
    let z1: Vec<f64> = (0..n).map(|_| normal(&mut rng)).collect();
    let z2: Vec<f64> = (0..n).map(|_| normal(&mut rng)).collect();
    let a: Vec<f64> = (0..n).map(|_| f64::from(rng.random_bool(0.5))).collect();
    let y: Vec<f64> = (0..n).map(|i| z1[i] * a[i] + 0.5 * normal(&mut rng)).collect();
    let t = table(vec![z1.clone(), z2], a, y);
    let mut settings = EstimatorSettings::default();
    settings.learners.boosted_eta = vec![0.1, 0.3];
    settings.learners.boosted_max_depth = vec![3, 5];
    let est = estimate(&EstimatorSpec::TLearner(Family::Boosted), &t, &settings).unwrap();
    let r2 = r2_cate(est.cate.as_ref().unwrap(), &z1).unwrap();
    assert!(r2 > 0.8, "CATE R2 {r2}");
}

#[test]
fn s_learner_ridge_on_linear_dgp() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let n = 10_000;
    let z: Vec<f64> = (0..n).map(|_| normal(&mut rng)).collect();
    let a: Vec<f64> = z.iter().map(|z| f64::from(rng.random::<f64>() < sigmoid(*z))).collect();
    let y: Vec<f64> = (0..n).map(|i| 4.0 * a[i] - 2.0 * z[i] + normal(&mut rng)).collect();
    let t = table(vec![z], a, y);
    let est = estimate(&EstimatorSpec::SLearner(Family::Linear), &t, &EstimatorSettings::default()).unwrap();
    assert!((est.ate - 4.0).abs() < 0.05 * 4.0, "{}", est.ate);
    assert!(est.cate.is_none());
}

#[test]
fn s_learner_flexible_on_exact_effect() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let n = 2000;
    let z: Vec<f64> = (0..n).map(|_| rng.random_range(0.0..1.0)).collect();
    let a: Vec<f64> = (0..n).map(|i| f64::from(i % 2 == 0)).collect();
    let y: Vec<f64> = a.iter().map(|a| 5.0 * a).collect();
    let t = table(vec![z], a, y);
    let settings = EstimatorSettings::default();
    let ctx = EstimationContext::new(&t, None, &settings).unwrap();
    let grid = [LearnerSpec::Boosted {
        n_rounds: 100,
        eta: 0.3,
        max_depth: 3,
        min_samples_leaf: 1,
        lambda: 0.0,
        min_child_weight: 0.0,
    }];
    let est = ctx.s_learner(&grid).unwrap();
    assert!(est.cate.unwrap().iter().all(|c| (c - 5.0).abs() < 0.1));
}

#[test]
fn s_learner_null_effect() {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let n = 4000;
    let z: Vec<f64> = (0..n).map(|_| normal(&mut rng)).collect();
    let a: Vec<f64> = (0..n).map(|_| f64::from(rng.random_bool(0.5))).collect();
    let y: Vec<f64> = z.iter().map(|z| z + normal(&mut rng)).collect();
    let se = (2.0 * 2.0 / (n as f64 / 2.0)).sqrt();
    let t = table(vec![z], a, y);
    let est = estimate(&EstimatorSpec::SLearner(Family::Linear), &t, &EstimatorSettings::default()).unwrap();
    assert!(est.ate.abs() < 2.0 * se, "{} vs se {se}", est.ate);
}

#[test]
fn matching_on_exact_twins() {
    // Every treated row has an untreated twin with the same z and y lowered by 3.
    let mut z = Vec::new();
    let mut a = Vec::new();
    let mut y = Vec::new();
    for i in 0..50 {
        let zi = f64::from(i) * 0.37;
        let yi = 10.0 + zi * 2.0;
        z.extend([zi, zi]);
        a.extend([1.0, 0.0]);
        y.extend([yi, yi - 3.0]);
    }
    let t = table(vec![z], a, y);
    let est = estimate(&EstimatorSpec::Matching, &t, &EstimatorSettings::default()).unwrap();
    assert!((est.ate - 3.0).abs() < 1e-12);
    let again = estimate(&EstimatorSpec::Matching, &t, &EstimatorSettings::default()).unwrap();
    assert_eq!(est.ate, again.ate);
}

#[test]
fn t_learner_rejects_empty_arm() {
    let t = table(vec![vec![0.0, 1.0, 2.0, 3.0]], vec![0.0; 4], vec![1.0, 2.0, 3.0, 4.0]);
    assert!(estimate(&EstimatorSpec::TLearner(Family::Linear), &t, &EstimatorSettings::default()).is_err());
}

#[test]
fn randomized_design_all_families_agree_with_difference_of_means() {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let n = 3000;
    let z1: Vec<f64> = (0..n).map(|_| normal(&mut rng)).collect();
    let z2: Vec<f64> = (0..n).map(|_| normal(&mut rng)).collect();
    let a: Vec<f64> = (0..n).map(|_| f64::from(rng.random_bool(0.5))).collect();
    let y: Vec<f64> = (0..n).map(|i| 2.0 * a[i] + z1[i] + 0.5 * normal(&mut rng)).collect();
    let dom = |idx: &[usize]| {
        let (mut s1, mut n1, mut s0, mut n0) = (0.0, 0.0, 0.0, 0.0);
        for &i in idx {
            if a[i] == 1.0 {
                s1 += y[i];
                n1 += 1.0;
            } else {
                s0 += y[i];
                n0 += 1.0;
            }
        }
        s1 / n1 - s0 / n0
    };
    let all: Vec<usize> = (0..n).collect();
    let point = dom(&all);
    let draws: Vec<f64> = bootstrap_distribution(n, 500, 0, |idx| vec![dom(idx)])
        .into_iter()
        .map(|d| d[0])
        .collect();
    let m = draws.iter().sum::<f64>() / draws.len() as f64;
    let se = (draws.iter().map(|d| (d - m).powi(2)).sum::<f64>() / (draws.len() - 1) as f64).sqrt();

    let t = table(vec![z1, z2], a.clone(), y.clone());
    let settings = EstimatorSettings::default();
    let ctx = EstimationContext::new(&t, None, &settings).unwrap();
    for name in ["ipw_w_lr", "match_eu", "s_ridge", "t_ridge", "dml_linear"] {
        let est = ctx.run(&EstimatorSpec::parse(name).unwrap()).unwrap();
        assert!(
            (est.ate - point).abs() < 3.0 * se,
            "{name}: {} vs difference of means {point} (se {se})",
            est.ate
        );
    }
}

#[test]
fn cv_scores_reported_per_family() {
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    let n = 600;
    let z: Vec<f64> = (0..n).map(|_| normal(&mut rng)).collect();
    let a: Vec<f64> = z.iter().map(|z| f64::from(rng.random::<f64>() < sigmoid(2.0 * z))).collect();
    let y: Vec<f64> = (0..n).map(|i| a[i] + z[i] + 0.1 * normal(&mut rng)).collect();
    let t = table(vec![z], a, y);
    let settings = EstimatorSettings::default();
    let ctx = EstimationContext::new(&t, None, &settings).unwrap();
    let ipw = ctx.run(&EstimatorSpec::parse("ipw_lr").unwrap()).unwrap();
    assert_eq!(ipw.cv_metric, Some(CvMetric::Auc));
    assert!(ipw.cv_score.unwrap() > 0.8);
    let s = ctx.run(&EstimatorSpec::parse("s_ridge").unwrap()).unwrap();
    assert_eq!(s.cv_metric, Some(CvMetric::R2));
    assert!(s.cv_score.unwrap() > 0.9);
    let m = ctx.run(&EstimatorSpec::Matching).unwrap();
    assert_eq!(m.cv_score, None);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn s_and_t_learners_ignore_row_order(seed in 0u64..1000) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n = 60;
        let z: Vec<f64> = (0..n).map(|_| normal(&mut rng)).collect();
        let a: Vec<f64> = (0..n).map(|i| f64::from(i % 3 == 0)).collect();
        let y: Vec<f64> = (0..n).map(|i| 1.5 * a[i] + z[i] + normal(&mut rng)).collect();
        let mut perm: Vec<usize> = (0..n).collect();
        for i in (1..n).rev() {
            perm.swap(i, rng.random_range(0..=i));
        }
        let settings = EstimatorSettings::default();
        let t1 = table(vec![z.clone()], a.clone(), y.clone());
        let t2 = table(
            vec![perm.iter().map(|&i| z[i]).collect()],
            perm.iter().map(|&i| a[i]).collect(),
            perm.iter().map(|&i| y[i]).collect(),
        );
        let c1 = EstimationContext::new(&t1, None, &settings).unwrap();
        let c2 = EstimationContext::new(&t2, None, &settings).unwrap();
        let g = ridge(1.0);
        let s1 = c1.s_learner(&g).unwrap().ate;
        let s2 = c2.s_learner(&g).unwrap().ate;
        let q1 = c1.t_learner(&g).unwrap().ate;
        let q2 = c2.t_learner(&g).unwrap().ate;
        prop_assert!((s1 - s2).abs() < 1e-9, "{} {}", s1, s2);
        prop_assert!((q1 - q2).abs() < 1e-9, "{} {}", q1, q2);
    }

    #[test]
    fn regression_estimators_report_mean_cate(seed in 0u64..1000) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n = 80;
        let z: Vec<f64> = (0..n).map(|_| normal(&mut rng)).collect();
        let a: Vec<f64> = (0..n).map(|i| f64::from(i % 2 == 0)).collect();
        let y: Vec<f64> = (0..n).map(|i| a[i] * z[i] + normal(&mut rng)).collect();
        let t = table(vec![z], a, y);
        let settings = EstimatorSettings::default();
        let ctx = EstimationContext::new(&t, None, &settings).unwrap();
        for est in [ctx.t_learner(&ridge(1.0)).unwrap(), ctx.dml(&ridge(1.0), &ridge(1.0), &ridge(1.0)).unwrap()] {
            let c = est.cate.unwrap();
            let m = c.iter().sum::<f64>() / c.len() as f64;
            prop_assert!((m - est.ate).abs() < 1e-12);
        }
    }
}
