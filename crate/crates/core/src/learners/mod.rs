//! Regression and classification learners used by samplers and estimators.
//!
//! Every learner works on an encoded [`Features`] matrix and is deterministic
//! given its data, hyperparameters and seed. Fitting is single-threaded;
//! callers parallelize across independent fits.

pub mod cv;
pub mod features;
pub mod logistic;
pub mod metrics;
pub mod ridge;
pub mod tree;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
pub use cv::{contiguous_folds, cross_validate, sample_grid, select_classifier, select_regressor, CvResult, CvTarget};
pub use features::{FeatureEncoder, Features};
pub use logistic::{fit_logistic, softmax, LbfgsOptions, LogisticModel};
pub use ridge::{fit_ridge, RidgeModel};
pub use tree::{
    fit_boosted, fit_forest, BoostObjective, BoostParams, Boosted, Forest, ForestParams, MaxFeatures,
};

/// Smallest probability turned into a logit, keeping logits finite.
const PROB_FLOOR: f64 = 1e-300;

fn default_max_iter() -> usize {
    1000
}
fn default_n_trees() -> usize {
    100
}
fn default_min_samples_leaf() -> usize {
    1
}
fn default_true() -> bool {
    true
}
fn default_rounds() -> usize {
    100
}
fn default_eta() -> f64 {
    0.3
}
fn default_depth() -> usize {
    6
}
fn default_lambda() -> f64 {
    1.0
}
fn default_max_features() -> MaxFeatures {
    MaxFeatures::Sqrt
}

/// A learner family plus its hyperparameters, as written in config files.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum LearnerSpec {
    Ridge {
        alpha: f64,
    },
    Logistic {
        c: f64,
        #[serde(default = "default_max_iter")]
        max_iter: usize,
    },
    Forest {
        #[serde(default = "default_n_trees")]
        n_trees: usize,
        #[serde(default)]
        max_depth: Option<usize>,
        #[serde(default = "default_min_samples_leaf")]
        min_samples_leaf: usize,
        #[serde(default = "default_max_features")]
        max_features: MaxFeatures,
        #[serde(default = "default_true")]
        bootstrap: bool,
        #[serde(default)]
        seed: u64,
    },
    Boosted {
        #[serde(default = "default_rounds")]
        n_rounds: usize,
        #[serde(default = "default_eta")]
        eta: f64,
        #[serde(default = "default_depth")]
        max_depth: usize,
        #[serde(default = "default_min_samples_leaf")]
        min_samples_leaf: usize,
        #[serde(default = "default_lambda")]
        lambda: f64,
        #[serde(default = "default_lambda")]
        min_child_weight: f64,
    },
}

impl LearnerSpec {
    pub fn name(&self) -> &'static str {
        match self {
            LearnerSpec::Ridge { .. } => "ridge",
            LearnerSpec::Logistic { .. } => "logistic",
            LearnerSpec::Forest { .. } => "forest",
            LearnerSpec::Boosted { .. } => "boosted",
        }
    }

    /// Short human-readable hyperparameter summary.
    pub fn describe(&self) -> String {
        match *self {
            LearnerSpec::Ridge { alpha } => format!("ridge(alpha={alpha})"),
            LearnerSpec::Logistic { c, .. } => format!("logistic(C={c})"),
            LearnerSpec::Forest {
                n_trees,
                max_depth,
                min_samples_leaf,
                ..
            } => match max_depth {
                Some(d) => format!("forest(n_trees={n_trees},max_depth={d},min_samples_leaf={min_samples_leaf})"),
                None => format!("forest(n_trees={n_trees},min_samples_leaf={min_samples_leaf})"),
            },
            LearnerSpec::Boosted { eta, max_depth, n_rounds, .. } => {
                format!("boosted(n_rounds={n_rounds},eta={eta},max_depth={max_depth})")
            }
        }
    }

    fn forest_params(&self) -> Option<ForestParams> {
        match *self {
            LearnerSpec::Forest {
                n_trees,
                max_depth,
                min_samples_leaf,
                max_features,
                bootstrap,
                seed,
            } => Some(ForestParams {
                n_trees,
                max_depth,
                min_samples_leaf,
                max_features,
                bootstrap,
                seed,
            }),
            _ => None,
        }
    }

    fn boost_params(&self) -> Option<BoostParams> {
        match *self {
            LearnerSpec::Boosted {
                n_rounds,
                eta,
                max_depth,
                min_samples_leaf,
                lambda,
                min_child_weight,
            } => Some(BoostParams {
                n_rounds,
                eta,
                max_depth,
                min_samples_leaf,
                lambda,
                min_child_weight,
            }),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum RegressionModel {
    Ridge(RidgeModel),
    Forest(Forest),
    Boosted(Boosted),
}

impl RegressionModel {
    pub fn predict(&self, x: &[f64]) -> f64 {
        match self {
            RegressionModel::Ridge(m) => m.predict(x),
            RegressionModel::Forest(f) => f.predict(x)[0],
            RegressionModel::Boosted(b) => b.margins(x)[0],
        }
    }

    pub fn predict_all(&self, x: &Features) -> Vec<f64> {
        (0..x.n_rows()).map(|i| self.predict(x.row(i))).collect()
    }
}

/// A fitted regression model with its training RMSE.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Regressor {
    pub spec: LearnerSpec,
    pub model: RegressionModel,
    pub train_rmse: f64,
}

impl Regressor {
    pub fn predict(&self, x: &[f64]) -> f64 {
        self.model.predict(x)
    }

    pub fn predict_all(&self, x: &Features) -> Vec<f64> {
        self.model.predict_all(x)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum ClassificationModel {
    Logistic(LogisticModel),
    Forest(Forest),
    Boosted(Boosted),
}

/// A fitted classifier over `n_classes` ordered labels.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Classifier {
    pub spec: LearnerSpec,
    pub n_classes: usize,
    pub model: ClassificationModel,
}

impl Classifier {
    pub fn logits(&self, x: &[f64]) -> Vec<f64> {
        match &self.model {
            ClassificationModel::Logistic(m) => m.logits(x),
            ClassificationModel::Forest(f) => f.predict(x).iter().map(|p| p.max(PROB_FLOOR).ln()).collect(),
            ClassificationModel::Boosted(b) => match b.objective {
                BoostObjective::Logistic => vec![0.0, b.margins(x)[0]],
                _ => b.margins(x),
            },
        }
    }

    pub fn predict_proba(&self, x: &[f64]) -> Vec<f64> {
        match &self.model {
            ClassificationModel::Forest(f) => f.predict(x),
            _ => softmax(&self.logits(x)),
        }
    }

    /// Row-major n x k probabilities.
    pub fn predict_proba_all(&self, x: &Features) -> Vec<f64> {
        (0..x.n_rows()).flat_map(|i| self.predict_proba(x.row(i))).collect()
    }

    /// P(class 1) for binary problems.
    pub fn positive_proba(&self, x: &Features) -> Vec<f64> {
        (0..x.n_rows()).map(|i| self.predict_proba(x.row(i))[1]).collect()
    }
}

pub fn fit_regressor(spec: &LearnerSpec, x: &Features, y: &[f64], weights: Option<&[f64]>) -> Result<Regressor> {
    if y.len() != x.n_rows() {
        return Err(Error::data("regressor: length mismatch between X and y"));
    }
    if y.iter().any(|v| !v.is_finite()) {
        return Err(Error::numeric("regressor: non-finite target"));
    }
    let model = match spec {
        LearnerSpec::Ridge { alpha } => RegressionModel::Ridge(fit_ridge(x, y, weights, *alpha)?),
        LearnerSpec::Forest { .. } => {
            RegressionModel::Forest(fit_forest(x, y, 1, weights, &spec.forest_params().expect("forest"))?)
        }
        LearnerSpec::Boosted { .. } => RegressionModel::Boosted(fit_boosted(
            x,
            y,
            BoostObjective::SquaredError,
            weights,
            &spec.boost_params().expect("boosted"),
        )?),
        LearnerSpec::Logistic { .. } => {
            return Err(Error::config("logistic learner cannot be used for regression"));
        }
    };
    let pred = model.predict_all(x);
    let (mut sse, mut sw) = (0.0, 0.0);
    for i in 0..y.len() {
        let w = weights.map_or(1.0, |w| w[i]);
        sse += w * (y[i] - pred[i]).powi(2);
        sw += w;
    }
    Ok(Regressor {
        spec: *spec,
        model,
        train_rmse: (sse / sw.max(f64::MIN_POSITIVE)).sqrt(),
    })
}

pub fn fit_classifier(
    spec: &LearnerSpec,
    x: &Features,
    y: &[usize],
    n_classes: usize,
    weights: Option<&[f64]>,
) -> Result<Classifier> {
    if y.len() != x.n_rows() {
        return Err(Error::data("classifier: length mismatch between X and y"));
    }
    if let Some(&bad) = y.iter().find(|&&l| l >= n_classes) {
        return Err(Error::data(format!("classifier: label {bad} outside {n_classes} classes")));
    }
    let distinct = {
        let mut seen = vec![false; n_classes];
        y.iter().for_each(|&l| seen[l] = true);
        seen.iter().filter(|s| **s).count()
    };
    if distinct < 2 {
        return Err(Error::data("classifier: y has a single class"));
    }
    let model = match spec {
        LearnerSpec::Logistic { c, max_iter } => ClassificationModel::Logistic(fit_logistic(
            x,
            y,
            n_classes,
            weights,
            *c,
            LbfgsOptions {
                max_iter: *max_iter,
                ..LbfgsOptions::default()
            },
        )?),
        LearnerSpec::Forest { .. } => {
            let mut onehot = vec![0.0; y.len() * n_classes];
            for (i, &l) in y.iter().enumerate() {
                onehot[i * n_classes + l] = 1.0;
            }
            ClassificationModel::Forest(fit_forest(
                x,
                &onehot,
                n_classes,
                weights,
                &spec.forest_params().expect("forest"),
            )?)
        }
        LearnerSpec::Boosted { .. } => {
            let objective = if n_classes == 2 {
                BoostObjective::Logistic
            } else {
                BoostObjective::Softmax(n_classes)
            };
            let yf: Vec<f64> = y.iter().map(|&l| l as f64).collect();
            ClassificationModel::Boosted(fit_boosted(x, &yf, objective, weights, &spec.boost_params().expect("boosted"))?)
        }
        LearnerSpec::Ridge { .. } => {
            return Err(Error::config("ridge learner cannot be used for classification"));
        }
    };
    Ok(Classifier {
        spec: *spec,
        n_classes,
        model,
    })
}
