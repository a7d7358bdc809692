//! Treatment-effect estimators over a binary-treatment cross-section.
//!
//! Every estimator fits on the observational rows of an [`EstimationTable`].
//! Estimators with a CATE output predict it on a separate evaluation table
//! (the counterfactual cohort in the benchmark) and report the ATE as the
//! mean of those predictions. IPW and matching only produce an ATE, computed
//! on the training rows.

use std::collections::HashMap;
use std::sync::{Arc, Mutex};

use serde::{Deserialize, Serialize};

use crate::config::{BenchmarkConfig, Config, EstimatorConfig};
use crate::engine::CrossSection;
use crate::error::{Error, Result};
use crate::learners::{
    contiguous_folds, cross_validate, fit_classifier, fit_regressor, sample_grid, Classifier, CvResult, CvTarget,
    FeatureEncoder, Features, LearnerSpec, Regressor,
};
use crate::par;
use crate::table::Table;

/// Covariates, binary treatment and outcome for estimation.
#[derive(Debug, Clone, PartialEq)]
pub struct EstimationTable {
    /// Adjustment covariates.
    pub z: Table,
    pub a: Vec<f64>,
    pub y: Vec<f64>,
    /// Columns the CATE is expressed over. Equal to the adjustment set unless
    /// a task stratifies afterwards.
    pub conditioning: Vec<String>,
}

impl EstimationTable {
    pub fn new(z: Table, a: Vec<f64>, y: Vec<f64>) -> Result<Self> {
        if a.len() != z.n_rows() || y.len() != z.n_rows() {
            return Err(Error::data(format!(
                "estimation table: {} covariate rows, {} treatments, {} outcomes",
                z.n_rows(),
                a.len(),
                y.len()
            )));
        }
        if let Some(i) = a.iter().position(|v| *v != 0.0 && *v != 1.0) {
            return Err(Error::data(format!("treatment at row {i} is {}, expected 0 or 1", a[i])));
        }
        if let Some(i) = y.iter().position(|v| !v.is_finite()) {
            return Err(Error::numeric(format!("non-finite outcome at row {i}")));
        }
        let conditioning = z.schema().iter().map(|s| s.name.clone()).collect();
        Ok(Self { z, a, y, conditioning })
    }

    /// Keep the named covariate columns of a cross-section.
    pub fn from_cross_section(cs: &CrossSection, columns: &[&str]) -> Result<Self> {
        Self::new(cs.covariates.select(columns)?, cs.a.clone(), cs.y.clone())
    }

    pub fn with_conditioning(mut self, names: Vec<String>) -> Self {
        self.conditioning = names;
        self
    }

    pub fn len(&self) -> usize {
        self.a.len()
    }

    pub fn is_empty(&self) -> bool {
        self.a.is_empty()
    }

    pub fn adjustment(&self) -> Vec<String> {
        self.z.schema().iter().map(|s| s.name.clone()).collect()
    }

    /// Row indices with the given treatment value.
    pub fn arm(&self, treated: bool) -> Vec<usize> {
        let v = f64::from(u8::from(treated));
        (0..self.len()).filter(|&i| self.a[i] == v).collect()
    }

    fn labels(&self) -> Vec<usize> {
        self.a.iter().map(|v| *v as usize).collect()
    }

    fn require_both_arms(&self) -> Result<()> {
        let n1 = self.a.iter().filter(|v| **v == 1.0).count();
        if n1 == 0 || n1 == self.len() {
            return Err(Error::data(format!(
                "estimator needs both arms, got {n1} treated of {} rows",
                self.len()
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum CvMetric {
    Auc,
    R2,
}

/// Output of one estimator.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EffectEstimate {
    pub estimator: String,
    pub ate: f64,
    /// Per-row CATE on the evaluation rows.
    pub cate: Option<Vec<f64>>,
    pub cv_metric: Option<CvMetric>,
    pub cv_score: Option<f64>,
    /// Selected hyperparameters, one entry per fitted model role.
    pub selected: Vec<String>,
    /// Propensities moved by clipping.
    pub clipped: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum IpwVariant {
    HorvitzThompson,
    Hayek,
}

/// Base-learner family; the regression/classification member and its grid
/// follow from the role.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Family {
    /// Ridge for outcomes, logistic regression for propensities.
    Linear,
    Forest,
    Boosted,
}

impl Family {
    fn tag(self) -> &'static str {
        match self {
            Family::Linear => "linear",
            Family::Forest => "rf",
            Family::Boosted => "xgbLike",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum EstimatorSpec {
    Ipw { propensity: Family, variant: IpwVariant },
    Matching,
    SLearner(Family),
    TLearner(Family),
    Dml { outcome: Family, propensity: Family, last: Family },
}

impl EstimatorSpec {
    /// Parse a config name such as `ipw_w_rf`, `t_xgbLike` or `dml_mix`.
    pub fn parse(name: &str) -> Result<Self> {
        let family = |s: &str| match s {
            "lr" | "ridge" | "linear" => Some(Family::Linear),
            "rf" => Some(Family::Forest),
            "xgbLike" | "xgb" => Some(Family::Boosted),
            _ => None,
        };
        let spec = match name.split_once('_') {
            Some(("match", "eu")) => Some(EstimatorSpec::Matching),
            Some(("ipw", rest)) => match rest.strip_prefix("w_") {
                Some(f) => family(f).map(|p| EstimatorSpec::Ipw {
                    propensity: p,
                    variant: IpwVariant::Hayek,
                }),
                None => family(rest).map(|p| EstimatorSpec::Ipw {
                    propensity: p,
                    variant: IpwVariant::HorvitzThompson,
                }),
            },
            Some(("s", f)) => family(f).map(EstimatorSpec::SLearner),
            Some(("t", f)) => family(f).map(EstimatorSpec::TLearner),
            Some(("dml", "mix")) => Some(EstimatorSpec::Dml {
                outcome: Family::Boosted,
                propensity: Family::Linear,
                last: Family::Linear,
            }),
            Some(("dml", f)) => family(f).map(|f| EstimatorSpec::Dml {
                outcome: f,
                propensity: f,
                last: f,
            }),
            _ => None,
        };
        spec.ok_or_else(|| Error::config(format!("unknown estimator '{name}'")))
    }

    /// Config name, the inverse of [`EstimatorSpec::parse`].
    pub fn name(&self) -> String {
        match *self {
            EstimatorSpec::Ipw { propensity, variant } => {
                let f = if propensity == Family::Linear { "lr" } else { propensity.tag() };
                match variant {
                    IpwVariant::HorvitzThompson => format!("ipw_{f}"),
                    IpwVariant::Hayek => format!("ipw_w_{f}"),
                }
            }
            EstimatorSpec::Matching => "match_eu".into(),
            EstimatorSpec::SLearner(f) | EstimatorSpec::TLearner(f) => {
                let p = if matches!(self, EstimatorSpec::SLearner(_)) { "s" } else { "t" };
                let f = if f == Family::Linear { "ridge" } else { f.tag() };
                format!("{p}_{f}")
            }
            EstimatorSpec::Dml {
                outcome: Family::Boosted,
                propensity: Family::Linear,
                last: Family::Linear,
            } => "dml_mix".into(),
            EstimatorSpec::Dml { outcome, .. } => format!("dml_{}", outcome.tag()),
        }
    }

    /// Table label.
    pub fn label(&self) -> String {
        let fam = |f: Family, outcome: bool| match f {
            Family::Linear if outcome => "Ridge",
            Family::Linear => "LR",
            Family::Forest => "RF",
            Family::Boosted => "Boosted",
        };
        match *self {
            EstimatorSpec::Ipw { propensity, variant } => {
                let v = if variant == IpwVariant::Hayek { "IPW-W" } else { "IPW" };
                format!("{v} ({})", fam(propensity, false))
            }
            EstimatorSpec::Matching => "Match (EU-NN)".into(),
            EstimatorSpec::SLearner(f) => format!("S-learner ({})", fam(f, true)),
            EstimatorSpec::TLearner(f) => format!("T-learner ({})", fam(f, true)),
            EstimatorSpec::Dml { outcome, propensity, .. } if outcome != propensity => "DML (Mix)".into(),
            EstimatorSpec::Dml { outcome: Family::Linear, .. } => "DML (Linear)".into(),
            EstimatorSpec::Dml { outcome, .. } => format!("DML ({})", fam(outcome, true)),
        }
    }

    /// Whether the estimate carries a heterogeneous CATE. A ridge S-learner
    /// has a constant effect, so it is scored like the ATE-only estimators.
    pub fn has_cate(&self) -> bool {
        !matches!(
            self,
            EstimatorSpec::Ipw { .. } | EstimatorSpec::Matching | EstimatorSpec::SLearner(Family::Linear)
        )
    }
}

/// Grids, folds and numeric guards shared by all estimators.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimatorSettings {
    pub learners: EstimatorConfig,
    pub folds: usize,
    pub max_grid: usize,
    pub grid_seed: u64,
    /// Propensities are clipped to [clip, 1 - clip]; 0 disables clipping.
    pub propensity_clip: f64,
    pub dml_folds: usize,
    /// DML fails when every |a - M_A| is below this.
    pub min_residual: f64,
}

impl Default for EstimatorSettings {
    fn default() -> Self {
        Self::new(EstimatorConfig::default(), &BenchmarkConfig::default())
    }
}

impl EstimatorSettings {
    pub fn new(learners: EstimatorConfig, bench: &BenchmarkConfig) -> Self {
        Self {
            learners,
            folds: bench.folds,
            max_grid: bench.max_grid,
            grid_seed: bench.grid_seed,
            propensity_clip: bench.propensity_clip,
            dml_folds: bench.dml_folds,
            min_residual: 1e-3,
        }
    }

    pub fn from_config(config: &Config) -> Self {
        Self::new(config.estimators.clone(), &config.benchmark)
    }

    fn full_grid(&self, family: Family, outcome: bool) -> Vec<LearnerSpec> {
        let l = &self.learners;
        match family {
            Family::Linear if outcome => l.ridge_alpha.iter().map(|&alpha| LearnerSpec::Ridge { alpha }).collect(),
            Family::Linear => l
                .logistic_c
                .iter()
                .map(|&c| LearnerSpec::Logistic { c, max_iter: 1000 })
                .collect(),
            Family::Forest => l
                .forest_min_samples_leaf
                .iter()
                .map(|&min_samples_leaf| LearnerSpec::Forest {
                    n_trees: l.forest_n_trees,
                    max_depth: None,
                    min_samples_leaf,
                    max_features: l.forest_max_features,
                    bootstrap: true,
                    seed: l.seed,
                })
                .collect(),
            Family::Boosted => l
                .boosted_eta
                .iter()
                .flat_map(|&eta| {
                    l.boosted_max_depth.iter().map(move |&max_depth| LearnerSpec::Boosted {
                        n_rounds: l.boosted_rounds,
                        eta,
                        max_depth,
                        min_samples_leaf: 1,
                        lambda: 1.0,
                        min_child_weight: 1.0,
                    })
                })
                .collect(),
        }
    }

    /// Hyperparameter grid for outcome (`outcome = true`) or propensity models,
    /// subsampled to at most `max_grid` settings.
    pub fn grid(&self, family: Family, outcome: bool) -> Vec<LearnerSpec> {
        sample_grid(&self.full_grid(family, outcome), self.max_grid, self.grid_seed)
    }
}

/// Fitted propensity model with its CV record.
#[derive(Debug, Clone)]
struct Propensity {
    model: Classifier,
    cv: CvResult,
}

/// Encoded training and evaluation rows plus memoized model selections, so
/// estimators sharing a nuisance model fit it once.
pub struct EstimationContext<'a> {
    table: &'a EstimationTable,
    settings: &'a EstimatorSettings,
    x: Features,
    x_eval: Features,
    propensities: Mutex<HashMap<String, Arc<Propensity>>>,
    outcome_cv: Mutex<HashMap<String, Arc<CvResult>>>,
}

impl<'a> EstimationContext<'a> {
    /// `eval` holds the rows CATEs are predicted on; `None` uses the training
    /// covariates.
    pub fn new(table: &'a EstimationTable, eval: Option<&Table>, settings: &'a EstimatorSettings) -> Result<Self> {
        if table.is_empty() {
            return Err(Error::data("empty estimation table"));
        }
        let encoder = FeatureEncoder::fit(table.z.schema().to_vec(), &table.z)?;
        let x = encoder.encode_table(&table.z)?;
        let x_eval = match eval {
            Some(t) => encoder.encode_table(t)?,
            None => x.clone(),
        };
        Ok(Self {
            table,
            settings,
            x,
            x_eval,
            propensities: Mutex::new(HashMap::new()),
            outcome_cv: Mutex::new(HashMap::new()),
        })
    }

    pub fn features(&self) -> &Features {
        &self.x
    }

    pub fn run(&self, spec: &EstimatorSpec) -> Result<EffectEstimate> {
        let s = self.settings;
        let mut est = match *spec {
            EstimatorSpec::Ipw { propensity, variant } => {
                self.ipw(&s.grid(propensity, false), variant, s.propensity_clip)?
            }
            EstimatorSpec::Matching => self.matching()?,
            EstimatorSpec::SLearner(f) => self.s_learner(&s.grid(f, true))?,
            EstimatorSpec::TLearner(f) => self.t_learner(&s.grid(f, true))?,
            EstimatorSpec::Dml { outcome, propensity, last } => self.dml(
                &s.grid(outcome, true),
                &s.grid(propensity, false),
                &s.grid(last, true),
            )?,
        };
        est.estimator = spec.name();
        if !spec.has_cate() && matches!(spec, EstimatorSpec::SLearner(_)) {
            est.cate = None;
        }
        Ok(est)
    }

    fn propensity(&self, grid: &[LearnerSpec]) -> Result<Arc<Propensity>> {
        let key = format!("{grid:?}");
        if let Some(p) = self.propensities.lock().expect("memo lock").get(&key) {
            return Ok(Arc::clone(p));
        }
        let labels = self.table.labels();
        let cv = cross_validate(
            grid,
            &self.x,
            CvTarget::Classification {
                labels: &labels,
                n_classes: 2,
            },
            None,
            self.settings.folds,
        )?;
        let model = fit_classifier(cv.selected_spec(), &self.x, &labels, 2, None)?;
        let p = Arc::new(Propensity { model, cv });
        self.propensities.lock().expect("memo lock").insert(key, Arc::clone(&p));
        Ok(p)
    }

    fn outcome_selection(&self, grid: &[LearnerSpec]) -> Result<Arc<CvResult>> {
        let key = format!("{grid:?}");
        if let Some(c) = self.outcome_cv.lock().expect("memo lock").get(&key) {
            return Ok(Arc::clone(c));
        }
        let cv = Arc::new(cross_validate(
            grid,
            &self.x,
            CvTarget::Regression(&self.table.y),
            None,
            self.settings.folds,
        )?);
        self.outcome_cv.lock().expect("memo lock").insert(key, Arc::clone(&cv));
        Ok(cv)
    }

    /// Inverse-propensity weighting with a CV-selected propensity model.
    pub fn ipw(&self, grid: &[LearnerSpec], variant: IpwVariant, clip: f64) -> Result<EffectEstimate> {
        self.table.require_both_arms()?;
        let p = self.propensity(grid)?;
        let e = p.model.positive_proba(&self.x);
        let (ate, clipped) = ipw_ate(&self.table.a, &self.table.y, &e, variant, clip)?;
        Ok(EffectEstimate {
            estimator: "ipw".into(),
            ate,
            cate: None,
            cv_metric: Some(CvMetric::Auc),
            cv_score: Some(p.cv.best_score()),
            selected: vec![format!("propensity={}", p.cv.selected_spec().describe())],
            clipped,
        })
    }

    /// Single outcome model on (z, a); CATE by toggling a.
    pub fn s_learner(&self, grid: &[LearnerSpec]) -> Result<EffectEstimate> {
        let xa = self.x.with_column(&self.table.a)?;
        let cv = cross_validate(grid, &xa, CvTarget::Regression(&self.table.y), None, self.settings.folds)?;
        let model = fit_regressor(cv.selected_spec(), &xa, &self.table.y, None)?;
        let n = self.x_eval.n_rows();
        let mu1 = model.predict_all(&self.x_eval.with_column(&vec![1.0; n])?);
        let mu0 = model.predict_all(&self.x_eval.with_column(&vec![0.0; n])?);
        let cate: Vec<f64> = mu1.iter().zip(&mu0).map(|(a, b)| a - b).collect();
        Ok(EffectEstimate {
            estimator: "s_learner".into(),
            ate: mean(&cate),
            cate: Some(cate),
            cv_metric: Some(CvMetric::R2),
            cv_score: Some(cv.best_score()),
            selected: vec![format!("outcome={}", cv.selected_spec().describe())],
            clipped: 0,
        })
    }

    /// One outcome model per arm.
    pub fn t_learner(&self, grid: &[LearnerSpec]) -> Result<EffectEstimate> {
        self.table.require_both_arms()?;
        let fits = par::try_map_range(2, |k| -> Result<(Regressor, CvResult, usize)> {
            let rows = self.table.arm(k == 1);
            let x = self.x.take_rows(&rows);
            let y: Vec<f64> = rows.iter().map(|&i| self.table.y[i]).collect();
            let cv = cross_validate(grid, &x, CvTarget::Regression(&y), None, self.settings.folds)?;
            let model = fit_regressor(cv.selected_spec(), &x, &y, None)?;
            Ok((model, cv, rows.len()))
        })?;
        let (m0, cv0, n0) = &fits[0];
        let (m1, cv1, n1) = &fits[1];
        let mu1 = m1.predict_all(&self.x_eval);
        let mu0 = m0.predict_all(&self.x_eval);
        let cate: Vec<f64> = mu1.iter().zip(&mu0).map(|(a, b)| a - b).collect();
        let score = (cv0.best_score() * *n0 as f64 + cv1.best_score() * *n1 as f64) / (n0 + n1) as f64;
        Ok(EffectEstimate {
            estimator: "t_learner".into(),
            ate: mean(&cate),
            cate: Some(cate),
            cv_metric: Some(CvMetric::R2),
            cv_score: Some(score),
            selected: vec![
                format!("outcome0={}", cv0.selected_spec().describe()),
                format!("outcome1={}", cv1.selected_spec().describe()),
            ],
            clipped: 0,
        })
    }

    /// Residual-on-residual regression with cross-fitted nuisances. A ridge
    /// propensity grid fits a linear probability model; any other family is
    /// fit as a classifier.
    pub fn dml(
        &self,
        outcome_grid: &[LearnerSpec],
        propensity_grid: &[LearnerSpec],
        final_grid: &[LearnerSpec],
    ) -> Result<EffectEstimate> {
        self.table.require_both_arms()?;
        let t = self.table;
        let y_cv = self.outcome_selection(outcome_grid)?;
        let y_spec = *y_cv.selected_spec();
        let linear_prob = propensity_grid.iter().all(|s| matches!(s, LearnerSpec::Ridge { .. }));
        let (a_spec, a_desc) = if linear_prob {
            let cv = cross_validate(propensity_grid, &self.x, CvTarget::Regression(&t.a), None, self.settings.folds)?;
            (*cv.selected_spec(), cv.selected_spec().describe())
        } else {
            let p = self.propensity(propensity_grid)?;
            (*p.cv.selected_spec(), p.cv.selected_spec().describe())
        };

        let folds = contiguous_folds(t.len(), self.settings.dml_folds)?;
        let labels = t.labels();
        let parts = par::try_map_range(folds.len(), |f| -> Result<(Vec<f64>, Vec<f64>)> {
            let (lo, hi) = folds[f];
            let train: Vec<usize> = (0..lo).chain(hi..t.len()).collect();
            let test: Vec<usize> = (lo..hi).collect();
            let xtr = self.x.take_rows(&train);
            let xte = self.x.take_rows(&test);
            let ytr: Vec<f64> = train.iter().map(|&i| t.y[i]).collect();
            let my = fit_regressor(&y_spec, &xtr, &ytr, None)?.predict_all(&xte);
            let ma = if linear_prob {
                let atr: Vec<f64> = train.iter().map(|&i| t.a[i]).collect();
                fit_regressor(&a_spec, &xtr, &atr, None)?.predict_all(&xte)
            } else {
                let ltr: Vec<usize> = train.iter().map(|&i| labels[i]).collect();
                fit_classifier(&a_spec, &xtr, &ltr, 2, None)?.positive_proba(&xte)
            };
            Ok((my, ma))
        })?;
        let my: Vec<f64> = parts.iter().flat_map(|p| p.0.iter().copied()).collect();
        let ma: Vec<f64> = parts.iter().flat_map(|p| p.1.iter().copied()).collect();

        let mut target = vec![0.0; t.len()];
        let mut weights = vec![0.0; t.len()];
        let mut usable = 0;
        for i in 0..t.len() {
            let ra = t.a[i] - ma[i];
            if ra.abs() >= self.settings.min_residual {
                usable += 1;
            }
            if ra != 0.0 {
                target[i] = (t.y[i] - my[i]) / ra;
                weights[i] = ra * ra;
            }
        }
        if usable == 0 {
            return Err(Error::numeric(
                "DML: every treatment residual is below the threshold (no treatment variation)",
            ));
        }
        let cv = cross_validate(
            final_grid,
            &self.x,
            CvTarget::Regression(&target),
            Some(&weights),
            self.settings.folds,
        )?;
        let model = fit_regressor(cv.selected_spec(), &self.x, &target, Some(&weights))?;
        let cate = model.predict_all(&self.x_eval);
        Ok(EffectEstimate {
            estimator: "dml".into(),
            ate: mean(&cate),
            cate: Some(cate),
            cv_metric: Some(CvMetric::R2),
            cv_score: Some(y_cv.best_score()),
            selected: vec![
                format!("outcome={}", y_spec.describe()),
                format!("propensity={a_desc}"),
                format!("final={}", cv.selected_spec().describe()),
            ],
            clipped: 0,
        })
    }

    /// Nearest opposite-arm neighbour in the encoded covariate space.
    pub fn matching(&self) -> Result<EffectEstimate> {
        self.table.require_both_arms()?;
        let ate = matching_ate(&self.x, &self.table.a, &self.table.y)?;
        Ok(EffectEstimate {
            estimator: "matching".into(),
            ate,
            cate: None,
            cv_metric: None,
            cv_score: None,
            selected: Vec::new(),
            clipped: 0,
        })
    }
}

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

/// IPW ATE from given propensities. Returns the estimate and how many
/// propensities were clipped.
pub fn ipw_ate(a: &[f64], y: &[f64], e: &[f64], variant: IpwVariant, clip: f64) -> Result<(f64, usize)> {
    if a.len() != y.len() || a.len() != e.len() || a.is_empty() {
        return Err(Error::data("ipw: a, y and e must have equal nonzero length"));
    }
    if !(0.0..0.5).contains(&clip) {
        return Err(Error::config(format!("propensity clip must be in [0, 0.5), got {clip}")));
    }
    let n = a.len() as f64;
    let (mut s1, mut s0, mut w1, mut w0) = (0.0, 0.0, 0.0, 0.0);
    let mut clipped = 0;
    for i in 0..a.len() {
        let mut p = e[i];
        if clip > 0.0 && !(clip..=1.0 - clip).contains(&p) {
            p = p.clamp(clip, 1.0 - clip);
            clipped += 1;
        }
        if a[i] == 1.0 {
            let w = 1.0 / p;
            w1 += w;
            s1 += w * y[i];
        } else {
            let w = 1.0 / (1.0 - p);
            w0 += w;
            s0 += w * y[i];
        }
    }
    if !(w1 > 0.0 && w1.is_finite()) || !(w0 > 0.0 && w0.is_finite()) {
        return Err(Error::numeric(format!(
            "ipw: degenerate arm weight (treated {w1}, control {w0})"
        )));
    }
    let ate = match variant {
        IpwVariant::HorvitzThompson => s1 / n - s0 / n,
        IpwVariant::Hayek => s1 / w1 - s0 / w0,
    };
    Ok((ate, clipped))
}

/// Index of the nearest row among `candidates` (Euclidean, lowest index wins ties).
fn nearest(x: &Features, i: usize, candidates: &[usize]) -> usize {
    let xi = x.row(i);
    let mut best = f64::INFINITY;
    let mut best_j = candidates[0];
    for &j in candidates {
        let xj = x.row(j);
        let mut d = 0.0;
        for (a, b) in xi.iter().zip(xj) {
            d += (a - b) * (a - b);
            if d >= best {
                break;
            }
        }
        if d < best {
            best = d;
            best_j = j;
        }
    }
    best_j
}

/// Nearest-neighbour matching ATE: each row's missing potential outcome is
/// its nearest opposite-arm neighbour's observed outcome.
pub fn matching_ate(x: &Features, a: &[f64], y: &[f64]) -> Result<f64> {
    let n = x.n_rows();
    if a.len() != n || y.len() != n {
        return Err(Error::data("matching: length mismatch"));
    }
    let treated: Vec<usize> = (0..n).filter(|&i| a[i] == 1.0).collect();
    let control: Vec<usize> = (0..n).filter(|&i| a[i] != 1.0).collect();
    if treated.is_empty() || control.is_empty() {
        return Err(Error::data("matching needs both arms"));
    }
    let diffs = par::map_range(n, |i| {
        if a[i] == 1.0 {
            y[i] - y[nearest(x, i, &control)]
        } else {
            y[nearest(x, i, &treated)] - y[i]
        }
    });
    Ok(mean(&diffs))
}

/// Convenience wrapper: run one estimator on a table with CATEs predicted on
/// the table itself.
pub fn estimate(spec: &EstimatorSpec, table: &EstimationTable, settings: &EstimatorSettings) -> Result<EffectEstimate> {
    EstimationContext::new(table, None, settings)?.run(spec)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::table::VariableSchema;

    fn table(z: Vec<f64>, a: Vec<f64>, y: Vec<f64>) -> EstimationTable {
        let z = Table::from_columns(vec![VariableSchema::continuous("z", "")], vec![z]).unwrap();
        EstimationTable::new(z, a, y).unwrap()
    }

    #[test]
    fn names_round_trip() {
        for name in crate::config::ALL_ESTIMATORS {
            assert_eq!(EstimatorSpec::parse(name).unwrap().name(), name);
        }
        assert!(EstimatorSpec::parse("aipw").is_err());
        assert_eq!(EstimatorSpec::parse("dml_mix").unwrap().label(), "DML (Mix)");
        assert!(!EstimatorSpec::parse("s_ridge").unwrap().has_cate());
        assert!(EstimatorSpec::parse("t_rf").unwrap().has_cate());
    }

    #[test]
    fn hayek_two_rows() {
        let (ate, _) = ipw_ate(&[1.0, 0.0], &[3.0, 1.0], &[0.5, 0.5], IpwVariant::Hayek, 0.01).unwrap();
        assert_eq!(ate, 2.0);
    }

    #[test]
    fn clipping_counts() {
        let (_, c) = ipw_ate(&[1.0, 0.0, 1.0], &[1.0, 1.0, 1.0], &[0.001, 0.5, 0.999], IpwVariant::Hayek, 0.01).unwrap();
        assert_eq!(c, 2);
        assert!(ipw_ate(&[1.0, 1.0], &[1.0, 1.0], &[0.5, 0.5], IpwVariant::Hayek, 0.0).is_err());
    }

    #[test]
    fn matching_identical_pair() {
        let t = table(vec![1.0, 1.0], vec![1.0, 0.0], vec![10.0, 4.0]);
        let est = estimate(&EstimatorSpec::Matching, &t, &EstimatorSettings::default()).unwrap();
        assert_eq!(est.ate, 6.0);
        assert!(est.cv_score.is_none());
    }

    #[test]
    fn matching_ties_pick_lowest_index() {
        let x = Features::from_rows(&[vec![0.0], vec![1.0], vec![-1.0], vec![5.0]]).unwrap();
        // row 0 is equidistant from rows 1 and 2; row 1 must win.
        assert_eq!(nearest(&x, 0, &[1, 2, 3]), 1);
        assert_eq!(nearest(&x, 0, &[2, 1, 3]), 2);
    }

    #[test]
    fn t_learner_needs_both_arms() {
        let t = table(vec![1.0, 2.0, 3.0], vec![1.0; 3], vec![1.0, 2.0, 3.0]);
        let e = estimate(&EstimatorSpec::TLearner(Family::Linear), &t, &EstimatorSettings::default()).unwrap_err();
        assert_eq!(e.exit_code(), 3);
    }

    #[test]
    fn grids_follow_config() {
        let s = EstimatorSettings::default();
        assert_eq!(s.grid(Family::Boosted, true).len(), 16);
        assert_eq!(s.grid(Family::Linear, true).len(), 11);
        assert_eq!(s.grid(Family::Linear, false).len(), 10);
        assert_eq!(s.grid(Family::Forest, false).len(), 5);
        let mut small = s.clone();
        small.max_grid = 3;
        assert_eq!(small.grid(Family::Boosted, true).len(), 3);
    }
}
