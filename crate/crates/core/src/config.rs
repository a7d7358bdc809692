//! Simulator and benchmark configuration, read from YAML.
//!
//! Variables are declared in a mapping whose order is significant (it fixes
//! variable indices and topological tie-breaking):
//!
//! ```yaml
//! variables:
//!   education:
//!     parents: [age, race, sex, native-country]
//!     sampler:
//!       type: LogisticSampler
//!       multi_class: multinomial
//!     seq_parents_curr: []
//!     seq_parents_prev: [education, studies]
//!     seq_sampler:
//!       type: EducationTransition
//! ```

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;

use serde::de::{MapAccess, Visitor};
use serde::ser::SerializeMap;
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use sha2::{Digest, Sha256};

use crate::data::PartitionFilter;
use crate::error::{Error, Result};
use crate::graph::{EdgeSpec, VariableEdges};
use crate::learners::{LearnerSpec, MaxFeatures};

pub const DEFAULT_CONFIG: &str = include_str!("../../../config/default.yaml");

pub const STUDIES_CATEGORIES: [&str; 4] = ["Full-time studies", "Day course", "Evening course", "No studies"];
pub const STUDIES_FULL: usize = 0;
pub const STUDIES_DAY: usize = 1;
pub const STUDIES_EVENING: usize = 2;
pub const STUDIES_NONE: usize = 3;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Config {
    #[serde(deserialize_with = "de_variables", serialize_with = "ser_variables")]
    pub variables: Vec<VariableConfig>,
    #[serde(default)]
    pub data: DataConfig,
    #[serde(default)]
    pub transitions: TransitionParams,
    #[serde(default)]
    pub simulation: SimulationConfig,
    #[serde(default)]
    pub benchmark: BenchmarkConfig,
    #[serde(default)]
    pub estimators: EstimatorConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VariableConfig {
    #[serde(skip)]
    pub name: String,
    #[serde(default)]
    pub parents: Vec<String>,
    pub sampler: SamplerSpec,
    #[serde(default)]
    pub seq_parents_curr: Vec<String>,
    #[serde(default)]
    pub seq_parents_prev: Vec<String>,
    pub seq_sampler: TransitionKind,
}

fn de_variables<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<Vec<VariableConfig>, D::Error> {
    struct Ordered;
    impl<'de> Visitor<'de> for Ordered {
        type Value = Vec<VariableConfig>;
        fn expecting(&self, f: &mut fmt::Formatter) -> fmt::Result {
            f.write_str("a mapping from variable name to variable block")
        }
        fn visit_map<A: MapAccess<'de>>(self, mut map: A) -> std::result::Result<Self::Value, A::Error> {
            let mut out = Vec::new();
            while let Some((name, mut body)) = map.next_entry::<String, VariableConfig>()? {
                body.name = name;
                out.push(body);
            }
            Ok(out)
        }
    }
    d.deserialize_map(Ordered)
}

fn ser_variables<S: Serializer>(vars: &[VariableConfig], s: S) -> std::result::Result<S::Ok, S::Error> {
    let mut m = s.serialize_map(Some(vars.len()))?;
    for v in vars {
        m.serialize_entry(&v.name, v)?;
    }
    m.end()
}

fn one() -> f64 {
    1.0
}

/// Initial-state mechanism of one variable.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", deny_unknown_fields)]
pub enum SamplerSpec {
    /// Multinomial logistic regression on the parents, sampled by Gumbel-max.
    LogisticSampler {
        #[serde(default)]
        multi_class: Option<String>,
        #[serde(default = "one")]
        c: f64,
    },
    /// Any classifier family, sampled by Gumbel-max on its logits.
    ClassifierSampler { learner: LearnerSpec },
    /// Conditional mean plus Gaussian noise with sd = noise_coef x RMSE.
    RegressionSampler {
        learner: LearnerSpec,
        #[serde(default = "one")]
        noise_coef: f64,
        #[serde(default)]
        bounds: Option<[f64; 2]>,
    },
    /// Nonzero gate plus a regression fit on nonzero rows only.
    ZeroInflatedSampler {
        gate: LearnerSpec,
        magnitude: LearnerSpec,
        #[serde(default = "one")]
        noise_coef: f64,
    },
    /// Inverse empirical CDF of the training column (parentless variables).
    EmpiricalSampler,
    /// Hand-set logistic model over the four study types.
    StudiesSampler(StudiesCoefficients),
    /// Rescaled income-probability regressor with hand-crafted overrides.
    IncomeSampler(IncomeSamplerSpec),
}

/// Hand-set logits for the study types. Every table is keyed by study type;
/// per-category tables are keyed by the parent's category label first.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StudiesCoefficients {
    pub intercept: BTreeMap<String, f64>,
    /// Per-year slope on (age - age_center).
    #[serde(default)]
    pub age: BTreeMap<String, f64>,
    #[serde(default)]
    pub age_center: f64,
    #[serde(default)]
    pub sex: BTreeMap<String, BTreeMap<String, f64>>,
    #[serde(default)]
    pub relationship: BTreeMap<String, BTreeMap<String, f64>>,
    #[serde(default)]
    pub education: BTreeMap<String, BTreeMap<String, f64>>,
}

fn default_income_learner() -> LearnerSpec {
    LearnerSpec::Forest {
        n_trees: 50,
        max_depth: Some(6),
        min_samples_leaf: 1,
        max_features: MaxFeatures::Third,
        bootstrap: true,
        seed: 0,
    }
}
fn default_target_mean() -> f64 {
    70_000.0
}
fn default_threshold() -> f64 {
    50_000.0
}
fn default_rate_above() -> f64 {
    0.55
}
fn default_income_noise() -> f64 {
    10_000.0
}
fn default_day_factor() -> f64 {
    0.8
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IncomeSamplerSpec {
    /// Regressor for P(income > 50K) on the Adult binary label.
    #[serde(default = "default_income_learner")]
    pub learner: LearnerSpec,
    #[serde(default = "default_target_mean")]
    pub target_mean: f64,
    #[serde(default = "default_threshold")]
    pub threshold: f64,
    /// Expected share of Adult rows whose noisy income, before the study and
    /// employment overrides, exceeds `threshold`. Sets the scale.
    #[serde(default = "default_rate_above")]
    pub target_rate_above: f64,
    #[serde(default = "default_income_noise")]
    pub noise_sd: f64,
    #[serde(default = "default_day_factor")]
    pub day_course_factor: f64,
}

impl Default for IncomeSamplerSpec {
    fn default() -> Self {
        Self {
            learner: default_income_learner(),
            target_mean: default_target_mean(),
            threshold: default_threshold(),
            target_rate_above: default_rate_above(),
            noise_sd: default_income_noise(),
            day_course_factor: default_day_factor(),
        }
    }
}

/// Transition mechanism names; parameters live in [`TransitionParams`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "type")]
pub enum TransitionKind {
    IncrementTransition,
    ConstantTransition,
    EducationTransition,
    WorkclassTransition,
    OccupationTransition,
    RelationshipTransition,
    MaritalTransition,
    HoursTransition,
    CapitalTransition,
    StudiesTransition,
    IncomeTransition,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TransitionParams {
    pub education: EducationParams,
    pub workclass: StayParams,
    pub occupation: OccupationParams,
    pub relationship: StayParams,
    pub marital: MaritalParams,
    pub hours: HoursParams,
    pub capital: CapitalParams,
    pub studies: StudiesTransitionParams,
    pub income: IncomeTransitionParams,
}

impl Default for TransitionParams {
    fn default() -> Self {
        Self {
            education: EducationParams::default(),
            workclass: StayParams { p_stay: 0.95 },
            occupation: OccupationParams::default(),
            relationship: StayParams { p_stay: 0.95 },
            marital: MaritalParams::default(),
            hours: HoursParams::default(),
            capital: CapitalParams::default(),
            studies: StudiesTransitionParams::default(),
            income: IncomeTransitionParams::default(),
        }
    }
}

/// Probability of advancing one education level, by current study type.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EducationParams {
    pub p_full: f64,
    pub p_evening: f64,
    pub p_day: f64,
}

impl Default for EducationParams {
    fn default() -> Self {
        Self {
            p_full: 0.95,
            p_evening: 0.05,
            p_day: 0.1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct StayParams {
    pub p_stay: f64,
}

impl Default for StayParams {
    fn default() -> Self {
        Self { p_stay: 0.95 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OccupationParams {
    pub p_stay: f64,
    /// Multiplier on p_stay when the previous year was full-time study.
    pub full_time_factor: f64,
}

impl Default for OccupationParams {
    fn default() -> Self {
        Self {
            p_stay: 0.95,
            full_time_factor: 0.25,
        }
    }
}

/// Age band multiplier: applies to ages in [min_age, next band's min_age).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AgeFactor {
    pub min_age: f64,
    pub factor: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MaritalParams {
    /// Yearly transition probabilities, from-status -> to-status.
    pub matrix: BTreeMap<String, BTreeMap<String, f64>>,
    /// Scales every move into "Married".
    pub marriage_age_factors: Vec<AgeFactor>,
    /// Scales moves into "Widowed".
    pub widowed_age_factors: Vec<AgeFactor>,
    /// Scales moves into "Married" after a year of full-time study.
    pub full_time_marriage_factor: f64,
}

impl Default for MaritalParams {
    fn default() -> Self {
        let row = |v: &[(&str, f64)]| v.iter().map(|(k, p)| (k.to_string(), *p)).collect::<BTreeMap<_, _>>();
        let mut matrix = BTreeMap::new();
        matrix.insert("Never-married".into(), row(&[("Never-married", 0.93), ("Married", 0.07)]));
        matrix.insert(
            "Married".into(),
            row(&[("Married", 0.96), ("Divorced", 0.025), ("Separated", 0.008), ("Widowed", 0.007)]),
        );
        matrix.insert("Divorced".into(), row(&[("Divorced", 0.92), ("Married", 0.08)]));
        matrix.insert(
            "Separated".into(),
            row(&[("Separated", 0.7), ("Divorced", 0.2), ("Married", 0.1)]),
        );
        matrix.insert("Widowed".into(), row(&[("Widowed", 0.96), ("Married", 0.04)]));
        Self {
            matrix,
            marriage_age_factors: vec![
                AgeFactor { min_age: 0.0, factor: 0.0 },
                AgeFactor { min_age: 18.0, factor: 0.6 },
                AgeFactor { min_age: 25.0, factor: 1.2 },
                AgeFactor { min_age: 40.0, factor: 0.8 },
                AgeFactor { min_age: 60.0, factor: 0.4 },
            ],
            widowed_age_factors: vec![
                AgeFactor { min_age: 0.0, factor: 0.2 },
                AgeFactor { min_age: 50.0, factor: 1.0 },
                AgeFactor { min_age: 65.0, factor: 4.0 },
            ],
            full_time_marriage_factor: 0.5,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct HoursParams {
    pub alpha: f64,
}

impl Default for HoursParams {
    fn default() -> Self {
        Self { alpha: 0.9 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CapitalParams {
    /// P(nonzero | last year nonzero).
    pub p_keep_nonzero: f64,
    /// P(nonzero | last year zero) = start_factor x gate probability.
    pub start_factor: f64,
    /// Given nonzero both years: P(perturb last year's value) vs fresh draw.
    pub p_perturb: f64,
    /// Relative sd of the multiplicative perturbation.
    pub perturb_scale: f64,
}

impl Default for CapitalParams {
    fn default() -> Self {
        Self {
            p_keep_nonzero: 0.8,
            start_factor: 0.25,
            p_perturb: 0.9,
            perturb_scale: 0.1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct StudiesTransitionParams {
    /// Added to the full-time logit while a started program is unfinished.
    pub continue_bonus: f64,
    /// Added to the full-time logit after a year without studies.
    pub start_penalty: f64,
    /// Added to the full-time logit when last year's income exceeded the threshold.
    pub high_income_penalty: f64,
    pub income_threshold: f64,
    /// Added to the logit of last year's evening or day course.
    pub part_time_persistence: f64,
    /// Education levels (1-based) that complete a program.
    pub program_ends: Vec<usize>,
}

impl Default for StudiesTransitionParams {
    fn default() -> Self {
        Self {
            continue_bonus: 3.0,
            start_penalty: 1.5,
            high_income_penalty: 2.0,
            income_threshold: 50_000.0,
            part_time_persistence: 0.25,
            program_ends: vec![9, 13, 16],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct IncomeTransitionParams {
    pub raise_low: f64,
    pub raise_high: f64,
    /// Extra raise after a year of evening or day course.
    pub part_time_bonus: f64,
    /// Incomes below this are redrawn from the initial income model.
    pub resample_below: f64,
    /// Relative bonus on the redrawn income in the year full-time study ends.
    pub completion_bonus: f64,
}

impl Default for IncomeTransitionParams {
    fn default() -> Self {
        Self {
            raise_low: 0.0,
            raise_high: 0.06,
            part_time_bonus: 0.04,
            resample_below: 5_000.0,
            completion_bonus: 0.10,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DataConfig {
    pub dir: String,
    pub partitions: PartitionFilter,
}

impl Default for DataConfig {
    fn default() -> Self {
        Self {
            dir: "data/adult".into(),
            partitions: PartitionFilter::Train,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimulationConfig {
    pub horizon: usize,
    pub t0: usize,
    pub treatment: String,
    pub outcome: String,
    pub treated_value: String,
    pub control_value: String,
    pub n_obs: usize,
    pub n_cf: usize,
    pub seed_obs: u64,
    pub seed_cf: u64,
}

impl Default for SimulationConfig {
    fn default() -> Self {
        Self {
            horizon: 7,
            t0: 2,
            treatment: "studies".into(),
            outcome: "income".into(),
            treated_value: STUDIES_CATEGORIES[STUDIES_FULL].into(),
            control_value: STUDIES_CATEGORIES[STUDIES_NONE].into(),
            n_obs: 50_000,
            n_cf: 50_000,
            seed_obs: 0,
            seed_cf: 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BenchmarkConfig {
    pub folds: usize,
    pub max_grid: usize,
    pub grid_seed: u64,
    pub bootstrap_iterations: usize,
    pub alpha: f64,
    pub bootstrap_seed: u64,
    /// Propensity clipping epsilon; 0 disables clipping.
    pub propensity_clip: f64,
    pub dml_folds: usize,
}

impl Default for BenchmarkConfig {
    fn default() -> Self {
        Self {
            folds: 5,
            max_grid: 20,
            grid_seed: 0,
            bootstrap_iterations: 1000,
            alpha: 0.05,
            bootstrap_seed: 0,
            propensity_clip: 0.01,
            dml_folds: 5,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EstimatorConfig {
    pub enabled: Vec<String>,
    pub logistic_c: Vec<f64>,
    pub ridge_alpha: Vec<f64>,
    pub forest_min_samples_leaf: Vec<usize>,
    pub boosted_eta: Vec<f64>,
    pub boosted_max_depth: Vec<usize>,
    pub forest_n_trees: usize,
    pub forest_max_features: MaxFeatures,
    pub boosted_rounds: usize,
    pub seed: u64,
}

pub const ALL_ESTIMATORS: [&str; 14] = [
    "ipw_lr",
    "ipw_rf",
    "ipw_w_lr",
    "ipw_w_rf",
    "match_eu",
    "s_ridge",
    "s_xgbLike",
    "s_rf",
    "t_ridge",
    "t_xgbLike",
    "t_rf",
    "dml_linear",
    "dml_xgbLike",
    "dml_mix",
];

impl Default for EstimatorConfig {
    fn default() -> Self {
        Self {
            enabled: ALL_ESTIMATORS.iter().map(|s| s.to_string()).collect(),
            logistic_c: vec![0.005, 0.01, 0.05, 0.1, 0.5, 1.0, 5.0, 10.0, 50.0, 100.0],
            ridge_alpha: vec![0.01, 0.02, 0.1, 0.2, 1.0, 2.0, 10.0, 20.0, 100.0, 200.0, 1000.0],
            forest_min_samples_leaf: vec![5, 10, 20, 50, 100],
            boosted_eta: vec![0.1, 0.3, 0.5, 0.7],
            boosted_max_depth: vec![3, 5, 7, 9],
            forest_n_trees: 100,
            forest_max_features: MaxFeatures::Third,
            boosted_rounds: 100,
            seed: 0,
        }
    }
}

impl Config {
    pub fn default_config() -> Self {
        Self::from_yaml(DEFAULT_CONFIG).expect("bundled default config is valid")
    }

    pub fn from_yaml(text: &str) -> Result<Self> {
        let cfg: Config = serde_yaml::from_str(text).map_err(|e| Error::config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        if !path.exists() {
            return Err(Error::config(format!("config file not found: {}", path.display())));
        }
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_yaml(&text)
    }

    pub fn to_yaml(&self) -> String {
        serde_yaml::to_string(self).expect("config serializes")
    }

    /// sha256 over the canonical serialization.
    pub fn digest(&self) -> String {
        let bytes = serde_json::to_vec(self).expect("config serializes");
        hex::encode(Sha256::digest(bytes))
    }

    pub fn variable(&self, name: &str) -> Result<&VariableConfig> {
        self.variables
            .iter()
            .find(|v| v.name == name)
            .ok_or_else(|| Error::UnknownVariable(name.to_string()))
    }

    pub fn edge_spec(&self) -> EdgeSpec {
        EdgeSpec {
            variables: self
                .variables
                .iter()
                .map(|v| VariableEdges {
                    name: v.name.clone(),
                    initial: v.parents.clone(),
                    curr: v.seq_parents_curr.clone(),
                    prev: v.seq_parents_prev.clone(),
                })
                .collect(),
        }
    }

    fn validate(&self) -> Result<()> {
        let t = &self.transitions;
        let probs = [
            ("education.p_full", t.education.p_full),
            ("education.p_evening", t.education.p_evening),
            ("education.p_day", t.education.p_day),
            ("workclass.p_stay", t.workclass.p_stay),
            ("relationship.p_stay", t.relationship.p_stay),
            ("occupation.p_stay", t.occupation.p_stay),
            ("occupation.full_time_factor", t.occupation.full_time_factor),
            ("hours.alpha", t.hours.alpha),
            ("capital.p_keep_nonzero", t.capital.p_keep_nonzero),
            ("capital.p_perturb", t.capital.p_perturb),
        ];
        for (name, p) in probs {
            if !(0.0..=1.0).contains(&p) {
                return Err(Error::config(format!("transitions.{name} must lie in [0, 1], got {p}")));
            }
        }
        if t.capital.start_factor < 0.0 || t.capital.perturb_scale < 0.0 {
            return Err(Error::config("transitions.capital factors must be non-negative"));
        }
        if t.income.raise_high < t.income.raise_low {
            return Err(Error::config("transitions.income.raise_high is below raise_low"));
        }
        for (from, row) in &t.marital.matrix {
            let s: f64 = row.values().sum();
            if (s - 1.0).abs() > 1e-9 || row.values().any(|p| *p < 0.0) {
                return Err(Error::config(format!(
                    "transitions.marital.matrix row {from:?} must be a probability vector (sums to {s})"
                )));
            }
        }
        let s = &self.simulation;
        if s.t0 < 1 || s.t0 >= s.horizon {
            return Err(Error::config(format!(
                "simulation.t0 = {} must satisfy 1 <= t0 < horizon = {}",
                s.t0, s.horizon
            )));
        }
        if s.seed_obs == s.seed_cf {
            return Err(Error::config("simulation.seed_obs and seed_cf must differ"));
        }
        let b = &self.benchmark;
        if !(0.0..0.5).contains(&b.propensity_clip) {
            return Err(Error::config("benchmark.propensity_clip must lie in [0, 0.5)"));
        }
        if !(b.alpha > 0.0 && b.alpha < 1.0) {
            return Err(Error::config("benchmark.alpha must lie in (0, 1)"));
        }
        for name in &self.estimators.enabled {
            if !ALL_ESTIMATORS.contains(&name.as_str()) {
                return Err(Error::config(format!("unknown estimator {name:?}")));
            }
        }
        Ok(())
    }
}
