//! Initial-state structural equations f_V.
//!
//! Each sampler reads its parents from a state row (one cell per variable)
//! through `slots`, the row positions of its parents. Samplers fitted on a
//! table start with slots pointing at that table's columns; [`Sampler::bind`]
//! re-points them at the simulator's variable layout.

use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

use crate::config::{
    IncomeSamplerSpec, StudiesCoefficients, STUDIES_CATEGORIES, STUDIES_DAY, STUDIES_FULL,
};
use crate::error::{Error, Result};
use crate::learners::metrics::{auc, macro_auc, r2};
use crate::learners::{
    fit_classifier, fit_regressor, Classifier, FeatureEncoder, LearnerSpec, Regressor,
};
use crate::noise::NoiseDraw;
use crate::table::{Table, VarKind, VariableSchema};

/// Argmax of logits plus Gumbel(0, 1) noise. Ties go to the lower index.
pub fn gumbel_max_sample(logits: &[f64], gumbels: &[f64]) -> Result<usize> {
    if logits.len() != gumbels.len() || logits.is_empty() {
        return Err(Error::numeric(format!(
            "gumbel-max needs matching logits and noise, got {} and {}",
            logits.len(),
            gumbels.len()
        )));
    }
    if logits.iter().any(|l| !l.is_finite()) {
        return Err(Error::numeric("gumbel-max: non-finite logit"));
    }
    Ok(masked_argmax(logits, gumbels, |_| true))
}

/// Gumbel-max restricted to the classes `allowed` accepts; excluded classes
/// have probability exactly zero.
pub fn masked_argmax(logits: &[f64], gumbels: &[f64], allowed: impl Fn(usize) -> bool) -> usize {
    let mut best = usize::MAX;
    let mut best_v = f64::NEG_INFINITY;
    for (j, (l, g)) in logits.iter().zip(gumbels).enumerate() {
        if allowed(j) && (best == usize::MAX || l + g > best_v) {
            best = j;
            best_v = l + g;
        }
    }
    best
}

/// Parent names plus their positions in the current row layout.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Parents {
    pub names: Vec<String>,
    pub slots: Vec<usize>,
}

impl Parents {
    fn from_table(table: &Table, names: &[&str]) -> Result<Self> {
        let slots = names
            .iter()
            .map(|n| table.index_of(n).map_err(|_| Error::UnknownVariable(n.to_string())))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            names: names.iter().map(|s| s.to_string()).collect(),
            slots,
        })
    }

    fn bind(&mut self, layout: &[String]) -> Result<()> {
        for (name, slot) in self.names.iter().zip(self.slots.iter_mut()) {
            *slot = layout
                .iter()
                .position(|v| v == name)
                .ok_or_else(|| Error::UnknownVariable(name.clone()))?;
        }
        Ok(())
    }

    fn gather(&self, row: &[f64]) -> Vec<f64> {
        self.slots.iter().map(|&s| row[s]).collect()
    }
}

fn parent_schemas(table: &Table, names: &[&str]) -> Result<Vec<VariableSchema>> {
    names
        .iter()
        .map(|n| table.variable(n).cloned().map_err(|_| Error::UnknownVariable(n.to_string())))
        .collect()
}

fn encode_parents(table: &Table, names: &[&str]) -> Result<(FeatureEncoder, crate::learners::Features)> {
    let encoder = FeatureEncoder::fit(parent_schemas(table, names)?, table)?;
    let x = encoder.encode_table(table)?;
    Ok((encoder, x))
}

/// Categorical variable sampled by Gumbel-max over a classifier's logits.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CategoricalSampler {
    pub parents: Parents,
    pub encoder: FeatureEncoder,
    pub classifier: Classifier,
    pub n_classes: usize,
    /// Macro one-vs-rest AUC on the training rows.
    pub auc: f64,
}

impl CategoricalSampler {
    pub fn logits(&self, row: &[f64]) -> Result<Vec<f64>> {
        let x = self.encoder.encode(&self.parents.gather(row))?;
        Ok(self.classifier.logits(&x))
    }

    pub fn proba(&self, row: &[f64]) -> Result<Vec<f64>> {
        let x = self.encoder.encode(&self.parents.gather(row))?;
        Ok(self.classifier.predict_proba(&x))
    }

    pub fn sample(&self, row: &[f64], noise: &mut NoiseDraw) -> Result<f64> {
        let logits = self.logits(row)?;
        let g = noise.gumbels(logits.len());
        Ok(gumbel_max_sample(&logits, &g)? as f64)
    }
}

pub fn fit_categorical_sampler(
    table: &Table,
    child: &str,
    parents: &[&str],
    learner: &LearnerSpec,
) -> Result<CategoricalSampler> {
    let schema = table.variable(child)?;
    if schema.kind != VarKind::Categorical {
        return Err(Error::config(format!("{child} is not categorical")));
    }
    let k = schema.n_categories();
    let (encoder, x) = encode_parents(table, parents)?;
    let y: Vec<usize> = table.column(child)?.iter().map(|v| *v as usize).collect();
    let classifier = fit_classifier(learner, &x, &y, k, None)?;
    let proba = classifier.predict_proba_all(&x);
    let auc = if parents.is_empty() { 0.5 } else { macro_auc(&proba, k, &y) };
    Ok(CategoricalSampler {
        parents: Parents::from_table(table, parents)?,
        encoder,
        classifier,
        n_classes: k,
        auc,
    })
}

/// Additive Gaussian noise around a fitted conditional mean.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContinuousSampler {
    pub parents: Parents,
    pub encoder: FeatureEncoder,
    pub regressor: Regressor,
    pub sigma: f64,
    pub bounds: Option<[f64; 2]>,
    /// Training R².
    pub r2: f64,
}

impl ContinuousSampler {
    pub fn mean(&self, row: &[f64]) -> Result<f64> {
        let x = self.encoder.encode(&self.parents.gather(row))?;
        Ok(self.regressor.predict(&x))
    }

    pub fn sample(&self, row: &[f64], noise: &mut NoiseDraw) -> Result<f64> {
        let v = self.mean(row)? + self.sigma * noise.normal();
        Ok(match self.bounds {
            Some([lo, hi]) => v.clamp(lo, hi),
            None => v,
        })
    }
}

pub fn fit_continuous_sampler(
    table: &Table,
    child: &str,
    parents: &[&str],
    learner: &LearnerSpec,
    noise_coef: f64,
) -> Result<ContinuousSampler> {
    fit_continuous_rows(table, child, parents, learner, noise_coef, None)
}

fn fit_continuous_rows(
    table: &Table,
    child: &str,
    parents: &[&str],
    learner: &LearnerSpec,
    noise_coef: f64,
    rows: Option<&[usize]>,
) -> Result<ContinuousSampler> {
    if table.variable(child)?.kind != VarKind::Continuous {
        return Err(Error::config(format!("{child} is not continuous")));
    }
    if !(noise_coef >= 0.0) {
        return Err(Error::config("noise_coef must be non-negative"));
    }
    let sub;
    let t = match rows {
        Some(r) => {
            sub = table.take_rows(r);
            &sub
        }
        None => table,
    };
    let (encoder, x) = encode_parents(t, parents)?;
    let y = t.column(child)?;
    let regressor = fit_regressor(learner, &x, y, None)?;
    let pred = regressor.predict_all(&x);
    Ok(ContinuousSampler {
        parents: Parents::from_table(t, parents)?,
        encoder,
        sigma: noise_coef * regressor.train_rmse,
        r2: r2(&pred, y),
        regressor,
        bounds: None,
    })
}

/// Point mass at zero blended with a regression on the nonzero rows.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ZeroInflatedSampler {
    pub parents: Parents,
    pub encoder: FeatureEncoder,
    pub gate: Classifier,
    pub magnitude: ContinuousSampler,
    /// AUC of the gate on the training rows.
    pub gate_auc: f64,
}

impl ZeroInflatedSampler {
    /// P(nonzero | parents).
    pub fn gate_prob(&self, row: &[f64]) -> Result<f64> {
        let x = self.encoder.encode(&self.parents.gather(row))?;
        Ok(self.gate.predict_proba(&x)[1])
    }

    /// Sample with an explicit nonzero probability (used by transitions).
    pub fn sample_with_gate(&self, row: &[f64], p_nonzero: f64, noise: &mut NoiseDraw) -> Result<f64> {
        let open = noise.uniform() < p_nonzero;
        let mut sub = noise.substream(1);
        if open {
            self.magnitude.sample(row, &mut sub)
        } else {
            Ok(0.0)
        }
    }

    pub fn sample(&self, row: &[f64], noise: &mut NoiseDraw) -> Result<f64> {
        let p = self.gate_prob(row)?;
        self.sample_with_gate(row, p, noise)
    }
}

pub fn fit_zero_inflated_sampler(
    table: &Table,
    child: &str,
    parents: &[&str],
    gate: &LearnerSpec,
    magnitude: &LearnerSpec,
    noise_coef: f64,
) -> Result<ZeroInflatedSampler> {
    let y = table.column(child)?;
    let nonzero: Vec<usize> = (0..y.len()).filter(|&i| y[i] != 0.0).collect();
    if nonzero.is_empty() {
        return Err(Error::data(format!("{child}: no nonzero rows")));
    }
    let (encoder, x) = encode_parents(table, parents)?;
    let labels: Vec<usize> = y.iter().map(|v| usize::from(*v != 0.0)).collect();
    let gate_model = fit_classifier(gate, &x, &labels, 2, None)?;
    let p = gate_model.positive_proba(&x);
    let positive: Vec<bool> = labels.iter().map(|l| *l == 1).collect();
    let magnitude = fit_continuous_rows(table, child, parents, magnitude, noise_coef, Some(&nonzero))?;
    Ok(ZeroInflatedSampler {
        parents: Parents::from_table(table, parents)?,
        encoder,
        gate: gate_model,
        magnitude,
        gate_auc: auc(&p, &positive),
    })
}

/// Inverse empirical CDF of a training column.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmpiricalSampler {
    pub sorted: Vec<f64>,
}

impl EmpiricalSampler {
    pub fn fit(values: &[f64]) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::data("empirical sampler needs at least one value"));
        }
        let mut sorted = values.to_vec();
        sorted.sort_by(f64::total_cmp);
        Ok(Self { sorted })
    }

    pub fn sample(&self, noise: &mut NoiseDraw) -> f64 {
        let i = ((noise.uniform() * self.sorted.len() as f64) as usize).min(self.sorted.len() - 1);
        self.sorted[i]
    }
}

/// Hand-set multinomial logit over the four study types.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StudiesSampler {
    pub parents: Parents,
    pub intercept: [f64; 4],
    pub age_slope: [f64; 4],
    pub age_center: f64,
    /// (parent position in `parents`, per-category logit offsets)
    pub tables: Vec<(usize, Vec<[f64; 4]>)>,
    age_pos: Option<usize>,
}

fn class_index(label: &str) -> Result<usize> {
    STUDIES_CATEGORIES
        .iter()
        .position(|c| *c == label)
        .ok_or_else(|| Error::config(format!("unknown study type {label:?}")))
}

impl StudiesSampler {
    /// `parent_schemas` gives the categories of each categorical parent.
    pub fn new(coef: &StudiesCoefficients, parent_schemas: &[VariableSchema]) -> Result<Self> {
        let mut intercept = [0.0; 4];
        for (j, class) in STUDIES_CATEGORIES.iter().enumerate() {
            intercept[j] = *coef
                .intercept
                .get(*class)
                .ok_or_else(|| Error::config(format!("studies: missing intercept for {class:?}")))?;
        }
        for k in coef.intercept.keys() {
            class_index(k)?;
        }
        let mut age_slope = [0.0; 4];
        for (k, v) in &coef.age {
            age_slope[class_index(k)?] = *v;
        }
        let pos = |name: &str| parent_schemas.iter().position(|s| s.name == name);
        let age_pos = pos("age");
        if age_pos.is_none() && coef.age.values().any(|v| *v != 0.0) {
            return Err(Error::config("studies: age coefficients given but age is not a parent"));
        }
        let mut tables = Vec::new();
        for (parent, table) in [("sex", &coef.sex), ("relationship", &coef.relationship), ("education", &coef.education)] {
            if table.is_empty() {
                continue;
            }
            let p = pos(parent)
                .ok_or_else(|| Error::config(format!("studies: coefficients for {parent} but it is not a parent")))?;
            let schema = &parent_schemas[p];
            let mut offsets = vec![[0.0; 4]; schema.n_categories()];
            for (cat, row) in table {
                let c = schema.category_index(cat).ok_or_else(|| Error::UnseenCategory {
                    variable: parent.to_string(),
                    value: cat.clone(),
                })?;
                for (class, v) in row {
                    offsets[c][class_index(class)?] = *v;
                }
            }
            tables.push((p, offsets));
        }
        Ok(Self {
            parents: Parents {
                names: parent_schemas.iter().map(|s| s.name.clone()).collect(),
                slots: (0..parent_schemas.len()).collect(),
            },
            intercept,
            age_slope,
            age_center: coef.age_center,
            tables,
            age_pos,
        })
    }

    pub fn logits(&self, row: &[f64]) -> [f64; 4] {
        let vals = self.parents.gather(row);
        let mut l = self.intercept;
        if let Some(a) = self.age_pos {
            for j in 0..4 {
                l[j] += self.age_slope[j] * (vals[a] - self.age_center);
            }
        }
        for (p, offsets) in &self.tables {
            let o = offsets[vals[*p] as usize];
            for j in 0..4 {
                l[j] += o[j];
            }
        }
        l
    }

    pub fn sample(&self, row: &[f64], noise: &mut NoiseDraw) -> Result<f64> {
        let l = self.logits(row);
        Ok(gumbel_max_sample(&l, &noise.gumbels(4))? as f64)
    }
}

/// Income = shift + scale * h(x), noise, floor at zero, then the study and
/// without-pay overrides.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IncomeSampler {
    /// Parents used by h (all income parents except studies).
    pub parents: Parents,
    pub encoder: FeatureEncoder,
    pub h: Regressor,
    pub shift: f64,
    pub scale: f64,
    pub noise_sd: f64,
    pub day_course_factor: f64,
    /// Slot of the studies variable in the row layout.
    pub studies_slot: Option<usize>,
    /// Slot of workclass and the code of "Without-pay".
    pub without_pay: Option<(usize, f64)>,
    /// AUC of h against the binary income label.
    pub auc: f64,
}

impl IncomeSampler {
    /// Calibrated income before noise and overrides.
    pub fn base(&self, row: &[f64]) -> Result<f64> {
        let x = self.encoder.encode(&self.parents.gather(row))?;
        Ok(self.shift + self.scale * self.h.predict(&x))
    }

    /// Study and employment overrides applied to a non-negative income.
    pub fn apply_overrides(&self, value: f64, row: &[f64]) -> f64 {
        if let Some((slot, code)) = self.without_pay {
            if row[slot] == code {
                return 0.0;
            }
        }
        match self.studies_slot.map(|s| row[s] as usize) {
            Some(STUDIES_FULL) => 0.0,
            Some(STUDIES_DAY) => value * self.day_course_factor,
            _ => value,
        }
    }

    pub fn sample(&self, row: &[f64], noise: &mut NoiseDraw) -> Result<f64> {
        let v = (self.base(row)? + self.noise_sd * noise.normal()).max(0.0);
        Ok(self.apply_overrides(v, row))
    }

    fn bind(&mut self, layout: &[String]) -> Result<()> {
        self.parents.bind(layout)?;
        if self.studies_slot.is_some() {
            self.studies_slot = layout.iter().position(|v| v == "studies");
        }
        if let Some((_, code)) = self.without_pay {
            let slot = layout
                .iter()
                .position(|v| v == "workclass")
                .ok_or_else(|| Error::UnknownVariable("workclass".into()))?;
            self.without_pay = Some((slot, code));
        }
        Ok(())
    }
}

/// Expected share of `shift + scale * h + noise` above `threshold` when the
/// mean is pinned at `target_mean`.
pub fn calibrated_rate(hx: &[f64], scale: f64, target_mean: f64, threshold: f64, noise_sd: f64) -> f64 {
    let mean = hx.iter().sum::<f64>() / hx.len() as f64;
    let gap = target_mean - threshold;
    let above = |h: &f64| {
        let margin = scale * (h - mean) + gap;
        if noise_sd > 0.0 {
            1.0 - Normal::standard().cdf(-margin / noise_sd)
        } else {
            f64::from(margin > 0.0)
        }
    };
    hx.iter().map(above).sum::<f64>() / hx.len() as f64
}

/// Fit h on the binary `label` column and solve shift/scale so that over the
/// training rows the calibrated mean is `target_mean` and the expected share
/// above `threshold` (noise included, overrides excluded) is
/// `target_rate_above`. The share falls as the scale grows, so the scale is
/// found by bisection.
pub fn fit_income_sampler(
    table: &Table,
    label: &str,
    parents: &[&str],
    spec: &IncomeSamplerSpec,
) -> Result<IncomeSampler> {
    if !(spec.target_mean > 0.0) {
        return Err(Error::config("income calibration target must be positive"));
    }
    if !(spec.target_rate_above > 0.0 && spec.target_rate_above < 1.0) {
        return Err(Error::config("income target_rate_above must lie in (0, 1)"));
    }
    if spec.target_mean <= spec.threshold {
        return Err(Error::config("income target_mean must exceed the threshold"));
    }
    let label_schema = table.variable(label)?;
    let positive_code = match label_schema.kind {
        VarKind::Categorical => label_schema.n_categories() as f64 - 1.0,
        VarKind::Continuous => 1.0,
    };
    let y: Vec<f64> = table.column(label)?.iter().map(|v| f64::from(*v == positive_code)).collect();
    let h_parents: Vec<&str> = parents.iter().copied().filter(|p| *p != "studies").collect();
    let (encoder, x) = encode_parents(table, &h_parents)?;
    let h = fit_regressor(&spec.learner, &x, &y, None)?;
    let hx = h.predict_all(&x);
    let mean = hx.iter().sum::<f64>() / hx.len() as f64;
    let rate = |scale: f64| calibrated_rate(&hx, scale, spec.target_mean, spec.threshold, spec.noise_sd);
    let target = spec.target_rate_above;
    if rate(0.0) < target {
        return Err(Error::numeric(format!(
            "income calibration: even a constant income gives rate {:.3} < {target}",
            rate(0.0)
        )));
    }
    let mut hi = spec.target_mean;
    while rate(hi) > target {
        hi *= 2.0;
        if hi > 1e4 * spec.target_mean {
            return Err(Error::numeric(format!(
                "income calibration: share above threshold cannot drop to {target} (floor about {:.3})",
                rate(hi)
            )));
        }
    }
    let mut lo = 0.0;
    for _ in 0..100 {
        let mid = 0.5 * (lo + hi);
        if rate(mid) > target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let scale = 0.5 * (lo + hi);
    let shift = spec.target_mean - scale * mean;
    let positive: Vec<bool> = y.iter().map(|v| *v == 1.0).collect();
    let without_pay = table
        .variable("workclass")
        .ok()
        .filter(|_| parents.contains(&"workclass"))
        .and_then(|w| w.category_index("Without-pay"))
        .map(|c| (usize::MAX, c as f64));
    Ok(IncomeSampler {
        parents: Parents {
            names: h_parents.iter().map(|s| s.to_string()).collect(),
            slots: h_parents.iter().map(|p| table.index_of(p)).collect::<Result<_>>()?,
        },
        encoder,
        auc: auc(&hx, &positive),
        h,
        shift,
        scale,
        noise_sd: spec.noise_sd,
        day_course_factor: spec.day_course_factor,
        studies_slot: parents.contains(&"studies").then_some(usize::MAX),
        without_pay,
    })
}

/// Any initial-state mechanism.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Sampler {
    Categorical(CategoricalSampler),
    Continuous(ContinuousSampler),
    ZeroInflated(ZeroInflatedSampler),
    Empirical(EmpiricalSampler),
    Studies(StudiesSampler),
    Income(IncomeSampler),
}

impl Sampler {
    pub fn sample(&self, row: &[f64], noise: &mut NoiseDraw) -> Result<f64> {
        match self {
            Sampler::Categorical(s) => s.sample(row, noise),
            Sampler::Continuous(s) => s.sample(row, noise),
            Sampler::ZeroInflated(s) => s.sample(row, noise),
            Sampler::Empirical(s) => Ok(s.sample(noise)),
            Sampler::Studies(s) => s.sample(row, noise),
            Sampler::Income(s) => s.sample(row, noise),
        }
    }

    pub fn parent_names(&self) -> Vec<String> {
        match self {
            Sampler::Categorical(s) => s.parents.names.clone(),
            Sampler::Continuous(s) => s.parents.names.clone(),
            Sampler::ZeroInflated(s) => s.parents.names.clone(),
            Sampler::Empirical(_) => Vec::new(),
            Sampler::Studies(s) => s.parents.names.clone(),
            Sampler::Income(s) => {
                let mut p = s.parents.names.clone();
                if s.studies_slot.is_some() {
                    p.push("studies".into());
                }
                if s.without_pay.is_some() && !p.iter().any(|n| n == "workclass") {
                    p.push("workclass".into());
                }
                p
            }
        }
    }

    /// Point parent slots at positions in `layout` (simulator variable order).
    pub fn bind(&mut self, layout: &[String]) -> Result<()> {
        match self {
            Sampler::Categorical(s) => s.parents.bind(layout),
            Sampler::Continuous(s) => s.parents.bind(layout),
            Sampler::ZeroInflated(s) => {
                s.parents.bind(layout)?;
                s.magnitude.parents.bind(layout)
            }
            Sampler::Empirical(_) => Ok(()),
            Sampler::Studies(s) => s.parents.bind(layout),
            Sampler::Income(s) => s.bind(layout),
        }
    }
}
