//! Hand-set yearly transition mechanisms g_V.
//!
//! A rule reads last year's row `prev` and this year's partially filled row
//! `curr` (same variable layout). Rules that redraw from the initial-state
//! model evaluate that sampler on `curr`, so its parents must be among the
//! rule's same-time parents.

use serde::{Deserialize, Serialize};

use crate::config::{
    AgeFactor, CapitalParams, IncomeTransitionParams, StudiesTransitionParams, TransitionKind, TransitionParams,
    VariableConfig, STUDIES_DAY, STUDIES_EVENING, STUDIES_FULL, STUDIES_NONE,
};
use crate::error::{Error, Result};
use crate::noise::NoiseDraw;
use crate::samplers::{gumbel_max_sample, masked_argmax, Sampler};
use crate::table::VariableSchema;

/// Adult degrees in increasing order; level = position + 1.
pub const EDUCATION_LEVELS: [&str; 16] = [
    "Preschool", "1st-4th", "5th-6th", "7th-8th", "9th", "10th", "11th", "12th", "HS-grad", "Some-college",
    "Assoc-voc", "Assoc-acdm", "Bachelors", "Masters", "Prof-school", "Doctorate",
];

pub const MAX_HOURS: f64 = 168.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum TransitionRule {
    Increment {
        own: usize,
    },
    Constant {
        own: usize,
    },
    Education {
        own: usize,
        studies: usize,
        /// Advance probability indexed by last year's study type.
        p_advance: [f64; 4],
        max_code: f64,
    },
    StayOrRedraw {
        own: usize,
        p_stay: f64,
        /// (studies slot, factor on p_stay after full-time study)
        full_time: Option<(usize, f64)>,
        /// Previous value that always triggers a redraw.
        forced_redraw: Option<f64>,
    },
    Marital {
        own: usize,
        age: usize,
        studies: usize,
        /// Row-stochastic base matrix over category codes.
        matrix: Vec<Vec<f64>>,
        married: usize,
        widowed: Option<usize>,
        marriage_age_factors: Vec<AgeFactor>,
        widowed_age_factors: Vec<AgeFactor>,
        full_time_marriage_factor: f64,
    },
    Hours {
        own: usize,
        alpha: f64,
    },
    Capital {
        own: usize,
        params: CapitalParams,
    },
    Studies {
        studies: usize,
        income: usize,
        education: usize,
        /// Education level for each education code.
        levels: Vec<usize>,
        doctorate: Option<usize>,
        params: StudiesTransitionParams,
    },
    Income {
        own: usize,
        studies: usize,
        params: IncomeTransitionParams,
    },
}

fn slot(layout: &[String], name: &str) -> Result<usize> {
    layout
        .iter()
        .position(|v| v == name)
        .ok_or_else(|| Error::UnknownVariable(name.to_string()))
}

fn require(list: &[String], name: &str, var: &str, which: &str) -> Result<()> {
    if list.iter().any(|p| p == name) {
        Ok(())
    } else {
        Err(Error::config(format!("{var}: transition needs {name} among its {which} parents")))
    }
}

fn check_prob(name: &str, p: f64) -> Result<()> {
    if (0.0..=1.0).contains(&p) {
        Ok(())
    } else {
        Err(Error::config(format!("{name} = {p} is not a probability")))
    }
}

fn age_factor(bands: &[AgeFactor], age: f64) -> f64 {
    bands
        .iter()
        .filter(|b| age >= b.min_age)
        .max_by(|a, b| a.min_age.total_cmp(&b.min_age))
        .map_or(1.0, |b| b.factor)
}

/// α·prev + (1-α)·fresh, clipped to [0, 168].
pub fn hours_combine(prev: f64, fresh: f64, alpha: f64) -> f64 {
    (alpha * prev + (1.0 - alpha) * fresh).clamp(0.0, MAX_HOURS)
}

/// Index of the first category whose cumulative probability exceeds `u`.
fn inverse_cdf(probs: &[f64], u: f64) -> usize {
    let mut acc = 0.0;
    let mut last = 0;
    for (j, p) in probs.iter().enumerate() {
        if *p > 0.0 {
            acc += p;
            last = j;
            if u < acc {
                return j;
            }
        }
    }
    last
}

/// Build the rule for `var` given the simulator layout and its schemas.
/// `initial` is the variable's initial-state sampler, checked for
/// compatibility with rules that reuse it.
pub fn build_rule(
    var: &VariableConfig,
    params: &TransitionParams,
    layout: &[String],
    schemas: &[VariableSchema],
    initial: &Sampler,
) -> Result<TransitionRule> {
    let own = slot(layout, &var.name)?;
    let name = var.name.as_str();
    let curr = &var.seq_parents_curr;
    let prev = &var.seq_parents_prev;
    let redraws = matches!(
        var.seq_sampler,
        TransitionKind::WorkclassTransition
            | TransitionKind::OccupationTransition
            | TransitionKind::RelationshipTransition
            | TransitionKind::HoursTransition
            | TransitionKind::CapitalTransition
            | TransitionKind::StudiesTransition
            | TransitionKind::IncomeTransition
    );
    if redraws {
        for p in initial.parent_names() {
            if !curr.contains(&p) {
                return Err(Error::config(format!(
                    "{name}: initial-state parent {p} must also be a same-time transition parent"
                )));
            }
        }
    }
    if var.seq_sampler != TransitionKind::IncrementTransition
        && var.seq_sampler != TransitionKind::ConstantTransition
        && !matches!(var.seq_sampler, TransitionKind::EducationTransition | TransitionKind::StudiesTransition)
    {
        // Rules that read their own previous value.
        require(prev, name, name, "previous-time")?;
    }
    let schema = &schemas[own];
    let stay = |p_stay: f64, full_time: Option<(usize, f64)>, forced: Option<f64>| -> Result<TransitionRule> {
        check_prob(&format!("{name}.p_stay"), p_stay)?;
        Ok(TransitionRule::StayOrRedraw {
            own,
            p_stay,
            full_time,
            forced_redraw: forced,
        })
    };
    match var.seq_sampler {
        TransitionKind::IncrementTransition => Ok(TransitionRule::Increment { own }),
        TransitionKind::ConstantTransition => Ok(TransitionRule::Constant { own }),
        TransitionKind::EducationTransition => {
            require(prev, name, name, "previous-time")?;
            require(prev, "studies", name, "previous-time")?;
            let e = &params.education;
            for (k, p) in [("p_full", e.p_full), ("p_evening", e.p_evening), ("p_day", e.p_day)] {
                check_prob(k, p)?;
            }
            let mut p_advance = [0.0; 4];
            p_advance[STUDIES_FULL] = e.p_full;
            p_advance[STUDIES_DAY] = e.p_day;
            p_advance[STUDIES_EVENING] = e.p_evening;
            p_advance[STUDIES_NONE] = 0.0;
            Ok(TransitionRule::Education {
                own,
                studies: slot(layout, "studies")?,
                p_advance,
                max_code: schema.n_categories().saturating_sub(1) as f64,
            })
        }
        TransitionKind::WorkclassTransition => stay(
            params.workclass.p_stay,
            None,
            schema.category_index("Without-pay").map(|c| c as f64),
        ),
        TransitionKind::RelationshipTransition => stay(params.relationship.p_stay, None, None),
        TransitionKind::OccupationTransition => {
            require(prev, "studies", name, "previous-time")?;
            check_prob("occupation.full_time_factor", params.occupation.full_time_factor)?;
            stay(
                params.occupation.p_stay,
                Some((slot(layout, "studies")?, params.occupation.full_time_factor)),
                None,
            )
        }
        TransitionKind::MaritalTransition => {
            require(curr, "age", name, "same-time")?;
            require(prev, "studies", name, "previous-time")?;
            build_marital(own, layout, schema, params)
        }
        TransitionKind::HoursTransition => {
            if !(0.0..=1.0).contains(&params.hours.alpha) {
                return Err(Error::config("hours.alpha must lie in [0, 1]"));
            }
            if !matches!(initial, Sampler::Continuous(_)) {
                return Err(Error::config(format!("{name}: HoursTransition needs a regression sampler")));
            }
            Ok(TransitionRule::Hours {
                own,
                alpha: params.hours.alpha,
            })
        }
        TransitionKind::CapitalTransition => {
            let c = &params.capital;
            check_prob("capital.p_keep_nonzero", c.p_keep_nonzero)?;
            check_prob("capital.p_perturb", c.p_perturb)?;
            if !(c.start_factor >= 0.0 && c.perturb_scale >= 0.0) {
                return Err(Error::config("capital factors must be non-negative"));
            }
            if !matches!(initial, Sampler::ZeroInflated(_)) {
                return Err(Error::config(format!(
                    "{name}: CapitalTransition needs a zero-inflated sampler"
                )));
            }
            Ok(TransitionRule::Capital {
                own,
                params: c.clone(),
            })
        }
        TransitionKind::StudiesTransition => {
            require(prev, name, name, "previous-time")?;
            require(prev, "income", name, "previous-time")?;
            require(curr, "education", name, "same-time")?;
            if !matches!(initial, Sampler::Studies(_)) {
                return Err(Error::config(format!("{name}: StudiesTransition needs the studies sampler")));
            }
            let education = slot(layout, "education")?;
            let edu = &schemas[education];
            let levels = edu
                .categories
                .iter()
                .enumerate()
                .map(|(c, label)| EDUCATION_LEVELS.iter().position(|l| l == label).unwrap_or(c) + 1)
                .collect();
            Ok(TransitionRule::Studies {
                studies: own,
                income: slot(layout, "income")?,
                education,
                levels,
                doctorate: edu.category_index("Doctorate"),
                params: params.studies.clone(),
            })
        }
        TransitionKind::IncomeTransition => {
            require(prev, "studies", name, "previous-time")?;
            let i = &params.income;
            if !(i.raise_low <= i.raise_high && i.raise_low > -1.0) {
                return Err(Error::config("income raise bounds must satisfy -1 < low <= high"));
            }
            if !matches!(initial, Sampler::Income(_)) {
                return Err(Error::config(format!("{name}: IncomeTransition needs the income sampler")));
            }
            Ok(TransitionRule::Income {
                own,
                studies: slot(layout, "studies")?,
                params: i.clone(),
            })
        }
    }
}

fn build_marital(
    own: usize,
    layout: &[String],
    schema: &VariableSchema,
    params: &TransitionParams,
) -> Result<TransitionRule> {
    let m = &params.marital;
    let k = schema.n_categories();
    let code = |label: &str| {
        schema.category_index(label).ok_or_else(|| {
            Error::config(format!("marital matrix mentions unknown status {label:?}"))
        })
    };
    let mut matrix: Vec<Vec<f64>> = (0..k)
        .map(|i| (0..k).map(|j| f64::from(u8::from(i == j))).collect())
        .collect();
    for (from, row) in &m.matrix {
        let i = code(from)?;
        matrix[i] = vec![0.0; k];
        for (to, p) in row {
            check_prob("marital matrix entry", *p)?;
            matrix[i][code(to)?] = *p;
        }
        let s: f64 = matrix[i].iter().sum();
        if (s - 1.0).abs() > 1e-9 {
            return Err(Error::config(format!("marital matrix row {from:?} sums to {s}")));
        }
    }
    if !(m.full_time_marriage_factor >= 0.0) {
        return Err(Error::config("full_time_marriage_factor must be non-negative"));
    }
    Ok(TransitionRule::Marital {
        own,
        age: slot(layout, "age")?,
        studies: slot(layout, "studies")?,
        matrix,
        married: code("Married")?,
        widowed: schema.category_index("Widowed"),
        marriage_age_factors: m.marriage_age_factors.clone(),
        widowed_age_factors: m.widowed_age_factors.clone(),
        full_time_marriage_factor: m.full_time_marriage_factor,
    })
}

impl TransitionRule {
    /// Row slot this rule writes.
    pub fn target(&self) -> usize {
        match self {
            TransitionRule::Increment { own }
            | TransitionRule::Constant { own }
            | TransitionRule::Education { own, .. }
            | TransitionRule::StayOrRedraw { own, .. }
            | TransitionRule::Marital { own, .. }
            | TransitionRule::Hours { own, .. }
            | TransitionRule::Capital { own, .. }
            | TransitionRule::Income { own, .. } => *own,
            TransitionRule::Studies { studies, .. } => *studies,
        }
    }

    /// Next value of the target variable.
    pub fn step(&self, initial: &Sampler, prev: &[f64], curr: &[f64], noise: &mut NoiseDraw) -> Result<f64> {
        match self {
            TransitionRule::Increment { own } => Ok(prev[*own] + 1.0),
            TransitionRule::Constant { own } => Ok(prev[*own]),
            TransitionRule::Education {
                own,
                studies,
                p_advance,
                max_code,
            } => {
                let p = p_advance[prev[*studies] as usize];
                let e = prev[*own];
                Ok(if noise.uniform() < p { (e + 1.0).min(*max_code) } else { e })
            }
            TransitionRule::StayOrRedraw {
                own,
                p_stay,
                full_time,
                forced_redraw,
            } => {
                let mut p = *p_stay;
                if let Some((s, factor)) = full_time {
                    if prev[*s] as usize == STUDIES_FULL {
                        p *= factor;
                    }
                }
                if *forced_redraw == Some(prev[*own]) {
                    p = 0.0;
                }
                let u = noise.uniform();
                if u < p {
                    Ok(prev[*own])
                } else {
                    initial.sample(curr, &mut noise.substream(1))
                }
            }
            TransitionRule::Marital {
                own,
                age,
                studies,
                matrix,
                married,
                widowed,
                marriage_age_factors,
                widowed_age_factors,
                full_time_marriage_factor,
            } => {
                let from = prev[*own] as usize;
                let a = curr[*age];
                let mut probs = matrix[from].clone();
                let mut moves = 0.0;
                for (j, p) in probs.iter_mut().enumerate() {
                    if j == from {
                        continue;
                    }
                    if j == *married {
                        *p *= age_factor(marriage_age_factors, a);
                        if prev[*studies] as usize == STUDIES_FULL {
                            *p *= full_time_marriage_factor;
                        }
                    }
                    if Some(j) == *widowed {
                        *p *= age_factor(widowed_age_factors, a);
                    }
                    moves += *p;
                }
                if moves > 1.0 {
                    probs.iter_mut().for_each(|p| *p /= moves);
                    probs[from] = 0.0;
                } else {
                    probs[from] = 1.0 - moves;
                }
                Ok(inverse_cdf(&probs, noise.uniform()) as f64)
            }
            TransitionRule::Hours { own, alpha } => {
                let fresh = initial.sample(curr, noise)?;
                Ok(hours_combine(prev[*own], fresh, *alpha))
            }
            TransitionRule::Capital { own, params } => {
                let Sampler::ZeroInflated(z) = initial else {
                    return Err(Error::config("capital transition without a zero-inflated sampler"));
                };
                let last = prev[*own];
                let p_nonzero = if last != 0.0 {
                    params.p_keep_nonzero
                } else {
                    params.start_factor * z.gate_prob(curr)?
                };
                if noise.uniform() >= p_nonzero {
                    return Ok(0.0);
                }
                if last != 0.0 && noise.uniform() < params.p_perturb {
                    Ok(last * (1.0 + params.perturb_scale * noise.normal()))
                } else {
                    z.magnitude.sample(curr, &mut noise.substream(1))
                }
            }
            TransitionRule::Studies {
                studies,
                income,
                education,
                levels,
                doctorate,
                params,
            } => {
                let Sampler::Studies(s) = initial else {
                    return Err(Error::config("studies transition without the studies sampler"));
                };
                let mut l = s.logits(curr);
                let last = prev[*studies] as usize;
                let edu = curr[*education] as usize;
                let level = levels.get(edu).copied().unwrap_or(edu + 1);
                match last {
                    STUDIES_FULL if !params.program_ends.contains(&level) => {
                        l[STUDIES_FULL] += params.continue_bonus
                    }
                    STUDIES_NONE => l[STUDIES_FULL] -= params.start_penalty,
                    STUDIES_DAY | STUDIES_EVENING => l[last] += params.part_time_persistence,
                    _ => {}
                }
                if last != STUDIES_FULL && prev[*income] > params.income_threshold {
                    l[STUDIES_FULL] -= params.high_income_penalty;
                }
                let g = noise.gumbels(4);
                if *doctorate == Some(edu) {
                    Ok(masked_argmax(&l, &g, |j| j != STUDIES_FULL) as f64)
                } else {
                    Ok(gumbel_max_sample(&l, &g)? as f64)
                }
            }
            TransitionRule::Income { own, studies, params } => {
                let Sampler::Income(inc) = initial else {
                    return Err(Error::config("income transition without the income sampler"));
                };
                let last = prev[*own];
                let was = prev[*studies] as usize;
                let now = curr[*studies] as usize;
                let finished_full_time = was == STUDIES_FULL && now != STUDIES_FULL;
                let u = noise.uniform();
                let value = if finished_full_time || last < params.resample_below {
                    let fresh = (inc.base(curr)? + inc.noise_sd * noise.normal()).max(0.0);
                    if finished_full_time {
                        fresh * (1.0 + params.completion_bonus)
                    } else {
                        fresh
                    }
                } else {
                    let mut raise = params.raise_low + u * (params.raise_high - params.raise_low);
                    if was == STUDIES_DAY || was == STUDIES_EVENING {
                        raise += params.part_time_bonus;
                    }
                    last * (1.0 + raise)
                };
                Ok(inc.apply_overrides(value, curr))
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::samplers::EmpiricalSampler;

    fn dummy() -> Sampler {
        Sampler::Empirical(EmpiricalSampler::fit(&[7.0]).unwrap())
    }

    #[test]
    fn deterministic_rules() {
        let mut n = NoiseDraw::scripted(&[], &[]);
        let inc = TransitionRule::Increment { own: 0 };
        assert_eq!(inc.step(&dummy(), &[41.0], &[0.0], &mut n).unwrap(), 42.0);
        let c = TransitionRule::Constant { own: 0 };
        assert_eq!(c.step(&dummy(), &[3.0], &[0.0], &mut n).unwrap(), 3.0);
    }

    #[test]
    fn education_clips_at_top() {
        let r = TransitionRule::Education {
            own: 0,
            studies: 1,
            p_advance: [0.95, 0.1, 0.05, 0.0],
            max_code: 15.0,
        };
        let mut n = NoiseDraw::scripted(&[0.01], &[]);
        assert_eq!(r.step(&dummy(), &[15.0, 0.0], &[0.0, 0.0], &mut n).unwrap(), 15.0);
        let mut n = NoiseDraw::scripted(&[0.01], &[]);
        assert_eq!(r.step(&dummy(), &[4.0, 3.0], &[0.0, 0.0], &mut n).unwrap(), 4.0);
    }

    #[test]
    fn hours_clip() {
        assert_eq!(hours_combine(160.0, 200.0, 0.5), 168.0);
        assert_eq!(hours_combine(40.0, 10.0, 1.0), 40.0);
        assert_eq!(hours_combine(1.0, -50.0, 0.5), 0.0);
    }

    #[test]
    fn forced_redraw_ignores_stay() {
        let r = TransitionRule::StayOrRedraw {
            own: 0,
            p_stay: 1.0,
            full_time: None,
            forced_redraw: Some(2.0),
        };
        let mut n = NoiseDraw::scripted(&[0.0, 0.5], &[]);
        assert_eq!(r.step(&dummy(), &[2.0], &[0.0], &mut n).unwrap(), 7.0);
        let mut n = NoiseDraw::scripted(&[0.999], &[]);
        assert_eq!(r.step(&dummy(), &[1.0], &[0.0], &mut n).unwrap(), 1.0);
    }

    #[test]
    fn age_bands() {
        let b = [
            AgeFactor { min_age: 0.0, factor: 0.0 },
            AgeFactor { min_age: 18.0, factor: 0.5 },
        ];
        assert_eq!(age_factor(&b, 10.0), 0.0);
        assert_eq!(age_factor(&b, 18.0), 0.5);
        assert_eq!(age_factor(&[], 30.0), 1.0);
    }

    #[test]
    fn inverse_cdf_skips_zero_mass() {
        assert_eq!(inverse_cdf(&[0.0, 0.5, 0.5], 0.0), 1);
        assert_eq!(inverse_cdf(&[0.5, 0.0, 0.5], 0.6), 2);
        assert_eq!(inverse_cdf(&[0.5, 0.5, 0.0], 0.9999999), 1);
    }
}
