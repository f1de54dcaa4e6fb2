use super::spec::InequalitySpec;
use crate::dyadic::Dyadic;
use crate::error::{Error, Result};
use crate::grid::{density_linear_combination, GridDensity};
use crate::lattice::{linear_combination, LatticePmf};
use crate::nats::Nats;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::f64::consts::LN_2;

pub const DISCRETE_TOLERANCE: f64 = 1e-9;
pub const CONTINUOUS_TOLERANCE: f64 = 1e-6;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    #[default]
    Discrete,
    Continuous,
}

impl Side {
    pub fn tolerance(self) -> f64 {
        match self {
            Side::Discrete => DISCRETE_TOLERANCE,
            Side::Continuous => CONTINUOUS_TOLERANCE,
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct RowValue {
    pub alpha: f64,
    pub coeffs: Vec<i64>,
    pub entropy: Nats,
}

#[derive(Clone, Debug, Serialize)]
pub struct EvalReport {
    pub side: Side,
    pub rows: Vec<RowValue>,
    pub weighted_sum: Nats,
    pub slack: f64,
    pub tolerance: f64,
    pub satisfied: bool,
    pub balanced: bool,
    pub warnings: Vec<String>,
}

impl EvalReport {
    fn build(spec: &InequalitySpec, side: Side, entropies: Vec<Nats>, warnings: Vec<String>) -> Self {
        let mut sum = Nats::ZERO;
        let mut rows = Vec::with_capacity(entropies.len());
        for (row, h) in spec.rows.iter().zip(entropies) {
            sum = sum + h * row.alpha;
            rows.push(RowValue { alpha: row.alpha, coeffs: row.coeffs.clone(), entropy: h });
        }
        let tolerance = side.tolerance();
        let slack = -sum.value;
        EvalReport {
            side,
            rows,
            weighted_sum: sum,
            slack,
            tolerance,
            satisfied: slack >= -tolerance,
            balanced: spec.is_balanced(),
            warnings,
        }
    }
}

/// Law attached to every variable, following iid classes.
///
/// A class may be assigned through any one member; assigning two members
/// different laws is an error.
pub fn resolve<'a, T: PartialEq>(spec: &InequalitySpec, assignment: &'a BTreeMap<String, T>) -> Result<Vec<&'a T>> {
    let mut out: Vec<Option<&T>> = vec![None; spec.variables.len()];
    for class in spec.classes() {
        let mut chosen: Option<(&str, &T)> = None;
        for &v in &class {
            let name = spec.variables[v].as_str();
            if let Some(law) = assignment.get(name) {
                match chosen {
                    Some((_, other)) if other != law => {
                        let names: Vec<&str> = class.iter().map(|&i| spec.variables[i].as_str()).collect();
                        return Err(Error::IidConflict(format!("{{{}}}", names.join(", "))));
                    }
                    Some(_) => {}
                    None => chosen = Some((name, law)),
                }
            }
        }
        let (_, law) = chosen.ok_or_else(|| Error::MissingVariable(spec.variables[class[0]].clone()))?;
        for &v in &class {
            out[v] = Some(law);
        }
    }
    Ok(out.into_iter().map(|l| l.expect("every variable lies in one class")).collect())
}

pub fn evaluate_discrete(spec: &InequalitySpec, assignment: &BTreeMap<String, LatticePmf>) -> Result<EvalReport> {
    let laws = resolve(spec, assignment)?;
    let entropies = spec
        .rows
        .iter()
        .map(|row| linear_combination(&laws, &row.coeffs).map(|p| p.entropy()))
        .collect::<Result<Vec<_>>>()?;
    Ok(EvalReport::build(spec, Side::Discrete, entropies, Vec::new()))
}

/// Differential entropy of one row, with a resolution-halving error estimate.
fn row_entropy(laws: &[&GridDensity], coeffs: &[i64]) -> Result<Nats> {
    let dy: Vec<Dyadic> = coeffs.iter().map(|&a| Dyadic::integer(a)).collect();
    let f = density_linear_combination(laws, &dy)?;
    let h = f.differential_entropy();
    let extra = if f.resolution() > 0 {
        let coarse = f.coarsen(f.resolution() - 1)?.differential_entropy();
        (coarse.value - h.value).abs() / 3.0
    } else {
        0.0
    };
    Ok(h.with_err(extra))
}

pub fn evaluate_continuous(spec: &InequalitySpec, assignment: &BTreeMap<String, GridDensity>) -> Result<EvalReport> {
    let laws = resolve(spec, assignment)?;
    let mut warnings = Vec::new();
    if !spec.is_balanced() {
        let msg = format!(
            "unbalanced inequality (coefficients sum to {}): differential entropy values shift under rescaling",
            spec.alpha_sum()
        );
        log::warn!("{msg}");
        warnings.push(msg);
    }
    let entropies =
        spec.rows.iter().map(|row| row_entropy(&laws, &row.coeffs)).collect::<Result<Vec<_>>>()?;
    Ok(EvalReport::build(spec, Side::Continuous, entropies, warnings))
}

/// `h(X + Y) - (h(X) + h(Y)) / 2 - (d / 2) ln 2`, nonnegative by the
/// entropy power inequality and zero for iid Gaussians.
pub fn epi_gap(f: &GridDensity, g: &GridDensity) -> Result<Nats> {
    let one = Dyadic::integer(1);
    let sum = density_linear_combination(&[f, g], &[one, one])?.differential_entropy();
    let half = (f.differential_entropy() + g.differential_entropy()) * 0.5;
    Ok(sum - half - Nats::exact(f.dim() as f64 * 0.5 * LN_2))
}
