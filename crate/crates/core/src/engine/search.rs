use super::eval::{evaluate_continuous, evaluate_discrete, Side};
use super::spec::InequalitySpec;
use crate::error::{Error, Result};
use crate::grid::{format::write_grid, GridDensity};
use crate::lattice::{format::write_lattice, LatticePmf};
use crate::par::{self, Exec};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use std::collections::BTreeMap;

/// Annealed step sizes for pairwise mass transfer.
pub const STEPS: [f64; 3] = [0.5, 0.1, 0.02];
/// Candidates whose denominator is below this are skipped by the ratio search.
pub const MIN_DENOMINATOR: f64 = 1e-6;
const GROW_PROBABILITY: f64 = 0.2;

#[derive(Clone, Debug, Serialize)]
pub struct SearchConfig {
    pub side: Side,
    pub seed: u64,
    pub restarts: usize,
    /// Largest support (discrete) or number of cells (continuous) per law.
    pub max_support: usize,
    /// Proposals per annealing phase.
    pub iterations: usize,
    /// Cell resolution of continuous candidates.
    pub resolution: u32,
    #[serde(skip)]
    pub exec: Exec,
}

impl Default for SearchConfig {
    fn default() -> Self {
        SearchConfig {
            side: Side::Discrete,
            seed: 0,
            restarts: 32,
            max_support: 8,
            iterations: 200,
            resolution: 4,
            exec: Exec::default(),
        }
    }
}

/// A law found by a search, stored in its file format.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Witness {
    pub variables: Vec<String>,
    pub format: &'static str,
    pub text: String,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TraceEntry {
    pub step: f64,
    pub iteration: usize,
    pub kind: &'static str,
    pub objective: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct SearchResult {
    pub side: Side,
    pub seed: u64,
    pub restarts: usize,
    pub evaluations: usize,
    pub best_objective: f64,
    pub best_restart: usize,
    pub witnesses: Vec<Witness>,
    pub trace: Vec<TraceEntry>,
}

#[derive(Clone, Debug, Serialize)]
pub struct Extremum {
    pub ratio: f64,
    pub numerator: f64,
    pub denominator: f64,
    pub restart: usize,
    pub witnesses: Vec<Witness>,
}

#[derive(Clone, Debug, Serialize)]
pub struct RatioResult {
    pub side: Side,
    pub seed: u64,
    pub restarts: usize,
    pub candidates: usize,
    pub rejected: usize,
    pub min: Extremum,
    pub max: Extremum,
}

/// Variable classes shared by several forms: every variable of every form,
/// with iid classes merged by name.
fn shared_classes(specs: &[&InequalitySpec]) -> Vec<Vec<String>> {
    let mut classes: Vec<Vec<String>> = Vec::new();
    for spec in specs {
        for v in &spec.variables {
            if !classes.iter().any(|c| c.contains(v)) {
                classes.push(vec![v.clone()]);
            }
        }
    }
    for spec in specs {
        for class in &spec.iid_classes {
            let names: Vec<&String> = class.iter().map(|&i| &spec.variables[i]).collect();
            let mut merged: Vec<String> = Vec::new();
            classes.retain(|c| {
                if c.iter().any(|v| names.contains(&v)) {
                    merged.extend(c.iter().cloned());
                    false
                } else {
                    true
                }
            });
            classes.push(merged);
        }
    }
    let order = |c: &Vec<String>| -> (usize, usize) {
        let first = &c[0];
        specs
            .iter()
            .enumerate()
            .find_map(|(s, spec)| spec.variable_index(first).map(|i| (s, i)))
            .unwrap_or((usize::MAX, 0))
    };
    for c in &mut classes {
        c.sort_by_key(|v| specs.iter().enumerate().find_map(|(s, sp)| sp.variable_index(v).map(|i| (s, i))));
    }
    classes.sort_by_key(order);
    classes
}

/// Mass vector over consecutive positions `0..len`.
type State = Vec<f64>;

enum Laws {
    Discrete(Vec<LatticePmf>),
    Continuous(Vec<GridDensity>),
}

struct Problem<'a> {
    specs: Vec<&'a InequalitySpec>,
    classes: Vec<Vec<String>>,
    config: &'a SearchConfig,
}

impl Problem<'_> {
    fn laws(&self, states: &[State]) -> Result<Laws> {
        Ok(match self.config.side {
            Side::Discrete => Laws::Discrete(
                states
                    .iter()
                    .map(|s| LatticePmf::from_weights(1, s.iter().enumerate().map(|(i, &m)| (vec![i as i64], m))))
                    .collect::<Result<_>>()?,
            ),
            Side::Continuous => Laws::Continuous(
                states
                    .iter()
                    .map(|s| GridDensity::from_cell_weights(self.config.resolution, vec![0], vec![s.len()], s.clone()))
                    .collect::<Result<_>>()?,
            ),
        })
    }

    fn values(&self, laws: &Laws) -> Result<Vec<f64>> {
        fn assign<T: Clone>(classes: &[Vec<String>], laws: &[T]) -> BTreeMap<String, T> {
            let mut out = BTreeMap::new();
            for (class, law) in classes.iter().zip(laws) {
                for v in class {
                    out.insert(v.clone(), law.clone());
                }
            }
            out
        }
        match laws {
            Laws::Discrete(l) => {
                let a = assign(&self.classes, l);
                self.specs.iter().map(|s| evaluate_discrete(s, &a).map(|r| r.weighted_sum.value)).collect()
            }
            Laws::Continuous(l) => {
                let a = assign(&self.classes, l);
                self.specs.iter().map(|s| evaluate_continuous(s, &a).map(|r| r.weighted_sum.value)).collect()
            }
        }
    }

    fn witnesses(&self, states: &[State]) -> Result<Vec<Witness>> {
        let laws = self.laws(states)?;
        let texts: Vec<(&'static str, String)> = match &laws {
            Laws::Discrete(l) => l.iter().map(|p| ("pmf", write_lattice(p))).collect(),
            Laws::Continuous(l) => l.iter().map(|g| ("grid", write_grid(g))).collect(),
        };
        Ok(self
            .classes
            .iter()
            .zip(texts)
            .map(|(c, (format, text))| Witness { variables: c.clone(), format, text })
            .collect())
    }

    fn random_state(&self, rng: &mut ChaCha8Rng) -> State {
        let len = rng.random_range(1..=self.config.max_support.max(1));
        let raw: Vec<f64> = (0..len).map(|_| -(1.0 - rng.random::<f64>()).ln()).collect();
        let total: f64 = raw.iter().sum();
        raw.into_iter().map(|x| x / total).collect()
    }

    /// Mutate one law in place; returns the move kind.
    fn propose(&self, states: &mut [State], step: f64, rng: &mut ChaCha8Rng) -> &'static str {
        let c = rng.random_range(0..states.len());
        let s = &mut states[c];
        let can_grow = s.len() < self.config.max_support;
        if can_grow && (s.len() == 1 || rng.random::<f64>() < GROW_PROBABILITY) {
            let i = rng.random_range(0..s.len());
            let t = step * s[i];
            s[i] -= t;
            s.push(t);
            return "grow";
        }
        if s.len() < 2 {
            return "none";
        }
        let i = rng.random_range(0..s.len());
        let mut j = rng.random_range(0..s.len() - 1);
        if j >= i {
            j += 1;
        }
        let t = step.min(s[i]);
        s[i] -= t;
        s[j] += t;
        "transfer"
    }
}

struct RestartOutcome {
    objective: f64,
    states: Vec<State>,
    trace: Vec<TraceEntry>,
    evaluations: usize,
}

fn rng_for(seed: u64, restart: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(restart as u64);
    rng
}

/// Hill-climb maximizing `score`; `None` marks an inadmissible candidate.
fn climb<F>(problem: &Problem<'_>, rng: &mut ChaCha8Rng, score: F) -> Result<RestartOutcome>
where
    F: Fn(&[f64]) -> Option<f64>,
{
    let mut states: Vec<State> = problem.classes.iter().map(|_| problem.random_state(rng)).collect();
    let mut best = score(&problem.values(&problem.laws(&states)?)?);
    let mut trace = Vec::new();
    let mut evaluations = 1;
    for &step in &STEPS {
        for iteration in 0..problem.config.iterations {
            let mut cand = states.clone();
            let kind = problem.propose(&mut cand, step, rng);
            if kind == "none" {
                continue;
            }
            evaluations += 1;
            let Some(v) = score(&problem.values(&problem.laws(&cand)?)?) else { continue };
            if best.is_none_or(|b| v > b) {
                best = Some(v);
                states = cand;
                trace.push(TraceEntry { step, iteration, kind, objective: v });
            }
        }
    }
    Ok(RestartOutcome { objective: best.unwrap_or(f64::NEG_INFINITY), states, trace, evaluations })
}

/// Maximize the weighted sum of `spec` by random restarts and local moves on
/// the probability simplex. A positive optimum is a violation.
pub fn search_violation(spec: &InequalitySpec, config: &SearchConfig) -> Result<SearchResult> {
    let problem = Problem { specs: vec![spec], classes: shared_classes(&[spec]), config };
    let outcomes = par::try_map_range(config.exec, config.restarts.max(1), |r| {
        climb(&problem, &mut rng_for(config.seed, r), |v| v[0].is_finite().then_some(v[0]))
    })?;
    let mut best_restart = 0;
    for (r, o) in outcomes.iter().enumerate() {
        if o.objective > outcomes[best_restart].objective {
            best_restart = r;
        }
    }
    let best = &outcomes[best_restart];
    Ok(SearchResult {
        side: config.side,
        seed: config.seed,
        restarts: outcomes.len(),
        evaluations: outcomes.iter().map(|o| o.evaluations).sum(),
        best_objective: best.objective,
        best_restart,
        witnesses: problem.witnesses(&best.states)?,
        trace: best.trace.clone(),
    })
}

struct RatioTally {
    candidates: usize,
    rejected: usize,
    lo: Option<(f64, f64, f64, Vec<State>)>,
    hi: Option<(f64, f64, f64, Vec<State>)>,
}

fn ratio_restart(problem: &Problem<'_>, restart: usize) -> Result<RatioTally> {
    use std::cell::RefCell;
    let config = problem.config;
    let mut rng = rng_for(config.seed, restart);
    let tally = RefCell::new(RatioTally { candidates: 0, rejected: 0, lo: None, hi: None });
    for sign in [-1.0, 1.0] {
        let score = |v: &[f64]| -> Option<f64> {
            let mut t = tally.borrow_mut();
            t.candidates += 1;
            if !(v[1].abs() >= MIN_DENOMINATOR) || !v[0].is_finite() {
                t.rejected += 1;
                return None;
            }
            Some(sign * v[0] / v[1])
        };
        let outcome = climb(problem, &mut rng, score)?;
        if outcome.objective.is_finite() {
            let v = problem.values(&problem.laws(&outcome.states)?)?;
            let entry = Some((v[0] / v[1], v[0], v[1], outcome.states));
            let mut t = tally.borrow_mut();
            if sign < 0.0 {
                t.lo = entry;
            } else {
                t.hi = entry;
            }
        }
    }
    Ok(tally.into_inner())
}

/// Infimum and supremum of `num / den` over the searched laws.
pub fn extremal_ratio(num: &InequalitySpec, den: &InequalitySpec, config: &SearchConfig) -> Result<RatioResult> {
    let problem = Problem { specs: vec![num, den], classes: shared_classes(&[num, den]), config };
    let tallies = par::try_map_range(config.exec, config.restarts.max(1), |r| ratio_restart(&problem, r))?;
    let mut lo: Option<(usize, &(f64, f64, f64, Vec<State>))> = None;
    let mut hi: Option<(usize, &(f64, f64, f64, Vec<State>))> = None;
    for (r, t) in tallies.iter().enumerate() {
        if let Some(e) = &t.lo {
            if lo.is_none_or(|(_, b)| e.0 < b.0) {
                lo = Some((r, e));
            }
        }
        if let Some(e) = &t.hi {
            if hi.is_none_or(|(_, b)| e.0 > b.0) {
                hi = Some((r, e));
            }
        }
    }
    let (Some(lo), Some(hi)) = (lo, hi) else { return Err(Error::DegenerateDenominator) };
    let extremum = |(r, e): (usize, &(f64, f64, f64, Vec<State>))| -> Result<Extremum> {
        Ok(Extremum { ratio: e.0, numerator: e.1, denominator: e.2, restart: r, witnesses: problem.witnesses(&e.3)? })
    };
    Ok(RatioResult {
        side: config.side,
        seed: config.seed,
        restarts: tallies.len(),
        candidates: tallies.iter().map(|t| t.candidates).sum(),
        rejected: tallies.iter().map(|t| t.rejected).sum(),
        min: extremum(lo)?,
        max: extremum(hi)?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engine::builtin;
    use crate::engine::spec::parse_form;
    use crate::lattice::format::parse_lattice;

    fn small(side: Side, seed: u64) -> SearchConfig {
        SearchConfig { side, seed, restarts: 8, iterations: 40, ..SearchConfig::default() }
    }

    #[test]
    fn sum_difference_never_violated() {
        let cfg = SearchConfig { restarts: 200, iterations: 30, ..small(Side::Discrete, 1) };
        let r = search_violation(&builtin::sum_difference(), &cfg).unwrap();
        assert!(r.best_objective <= 1e-9, "{}", r.best_objective);
    }

    #[test]
    fn subadditivity_violated_on_continuous_side() {
        let r = search_violation(&builtin::subadditivity(), &small(Side::Continuous, 2)).unwrap();
        assert!(r.best_objective > 0.0);
        assert_eq!(r.witnesses.len(), 2);
    }

    #[test]
    fn replay_and_execution_mode_do_not_matter() {
        let spec = builtin::doubling_upper();
        let a = search_violation(&spec, &small(Side::Discrete, 7)).unwrap();
        let b = search_violation(&spec, &SearchConfig { exec: Exec::Sequential, ..small(Side::Discrete, 7) }).unwrap();
        assert_eq!(serde_json::to_string(&a).unwrap(), serde_json::to_string(&b).unwrap());
        let c = search_violation(&spec, &small(Side::Discrete, 8)).unwrap();
        assert_ne!(serde_json::to_string(&a).unwrap(), serde_json::to_string(&c).unwrap());
    }

    #[test]
    fn witness_reproduces_objective() {
        let spec = builtin::sum_difference();
        let r = search_violation(&spec, &small(Side::Discrete, 4)).unwrap();
        let mut a = BTreeMap::new();
        for w in &r.witnesses {
            a.insert(w.variables[0].clone(), parse_lattice(&w.text).unwrap());
        }
        let v = evaluate_discrete(&spec, &a).unwrap().weighted_sum.value;
        assert!((v - r.best_objective).abs() <= 1e-9);
    }

    #[test]
    fn doubling_bracket() {
        let (num, den) = builtin::doubling_ratio();
        let cfg = SearchConfig { max_support: 16, ..small(Side::Discrete, 5) };
        let r = extremal_ratio(&num, &den, &cfg).unwrap();
        assert!(r.min.ratio >= 0.5 - 1e-9 && r.max.ratio <= 2.0 + 1e-9, "{} {}", r.min.ratio, r.max.ratio);
        assert!(r.min.ratio <= r.max.ratio);
        assert!(r.candidates > r.rejected);
    }

    #[test]
    fn degenerate_denominator() {
        let num = parse_form("H(X)").unwrap();
        let zero = parse_form("H(X) - H(-X)").unwrap();
        let cfg = small(Side::Discrete, 1);
        assert!(matches!(extremal_ratio(&num, &zero, &cfg), Err(Error::DegenerateDenominator)));
    }

    #[test]
    fn classes_merge_across_forms() {
        let a = parse_form("H(U+V) - H(U)\niid: {U, V}").unwrap();
        let b = parse_form("H(W) - H(V)").unwrap();
        assert_eq!(shared_classes(&[&a, &b]), vec![vec!["U".to_string(), "V".to_string()], vec!["W".to_string()]]);
    }
}
