//! Linear entropy inequalities: parsing, evaluation and search.

pub mod builtin;
mod eval;
mod search;
mod spec;

pub use eval::{
    epi_gap, evaluate_continuous, evaluate_discrete, resolve, EvalReport, RowValue, Side, CONTINUOUS_TOLERANCE,
    DISCRETE_TOLERANCE,
};
pub use search::{
    extremal_ratio, search_violation, Extremum, RatioResult, SearchConfig, SearchResult, TraceEntry, Witness,
    MIN_DENOMINATOR, STEPS,
};
pub use spec::{parse_form, parse_spec, InequalitySpec, Row, BALANCE_TOLERANCE};
