//! Piecewise-constant densities on dyadic grids.

mod density;
pub mod format;
pub mod generators;
mod lemmas;
mod sums;

pub use density::{GridDensity, MAX_GRID_CELLS};
pub use lemmas::{
    check_coprime, commutation_terms, cyclic_commutation_gap, quantization_commutation_gap, renyi_gap,
    renyi_gap_against, CommutationTerms,
};
pub use sums::{density_linear_combination, floor_uniform_sum_pmf, sum_cell_masses};
