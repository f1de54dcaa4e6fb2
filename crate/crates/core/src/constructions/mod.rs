//! Explicit constructions: simplex sumsets, entropy-multiplying embeddings
//! and smoothing by a scaled continuous variable.

mod embed;
mod simplex;
mod smoothing;

pub use embed::{default_base, embed, tensor_iid};
pub use simplex::{
    ruzsa_ratio, simplex_difference_count, simplex_lattice, sumset, LatticeSet, RuzsaRow, Sign, DIRECT_PAIR_LIMIT,
};
pub use smoothing::{smoothing_gap, MIN_CELLS_PER_AXIS};
