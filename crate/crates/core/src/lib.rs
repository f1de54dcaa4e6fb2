//! Entropy laboratory for integer-weighted sums of independent group-valued
//! random variables.
//!
//! The crate computes Shannon entropies of finite-support distributions on
//! `Z^d` and `(Z/2^k Z)^n`, differential entropies of piecewise-constant
//! densities on dyadic grids, and the information measures that connect the
//! two through fine quantization. On top of those it evaluates balanced
//! linear entropy inequalities on both sides, searches for violations and
//! extremal ratios, and realizes the explicit constructions (quantized
//! simplices, entropy-multiplying embeddings, small-noise smoothing).
//!
//! Parallel work (search restarts, random trial suites, sumset enumeration,
//! large sparse convolutions) goes through [`par`]; with the default
//! `parallel` feature it runs on rayon, otherwise sequentially. Results never
//! depend on the schedule.

pub mod cli;
pub mod constructions;
pub mod dyadic;
pub mod engine;
pub mod error;
pub mod grid;
pub mod info;
pub mod lattice;
pub mod nats;
pub mod par;

pub use dyadic::Dyadic;
pub use error::{Error, Result};
pub use grid::GridDensity;
pub use lattice::{CyclicPmf, JointPmf, LatticePmf};
pub use nats::Nats;
pub use par::Exec;

/// Crate version, embedded in every CLI artifact.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
