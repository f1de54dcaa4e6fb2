//! Finite-support distributions on `Z^d` and `(Z/2^k Z)^n`.

mod conv;
mod cyclic;
pub mod format;
mod joint;
mod pmf;

pub(crate) use conv::BoxIndex;
pub use conv::{DENSE_VOLUME_LIMIT, PRUNE_THRESHOLD, SPARSE_PRODUCT_LIMIT};
pub use cyclic::{cyclic_linear_combination, CyclicPmf, MAX_CYCLIC_CELLS};
pub use joint::{joint_of, mutual_information, JointPmf};
pub use pmf::{linear_combination, LatticePmf};

use std::collections::HashMap;
use std::hash::{BuildHasherDefault, DefaultHasher};

/// Hash map with a fixed-key hasher, so iteration order is reproducible.
pub(crate) type DetMap<K, V> = HashMap<K, V, BuildHasherDefault<DefaultHasher>>;

/// Mass-sum tolerance for a valid distribution.
pub const MASS_TOLERANCE: f64 = 1e-12;

/// `gcd` of absolute values; `gcd(0, 0) = 0`.
pub fn gcd(a: i64, b: i64) -> i64 {
    let (mut a, mut b) = (a.unsigned_abs(), b.unsigned_abs());
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a as i64
}

/// `gcd` over a slice, ignoring zeros.
pub fn gcd_all(xs: &[i64]) -> i64 {
    xs.iter().fold(0, |g, &x| gcd(g, x))
}
