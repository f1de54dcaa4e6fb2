//! Inequalities known to hold for discrete entropy.

use super::spec::{InequalitySpec, Row};
use crate::error::{Error, Result};

fn names(v: &[&str]) -> Vec<String> {
    v.iter().map(|s| s.to_string()).collect()
}

fn row(alpha: f64, coeffs: &[i64]) -> Row {
    Row { alpha, coeffs: coeffs.to_vec() }
}

fn build(vars: &[&str], rows: Vec<Row>, iid: Vec<Vec<usize>>) -> InequalitySpec {
    InequalitySpec::new(names(vars), rows, iid).expect("built-in inequalities are well formed")
}

/// `H(X+Y) <= 3H(X-Y) - H(X) - H(Y)`.
pub fn sum_difference() -> InequalitySpec {
    build(&["X", "Y"], vec![row(1.0, &[1, 1]), row(-3.0, &[1, -1]), row(1.0, &[1, 0]), row(1.0, &[0, 1])], vec![])
}

/// `H(X+Y) <= H(X) + H(Y)`; unbalanced.
pub fn subadditivity() -> InequalitySpec {
    build(&["X", "Y"], vec![row(1.0, &[1, 1]), row(-1.0, &[1, 0]), row(-1.0, &[0, 1])], vec![])
}

/// `H(X) <= H(X+Y)`.
pub fn sum_dominates_left() -> InequalitySpec {
    build(&["X", "Y"], vec![row(1.0, &[1, 0]), row(-1.0, &[1, 1])], vec![])
}

/// `H(Y) <= H(X+Y)`.
pub fn sum_dominates_right() -> InequalitySpec {
    build(&["X", "Y"], vec![row(1.0, &[0, 1]), row(-1.0, &[1, 1])], vec![])
}

/// Lower half of the doubling bracket for iid `U, U'`:
/// `H(U+U') - H(U) <= 2 (H(U-U') - H(U))`.
pub fn doubling_lower() -> InequalitySpec {
    build(&["U", "U'"], vec![row(0.5, &[1, 1]), row(0.5, &[1, 0]), row(-1.0, &[1, -1])], vec![vec![0, 1]])
}

/// Upper half: `H(U-U') - H(U) <= 2 (H(U+U') - H(U))`.
pub fn doubling_upper() -> InequalitySpec {
    build(&["U", "U'"], vec![row(1.0, &[1, -1]), row(1.0, &[1, 0]), row(-2.0, &[1, 1])], vec![vec![0, 1]])
}

/// Numerator `H(U-U') - H(U)` and denominator `H(U+U') - H(U)` of the
/// doubling ratio.
pub fn doubling_ratio() -> (InequalitySpec, InequalitySpec) {
    let iid = vec![vec![0, 1]];
    (
        build(&["U", "U'"], vec![row(1.0, &[1, -1]), row(-1.0, &[1, 0])], iid.clone()),
        build(&["U", "U'"], vec![row(1.0, &[1, 1]), row(-1.0, &[1, 0])], iid),
    )
}

fn floor_log(x: i64, base: f64) -> i64 {
    let mag = x.unsigned_abs();
    if base == 2.0 {
        return mag.ilog2() as i64;
    }
    let mut k = ((mag as f64).ln() / base.ln()).floor() as i64;
    // correct rounding at exact powers
    while base.powi((k + 1) as i32) <= mag as f64 {
        k += 1;
    }
    while k > 0 && base.powi(k as i32) > mag as f64 {
        k -= 1;
    }
    k
}

/// `H(pX+qY) - H(X+Y) <= c (2H(X+Y) - H(X) - H(Y))` with
/// `c = 7 floor(log|p|) + 7 floor(log|q|) + 2`, logarithms in `base`.
pub fn dilation(p: i64, q: i64, base: f64) -> Result<InequalitySpec> {
    if p == 0 || q == 0 {
        return Err(Error::invalid("dilation inequality needs nonzero p and q"));
    }
    if !(base > 1.0) {
        return Err(Error::invalid(format!("log base must exceed 1, got {base}")));
    }
    let c = (7 * floor_log(p, base) + 7 * floor_log(q, base) + 2) as f64;
    InequalitySpec::new(
        names(&["X", "Y"]),
        vec![row(1.0, &[p, q]), row(-1.0 - 2.0 * c, &[1, 1]), row(c, &[1, 0]), row(c, &[0, 1])],
        vec![],
    )
}

/// Names accepted by [`by_name`].
pub const NAMES: &[&str] =
    &["sum-difference", "subadditivity", "sum-lower-x", "sum-lower-y", "doubling-lower", "doubling-upper", "dilation"];

pub fn by_name(name: &str) -> Option<InequalitySpec> {
    Some(match name {
        "sum-difference" => sum_difference(),
        "subadditivity" => subadditivity(),
        "sum-lower-x" => sum_dominates_left(),
        "sum-lower-y" => sum_dominates_right(),
        "doubling-lower" => doubling_lower(),
        "doubling-upper" => doubling_upper(),
        "dilation" => dilation(2, 3, 2.0).ok()?,
        _ => return None,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn balance_flags() {
        assert!(sum_difference().is_balanced());
        assert!(!subadditivity().is_balanced());
        assert!(doubling_lower().is_balanced() && doubling_upper().is_balanced());
        assert!(dilation(5, -3, 2.0).unwrap().is_balanced());
    }

    #[test]
    fn dilation_constant() {
        // p = 4, q = 1 in base 2: c = 7*2 + 0 + 2 = 16
        let s = dilation(4, 1, 2.0).unwrap();
        assert_eq!(s.rows[2].alpha, 16.0);
        let t = dilation(1000, 1, 10.0).unwrap();
        assert_eq!(t.rows[2].alpha, 23.0);
        let e = dilation(8, 8, std::f64::consts::E).unwrap();
        assert_eq!(e.rows[2].alpha, 30.0);
        assert!(dilation(0, 1, 2.0).is_err());
        assert!(dilation(2, 4, 2.0).unwrap().rows[0].coeffs == vec![1, 2]);
    }

    #[test]
    fn catalogue_is_complete() {
        for n in NAMES {
            assert!(by_name(n).is_some(), "{n}");
        }
        assert!(by_name("nope").is_none());
    }
}
