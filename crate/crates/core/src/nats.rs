//! Entropy values in natural-log units with an absolute error bound.

use serde::{Deserialize, Serialize};
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

/// An entropy or information value in nats, carried with a nonnegative
/// absolute error bound.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Nats {
    pub value: f64,
    pub err: f64,
}

impl Nats {
    pub const ZERO: Nats = Nats { value: 0.0, err: 0.0 };

    pub fn new(value: f64, err: f64) -> Self {
        Nats { value, err: err.abs() }
    }

    pub fn exact(value: f64) -> Self {
        Nats { value, err: 0.0 }
    }

    pub fn with_err(self, extra: f64) -> Self {
        Nats { value: self.value, err: self.err + extra.abs() }
    }
}

impl Add for Nats {
    type Output = Nats;
    fn add(self, rhs: Nats) -> Nats {
        Nats { value: self.value + rhs.value, err: self.err + rhs.err }
    }
}

impl Sub for Nats {
    type Output = Nats;
    fn sub(self, rhs: Nats) -> Nats {
        Nats { value: self.value - rhs.value, err: self.err + rhs.err }
    }
}

impl Neg for Nats {
    type Output = Nats;
    fn neg(self) -> Nats {
        Nats { value: -self.value, err: self.err }
    }
}

impl Mul<f64> for Nats {
    type Output = Nats;
    fn mul(self, rhs: f64) -> Nats {
        Nats { value: self.value * rhs, err: self.err * rhs.abs() }
    }
}

impl fmt::Display for Nats {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:.12} (±{:.1e})", self.value, self.err)
    }
}

/// Neumaier compensated summation.
#[derive(Clone, Copy, Debug, Default)]
pub struct CompensatedSum {
    sum: f64,
    comp: f64,
    abs: f64,
    count: usize,
}

impl CompensatedSum {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
        self.abs += x.abs();
        self.count += 1;
    }

    pub fn total(&self) -> f64 {
        self.sum + self.comp
    }

    /// Sum of absolute values of the added terms.
    pub fn abs_total(&self) -> f64 {
        self.abs
    }

    pub fn count(&self) -> usize {
        self.count
    }
}

impl FromIterator<f64> for CompensatedSum {
    fn from_iter<I: IntoIterator<Item = f64>>(iter: I) -> Self {
        let mut s = CompensatedSum::new();
        for x in iter {
            s.add(x);
        }
        s
    }
}

/// `-sum m ln(m / scale)` over positive masses, with a rounding error bound.
///
/// `scale` is the reference measure of one atom: 1 for counting measure,
/// the cell volume for a piecewise-constant density.
pub(crate) fn entropy_of_masses<I: IntoIterator<Item = f64>>(masses: I, scale: f64) -> Nats {
    let ln_scale = scale.ln();
    let mut terms = CompensatedSum::new();
    let mut total = CompensatedSum::new();
    let mut max_log = 0.0f64;
    for m in masses {
        if m > 0.0 {
            let l = m.ln();
            terms.add(m * (ln_scale - l));
            total.add(m);
            max_log = max_log.max((l - ln_scale).abs());
        }
    }
    let defect = (total.total() - 1.0).abs();
    let err = 4.0 * f64::EPSILON * (terms.abs_total() + terms.count() as f64 * f64::EPSILON)
        + defect * (1.0 + max_log);
    Nats::new(terms.total(), err)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn compensated_sum_recovers_small_terms() {
        let mut s = CompensatedSum::new();
        s.add(1.0);
        for _ in 0..1000 {
            s.add(1e-17);
        }
        s.add(-1.0);
        assert!((s.total() - 1e-14).abs() < 1e-20);
    }

    #[test]
    fn entropy_two_point() {
        let h = entropy_of_masses([0.5, 0.5], 1.0);
        assert!((h.value - std::f64::consts::LN_2).abs() < 1e-15);
        assert!(h.err < 1e-14);
    }

    #[test]
    fn nats_arithmetic_accumulates_error() {
        let a = Nats::new(1.0, 1e-12);
        let b = Nats::new(0.5, 2e-12);
        let c = (a - b) * -2.0;
        assert_eq!(c.value, -1.0);
        assert!((c.err - 6e-12).abs() < 1e-24);
    }
}
