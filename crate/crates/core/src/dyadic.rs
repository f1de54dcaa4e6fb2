//! Dyadic rationals `num / 2^log2_den`.

use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};
use std::fmt;
use std::str::FromStr;

/// Deepest denominator accepted anywhere in the crate.
pub const MAX_DYADIC_DEPTH: u32 = 40;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Dyadic {
    num: i64,
    log2_den: u32,
}

impl Dyadic {
    pub fn new(num: i64, log2_den: u32) -> Self {
        let mut d = Dyadic { num, log2_den };
        d.reduce();
        d
    }

    pub fn integer(n: i64) -> Self {
        Dyadic { num: n, log2_den: 0 }
    }

    /// `2^-s`.
    pub fn pow2_neg(s: u32) -> Self {
        Dyadic { num: 1, log2_den: s }
    }

    /// Exact conversion; every finite double is dyadic, but only shallow ones
    /// are accepted.
    pub fn from_f64(x: f64) -> Result<Self> {
        if !x.is_finite() {
            return Err(Error::NotDyadic(x.to_string()));
        }
        for s in 0..=MAX_DYADIC_DEPTH {
            let scaled = x * (1u64 << s) as f64;
            if scaled.fract() == 0.0 && scaled.abs() < 9.0e15 {
                return Ok(Dyadic::new(scaled as i64, s));
            }
        }
        Err(Error::NotDyadic(x.to_string()))
    }

    fn reduce(&mut self) {
        while self.log2_den > 0 && self.num % 2 == 0 {
            self.num /= 2;
            self.log2_den -= 1;
        }
        if self.num == 0 {
            self.log2_den = 0;
        }
    }

    pub fn numerator(self) -> i64 {
        self.num
    }

    pub fn log2_den(self) -> u32 {
        self.log2_den
    }

    pub fn is_zero(self) -> bool {
        self.num == 0
    }

    pub fn is_integer(self) -> bool {
        self.log2_den == 0
    }

    pub fn to_f64(self) -> f64 {
        self.num as f64 / (1u64 << self.log2_den) as f64
    }

    /// The value times `2^res`, when that is an integer.
    pub fn at_resolution(self, res: u32) -> Option<i64> {
        if res < self.log2_den {
            return None;
        }
        let shift = res - self.log2_den;
        if shift >= 63 {
            return None;
        }
        self.num.checked_mul(1i64 << shift)
    }
}

impl fmt::Display for Dyadic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.log2_den == 0 {
            write!(f, "{}", self.num)
        } else {
            write!(f, "{}/{}", self.num, 1u64 << self.log2_den)
        }
    }
}

fn parse_int(s: &str) -> Result<i64> {
    s.trim().parse::<i64>().map_err(|_| Error::NotDyadic(s.to_string()))
}

fn den_log2(den: i64, src: &str) -> Result<u32> {
    if den <= 0 || den & (den - 1) != 0 {
        return Err(Error::NotDyadic(src.to_string()));
    }
    Ok(den.trailing_zeros())
}

impl FromStr for Dyadic {
    type Err = Error;

    /// Accepts `3`, `-0.375`, `3/8`, `2^-7`.
    fn from_str(s: &str) -> Result<Self> {
        let t = s.trim();
        if t.is_empty() {
            return Err(Error::NotDyadic(s.to_string()));
        }
        if let Some(exp) = t.strip_prefix("2^") {
            let e = parse_int(exp)?;
            if e >= 0 {
                if e > 62 {
                    return Err(Error::NotDyadic(s.to_string()));
                }
                return Ok(Dyadic::integer(1i64 << e));
            }
            let depth = (-e) as u32;
            if depth > MAX_DYADIC_DEPTH {
                return Err(Error::NotDyadic(s.to_string()));
            }
            return Ok(Dyadic::pow2_neg(depth));
        }
        if let Some((n, d)) = t.split_once('/') {
            let num = parse_int(n)?;
            let log2 = den_log2(parse_int(d)?, s)?;
            return Ok(Dyadic::new(num, log2));
        }
        if let Some((int_part, frac_part)) = t.split_once('.') {
            let neg = int_part.trim_start().starts_with('-');
            let ip = if int_part.is_empty() || int_part == "-" || int_part == "+" {
                0
            } else {
                parse_int(int_part)?.abs()
            };
            let digits = frac_part.trim_end_matches('0');
            if !digits.chars().all(|c| c.is_ascii_digit()) {
                return Err(Error::NotDyadic(s.to_string()));
            }
            if digits.is_empty() {
                return Ok(Dyadic::integer(if neg { -ip } else { ip }));
            }
            // digits / 10^m is dyadic iff 5^m divides digits
            let m = digits.len() as u32;
            if m > 18 {
                return Err(Error::NotDyadic(s.to_string()));
            }
            let frac: i64 = parse_int(digits)?;
            let five = 5i64.pow(m);
            if frac % five != 0 {
                return Err(Error::NotDyadic(s.to_string()));
            }
            // frac/10^m = (frac/5^m) / 2^m
            let num = ip
                .checked_mul(1i64 << m)
                .and_then(|v| v.checked_add(frac / five))
                .ok_or_else(|| Error::NotDyadic(s.to_string()))?;
            return Ok(Dyadic::new(if neg { -num } else { num }, m));
        }
        Ok(Dyadic::integer(parse_int(t)?))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_common_forms() {
        assert_eq!("3".parse::<Dyadic>().unwrap(), Dyadic::integer(3));
        assert_eq!("-0.375".parse::<Dyadic>().unwrap(), Dyadic::new(-3, 3));
        assert_eq!("3/8".parse::<Dyadic>().unwrap(), Dyadic::new(3, 3));
        assert_eq!("2^-7".parse::<Dyadic>().unwrap(), Dyadic::pow2_neg(7));
        assert_eq!("0.5".parse::<Dyadic>().unwrap(), Dyadic::new(1, 1));
        assert_eq!("4/8".parse::<Dyadic>().unwrap(), Dyadic::new(1, 1));
        assert_eq!("2.0".parse::<Dyadic>().unwrap(), Dyadic::integer(2));
    }

    #[test]
    fn rejects_non_dyadic() {
        assert!("0.1".parse::<Dyadic>().is_err());
        assert!("1/3".parse::<Dyadic>().is_err());
        assert!("x".parse::<Dyadic>().is_err());
        assert!(Dyadic::from_f64(0.1).is_err());
    }

    #[test]
    fn resolution_scaling() {
        let d = Dyadic::new(3, 3);
        assert_eq!(d.at_resolution(3), Some(3));
        assert_eq!(d.at_resolution(5), Some(12));
        assert_eq!(d.at_resolution(2), None);
        assert_eq!(Dyadic::from_f64(-0.75).unwrap(), Dyadic::new(-3, 2));
    }
}
