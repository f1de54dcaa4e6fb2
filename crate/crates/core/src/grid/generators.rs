//! Analytic densities rendered with exact cell masses.

use super::GridDensity;
use crate::dyadic::Dyadic;
use crate::error::{Error, Result};
use std::f64::consts::SQRT_2;

fn edge(x: Dyadic, res: u32) -> Result<i64> {
    x.at_resolution(res)
        .ok_or_else(|| Error::invalid(format!("box edge {x} is not on the 2^-{res} grid")))
}

/// One-dimensional density from a CDF, evaluated at every cell edge of
/// `[lo, hi)`.
pub fn from_cdf(lo: Dyadic, hi: Dyadic, res: u32, cdf: impl Fn(f64) -> f64) -> Result<GridDensity> {
    let (a, b) = (edge(lo, res)?, edge(hi, res)?);
    if b <= a {
        return Err(Error::invalid(format!("empty interval [{lo}, {hi})")));
    }
    let h = (-(res as f64)).exp2();
    let weights: Vec<f64> = (a..b).map(|c| (cdf((c + 1) as f64 * h) - cdf(c as f64 * h)).max(0.0)).collect();
    GridDensity::from_cell_weights(res, vec![a], vec![(b - a) as usize], weights)
}

/// Uniform density on a box with dyadic edges.
pub fn uniform(bx: &[(Dyadic, Dyadic)], res: u32) -> Result<GridDensity> {
    let mut lo = Vec::with_capacity(bx.len());
    let mut shape = Vec::with_capacity(bx.len());
    for &(l, h) in bx {
        let (a, b) = (edge(l, res)?, edge(h, res)?);
        if b <= a {
            return Err(Error::invalid(format!("empty interval [{l}, {h})")));
        }
        lo.push(a);
        shape.push((b - a) as usize);
    }
    let cells: usize = shape.iter().product();
    GridDensity::from_cell_weights(res, lo, shape, vec![1.0; cells])
}

pub fn uniform_unit(dim: usize, res: u32) -> Result<GridDensity> {
    uniform(&vec![(Dyadic::integer(0), Dyadic::integer(1)); dim], res)
}

/// `P[a <= X < b]` for `X ~ N(mean, sigma^2)`, using the tail on the far
/// side of the mean so small masses keep their relative precision.
fn normal_mass(a: f64, b: f64, mean: f64, sigma: f64) -> f64 {
    let z = |x: f64| (x - mean) / (sigma * SQRT_2);
    if a >= mean {
        0.5 * (libm::erfc(z(a)) - libm::erfc(z(b)))
    } else if b <= mean {
        0.5 * (libm::erfc(-z(b)) - libm::erfc(-z(a)))
    } else {
        1.0 - 0.5 * libm::erfc(-z(a)) - 0.5 * libm::erfc(z(b))
    }
}

/// `N(mean, sigma^2)` conditioned on `[-n, n)`.
pub fn gaussian(mean: f64, sigma: f64, n: Dyadic, res: u32) -> Result<GridDensity> {
    if !(sigma > 0.0) || !mean.is_finite() {
        return Err(Error::invalid(format!("gaussian needs sigma > 0, got {sigma}")));
    }
    if n.numerator() <= 0 {
        return Err(Error::invalid(format!("truncation level {n} must be positive")));
    }
    let (a, b) = (edge(n_neg(n), res)?, edge(n, res)?);
    let h = (-(res as f64)).exp2();
    let weights: Vec<f64> = (a..b).map(|c| normal_mass(c as f64 * h, (c + 1) as f64 * h, mean, sigma)).collect();
    GridDensity::from_cell_weights(res, vec![a], vec![(b - a) as usize], weights)
}

fn n_neg(n: Dyadic) -> Dyadic {
    Dyadic::new(-n.numerator(), n.log2_den())
}

/// Triangular density `1 - |x - 1|` on `[0, 2]`.
pub fn triangular(res: u32) -> Result<GridDensity> {
    from_cdf(Dyadic::integer(0), Dyadic::integer(2), res, |x| {
        if x <= 1.0 {
            0.5 * x * x
        } else {
            1.0 - 0.5 * (2.0 - x) * (2.0 - x)
        }
    })
}

/// `(p + 1) x^p` on `[0, 1]`; `p = 1` is the density `2x`.
pub fn power(p: f64, res: u32) -> Result<GridDensity> {
    if !(p > -1.0) {
        return Err(Error::invalid(format!("power density needs p > -1, got {p}")));
    }
    from_cdf(Dyadic::integer(0), Dyadic::integer(1), res, |x| x.powf(p + 1.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::{E, PI};

    #[test]
    fn gaussian_entropy_matches_closed_form() {
        let g = gaussian(0.0, 1.0, Dyadic::integer(8), 10).unwrap();
        let h = g.differential_entropy().value;
        assert!((h - 0.5 * (2.0 * PI * E).ln()).abs() < 2e-3, "{h}");
        assert!((g.total_mass() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn truncated_gaussian_against_quadrature() {
        let g = gaussian(0.0, 1.0, Dyadic::integer(8), 12).unwrap();
        let t = g.truncate(Dyadic::integer(1)).unwrap();
        // Simpson quadrature of -phi/Z ln(phi/Z) on [-1, 1]
        let z = 1.0 - libm::erfc(1.0 / SQRT_2);
        let f = |x: f64| (-0.5 * x * x).exp() / (2.0 * PI).sqrt() / z;
        let n = 20_000;
        let step = 2.0 / n as f64;
        let mut acc = 0.0;
        for i in 0..=n {
            let x = -1.0 + i as f64 * step;
            let w = if i == 0 || i == n { 1.0 } else if i % 2 == 1 { 4.0 } else { 2.0 };
            acc += w * -f(x) * f(x).ln();
        }
        let oracle = acc * step / 3.0;
        assert!((t.differential_entropy().value - oracle).abs() < 1e-6);
    }

    #[test]
    fn triangular_and_power_entropies() {
        let t = triangular(12).unwrap();
        assert!((t.differential_entropy().value - 0.5).abs() < 1e-6);
        let p = power(1.0, 14).unwrap();
        assert!((p.differential_entropy().value - (0.5 - 2f64.ln())).abs() < 1e-6);
    }

    #[test]
    fn rejects_unaligned_boxes() {
        assert!(uniform(&[(Dyadic::new(1, 3), Dyadic::integer(1))], 2).is_err());
        assert!(uniform(&[(Dyadic::integer(1), Dyadic::integer(1))], 2).is_err());
    }
}
