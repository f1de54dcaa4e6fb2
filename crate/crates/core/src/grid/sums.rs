use super::GridDensity;
use crate::dyadic::Dyadic;
use crate::error::{Error, Result};
use crate::lattice::{linear_combination, LatticePmf};

/// Largest number of nonzero terms handled by inclusion-exclusion.
const MAX_TERMS: usize = 24;

/// Law of `floor(sum_j a_j U_j)` for independent `U_j ~ Uniform[0,1)`,
/// computed exactly from the box-spline CDF by inclusion-exclusion.
pub fn floor_uniform_sum_pmf(coeffs: &[i64]) -> Result<LatticePmf> {
    let c: Vec<i128> = coeffs.iter().filter(|&&a| a != 0).map(|&a| (a as i128).abs()).collect();
    if c.is_empty() {
        return Err(Error::AllCoefficientsZero);
    }
    if c.len() > MAX_TERMS {
        return Err(Error::ResourceBound(format!("{} terms in one combination", c.len())));
    }
    // a U with a < 0 equals |a| (1 - U) - |a| in law
    let offset: i64 = coeffs.iter().filter(|&&a| a < 0).map(|a| a.unsigned_abs() as i64).sum::<i64>();
    let m = c.len() as u32;
    let total: i128 = c.iter().sum();
    let overflow = || Error::Overflow("box-spline CDF".into());
    let subsets: Vec<(i128, bool)> = (0u32..1 << m)
        .map(|mask| {
            let s: i128 = (0..m as usize).filter(|i| mask >> i & 1 == 1).map(|i| c[i]).sum();
            (s, mask.count_ones() % 2 == 1)
        })
        .collect();
    let numer = |t: i128| -> Result<i128> {
        let mut acc: i128 = 0;
        for &(s, odd) in &subsets {
            if t > s {
                let v = (t - s).checked_pow(m).ok_or_else(overflow)?;
                acc = if odd { acc.checked_sub(v) } else { acc.checked_add(v) }.ok_or_else(overflow)?;
            }
        }
        Ok(acc)
    };
    let mut denom: i128 = (1..=m as i128).product();
    for &x in &c {
        denom = denom.checked_mul(x).ok_or_else(overflow)?;
    }
    let mut masses = Vec::with_capacity(total as usize);
    let mut prev = numer(0)?;
    for n in 0..total {
        let next = numer(n + 1)?;
        masses.push((next - prev) as f64 / denom as f64);
        prev = next;
    }
    let atoms = masses.into_iter().enumerate().map(|(i, w)| (vec![i as i64 - offset], w));
    LatticePmf::from_weights(1, atoms)
}

/// `d`-fold tensor of the one-dimensional floor pmf.
pub(crate) fn floor_uniform_sum_pmf_nd(coeffs: &[i64], dim: usize) -> Result<LatticePmf> {
    let one = floor_uniform_sum_pmf(coeffs)?;
    let mut acc = one.clone();
    for _ in 1..dim {
        acc = acc.product(&one);
    }
    Ok(acc)
}

fn check_dims(fs: &[&GridDensity], n_coeffs: usize) -> Result<usize> {
    if fs.len() != n_coeffs {
        return Err(Error::invalid(format!("{} densities but {} coefficients", fs.len(), n_coeffs)));
    }
    let dim = fs.first().map(|f| f.dim()).ok_or(Error::AllCoefficientsZero)?;
    if let Some(f) = fs.iter().find(|f| f.dim() != dim) {
        return Err(Error::dims(dim, f.dim()));
    }
    Ok(dim)
}

/// Law of `floor(2^k sum_j a_j X_j)` for independent `X_j` and integer
/// coefficients, exact for the piecewise-constant representatives.
pub fn sum_cell_masses(fs: &[&GridDensity], coeffs: &[i64], k: u32) -> Result<LatticePmf> {
    let dim = check_dims(fs, coeffs.len())?;
    let terms: Vec<(&GridDensity, i64)> = fs.iter().copied().zip(coeffs.iter().copied()).filter(|t| t.1 != 0).collect();
    if terms.is_empty() {
        return Err(Error::AllCoefficientsZero);
    }
    let r = terms.iter().map(|t| t.0.resolution()).max().unwrap_or(0).max(k);
    let cells: Vec<LatticePmf> =
        terms.iter().map(|(f, _)| f.refine(r).map(|g| g.cell_pmf())).collect::<Result<_>>()?;
    let a: Vec<i64> = terms.iter().map(|t| t.1).collect();
    let lattice = linear_combination(&cells, &a)?;
    let w = floor_uniform_sum_pmf_nd(&a, dim)?;
    let fine = if w.len() == 1 { lattice.translate(w.point(0))? } else { lattice.convolve(&w)? };
    let s = r - k;
    if s == 0 {
        Ok(fine)
    } else {
        fine.merged_by(dim, |c| c.iter().map(|x| x >> s).collect())
    }
}

/// Density of `sum_j a_j X_j` with dyadic coefficients, at the smallest
/// resolution among the scaled inputs.
pub fn density_linear_combination(fs: &[&GridDensity], coeffs: &[Dyadic]) -> Result<GridDensity> {
    check_dims(fs, coeffs.len())?;
    let res = fs
        .iter()
        .zip(coeffs)
        .filter(|(_, a)| !a.is_zero())
        .map(|(f, a)| f.resolution() + a.log2_den())
        .min()
        .ok_or(Error::AllCoefficientsZero)?;
    density_linear_combination_at(fs, coeffs, res)
}

/// As [`density_linear_combination`], with exact cell masses at a chosen
/// output resolution.
pub fn density_linear_combination_at(fs: &[&GridDensity], coeffs: &[Dyadic], res: u32) -> Result<GridDensity> {
    check_dims(fs, coeffs.len())?;
    // p / 2^s times X at resolution r is p times X / 2^s at resolution r + s
    let mut scaled = Vec::with_capacity(fs.len());
    let mut ints = Vec::with_capacity(fs.len());
    for (f, a) in fs.iter().zip(coeffs) {
        if a.is_zero() {
            continue;
        }
        scaled.push(f.scale_down(a.log2_den()));
        ints.push(a.numerator());
    }
    if ints.is_empty() {
        return Err(Error::AllCoefficientsZero);
    }
    let refs: Vec<&GridDensity> = scaled.iter().collect();
    let cells = sum_cell_masses(&refs, &ints, res)?;
    GridDensity::from_cell_pmf(res, &cells)
}
