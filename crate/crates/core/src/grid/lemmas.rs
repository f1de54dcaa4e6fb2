use super::sums::{floor_uniform_sum_pmf_nd, sum_cell_masses};
use super::GridDensity;
use crate::error::{Error, Result};
use crate::lattice::{cyclic_linear_combination, gcd_all, joint_of, linear_combination, mutual_information, LatticePmf};
use crate::nats::Nats;
use serde::Serialize;
use std::f64::consts::LN_2;

/// Nonzero coefficients must have gcd one.
pub fn check_coprime(coeffs: &[i64]) -> Result<()> {
    if coeffs.iter().all(|&a| a == 0) {
        return Err(Error::AllCoefficientsZero);
    }
    match gcd_all(coeffs) {
        1 => Ok(()),
        g => Err(Error::NotCoprime { gcd: g }),
    }
}

/// `H([X]_k) - d k ln 2 - h(X)` with `h` taken from the grid representative.
pub fn renyi_gap(f: &GridDensity, k: u32) -> Result<Nats> {
    renyi_gap_against(f, k, f.differential_entropy())
}

/// As [`renyi_gap`] against a supplied reference differential entropy.
pub fn renyi_gap_against(f: &GridDensity, k: u32, h: Nats) -> Result<Nats> {
    let big_h = f.quantize(k)?.entropy();
    Ok(big_h - h - Nats::exact(f.dim() as f64 * k as f64 * LN_2))
}

fn min_resolution(fs: &[&GridDensity]) -> u32 {
    fs.iter().map(|f| f.resolution()).min().unwrap_or(0)
}

/// `H([sum a_i X_i]_k) - H(sum a_i [X_i]_k)`, exact on the grid.
pub fn quantization_commutation_gap(fs: &[&GridDensity], coeffs: &[i64], k: u32) -> Result<Nats> {
    check_coprime(coeffs)?;
    let r = min_resolution(fs);
    if k > r {
        return Err(Error::ResolutionExceeded { requested: k, available: r });
    }
    let a = sum_cell_masses(fs, coeffs, k)?;
    let quantized: Vec<LatticePmf> = fs.iter().map(|f| f.quantize(k)).collect::<Result<_>>()?;
    let b = linear_combination(&quantized, coeffs)?;
    Ok(a.entropy() - b.entropy())
}

/// Torus analogue: `H(A_k) - H(B_k)` with both sides reduced mod `2^k`.
pub fn cyclic_commutation_gap(fs: &[&GridDensity], coeffs: &[i64], k: u32) -> Result<Nats> {
    check_coprime(coeffs)?;
    let quantized = fs.iter().map(|f| f.torus_quantize(k)).collect::<Result<Vec<_>>>()?;
    let a = sum_cell_masses(fs, coeffs, k)?.reduce_mod(k)?;
    let b = cyclic_linear_combination(&quantized, coeffs)?;
    Ok(a.entropy() - b.entropy())
}

/// The four quantities tied by `H(A) - H(B) = I(Z;A) - I(Z;B)` where
/// `A = 2^k [sum a_i X_i]_k`, `B = sum a_i 2^k [X_i]_k` and `Z = A - B`.
#[derive(Clone, Debug, Serialize)]
pub struct CommutationTerms {
    pub k: u32,
    pub h_a: Nats,
    pub h_b: Nats,
    pub i_za: Nats,
    pub i_zb: Nats,
}

pub fn commutation_terms(fs: &[&GridDensity], coeffs: &[i64], k: u32) -> Result<CommutationTerms> {
    check_coprime(coeffs)?;
    let d = fs.first().map(|f| f.dim()).ok_or(Error::AllCoefficientsZero)?;
    let r = fs.iter().map(|f| f.resolution()).max().unwrap_or(0).max(k);
    let s = r - k;
    let mask = (1i64 << s) - 1;
    let mut split = Vec::with_capacity(fs.len());
    for f in fs {
        if f.dim() != d {
            return Err(Error::dims(d, f.dim()));
        }
        // (integer digits, fractional digits) of each cell at resolution r
        let cells = f.refine(r)?.cell_pmf();
        split.push(cells.pushforward(2 * d, |c| {
            c.iter().map(|x| x >> s).chain(c.iter().map(|x| x & mask)).collect()
        })?);
    }
    let nonzero: Vec<i64> = coeffs.iter().copied().filter(|&a| a != 0).collect();
    let hi_lo = linear_combination(&split, coeffs)?;
    let w = floor_uniform_sum_pmf_nd(&nonzero, d)?;
    let w2 = w.pushforward(2 * d, |x| std::iter::repeat_n(0, d).chain(x.iter().copied()).collect())?;
    let full = hi_lo.convolve(&w2)?;
    let zb = joint_of(&full, d, d, |v| (v[d..].iter().map(|x| x >> s).collect(), v[..d].to_vec()))?;
    let za = joint_of(&full, d, d, |v| {
        let z: Vec<i64> = v[d..].iter().map(|x| x >> s).collect();
        let a = v[..d].iter().zip(&z).map(|(b, z)| b + z).collect();
        (z, a)
    })?;
    Ok(CommutationTerms {
        k,
        h_a: za.right().entropy(),
        h_b: zb.right().entropy(),
        i_za: mutual_information(&za),
        i_zb: mutual_information(&zb),
    })
}
