use super::conv::cyclic_convolve_nd;
use super::{MASS_TOLERANCE, PRUNE_THRESHOLD};
use crate::error::{Error, Result};
use crate::nats::{entropy_of_masses, CompensatedSum, Nats};

/// Largest table (in cells) a cyclic pmf may hold.
pub const MAX_CYCLIC_CELLS: usize = 1 << 26;
const DIRECT_LIMIT: usize = 1 << 22;

/// Probability mass function on `(Z/2^k Z)^n`, stored densely.
///
/// Residue tuple `(r_1, ..., r_n)` lives at index `sum r_i 2^(k (n - i))`.
#[derive(Clone, Debug, PartialEq)]
pub struct CyclicPmf {
    modulus_log2: u32,
    dim: usize,
    table: Vec<f64>,
}

impl CyclicPmf {
    pub fn from_table(modulus_log2: u32, dim: usize, table: Vec<f64>) -> Result<Self> {
        if modulus_log2 == 0 || dim == 0 {
            return Err(Error::InvalidDistribution("cyclic pmf needs k >= 1 and n >= 1".into()));
        }
        let cells = Self::cells_for(modulus_log2, dim)?;
        if table.len() != cells {
            return Err(Error::InvalidDistribution(format!("table has {} cells, expected {cells}", table.len())));
        }
        if table.iter().any(|m| !m.is_finite() || *m < 0.0) {
            return Err(Error::InvalidDistribution("negative or non-finite mass".into()));
        }
        let total = table.iter().copied().collect::<CompensatedSum>().total();
        if (total - 1.0).abs() > MASS_TOLERANCE {
            return Err(Error::InvalidDistribution(format!("masses sum to {total}")));
        }
        Ok(CyclicPmf { modulus_log2, dim, table })
    }

    fn cells_for(modulus_log2: u32, dim: usize) -> Result<usize> {
        let bits = modulus_log2 as usize * dim;
        if bits >= usize::BITS as usize || (1usize << bits) > MAX_CYCLIC_CELLS {
            return Err(Error::ResourceBound(format!("(Z/2^{modulus_log2})^{dim} exceeds {MAX_CYCLIC_CELLS} cells")));
        }
        Ok(1usize << bits)
    }

    pub fn uniform(modulus_log2: u32, dim: usize) -> Result<Self> {
        let cells = Self::cells_for(modulus_log2, dim)?;
        Self::from_table(modulus_log2, dim, vec![1.0 / cells as f64; cells])
    }

    pub fn point_mass(modulus_log2: u32, residues: &[i64]) -> Result<Self> {
        let dim = residues.len();
        let cells = Self::cells_for(modulus_log2, dim.max(1))?;
        let mut table = vec![0.0; cells];
        let mut pmf = CyclicPmf { modulus_log2, dim, table: Vec::new() };
        table[pmf.index_of(residues)] = 1.0;
        pmf.table = table;
        Self::from_table(modulus_log2, dim, pmf.table)
    }

    pub fn modulus_log2(&self) -> u32 {
        self.modulus_log2
    }

    pub fn modulus(&self) -> i64 {
        1i64 << self.modulus_log2
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn table(&self) -> &[f64] {
        &self.table
    }

    /// Index of a residue tuple; entries are reduced mod `2^k` first.
    pub fn index_of(&self, residues: &[i64]) -> usize {
        let m = self.modulus();
        residues
            .iter()
            .fold(0usize, |idx, &r| (idx << self.modulus_log2) | r.rem_euclid(m) as usize)
    }

    pub fn residues_of(&self, mut idx: usize) -> Vec<i64> {
        let mask = (1usize << self.modulus_log2) - 1;
        let mut out = vec![0i64; self.dim];
        for slot in out.iter_mut().rev() {
            *slot = (idx & mask) as i64;
            idx >>= self.modulus_log2;
        }
        out
    }

    pub fn mass_at(&self, residues: &[i64]) -> f64 {
        self.table[self.index_of(residues)]
    }

    pub fn entropy(&self) -> Nats {
        entropy_of_masses(self.table.iter().copied(), 1.0)
    }

    /// Pushforward under `x -> a x mod 2^k`; `a` may be zero or even.
    pub fn dilate_mod(&self, a: i64) -> Self {
        let mut table = vec![0.0; self.table.len()];
        for (idx, &m) in self.table.iter().enumerate() {
            if m > 0.0 {
                let r: Vec<i64> = self.residues_of(idx).iter().map(|x| x.wrapping_mul(a.rem_euclid(self.modulus()))).collect();
                table[self.index_of(&r)] += m;
            }
        }
        CyclicPmf { modulus_log2: self.modulus_log2, dim: self.dim, table }
    }

    /// Distribution of `X + Y mod 2^k`.
    pub fn convolve(&self, other: &CyclicPmf) -> Result<Self> {
        self.check_compatible(other)?;
        let n = self.table.len();
        let mut table = if n.saturating_mul(n) <= DIRECT_LIMIT {
            let mut out = vec![0.0; n];
            for (i, &a) in self.table.iter().enumerate() {
                if a == 0.0 {
                    continue;
                }
                let ri = self.residues_of(i);
                for (j, &b) in other.table.iter().enumerate() {
                    if b == 0.0 {
                        continue;
                    }
                    let s: Vec<i64> = ri.iter().zip(self.residues_of(j)).map(|(x, y)| x + y).collect();
                    out[self.index_of(&s)] += a * b;
                }
            }
            out
        } else {
            let shape = vec![1usize << self.modulus_log2; self.dim];
            cyclic_convolve_nd(&self.table, &other.table, &shape)
        };
        for m in &mut table {
            if *m < PRUNE_THRESHOLD {
                *m = 0.0;
            }
        }
        let total = table.iter().copied().collect::<CompensatedSum>().total();
        table.iter_mut().for_each(|m| *m /= total);
        Ok(CyclicPmf { modulus_log2: self.modulus_log2, dim: self.dim, table })
    }

    fn check_compatible(&self, other: &CyclicPmf) -> Result<()> {
        if self.modulus_log2 != other.modulus_log2 {
            return Err(Error::ModulusMismatch { expected: self.modulus_log2, found: other.modulus_log2 });
        }
        if self.dim != other.dim {
            return Err(Error::dims(self.dim, other.dim));
        }
        Ok(())
    }
}

/// Distribution of `sum_j a_j X_j mod 2^k`, componentwise.
pub fn cyclic_linear_combination(ps: &[CyclicPmf], coeffs: &[i64]) -> Result<CyclicPmf> {
    if ps.len() != coeffs.len() {
        return Err(Error::invalid(format!("{} distributions but {} coefficients", ps.len(), coeffs.len())));
    }
    let first = ps.first().ok_or_else(|| Error::invalid("no distributions"))?;
    for p in ps {
        first.check_compatible(p)?;
    }
    let mut acc = CyclicPmf::point_mass(first.modulus_log2, &vec![0; first.dim])?;
    for (p, &a) in ps.iter().zip(coeffs) {
        if a.rem_euclid(first.modulus()) == 0 {
            continue;
        }
        acc = acc.convolve(&p.dilate_mod(a))?;
    }
    Ok(acc)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::{linear_combination, LatticePmf};
    use proptest::prelude::*;

    #[test]
    fn examples() {
        let u = CyclicPmf::uniform(2, 1).unwrap();
        let s = cyclic_linear_combination(&[u.clone(), u.clone()], &[1, 1]).unwrap();
        assert!((s.entropy().value - 4f64.ln()).abs() < 1e-15);

        let pm = CyclicPmf::point_mass(2, &[3]).unwrap();
        let d = cyclic_linear_combination(&[pm], &[2]).unwrap();
        assert_eq!(d, CyclicPmf::point_mass(2, &[2]).unwrap());

        // direct cyclic convolution oracle
        let half = CyclicPmf::from_table(2, 1, vec![0.5, 0.5, 0.0, 0.0]).unwrap();
        let c = cyclic_linear_combination(&[half.clone(), half], &[1, 1]).unwrap();
        assert_eq!(c.table(), &[0.25, 0.5, 0.25, 0.0]);

        let other = CyclicPmf::uniform(3, 1).unwrap();
        assert!(matches!(
            cyclic_linear_combination(&[u, other], &[1, 1]),
            Err(Error::ModulusMismatch { .. })
        ));
    }

    #[test]
    fn fft_path_matches_direct() {
        // (Z/2^6)^2 has 4096 cells, so n^2 exceeds the direct limit
        let k = 6;
        let cells = 1usize << (2 * k);
        let w: Vec<f64> = (0..cells).map(|i| 1.0 + ((i * 31) % 7) as f64).collect();
        let t: f64 = w.iter().sum();
        let p = CyclicPmf::from_table(k, 2, w.iter().map(|x| x / t).collect()).unwrap();
        let fast = p.convolve(&p).unwrap();
        for probe in [[0i64, 0], [5, 63], [63, 1], [17, 40]] {
            let mut s = 0.0;
            for i in 0..cells {
                let r = p.residues_of(i);
                let rest = [probe[0] - r[0], probe[1] - r[1]];
                s += p.table()[i] * p.mass_at(&rest);
            }
            assert!((fast.mass_at(&probe) - s).abs() < 1e-15);
        }
    }

    fn arb_pmf() -> impl Strategy<Value = LatticePmf> {
        prop::collection::vec((-9i64..9, 0.01f64..1.0), 1..6)
            .prop_map(|atoms| LatticePmf::from_weights(1, atoms.into_iter().map(|(x, m)| (vec![x], m))).unwrap())
    }

    proptest! {
        #[test]
        fn agrees_with_lattice_then_reduce(p in arb_pmf(), q in arb_pmf(), a in -4i64..5, b in -4i64..5, k in 1u32..5) {
            prop_assume!(a != 0 || b != 0);
            let lat = linear_combination(&[p.clone(), q.clone()], &[a, b]).unwrap().reduce_mod(k).unwrap();
            let cyc = cyclic_linear_combination(&[p.reduce_mod(k).unwrap(), q.reduce_mod(k).unwrap()], &[a, b]).unwrap();
            for (x, y) in lat.table().iter().zip(cyc.table()) {
                prop_assert!((x - y).abs() < 1e-12);
            }
        }
    }
}
