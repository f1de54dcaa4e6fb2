use crate::dyadic::Dyadic;
use crate::error::{Error, Result};
use crate::lattice::{BoxIndex, CyclicPmf, LatticePmf};
use crate::nats::{entropy_of_masses, CompensatedSum, Nats};

/// Largest dense grid, in cells.
pub const MAX_GRID_CELLS: usize = 1 << 26;
/// Total-mass tolerance for a valid density.
pub const INTEGRAL_TOLERANCE: f64 = 1e-10;

/// Piecewise-constant probability density on a box aligned to the `2^-res`
/// grid.
///
/// Cell `c` (an integer tuple) covers `[c 2^-res, (c + 1) 2^-res)`. The box
/// is `lo .. lo + shape` in cell units and values are stored row-major as
/// densities per unit volume.
#[derive(Clone, Debug, PartialEq)]
pub struct GridDensity {
    res: u32,
    lo: Vec<i64>,
    shape: Vec<usize>,
    values: Vec<f64>,
}

fn pow2(e: i64) -> f64 {
    (e as f64).exp2()
}

impl GridDensity {
    /// Build from per-cell masses; they must integrate to one within 1e-10.
    pub fn from_cell_masses(res: u32, lo: Vec<i64>, shape: Vec<usize>, masses: Vec<f64>) -> Result<Self> {
        let g = Self::from_masses_unchecked(res, lo, shape, masses)?;
        let total = g.total_mass();
        if (total - 1.0).abs() > INTEGRAL_TOLERANCE {
            return Err(Error::InvalidDistribution(format!("density integrates to {total}")));
        }
        Ok(g)
    }

    /// Nonnegative cell weights, normalized.
    pub fn from_cell_weights(res: u32, lo: Vec<i64>, shape: Vec<usize>, weights: Vec<f64>) -> Result<Self> {
        let total = weights.iter().copied().collect::<CompensatedSum>().total();
        if !(total > 0.0) {
            return Err(Error::InvalidDistribution("zero total mass".into()));
        }
        Self::from_masses_unchecked(res, lo, shape, weights.into_iter().map(|w| w / total).collect())
    }

    /// Density values per unit volume.
    pub fn from_values(res: u32, lo: Vec<i64>, shape: Vec<usize>, values: Vec<f64>) -> Result<Self> {
        let vol = pow2(-(res as i64) * lo.len() as i64);
        Self::from_cell_masses(res, lo, shape, values.into_iter().map(|v| v * vol).collect())
    }

    fn from_masses_unchecked(res: u32, lo: Vec<i64>, shape: Vec<usize>, masses: Vec<f64>) -> Result<Self> {
        let d = lo.len();
        if d == 0 || shape.len() != d {
            return Err(Error::InvalidDistribution("box dimension mismatch".into()));
        }
        let cells = shape.iter().try_fold(1usize, |a, &s| a.checked_mul(s)).unwrap_or(usize::MAX);
        if cells > MAX_GRID_CELLS {
            return Err(Error::ResourceBound(format!("grid with {cells} cells")));
        }
        if cells == 0 || masses.len() != cells {
            return Err(Error::InvalidDistribution(format!("{} values for {cells} cells", masses.len())));
        }
        if masses.iter().any(|m| !m.is_finite() || *m < 0.0) {
            return Err(Error::InvalidDistribution("negative or non-finite density".into()));
        }
        let scale = pow2(res as i64 * d as i64);
        let values = masses.into_iter().map(|m| m * scale).collect();
        Ok(GridDensity { res, lo, shape, values })
    }

    /// Dense grid over the bounding box of a pmf of cell indices.
    pub fn from_cell_pmf(res: u32, cells: &LatticePmf) -> Result<Self> {
        let (lo, hi) = cells.bounds();
        let shape: Vec<usize> = lo.iter().zip(&hi).map(|(l, h)| (h - l + 1) as usize).collect();
        let bx = BoxIndex::new(lo.clone(), shape.clone())
            .filter(|b| b.volume <= MAX_GRID_CELLS)
            .ok_or_else(|| Error::ResourceBound("grid bounding box too large".into()))?;
        let mut masses = vec![0.0; bx.volume];
        for (c, m) in cells.iter() {
            masses[bx.index(c)] += m;
        }
        Self::from_cell_masses(res, lo, shape, masses)
    }

    pub fn dim(&self) -> usize {
        self.lo.len()
    }

    pub fn resolution(&self) -> u32 {
        self.res
    }

    /// Lower corner in cell units.
    pub fn lo_cells(&self) -> &[i64] {
        &self.lo
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn cell_count(&self) -> usize {
        self.values.len()
    }

    pub fn cell_volume(&self) -> f64 {
        pow2(-(self.res as i64) * self.dim() as i64)
    }

    /// Box edges `[lo_i, hi_i)` as dyadic rationals.
    pub fn bounds(&self) -> Vec<(Dyadic, Dyadic)> {
        self.lo
            .iter()
            .zip(&self.shape)
            .map(|(&l, &s)| (Dyadic::new(l, self.res), Dyadic::new(l + s as i64, self.res)))
            .collect()
    }

    pub(crate) fn index(&self) -> BoxIndex {
        BoxIndex::new(self.lo.clone(), self.shape.clone()).expect("validated on construction")
    }

    pub fn cell_masses(&self) -> impl Iterator<Item = f64> + '_ {
        let vol = self.cell_volume();
        self.values.iter().map(move |v| v * vol)
    }

    /// `(cell index, mass)` for every cell, zero cells included.
    pub fn cells(&self) -> impl Iterator<Item = (Vec<i64>, f64)> + '_ {
        let bx = self.index();
        let vol = self.cell_volume();
        self.values.iter().enumerate().map(move |(i, v)| {
            let mut c = vec![0i64; bx.lo.len()];
            bx.point(i, &mut c);
            (c, v * vol)
        })
    }

    pub fn total_mass(&self) -> f64 {
        self.cell_masses().collect::<CompensatedSum>().total()
    }

    /// Law of the cell index `floor(2^res X)`.
    pub fn cell_pmf(&self) -> LatticePmf {
        LatticePmf::from_atoms(self.dim(), self.cells().filter(|(_, m)| *m > 0.0))
            .or_else(|_| LatticePmf::from_weights(self.dim(), self.cells().filter(|(_, m)| *m > 0.0)))
            .expect("a valid density has positive mass")
    }

    /// `h(X) = -∫ f ln f`, exact for the piecewise-constant representative.
    pub fn differential_entropy(&self) -> Nats {
        entropy_of_masses(self.cell_masses(), self.cell_volume())
    }

    /// Same density on the finer grid `2^-new_res`.
    pub fn refine(&self, new_res: u32) -> Result<Self> {
        if new_res < self.res {
            return Err(Error::invalid(format!("refine to {new_res} from {}", self.res)));
        }
        if new_res == self.res {
            return Ok(self.clone());
        }
        let f = 1usize << (new_res - self.res);
        let shape: Vec<usize> = self.shape.iter().map(|s| s * f).collect();
        let lo: Vec<i64> = self.lo.iter().map(|l| l * f as i64).collect();
        let cells = shape.iter().try_fold(1usize, |a, &s| a.checked_mul(s)).unwrap_or(usize::MAX);
        if cells > MAX_GRID_CELLS {
            return Err(Error::ResourceBound(format!("refined grid with {cells} cells")));
        }
        let fine = BoxIndex::new(lo.clone(), shape.clone()).expect("checked");
        let coarse = self.index();
        let shift = (new_res - self.res) as usize;
        let mut values = vec![0.0; cells];
        let mut c = vec![0i64; self.dim()];
        for (i, v) in values.iter_mut().enumerate() {
            fine.point(i, &mut c);
            for x in c.iter_mut() {
                *x >>= shift;
            }
            *v = self.values[coarse.index(&c)];
        }
        Ok(GridDensity { res: new_res, lo, shape, values })
    }

    /// Cell averages on the coarser grid `2^-new_res`.
    pub fn coarsen(&self, new_res: u32) -> Result<Self> {
        if new_res > self.res {
            return Err(Error::invalid(format!("coarsen to {new_res} from {}", self.res)));
        }
        if new_res == self.res {
            return Ok(self.clone());
        }
        let shift = self.res - new_res;
        let coarse = self.cell_pmf().merged_by(self.dim(), |c| c.iter().map(|x| x >> shift).collect())?;
        Self::from_cell_pmf(new_res, &coarse)
    }

    /// Density of `X / 2^s`: same cells read at resolution `res + s`.
    pub fn scale_down(&self, s: u32) -> Self {
        let factor = pow2(s as i64 * self.dim() as i64);
        GridDensity {
            res: self.res + s,
            lo: self.lo.clone(),
            shape: self.shape.clone(),
            values: self.values.iter().map(|v| v * factor).collect(),
        }
    }

    /// Density of `X + a` for a grid-representable shift; refines if needed.
    pub fn translate(&self, shift: &[Dyadic]) -> Result<Self> {
        if shift.len() != self.dim() {
            return Err(Error::dims(self.dim(), shift.len()));
        }
        let need = shift.iter().map(|s| s.log2_den()).max().unwrap_or(0).max(self.res);
        let g = self.refine(need)?;
        let mut out = g.clone();
        for (l, s) in out.lo.iter_mut().zip(shift) {
            *l += s.at_resolution(need).ok_or_else(|| Error::NotDyadic(s.to_string()))?;
        }
        Ok(out)
    }

    /// Law of `floor(2^k X)` on `Z^d`.
    pub fn quantize(&self, k: u32) -> Result<LatticePmf> {
        if k > self.res {
            return Err(Error::ResolutionExceeded { requested: k, available: self.res });
        }
        let s = self.res - k;
        self.cell_pmf().merged_by(self.dim(), |c| c.iter().map(|x| x >> s).collect())
    }

    /// Density of `{2^k X}` on `[0,1)^d` at resolution `res - k`.
    pub fn fractional_part(&self, k: u32) -> Result<Self> {
        if k >= self.res {
            return Err(Error::ResolutionExceeded { requested: k + 1, available: self.res });
        }
        let s = self.res - k;
        let side = 1usize << s;
        let mask = side as i64 - 1;
        let d = self.dim();
        let out = BoxIndex::new(vec![0; d], vec![side; d])
            .filter(|b| b.volume <= MAX_GRID_CELLS)
            .ok_or_else(|| Error::ResourceBound("fractional-part grid too large".into()))?;
        let mut masses = vec![0.0; out.volume];
        for (c, m) in self.cells() {
            if m > 0.0 {
                let r: Vec<i64> = c.iter().map(|x| x & mask).collect();
                masses[out.index(&r)] += m;
            }
        }
        Self::from_cell_masses(s, vec![0; d], vec![side; d], masses)
    }

    /// Conditional density on `[-n, n]^d`, renormalized.
    pub fn truncate(&self, n: Dyadic) -> Result<Self> {
        if n.numerator() <= 0 {
            return Err(Error::invalid(format!("truncation level {n} must be positive")));
        }
        let inside = self.bounds().iter().all(|(l, h)| -n.to_f64() <= l.to_f64() && h.to_f64() <= n.to_f64());
        if inside {
            return Ok(self.clone());
        }
        let r = self.res.max(n.log2_den());
        let g = self.refine(r)?;
        let lim = n.at_resolution(r).ok_or_else(|| Error::NotDyadic(n.to_string()))?;
        let lo: Vec<i64> = g.lo.iter().map(|&l| l.max(-lim)).collect();
        let hi: Vec<i64> = g.lo.iter().zip(&g.shape).map(|(&l, &s)| (l + s as i64).min(lim)).collect();
        if lo.iter().zip(&hi).any(|(l, h)| l >= h) {
            return Err(Error::ZeroProbability);
        }
        let shape: Vec<usize> = lo.iter().zip(&hi).map(|(l, h)| (h - l) as usize).collect();
        let sub = BoxIndex::new(lo.clone(), shape.clone()).expect("subset of a valid box");
        let mut weights = vec![0.0; sub.volume];
        let full = g.index();
        let mut c = vec![0i64; g.dim()];
        for (i, w) in weights.iter_mut().enumerate() {
            sub.point(i, &mut c);
            *w = g.values[full.index(&c)] * g.cell_volume();
        }
        if weights.iter().all(|&w| w == 0.0) {
            return Err(Error::ZeroProbability);
        }
        Self::from_cell_weights(r, lo, shape, weights)
    }

    /// Law of `floor(2^k Θ) mod 2^k` for a density on the torus `[0,1)^n`.
    pub fn torus_quantize(&self, k: u32) -> Result<CyclicPmf> {
        let unit = self.lo.iter().all(|&l| l == 0) && self.shape.iter().all(|&s| s as u64 == 1u64 << self.res);
        if !unit {
            return Err(Error::WrongBox("torus densities must live on [0,1)^n".into()));
        }
        if k == 0 {
            return Err(Error::invalid("torus quantization needs k >= 1"));
        }
        if k > self.res {
            return Err(Error::ResolutionExceeded { requested: k, available: self.res });
        }
        let s = self.res - k;
        let mut table = vec![0.0; 1usize << (k as usize * self.dim())];
        let probe = CyclicPmf::uniform(k, self.dim())?;
        for (c, m) in self.cells() {
            let r: Vec<i64> = c.iter().map(|x| x >> s).collect();
            table[probe.index_of(&r)] += m;
        }
        let total: f64 = table.iter().sum();
        table.iter_mut().for_each(|m| *m /= total);
        CyclicPmf::from_table(k, self.dim(), table)
    }

    /// Tensor product of independent coordinates, on a common resolution.
    pub fn product(factors: &[GridDensity]) -> Result<Self> {
        let res = factors.iter().map(|f| f.res).max().ok_or_else(|| Error::invalid("no factors"))?;
        let mut acc: Option<LatticePmf> = None;
        for f in factors {
            let p = f.refine(res)?.cell_pmf();
            acc = Some(match acc {
                None => p,
                Some(a) => a.product(&p),
            });
        }
        Self::from_cell_pmf(res, &acc.expect("nonempty"))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::generators;
    use std::f64::consts::LN_2;

    #[test]
    fn differential_entropy_examples() {
        let u = generators::uniform_unit(3, 2).unwrap();
        assert!(u.differential_entropy().value.abs() < 1e-15);
        let half = generators::uniform(&[(Dyadic::integer(0), Dyadic::new(1, 1))], 4).unwrap();
        assert!((half.differential_entropy().value + LN_2).abs() < 1e-15);
    }

    #[test]
    fn quantize_examples() {
        let u = generators::uniform_unit(1, 6).unwrap();
        let q = u.quantize(3).unwrap();
        assert_eq!(q.len(), 8);
        assert!((q.entropy().value - 3.0 * LN_2).abs() < 1e-14);
        let tri = generators::power(1.0, 5).unwrap();
        assert_eq!(tri.quantize(0).unwrap(), LatticePmf::point_mass(&[0]));
        // exact cell integrals of 2x on quarters: (2i+1)/16
        let q2 = tri.quantize(2).unwrap();
        for i in 0..4 {
            assert!((q2.mass_at(&[i]) - (2 * i + 1) as f64 / 16.0).abs() < 1e-15);
        }
        assert!(matches!(tri.quantize(6), Err(Error::ResolutionExceeded { .. })));
    }

    #[test]
    fn fractional_part_examples() {
        let u = generators::uniform_unit(1, 8).unwrap();
        let fr = u.fractional_part(3).unwrap();
        assert_eq!(fr.resolution(), 5);
        assert!(fr.values().iter().all(|&v| (v - 1.0).abs() < 1e-14));
        let tri = generators::power(1.0, 10).unwrap();
        assert_eq!(tri.fractional_part(0).unwrap(), tri);
        // fold-and-compare oracle: TV to uniform after folding 16 pieces of 2x
        let fr = tri.fractional_part(4).unwrap();
        let tv: f64 = fr.cell_masses().map(|m| (m - fr.cell_volume()).abs()).sum::<f64>() / 2.0;
        assert!(tv <= 1.0 / 16.0);
        assert!(tri.fractional_part(10).is_err());
    }

    #[test]
    fn truncate_examples() {
        let u = generators::uniform(&[(Dyadic::integer(-2), Dyadic::integer(2))], 3).unwrap();
        let t = u.truncate(Dyadic::integer(1)).unwrap();
        assert_eq!(t.bounds(), vec![(Dyadic::integer(-1), Dyadic::integer(1))]);
        assert!(t.values().iter().all(|&v| (v - 0.5).abs() < 1e-14));
        let inside = generators::power(2.0, 6).unwrap();
        assert_eq!(inside.truncate(Dyadic::integer(1)).unwrap(), inside);
        let far = generators::uniform(&[(Dyadic::integer(4), Dyadic::integer(5))], 2).unwrap();
        assert!(matches!(far.truncate(Dyadic::integer(1)), Err(Error::ZeroProbability)));
    }

    #[test]
    fn refine_and_coarsen_round_trip() {
        let g = generators::gaussian(0.3, 0.7, Dyadic::integer(3), 4).unwrap();
        let fine = g.refine(7).unwrap();
        assert!((fine.differential_entropy().value - g.differential_entropy().value).abs() < 1e-12);
        let back = fine.coarsen(4).unwrap();
        for (a, b) in back.values().iter().zip(g.values()) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn torus_quantize_examples() {
        let u = generators::uniform_unit(1, 5).unwrap();
        let c = u.torus_quantize(3).unwrap();
        assert!((c.entropy().value - 3.0 * LN_2).abs() < 1e-14);
        let spike = GridDensity::from_cell_masses(4, vec![0], vec![16], {
            let mut m = vec![0.0; 16];
            m[9] = 1.0;
            m
        })
        .unwrap();
        assert_eq!(spike.torus_quantize(2).unwrap(), CyclicPmf::point_mass(2, &[2]).unwrap());
        let tri = generators::power(1.0, 6).unwrap();
        let t = tri.torus_quantize(2).unwrap();
        for i in 0..4 {
            assert!((t.mass_at(&[i]) - (2 * i + 1) as f64 / 16.0).abs() < 1e-15);
        }
        assert!((t.entropy().value - tri.quantize(2).unwrap().entropy().value).abs() < 1e-15);
        let off = generators::uniform(&[(Dyadic::integer(0), Dyadic::integer(2))], 3).unwrap();
        assert!(matches!(off.torus_quantize(2), Err(Error::WrongBox(_))));
    }
}
