use super::conv::{convolve_atoms, Atoms, RawAtoms};
use super::{CyclicPmf, DetMap, MASS_TOLERANCE, PRUNE_THRESHOLD};
use crate::error::{Error, Result};
use crate::nats::{entropy_of_masses, CompensatedSum, Nats};
use std::cmp::Ordering;

/// Finite-support probability mass function on `Z^d`.
///
/// Atoms are kept sorted lexicographically; every stored mass is strictly
/// positive and the masses sum to one within [`MASS_TOLERANCE`].
#[derive(Clone, Debug, PartialEq)]
pub struct LatticePmf {
    dim: usize,
    points: Vec<i64>,
    masses: Vec<f64>,
}

fn lex(dim: usize, points: &[i64], a: usize, b: usize) -> Ordering {
    points[a * dim..(a + 1) * dim].cmp(&points[b * dim..(b + 1) * dim])
}

impl LatticePmf {
    /// Sort, merge duplicate points and drop zero masses. No normalization.
    fn assemble(dim: usize, points: Vec<i64>, masses: Vec<f64>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidDistribution("dimension must be positive".into()));
        }
        if points.len() != masses.len() * dim {
            return Err(Error::InvalidDistribution("point/mass count mismatch".into()));
        }
        for &m in &masses {
            if !m.is_finite() || m < 0.0 {
                return Err(Error::InvalidDistribution(format!("bad mass {m}")));
            }
        }
        let mut order: Vec<usize> = (0..masses.len()).collect();
        let sorted = order.windows(2).all(|w| lex(dim, &points, w[0], w[1]) == Ordering::Less);
        if !sorted {
            order.sort_by(|&a, &b| lex(dim, &points, a, b));
        }
        let mut out_p = Vec::with_capacity(points.len());
        let mut out_m: Vec<f64> = Vec::with_capacity(masses.len());
        for (n, &i) in order.iter().enumerate() {
            let pt = &points[i * dim..(i + 1) * dim];
            if n > 0 && out_m.last().is_some() && &out_p[out_p.len() - dim..] == pt {
                *out_m.last_mut().unwrap() += masses[i];
            } else {
                out_p.extend_from_slice(pt);
                out_m.push(masses[i]);
            }
        }
        let mut pmf = LatticePmf { dim, points: out_p, masses: out_m };
        pmf.retain(|m| m > 0.0);
        if pmf.masses.is_empty() {
            return Err(Error::InvalidDistribution("empty support".into()));
        }
        Ok(pmf)
    }

    fn retain(&mut self, keep: impl Fn(f64) -> bool) {
        let dim = self.dim;
        let mut w = 0;
        for r in 0..self.masses.len() {
            if keep(self.masses[r]) {
                if w != r {
                    self.masses[w] = self.masses[r];
                    self.points.copy_within(r * dim..(r + 1) * dim, w * dim);
                }
                w += 1;
            }
        }
        self.masses.truncate(w);
        self.points.truncate(w * dim);
    }

    fn renormalize(&mut self) {
        let total: f64 = self.masses.iter().copied().collect::<CompensatedSum>().total();
        for m in &mut self.masses {
            *m /= total;
        }
    }

    pub(crate) fn from_raw(dim: usize, raw: RawAtoms) -> Result<Self> {
        let mut pmf = Self::assemble(dim, raw.points, raw.masses)?;
        pmf.retain(|m| m >= PRUNE_THRESHOLD);
        if pmf.masses.is_empty() {
            return Err(Error::InvalidDistribution("all mass pruned".into()));
        }
        pmf.renormalize();
        Ok(pmf)
    }

    /// Exact masses; they must already sum to one within 1e-12.
    pub fn from_atoms<I>(dim: usize, atoms: I) -> Result<Self>
    where
        I: IntoIterator<Item = (Vec<i64>, f64)>,
    {
        let (points, masses) = split_atoms(dim, atoms)?;
        let pmf = Self::assemble(dim, points, masses)?;
        let total = pmf.total_mass();
        if (total - 1.0).abs() > MASS_TOLERANCE {
            return Err(Error::InvalidDistribution(format!("masses sum to {total}")));
        }
        Ok(pmf)
    }

    /// Nonnegative weights, normalized to a distribution.
    pub fn from_weights<I>(dim: usize, atoms: I) -> Result<Self>
    where
        I: IntoIterator<Item = (Vec<i64>, f64)>,
    {
        let (points, masses) = split_atoms(dim, atoms)?;
        let mut pmf = Self::assemble(dim, points, masses)?;
        pmf.renormalize();
        Ok(pmf)
    }

    pub fn point_mass(point: &[i64]) -> Self {
        assert!(!point.is_empty(), "point mass needs at least one coordinate");
        LatticePmf { dim: point.len(), points: point.to_vec(), masses: vec![1.0] }
    }

    /// Uniform on the given (distinct) points.
    pub fn uniform(dim: usize, points: &[Vec<i64>]) -> Result<Self> {
        let n = points.len();
        Self::from_weights(dim, points.iter().map(|p| (p.clone(), 1.0 / n as f64)))
    }

    /// Uniform on `{lo, ..., hi}` in one dimension.
    pub fn uniform_interval(lo: i64, hi: i64) -> Result<Self> {
        if hi < lo {
            return Err(Error::invalid(format!("empty interval {lo}..={hi}")));
        }
        let n = (hi - lo + 1) as f64;
        Self::from_weights(1, (lo..=hi).map(|x| (vec![x], 1.0 / n)))
    }

    /// One-dimensional pmf with consecutive support starting at `start`.
    pub fn from_masses_1d(start: i64, masses: &[f64]) -> Result<Self> {
        Self::from_atoms(1, masses.iter().enumerate().map(|(i, &m)| (vec![start + i as i64], m)))
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Number of atoms.
    pub fn len(&self) -> usize {
        self.masses.len()
    }

    pub fn is_empty(&self) -> bool {
        self.masses.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&[i64], f64)> + '_ {
        self.points.chunks_exact(self.dim).zip(self.masses.iter().copied())
    }

    pub fn masses(&self) -> &[f64] {
        &self.masses
    }

    pub fn point(&self, i: usize) -> &[i64] {
        &self.points[i * self.dim..(i + 1) * self.dim]
    }

    pub fn mass_at(&self, point: &[i64]) -> f64 {
        if point.len() != self.dim {
            return 0.0;
        }
        let (mut lo, mut hi) = (0usize, self.masses.len());
        while lo < hi {
            let mid = (lo + hi) / 2;
            match self.point(mid).cmp(point) {
                Ordering::Less => lo = mid + 1,
                Ordering::Greater => hi = mid,
                Ordering::Equal => return self.masses[mid],
            }
        }
        0.0
    }

    pub fn total_mass(&self) -> f64 {
        self.masses.iter().copied().collect::<CompensatedSum>().total()
    }

    /// Per-coordinate `(min, max)` of the support.
    pub fn bounds(&self) -> (Vec<i64>, Vec<i64>) {
        let mut lo = vec![i64::MAX; self.dim];
        let mut hi = vec![i64::MIN; self.dim];
        for (p, _) in self.iter() {
            for i in 0..self.dim {
                lo[i] = lo[i].min(p[i]);
                hi[i] = hi[i].max(p[i]);
            }
        }
        (lo, hi)
    }

    /// Largest coordinate range `max - min` over all axes.
    pub fn diameter(&self) -> i64 {
        let (lo, hi) = self.bounds();
        lo.iter().zip(&hi).map(|(l, h)| h - l).max().unwrap_or(0)
    }

    /// Shannon entropy in nats.
    pub fn entropy(&self) -> Nats {
        entropy_of_masses(self.masses.iter().copied(), 1.0)
    }

    /// Pushforward under `x -> a x`.
    pub fn dilate(&self, a: i64) -> Result<Self> {
        if a == 0 {
            return Err(Error::ZeroDilation);
        }
        let mut points = Vec::with_capacity(self.points.len());
        for &x in &self.points {
            points.push(
                x.checked_mul(a).ok_or_else(|| Error::Overflow(format!("{a} * {x}")))?,
            );
        }
        // a < 0 reverses the order
        Self::assemble(self.dim, points, self.masses.clone())
    }

    pub fn translate(&self, shift: &[i64]) -> Result<Self> {
        if shift.len() != self.dim {
            return Err(Error::dims(self.dim, shift.len()));
        }
        let points = self
            .points
            .chunks_exact(self.dim)
            .flat_map(|p| p.iter().zip(shift).map(|(a, b)| a + b))
            .collect();
        Ok(LatticePmf { dim: self.dim, points, masses: self.masses.clone() })
    }

    /// Pushforward under an arbitrary map into `Z^out_dim`.
    pub fn pushforward<F>(&self, out_dim: usize, f: F) -> Result<Self>
    where
        F: Fn(&[i64]) -> Vec<i64>,
    {
        let mut points = Vec::with_capacity(self.len() * out_dim);
        for (p, _) in self.iter() {
            let y = f(p);
            if y.len() != out_dim {
                return Err(Error::dims(out_dim, y.len()));
            }
            points.extend(y);
        }
        Self::assemble(out_dim, points, self.masses.clone())
    }

    /// Distribution of `X + Y` for independent `X ~ self`, `Y ~ other`.
    pub fn convolve(&self, other: &LatticePmf) -> Result<Self> {
        if self.dim != other.dim {
            return Err(Error::dims(self.dim, other.dim));
        }
        let raw = convolve_atoms(
            &Atoms { dim: self.dim, points: &self.points, masses: &self.masses },
            &Atoms { dim: other.dim, points: &other.points, masses: &other.masses },
        );
        Self::from_raw(self.dim, raw)
    }

    /// Joint law of independent `(X, Y)` on `Z^(d1 + d2)`.
    pub fn product(&self, other: &LatticePmf) -> Self {
        let dim = self.dim + other.dim;
        let mut points = Vec::with_capacity(self.len() * other.len() * dim);
        let mut masses = Vec::with_capacity(self.len() * other.len());
        for (x, pm) in self.iter() {
            for (y, qm) in other.iter() {
                points.extend_from_slice(x);
                points.extend_from_slice(y);
                masses.push(pm * qm);
            }
        }
        // lexicographic order of (x, y) pairs is preserved
        LatticePmf { dim, points, masses }
    }

    /// Coordinates reduced mod `2^k`.
    pub fn reduce_mod(&self, modulus_log2: u32) -> Result<CyclicPmf> {
        let m = 1i64 << modulus_log2;
        let mut table = vec![0.0; 1usize << (modulus_log2 as usize * self.dim)];
        for (p, mass) in self.iter() {
            let mut idx = 0usize;
            for &x in p {
                idx = (idx << modulus_log2) | x.rem_euclid(m) as usize;
            }
            table[idx] += mass;
        }
        CyclicPmf::from_table(modulus_log2, self.dim, table)
    }

    /// Group atoms by a key, summing masses.
    pub(crate) fn merged_by<F>(&self, out_dim: usize, key: F) -> Result<Self>
    where
        F: Fn(&[i64]) -> Vec<i64>,
    {
        let mut acc: DetMap<Vec<i64>, f64> = DetMap::default();
        for (p, m) in self.iter() {
            *acc.entry(key(p)).or_insert(0.0) += m;
        }
        let mut entries: Vec<_> = acc.into_iter().collect();
        entries.sort_by(|a, b| a.0.cmp(&b.0));
        let (points, masses) = split_atoms(out_dim, entries)?;
        Self::assemble(out_dim, points, masses)
    }
}

fn split_atoms<I>(dim: usize, atoms: I) -> Result<(Vec<i64>, Vec<f64>)>
where
    I: IntoIterator<Item = (Vec<i64>, f64)>,
{
    let mut points = Vec::new();
    let mut masses = Vec::new();
    for (p, m) in atoms {
        if p.len() != dim {
            return Err(Error::dims(dim, p.len()));
        }
        points.extend(p);
        masses.push(m);
    }
    Ok((points, masses))
}

/// Distribution of `sum_j a_j X_j` for independent `X_j ~ ps[j]`.
///
/// Zero coefficients are skipped; all-zero coefficient vectors are rejected.
pub fn linear_combination<P: AsRef<LatticePmf>>(ps: &[P], coeffs: &[i64]) -> Result<LatticePmf> {
    if ps.len() != coeffs.len() {
        return Err(Error::invalid(format!("{} distributions but {} coefficients", ps.len(), coeffs.len())));
    }
    let dim = ps.first().map(|p| p.as_ref().dim).ok_or(Error::AllCoefficientsZero)?;
    let mut acc: Option<LatticePmf> = None;
    for (p, &a) in ps.iter().zip(coeffs) {
        let p = p.as_ref();
        if p.dim != dim {
            return Err(Error::dims(dim, p.dim));
        }
        if a == 0 {
            continue;
        }
        let term = if a == 1 { p.clone() } else { p.dilate(a)? };
        acc = Some(match acc {
            None => term,
            Some(s) => s.convolve(&term)?,
        });
    }
    acc.ok_or(Error::AllCoefficientsZero)
}

impl AsRef<LatticePmf> for LatticePmf {
    fn as_ref(&self) -> &LatticePmf {
        self
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::f64::consts::LN_2;

    fn bern() -> LatticePmf {
        LatticePmf::uniform_interval(0, 1).unwrap()
    }

    /// Entropy by plain summation over a mass list.
    fn oracle_entropy(ms: &[f64]) -> f64 {
        ms.iter().filter(|&&m| m > 0.0).map(|&m| -m * m.ln()).sum()
    }

    #[test]
    fn entropy_examples() {
        assert!((bern().entropy().value - LN_2).abs() < 1e-15);
        assert_eq!(LatticePmf::point_mass(&[3, -5]).entropy().value, 0.0);
        let tri = LatticePmf::from_masses_1d(0, &[0.25, 0.5, 0.25]).unwrap();
        let expected = oracle_entropy(&[0.25, 0.5, 0.25]);
        assert!((expected - 1.039720770839918).abs() < 1e-12);
        assert!((tri.entropy().value - expected).abs() < 1e-14);
    }

    #[test]
    fn dilate_examples() {
        let d = bern().dilate(2).unwrap();
        assert_eq!(d.mass_at(&[0]), 0.5);
        assert_eq!(d.mass_at(&[2]), 0.5);
        assert!((d.entropy().value - LN_2).abs() < 1e-15);
        let pm = LatticePmf::point_mass(&[1]).dilate(-3).unwrap();
        assert_eq!(pm, LatticePmf::point_mass(&[-3]));
        let tri = LatticePmf::from_masses_1d(0, &[0.25, 0.5, 0.25]).unwrap().dilate(5).unwrap();
        assert_eq!(tri.mass_at(&[5]), 0.5);
        assert_eq!(tri.mass_at(&[10]), 0.25);
        assert!(matches!(bern().dilate(0), Err(Error::ZeroDilation)));
    }

    #[test]
    fn convolve_examples() {
        let s = bern().convolve(&bern()).unwrap();
        assert_eq!(s, LatticePmf::from_masses_1d(0, &[0.25, 0.5, 0.25]).unwrap());

        let shifted = s.convolve(&LatticePmf::point_mass(&[7])).unwrap();
        assert_eq!(shifted.mass_at(&[8]), 0.5);
        assert!((shifted.entropy().value - s.entropy().value).abs() < 1e-15);

        // direct convolution oracle: triangular counts 1,2,3,4,3,2,1 over 16
        let u4 = LatticePmf::uniform_interval(0, 3).unwrap();
        let t = u4.convolve(&u4).unwrap();
        let counts = [1.0, 2.0, 3.0, 4.0, 3.0, 2.0, 1.0];
        let oracle: Vec<f64> = counts.iter().map(|c| c / 16.0).collect();
        for (i, &m) in oracle.iter().enumerate() {
            assert!((t.mass_at(&[i as i64]) - m).abs() < 1e-15);
        }
        let h = oracle_entropy(&oracle);
        assert!((h - 1.8407487285692812).abs() < 1e-12);
        assert!((t.entropy().value - h).abs() < 1e-14);

        let two = LatticePmf::point_mass(&[0, 0]);
        assert!(matches!(bern().convolve(&two), Err(Error::DimensionMismatch { .. })));
    }

    #[test]
    fn linear_combination_examples() {
        let diff = linear_combination(&[bern(), bern()], &[1, -1]).unwrap();
        assert_eq!(diff, LatticePmf::from_masses_1d(-1, &[0.25, 0.5, 0.25]).unwrap());
        let p = LatticePmf::from_masses_1d(2, &[0.1, 0.9]).unwrap();
        assert_eq!(linear_combination(std::slice::from_ref(&p), &[1]).unwrap(), p);
        // enumeration oracle: 2a + 3b over a, b in {0,1} hits 0,2,3,5 once each
        let c = linear_combination(&[bern(), bern()], &[2, 3]).unwrap();
        assert_eq!(c.len(), 4);
        for x in [0, 2, 3, 5] {
            assert_eq!(c.mass_at(&[x]), 0.25);
        }
        assert!((c.entropy().value - 4f64.ln()).abs() < 1e-15);
        assert!(matches!(
            linear_combination(&[bern(), bern()], &[0, 0]),
            Err(Error::AllCoefficientsZero)
        ));
        // zero coefficients are skipped
        assert_eq!(linear_combination(&[bern(), p.clone()], &[0, 1]).unwrap(), p);
    }

    #[test]
    fn dense_path_matches_sparse() {
        // 2100 x 2100 atoms exceeds the sparse limit
        let n = 2100;
        let w: Vec<f64> = (0..n).map(|i| 1.0 + ((i * 37) % 17) as f64).collect();
        let total: f64 = w.iter().sum();
        let p = LatticePmf::from_masses_1d(-50, &w.iter().map(|x| x / total).collect::<Vec<_>>()).unwrap();
        let dense = p.convolve(&p).unwrap();
        // sparse oracle on a few output points
        for z in [-100i64, -60, 0, 1000, 2000, 4098] {
            let mut s = 0.0;
            for (x, m) in p.iter() {
                s += m * p.mass_at(&[z - x[0]]);
            }
            assert!((dense.mass_at(&[z]) - s).abs() < 1e-15, "z={z}");
        }
        assert!((dense.total_mass() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn reduce_mod_agrees_with_cyclic() {
        let p = LatticePmf::from_masses_1d(-3, &[0.1, 0.2, 0.3, 0.4]).unwrap();
        let c = p.reduce_mod(2).unwrap();
        // -3 -> 1, -2 -> 2, -1 -> 3, 0 -> 0
        assert_eq!(c.table(), &[0.4, 0.1, 0.2, 0.3]);
    }

    fn arb_pmf(dim: usize) -> impl Strategy<Value = LatticePmf> {
        prop::collection::vec((prop::collection::vec(-6i64..6, dim), 0.01f64..1.0), 1..7)
            .prop_map(move |atoms| LatticePmf::from_weights(dim, atoms).unwrap())
    }

    proptest! {
        #[test]
        fn entropy_invariant_under_dilation_and_translation(p in arb_pmf(2), a in -5i64..5, sx in -9i64..9, sy in -9i64..9) {
            prop_assume!(a != 0);
            let h = p.entropy().value;
            prop_assert!((p.dilate(a).unwrap().entropy().value - h).abs() < 1e-12);
            let t = p.convolve(&LatticePmf::point_mass(&[sx, sy])).unwrap();
            prop_assert!((t.entropy().value - h).abs() < 1e-12);
        }

        #[test]
        fn convolution_commutes_and_associates(p in arb_pmf(1), q in arb_pmf(1), r in arb_pmf(1)) {
            let pq = p.convolve(&q).unwrap();
            let qp = q.convolve(&p).unwrap();
            prop_assert_eq!(pq.len(), qp.len());
            for (a, b) in pq.iter().zip(qp.iter()) {
                prop_assert_eq!(a.0, b.0);
                prop_assert!((a.1 - b.1).abs() < 1e-12);
            }
            let left = pq.convolve(&r).unwrap();
            let right = p.convolve(&q.convolve(&r).unwrap()).unwrap();
            for (a, b) in left.iter().zip(right.iter()) {
                prop_assert_eq!(a.0, b.0);
                prop_assert!((a.1 - b.1).abs() < 1e-12);
            }
            prop_assert!((left.total_mass() - 1.0).abs() < 1e-12);
        }

        #[test]
        fn sum_entropy_sandwich(p in arb_pmf(1), q in arb_pmf(1)) {
            let (hp, hq) = (p.entropy().value, q.entropy().value);
            let hs = p.convolve(&q).unwrap().entropy().value;
            prop_assert!(hs >= hp.max(hq) - 1e-10);
            prop_assert!(hs <= hp + hq + 1e-10);
        }
    }
}
