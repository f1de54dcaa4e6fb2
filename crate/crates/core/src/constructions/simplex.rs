use crate::error::{Error, Result};
use crate::lattice::{BoxIndex, DetMap};
use crate::par::{self, Exec};
use serde::Serialize;
use std::sync::atomic::{AtomicU64, Ordering as AtomicOrdering};

/// Largest bounding box handled with a bitmap.
const BITMAP_LIMIT: usize = 1 << 30;
/// Direct enumeration of `A - A` is used while `n |A|^2` stays below this.
pub const DIRECT_PAIR_LIMIT: f64 = 1e9;
const CHUNKS: usize = 64;

/// Finite set of integer points, sorted lexicographically without repeats.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LatticeSet {
    dim: usize,
    points: Vec<i64>,
}

impl LatticeSet {
    pub fn new(dim: usize, points: impl IntoIterator<Item = Vec<i64>>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::invalid("dimension must be positive"));
        }
        let mut pts: Vec<Vec<i64>> = Vec::new();
        for p in points {
            if p.len() != dim {
                return Err(Error::dims(dim, p.len()));
            }
            pts.push(p);
        }
        pts.sort_unstable();
        pts.dedup();
        Ok(LatticeSet { dim, points: pts.concat() })
    }

    fn from_sorted_flat(dim: usize, points: Vec<i64>) -> Self {
        LatticeSet { dim, points }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.points.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn point(&self, i: usize) -> &[i64] {
        &self.points[i * self.dim..(i + 1) * self.dim]
    }

    pub fn iter(&self) -> impl Iterator<Item = &[i64]> + '_ {
        self.points.chunks_exact(self.dim)
    }

    pub fn contains(&self, p: &[i64]) -> bool {
        let (mut lo, mut hi) = (0, self.len());
        while lo < hi {
            let mid = (lo + hi) / 2;
            match self.point(mid).cmp(p) {
                std::cmp::Ordering::Less => lo = mid + 1,
                std::cmp::Ordering::Greater => hi = mid,
                std::cmp::Ordering::Equal => return true,
            }
        }
        false
    }

    fn bounds(&self) -> (Vec<i64>, Vec<i64>) {
        let mut lo = vec![i64::MAX; self.dim];
        let mut hi = vec![i64::MIN; self.dim];
        for p in self.iter() {
            for (i, &x) in p.iter().enumerate() {
                lo[i] = lo[i].min(x);
                hi[i] = hi[i].max(x);
            }
        }
        (lo, hi)
    }
}

/// `{x in Z^n : x >= 0, sum x <= l}`, the simplex scaled by `l`.
pub fn simplex_lattice(n: usize, l: u32) -> Result<LatticeSet> {
    if n == 0 {
        return Err(Error::invalid("simplex dimension must be positive"));
    }
    let size = binomial(l as u64 + n as u64, n as u64).ok_or_else(|| Error::Overflow("simplex size".into()))?;
    if size > (1 << 28) {
        return Err(Error::ResourceBound(format!("simplex with {size} points")));
    }
    let mut points = Vec::with_capacity(size as usize * n);
    let mut cur = vec![0i64; n];
    fn rec(i: usize, left: i64, cur: &mut Vec<i64>, out: &mut Vec<i64>) {
        if i == cur.len() {
            out.extend_from_slice(cur);
            return;
        }
        for x in 0..=left {
            cur[i] = x;
            rec(i + 1, left - x, cur, out);
        }
        cur[i] = 0;
    }
    rec(0, l as i64, &mut cur, &mut points);
    Ok(LatticeSet::from_sorted_flat(n, points))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Sign {
    Plus,
    Minus,
}

/// `A + B` or `A - B`.
pub fn sumset(a: &LatticeSet, b: &LatticeSet, sign: Sign, exec: Exec) -> Result<LatticeSet> {
    if a.dim != b.dim {
        return Err(Error::dims(a.dim, b.dim));
    }
    let d = a.dim;
    if a.is_empty() || b.is_empty() {
        return Ok(LatticeSet::from_sorted_flat(d, Vec::new()));
    }
    let s: i64 = if sign == Sign::Plus { 1 } else { -1 };
    let (alo, ahi) = a.bounds();
    let (blo, bhi) = b.bounds();
    let (lo, hi): (Vec<i64>, Vec<i64>) = (0..d)
        .map(|i| if s == 1 { (alo[i] + blo[i], ahi[i] + bhi[i]) } else { (alo[i] - bhi[i], ahi[i] - blo[i]) })
        .unzip();
    let extent: Vec<usize> = lo.iter().zip(&hi).map(|(l, h)| (h - l + 1) as usize).collect();
    let chunk = a.len().div_ceil(CHUNKS);
    match BoxIndex::new(lo, extent).filter(|bx| bx.volume <= BITMAP_LIMIT) {
        Some(bx) => {
            let bits: Vec<AtomicU64> = (0..bx.volume.div_ceil(64)).map(|_| AtomicU64::new(0)).collect();
            par::map_range(exec, CHUNKS, |c| {
                let mut q = vec![0i64; d];
                for i in (c * chunk)..((c + 1) * chunk).min(a.len()) {
                    let x = a.point(i);
                    for y in b.iter() {
                        for k in 0..d {
                            q[k] = x[k] + s * y[k];
                        }
                        let idx = bx.index(&q);
                        bits[idx / 64].fetch_or(1 << (idx % 64), AtomicOrdering::Relaxed);
                    }
                }
            });
            let mut points = Vec::new();
            let mut p = vec![0i64; d];
            for (w, word) in bits.iter().enumerate() {
                let mut v = word.load(AtomicOrdering::Relaxed);
                while v != 0 {
                    let bit = v.trailing_zeros() as usize;
                    v &= v - 1;
                    bx.point(w * 64 + bit, &mut p);
                    points.extend_from_slice(&p);
                }
            }
            // row-major order with the last axis fastest is lexicographic
            Ok(LatticeSet::from_sorted_flat(d, points))
        }
        None => {
            let parts = par::map_range(exec, CHUNKS, |c| {
                let mut set: DetMap<Vec<i64>, ()> = DetMap::default();
                for i in (c * chunk)..((c + 1) * chunk).min(a.len()) {
                    let x = a.point(i);
                    for y in b.iter() {
                        set.insert(x.iter().zip(y).map(|(u, v)| u + s * v).collect(), ());
                    }
                }
                set
            });
            LatticeSet::new(d, parts.into_iter().flat_map(|m| m.into_keys()))
        }
    }
}

pub(crate) fn binomial(n: u64, k: u64) -> Option<u64> {
    if k > n {
        return Some(0);
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc * (n - i) as u128 / (i + 1) as u128;
        if acc > u64::MAX as u128 {
            return None;
        }
    }
    Some(acc as u64)
}

/// `|[Δ_n]_L - [Δ_n]_L|`: points whose positive and negative parts each sum
/// to at most `L`.
pub fn simplex_difference_count(n: usize, l: u32) -> Option<u128> {
    let (n, l) = (n as u64, l as u64);
    let mut total: u128 = 0;
    for s in 0..=n {
        for t in 0..=(n - s) {
            let ways = binomial(n, s)? as u128 * binomial(n - s, t)? as u128;
            total = total.checked_add(ways.checked_mul(binomial(l, s)? as u128 * binomial(l, t)? as u128)?)?;
        }
    }
    Some(total)
}

#[derive(Clone, Debug, Serialize)]
pub struct RuzsaRow {
    pub n: usize,
    pub l: u32,
    pub a: u128,
    pub sum: u128,
    pub difference: u128,
    pub ratio: f64,
    pub enumerated: bool,
}

/// `ln(|A-A|/|A|) / ln(|A+A|/|A|)` for the simplex lattice `A`.
///
/// Small cases enumerate both sumsets; larger ones count lattice points in
/// the membership regions `{x >= 0, sum x <= 2L}` and
/// `{sum x+ <= L, sum x- <= L}`.
pub fn ruzsa_ratio(n: usize, l: u32, exec: Exec) -> Result<RuzsaRow> {
    if n == 0 || l == 0 {
        return Err(Error::invalid("ruzsa ratio needs n >= 1 and L >= 1"));
    }
    let overflow = || Error::Overflow("simplex counts".into());
    let size = binomial(l as u64 + n as u64, n as u64).ok_or_else(overflow)? as u128;
    let direct = (n as f64) * (size as f64).powi(2) <= DIRECT_PAIR_LIMIT;
    let (sum, difference) = if direct {
        let a = simplex_lattice(n, l)?;
        (
            sumset(&a, &a, Sign::Plus, exec)?.len() as u128,
            sumset(&a, &a, Sign::Minus, exec)?.len() as u128,
        )
    } else {
        (
            binomial(2 * l as u64 + n as u64, n as u64).ok_or_else(overflow)? as u128,
            simplex_difference_count(n, l).ok_or_else(overflow)?,
        )
    };
    let a = size as f64;
    let ratio = (difference as f64 / a).ln() / (sum as f64 / a).ln();
    Ok(RuzsaRow { n, l, a: size, sum, difference, ratio, enumerated: direct })
}
