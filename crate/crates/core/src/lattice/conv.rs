//! Sparse and FFT-backed convolution kernels.

use super::DetMap;
use crate::par::{self, Exec};
use rustfft::num_complex::Complex;
use rustfft::FftPlanner;

/// Above this many atom pairs a convolution goes through the dense FFT path.
pub const SPARSE_PRODUCT_LIMIT: usize = 1 << 22;
/// Largest dense box (in lattice points) the FFT path will allocate.
pub const DENSE_VOLUME_LIMIT: usize = 1 << 26;
/// Masses below this are dropped after a convolution.
pub const PRUNE_THRESHOLD: f64 = 1e-15;

const CHUNKS: usize = 64;
const PARALLEL_MIN_PRODUCTS: usize = 1 << 16;

/// Row-major box used to linearize points.
#[derive(Clone, Debug)]
pub(crate) struct BoxIndex {
    pub lo: Vec<i64>,
    pub extent: Vec<usize>,
    pub strides: Vec<usize>,
    pub volume: usize,
}

impl BoxIndex {
    /// `None` when the volume does not fit in `usize`.
    pub fn new(lo: Vec<i64>, extent: Vec<usize>) -> Option<Self> {
        let mut strides = vec![1usize; extent.len()];
        let mut vol: usize = 1;
        for i in (0..extent.len()).rev() {
            strides[i] = vol;
            vol = vol.checked_mul(extent[i])?;
        }
        Some(BoxIndex { lo, extent, strides, volume: vol })
    }

    pub fn index(&self, p: &[i64]) -> usize {
        p.iter()
            .zip(&self.lo)
            .zip(&self.strides)
            .map(|((&x, &l), &s)| (x - l) as usize * s)
            .sum()
    }

    pub fn point(&self, mut idx: usize, out: &mut [i64]) {
        for i in 0..self.extent.len() {
            let q = idx / self.strides[i];
            idx -= q * self.strides[i];
            out[i] = self.lo[i] + q as i64;
        }
    }
}

/// Points as a flat `n * dim` array plus masses.
pub(crate) struct Atoms<'a> {
    pub dim: usize,
    pub points: &'a [i64],
    pub masses: &'a [f64],
}

impl Atoms<'_> {
    fn len(&self) -> usize {
        self.masses.len()
    }

    fn bounds(&self) -> (Vec<i64>, Vec<i64>) {
        let mut lo = vec![i64::MAX; self.dim];
        let mut hi = vec![i64::MIN; self.dim];
        for p in self.points.chunks_exact(self.dim) {
            for i in 0..self.dim {
                lo[i] = lo[i].min(p[i]);
                hi[i] = hi[i].max(p[i]);
            }
        }
        (lo, hi)
    }
}

/// Output of a kernel: unsorted flat points and masses.
pub(crate) struct RawAtoms {
    pub points: Vec<i64>,
    pub masses: Vec<f64>,
}

/// Distribution of `X + Y` for independent atom lists. Zero-dimensional
/// inputs are not supported; callers guarantee `dim >= 1` and nonempty
/// inputs.
pub(crate) fn convolve_atoms(p: &Atoms<'_>, q: &Atoms<'_>) -> RawAtoms {
    let dim = p.dim;
    let (plo, phi) = p.bounds();
    let (qlo, qhi) = q.bounds();
    let lo: Vec<i64> = (0..dim).map(|i| plo[i] + qlo[i]).collect();
    let extent: Vec<usize> = (0..dim)
        .map(|i| ((phi[i] - plo[i]) + (qhi[i] - qlo[i]) + 1) as usize)
        .collect();
    let products = p.len().saturating_mul(q.len());
    match BoxIndex::new(lo, extent) {
        Some(bx) if products > SPARSE_PRODUCT_LIMIT && bx.volume <= DENSE_VOLUME_LIMIT => {
            convolve_dense(p, q, &bx)
        }
        Some(bx) => convolve_sparse_indexed(p, q, &bx),
        None => convolve_sparse_keyed(p, q),
    }
}

fn chunk_bounds(n: usize, chunks: usize) -> Vec<(usize, usize)> {
    let size = n.div_ceil(chunks).max(1);
    (0..n).step_by(size).map(|s| (s, (s + size).min(n))).collect()
}

fn convolve_sparse_indexed(p: &Atoms<'_>, q: &Atoms<'_>, bx: &BoxIndex) -> RawAtoms {
    let dim = p.dim;
    // out index of x + y splits as offset(x - plo) + offset(y - qlo)
    let (plo, _) = p.bounds();
    let (qlo, _) = q.bounds();
    let offsets = |atoms: &Atoms<'_>, lo: &[i64]| -> Vec<usize> {
        atoms
            .points
            .chunks_exact(dim)
            .map(|x| x.iter().zip(lo).zip(&bx.strides).map(|((&a, &l), &s)| (a - l) as usize * s).sum())
            .collect()
    };
    let pidx = offsets(p, &plo);
    let qshift = offsets(q, &qlo);

    let exec = if p.len() * q.len() >= PARALLEL_MIN_PRODUCTS { Exec::Parallel } else { Exec::Sequential };
    let chunks = chunk_bounds(p.len(), CHUNKS);
    let partials: Vec<DetMap<usize, f64>> = par::map_slice(exec, &chunks, |&(s, e)| {
        let mut acc: DetMap<usize, f64> = DetMap::default();
        acc.reserve(((e - s) * q.len()).min(1 << 20));
        for i in s..e {
            let (pi, pm) = (pidx[i], p.masses[i]);
            for (j, &qm) in q.masses.iter().enumerate() {
                *acc.entry(pi + qshift[j]).or_insert(0.0) += pm * qm;
            }
        }
        acc
    });
    let mut total: DetMap<usize, f64> = DetMap::default();
    for part in partials {
        let mut entries: Vec<(usize, f64)> = part.into_iter().collect();
        entries.sort_unstable_by_key(|e| e.0);
        for (k, v) in entries {
            *total.entry(k).or_insert(0.0) += v;
        }
    }
    let mut entries: Vec<(usize, f64)> = total.into_iter().collect();
    entries.sort_unstable_by_key(|e| e.0);
    let mut points = Vec::with_capacity(entries.len() * dim);
    let mut masses = Vec::with_capacity(entries.len());
    let mut buf = vec![0i64; dim];
    for (k, v) in entries {
        bx.point(k, &mut buf);
        points.extend_from_slice(&buf);
        masses.push(v);
    }
    RawAtoms { points, masses }
}

fn convolve_sparse_keyed(p: &Atoms<'_>, q: &Atoms<'_>) -> RawAtoms {
    let dim = p.dim;
    let mut acc: DetMap<Vec<i64>, f64> = DetMap::default();
    for (x, &pm) in p.points.chunks_exact(dim).zip(p.masses) {
        for (y, &qm) in q.points.chunks_exact(dim).zip(q.masses) {
            let s: Vec<i64> = x.iter().zip(y).map(|(a, b)| a + b).collect();
            *acc.entry(s).or_insert(0.0) += pm * qm;
        }
    }
    let mut entries: Vec<(Vec<i64>, f64)> = acc.into_iter().collect();
    entries.sort_by(|a, b| a.0.cmp(&b.0));
    let mut points = Vec::with_capacity(entries.len() * dim);
    let mut masses = Vec::with_capacity(entries.len());
    for (k, v) in entries {
        points.extend_from_slice(&k);
        masses.push(v);
    }
    RawAtoms { points, masses }
}

fn convolve_dense(p: &Atoms<'_>, q: &Atoms<'_>, bx: &BoxIndex) -> RawAtoms {
    let dim = p.dim;
    let n = bx.volume.next_power_of_two();
    let (plo, _) = p.bounds();
    let (qlo, _) = q.bounds();
    let place = |atoms: &Atoms<'_>, lo: &[i64]| {
        let mut buf = vec![Complex::new(0.0, 0.0); n];
        for (x, &m) in atoms.points.chunks_exact(dim).zip(atoms.masses) {
            let idx: usize = x
                .iter()
                .zip(lo)
                .zip(&bx.strides)
                .map(|((&a, &l), &s)| (a - l) as usize * s)
                .sum();
            buf[idx].re += m;
        }
        buf
    };
    let a = place(p, &plo);
    let b = place(q, &qlo);
    // index sums never exceed volume - 1, so cyclic length n is exact
    let out = cyclic_convolve_flat(a, b);
    let mut points = Vec::new();
    let mut masses = Vec::new();
    let mut buf = vec![0i64; dim];
    for (idx, v) in out.iter().take(bx.volume).enumerate() {
        if *v > PRUNE_THRESHOLD {
            bx.point(idx, &mut buf);
            points.extend_from_slice(&buf);
            masses.push(*v);
        }
    }
    RawAtoms { points, masses }
}

/// Cyclic convolution of two equal-length complex buffers; returns real parts.
pub(crate) fn cyclic_convolve_flat(mut a: Vec<Complex<f64>>, mut b: Vec<Complex<f64>>) -> Vec<f64> {
    let n = a.len();
    let mut planner = FftPlanner::<f64>::new();
    let fwd = planner.plan_fft_forward(n);
    let inv = planner.plan_fft_inverse(n);
    fwd.process(&mut a);
    fwd.process(&mut b);
    for (x, y) in a.iter_mut().zip(&b) {
        *x *= *y;
    }
    inv.process(&mut a);
    let scale = 1.0 / n as f64;
    a.into_iter().map(|c| c.re * scale).collect()
}

fn fft_axes(data: &mut [Complex<f64>], shape: &[usize], inverse: bool, planner: &mut FftPlanner<f64>) {
    let total: usize = shape.iter().product();
    let mut stride = total;
    for &len in shape {
        stride /= len;
        let plan = if inverse { planner.plan_fft_inverse(len) } else { planner.plan_fft_forward(len) };
        let block = len * stride;
        let mut line = vec![Complex::new(0.0, 0.0); len];
        for outer in (0..total).step_by(block) {
            for inner in 0..stride {
                let base = outer + inner;
                for (t, slot) in line.iter_mut().enumerate() {
                    *slot = data[base + t * stride];
                }
                plan.process(&mut line);
                for (t, v) in line.iter().enumerate() {
                    data[base + t * stride] = *v;
                }
            }
        }
    }
}

/// Cyclic convolution on a product of cyclic groups with the given shape.
pub(crate) fn cyclic_convolve_nd(a: &[f64], b: &[f64], shape: &[usize]) -> Vec<f64> {
    let mut planner = FftPlanner::<f64>::new();
    let mut fa: Vec<Complex<f64>> = a.iter().map(|&x| Complex::new(x, 0.0)).collect();
    let mut fb: Vec<Complex<f64>> = b.iter().map(|&x| Complex::new(x, 0.0)).collect();
    fft_axes(&mut fa, shape, false, &mut planner);
    fft_axes(&mut fb, shape, false, &mut planner);
    for (x, y) in fa.iter_mut().zip(&fb) {
        *x *= *y;
    }
    fft_axes(&mut fa, shape, true, &mut planner);
    let scale = 1.0 / fa.len() as f64;
    fa.into_iter().map(|c| c.re * scale).collect()
}
