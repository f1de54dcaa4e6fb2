//! Total variation, KL divergence and related bounds.

use crate::dyadic::Dyadic;
use crate::error::{Error, Result};
use crate::grid::GridDensity;
use crate::lattice::{joint_of, mutual_information, CyclicPmf, JointPmf, LatticePmf};
use crate::nats::{CompensatedSum, Nats};
use serde::Serialize;
use std::cmp::Ordering;

/// Total-variation distance, in `[0, 1]`.
#[derive(Clone, Copy, Debug, PartialEq, PartialOrd, Serialize)]
pub struct TvValue(f64);

impl TvValue {
    fn from_half_l1(l1: f64) -> Self {
        TvValue((0.5 * l1).clamp(0.0, 1.0))
    }

    pub fn value(self) -> f64 {
        self.0
    }
}

/// Walk two sorted supports together, visiting `(p(x), q(x))` on the union.
fn merge_walk(p: &LatticePmf, q: &LatticePmf, mut visit: impl FnMut(&[i64], f64, f64) -> Result<()>) -> Result<()> {
    let (mut i, mut j) = (0, 0);
    while i < p.len() || j < q.len() {
        let ord = match (i < p.len(), j < q.len()) {
            (true, true) => p.point(i).cmp(q.point(j)),
            (true, false) => Ordering::Less,
            _ => Ordering::Greater,
        };
        match ord {
            Ordering::Less => {
                visit(p.point(i), p.masses()[i], 0.0)?;
                i += 1;
            }
            Ordering::Greater => {
                visit(q.point(j), 0.0, q.masses()[j])?;
                j += 1;
            }
            Ordering::Equal => {
                visit(p.point(i), p.masses()[i], q.masses()[j])?;
                i += 1;
                j += 1;
            }
        }
    }
    Ok(())
}

pub fn total_variation(p: &LatticePmf, q: &LatticePmf) -> Result<TvValue> {
    if p.dim() != q.dim() {
        return Err(Error::dims(p.dim(), q.dim()));
    }
    let mut acc = CompensatedSum::new();
    merge_walk(p, q, |_, a, b| {
        acc.add((a - b).abs());
        Ok(())
    })?;
    Ok(TvValue::from_half_l1(acc.total()))
}

pub fn total_variation_cyclic(p: &CyclicPmf, q: &CyclicPmf) -> Result<TvValue> {
    if p.dim() != q.dim() {
        return Err(Error::dims(p.dim(), q.dim()));
    }
    if p.modulus_log2() != q.modulus_log2() {
        return Err(Error::ModulusMismatch { expected: p.modulus_log2(), found: q.modulus_log2() });
    }
    let l1: CompensatedSum = p.table().iter().zip(q.table()).map(|(a, b)| (a - b).abs()).collect();
    Ok(TvValue::from_half_l1(l1.total()))
}

/// Cell-mass laws of two densities on their common finest grid.
fn common_cells(f: &GridDensity, g: &GridDensity) -> Result<(LatticePmf, LatticePmf)> {
    if f.dim() != g.dim() {
        return Err(Error::dims(f.dim(), g.dim()));
    }
    let r = f.resolution().max(g.resolution());
    Ok((f.refine(r)?.cell_pmf(), g.refine(r)?.cell_pmf()))
}

/// Half the `L1` distance between two densities, over the union of their boxes.
pub fn total_variation_density(f: &GridDensity, g: &GridDensity) -> Result<TvValue> {
    let (p, q) = common_cells(f, g)?;
    total_variation(&p, &q)
}

pub fn kl_divergence(p: &LatticePmf, q: &LatticePmf) -> Result<Nats> {
    if p.dim() != q.dim() {
        return Err(Error::dims(p.dim(), q.dim()));
    }
    let mut acc = CompensatedSum::new();
    merge_walk(p, q, |x, a, b| {
        if a > 0.0 && b == 0.0 {
            return Err(Error::NotAbsolutelyContinuous(format!("{x:?}")));
        }
        if a > 0.0 {
            acc.add(a * (a / b).ln());
        }
        Ok(())
    })?;
    let err = 4.0 * f64::EPSILON * (acc.abs_total() + acc.count() as f64);
    Ok(Nats::new(acc.total().max(0.0), err))
}

/// `D(f || g)` for piecewise-constant densities on a common grid.
pub fn kl_divergence_density(f: &GridDensity, g: &GridDensity) -> Result<Nats> {
    let (p, q) = common_cells(f, g)?;
    kl_divergence(&p, &q)
}

/// `TV(P_X, P_{X+a})` for a shift on the dyadic grid.
pub fn shift_tv(f: &GridDensity, shift: &[Dyadic]) -> Result<TvValue> {
    total_variation_density(f, &f.translate(shift)?)
}

/// Binary entropy in nats; zero at both endpoints.
pub fn binary_entropy(t: f64) -> f64 {
    if t <= 0.0 || t >= 1.0 {
        return 0.0;
    }
    -t * t.ln() - (1.0 - t) * (-t).ln_1p()
}

#[derive(Clone, Debug, Serialize)]
pub struct ConditionalTvCheck {
    pub lhs: f64,
    pub rhs: f64,
    pub p_event: f64,
    pub holds: bool,
}

/// For a coupling `(X, Y)` with `f(X) = f(Y)` almost surely, compare
/// `TV(P_{X|Z in E}, P_{Y|Z in E})` with `TV(P_X, P_Y) / P[Z in E]`.
pub fn conditional_tv_bound_check<F, E>(coupling: &JointPmf, f: F, event: E) -> Result<ConditionalTvCheck>
where
    F: Fn(&[i64]) -> Vec<i64>,
    E: Fn(&[i64]) -> bool,
{
    let mut p_event = CompensatedSum::new();
    for (x, y, m) in coupling.iter() {
        let z = f(x);
        if z != f(y) {
            return Err(Error::invalid(format!("f differs on the coupled pair {x:?}, {y:?}")));
        }
        if event(&z) {
            p_event.add(m);
        }
    }
    let pe = p_event.total();
    if pe <= 0.0 {
        return Err(Error::ZeroProbability);
    }
    let (px, py) = (coupling.left(), coupling.right());
    let rhs = total_variation(&px, &py)?.value() / pe;
    let keep = |p: &LatticePmf| -> Result<LatticePmf> {
        LatticePmf::from_weights(p.dim(), p.iter().filter(|(x, _)| event(&f(x))).map(|(x, m)| (x.to_vec(), m)))
    };
    let lhs = total_variation(&keep(&px)?, &keep(&py)?)?.value();
    Ok(ConditionalTvCheck { lhs, rhs, p_event: pe, holds: lhs <= rhs + 1e-12 })
}

/// `T(X;Y) = TV(P_XY, P_X P_Y)`.
pub fn t_information(joint: &JointPmf) -> Result<TvValue> {
    total_variation(joint.as_pmf(), &joint.marginal_product())
}

#[derive(Clone, Debug, Serialize)]
pub struct TInformationBound {
    pub mutual_information: Nats,
    pub t: f64,
    pub bound: f64,
    pub holds: bool,
}

/// `I(W;Y) <= ln(|W| - 1) T(W;Y) + h_b(T(W;Y))`.
pub fn t_information_bound(joint: &JointPmf, wcard: usize) -> Result<TInformationBound> {
    if wcard < 2 {
        return Err(Error::invalid(format!("|W| must be at least 2, got {wcard}")));
    }
    let atoms = joint.left().len();
    if atoms > wcard {
        return Err(Error::invalid(format!("W takes {atoms} values but |W| = {wcard}")));
    }
    let i = mutual_information(joint);
    let t = t_information(joint)?.value();
    let bound = ((wcard - 1) as f64).ln() * t + binary_entropy(t);
    Ok(TInformationBound { mutual_information: i, t, bound, holds: i.value <= bound + 1e-10 })
}

/// `I(floor(2^k X); {2^k X})` from the exact joint over cells.
pub fn int_frac_mutual_information(f: &GridDensity, k: u32) -> Result<Nats> {
    if k >= f.resolution() {
        return Err(Error::ResolutionExceeded { requested: k + 1, available: f.resolution() });
    }
    let s = f.resolution() - k;
    let mask = (1i64 << s) - 1;
    let d = f.dim();
    let joint = joint_of(&f.cell_pmf(), d, d, |c| {
        (c.iter().map(|x| x >> s).collect(), c.iter().map(|x| x & mask).collect())
    })?;
    Ok(mutual_information(&joint))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::generators;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::LN_2;

    fn pmf(m: &[f64]) -> LatticePmf {
        LatticePmf::from_weights(1, m.iter().enumerate().map(|(i, &w)| (vec![i as i64], w))).unwrap()
    }

    fn random_pmf(rng: &mut ChaCha8Rng, n: usize) -> LatticePmf {
        pmf(&(0..n).map(|_| rng.random::<f64>() + 1e-3).collect::<Vec<_>>())
    }

    #[test]
    fn tv_examples() {
        let p = pmf(&[0.3, 0.7]);
        assert_eq!(total_variation(&p, &p).unwrap().value(), 0.0);
        let (a, b) = (LatticePmf::point_mass(&[0]), LatticePmf::point_mass(&[1]));
        assert_eq!(total_variation(&a, &b).unwrap().value(), 1.0);
        assert!((total_variation(&pmf(&[1.0, 1.0]), &pmf(&[0.25, 0.75])).unwrap().value() - 0.25).abs() < 1e-15);
    }

    #[test]
    fn kl_examples() {
        let p = pmf(&[0.2, 0.8]);
        assert_eq!(kl_divergence(&p, &p).unwrap().value, 0.0);
        let d = kl_divergence(&LatticePmf::point_mass(&[0]), &pmf(&[1.0, 1.0])).unwrap().value;
        assert!((d - LN_2).abs() < 1e-15);
        assert!(matches!(
            kl_divergence(&pmf(&[1.0, 1.0]), &LatticePmf::point_mass(&[0])),
            Err(Error::NotAbsolutelyContinuous(_))
        ));
    }

    #[test]
    fn pinsker_on_random_pairs() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..1000 {
            let n = rng.random_range(1..=8);
            let (p, q) = (random_pmf(&mut rng, n), random_pmf(&mut rng, n));
            let tv = total_variation(&p, &q).unwrap().value();
            assert!(kl_divergence(&p, &q).unwrap().value >= 2.0 * tv * tv - 1e-12);
        }
    }

    #[test]
    fn shift_tv_examples() {
        let u = generators::uniform_unit(1, 6).unwrap();
        assert_eq!(shift_tv(&u, &[Dyadic::integer(0)]).unwrap().value(), 0.0);
        assert!((shift_tv(&u, &[Dyadic::new(1, 3)]).unwrap().value() - 0.125).abs() < 1e-14);
        let f = generators::power(1.0, 10).unwrap();
        let near = shift_tv(&f, &[Dyadic::pow2_neg(6)]).unwrap();
        let far = shift_tv(&f, &[Dyadic::pow2_neg(3)]).unwrap();
        assert!(near <= far);
    }

    #[test]
    fn density_tv_and_kl() {
        let u = generators::uniform_unit(1, 4).unwrap();
        let f = generators::power(1.0, 4).unwrap();
        // piecewise-constant 2x vs 1: half the L1 distance is 1/4 minus cell effects
        let tv = total_variation_density(&u, &f).unwrap().value();
        assert!((tv - 0.25).abs() < 1e-2);
        assert!(kl_divergence_density(&f, &u).unwrap().value > 2.0 * tv * tv);
    }

    #[test]
    fn binary_entropy_endpoints() {
        assert_eq!(binary_entropy(0.0), 0.0);
        assert_eq!(binary_entropy(1.0), 0.0);
        assert!((binary_entropy(0.5) - LN_2).abs() < 1e-16);
        assert!(binary_entropy(1e-300) > 0.0);
    }

    fn diagonal() -> JointPmf {
        JointPmf::new(1, LatticePmf::from_weights(2, vec![(vec![0, 0], 1.0), (vec![1, 1], 1.0)]).unwrap()).unwrap()
    }

    #[test]
    fn t_information_examples() {
        let ind = JointPmf::independent(&pmf(&[0.3, 0.7]), &pmf(&[0.1, 0.5, 0.4]));
        let r = t_information_bound(&ind, 2).unwrap();
        assert!(r.mutual_information.value.abs() < 1e-15 && r.t < 1e-15 && r.bound < 1e-13);
        let r = t_information_bound(&diagonal(), 2).unwrap();
        assert!((r.mutual_information.value - LN_2).abs() < 1e-15);
        assert!((r.t - 0.5).abs() < 1e-15);
        assert!((r.bound - r.mutual_information.value).abs() < 1e-9);
        assert!(t_information_bound(&diagonal(), 1).is_err());
    }

    #[test]
    fn t_information_bound_on_random_joints() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..1000 {
            let weights: Vec<_> =
                (0..16i64).map(|i| (vec![i / 4, i % 4], rng.random::<f64>().powi(3))).collect();
            let j = JointPmf::new(1, LatticePmf::from_weights(2, weights).unwrap()).unwrap();
            assert!(t_information_bound(&j, 4).unwrap().holds);
        }
    }

    #[test]
    fn conditional_tv_examples() {
        // Z = parity, coupling pairs each x with a y of the same parity
        let parity = |x: &[i64]| vec![x[0].rem_euclid(2)];
        let c = JointPmf::new(
            1,
            LatticePmf::from_weights(2, vec![(vec![0, 2], 0.3), (vec![1, 1], 0.2), (vec![2, 0], 0.1), (vec![3, 5], 0.4)])
                .unwrap(),
        )
        .unwrap();
        let whole = conditional_tv_bound_check(&c, parity, |_| true).unwrap();
        assert!((whole.lhs - whole.rhs).abs() < 1e-15 && whole.holds);
        let diag = diagonal();
        assert_eq!(conditional_tv_bound_check(&diag, |x| x.to_vec(), |z| z[0] == 1).unwrap().lhs, 0.0);
        assert!(matches!(conditional_tv_bound_check(&c, parity, |z| z[0] == 7), Err(Error::ZeroProbability)));
        let bad = JointPmf::new(1, LatticePmf::point_mass(&[0, 1])).unwrap();
        assert!(conditional_tv_bound_check(&bad, parity, |_| true).is_err());
    }

    #[test]
    fn conditional_tv_random_instances() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for _ in 0..500 {
            // support <= 6 per side; Z = x mod 3
            let mut atoms = Vec::new();
            for _ in 0..rng.random_range(1..=6) {
                let x = rng.random_range(0..6i64);
                let y = (x % 3) + 3 * rng.random_range(0..2i64);
                atoms.push((vec![x, y], rng.random::<f64>() + 1e-3));
            }
            let c = JointPmf::new(1, LatticePmf::from_weights(2, atoms).unwrap()).unwrap();
            let e = rng.random_range(0..3i64);
            match conditional_tv_bound_check(&c, |x| vec![x[0] % 3], |z| z[0] != e) {
                Ok(r) => assert!(r.holds, "{r:?}"),
                Err(Error::ZeroProbability) => {}
                Err(other) => panic!("{other}"),
            }
        }
    }

    #[test]
    fn int_frac_examples() {
        let u = generators::uniform_unit(1, 10).unwrap();
        for k in 0..10 {
            assert_eq!(int_frac_mutual_information(&u, k).unwrap().value, 0.0);
        }
        let f = generators::power(1.0, 12).unwrap();
        let i2 = int_frac_mutual_information(&f, 2).unwrap().value;
        let i6 = int_frac_mutual_information(&f, 6).unwrap().value;
        assert!(i6 < i2);
        assert!(int_frac_mutual_information(&f, 11).unwrap().value >= 0.0);
        assert!(int_frac_mutual_information(&f, 12).is_err());
    }

    proptest! {
        #[test]
        fn data_processing_for_tv(
            p in prop::collection::vec(0.01f64..1.0, 6),
            q in prop::collection::vec(0.01f64..1.0, 6),
            map in prop::collection::vec(0i64..3, 6),
        ) {
            let (p, q) = (pmf(&p), pmf(&q));
            let fp = p.pushforward(1, |x| vec![map[x[0] as usize]]).unwrap();
            let fq = q.pushforward(1, |x| vec![map[x[0] as usize]]).unwrap();
            prop_assert!(total_variation(&fp, &fq).unwrap() <= TvValue(total_variation(&p, &q).unwrap().value() + 1e-15));
        }

        #[test]
        fn tv_triangle(a in prop::collection::vec(0.01f64..1.0, 5), b in prop::collection::vec(0.01f64..1.0, 5),
                       c in prop::collection::vec(0.01f64..1.0, 5)) {
            let (a, b, c) = (pmf(&a), pmf(&b), pmf(&c));
            let ab = total_variation(&a, &b).unwrap().value();
            let bc = total_variation(&b, &c).unwrap().value();
            prop_assert!(total_variation(&a, &c).unwrap().value() <= ab + bc + 1e-15);
        }
    }
}
