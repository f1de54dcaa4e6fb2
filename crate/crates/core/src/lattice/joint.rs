use super::LatticePmf;
use crate::error::{Error, Result};
use crate::nats::{CompensatedSum, Nats};

/// Joint law of a pair `(W, Y)` of lattice-valued variables.
///
/// Stored as a pmf on `Z^(left_dim + right_dim)`; the first `left_dim`
/// coordinates belong to `W`.
#[derive(Clone, Debug, PartialEq)]
pub struct JointPmf {
    left_dim: usize,
    inner: LatticePmf,
}

impl JointPmf {
    pub fn new(left_dim: usize, inner: LatticePmf) -> Result<Self> {
        if left_dim == 0 || left_dim >= inner.dim() {
            return Err(Error::invalid(format!("split {left_dim} invalid for dimension {}", inner.dim())));
        }
        Ok(JointPmf { left_dim, inner })
    }

    /// Product law `p ⊗ q`.
    pub fn independent(p: &LatticePmf, q: &LatticePmf) -> Self {
        JointPmf { left_dim: p.dim(), inner: p.product(q) }
    }

    pub fn left_dim(&self) -> usize {
        self.left_dim
    }

    pub fn right_dim(&self) -> usize {
        self.inner.dim() - self.left_dim
    }

    pub fn as_pmf(&self) -> &LatticePmf {
        &self.inner
    }

    pub fn iter(&self) -> impl Iterator<Item = (&[i64], &[i64], f64)> + '_ {
        self.inner.iter().map(|(p, m)| (&p[..self.left_dim], &p[self.left_dim..], m))
    }

    pub fn left(&self) -> LatticePmf {
        let l = self.left_dim;
        self.inner.merged_by(l, |p| p[..l].to_vec()).expect("nonempty marginal")
    }

    pub fn right(&self) -> LatticePmf {
        let l = self.left_dim;
        self.inner.merged_by(self.right_dim(), |p| p[l..].to_vec()).expect("nonempty marginal")
    }

    /// Product of the two marginals.
    pub fn marginal_product(&self) -> LatticePmf {
        self.left().product(&self.right())
    }

    /// Pushforward of each side separately.
    pub fn map_sides<F, G>(&self, left_dim: usize, f: F, right_dim: usize, g: G) -> Result<Self>
    where
        F: Fn(&[i64]) -> Vec<i64>,
        G: Fn(&[i64]) -> Vec<i64>,
    {
        let l = self.left_dim;
        let inner = self.inner.pushforward(left_dim + right_dim, |p| {
            let mut v = f(&p[..l]);
            v.extend(g(&p[l..]));
            v
        })?;
        JointPmf::new(left_dim, inner)
    }
}

/// Joint law of `(f_1(X), f_2(X))` for `X ~ p`, where `f` returns the pair.
pub fn joint_of<F>(p: &LatticePmf, left_dim: usize, right_dim: usize, f: F) -> Result<JointPmf>
where
    F: Fn(&[i64]) -> (Vec<i64>, Vec<i64>),
{
    let inner = p.pushforward(left_dim + right_dim, |x| {
        let (mut a, b) = f(x);
        a.extend(b);
        a
    })?;
    JointPmf::new(left_dim, inner)
}

/// `I(W; Y)` in nats, summed as `sum p(w,y) ln(p(w,y) / (p(w) p(y)))`.
///
/// Rounding noise down to -1e-10 is clamped to zero.
pub fn mutual_information(j: &JointPmf) -> Nats {
    let left = j.left();
    let right = j.right();
    let mut s = CompensatedSum::new();
    for (w, y, m) in j.iter() {
        let pw = left.mass_at(w);
        let py = right.mass_at(y);
        s.add(m * (m / (pw * py)).ln());
    }
    let err = 8.0 * f64::EPSILON * (s.abs_total() + s.count() as f64 * f64::EPSILON);
    let v = s.total();
    Nats::new(if v < 0.0 && v > -1e-10 { 0.0 } else { v }, err)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::f64::consts::LN_2;

    #[test]
    fn examples() {
        let p = LatticePmf::from_masses_1d(0, &[0.2, 0.8]).unwrap();
        let q = LatticePmf::from_masses_1d(-1, &[0.3, 0.3, 0.4]).unwrap();
        let prod = JointPmf::independent(&p, &q);
        assert!(mutual_information(&prod).value.abs() < 1e-15);

        let b = LatticePmf::uniform_interval(0, 1).unwrap();
        let diag = joint_of(&b, 1, 1, |x| (x.to_vec(), x.to_vec())).unwrap();
        assert!((mutual_information(&diag).value - LN_2).abs() < 1e-15);
        assert_eq!(diag.left(), b);
    }

    #[test]
    fn identity_with_entropies() {
        // I = H(W) + H(Y) - H(W,Y)
        let p = LatticePmf::from_weights(1, (0..12).map(|x| (vec![x], 1.0 + (x % 5) as f64))).unwrap();
        let j = joint_of(&p, 1, 1, |x| (vec![x[0] % 3], vec![x[0] / 4])).unwrap();
        let lhs = mutual_information(&j).value;
        let rhs = j.left().entropy().value + j.right().entropy().value - j.as_pmf().entropy().value;
        assert!((lhs - rhs).abs() < 1e-13);
    }

    proptest! {
        #[test]
        fn bounded_by_marginal_entropies(w in prop::collection::vec(0.01f64..1.0, 2..16), m1 in 1i64..5, m2 in 1i64..5) {
            let p = LatticePmf::from_weights(1, w.iter().enumerate().map(|(i, &x)| (vec![i as i64], x))).unwrap();
            let j = joint_of(&p, 1, 1, |x| (vec![x[0] % m1], vec![x[0] / m2])).unwrap();
            let i = mutual_information(&j).value;
            prop_assert!(i >= 0.0);
            prop_assert!(i <= j.left().entropy().value.min(j.right().entropy().value) + 1e-10);
        }
    }
}
