use crate::error::{Error, Result};
use crate::lattice::{linear_combination, LatticePmf};

/// `k`-fold product law on `Z^{dk}`.
pub fn tensor_iid(p: &LatticePmf, k: usize) -> Result<LatticePmf> {
    if k == 0 {
        return Err(Error::invalid("tensor power needs k >= 1"));
    }
    let mut acc = p.clone();
    for _ in 1..k {
        acc = acc.product(p);
    }
    Ok(acc)
}

fn check_matrix(pmfs: &[LatticePmf], matrix: &[Vec<i64>]) -> Result<()> {
    for row in matrix {
        if row.len() != pmfs.len() {
            return Err(Error::dims(pmfs.len(), row.len()));
        }
    }
    Ok(())
}

/// `1 +` the largest coordinate spread of any row combination.
pub fn default_base(pmfs: &[LatticePmf], matrix: &[Vec<i64>]) -> Result<i64> {
    check_matrix(pmfs, matrix)?;
    let mut diam = 0;
    for row in matrix {
        if row.iter().all(|&a| a == 0) {
            continue;
        }
        diam = diam.max(linear_combination(pmfs, row)?.diameter());
    }
    diam.checked_add(1).ok_or_else(|| Error::Overflow("embedding base".into()))
}

/// `f_M(x_0, ..., x_{k-1}) = sum_i x_i M^i`, coordinatewise.
fn relabel(p: &LatticePmf, d: usize, k: usize, base: i64) -> Result<LatticePmf> {
    let mut powers = Vec::with_capacity(k);
    let mut m: i64 = 1;
    for i in 0..k {
        powers.push(m);
        if i + 1 < k {
            m = m.checked_mul(base).ok_or_else(|| Error::Overflow(format!("{base}^{}", i + 1)))?;
        }
    }
    let overflow = std::cell::Cell::new(false);
    let out = p.merged_by(d, |x| {
        (0..d)
            .map(|c| {
                (0..k).try_fold(0i64, |acc, i| x[i * d + c].checked_mul(powers[i]).and_then(|t| acc.checked_add(t)))
                    .unwrap_or_else(|| {
                        overflow.set(true);
                        0
                    })
            })
            .collect()
    });
    if overflow.get() {
        return Err(Error::Overflow("embedded coordinate".into()));
    }
    out
}

/// Replace each `U_j` by `f_M(U_j^{(1)}, ..., U_j^{(k)})` for iid copies.
///
/// Every row combination of the result is then a relabeling of the `k`-fold
/// product of the original row combination. `base` defaults to
/// [`default_base`]; each row is checked for collisions.
pub fn embed(pmfs: &[LatticePmf], matrix: &[Vec<i64>], k: usize, base: Option<i64>) -> Result<Vec<LatticePmf>> {
    check_matrix(pmfs, matrix)?;
    let d = pmfs.first().map(|p| p.dim()).ok_or_else(|| Error::invalid("no distributions to embed"))?;
    let base = match base {
        Some(b) if b >= 1 => b,
        Some(b) => return Err(Error::invalid(format!("embedding base must be positive, got {b}"))),
        None => default_base(pmfs, matrix)?,
    };
    let embedded = pmfs
        .iter()
        .map(|p| relabel(&tensor_iid(p, k)?, d, k, base))
        .collect::<Result<Vec<_>>>()?;
    for (r, row) in matrix.iter().enumerate() {
        if row.iter().all(|&a| a == 0) {
            continue;
        }
        let before = linear_combination(pmfs, row)?.len();
        let after = linear_combination(&embedded, row)?.len();
        if (after as u128) != (before as u128).pow(k as u32) {
            return Err(Error::EmbeddingCollision { base, row: r });
        }
    }
    Ok(embedded)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::LN_2;

    #[test]
    fn tensor_examples() {
        let p = LatticePmf::from_masses_1d(0, &[0.25, 0.75]).unwrap();
        assert_eq!(tensor_iid(&p, 1).unwrap(), p);
        let t = tensor_iid(&p, 2).unwrap();
        let masses: Vec<f64> = t.masses().to_vec();
        assert_eq!(masses, vec![1.0 / 16.0, 3.0 / 16.0, 3.0 / 16.0, 9.0 / 16.0]);
        assert!((t.entropy().value - 2.0 * p.entropy().value).abs() < 1e-10);
        let u = LatticePmf::uniform_interval(0, 1).unwrap();
        let c = tensor_iid(&u, 3).unwrap();
        assert_eq!(c.len(), 8);
        assert!((c.entropy().value - 3.0 * LN_2).abs() < 1e-15);
    }

    #[test]
    fn embed_examples() {
        let u = LatticePmf::uniform_interval(0, 1).unwrap();
        let e = embed(std::slice::from_ref(&u), &[vec![1]], 2, Some(10)).unwrap();
        let want = LatticePmf::uniform(1, &[vec![0], vec![10], vec![1], vec![11]]).unwrap();
        assert_eq!(e[0], want);
        assert!((e[0].entropy().value - 2.0 * LN_2).abs() < 1e-15);
        assert_eq!(embed(std::slice::from_ref(&u), &[vec![1]], 1, None).unwrap()[0], u);
        // base 1 merges everything
        assert!(matches!(embed(&[u.clone(), u], &[vec![1, 1]], 2, Some(1)), Err(Error::EmbeddingCollision { .. })));
    }

    #[test]
    fn row_entropies_scale_by_k() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for _ in 0..25 {
            let pmfs: Vec<LatticePmf> = (0..2)
                .map(|_| {
                    let n = rng.random_range(1..=4);
                    LatticePmf::from_weights(1, (0..n).map(|_| (vec![rng.random_range(-3..=3)], rng.random::<f64>() + 0.01)))
                        .unwrap()
                })
                .collect();
            let matrix: Vec<Vec<i64>> = (0..3).map(|_| (0..2).map(|_| rng.random_range(-3..=3)).collect()).collect();
            let e = embed(&pmfs, &matrix, 3, None).unwrap();
            for row in matrix.iter().filter(|r| r.iter().any(|&a| a != 0)) {
                let h0 = linear_combination(&pmfs, row).unwrap().entropy().value;
                let h1 = linear_combination(&e, row).unwrap().entropy().value;
                assert!((h1 - 3.0 * h0).abs() < 1e-9);
            }
        }
    }
}
