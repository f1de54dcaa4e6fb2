use crate::dyadic::Dyadic;
use crate::error::{Error, Result};
use crate::grid::{density_linear_combination, GridDensity};
use crate::lattice::LatticePmf;
use crate::nats::{entropy_of_masses, Nats};
use std::f64::consts::LN_2;

/// Minimum cells per axis for the smoothing density.
pub const MIN_CELLS_PER_AXIS: usize = 64;

/// `h(U + eps Z) - h(Z) - d ln eps - H(U)` for independent `U` on the
/// lattice and `Z` with a grid density.
pub fn smoothing_gap(u: &LatticePmf, z: &GridDensity, eps: Dyadic) -> Result<Nats> {
    if u.dim() != z.dim() {
        return Err(Error::dims(z.dim(), u.dim()));
    }
    if eps.numerator() <= 0 {
        return Err(Error::invalid(format!("eps must be positive, got {eps}")));
    }
    if let Some(&s) = z.shape().iter().find(|&&s| s < MIN_CELLS_PER_AXIS) {
        return Err(Error::GridTooCoarse(format!("{s} cells on an axis, need at least {MIN_CELLS_PER_AXIS}")));
    }
    let scaled = density_linear_combination(&[z], &[eps])?;
    let r = scaled.resolution();
    if r >= 62 {
        return Err(Error::ResourceBound(format!("mixture resolution {r}")));
    }
    let shift = 1i64 << r;
    // lattice atoms move whole cells at resolution r, so the mixture is exact
    let base = scaled.cell_pmf();
    let mut cells: Vec<(Vec<i64>, f64)> = Vec::with_capacity(u.len() * base.len());
    for (a, pa) in u.iter() {
        for (c, m) in base.iter() {
            let mut key = Vec::with_capacity(c.len());
            for (ci, ai) in c.iter().zip(a) {
                key.push(ai.checked_mul(shift).and_then(|x| x.checked_add(*ci)).ok_or_else(|| Error::Overflow("mixture cell".into()))?);
            }
            cells.push((key, pa * m));
        }
    }
    cells.sort_unstable_by(|x, y| x.0.cmp(&y.0));
    let merged = cells.chunk_by(|x, y| x.0 == y.0).map(|run| run.iter().map(|c| c.1).sum::<f64>());
    let d = z.dim() as f64;
    let h_mix = entropy_of_masses(merged, 1.0) - Nats::exact(d * r as f64 * LN_2);
    Ok(h_mix - z.differential_entropy() - Nats::exact(d * eps.to_f64().ln()) - u.entropy())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::generators;

    fn z() -> GridDensity {
        generators::gaussian(0.0, 1.0, Dyadic::integer(8), 8).unwrap()
    }

    #[test]
    fn point_mass_gives_zero() {
        let p = LatticePmf::point_mass(&[3]);
        for e in [1, 3, 7] {
            assert!(smoothing_gap(&p, &z(), Dyadic::pow2_neg(e)).unwrap().value.abs() < 1e-12);
        }
        // odd numerators spread Z over cells that do not align with the grid
        for (n, s) in [(3, 2), (5, 3), (3, 0)] {
            assert!(smoothing_gap(&p, &z(), Dyadic::new(n, s)).unwrap().value.abs() < 1e-10);
        }
    }

    #[test]
    fn gap_shrinks_with_eps() {
        let u = LatticePmf::uniform_interval(0, 1).unwrap();
        let fine = smoothing_gap(&u, &z(), Dyadic::pow2_neg(7)).unwrap().value;
        let coarse = smoothing_gap(&u, &z(), Dyadic::pow2_neg(3)).unwrap().value;
        assert!(fine.abs() < 1e-3);
        assert!(fine.abs() < coarse.abs());
    }

    #[test]
    fn rejects_coarse_grids() {
        let u = LatticePmf::point_mass(&[0]);
        let coarse = generators::uniform_unit(1, 3).unwrap();
        assert!(matches!(smoothing_gap(&u, &coarse, Dyadic::pow2_neg(2)), Err(Error::GridTooCoarse(_))));
    }
}
