//! Text format for grid densities.
//!
//! ```text
//! grid 1 3 0 1/2
//! 0 : 6
//! 3 : 2
//! ```
//!
//! The header gives dimension, resolution and the box edges; each line holds
//! an absolute cell index and a density value. Omitted cells are zero.

use super::GridDensity;
use crate::dyadic::Dyadic;
use crate::error::{Error, Result};
use crate::lattice::format::parse_atom;
use crate::lattice::BoxIndex;

fn perr(line: usize, col: usize, msg: impl Into<String>) -> Error {
    Error::Parse { line, col, msg: msg.into() }
}

pub fn parse_grid(text: &str) -> Result<GridDensity> {
    let mut header: Option<(u32, Vec<i64>, Vec<usize>)> = None;
    let mut values: Vec<f64> = Vec::new();
    let mut bx: Option<BoxIndex> = None;
    for (i, line) in text.lines().enumerate() {
        let lineno = i + 1;
        let body = line.split('#').next().unwrap_or("").trim();
        if body.is_empty() {
            continue;
        }
        let Some(bi) = &bx else {
            let toks: Vec<&str> = body.split_whitespace().collect();
            if toks.first() != Some(&"grid") || toks.len() < 3 {
                return Err(perr(lineno, 1, "expected header `grid d k lo1 hi1 ...`"));
            }
            let d: usize = toks[1].parse().map_err(|_| perr(lineno, 6, "bad dimension"))?;
            let k: u32 = toks[2].parse().map_err(|_| perr(lineno, 6, "bad resolution"))?;
            if d == 0 || toks.len() != 3 + 2 * d {
                return Err(perr(lineno, 1, format!("expected {} box edges", 2 * d)));
            }
            let mut lo = Vec::with_capacity(d);
            let mut shape = Vec::with_capacity(d);
            for j in 0..d {
                let edge = |t: &str| -> Result<i64> {
                    let col = body.find(t).unwrap_or(0) + 1;
                    let x: Dyadic = t.parse().map_err(|_| perr(lineno, col, format!("bad edge `{t}`")))?;
                    x.at_resolution(k).ok_or_else(|| perr(lineno, col, format!("edge {t} is off the grid")))
                };
                let (a, b) = (edge(toks[3 + 2 * j])?, edge(toks[4 + 2 * j])?);
                if b <= a {
                    return Err(perr(lineno, 1, "empty box"));
                }
                lo.push(a);
                shape.push((b - a) as usize);
            }
            let index = BoxIndex::new(lo.clone(), shape.clone())
                .filter(|b| b.volume <= super::MAX_GRID_CELLS)
                .ok_or_else(|| Error::ResourceBound("grid box too large".into()))?;
            values = vec![0.0; index.volume];
            bx = Some(index);
            header = Some((k, lo, shape));
            continue;
        };
        let (cell, v) = parse_atom(lineno, body)?;
        if cell.len() != bi.lo.len() {
            return Err(perr(lineno, 1, format!("expected {} coordinates", bi.lo.len())));
        }
        let inside = cell.iter().zip(&bi.lo).zip(&bi.extent).all(|((c, l), e)| *c >= *l && *c < l + *e as i64);
        if !inside {
            return Err(perr(lineno, 1, format!("cell {cell:?} outside the box")));
        }
        values[bi.index(&cell)] += v;
    }
    let (k, lo, shape) = header.ok_or_else(|| perr(1, 1, "missing grid header"))?;
    GridDensity::from_values(k, lo, shape, values)
}

pub fn write_grid(f: &GridDensity) -> String {
    let mut s = format!("grid {} {}", f.dim(), f.resolution());
    for (l, h) in f.bounds() {
        s.push_str(&format!(" {l} {h}"));
    }
    s.push('\n');
    let bx = f.index();
    let mut c = vec![0i64; f.dim()];
    for (i, &v) in f.values().iter().enumerate() {
        if v > 0.0 {
            bx.point(i, &mut c);
            let coords: Vec<String> = c.iter().map(|x| x.to_string()).collect();
            s.push_str(&format!("{} : {}\n", coords.join(" "), v));
        }
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::generators;

    #[test]
    fn round_trip_is_exact() {
        let g = generators::gaussian(0.25, 0.5, Dyadic::integer(2), 5).unwrap();
        assert_eq!(parse_grid(&write_grid(&g)).unwrap(), g);
        let p = GridDensity::product(&[generators::power(1.0, 3).unwrap(), generators::triangular(2).unwrap()]).unwrap();
        assert_eq!(parse_grid(&write_grid(&p)).unwrap(), p);
    }

    #[test]
    fn header_example() {
        let g = parse_grid("grid 1 3 0 1/2\n0 : 2\n3 : 2\n# rest zero\n1 : 2\n2 : 2\n").unwrap();
        assert!((g.differential_entropy().value + 2f64.ln()).abs() < 1e-15);
        assert!(matches!(parse_grid("grid 1 3 0 1\n9 : 1\n"), Err(Error::Parse { line: 2, .. })));
        assert!(parse_grid("0 : 1\n").is_err());
    }
}
