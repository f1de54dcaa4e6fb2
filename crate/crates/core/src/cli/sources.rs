//! Parsing of command-line values: integer lists, matrices and
//! distribution sources.

use crate::dyadic::Dyadic;
use crate::engine::{builtin, parse_spec, InequalitySpec};
use crate::error::{Error, Result};
use crate::grid::{format::parse_grid, generators, GridDensity};
use crate::lattice::{format::parse_lattice, LatticePmf};
use std::path::Path;

/// `1..12`, `0..10:2`, `16,32,64`, or any comma-separated mix.
pub fn parse_list(s: &str) -> Result<Vec<i64>> {
    let bad = || Error::invalid(format!("bad integer list `{s}`"));
    let mut out = Vec::new();
    for part in s.split(',').map(str::trim).filter(|p| !p.is_empty()) {
        if let Some((lo, rest)) = part.split_once("..") {
            let (hi, step) = match rest.split_once(':') {
                Some((h, st)) => (h, st.trim().parse::<i64>().map_err(|_| bad())?),
                None => (rest, 1),
            };
            let (lo, hi): (i64, i64) = (lo.trim().parse().map_err(|_| bad())?, hi.trim().parse().map_err(|_| bad())?);
            if step <= 0 || hi < lo || (hi - lo) / step > 1_000_000 {
                return Err(bad());
            }
            out.extend((lo..=hi).step_by(step as usize));
        } else {
            out.push(part.parse().map_err(|_| bad())?);
        }
    }
    if out.is_empty() {
        return Err(bad());
    }
    Ok(out)
}

pub fn parse_unsigned_list(s: &str) -> Result<Vec<u32>> {
    parse_list(s)?
        .into_iter()
        .map(|x| u32::try_from(x).map_err(|_| Error::invalid(format!("`{x}` must be a nonnegative integer"))))
        .collect()
}

pub fn parse_dyadic_list(s: &str) -> Result<Vec<Dyadic>> {
    s.split(',').map(str::trim).filter(|p| !p.is_empty()).map(str::parse).collect()
}

/// Rows separated by `;`, entries by `,`.
pub fn parse_matrix(s: &str) -> Result<Vec<Vec<i64>>> {
    let rows: Vec<Vec<i64>> = s
        .split(';')
        .map(|row| {
            row.split(',')
                .map(|x| x.trim().parse::<i64>().map_err(|_| Error::invalid(format!("bad matrix entry `{}`", x.trim()))))
                .collect()
        })
        .collect::<Result<_>>()?;
    if rows.iter().any(|r| r.len() != rows[0].len()) {
        return Err(Error::invalid("matrix rows differ in length"));
    }
    Ok(rows)
}

/// `NAME=SOURCE`.
pub fn split_assignment(s: &str) -> Result<(String, String)> {
    let (name, src) = s.split_once('=').ok_or_else(|| Error::invalid(format!("expected NAME=SOURCE, got `{s}`")))?;
    if name.trim().is_empty() {
        return Err(Error::invalid(format!("missing variable name in `{s}`")));
    }
    Ok((name.trim().to_string(), src.trim().to_string()))
}

fn read(path: &Path) -> Result<String> {
    std::fs::read_to_string(path)
        .map_err(|e| Error::Io(std::io::Error::new(e.kind(), format!("{}: {e}", path.display()))))
}

fn fields(src: &str) -> Vec<&str> {
    src.split(':').collect()
}

fn num<T: std::str::FromStr>(s: &str) -> Result<T> {
    s.parse().map_err(|_| Error::invalid(format!("bad number `{s}`")))
}

/// `uniform:A:B` (integers `A..=B`), `point:X`, or a pmf file.
pub fn lattice_source(src: &str) -> Result<LatticePmf> {
    match fields(src).as_slice() {
        ["uniform", a, b] => LatticePmf::uniform_interval(num(a)?, num(b)?),
        ["point", x] => Ok(LatticePmf::point_mass(&[num(x)?])),
        _ => parse_lattice(&read(Path::new(src))?),
    }
}

/// Grid densities: `uniform`, `uniform:LO:HI`, `triangular`, `power:P`,
/// `gaussian:SIGMA[:N]` (cut off at `[-N, N)`, default `ceil(8 sigma)`), or a
/// grid file. Generated densities use resolution `res`.
pub fn density_source(src: &str, res: u32) -> Result<GridDensity> {
    match fields(src).as_slice() {
        ["uniform"] => generators::uniform_unit(1, res),
        ["uniform", lo, hi] => generators::uniform(&[(lo.parse()?, hi.parse()?)], res),
        ["triangular"] => generators::triangular(res),
        ["power", p] => generators::power(num(p)?, res),
        ["gaussian", sigma, rest @ ..] if rest.len() <= 1 => {
            let sigma: f64 = num(sigma)?;
            let n = match rest {
                [n] => n.parse()?,
                _ => Dyadic::integer((8.0 * sigma).ceil().max(1.0) as i64),
            };
            generators::gaussian(0.0, sigma, n, res)
        }
        _ => parse_grid(&read(Path::new(src))?),
    }
}

/// Inequality from a file, or a built-in by name.
pub fn spec_source(path: Option<&Path>, builtin_name: Option<&str>) -> Result<InequalitySpec> {
    match (path, builtin_name) {
        (Some(_), Some(_)) => Err(Error::invalid("give either a spec file or --builtin, not both")),
        (Some(p), None) => parse_spec(&read(p)?),
        (None, Some(name)) => builtin::by_name(name).ok_or_else(|| {
            Error::invalid(format!("unknown built-in `{name}`; known: {}", builtin::NAMES.join(", ")))
        }),
        (None, None) => Err(Error::invalid("no inequality given")),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lists() {
        assert_eq!(parse_list("1..4").unwrap(), vec![1, 2, 3, 4]);
        assert_eq!(parse_list("0..10:2").unwrap(), vec![0, 2, 4, 6, 8, 10]);
        assert_eq!(parse_list("16, 32,64").unwrap(), vec![16, 32, 64]);
        assert_eq!(parse_list("1,3..5").unwrap(), vec![1, 3, 4, 5]);
        assert!(parse_list("5..1").is_err() && parse_list("").is_err() && parse_list("a").is_err());
        assert!(parse_unsigned_list("-1").is_err());
        let eps = parse_dyadic_list("2^-3, 0.5").unwrap();
        assert_eq!(eps, vec![Dyadic::pow2_neg(3), Dyadic::pow2_neg(1)]);
    }

    #[test]
    fn matrices_and_assignments() {
        assert_eq!(parse_matrix("1,1; 1,-1").unwrap(), vec![vec![1, 1], vec![1, -1]]);
        assert!(parse_matrix("1,1;1").is_err());
        assert_eq!(split_assignment("X = a.pmf").unwrap(), ("X".into(), "a.pmf".into()));
        assert!(split_assignment("=x").is_err());
    }

    #[test]
    fn generated_sources() {
        assert_eq!(lattice_source("uniform:0:3").unwrap().len(), 4);
        assert_eq!(density_source("uniform", 3).unwrap().cell_count(), 8);
        let g = density_source("gaussian:0.25", 4).unwrap();
        assert_eq!(g.bounds()[0], (Dyadic::integer(-2), Dyadic::integer(2)));
        assert!(density_source("no/such/file.grid", 3).is_err());
    }
}
