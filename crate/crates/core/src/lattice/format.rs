//! Text format for lattice and cyclic pmfs.
//!
//! ```text
//! # comment
//! 0 1 : 0.25
//! 2 -1 : 0.75
//! ```
//!
//! A cyclic pmf starts with a header line `cyclic k n` and lists residue
//! tuples; omitted residues have mass zero.

use super::{CyclicPmf, LatticePmf, MASS_TOLERANCE};
use crate::error::{Error, Result};

/// Masses summing to one within this are renormalized on load.
pub const LOAD_TOLERANCE: f64 = 1e-6;

#[derive(Clone, Debug, PartialEq)]
pub enum PmfFile {
    Lattice(LatticePmf),
    Cyclic(CyclicPmf),
}

fn parse_err(line: usize, col: usize, msg: impl Into<String>) -> Error {
    Error::Parse { line, col, msg: msg.into() }
}

fn strip_comment(line: &str) -> &str {
    line.split('#').next().unwrap_or("").trim()
}

/// Parse an atom line `a b c : m` into integer coordinates and mass.
pub(crate) fn parse_atom(lineno: usize, raw: &str) -> Result<(Vec<i64>, f64)> {
    let (lhs, rhs) = raw
        .split_once(':')
        .ok_or_else(|| parse_err(lineno, 1, "expected `coordinates : mass`"))?;
    let mut point = Vec::new();
    for tok in lhs.split_whitespace() {
        let col = raw.find(tok).unwrap_or(0) + 1;
        point.push(tok.parse::<i64>().map_err(|_| parse_err(lineno, col, format!("bad integer `{tok}`")))?);
    }
    let col = raw.find(':').unwrap_or(0) + 2;
    let mass: f64 = rhs.trim().parse().map_err(|_| parse_err(lineno, col, format!("bad mass `{}`", rhs.trim())))?;
    if !mass.is_finite() || mass < 0.0 {
        return Err(parse_err(lineno, col, format!("mass must be nonnegative, got {mass}")));
    }
    Ok((point, mass))
}

pub fn parse_pmf(text: &str) -> Result<PmfFile> {
    let mut header: Option<(u32, usize)> = None;
    let mut atoms: Vec<(Vec<i64>, f64)> = Vec::new();
    let mut dim: Option<usize> = None;
    for (i, line) in text.lines().enumerate() {
        let lineno = i + 1;
        let body = strip_comment(line);
        if body.is_empty() {
            continue;
        }
        if let Some(rest) = body.strip_prefix("cyclic") {
            if header.is_some() || !atoms.is_empty() {
                return Err(parse_err(lineno, 1, "`cyclic` header must come first"));
            }
            let nums: Vec<&str> = rest.split_whitespace().collect();
            if nums.len() != 2 {
                return Err(parse_err(lineno, 1, "expected `cyclic k n`"));
            }
            let k = nums[0].parse::<u32>().map_err(|_| parse_err(lineno, 8, "bad k"))?;
            let n = nums[1].parse::<usize>().map_err(|_| parse_err(lineno, 8, "bad n"))?;
            header = Some((k, n));
            dim = Some(n);
            continue;
        }
        let (point, mass) = parse_atom(lineno, body)?;
        match dim {
            None => dim = Some(point.len()),
            Some(d) if d != point.len() => {
                return Err(parse_err(lineno, 1, format!("expected {d} coordinates, found {}", point.len())))
            }
            _ => {}
        }
        atoms.push((point, mass));
    }
    let dim = dim.filter(|&d| d > 0).ok_or_else(|| parse_err(1, 1, "no atoms"))?;
    let total: f64 = atoms.iter().map(|a| a.1).sum();
    if (total - 1.0).abs() > LOAD_TOLERANCE {
        return Err(Error::InvalidDistribution(format!("masses sum to {total}")));
    }
    let exact = (total - 1.0).abs() <= MASS_TOLERANCE;
    match header {
        Some((k, n)) => {
            let mut table = vec![0.0; 1usize << (k as usize * n)];
            let probe = CyclicPmf::uniform(k, n)?;
            for (p, m) in &atoms {
                if p.iter().any(|&r| r < 0 || r >= probe.modulus()) {
                    return Err(Error::InvalidDistribution(format!("residue {p:?} out of range")));
                }
                table[probe.index_of(p)] += m / if exact { 1.0 } else { total };
            }
            Ok(PmfFile::Cyclic(CyclicPmf::from_table(k, n, table)?))
        }
        None if exact => Ok(PmfFile::Lattice(LatticePmf::from_atoms(dim, atoms)?)),
        None => Ok(PmfFile::Lattice(LatticePmf::from_weights(dim, atoms)?)),
    }
}

pub fn parse_lattice(text: &str) -> Result<LatticePmf> {
    match parse_pmf(text)? {
        PmfFile::Lattice(p) => Ok(p),
        PmfFile::Cyclic(_) => Err(Error::invalid("expected a lattice pmf, found a cyclic one")),
    }
}

/// Shortest round-trip formatting, so a reload reproduces every mass bit for bit.
pub fn write_lattice(p: &LatticePmf) -> String {
    let mut s = String::new();
    for (pt, m) in p.iter() {
        let coords: Vec<String> = pt.iter().map(|x| x.to_string()).collect();
        s.push_str(&format!("{} : {}\n", coords.join(" "), m));
    }
    s
}

pub fn write_cyclic(p: &CyclicPmf) -> String {
    let mut s = format!("cyclic {} {}\n", p.modulus_log2(), p.dim());
    for (i, &m) in p.table().iter().enumerate() {
        if m > 0.0 {
            let r: Vec<String> = p.residues_of(i).iter().map(|x| x.to_string()).collect();
            s.push_str(&format!("{} : {}\n", r.join(" "), m));
        }
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lattice_round_trip_is_exact() {
        let p = LatticePmf::from_weights(2, vec![(vec![0, 1], 1.0), (vec![-3, 2], 2.0), (vec![5, 5], 3.7)]).unwrap();
        let text = write_lattice(&p);
        assert_eq!(parse_lattice(&text).unwrap(), p);
    }

    #[test]
    fn cyclic_round_trip() {
        let c = CyclicPmf::from_table(2, 1, vec![0.25, 0.5, 0.25, 0.0]).unwrap();
        assert_eq!(parse_pmf(&write_cyclic(&c)).unwrap(), PmfFile::Cyclic(c));
    }

    #[test]
    fn comments_and_errors() {
        let p = parse_lattice("# two-point\n0 : 0.5 # left\n1 : 0.5\n").unwrap();
        assert_eq!(p.len(), 2);
        match parse_lattice("0 : 0.5\n1 x : 0.5\n") {
            Err(Error::Parse { line, col, .. }) => assert_eq!((line, col), (2, 3)),
            other => panic!("{other:?}"),
        }
        assert!(parse_lattice("0 : 0.5\n1 : 0.2\n").is_err());
        assert!(parse_lattice("0 : 0.5\n1 2 : 0.5\n").is_err());
    }
}
