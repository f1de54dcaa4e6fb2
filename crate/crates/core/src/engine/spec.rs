use crate::error::{Error, Result};
use crate::lattice::gcd_all;
use serde::Serialize;
use std::fmt;

/// One weighted entropy term `alpha * H(sum_j coeffs[j] X_j)`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Row {
    pub alpha: f64,
    pub coeffs: Vec<i64>,
}

/// A linear entropy inequality `sum_i alpha_i H(sum_j a_ij X_j) <= 0`.
///
/// Rows are divided by the gcd of their coefficients on construction.
/// `iid_classes` lists groups of variable indices that share one law.
#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct InequalitySpec {
    pub variables: Vec<String>,
    pub rows: Vec<Row>,
    pub iid_classes: Vec<Vec<usize>>,
}

pub const BALANCE_TOLERANCE: f64 = 1e-12;

impl InequalitySpec {
    pub fn new(variables: Vec<String>, rows: Vec<Row>, iid_classes: Vec<Vec<usize>>) -> Result<Self> {
        let m = variables.len();
        let mut normalized = Vec::with_capacity(rows.len());
        for (i, row) in rows.into_iter().enumerate() {
            if row.coeffs.len() != m {
                return Err(Error::dims(m, row.coeffs.len()));
            }
            let g = gcd_all(&row.coeffs);
            if g == 0 {
                return Err(Error::invalid(format!("row {} has no variables", i + 1)));
            }
            if !row.alpha.is_finite() {
                return Err(Error::invalid(format!("row {} has weight {}", i + 1, row.alpha)));
            }
            normalized.push(Row { alpha: row.alpha, coeffs: row.coeffs.iter().map(|a| a / g).collect() });
        }
        let mut seen = vec![false; m];
        for class in &iid_classes {
            for &v in class {
                if v >= m || std::mem::replace(&mut seen[v], true) {
                    return Err(Error::invalid(format!("variable index {v} repeated or out of range in iid classes")));
                }
            }
        }
        let iid_classes = iid_classes.into_iter().filter(|c| c.len() > 1).collect();
        Ok(InequalitySpec { variables, rows: normalized, iid_classes })
    }

    pub fn alpha_sum(&self) -> f64 {
        self.rows.iter().map(|r| r.alpha).sum()
    }

    /// `H(...)` for row `i`, without its weight.
    pub fn term_label(&self, i: usize) -> String {
        struct Lin<'a>(&'a [String], &'a [i64]);
        impl fmt::Display for Lin<'_> {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                write_lin(f, self.0, self.1)
            }
        }
        format!("H({})", Lin(&self.variables, &self.rows[i].coeffs))
    }

    pub fn is_balanced(&self) -> bool {
        self.alpha_sum().abs() <= BALANCE_TOLERANCE
    }

    pub fn variable_index(&self, name: &str) -> Option<usize> {
        self.variables.iter().position(|v| v == name)
    }

    /// Partition of all variables: declared iid classes plus singletons,
    /// ordered by first member.
    pub fn classes(&self) -> Vec<Vec<usize>> {
        let mut out: Vec<Vec<usize>> = self.iid_classes.clone();
        for v in 0..self.variables.len() {
            if !out.iter().any(|c| c.contains(&v)) {
                out.push(vec![v]);
            }
        }
        out.sort_by_key(|c| c[0]);
        out
    }
}

fn write_lin(f: &mut fmt::Formatter<'_>, vars: &[String], coeffs: &[i64]) -> fmt::Result {
    let mut first = true;
    for (v, &a) in vars.iter().zip(coeffs) {
        if a == 0 {
            continue;
        }
        let sign = if a < 0 { "-" } else if first { "" } else { "+" };
        let mag = a.unsigned_abs();
        if mag == 1 {
            write!(f, "{sign}{v}")?;
        } else {
            write!(f, "{sign}{mag}*{v}")?;
        }
        first = false;
    }
    Ok(())
}

impl fmt::Display for InequalitySpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.rows.is_empty() {
            write!(f, "0")?;
        }
        for (i, row) in self.rows.iter().enumerate() {
            let mag = row.alpha.abs();
            match (i, row.alpha < 0.0) {
                (0, true) => write!(f, "-")?,
                (0, false) => {}
                (_, true) => write!(f, " - ")?,
                (_, false) => write!(f, " + ")?,
            }
            if mag != 1.0 {
                write!(f, "{mag}*")?;
            }
            write!(f, "H(")?;
            write_lin(f, &self.variables, &row.coeffs)?;
            write!(f, ")")?;
        }
        write!(f, " <= 0")?;
        if !self.iid_classes.is_empty() {
            write!(f, "\niid:")?;
            for class in &self.iid_classes {
                let names: Vec<&str> = class.iter().map(|&v| self.variables[v].as_str()).collect();
                write!(f, " {{{}}}", names.join(", "))?;
            }
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
enum Tok {
    Num(String),
    Ident(String),
    Plus,
    Minus,
    Star,
    Slash,
    LParen,
    RParen,
    Le,
}

#[derive(Clone, Debug)]
struct Spanned {
    tok: Tok,
    line: usize,
    col: usize,
}

fn perr(line: usize, col: usize, msg: impl Into<String>) -> Error {
    Error::Parse { line, col, msg: msg.into() }
}

fn is_ident_start(c: char) -> bool {
    c.is_alphabetic() || c == '_'
}

fn is_ident_char(c: char) -> bool {
    c.is_alphanumeric() || c == '_' || c == '\'' || c == '′'
}

fn tokenize(line: &str, lineno: usize, out: &mut Vec<Spanned>) -> Result<()> {
    let chars: Vec<char> = line.chars().collect();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        let col = i + 1;
        let simple = match c {
            '+' => Some(Tok::Plus),
            '-' | '−' => Some(Tok::Minus),
            '*' | '·' => Some(Tok::Star),
            '/' => Some(Tok::Slash),
            '(' => Some(Tok::LParen),
            ')' => Some(Tok::RParen),
            '≤' => Some(Tok::Le),
            _ => None,
        };
        if let Some(tok) = simple {
            out.push(Spanned { tok, line: lineno, col });
            i += 1;
        } else if c.is_whitespace() {
            i += 1;
        } else if c == '<' {
            if chars.get(i + 1) != Some(&'=') {
                return Err(perr(lineno, col, "expected `<=`"));
            }
            out.push(Spanned { tok: Tok::Le, line: lineno, col });
            i += 2;
        } else if c.is_ascii_digit() || c == '.' {
            let start = i;
            while i < chars.len() && (chars[i].is_ascii_digit() || chars[i] == '.') {
                i += 1;
            }
            if i < chars.len() && (chars[i] == 'e' || chars[i] == 'E') {
                let mut j = i + 1;
                if j < chars.len() && (chars[j] == '+' || chars[j] == '-') {
                    j += 1;
                }
                if j < chars.len() && chars[j].is_ascii_digit() {
                    i = j;
                    while i < chars.len() && chars[i].is_ascii_digit() {
                        i += 1;
                    }
                }
            }
            out.push(Spanned { tok: Tok::Num(chars[start..i].iter().collect()), line: lineno, col });
        } else if is_ident_start(c) {
            let start = i;
            while i < chars.len() && is_ident_char(chars[i]) {
                i += 1;
            }
            out.push(Spanned { tok: Tok::Ident(chars[start..i].iter().collect()), line: lineno, col });
        } else {
            return Err(perr(lineno, col, format!("unexpected character `{c}`")));
        }
    }
    Ok(())
}

struct Parser {
    toks: Vec<Spanned>,
    pos: usize,
    end: (usize, usize),
    variables: Vec<String>,
}

impl Parser {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|t| &t.tok)
    }

    fn here(&self) -> (usize, usize) {
        self.toks.get(self.pos).map(|t| (t.line, t.col)).unwrap_or(self.end)
    }

    fn err(&self, msg: impl Into<String>) -> Error {
        let (l, c) = self.here();
        perr(l, c, msg)
    }

    fn bump(&mut self) -> Option<Tok> {
        let t = self.toks.get(self.pos).map(|t| t.tok.clone());
        self.pos += 1;
        t
    }

    fn expect(&mut self, want: Tok, what: &str) -> Result<()> {
        if self.peek() == Some(&want) {
            self.pos += 1;
            Ok(())
        } else {
            Err(self.err(format!("expected {what}")))
        }
    }

    fn var_index(&mut self, name: &str) -> usize {
        match self.variables.iter().position(|v| v == name) {
            Some(i) => i,
            None => {
                self.variables.push(name.to_string());
                self.variables.len() - 1
            }
        }
    }

    fn real(&mut self) -> Result<f64> {
        let Some(Tok::Num(n)) = self.bump() else { unreachable!("caller checked") };
        let mut x: f64 = n.parse().map_err(|_| {
            self.pos -= 1;
            self.err(format!("bad number `{n}`"))
        })?;
        if self.peek() == Some(&Tok::Slash) {
            self.pos += 1;
            match self.bump() {
                Some(Tok::Num(d)) => {
                    let den: f64 = d.parse().map_err(|_| self.err(format!("bad number `{d}`")))?;
                    if den == 0.0 {
                        self.pos -= 1;
                        return Err(self.err("division by zero"));
                    }
                    x /= den;
                }
                _ => {
                    self.pos -= 1;
                    return Err(self.err("expected a denominator"));
                }
            }
        }
        Ok(x)
    }

    fn entropy_term(&mut self, sign: f64) -> Result<(f64, Vec<(usize, i64)>)> {
        let mut alpha = sign;
        if matches!(self.peek(), Some(Tok::Num(_))) {
            alpha *= self.real()?;
            if self.peek() == Some(&Tok::Star) {
                self.pos += 1;
            }
        }
        match self.peek() {
            Some(Tok::Ident(h)) if h == "H" || h == "h" => {
                self.pos += 1;
            }
            _ => return Err(self.err("expected `H(`")),
        }
        self.expect(Tok::LParen, "`(`")?;
        let mut terms = Vec::new();
        let mut first = true;
        loop {
            let mut s: i64 = 1;
            match self.peek() {
                Some(Tok::Plus) if !first => self.pos += 1,
                Some(Tok::Minus) => {
                    self.pos += 1;
                    s = -1;
                }
                Some(Tok::RParen) if first => return Err(self.err("empty entropy term")),
                _ if first => {}
                _ => return Err(self.err("expected `+`, `-` or `)`")),
            }
            first = false;
            let mut a: i64 = 1;
            if let Some(Tok::Num(n)) = self.peek().cloned() {
                let is_int = n.chars().all(|c| c.is_ascii_digit());
                let next_is_slash = self.toks.get(self.pos + 1).map(|t| &t.tok) == Some(&Tok::Slash);
                if !is_int || next_is_slash {
                    return Err(self.err(format!("coefficient `{n}` inside H must be an integer")));
                }
                a = n.parse().map_err(|_| self.err(format!("coefficient `{n}` is too large")))?;
                self.pos += 1;
                if self.peek() == Some(&Tok::Star) {
                    self.pos += 1;
                }
            }
            let name = match self.bump() {
                Some(Tok::Ident(v)) => v,
                _ => {
                    self.pos -= 1;
                    return Err(self.err("expected a variable name"));
                }
            };
            let idx = self.var_index(&name);
            terms.push((idx, s * a));
            if self.peek() == Some(&Tok::RParen) {
                self.pos += 1;
                break;
            }
            if self.peek().is_none() {
                return Err(self.err("unclosed `(`"));
            }
        }
        Ok((alpha, terms))
    }

    /// `term (('+'|'-') term)*`, stopping before `<=` or the end.
    fn form(&mut self) -> Result<Vec<(f64, Vec<(usize, i64)>)>> {
        let mut rows = Vec::new();
        let mut sign = match self.peek() {
            Some(Tok::Minus) => {
                self.pos += 1;
                -1.0
            }
            Some(Tok::Plus) => {
                self.pos += 1;
                1.0
            }
            _ => 1.0,
        };
        loop {
            rows.push(self.entropy_term(sign)?);
            sign = match self.peek() {
                Some(Tok::Plus) => 1.0,
                Some(Tok::Minus) => -1.0,
                _ => break,
            };
            self.pos += 1;
        }
        Ok(rows)
    }
}

fn parse_iid(body: &str, lineno: usize, offset: usize, vars: &[String]) -> Result<Vec<Vec<usize>>> {
    let mut classes = Vec::new();
    let mut rest = body;
    let mut col = offset;
    loop {
        let trimmed = rest.trim_start();
        col += rest.len() - trimmed.len();
        rest = trimmed;
        if rest.is_empty() {
            break;
        }
        if !rest.starts_with('{') {
            return Err(perr(lineno, col, "expected `{`"));
        }
        let close = rest.find('}').ok_or_else(|| perr(lineno, col, "unclosed `{`"))?;
        let mut class = Vec::new();
        let mut inner_col = col + 1;
        for name in rest[1..close].split(',') {
            let n = name.trim();
            let c = inner_col + (name.len() - name.trim_start().len());
            let idx = vars
                .iter()
                .position(|v| v == n)
                .ok_or_else(|| perr(lineno, c, format!("unknown variable `{n}` in iid class")))?;
            class.push(idx);
            inner_col += name.chars().count() + 1;
        }
        classes.push(class);
        col += rest[..=close].chars().count();
        rest = &rest[close + 1..];
    }
    Ok(classes)
}

fn assemble(text: &str, require_relation: bool) -> Result<InequalitySpec> {
    let mut toks = Vec::new();
    let mut iid_lines = Vec::new();
    let mut end = (1, 1);
    for (i, raw) in text.lines().enumerate() {
        let lineno = i + 1;
        let line = raw.split('#').next().unwrap_or("");
        let trimmed = line.trim_start();
        if let Some(rest) = trimmed.strip_prefix("iid:") {
            let offset = line.len() - trimmed.len() + 5;
            iid_lines.push((lineno, offset, rest.to_string()));
            continue;
        }
        tokenize(line, lineno, &mut toks)?;
        if !line.trim().is_empty() {
            end = (lineno, line.chars().count() + 1);
        }
    }
    let mut p = Parser { toks, pos: 0, end, variables: Vec::new() };
    if p.peek().is_none() {
        return Err(perr(1, 1, "empty inequality"));
    }
    let terms = p.form()?;
    match p.peek() {
        Some(Tok::Le) => {
            p.pos += 1;
            match p.bump() {
                Some(Tok::Num(z)) if z.parse::<f64>().ok() == Some(0.0) => {}
                _ => {
                    p.pos -= 1;
                    return Err(p.err("right-hand side must be `0`"));
                }
            }
        }
        None if !require_relation => {}
        None => return Err(p.err("expected `<= 0`")),
        Some(_) => return Err(p.err("expected `+`, `-` or `<= 0`")),
    }
    if p.peek().is_some() {
        return Err(p.err("unexpected input after `<= 0`"));
    }
    let m = p.variables.len();
    let mut rows = Vec::with_capacity(terms.len());
    for (alpha, lin) in terms {
        let mut coeffs = vec![0i64; m];
        for (v, a) in lin {
            coeffs[v] = coeffs[v].checked_add(a).ok_or_else(|| Error::Overflow("row coefficient".into()))?;
        }
        rows.push(Row { alpha, coeffs });
    }
    let mut classes = Vec::new();
    for (lineno, offset, body) in iid_lines {
        classes.extend(parse_iid(&body, lineno, offset, &p.variables)?);
    }
    InequalitySpec::new(p.variables, rows, classes)
}

/// Parse `a*H(...) + b*H(...) - ... <= 0` with optional `iid: {X, X'}` lines.
pub fn parse_spec(text: &str) -> Result<InequalitySpec> {
    assemble(text, true)
}

/// A linear entropy form, with or without a trailing `<= 0`.
pub fn parse_form(text: &str) -> Result<InequalitySpec> {
    assemble(text, false)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(alpha: f64, coeffs: &[i64]) -> Row {
        Row { alpha, coeffs: coeffs.to_vec() }
    }

    #[test]
    fn sum_difference_rows() {
        let s = parse_spec("H(X+Y) - 3*H(X-Y) + H(X) + H(Y) <= 0").unwrap();
        assert_eq!(s.variables, ["X", "Y"]);
        assert_eq!(s.rows, vec![row(1.0, &[1, 1]), row(-3.0, &[1, -1]), row(1.0, &[1, 0]), row(1.0, &[0, 1])]);
        assert!(s.is_balanced());
    }

    #[test]
    fn subadditivity_is_unbalanced() {
        let s = parse_spec("H(X+Y) - H(X) - H(Y) <= 0").unwrap();
        assert!(!s.is_balanced());
        assert_eq!(s.alpha_sum(), -1.0);
        assert!(InequalitySpec::default().is_balanced());
    }

    #[test]
    fn gcd_normalization_and_syntax_variants() {
        let s = parse_spec("2*H(2X+4Y) <= 0").unwrap();
        assert_eq!(s.rows, vec![row(2.0, &[1, 2])]);
        let t = parse_spec("1/2 h(U + U') + 0.5H(U) - H(U - 1*U') ≤ 0\niid: {U, U'}").unwrap();
        assert_eq!(t.rows[0].alpha, 0.5);
        assert_eq!(t.rows[2].coeffs, vec![1, -1]);
        assert_eq!(t.iid_classes, vec![vec![0, 1]]);
        let u = parse_spec("# comment\n-H(-X)\n  + H(X) <= 0 # trailing\n").unwrap();
        assert_eq!(u.rows, vec![row(-1.0, &[-1]), row(1.0, &[1])]);
    }

    #[test]
    fn error_positions() {
        let cases = [
            ("H(X+Y) - H(X <= 0", (1, 14)),
            ("H(X+Y) - H() <= 0", (1, 12)),
            ("H(1.5X) <= 0", (1, 3)),
            ("H(X) + G(Y) <= 0", (1, 8)),
            ("H(X) <= 1", (1, 9)),
            ("H(X)\n  - H(Y) $ <= 0", (2, 10)),
            ("H(X) <= 0\niid: {X, Z}", (2, 10)),
            ("H(X - X) <= 0", (1, 1)),
        ];
        for (text, want) in cases {
            match parse_spec(text) {
                Err(Error::Parse { line, col, .. }) => assert_eq!((line, col), want, "{text}"),
                Err(Error::InvalidArgument(_)) if want == (1, 1) => {}
                other => panic!("{text}: {other:?}"),
            }
        }
        assert!(parse_spec("H(X)").is_err());
        assert!(parse_form("H(X) - H(Y)").is_ok());
    }

    #[test]
    fn display_round_trips() {
        for text in [
            "H(X+Y) - 3*H(X-Y) + H(X) + H(Y) <= 0",
            "0.5*H(U+U') + 0.5*H(U) - H(U-U') <= 0\niid: {U, U'}",
            "-2.25*H(3*A-2*B+C) + H(B) <= 0",
        ] {
            let s = parse_spec(text).unwrap();
            assert_eq!(s.to_string(), text);
            assert_eq!(parse_spec(&s.to_string()).unwrap(), s);
        }
    }
}
