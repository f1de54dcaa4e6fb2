//! Run artifacts: every output carries the tool version, seed and a hash of
//! the run configuration.

use crate::error::Result;
use serde::Serialize;
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

#[derive(Clone, Copy, Debug, PartialEq, Eq, clap::ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

#[derive(Clone, Debug, PartialEq)]
pub enum Cell {
    Int(i128),
    Float(f64),
    Text(String),
}

impl Cell {
    fn render(&self) -> String {
        match self {
            Cell::Int(x) => x.to_string(),
            Cell::Float(x) => format!("{x:?}"),
            Cell::Text(s) => s.clone(),
        }
    }

    fn json(&self) -> Value {
        match self {
            Cell::Int(x) => i64::try_from(*x).map(Value::from).unwrap_or_else(|_| Value::from(x.to_string())),
            Cell::Float(x) => json!(x),
            Cell::Text(s) => json!(s),
        }
    }
}

impl From<f64> for Cell {
    fn from(x: f64) -> Self {
        Cell::Float(x)
    }
}

impl From<i64> for Cell {
    fn from(x: i64) -> Self {
        Cell::Int(x as i128)
    }
}

impl From<u32> for Cell {
    fn from(x: u32) -> Self {
        Cell::Int(x as i128)
    }
}

impl From<usize> for Cell {
    fn from(x: usize) -> Self {
        Cell::Int(x as i128)
    }
}

impl From<u128> for Cell {
    fn from(x: u128) -> Self {
        Cell::Int(x as i128)
    }
}

impl From<String> for Cell {
    fn from(s: String) -> Self {
        Cell::Text(s)
    }
}

impl From<&str> for Cell {
    fn from(s: &str) -> Self {
        Cell::Text(s.to_string())
    }
}

/// Named, documented columns and their rows.
#[derive(Clone, Debug, Default)]
pub struct Table {
    pub columns: Vec<(&'static str, &'static str)>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new(columns: &[(&'static str, &'static str)]) -> Self {
        Table { columns: columns.to_vec(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    pub fn to_json(&self) -> Value {
        json!({
            "columns": self.columns.iter().map(|c| c.0).collect::<Vec<_>>(),
            "rows": self.rows.iter().map(|r| r.iter().map(Cell::json).collect::<Vec<_>>()).collect::<Vec<_>>(),
        })
    }
}

/// What a command produced.
pub struct Report {
    pub table: Table,
    /// Structured result; defaults to the table.
    pub json: Option<Value>,
    pub default_format: Format,
    /// Extra files `(name, contents)` written next to the main artifact.
    pub files: Vec<(String, String)>,
    pub exit: i32,
}

impl Report {
    pub fn table(table: Table) -> Self {
        Report { table, json: None, default_format: Format::Csv, files: Vec::new(), exit: 0 }
    }
}

/// Identity of a run: the command, its parameters and the seed.
#[derive(Clone, Debug, Serialize)]
pub struct RunConfig {
    pub command: String,
    pub seed: u64,
    pub params: Value,
}

impl RunConfig {
    pub fn hash(&self) -> String {
        let canonical = serde_json::to_string(self).expect("config serializes");
        hex::encode(Sha256::digest(canonical.as_bytes()))
    }
}

pub fn render(config: &RunConfig, report: &Report, format: Format) -> Result<String> {
    let hash = config.hash();
    match format {
        Format::Json => {
            let result = report.json.clone().unwrap_or_else(|| report.table.to_json());
            let doc = json!({
                "tool": "entropylab",
                "version": crate::VERSION,
                "seed": config.seed,
                "config_hash": hash,
                "config": config,
                "result": result,
            });
            let mut s = serde_json::to_string_pretty(&doc)?;
            s.push('\n');
            Ok(s)
        }
        Format::Csv => {
            let mut s = format!("# entropylab {} seed={} config={}\n# command: {}\n", crate::VERSION, config.seed, hash, config.command);
            for (name, doc) in &report.table.columns {
                s.push_str(&format!("# {name}: {doc}\n"));
            }
            let mut w = csv::Writer::from_writer(Vec::new());
            let csv_err = |e: csv::Error| crate::Error::Io(std::io::Error::other(e));
            w.write_record(report.table.columns.iter().map(|c| c.0)).map_err(csv_err)?;
            for row in &report.table.rows {
                w.write_record(row.iter().map(Cell::render)).map_err(csv_err)?;
            }
            let bytes = w.into_inner().map_err(|e| crate::Error::Io(std::io::Error::other(e.to_string())))?;
            s.push_str(&String::from_utf8(bytes).expect("csv output is utf-8"));
            Ok(s)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> (RunConfig, Report) {
        let mut t = Table::new(&[("k", "level"), ("gap", "value, in nats")]);
        t.push(vec![1u32.into(), 0.5.into()]);
        t.push(vec![2u32.into(), Cell::Float(-1e-17)]);
        (RunConfig { command: "lemma".into(), seed: 9, params: json!({"a": 1}) }, Report::table(t))
    }

    #[test]
    fn csv_layout() {
        let (c, r) = sample();
        let s = render(&c, &r, Format::Csv).unwrap();
        let lines: Vec<&str> = s.lines().collect();
        assert!(lines[0].starts_with("# entropylab ") && lines[0].contains("seed=9"));
        assert_eq!(&lines[lines.len() - 3..], &["k,gap", "1,0.5", "2,-1e-17"]);
        assert_eq!(lines[2], "# k: level");
    }

    #[test]
    fn json_layout_and_hash() {
        let (c, r) = sample();
        let v: Value = serde_json::from_str(&render(&c, &r, Format::Json).unwrap()).unwrap();
        assert_eq!(v["seed"], 9);
        assert_eq!(v["result"]["rows"][0][1], 0.5);
        assert_eq!(v["config_hash"].as_str().unwrap().len(), 64);
        let other = RunConfig { seed: 10, ..c.clone() };
        assert_ne!(c.hash(), other.hash());
        assert_eq!(c.hash(), c.clone().hash());
    }
}
