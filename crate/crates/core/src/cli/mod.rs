//! The `entropylab` command line.
//!
//! Exit codes: 0 success or inequality satisfied, 1 inequality violated,
//! 2 usage or parse error, 3 resource bound exceeded.

mod commands;
pub mod output;
pub mod sources;

use crate::engine::Side;
use crate::error::Error;
use crate::par::{self, Exec};
use clap::{Args, Parser, Subcommand, ValueEnum};
use output::Format;
use serde::Serialize;
use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;

pub const EXIT_OK: i32 = 0;
pub const EXIT_VIOLATED: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_RESOURCE: i32 = 3;

/// Environment variable capping the worker thread count.
pub const THREADS_ENV: &str = "ENTROPYLAB_THREADS";

#[derive(Debug, Parser)]
#[command(name = "entropylab", version, about = "Entropy inequalities for sums of independent random variables")]
pub struct Cli {
    #[command(flatten)]
    pub common: Common,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct Common {
    /// Seed for every random choice; recorded in all outputs.
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    /// Output file, or a directory for commands that also write witnesses.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[arg(long, global = true, value_enum)]
    pub format: Option<Format>,
    /// Run data-parallel work on the calling thread.
    #[arg(long, global = true)]
    pub sequential: bool,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum SideArg {
    #[default]
    Discrete,
    Continuous,
}

impl From<SideArg> for Side {
    fn from(s: SideArg) -> Side {
        match s {
            SideArg::Discrete => Side::Discrete,
            SideArg::Continuous => Side::Continuous,
        }
    }
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Evaluate an inequality on given laws.
    Check(CheckArgs),
    /// Tabulate a quantization or smoothing quantity over a parameter range.
    Lemma(LemmaArgs),
    /// Look for laws violating an inequality.
    Search(SearchArgs),
    /// Bracket a ratio of two entropy forms over iid laws.
    Ratio(RatioArgs),
    /// Sumset ratios of quantized simplices.
    #[command(alias = "ruzsa-table")]
    Ruzsa(RuzsaArgs),
    /// Relabel k-fold products so row entropies scale by k.
    Embed(EmbedArgs),
}

#[derive(Debug, Args, Serialize)]
pub struct CheckArgs {
    /// Spec file followed by NAME=SOURCE assignments.
    pub args: Vec<String>,
    #[arg(long)]
    pub builtin: Option<String>,
    #[arg(long, value_enum, default_value_t)]
    pub side: SideArg,
    /// Resolution of generated densities.
    #[arg(long, default_value_t = 8)]
    pub res: u32,
    /// Directory written by `search`; supplies the inequality and any unassigned laws.
    #[arg(long)]
    pub witness_dir: Option<PathBuf>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum LemmaName {
    Renyi,
    Quantgap,
    Truncate,
    Intfrac,
    Smoothing,
    Torus,
    Cyclicgap,
}

#[derive(Debug, Args, Serialize)]
pub struct LemmaArgs {
    #[arg(value_enum)]
    pub name: LemmaName,
    /// Quantization levels, e.g. `1..12` or `0..10:2`.
    #[arg(long)]
    pub k: Option<String>,
    /// Noise scales, e.g. `2^-3,2^-7`.
    #[arg(long)]
    pub eps: Option<String>,
    /// Truncation levels.
    #[arg(long)]
    pub n: Option<String>,
    /// Density source (`uniform`, `triangular`, `power:P`, `gaussian:SIGMA[:N]`, or a grid file).
    #[arg(long)]
    pub density: Option<String>,
    /// Lattice law for `smoothing` (`uniform:A:B`, `point:X`, or a pmf file).
    #[arg(long)]
    pub u: Option<String>,
    /// Integer coefficients for the commutation gaps.
    #[arg(long, allow_hyphen_values = true)]
    pub coeffs: Option<String>,
    /// Resolution of generated densities.
    #[arg(long)]
    pub res: Option<u32>,
    /// Reference differential entropy for `renyi`.
    #[arg(long, allow_hyphen_values = true)]
    pub h: Option<f64>,
}

#[derive(Debug, Args, Serialize)]
pub struct SearchKnobs {
    #[arg(long, value_enum, default_value_t)]
    pub side: SideArg,
    #[arg(long, default_value_t = 32)]
    pub restarts: usize,
    #[arg(long, default_value_t = 8)]
    pub max_support: usize,
    #[arg(long, default_value_t = 200)]
    pub iterations: usize,
    /// Cell resolution of continuous candidates.
    #[arg(long, default_value_t = 4)]
    pub res: u32,
}

#[derive(Debug, Args, Serialize)]
pub struct SearchArgs {
    /// Spec file.
    pub spec: Option<PathBuf>,
    #[arg(long)]
    pub builtin: Option<String>,
    #[command(flatten)]
    pub knobs: SearchKnobs,
}

#[derive(Debug, Args, Serialize)]
pub struct RatioArgs {
    /// Built-in ratio; only `doubling` exists.
    pub name: Option<String>,
    /// Numerator form file.
    #[arg(long, requires = "den")]
    pub num: Option<PathBuf>,
    /// Denominator form file.
    #[arg(long, requires = "num")]
    pub den: Option<PathBuf>,
    #[command(flatten)]
    pub knobs: SearchKnobs,
}

#[derive(Debug, Args, Serialize)]
pub struct RuzsaArgs {
    #[arg(long, default_value = "2")]
    pub n: String,
    #[arg(long = "L", default_value = "128")]
    pub l: String,
}

#[derive(Debug, Args, Serialize)]
pub struct EmbedArgs {
    /// NAME=SOURCE assignments, in matrix column order.
    #[arg(required = true)]
    pub assignments: Vec<String>,
    /// Rows separated by `;`, entries by `,`.
    #[arg(long, allow_hyphen_values = true)]
    pub matrix: String,
    #[arg(long, default_value_t = 2)]
    pub k: usize,
    #[arg(long)]
    pub base: Option<i64>,
}

pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::ResourceBound(_) | Error::Overflow(_) | Error::ResolutionExceeded { .. } | Error::GridTooCoarse(_) => {
            EXIT_RESOURCE
        }
        _ => EXIT_USAGE,
    }
}

fn threads_from_env() -> Option<usize> {
    let raw = std::env::var(THREADS_ENV).ok()?;
    match raw.trim().parse::<usize>() {
        Ok(n) if n > 0 => Some(n),
        _ => {
            log::warn!("ignoring {THREADS_ENV}={raw}");
            None
        }
    }
}

/// Parse arguments, run, write the artifact, and return the exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    par::configure_threads(threads_from_env());
    let stdout = std::io::stdout();
    match execute(cli, &mut stdout.lock()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

/// Run a parsed command, writing the main artifact to `--out` or `stdout`.
pub fn execute(cli: Cli, stdout: &mut dyn Write) -> crate::Result<i32> {
    let exec = if cli.common.sequential { Exec::Sequential } else { Exec::Parallel };
    let (config, report) = commands::dispatch(&cli.command, cli.common.seed, exec)?;
    let format = cli.common.format.unwrap_or(report.default_format);
    let text = output::render(&config, &report, format)?;
    match &cli.common.out {
        None => stdout.write_all(text.as_bytes())?,
        Some(dir) if !report.files.is_empty() => {
            std::fs::create_dir_all(dir)?;
            let main = match format {
                Format::Json => "result.json",
                Format::Csv => "result.csv",
            };
            std::fs::write(dir.join(main), &text)?;
            for (name, contents) in &report.files {
                std::fs::write(dir.join(name), contents)?;
            }
        }
        Some(path) => std::fs::write(path, &text)?,
    }
    Ok(report.exit)
}
