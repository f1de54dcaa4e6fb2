use super::output::{Cell, Format, Report, RunConfig, Table};
use super::sources::{
    density_source, lattice_source, parse_dyadic_list, parse_list, parse_matrix, parse_unsigned_list, spec_source,
    split_assignment,
};
use super::{
    CheckArgs, Command, EmbedArgs, LemmaArgs, LemmaName, RatioArgs, RuzsaArgs, SearchArgs, SearchKnobs, EXIT_OK,
    EXIT_VIOLATED,
};
use crate::constructions::{default_base, embed, ruzsa_ratio, smoothing_gap};
use crate::engine::{
    builtin, evaluate_continuous, evaluate_discrete, extremal_ratio, parse_form, search_violation, EvalReport,
    InequalitySpec, SearchConfig, Side, Witness,
};
use crate::error::{Error, Result};
use crate::grid::{cyclic_commutation_gap, quantization_commutation_gap, renyi_gap, renyi_gap_against, GridDensity};
use crate::info::{int_frac_mutual_information, total_variation_density};
use crate::lattice::{format::write_lattice, linear_combination, LatticePmf};
use crate::nats::Nats;
use crate::par::Exec;
use serde::Serialize;
use serde_json::json;
use std::collections::BTreeMap;
use std::f64::consts::LN_2;
use std::path::{Path, PathBuf};

pub(super) fn dispatch(command: &Command, seed: u64, exec: Exec) -> Result<(RunConfig, Report)> {
    fn config<T: Serialize>(name: &str, seed: u64, args: &T) -> Result<RunConfig> {
        Ok(RunConfig { command: name.to_string(), seed, params: serde_json::to_value(args)? })
    }
    match command {
        Command::Check(a) => Ok((config("check", seed, a)?, check(a)?)),
        Command::Lemma(a) => Ok((config("lemma", seed, a)?, lemma(a)?)),
        Command::Search(a) => Ok((config("search", seed, a)?, search(a, seed, exec)?)),
        Command::Ratio(a) => Ok((config("ratio", seed, a)?, ratio(a, seed, exec)?)),
        Command::Ruzsa(a) => Ok((config("ruzsa", seed, a)?, ruzsa(a, exec)?)),
        Command::Embed(a) => Ok((config("embed", seed, a)?, embed_cmd(a)?)),
    }
}

fn nats_cell(x: Nats) -> Cell {
    Cell::Float(x.value)
}

fn read_text(path: &Path) -> Result<String> {
    std::fs::read_to_string(path)
        .map_err(|e| Error::Io(std::io::Error::new(e.kind(), format!("{}: {e}", path.display()))))
}

// ---- check ----

fn check(a: &CheckArgs) -> Result<Report> {
    let mut spec_path: Option<PathBuf> = None;
    let mut sources: BTreeMap<String, String> = BTreeMap::new();
    for arg in &a.args {
        if arg.contains('=') {
            let (name, src) = split_assignment(arg)?;
            if sources.insert(name.clone(), src).is_some() {
                return Err(Error::invalid(format!("`{name}` assigned twice")));
            }
        } else if spec_path.replace(PathBuf::from(arg)).is_some() {
            return Err(Error::invalid("more than one spec file given"));
        }
    }
    let spec = match (&spec_path, &a.builtin, &a.witness_dir) {
        (None, None, Some(dir)) => crate::engine::parse_spec(&read_text(&dir.join("spec.txt"))?)?,
        (p, b, _) => spec_source(p.as_deref(), b.as_deref())?,
    };
    for name in sources.keys() {
        if spec.variable_index(name).is_none() {
            return Err(Error::invalid(format!("`{name}` does not occur in the inequality")));
        }
    }
    if let Some(dir) = &a.witness_dir {
        let ext = match a.side.into() {
            Side::Discrete => "pmf",
            Side::Continuous => "grid",
        };
        for v in &spec.variables {
            let path = dir.join(format!("{v}.{ext}"));
            if !sources.contains_key(v) && path.is_file() {
                sources.insert(v.clone(), path.to_string_lossy().into_owned());
            }
        }
    }
    let report: EvalReport = match a.side.into() {
        Side::Discrete => {
            let laws = sources.iter().map(|(k, s)| Ok((k.clone(), lattice_source(s)?))).collect::<Result<_>>()?;
            evaluate_discrete(&spec, &laws)?
        }
        Side::Continuous => {
            let laws = sources.iter().map(|(k, s)| Ok((k.clone(), density_source(s, a.res)?))).collect::<Result<_>>()?;
            evaluate_continuous(&spec, &laws)?
        }
    };
    let mut table = Table::new(&[
        ("quantity", "entropy term, weighted sum, or slack (minus the weighted sum)"),
        ("alpha", "weight of the term"),
        ("value", "nats"),
        ("err", "absolute error bound, nats"),
    ]);
    for (i, row) in report.rows.iter().enumerate() {
        table.push(vec![spec.term_label(i).into(), row.alpha.into(), nats_cell(row.entropy), row.entropy.err.into()]);
    }
    table.push(vec!["weighted_sum".into(), "".into(), nats_cell(report.weighted_sum), report.weighted_sum.err.into()]);
    table.push(vec!["slack".into(), "".into(), report.slack.into(), report.weighted_sum.err.into()]);
    let exit = if report.satisfied { EXIT_OK } else { EXIT_VIOLATED };
    let json = json!({ "inequality": spec.to_string(), "report": report });
    Ok(Report { table, json: Some(json), default_format: Format::Json, files: Vec::new(), exit })
}

// ---- lemma ----

fn levels(k: &Option<String>, default: &str) -> Result<Vec<u32>> {
    parse_unsigned_list(k.as_deref().unwrap_or(default))
}

fn coeffs(a: &LemmaArgs) -> Result<Vec<i64>> {
    parse_list(a.coeffs.as_deref().unwrap_or("1,1"))
}

fn iid(f: &GridDensity, n: usize) -> Vec<&GridDensity> {
    vec![f; n]
}

fn lemma(a: &LemmaArgs) -> Result<Report> {
    let density = |default: &str, res: u32| density_source(a.density.as_deref().unwrap_or(default), a.res.unwrap_or(res));
    let table = match a.name {
        LemmaName::Renyi => {
            let f = density("uniform", 14)?;
            let h = a.h.map(Nats::exact).unwrap_or_else(|| f.differential_entropy());
            let mut t = Table::new(&[
                ("k", "quantization level"),
                ("entropy", "H([X]_k), nats"),
                ("expansion", "d k ln 2 + h(X), nats"),
                ("gap", "entropy minus expansion"),
            ]);
            for k in levels(&a.k, "1..12")? {
                let gap = if a.h.is_some() { renyi_gap_against(&f, k, h)? } else { renyi_gap(&f, k)? };
                let big_h = f.quantize(k)?.entropy();
                t.push(vec![k.into(), nats_cell(big_h), (f.dim() as f64 * k as f64 * LN_2 + h.value).into(), nats_cell(gap)]);
            }
            t
        }
        LemmaName::Quantgap => {
            let f = density("uniform", 10)?;
            let c = coeffs(a)?;
            let mut t = Table::new(&[("k", "quantization level"), ("gap", "H([sum a_i X_i]_k) - H(sum a_i [X_i]_k), nats")]);
            for k in levels(&a.k, "0..10")? {
                t.push(vec![k.into(), nats_cell(quantization_commutation_gap(&iid(&f, c.len()), &c, k)?)]);
            }
            t
        }
        LemmaName::Truncate => {
            let f = density("gaussian:1:16", 6)?;
            let h = f.differential_entropy();
            let mut t = Table::new(&[
                ("n", "truncation level, box [-n, n]^d"),
                ("tv", "total variation to the truncated law"),
                ("entropy", "h of the truncated law, nats"),
                ("gap", "h(truncated) - h(X), nats"),
            ]);
            for n in parse_dyadic_list(a.n.as_deref().unwrap_or("1,2,4,8"))? {
                let g = f.truncate(n)?;
                let hg = g.differential_entropy();
                t.push(vec![n.to_string().into(), total_variation_density(&f, &g)?.value().into(), nats_cell(hg), nats_cell(hg - h)]);
            }
            t
        }
        LemmaName::Intfrac => {
            let f = density("uniform", 12)?;
            let mut t = Table::new(&[("k", "quantization level"), ("mutual_information", "I(floor(2^k X); {2^k X}), nats")]);
            for k in levels(&a.k, "0..8")? {
                t.push(vec![k.into(), nats_cell(int_frac_mutual_information(&f, k)?)]);
            }
            t
        }
        LemmaName::Smoothing => {
            let z = density("gaussian:1", 8)?;
            let u: LatticePmf = lattice_source(a.u.as_deref().unwrap_or("uniform:0:1"))?;
            let mut t = Table::new(&[("eps", "noise scale"), ("gap", "h(U + eps Z) - h(Z) - d ln eps - H(U), nats")]);
            for eps in parse_dyadic_list(a.eps.as_deref().unwrap_or("2^-1,2^-2,2^-3,2^-4,2^-5,2^-6,2^-7"))? {
                t.push(vec![eps.to_string().into(), nats_cell(smoothing_gap(&u, &z, eps)?)]);
            }
            t
        }
        LemmaName::Torus => {
            let f = density("uniform", 12)?;
            let h = f.differential_entropy();
            let mut t = Table::new(&[
                ("k", "angle bits"),
                ("entropy", "H of the angle mod 2^k, nats"),
                ("k_ln2", "d k ln 2"),
                ("gap", "entropy - d k ln 2 - h(X), nats"),
            ]);
            for k in levels(&a.k, "1..8")? {
                let big_h = f.torus_quantize(k)?.entropy();
                let base = f.dim() as f64 * k as f64 * LN_2;
                t.push(vec![k.into(), nats_cell(big_h), base.into(), (big_h.value - base - h.value).into()]);
            }
            t
        }
        LemmaName::Cyclicgap => {
            let f = density("power:1", 14)?;
            let c = coeffs(a)?;
            let mut t = Table::new(&[("k", "angle bits"), ("gap", "H(A_k) - H(B_k) with both sides mod 2^k, nats")]);
            for k in levels(&a.k, "2..8")? {
                t.push(vec![k.into(), nats_cell(cyclic_commutation_gap(&iid(&f, c.len()), &c, k)?)]);
            }
            t
        }
    };
    Ok(Report::table(table))
}

// ---- search / ratio ----

fn search_config(k: &SearchKnobs, seed: u64, exec: Exec) -> SearchConfig {
    SearchConfig {
        side: k.side.into(),
        seed,
        restarts: k.restarts,
        max_support: k.max_support,
        iterations: k.iterations,
        resolution: k.res,
        exec,
    }
}

fn witness_files(prefix: &str, ws: &[Witness]) -> Vec<(String, String)> {
    ws.iter().map(|w| (format!("{prefix}{}.{}", w.variables[0], w.format), w.text.clone())).collect()
}

fn search(a: &SearchArgs, seed: u64, exec: Exec) -> Result<Report> {
    let spec = spec_source(a.spec.as_deref(), a.builtin.as_deref())?;
    let config = search_config(&a.knobs, seed, exec);
    let result = search_violation(&spec, &config)?;
    let mut files = vec![("spec.txt".to_string(), format!("{spec}\n"))];
    files.extend(witness_files("", &result.witnesses));
    let mut table = Table::new(&[
        ("step", "mass transfer step"),
        ("iteration", "proposal index within the step"),
        ("kind", "accepted move"),
        ("objective", "weighted entropy sum of the best restart, nats"),
    ]);
    for e in &result.trace {
        table.push(vec![e.step.into(), e.iteration.into(), e.kind.into(), e.objective.into()]);
    }
    let violated = result.best_objective > config.side.tolerance();
    let json = json!({
        "inequality": spec.to_string(),
        "violated": violated,
        "files": files.iter().map(|f| &f.0).collect::<Vec<_>>(),
        "search": result,
    });
    Ok(Report {
        table,
        json: Some(json),
        default_format: Format::Json,
        files,
        exit: if violated { EXIT_VIOLATED } else { EXIT_OK },
    })
}

fn ratio(a: &RatioArgs, seed: u64, exec: Exec) -> Result<Report> {
    let (num, den): (InequalitySpec, InequalitySpec) = match (&a.name, &a.num, &a.den) {
        (_, Some(n), Some(d)) if a.name.is_none() => (parse_form(&read_text(n)?)?, parse_form(&read_text(d)?)?),
        (None, None, None) => builtin::doubling_ratio(),
        (Some(name), None, None) if name == "doubling" => builtin::doubling_ratio(),
        (Some(name), None, None) => return Err(Error::invalid(format!("unknown ratio `{name}`; known: doubling"))),
        _ => return Err(Error::invalid("give a ratio name or --num/--den, not both")),
    };
    let config = search_config(&a.knobs, seed, exec);
    let result = extremal_ratio(&num, &den, &config)?;
    let mut files = witness_files("min_", &result.min.witnesses);
    files.extend(witness_files("max_", &result.max.witnesses));
    let mut table = Table::new(&[
        ("extremum", "min or max"),
        ("ratio", "numerator / denominator"),
        ("numerator", "nats"),
        ("denominator", "nats"),
        ("restart", "restart that found it"),
    ]);
    for (name, e) in [("min", &result.min), ("max", &result.max)] {
        table.push(vec![name.into(), e.ratio.into(), e.numerator.into(), e.denominator.into(), e.restart.into()]);
    }
    let json = json!({
        "numerator": num.to_string(),
        "denominator": den.to_string(),
        "files": files.iter().map(|f| &f.0).collect::<Vec<_>>(),
        "ratio": result,
    });
    Ok(Report { table, json: Some(json), default_format: Format::Json, files, exit: EXIT_OK })
}

// ---- ruzsa ----

fn ruzsa(a: &RuzsaArgs, exec: Exec) -> Result<Report> {
    let mut t = Table::new(&[
        ("n", "simplex dimension"),
        ("L", "scale"),
        ("A", "|A|"),
        ("sum", "|A+A|"),
        ("difference", "|A-A|"),
        ("ratio", "ln(|A-A|/|A|) / ln(|A+A|/|A|)"),
        ("method", "enumerate or count"),
    ]);
    for n in parse_unsigned_list(&a.n)? {
        for l in parse_unsigned_list(&a.l)? {
            let r = ruzsa_ratio(n as usize, l, exec)?;
            let method = if r.enumerated { "enumerate" } else { "count" };
            t.push(vec![n.into(), l.into(), r.a.into(), r.sum.into(), r.difference.into(), r.ratio.into(), method.into()]);
        }
    }
    Ok(Report::table(t))
}

// ---- embed ----

fn embed_cmd(a: &EmbedArgs) -> Result<Report> {
    let mut names = Vec::new();
    let mut pmfs = Vec::new();
    for arg in &a.assignments {
        let (name, src) = split_assignment(arg)?;
        if names.contains(&name) {
            return Err(Error::invalid(format!("`{name}` assigned twice")));
        }
        names.push(name);
        pmfs.push(lattice_source(&src)?);
    }
    let matrix = parse_matrix(&a.matrix)?;
    let base = match a.base {
        Some(b) => b,
        None => default_base(&pmfs, &matrix)?,
    };
    let embedded = embed(&pmfs, &matrix, a.k, Some(base))?;
    let mut t = Table::new(&[
        ("row", "matrix row"),
        ("coefficients", "row entries"),
        ("base", "embedding base M"),
        ("entropy_before", "H of the row combination, nats"),
        ("entropy_after", "H of the embedded row combination, nats"),
        ("scale", "entropy_after / entropy_before"),
    ]);
    for (i, row) in matrix.iter().enumerate() {
        let label: Vec<String> = row.iter().map(i64::to_string).collect();
        let (before, after) = if row.iter().all(|&x| x == 0) {
            (0.0, 0.0)
        } else {
            (linear_combination(&pmfs, row)?.entropy().value, linear_combination(&embedded, row)?.entropy().value)
        };
        let scale = if before > 0.0 { after / before } else { f64::NAN };
        t.push(vec![i.into(), label.join(" ").into(), base.into(), before.into(), after.into(), scale.into()]);
    }
    let files = names.iter().zip(&embedded).map(|(n, p)| (format!("{n}.pmf"), write_lattice(p))).collect();
    let mut report = Report::table(t);
    report.files = files;
    Ok(report)
}

