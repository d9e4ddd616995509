//! Command-line front end: `analyze`, `construct`, `check`, `reduce`, `moduli`, `oracle`.

use std::fmt::Write as _;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use crate::constructor::{check_closed, construct_form};
use crate::io;
use crate::jordan::JordanSpec;
use crate::linalg::RationalMatrix;
use crate::oracle::{errata_report, DEFAULT_TRIALS};
use crate::rank::{exists_presymplectic, max_rank_complex, max_rank_real, symplectic_admissible, Backend};
use crate::reducer::{moduli_class_of, reduce_with, ReduceOptions};
use crate::structured::StructuredSolution;
use crate::Error;

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Pretty,
}

#[derive(Debug, Parser)]
#[command(name = "closedforms", version, about = "Closed 2-forms on almost abelian Lie algebras")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    #[arg(long, global = true, value_enum, default_value = "json")]
    pub format: Format,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Dimensions, maximal ranks, existence table and symplectic verdict.
    Analyze {
        spec: PathBuf,
        /// Add the oracle backend column.
        #[arg(long)]
        oracle: bool,
    },
    /// Emit a closed 2-form of the requested rank.
    Construct {
        spec: PathBuf,
        #[arg(long)]
        rank: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Verify closedness of a form.
    Check { spec: PathBuf, form: PathBuf },
    /// Reduce the principal minor of a form to its canonical permutation form.
    Reduce {
        spec: PathBuf,
        form: PathBuf,
        #[arg(long, default_value_t = crate::linalg::DEFAULT_TOL)]
        tol: f64,
    },
    /// Permutation class of a symplectic form.
    Moduli { spec: PathBuf, form: PathBuf },
    /// Formula against brute force for one spec or a JSON array of specs.
    Oracle {
        spec: PathBuf,
        #[arg(long, default_value_t = DEFAULT_TRIALS)]
        trials: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

fn read(path: &Path) -> Result<String, Error> {
    std::fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))
}

fn with_path(path: &Path, e: Error) -> Error {
    match e {
        Error::Parse(m) => Error::Parse(format!("{}: {m}", path.display())),
        other => other,
    }
}

fn load_spec(path: &Path) -> Result<JordanSpec, Error> {
    io::spec_from_json(&read(path)?).map_err(|e| with_path(path, e))
}

fn load_specs(path: &Path) -> Result<Vec<JordanSpec>, Error> {
    let text = read(path)?;
    let v: Value = serde_json::from_str(&text)
        .map_err(|e| Error::Parse(format!("{}: line {}, column {}: {e}", path.display(), e.line(), e.column())))?;
    match v {
        Value::Array(items) => items
            .iter()
            .enumerate()
            .map(|(k, s)| io::spec_from_value(s).map_err(|e| with_path(path, prefix(k, e))))
            .collect(),
        other => Ok(vec![io::spec_from_value(&other).map_err(|e| with_path(path, e))?]),
    }
}

fn prefix(k: usize, e: Error) -> Error {
    match e {
        Error::Parse(m) => Error::Parse(format!("[{k}]: {m}")),
        Error::Invalid(m) => Error::Invalid(format!("[{k}]: {m}")),
        other => other,
    }
}

fn load_form(path: &Path, spec: &JordanSpec) -> Result<RationalMatrix, Error> {
    let f = io::form_from_json(&read(path)?).map_err(|e| with_path(path, e))?;
    if f.dim != spec.d() {
        return Err(Error::DimensionMismatch(format!("form has dim {} but the spec has D = {}", f.dim, spec.d())));
    }
    if !f.spec_hash.is_empty() && f.spec_hash != io::spec_hash(spec) {
        return Err(Error::Invalid("form was written for a different spec (spec_hash mismatch)".into()));
    }
    Ok(f.matrix)
}

fn analyze(spec: &JordanSpec, oracle: bool) -> Result<Value, Error> {
    let d = spec.d();
    let mut table = Vec::new();
    for r in (0..=d).step_by(2) {
        let mut row = json!({"rank": r, "formula": exists_presymplectic(spec, r, Backend::Formula)?});
        if oracle {
            row["oracle"] = match exists_presymplectic(spec, r, Backend::Oracle) {
                Ok(b) => json!(b),
                Err(Error::Guard(_)) => Value::Null,
                Err(e) => return Err(e),
            };
        }
        table.push(row);
    }
    let symplectic = if d.is_multiple_of(2) {
        let (ok, clause) = symplectic_admissible(spec)?;
        json!({"admissible": ok, "clause": clause.code()})
    } else {
        Value::Null
    };
    Ok(json!({
        "spec": io::spec_to_json(spec),
        "N": spec.n(),
        "D": d,
        "max_rank_real": max_rank_real(spec),
        "max_rank_complex": max_rank_complex(spec),
        "existence": table,
        "symplectic": symplectic,
    }))
}

fn pretty_analyze(v: &Value) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "N = {}, D = {}", v["N"], v["D"]);
    let _ = writeln!(s, "max rank (real part)    = {}", v["max_rank_real"]);
    let _ = writeln!(s, "max rank (complex part) = {}", v["max_rank_complex"]);
    let with_oracle = v["existence"][0].get("oracle").is_some();
    let _ = writeln!(s, "{:>6}  {:>8}{}", "rank", "formula", if with_oracle { "    oracle" } else { "" });
    for row in v["existence"].as_array().into_iter().flatten() {
        let mark = |b: &Value| match b.as_bool() {
            Some(true) => "yes",
            Some(false) => "no",
            None => "n/a",
        };
        let _ = write!(s, "{:>6}  {:>8}", row["rank"].as_u64().unwrap_or(0), mark(&row["formula"]));
        if with_oracle {
            let _ = write!(s, "  {:>8}", mark(&row["oracle"]));
        }
        s.push('\n');
    }
    match &v["symplectic"] {
        Value::Null => s.push_str("symplectic: D is odd\n"),
        x => {
            let verdict = if x["admissible"].as_bool() == Some(true) { "admissible" } else { "not admissible" };
            let _ = writeln!(s, "symplectic: {verdict} (clause {})", x["clause"].as_str().unwrap_or("?"));
        }
    }
    s
}

fn summary(v: &Value, keys: &[&str]) -> String {
    keys.iter().filter_map(|k| v.get(*k).map(|x| format!("{k}: {x}\n"))).collect()
}

/// Runs one command and returns the text to print.
pub fn execute(cli: &Cli) -> Result<String, Error> {
    let pretty = cli.format == Format::Pretty;
    let value = match &cli.command {
        Command::Analyze { spec, oracle } => {
            let v = analyze(&load_spec(spec)?, *oracle)?;
            if pretty {
                return Ok(pretty_analyze(&v));
            }
            v
        }
        Command::Construct { spec, rank, seed } => {
            let spec = load_spec(spec)?;
            let form = construct_form(&spec, *rank, *seed)?;
            let check = check_closed(&form.matrix, &spec)?;
            if !check.closed || form.matrix.rank() != *rank {
                return Err(Error::Unreachable(format!("constructed form failed validation at rank {rank}")));
            }
            io::lifted_to_json(&form, &spec)
        }
        Command::Check { spec, form } => {
            let spec = load_spec(spec)?;
            let m = load_form(form, &spec)?;
            let check = check_closed(&m, &spec)?;
            if !check.closed {
                return Err(Error::Rejected(format!(
                    "form is not closed: {} triple violations",
                    check.triple_violations.len()
                )));
            }
            let mut v = io::check_to_json(&check);
            v["rank"] = json!(m.rank());
            v
        }
        Command::Reduce { spec, form, tol } => {
            let spec = load_spec(spec)?;
            let m = load_form(form, &spec)?;
            if !check_closed(&m, &spec)?.closed {
                return Err(Error::Rejected("form is not closed".into()));
            }
            let n = spec.n();
            let sol = StructuredSolution::new(m.block(1, 1, n, n), &spec)?;
            let opts = ReduceOptions { tol: *tol, ..ReduceOptions::default() };
            let (res, trace) = reduce_with(&sol, &spec, opts)?;
            json!({
                "rank": res.rank,
                "permutation": res.permutation.images(),
                "class": io::canonical_to_json(&res),
                "trace": io::trace_to_json(&trace),
                "residual": io::float_text(res.residual),
            })
        }
        Command::Moduli { spec, form } => {
            let spec = load_spec(spec)?;
            let m = load_form(form, &spec)?;
            io::moduli_to_json(&moduli_class_of(&m, &spec)?)
        }
        Command::Oracle { spec, trials, seed } => {
            let specs = load_specs(spec)?;
            let reports = errata_report(&specs, *trials, *seed)?;
            json!(reports.iter().map(io::report_to_json).collect::<Vec<_>>())
        }
    };
    if pretty {
        let keys = ["rank", "dim", "closed", "residual", "permutation", "pairs", "v_in_image"];
        let s = summary(&value, &keys);
        if !s.is_empty() {
            return Ok(s);
        }
        return Ok(serde_json::to_string_pretty(&value).expect("serializable") + "\n");
    }
    Ok(serde_json::to_string(&value).expect("serializable") + "\n")
}

pub fn exit_code(e: &Error) -> i32 {
    if e.is_rejection() {
        2
    } else {
        1
    }
}

/// Parse arguments, execute, print; returns the process exit code.
pub fn run<I, T>(args: I, out: &mut impl Write, err: &mut impl Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = if code == 0 { write!(out, "{e}") } else { write!(err, "{e}") };
            return code;
        }
    };
    match execute(&cli) {
        Ok(text) => match out.write_all(text.as_bytes()) {
            Ok(()) => 0,
            Err(e) => {
                let _ = writeln!(err, "error: {e}");
                1
            }
        },
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            exit_code(&e)
        }
    }
}
