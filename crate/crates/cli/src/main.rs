use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;

use clap::{Parser, Subcommand, ValueEnum};
use serde_json::{json, Map, Value};

use steenrod_core::algebra::{ensure_prime, CellularVariety, ChowClass, ModPClass};
use steenrod_core::steenrod::{steenrod_cohomological, steenrod_homological};
use steenrod_core::verify::{run_suite, SuiteConfig, SUITES};
use steenrod_core::{Error, VarietySpec};

#[derive(Parser)]
#[command(name = "steenrod", version, about = "Reduced Steenrod operations on Chow groups of cellular varieties")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Print the basis, multiplication table, tangent Chern character and τ matrix.
    Describe {
        /// Variety spec (JSON, shorthand such as `P^2xQ_3`, or a file path).
        spec: Option<String>,
        #[arg(long)]
        variety: Option<String>,
        #[arg(long, value_enum, default_value_t = Format::Json)]
        format: Format,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Apply all reduced Steenrod operations to one class.
    Operate {
        #[arg(long)]
        variety: String,
        #[arg(long)]
        p: u64,
        /// Class as a JSON object mapping cell labels to integers.
        #[arg(long)]
        class: String,
        #[arg(long, value_enum, default_value_t = Convention::Coh)]
        convention: Convention,
        #[arg(long, value_enum, default_value_t = Format::Json)]
        format: Format,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Operation matrix over the whole cell basis.
    Table {
        #[arg(long)]
        variety: String,
        #[arg(long)]
        p: u64,
        #[arg(long, value_enum, default_value_t = Convention::Coh)]
        convention: Convention,
        #[arg(long, value_enum, default_value_t = Format::Csv)]
        format: Format,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run a verification suite (`all` runs every suite).
    Verify {
        suite_name: Option<String>,
        #[arg(long)]
        suite: Option<String>,
        /// Restrict to a single prime (default: 2, 3 and 5).
        #[arg(long)]
        p: Option<u64>,
        /// Restrict to a single variety.
        #[arg(long)]
        variety: Option<String>,
        #[arg(long)]
        n: Option<usize>,
        #[arg(long)]
        k: Option<usize>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 100)]
        trials: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Json,
    Csv,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Convention {
    #[value(alias = "cohomological")]
    Coh,
    #[value(alias = "homological")]
    Hom,
}

impl Convention {
    fn name(self) -> &'static str {
        match self {
            Convention::Coh => "cohomological",
            Convention::Hom => "homological",
        }
    }
}

/// Failure modes with their exit codes.
enum Failure {
    Assertion(String),
    Input(String),
    Internal(String),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Assertion(_) => 1,
            Failure::Input(_) => 2,
            Failure::Internal(_) => 3,
        }
    }

    fn message(&self) -> &str {
        match self {
            Failure::Assertion(m) | Failure::Input(m) | Failure::Internal(m) => m,
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let detail = json!({ "error": e.to_string(), "kind": kind_name(&e) }).to_string();
        match e {
            Error::ExtractionFailure(_) | Error::DecompositionFailure(_) | Error::IntegralityViolation(_) => {
                Failure::Internal(detail)
            }
            _ => Failure::Input(detail),
        }
    }
}

fn kind_name(e: &Error) -> &'static str {
    match e {
        Error::UnknownLabel { .. } => "UnknownLabel",
        Error::VarietyMismatch { .. } => "VarietyMismatch",
        Error::EvenDimensionUnsupported(_) => "EvenDimensionUnsupported",
        Error::UnknownKind(_) => "UnknownKind",
        Error::IncompatibleDimensions(_) => "IncompatibleDimensions",
        Error::FlagViolation { .. } => "FlagViolation",
        Error::NonIntegralInput(_) => "NonIntegralInput",
        Error::ZeroClass => "ZeroClass",
        Error::NonInvertibleSeries => "NonInvertibleSeries",
        Error::IntegralityViolation(_) => "IntegralityViolation",
        Error::DecompositionFailure(_) => "DecompositionFailure",
        Error::ExtractionFailure(_) => "ExtractionFailure",
        Error::DimensionMismatch(_) => "DimensionMismatch",
        Error::LevelViolation(_) => "LevelViolation",
        Error::NotPrime(_) => "NotPrime",
        Error::InvalidVariety { .. } => "InvalidVariety",
        Error::InvalidMorphism { .. } => "InvalidMorphism",
        Error::Parse(_) => "Parse",
    }
}

fn max_dim() -> Result<usize, Failure> {
    match std::env::var("STEENROD_MAX_DIM") {
        Ok(s) => s
            .trim()
            .parse()
            .map_err(|_| Failure::Input(format!("STEENROD_MAX_DIM must be an integer, got `{s}`"))),
        Err(_) => Ok(8),
    }
}

fn load_variety(text: &str) -> Result<Arc<CellularVariety>, Failure> {
    let path = Path::new(text);
    let source = if !text.trim_start().starts_with('{') && path.is_file() {
        fs::read_to_string(path).map_err(|e| Failure::Input(format!("cannot read {text}: {e}")))?
    } else {
        text.to_string()
    };
    let spec = VarietySpec::parse(&source)?;
    let cap = max_dim()?;
    if spec.dim() > cap {
        return Err(Failure::Input(format!(
            "variety dimension {} exceeds STEENROD_MAX_DIM = {cap}",
            spec.dim()
        )));
    }
    Ok(spec.build()?)
}

fn parse_json(text: &str, what: &str) -> Result<Value, Failure> {
    serde_json::from_str(text).map_err(|e| Failure::Input(format!("malformed {what} JSON: {e}")))
}

fn emit(out: Option<&Path>, text: &str) -> Result<(), Failure> {
    let mut text = text.to_string();
    if !text.ends_with('\n') {
        text.push('\n');
    }
    match out {
        Some(path) => fs::write(path, text).map_err(|e| Failure::Input(format!("cannot write {}: {e}", path.display()))),
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout
                .write_all(text.as_bytes())
                .map_err(|e| Failure::Input(e.to_string()))
        }
    }
}

fn pretty(v: &Value) -> String {
    serde_json::to_string_pretty(v).expect("serializable")
}

fn describe(v: &Arc<CellularVariety>, format: Format) -> String {
    match format {
        Format::Csv => {
            let mut s = String::from("label,dim,codim\n");
            for (i, c) in v.cells().iter().enumerate() {
                s.push_str(&format!("{},{},{}\n", c.label, c.dim, v.cell_codim(i)));
            }
            s
        }
        Format::Json => {
            let cells: Vec<Value> = v
                .cells()
                .iter()
                .map(|c| json!({"label": c.label, "dim": c.dim}))
                .collect();
            let mut mult = Map::new();
            for a in 0..v.num_cells() {
                for b in a..v.num_cells() {
                    let prod = &ChowClass::basis(v, a) * &ChowClass::basis(v, b);
                    if !prod.is_zero() {
                        mult.insert(format!("{}*{}", v.label(a), v.label(b)), prod.to_json());
                    }
                }
            }
            let mut tau = Map::new();
            for b in 0..v.num_cells() {
                tau.insert(v.label(b).to_string(), v.tau_column(b).to_json());
            }
            let mut degrees = Map::new();
            for (b, d) in v.degree_vector().iter().enumerate() {
                if v.cell_dim(b) == 0 {
                    degrees.insert(v.label(b).to_string(), Value::String(d.to_string()));
                }
            }
            pretty(&json!({
                "variety": v.name(),
                "dim": v.dim(),
                "cells": cells,
                "multiplication": mult,
                "degrees": degrees,
                "tangent_ch": v.tangent_ch().to_json(),
                "tau_matrix": tau,
            }))
        }
    }
}

fn operations(x: &ModPClass, convention: Convention) -> Result<Vec<ModPClass>, Failure> {
    Ok(match convention {
        Convention::Coh => steenrod_cohomological(x)?,
        Convention::Hom => steenrod_homological(x)?,
    })
}

fn ops_json(ops: &[ModPClass]) -> Value {
    let mut map = Map::new();
    for (k, s) in ops.iter().enumerate() {
        map.insert(format!("S_{k}"), s.to_json());
    }
    Value::Object(map)
}

fn csv_row(input: &str, k: usize, s: &ModPClass) -> String {
    let mut row = format!("{input},{k}");
    for c in s.coeffs() {
        row.push_str(&format!(",{c}"));
    }
    row.push('\n');
    row
}

fn csv_header(v: &CellularVariety) -> String {
    let mut s = String::from("input,k");
    for c in v.cells() {
        s.push(',');
        s.push_str(&c.label);
    }
    s.push('\n');
    s
}

/// Rows `k` reported for a basis cell: those whose target degree exists and,
/// for the cohomological operation, `k ≤ codim` (higher ones vanish).
fn table_range(v: &CellularVariety, b: usize, p: u64, convention: Convention) -> usize {
    let kmax = v.cell_dim(b) / (p - 1) as usize;
    match convention {
        Convention::Coh => kmax.min(v.cell_codim(b)),
        Convention::Hom => kmax,
    }
}

fn run(cli: Cli) -> Result<(), Failure> {
    match cli.command {
        Command::Describe {
            spec,
            variety,
            format,
            out,
        } => {
            let text = spec
                .or(variety)
                .ok_or_else(|| Failure::Input("describe needs a variety spec".into()))?;
            let v = load_variety(&text)?;
            emit(out.as_deref(), &describe(&v, format))
        }
        Command::Operate {
            variety,
            p,
            class,
            convention,
            format,
            out,
        } => {
            ensure_prime(p)?;
            let v = load_variety(&variety)?;
            let input = parse_json(&class, "class")?;
            let integral = ChowClass::from_json(&v, &input)?;
            let x = ModPClass::from_chow(&integral, p);
            let ops = operations(&x, convention)?;
            let text = match format {
                Format::Json => pretty(&json!({
                    "variety": v.name(),
                    "p": p,
                    "input": x.to_json(),
                    "ops": ops_json(&ops),
                    "convention": convention.name(),
                })),
                Format::Csv => {
                    let mut s = csv_header(&v);
                    for (k, op) in ops.iter().enumerate() {
                        s.push_str(&csv_row("input", k, op));
                    }
                    s
                }
            };
            emit(out.as_deref(), &text)
        }
        Command::Table {
            variety,
            p,
            convention,
            format,
            out,
        } => {
            ensure_prime(p)?;
            let v = load_variety(&variety)?;
            let mut rows = Vec::new();
            for b in 0..v.num_cells() {
                let ops = operations(&ModPClass::basis(&v, p, b), convention)?;
                for (k, op) in ops.iter().enumerate().take(table_range(&v, b, p, convention) + 1) {
                    rows.push((b, k, op.clone()));
                }
            }
            let text = match format {
                Format::Csv => {
                    let mut s = csv_header(&v);
                    for (b, k, op) in &rows {
                        s.push_str(&csv_row(v.label(*b), *k, op));
                    }
                    s
                }
                Format::Json => pretty(&json!({
                    "variety": v.name(),
                    "p": p,
                    "convention": convention.name(),
                    "rows": rows.iter().map(|(b, k, op)| json!({
                        "input": v.label(*b),
                        "k": k,
                        "output": op.to_json(),
                    })).collect::<Vec<_>>(),
                })),
            };
            emit(out.as_deref(), &text)
        }
        Command::Verify {
            suite_name,
            suite,
            p,
            variety,
            n,
            k,
            seed,
            trials,
            out,
        } => {
            let name = suite
                .or(suite_name)
                .ok_or_else(|| Failure::Input(format!("verify needs a suite: {} or all", SUITES.join(", "))))?;
            let mut cfg = SuiteConfig {
                n,
                k,
                seed,
                trials,
                max_dim: max_dim()?,
                ..SuiteConfig::default()
            };
            if let Some(p) = p {
                ensure_prime(p)?;
                cfg.primes = vec![p];
            }
            if let Some(text) = variety {
                cfg.varieties = Some(vec![load_variety(&text)?]);
            }
            let names: Vec<&str> = if name == "all" {
                SUITES.to_vec()
            } else {
                vec![name.as_str()]
            };
            let mut reports = Vec::new();
            let mut failed = None;
            for suite in names {
                let report = run_suite(suite, &cfg)?;
                if !report.passed() && failed.is_none() {
                    failed = Some(report.to_json());
                }
                reports.push(report.to_json());
            }
            let summary = if reports.len() == 1 {
                reports.pop().expect("one report")
            } else {
                json!({ "suites": reports, "passed": failed.is_none() })
            };
            emit(out.as_deref(), &pretty(&summary))?;
            match failed {
                Some(report) => Err(Failure::Assertion(pretty(&report))),
                None => Ok(()),
            }
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("{}", f.message());
            ExitCode::from(f.code())
        }
    }
}
