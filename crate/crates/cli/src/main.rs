use std::io::{Read, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, ValueEnum};
use serde_json::Value;

mod commands;
mod render;

use commands::{CliError, Context, Output};

/// Hinge limits, boundary points and geodesic limits for SL(n,R)/SO(n).
#[derive(Parser, Debug)]
#[command(name = "hinge-lab", version, after_help = commands::USAGE)]
struct Args {
    /// relation | hinge | satake | velocity | sky | hybrid | geodesic
    verb: String,
    /// Action within the verb; see the list below.
    action: String,
    /// Input JSON file; repeat for two-operand actions. Reads stdin if absent.
    #[arg(long = "in", value_name = "FILE")]
    inputs: Vec<PathBuf>,
    /// Write the result here instead of stdout.
    #[arg(long, value_name = "FILE")]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Json)]
    format: Format,
    /// Tolerance for floating-point paths. Falls back to HINGELAB_TOL.
    #[arg(long)]
    tol: Option<f64>,
    /// Require exact rational input.
    #[arg(long)]
    exact: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Text,
    Dot,
}

fn read_inputs(paths: &[PathBuf]) -> Result<Vec<Value>, CliError> {
    let mut texts = Vec::new();
    if paths.is_empty() {
        let mut s = String::new();
        std::io::stdin()
            .read_to_string(&mut s)
            .map_err(|e| CliError::Io(format!("stdin: {e}")))?;
        texts.push(("stdin".to_string(), s));
    }
    for p in paths {
        let s = std::fs::read_to_string(p).map_err(|e| CliError::Io(format!("{}: {e}", p.display())))?;
        texts.push((p.display().to_string(), s));
    }
    texts
        .into_iter()
        .map(|(name, s)| serde_json::from_str(&s).map_err(|e| CliError::Schema(format!("{name}: {e}"))))
        .collect()
}

fn tolerance(arg: Option<f64>) -> Result<f64, CliError> {
    if let Some(t) = arg {
        return Ok(t);
    }
    match std::env::var("HINGELAB_TOL") {
        Ok(s) => s
            .trim()
            .parse()
            .map_err(|_| CliError::Schema(format!("HINGELAB_TOL is not a number: {s:?}"))),
        Err(_) => Ok(hingelab_core::DEFAULT_TOL),
    }
}

fn run(args: &Args) -> Result<String, CliError> {
    commands::check(&args.verb, &args.action)?;
    let tol = tolerance(args.tol)?;
    if !(tol > 0.0 && tol.is_finite()) {
        return Err(CliError::Schema(format!("tolerance must be positive, got {tol}")));
    }
    let inputs = read_inputs(&args.inputs)?;
    let ctx = Context { tol, exact: args.exact };
    let out: Output = commands::dispatch(&args.verb, &args.action, &inputs, &ctx)?;
    Ok(match args.format {
        Format::Json => render::json(&out.value),
        Format::Text => render::text(&out.value),
        Format::Dot => out
            .dot
            .ok_or_else(|| CliError::Usage(format!("{} {} has no DOT output", args.verb, args.action)))?,
    })
}

fn main() -> ExitCode {
    let args = Args::parse();
    match run(&args) {
        Ok(text) => {
            let written = match &args.out {
                Some(p) => std::fs::write(p, text.as_bytes()).map_err(|e| format!("{}: {e}", p.display())),
                None => std::io::stdout().write_all(text.as_bytes()).map_err(|e| e.to_string()),
            };
            match written {
                Ok(()) => ExitCode::SUCCESS,
                Err(e) => {
                    eprintln!("error: {e}");
                    ExitCode::from(2)
                }
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            if matches!(e, CliError::Usage(_)) {
                eprintln!("{}", commands::USAGE);
            }
            ExitCode::from(e.exit_code())
        }
    }
}
