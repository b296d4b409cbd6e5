//! `lavgap`: runs the weight, mollifier, energy and counterexample experiments
//! and writes JSON reports, CSV tables and SVG plots.

mod commands;
mod config;
mod report;
mod svg;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde_json::Value;

use config::{parse_list, parse_number};
use report::{Outcome, Status};

#[derive(Debug, Parser)]
#[command(
    name = "lavgap",
    version,
    about = "Double-phase energies, weight classes and the Lavrentiev gap"
)]
pub struct Cli {
    /// JSON file with the command's parameters; flags override it.
    #[arg(long, global = true, visible_alias = "problem")]
    pub config: Option<PathBuf>,
    /// Output directory (default: $LAVGAP_OUT, else ./lavgap-out).
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

/// Comma-separated numbers such as `1/16,1/32`.
#[derive(Debug, Clone, PartialEq)]
pub struct NumList(pub Vec<f64>);

impl From<NumList> for Vec<f64> {
    fn from(l: NumList) -> Self {
        l.0
    }
}

fn num_list(s: &str) -> Result<NumList, String> {
    parse_list(s).map(NumList)
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Classify (n, p, q, κ, γ) into the applicable regime.
    Regimes(RegimesArgs),
    /// Estimate Z^κ constants of a weight under mesh refinement.
    WeightCheck(WeightCheckArgs),
    /// Check the shrinking mollifier's error and gradient bounds.
    Mollify(MollifyArgs),
    /// Evaluate a double-phase energy.
    Energy(EnergyArgs),
    /// Minimize a double-phase energy with Dirichlet data.
    Minimize(MinimizeArgs),
    /// Discrete minimum against smooth competitors in a no-gap regime.
    NoGapDemo(NoGapArgs),
    /// The cone counterexample: smooth competitors stay above the lower bound.
    GapDemo(GapDemoArgs),
    /// Constants r1, r2, r3, t0 and the energy bounds of the counterexample.
    CounterexampleConstants(ConstantsArgs),
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Regimes(_) => "regimes",
            Command::WeightCheck(_) => "weight-check",
            Command::Mollify(_) => "mollify",
            Command::Energy(_) => "energy",
            Command::Minimize(_) => "minimize",
            Command::NoGapDemo(_) => "no-gap-demo",
            Command::GapDemo(_) => "gap-demo",
            Command::CounterexampleConstants(_) => "counterexample-constants",
        }
    }
}

#[derive(Debug, Args)]
pub struct RegimesArgs {
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long, value_parser = parse_number)]
    pub p: Option<f64>,
    #[arg(long, value_parser = parse_number)]
    pub q: Option<f64>,
    #[arg(long, value_parser = parse_number)]
    pub kappa: Option<f64>,
    #[arg(long, value_parser = parse_number)]
    pub gamma: Option<f64>,
    /// CSV with columns n,p,q,kappa and optionally gamma.
    #[arg(long)]
    pub table: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct WeightCheckArgs {
    /// zero, const:c, abs, square, power:e, cone[:e], exp, one-plus-abs.
    #[arg(long)]
    pub weight: Option<String>,
    /// Exponent of the cone weight (defaults to kappa).
    #[arg(long, value_parser = parse_number)]
    pub power: Option<f64>,
    #[arg(long, value_parser = parse_number)]
    pub kappa: Option<f64>,
    #[arg(long, value_parser = num_list)]
    pub h: Option<NumList>,
    /// stable or diverging.
    #[arg(long)]
    pub expect: Option<String>,
    #[arg(long, value_parser = parse_number)]
    pub glaeser_alpha: Option<f64>,
}

#[derive(Debug, Args)]
pub struct MollifyArgs {
    #[arg(long, value_parser = num_list)]
    pub delta: Option<NumList>,
    /// tent, bump, x1, x1x2 or random.
    #[arg(long)]
    pub test_fn: Option<String>,
    #[arg(long, value_parser = parse_number)]
    pub h: Option<f64>,
    #[arg(long, value_parser = parse_number)]
    pub gamma: Option<f64>,
    #[arg(long)]
    pub fields: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub identity: Option<bool>,
}

#[derive(Debug, Args)]
pub struct EnergyArgs {
    /// JSON {"p", "q", "weight"}.
    #[arg(long)]
    pub integrand: Option<PathBuf>,
    #[arg(long, value_parser = parse_number)]
    pub p: Option<f64>,
    #[arg(long, value_parser = parse_number)]
    pub q: Option<f64>,
    #[arg(long)]
    pub weight: Option<String>,
    /// CSV of nodal values.
    #[arg(long)]
    pub field: Option<PathBuf>,
    /// Mesh JSON; a disk mesh of size h otherwise.
    #[arg(long)]
    pub mesh: Option<PathBuf>,
    #[arg(long, value_parser = parse_number)]
    pub h: Option<f64>,
    #[arg(long)]
    pub test_fn: Option<String>,
}

#[derive(Debug, Args)]
pub struct MinimizeArgs {
    #[arg(long, value_parser = parse_number)]
    pub p: Option<f64>,
    #[arg(long, value_parser = parse_number)]
    pub q: Option<f64>,
    #[arg(long)]
    pub weight: Option<String>,
    #[arg(long, value_parser = parse_number)]
    pub h: Option<f64>,
    /// x1, x1x2, const:c or linear:a,b,c.
    #[arg(long)]
    pub boundary: Option<String>,
    /// harmonic or datum.
    #[arg(long)]
    pub initial: Option<String>,
    #[arg(long, value_parser = parse_number)]
    pub tol: Option<f64>,
    #[arg(long)]
    pub max_iter: Option<usize>,
}

#[derive(Debug, Args)]
pub struct NoGapArgs {
    #[arg(long, value_parser = parse_number)]
    pub p: Option<f64>,
    #[arg(long, value_parser = parse_number)]
    pub q: Option<f64>,
    #[arg(long, value_parser = parse_number)]
    pub kappa: Option<f64>,
    #[arg(long)]
    pub weight: Option<String>,
    #[arg(long)]
    pub boundary: Option<String>,
    #[arg(long, value_parser = num_list)]
    pub h: Option<NumList>,
    #[arg(long, value_parser = num_list)]
    pub deltas: Option<NumList>,
    #[arg(long, value_parser = parse_number)]
    pub threshold: Option<f64>,
    #[arg(long, value_parser = parse_number)]
    pub tol: Option<f64>,
    #[arg(long)]
    pub max_iter: Option<usize>,
}

#[derive(Debug, Args)]
pub struct GapDemoArgs {
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long, value_parser = parse_number)]
    pub p: Option<f64>,
    #[arg(long, value_parser = parse_number)]
    pub q: Option<f64>,
    #[arg(long, value_parser = parse_number)]
    pub kappa: Option<f64>,
    #[arg(long, value_parser = parse_number)]
    pub safety: Option<f64>,
    #[arg(long, value_parser = num_list)]
    pub h: Option<NumList>,
    #[arg(long, value_parser = num_list)]
    pub deltas: Option<NumList>,
    #[arg(long, value_parser = parse_number)]
    pub tol: Option<f64>,
    #[arg(long)]
    pub max_iter: Option<usize>,
}

#[derive(Debug, Args)]
pub struct ConstantsArgs {
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long, value_parser = parse_number)]
    pub p: Option<f64>,
    #[arg(long, value_parser = parse_number)]
    pub q: Option<f64>,
    #[arg(long, value_parser = parse_number)]
    pub kappa: Option<f64>,
    #[arg(long, value_parser = parse_number)]
    pub safety: Option<f64>,
    #[arg(long, value_parser = parse_number)]
    pub h: Option<f64>,
}

/// Machine-readable error kind and exit code. Invalid input exits 1;
/// numerical failures and violated bounds exit 2.
fn classify(err: &anyhow::Error) -> (&'static str, u8) {
    use lavgap_core::Error as E;
    let Some(e) = err.chain().find_map(|c| c.downcast_ref::<E>()) else {
        return ("input", 1);
    };
    match e {
        E::Parameter(_) => ("parameter", 1),
        E::Precondition(_) => ("precondition", 1),
        E::InvalidWeight(_) => ("invalid_weight", 1),
        E::InvalidModulus(_) => ("invalid_modulus", 1),
        E::InvalidExponent(_) => ("invalid_exponent", 1),
        E::Divergence(_) => ("divergence", 1),
        E::Resource { .. } => ("resource", 1),
        E::Io(_) => ("io", 1),
        E::Format(_) => ("format", 1),
        E::BoundViolation(_) => ("bound_violation", 2),
        E::Quadrature { .. } => ("quadrature", 2),
        E::Evaluation { .. } => ("evaluation", 2),
        E::Unbounded => ("unbounded", 2),
        E::Geometry { .. } => ("geometry", 2),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    ExitCode::from(run(cli))
}

fn run(cli: Cli) -> u8 {
    let name = cli.command.name();
    let dir = report::output_dir(cli.out.as_deref());
    let (config, result) = match commands::run(&cli.command, cli.config.as_deref()) {
        Ok(run) => run,
        Err(e) => (Value::Null, Err(e)),
    };
    let (status, code, outcome) = match &result {
        Ok(o) => (Status::Done(o), if o.passed() { 0 } else { 2 }, Some(o)),
        Err(e) => {
            let (kind, code) = classify(e);
            (
                Status::Error {
                    kind,
                    message: format!("{e:#}"),
                },
                code,
                None::<&Outcome>,
            )
        }
    };
    let report = report::envelope(name, &config, &status);
    if let Err(e) = &result {
        eprintln!("lavgap {name}: error: {e:#}");
    }
    match report::write_artifacts(&dir, name, &report, outcome) {
        Ok(paths) => {
            if matches!(name, "regimes" | "energy") {
                println!(
                    "{}",
                    serde_json::to_string_pretty(&report).unwrap_or_default()
                );
            } else {
                println!(
                    "{name}: {} ({})",
                    report["status"].as_str().unwrap_or(""),
                    paths[0].display()
                );
            }
            if let Some(o) = outcome {
                for c in o.checks.iter().filter(|c| !c.passed) {
                    eprintln!("lavgap {name}: check {} failed: {}", c.name, c.detail);
                }
            }
            code
        }
        Err(e) => {
            eprintln!("lavgap {name}: {e:#}");
            code.max(1)
        }
    }
}
