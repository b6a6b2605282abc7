use std::io::{self, Read, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use hdlaplace::models::Link;
use hdlaplace_cli::model_file::{builtin_logreg, builtin_quartic, builtin_random};
use hdlaplace_cli::{
    cmd_coeffs, cmd_sweep, cmd_verify, load, parse_lambdas, LoadedModel, Method, ModelFile, OracleKind, OracleOptions,
    ReportFile,
};

#[derive(Parser)]
#[command(name = "hdlaplace", version, about = "Laplace expansion coefficients and numerical checks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Coefficients b_1 .. b_{L-1} of log I(λ).
    Coeffs {
        #[command(flatten)]
        model: ModelArgs,
        #[arg(long, value_enum, default_value_t = Method::Both)]
        method: Method,
        /// Report path (standard output by default).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Compare the truncated expansion with a numerical oracle at one λ.
    Verify {
        #[command(flatten)]
        model: ModelArgs,
        /// Defaults to the sample size for regression models.
        #[arg(long)]
        lambda: Option<f64>,
        #[command(flatten)]
        oracle: OracleArgs,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Remainder sweep over several λ, written as CSV.
    Sweep {
        #[command(flatten)]
        model: ModelArgs,
        /// Comma list or a:b:factor.
        #[arg(long, alias = "lambda")]
        lambdas: String,
        #[command(flatten)]
        oracle: OracleArgs,
        /// CSV path; without it the CSV goes to standard output and the report to standard error.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Write a generated model file.
    Builtin {
        #[arg(value_enum)]
        name: BuiltinName,
        #[arg(long, default_value_t = 2)]
        d: usize,
        #[arg(long = "L", default_value_t = 2)]
        order: usize,
        /// Sample size (logreg).
        #[arg(long, default_value_t = 200)]
        n: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        /// Tensor scale (random).
        #[arg(long, default_value_t = 0.1)]
        scale: f64,
        /// Comma-separated minimizer (logreg); zero by default.
        #[arg(long)]
        x_star: Option<String>,
        #[arg(long, default_value = "logistic")]
        link: String,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Args)]
struct ModelArgs {
    /// Model file, or '-' for standard input.
    #[arg(long)]
    model: String,
    /// Truncation order (the file's L by default).
    #[arg(long = "L")]
    order: Option<usize>,
}

#[derive(Args)]
struct OracleArgs {
    #[arg(long, value_enum)]
    oracle: Option<OracleKind>,
    #[arg(long, default_value_t = 1_000_000)]
    samples: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Gauss–Hermite nodes per dimension.
    #[arg(long)]
    nodes: Option<usize>,
}

impl From<&OracleArgs> for OracleOptions {
    fn from(a: &OracleArgs) -> Self {
        OracleOptions { kind: a.oracle, samples: a.samples, seed: a.seed, nodes: a.nodes }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum BuiltinName {
    Quartic,
    Logreg,
    Random,
}

fn read_model(args: &ModelArgs) -> Result<LoadedModel> {
    let text = if args.model == "-" {
        let mut s = String::new();
        io::stdin().read_to_string(&mut s).context("reading model from standard input")?;
        s
    } else {
        std::fs::read_to_string(&args.model).with_context(|| format!("reading model file {}", args.model))?
    };
    load(ModelFile::parse(&text)?, args.order)
}

fn emit(text: &str, out: Option<&PathBuf>) -> Result<()> {
    match out {
        Some(p) => std::fs::write(p, text).with_context(|| format!("writing {}", p.display())),
        None => io::stdout().write_all(text.as_bytes()).context("writing to standard output"),
    }
}

fn finish(report: &ReportFile) -> ExitCode {
    let failed = report.failed_checks();
    for c in &failed {
        eprintln!("check failed: {}: {}", c.name, c.detail);
    }
    if failed.is_empty() {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}

fn run(cli: Cli) -> Result<ExitCode> {
    match cli.command {
        Command::Coeffs { model, method, out } => {
            let m = read_model(&model)?;
            let report = cmd_coeffs(&m, method)?;
            emit(&report.to_json()?, out.as_ref())?;
            Ok(finish(&report))
        }
        Command::Verify { model, lambda, oracle, out } => {
            let m = read_model(&model)?;
            let report = cmd_verify(&m, lambda, &OracleOptions::from(&oracle))?;
            emit(&report.to_json()?, out.as_ref())?;
            Ok(finish(&report))
        }
        Command::Sweep { model, lambdas, oracle, out } => {
            let m = read_model(&model)?;
            let lambdas = parse_lambdas(&lambdas)?;
            let (report, csv) = cmd_sweep(&m, &lambdas, &OracleOptions::from(&oracle))?;
            let json = report.to_json()?;
            match &out {
                Some(p) => {
                    emit(&csv, Some(p))?;
                    emit(&json, None)?;
                }
                None => {
                    emit(&csv, None)?;
                    eprint!("{json}");
                }
            }
            Ok(finish(&report))
        }
        Command::Builtin { name, d, order, n, seed, scale, x_star, link, out } => {
            let file = match name {
                BuiltinName::Quartic => builtin_quartic(d, order)?,
                BuiltinName::Random => builtin_random(d, order, seed, scale)?,
                BuiltinName::Logreg => {
                    let x_star = match x_star {
                        Some(s) => s
                            .split(',')
                            .map(|t| t.trim().parse::<f64>().with_context(|| format!("invalid --x-star entry '{t}'")))
                            .collect::<Result<Vec<_>>>()?,
                        None => vec![0.0; d],
                    };
                    let link: Link = link.parse()?;
                    builtin_logreg(d, order, n, seed, x_star, link)?
                }
            };
            emit(&file.to_json()?, out.as_ref())?;
            Ok(ExitCode::SUCCESS)
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
