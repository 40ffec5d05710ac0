//! `qlauricella`: evaluate q-Lauricella series, their parameter q-derivatives,
//! and run the verification suites.
//!
//! Exit status: 0 when every case passes, 1 when some case fails, 2 on
//! input errors (bad arguments, unreadable or invalid descriptors, unknown
//! suites).

use std::io::{Read, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use qlauricella::descriptor::{parse_descriptor, DescriptorDocument};
use qlauricella::report::{run_deriv, run_eval, run_expand, run_verify, RunReport};
use qlauricella::suite::{run_suite, SuiteOptions, DEFAULT_SEED};
use qlauricella::Precision;

const EXIT_FAILED: u8 = 1;
const EXIT_INPUT: u8 = 2;
const DEFAULT_TOL: f64 = 1e-9;

#[derive(Debug, Parser)]
#[command(name = "qlauricella", version, about)]
struct Cli {
    #[command(subcommand)]
    verb: Verb,

    /// Series descriptor (JSON); `-` reads standard input.
    #[arg(long, global = true)]
    input: Option<PathBuf>,

    /// Verification tolerance. `verify` defaults to 1e-9; suites use each
    /// case's own tolerance unless this is given.
    #[arg(long, global = true)]
    tol: Option<f64>,

    #[arg(long, global = true, value_enum, default_value_t = PrecisionArg::Double)]
    precision: PrecisionArg,

    /// Seed for randomized suites.
    #[arg(long, global = true, default_value_t = DEFAULT_SEED)]
    seed: u64,

    #[arg(long, global = true, value_enum, default_value_t = Format::Text)]
    format: Format,

    /// Write the report here instead of standard output.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
enum Verb {
    /// Evaluate the series at every point of the descriptor.
    Eval,
    /// Closed-form and definitional parameter derivatives.
    Deriv,
    /// Compare the two derivative pipelines.
    Verify,
    /// Run a built-in suite (h3, identities, theorems), or verify the
    /// descriptor given with --input.
    Suite { name: Option<String> },
    /// Print the symbolic derivative expansions.
    Expand,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum PrecisionArg {
    Double,
    Extended,
}

impl From<PrecisionArg> for Precision {
    fn from(p: PrecisionArg) -> Self {
        match p {
            PrecisionArg::Double => Precision::Double,
            PrecisionArg::Extended => Precision::Extended,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Text,
    Json,
}

struct InputError(String);

fn read_input(path: Option<&Path>) -> Result<DescriptorDocument, InputError> {
    let path = path.ok_or_else(|| InputError("this command needs --input PATH".into()))?;
    let text = if path == Path::new("-") {
        let mut s = String::new();
        std::io::stdin()
            .read_to_string(&mut s)
            .map_err(|e| InputError(format!("cannot read standard input: {e}")))?;
        s
    } else {
        std::fs::read_to_string(path).map_err(|e| InputError(format!("cannot read {}: {e}", path.display())))?
    };
    parse_descriptor(&text).map_err(|e| InputError(format!("{}: {e}", path.display())))
}

fn render(report: &RunReport, format: Format) -> String {
    match format {
        Format::Text => report.to_text(),
        Format::Json => report.to_json() + "\n",
    }
}

fn emit(text: &str, out: Option<&Path>) -> Result<(), InputError> {
    match out {
        Some(path) => {
            std::fs::write(path, text).map_err(|e| InputError(format!("cannot write {}: {e}", path.display())))
        }
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout
                .write_all(text.as_bytes())
                .map_err(|e| InputError(format!("cannot write output: {e}")))
        }
    }
}

fn check_tol(tol: Option<f64>) -> Result<(), InputError> {
    match tol {
        Some(t) if !(t.is_finite() && t > 0.0) => Err(InputError(format!("--tol must be positive, got {t}"))),
        _ => Ok(()),
    }
}

fn run(cli: &Cli) -> Result<bool, InputError> {
    check_tol(cli.tol)?;
    let precision = Precision::from(cli.precision);
    let input = cli.input.as_deref();
    let report = match &cli.verb {
        Verb::Eval => run_eval(&read_input(input)?, precision),
        Verb::Deriv => run_deriv(&read_input(input)?, precision),
        Verb::Verify => run_verify(&read_input(input)?, precision, cli.tol.unwrap_or(DEFAULT_TOL)),
        Verb::Suite { name: Some(name) } => {
            let opts = SuiteOptions {
                tol: cli.tol,
                seed: cli.seed,
                precision,
            };
            run_suite(name, &opts).map_err(|e| InputError(e.to_string()))?
        }
        Verb::Suite { name: None } => {
            if input.is_none() {
                return Err(InputError("suite needs a NAME or --input PATH".into()));
            }
            run_verify(&read_input(input)?, precision, cli.tol.unwrap_or(DEFAULT_TOL))
        }
        Verb::Expand => {
            let r = run_expand(&read_input(input)?);
            let text = match cli.format {
                Format::Text => r.to_text(),
                Format::Json => r.to_json() + "\n",
            };
            emit(&text, cli.out.as_deref())?;
            return Ok(r.all_ok());
        }
    };
    emit(&render(&report, cli.format), cli.out.as_deref())?;
    Ok(report.all_passed())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(EXIT_FAILED),
        Err(InputError(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(EXIT_INPUT)
        }
    }
}
