//! `tsu`: curves, optimal weights, simulation, fitting and oracle checks for
//! weighted dual-homodyne phase sensing.

mod curves;
mod output;
mod pipeline;
mod verify;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use tsu_core::Error;

use crate::output::Format;

#[derive(Parser, Debug)]
#[command(name = "tsu", version, about = "Weighted dual-homodyne phase sensing toolkit")]
struct Cli {
    /// Write the result here instead of standard output.
    #[arg(short, long, global = true)]
    output: Option<PathBuf>,

    #[arg(long, value_enum, global = true, default_value_t = Format::Csv)]
    format: Format,

    /// Repeat for more diagnostics on standard error.
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    verbose: u8,

    /// RNG seed for stochastic commands; overrides any seed in a config file.
    #[arg(long, global = true)]
    seed: Option<u64>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Tabulate one of the theory curves.
    Curves(curves::CurvesArgs),
    /// Print the optimal conjugate weight.
    LambdaOpt(LambdaOptArgs),
    /// Simulate a noise-versus-lambda dataset from a config file.
    Simulate(pipeline::SimulateArgs),
    /// Fit one or more noise-versus-lambda datasets.
    Fit(pipeline::FitArgs),
    /// Compare the Gaussian formulas against the Fock-space oracle.
    Verify(verify::VerifyArgs),
}

#[derive(Args, Debug)]
struct LambdaOptArgs {
    #[arg(long)]
    gain: f64,
    /// Probe transmission.
    #[arg(long, default_value_t = 1.0)]
    eta_p: f64,
    /// Conjugate transmission.
    #[arg(long, default_value_t = 1.0)]
    eta_c: f64,
    /// Solve numerically instead of using the closed form.
    #[arg(long)]
    numeric: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Figure {
    Fig3,
    Fig4a,
    Fig4b,
    Fig6,
    Fig8,
}

/// Shared global options handed to each command.
pub struct Globals {
    pub output: Option<PathBuf>,
    pub format: Format,
    pub verbose: u8,
    pub seed: Option<u64>,
}

impl Globals {
    pub fn log(&self, level: u8, msg: impl AsRef<str>) {
        if self.verbose >= level {
            eprintln!("{}", msg.as_ref());
        }
    }
}

/// Failure kinds mapped to exit codes.
pub enum Failure {
    /// Bad input: exit 2.
    Usage(String),
    /// Computation failed or a check did not pass: exit 1.
    Runtime(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::Domain(_) | Error::Parse { .. } | Error::Validation(_) | Error::Unsupported(_) => {
                Failure::Usage(e.to_string())
            }
            _ => Failure::Runtime(e.to_string()),
        }
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Runtime(e.to_string())
    }
}

fn lambda_opt_cmd(args: &LambdaOptArgs, g: &Globals) -> Result<(), Failure> {
    let params = tsu_core::InterferometerParams::new(args.gain, args.eta_p, args.eta_c, 0.0)?;
    let value = if args.numeric {
        tsu_core::metrology::lambda_opt_numeric(&params)
    } else {
        tsu_core::metrology::lambda_opt(&params)
    };
    let unclamped = tsu_core::metrology::lambda_opt_unclamped(&params);
    if unclamped > 1.0 {
        g.log(0, format!("warning: unconstrained optimum {unclamped:.6} exceeds 1, clamped"));
    }
    let text = match g.format {
        Format::Csv => format!(
            "# gain = {}\n# eta_p = {}\n# eta_c = {}\nlambda_opt\n{}\n",
            args.gain,
            args.eta_p,
            args.eta_c,
            tsu_core::table::format_decimal(value)
        ),
        Format::Json => {
            let v = serde_json::json!({
                "gain": args.gain,
                "eta_p": args.eta_p,
                "eta_c": args.eta_c,
                "method": if args.numeric { "numeric" } else { "closed_form" },
                "lambda_opt": value,
            });
            format!("{}\n", serde_json::to_string_pretty(&v).expect("plain JSON"))
        }
    };
    output::emit(g.output.as_deref(), &text)
}

fn run(cli: Cli) -> Result<(), Failure> {
    let globals = Globals {
        output: cli.output,
        format: cli.format,
        verbose: cli.verbose,
        seed: cli.seed,
    };
    match &cli.command {
        Command::Curves(a) => curves::run(a, &globals),
        Command::LambdaOpt(a) => lambda_opt_cmd(a, &globals),
        Command::Simulate(a) => pipeline::simulate(a, &globals),
        Command::Fit(a) => pipeline::fit(a, &globals),
        Command::Verify(a) => verify::run(a, &globals),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(Failure::Runtime(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
    }
}
