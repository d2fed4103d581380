//! `dirinfo`: directed information, causal gambling, portfolios, causal
//! compression and causal-dependence tests from the command line.

mod commands;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::json;

const EXIT_CODES: &str = "\
Exit codes:
  0   success
  2   parse error (malformed model, market, odds or sequence file)
  3   capacity error (exact enumeration beyond the guard)
  4   support violation (positive mass over a zero denominator)
  5   invalid argument or domain error (also bad command-line usage)
  6   unsupported model for the requested operation
  7   solver or rate did not converge
  8   decode error
  9   identity check failed
  10  file could not be read or written
On failure stderr holds one JSON object: {\"error\": {\"kind\", \"message\", \"exit_code\"}}.";

#[derive(Parser, Debug)]
#[command(name = "dirinfo", version, about = "Directed information and its operational meanings", after_help = EXIT_CODES)]
pub struct Cli {
    /// Seed for Monte Carlo runs.
    #[arg(long, global = true, default_value_t = 2024)]
    pub seed: u64,
    /// Convergence tolerance of rate estimates (bits per symbol).
    #[arg(long, global = true, default_value_t = 1e-6)]
    pub tol: f64,
    /// Append result rows to this CSV file.
    #[arg(long, global = true)]
    pub csv: Option<PathBuf>,
    /// Also write the JSON report to this file.
    #[arg(long, global = true)]
    pub json: Option<PathBuf>,
    /// Do not print the JSON report to stdout.
    #[arg(long, global = true)]
    pub quiet: bool,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Command {
    /// Information measures of a model at one or more horizons.
    Info(InfoArgs),
    /// Growth of the log-optimal gambler with and without side information.
    Gamble(GambleArgs),
    /// Log-optimal portfolio growth gap against directed information.
    Portfolio(PortfolioArgs),
    /// Causal Huffman code: expected length report, encoding or decoding.
    Compress(CompressArgs),
    /// Error probabilities and exponents of the causal-dependence test.
    Hyptest(HyptestArgs),
    /// Writes the two-horse Markov race with noisy side information.
    Example1(Example1Args),
}

#[derive(Args, Debug, Serialize)]
pub struct InfoArgs {
    #[arg(long)]
    pub model: PathBuf,
    /// Horizons, comma separated.
    #[arg(long, value_delimiter = ',', required = true)]
    pub n: Vec<usize>,
    /// directed, causal_entropy, mi, lautum, lautum1 or lautum2.
    #[arg(long, value_delimiter = ',', default_value = "directed")]
    pub quantity: Vec<String>,
    #[arg(long, value_enum, default_value_t = DirectionArg::XToY)]
    pub direction: DirectionArg,
    #[arg(long, default_value_t = 0)]
    pub delay: usize,
    /// Also estimate the per-symbol rate of each quantity.
    #[arg(long)]
    pub rate: bool,
}

#[derive(ValueEnum, Clone, Copy, Debug, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum DirectionArg {
    XToY,
    YToX,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ModeArg {
    Exact,
    Mc,
}

#[derive(Args, Debug, Serialize)]
pub struct GambleArgs {
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long, value_delimiter = ',', required = true)]
    pub n: Vec<usize>,
    /// `fair` or an odds JSON file.
    #[arg(long, default_value = "fair")]
    pub odds: String,
    #[arg(long, value_enum, default_value_t = ModeArg::Exact)]
    pub mode: ModeArg,
    /// Monte Carlo paths.
    #[arg(long, default_value_t = 100)]
    pub replicas: usize,
    /// Also report the growth increase with `K` races of lookahead.
    #[arg(long)]
    pub lookahead: Option<usize>,
    /// Races treated as a known start before the `n` that count; defaults
    /// to the model file's `meta.warmup`, or 0.
    #[arg(long)]
    pub warmup: Option<usize>,
}

#[derive(Args, Debug, Serialize)]
pub struct PortfolioArgs {
    #[arg(long)]
    pub market: PathBuf,
    #[arg(long, value_delimiter = ',', required = true)]
    pub n: Vec<usize>,
}

#[derive(Args, Debug, Serialize)]
#[command(group = clap::ArgGroup::new("action").required(true).args(["encode", "decode", "report"]))]
pub struct CompressArgs {
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long, value_delimiter = ',', required = true)]
    pub n: Vec<usize>,
    /// Encode the sequence in XFILE given the side information in YFILE.
    #[arg(long, num_args = 2, value_names = ["XFILE", "YFILE"])]
    pub encode: Option<Vec<PathBuf>>,
    /// Decode BITS given the side information in YFILE.
    #[arg(long, num_args = 2, value_names = ["BITS", "YFILE"])]
    pub decode: Option<Vec<PathBuf>>,
    /// Output file of `--encode` (bitstream) or `--decode` (symbols).
    #[arg(long, required_unless_present = "report")]
    pub out: Option<PathBuf>,
    /// Expected length against the entropy bound.
    #[arg(long)]
    pub report: bool,
}

#[derive(Args, Debug, Serialize)]
pub struct HyptestArgs {
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long = "n-list", value_delimiter = ',', required = true)]
    pub n_list: Vec<usize>,
    #[arg(long, default_value_t = 0.25)]
    pub epsilon: f64,
    #[arg(long, default_value_t = dirinfo::hyptest::DEFAULT_DELTA)]
    pub delta: f64,
    #[arg(long, value_enum, default_value_t = ModeArg::Exact)]
    pub mode: ModeArg,
    /// Draws under each hypothesis in Monte Carlo mode.
    #[arg(long, default_value_t = 10_000)]
    pub samples: usize,
}

#[derive(Args, Debug, Serialize)]
pub struct Example1Args {
    /// Probability that the winner repeats.
    #[arg(long, default_value_t = 0.8)]
    pub p: f64,
    /// Crossover probability of the side information.
    #[arg(long, default_value_t = 0.1)]
    pub q: f64,
    /// Model file to write; stdout if absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug)]
pub enum CliError {
    Lib(dirinfo::Error),
    Io { path: String, message: String },
    Usage(String),
}

impl From<dirinfo::Error> for CliError {
    fn from(e: dirinfo::Error) -> Self {
        CliError::Lib(e)
    }
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Lib(e) => e.exit_code() as u8,
            CliError::Io { .. } => 10,
            CliError::Usage(_) => 5,
        }
    }

    fn report(&self) -> serde_json::Value {
        let (kind, message) = match self {
            CliError::Lib(e) => (e.kind(), e.to_string()),
            CliError::Io { path, message } => ("io", format!("{path}: {message}")),
            CliError::Usage(m) => ("usage", m.clone()),
        };
        json!({ "error": { "kind": kind, "message": message, "exit_code": self.exit_code() } })
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            // --help and --version.
            print!("{e}");
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let err = CliError::Usage(e.render().to_string().trim().to_string());
            eprintln!("{}", err.report());
            return ExitCode::from(err.exit_code());
        }
    };
    match commands::run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("{}", err.report());
            ExitCode::from(err.exit_code())
        }
    }
}
