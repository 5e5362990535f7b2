//! `modent`: relative entropy, KMS and free-energy checks from the command line.
//!
//! Exit codes: 0 pass, 1 property failure, 2 usage or parse error,
//! 3 input violates a data invariant (e.g. not a density matrix).

mod commands;
mod io;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use io::Format;

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Data(String),
    /// An internal cross-check disagreed; reported as a property failure.
    Failed(String),
}

impl CliError {
    fn code(&self) -> u8 {
        match self {
            CliError::Failed(_) => 1,
            CliError::Usage(_) => 2,
            CliError::Data(_) => 3,
        }
    }
}

impl From<modent::Error> for CliError {
    fn from(e: modent::Error) -> Self {
        use modent::Error as E;
        match e {
            E::InvalidParameter(_) => CliError::Usage(e.to_string()),
            E::Internal(_) | E::EigenSolver => CliError::Failed(e.to_string()),
            _ => CliError::Data(e.to_string()),
        }
    }
}

#[derive(Parser, Debug)]
#[command(name = "modent", version, about = "Relative entropy, KMS and free-energy checks for finite quantum systems")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Relative entropy of two states by several routes.
    Entropy(EntropyArgs),
    /// Free-energy bounds for a partitioned system.
    Bogoliubov(BogoliubovArgs),
    /// KMS boundary condition and perturbation identities.
    Kms(KmsArgs),
    /// Run the property battery.
    Suite(SuiteArgs),
}

#[derive(Args, Debug)]
pub struct EntropyArgs {
    /// First state (MatrixFile JSON).
    #[arg(long, requires = "sigma", conflicts_with = "random")]
    pub rho: Option<PathBuf>,
    /// Second state (MatrixFile JSON).
    #[arg(long, requires = "rho")]
    pub sigma: Option<PathBuf>,
    /// Draw both states at random in this dimension.
    #[arg(long, value_name = "N")]
    pub random: Option<usize>,
    /// Generator of a subalgebra to restrict to; repeat for several.
    #[arg(long = "generator", value_name = "FILE")]
    pub generators: Vec<PathBuf>,
    /// Falls back to MODENT_SEED, then 0.
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long, value_enum, default_value = "json")]
    pub format: Format,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ModelName {
    Ising2,
    Ising,
    TwoLevel,
    Heisenberg,
    Uncoupled,
    Custom,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum InitName {
    /// Maximally mixed start.
    Cold,
    /// The exact Gibbs state.
    Warm,
    Random,
}

#[derive(Args, Debug)]
pub struct BogoliubovArgs {
    #[arg(long, value_enum)]
    pub model: ModelName,
    #[arg(long, allow_hyphen_values = true)]
    pub beta: f64,
    /// Chain length for `ising`.
    #[arg(long, default_value_t = 3)]
    pub sites: usize,
    /// Transverse field for the Ising models.
    #[arg(long, default_value_t = 1.0, allow_hyphen_values = true)]
    pub field: f64,
    /// Coupling strength for the built-in models.
    #[arg(long, default_value_t = 1.0, allow_hyphen_values = true)]
    pub coupling: f64,
    /// Level splittings for `two-level` and the default `uncoupled` model.
    #[arg(long, default_value_t = 1.0, allow_hyphen_values = true)]
    pub gap_a: f64,
    #[arg(long, default_value_t = 0.5, allow_hyphen_values = true)]
    pub gap_b: f64,
    /// Local Hamiltonian (MatrixFile); repeat once per subsystem.
    #[arg(long = "block", value_name = "FILE")]
    pub blocks: Vec<PathBuf>,
    /// Coupling on the full space (MatrixFile), for `custom`.
    #[arg(long, value_name = "FILE")]
    pub coupling_file: Option<PathBuf>,
    /// Also run both variational principles.
    #[arg(long)]
    pub variational: bool,
    #[arg(long, value_enum, default_value = "cold")]
    pub init: InitName,
    #[arg(long, default_value_t = 5000)]
    pub max_iter: usize,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long, value_enum, default_value = "json")]
    pub format: Format,
}

#[derive(Args, Debug)]
pub struct KmsArgs {
    /// Hamiltonian (MatrixFile JSON).
    #[arg(long, value_name = "FILE", required_unless_present = "random", conflicts_with = "random")]
    pub h: Option<PathBuf>,
    /// Draw unit-norm H and V at random in this dimension.
    #[arg(long, value_name = "N")]
    pub random: Option<usize>,
    /// Perturbation (MatrixFile JSON); zero if absent.
    #[arg(long, value_name = "FILE")]
    pub v: Option<PathBuf>,
    #[arg(long, default_value_t = 1.0, allow_hyphen_values = true)]
    pub beta: f64,
    /// Random operator pairs for the boundary check.
    #[arg(long, default_value_t = 100)]
    pub trials: usize,
    /// Print the Trotter error table for H and V.
    #[arg(long)]
    pub trotter: bool,
    #[arg(long, default_value_t = 1.0)]
    pub trotter_time: f64,
    /// Write the Gibbs state as a MatrixFile.
    #[arg(long, value_name = "FILE")]
    pub emit_state: Option<PathBuf>,
    /// Write the perturbed state as a MatrixFile.
    #[arg(long, value_name = "FILE")]
    pub emit_perturbed: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long, value_enum, default_value = "json")]
    pub format: Format,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SuiteFormat {
    Csv,
    Json,
}

#[derive(Args, Debug)]
pub struct SuiteArgs {
    #[arg(long)]
    pub seed: Option<u64>,
    /// Trials per property, overriding the defaults.
    #[arg(long)]
    pub trials: Option<usize>,
    /// Only properties whose `module/name` contains this string.
    #[arg(long)]
    pub property: Option<String>,
    /// Replay a single trial index.
    #[arg(long)]
    pub trial: Option<usize>,
    /// Also write the report here.
    #[arg(long, value_name = "FILE")]
    pub output: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "csv")]
    pub format: SuiteFormat,
    /// Harness self-test: reverse one inequality so the suite must fail.
    #[arg(long, hide = true)]
    pub inject_fault: bool,
}

pub fn resolve_seed(flag: Option<u64>) -> Result<u64, CliError> {
    if let Some(s) = flag {
        return Ok(s);
    }
    match std::env::var("MODENT_SEED") {
        Ok(s) => s.trim().parse().map_err(|_| CliError::Usage(format!("MODENT_SEED={s:?} is not an unsigned integer"))),
        Err(_) => Ok(0),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    let outcome = match cli.command {
        Command::Entropy(a) => commands::entropy(&a),
        Command::Bogoliubov(a) => commands::bogoliubov(&a),
        Command::Kms(a) => commands::kms(&a),
        Command::Suite(a) => commands::suite(&a),
    };
    match outcome {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            match &e {
                CliError::Usage(m) => eprintln!("error: {m}"),
                CliError::Data(m) => eprintln!("invalid input: {m}"),
                CliError::Failed(m) => eprintln!("check failed: {m}"),
            }
            ExitCode::from(e.code())
        }
    }
}
