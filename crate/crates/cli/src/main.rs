mod commands;
mod emit;
mod selftest;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

/// Exit status classes: 2 validation, 3 convergence, 4 I/O.
#[derive(Debug)]
pub enum CliError {
    Validation(String),
    Convergence(String),
    Io(String),
    /// Selftest reported failures.
    Selftest(usize),
}

impl CliError {
    fn code(&self) -> u8 {
        match self {
            CliError::Validation(_) => 2,
            CliError::Convergence(_) => 3,
            CliError::Io(_) => 4,
            CliError::Selftest(_) => 1,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Validation(m) => write!(f, "invalid input: {m}"),
            CliError::Convergence(m) => write!(f, "convergence failure: {m}"),
            CliError::Io(m) => write!(f, "i/o error: {m}"),
            CliError::Selftest(n) => write!(f, "{n} selftest check(s) failed"),
        }
    }
}

impl From<bosonq::Error> for CliError {
    fn from(e: bosonq::Error) -> Self {
        if e.is_convergence() {
            CliError::Convergence(e.to_string())
        } else {
            CliError::Validation(e.to_string())
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
    Text,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Encoding {
    Unary,
    Binary,
}

impl From<Encoding> for bosonq::BosonEncoding {
    fn from(e: Encoding) -> Self {
        match e {
            Encoding::Unary => bosonq::BosonEncoding::Unary,
            Encoding::Binary => bosonq::BosonEncoding::Binary,
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct Common {
    /// Output file (standard output when omitted)
    #[arg(long, short, global = true)]
    pub out: Option<PathBuf>,
    /// Output format; each subcommand has its own default
    #[arg(long, value_enum, global = true)]
    pub format: Option<Format>,
    /// Seed for every randomized input
    #[arg(long, default_value_t = 0, global = true)]
    pub seed: u64,
    /// Run the module's invariant checks instead of the command
    #[arg(long, global = true)]
    pub selftest: bool,
}

#[derive(Debug, Parser)]
#[command(name = "bosonq", version, about = "Boson-to-qubit compilation and simulation toolkit")]
#[command(arg_required_else_help = true)]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Compile a model JSON document to a Pauli sum
    Compile(commands::CompileArgs),
    /// Exact vs Trotter evolution of a compiled model
    Evolve(commands::EvolveArgs),
    /// Two-boson quantum walk correlations on a Bose-Hubbard chain
    Walk(commands::WalkArgs),
    /// Lindblad dynamics of a damped spin-boson model
    Lindblad(commands::LindbladArgs),
    /// PDS(K) ground-state estimates for the Holstein ring
    Pds(commands::PdsArgs),
    /// Nested downfolding optimization on the three-mode model
    Downfold(commands::DownfoldArgs),
    /// Truncation thresholds over a time grid
    Trunc(commands::TruncArgs),
    /// Block encoding of the truncated creation operator
    Blockenc(commands::BlockencArgs),
    /// Two-register state preparation plans
    Prep(commands::PrepArgs),
    /// Wegner flow trajectory
    Wegner(commands::WegnerArgs),
    /// XY chain quasiparticle spectrum
    Xy(commands::XyArgs),
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Compile(_) => "compile",
            Command::Evolve(_) => "evolve",
            Command::Walk(_) => "walk",
            Command::Lindblad(_) => "lindblad",
            Command::Pds(_) => "pds",
            Command::Downfold(_) => "downfold",
            Command::Trunc(_) => "trunc",
            Command::Blockenc(_) => "blockenc",
            Command::Prep(_) => "prep",
            Command::Wegner(_) => "wegner",
            Command::Xy(_) => "xy",
        }
    }
}

fn dispatch(cmd: &Command, common: &Common) -> Result<(), CliError> {
    if common.selftest {
        return selftest::run(cmd.name(), common.seed);
    }
    match cmd {
        Command::Compile(a) => commands::compile(a, common),
        Command::Evolve(a) => commands::evolve(a, common),
        Command::Walk(a) => commands::walk(a, common),
        Command::Lindblad(a) => commands::lindblad(a, common),
        Command::Pds(a) => commands::pds(a, common),
        Command::Downfold(a) => commands::downfold(a, common),
        Command::Trunc(a) => commands::trunc(a, common),
        Command::Blockenc(a) => commands::blockenc(a, common),
        Command::Prep(a) => commands::prep(a, common),
        Command::Wegner(a) => commands::wegner(a, common),
        Command::Xy(a) => commands::xy(a, common),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(e.exit_code().clamp(0, 255) as u8);
        }
    };
    match dispatch(&cli.command, &cli.common) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("bosonq {}: {e}", cli.command.name());
            ExitCode::from(e.code())
        }
    }
}
