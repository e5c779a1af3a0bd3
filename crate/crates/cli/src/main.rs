use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use perturblab::sets::DEFAULT_CAP;
use perturblab::{LabError, Scalar};

mod commands;

#[derive(Parser, Debug)]
#[command(
    name = "perturblab",
    version,
    about = "Exact-arithmetic sum-product experiments"
)]
struct Cli {
    /// Worker threads for the parallel sweeps (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,

    /// Largest enumeration (tuples, subsets) a command may attempt.
    #[arg(long, global = true, env = "PERTURBLAB_CAP", default_value_t = DEFAULT_CAP)]
    cap: u64,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Write a generated point set as CSV.
    Gen(GenArgs),
    /// Reproduce the arithmetic-progression collapse of the perturbed product set.
    Collapse(CollapseArgs),
    /// Build a perturbation assignment and measure the perturbed sets.
    Perturb(PerturbArgs),
    /// Dyadic decomposition, doubling chain and pigeonhole report.
    Dyadic(DyadicArgs),
    /// Run one incidence experiment and emit its JSON report.
    Incidence(IncidenceArgs),
    /// Run property suites and print per-invariant tallies.
    Verify(VerifyArgs),
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
enum SetKind {
    Ap,
    Gp,
    Random,
    Chain,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
enum Strategy {
    Zero,
    Random,
    Collapse,
    Search,
}

/// `auto` or a rational.
#[derive(Clone, Debug)]
enum Anchor {
    Auto,
    Value(Scalar),
}

fn parse_anchor(s: &str) -> Result<Anchor, String> {
    if s == "auto" {
        return Ok(Anchor::Auto);
    }
    s.parse::<Scalar>()
        .map(Anchor::Value)
        .map_err(|e| e.to_string())
}

fn parse_scalar(s: &str) -> Result<Scalar, String> {
    s.parse::<Scalar>().map_err(|e| e.to_string())
}

#[derive(Args, Debug, Clone)]
struct SetArgs {
    /// Number of elements.
    #[arg(long)]
    n: usize,
    /// Anchor of the generated set; `auto` means n^3.
    #[arg(long, default_value = "auto", value_parser = parse_anchor)]
    x: Anchor,
    #[arg(long = "type", value_enum, default_value_t = SetKind::Random)]
    kind: SetKind,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Read the set from a CSV file instead of generating it.
    #[arg(long)]
    input: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct GenArgs {
    #[command(flatten)]
    set: SetArgs,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct CollapseArgs {
    #[arg(long)]
    n: usize,
    #[arg(long, default_value = "auto", value_parser = parse_anchor)]
    x: Anchor,
    /// Exponent of the budget the collapse is validated against.
    #[arg(long, default_value = "1/2", value_parser = parse_scalar)]
    eps: Scalar,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct PerturbArgs {
    #[command(flatten)]
    set: SetArgs,
    #[arg(long, default_value = "1/2", value_parser = parse_scalar)]
    eps: Scalar,
    #[arg(long, value_enum, default_value_t = Strategy::Random)]
    strategy: Strategy,
    /// Also write the assignment as CSV to this path.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct DyadicArgs {
    #[command(flatten)]
    set: SetArgs,
    /// Exponent of the pigeonhole lemma, in (0, 1).
    #[arg(long, default_value = "1/2", value_parser = parse_scalar)]
    delta: Scalar,
    /// Largest k for the distinct k-sum check on the extracted chain.
    #[arg(long, default_value_t = 3)]
    k: usize,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct IncidenceArgs {
    #[command(flatten)]
    set: SetArgs,
    #[arg(long, default_value = "1/2", value_parser = parse_scalar)]
    eps: Scalar,
    /// Grid step; defaults to the lower enclosure of n^(1-eps).
    #[arg(long, value_parser = parse_scalar)]
    delta: Option<Scalar>,
    /// Also run the exact per-pair audit; a failed invariant exits with 1.
    #[arg(long)]
    audit: bool,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct VerifyArgs {
    #[arg(long, default_value = "all",
          value_parser = clap::builder::PossibleValuesParser::new(perturblab::suites::SUITE_NAMES))]
    suite: String,
    #[arg(long, default_value_t = 1)]
    seed: u64,
}

/// Failure of a command, mapped onto the exit code contract.
enum Failure {
    Verification(String),
    Lab(LabError),
}

impl From<LabError> for Failure {
    fn from(e: LabError) -> Self {
        Failure::Lab(e)
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Lab(LabError::Io(e))
    }
}

fn exit_code(e: &LabError) -> u8 {
    match e {
        LabError::Resource { .. } | LabError::Overflow(_) => 3,
        _ => 2,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(t) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new()
            .num_threads(t)
            .build_global()
        {
            eprintln!("error: cannot configure {t} threads: {e}");
            return ExitCode::from(2);
        }
    }
    let res = match &cli.command {
        Command::Gen(a) => commands::generate(a),
        Command::Collapse(a) => commands::collapse(a),
        Command::Perturb(a) => commands::perturb(a),
        Command::Dyadic(a) => commands::dyadic(a, cli.cap),
        Command::Incidence(a) => commands::incidence(a),
        Command::Verify(a) => commands::verify(a),
    };
    match res {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Verification(msg)) => {
            eprintln!("verification failed: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Lab(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
