//! Command-line front end for `mixpl`.
//!
//! Exit codes: 0 on success, 1 on runtime or numeric failure, 2 on usage
//! errors. The thread pool size follows `RAYON_NUM_THREADS` (all cores when
//! unset).

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

pub mod commands;
pub mod formats;

#[derive(Debug, Parser)]
#[command(name = "mixpl", version, about = "Pseudolikelihood EM for mixtures of Ising and Potts models")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Draw samples from a model file or an infinite-range Ising model.
    Generate(GenerateArgs),
    /// Fit a K-component mixture by pseudolikelihood EM.
    Fit(FitArgs),
    /// Scan the mixture log-PL of infinite-range models over a J grid.
    Surface(SurfaceArgs),
    /// Coupling scores (Frobenius norm with APC) of one model component.
    DcaScore(DcaScoreArgs),
    /// TP rate of ranked coupling scores against known contacts.
    Tprate(TpRateArgs),
}

#[derive(Debug, Args)]
pub struct GenerateArgs {
    /// Model file to sample from.
    #[arg(long, conflicts_with = "ir_j", required_unless_present = "ir_j")]
    pub model: Option<PathBuf>,
    /// Shared coupling of an infinite-range Ising model with zero fields.
    #[arg(long = "ir-J", allow_negative_numbers = true)]
    pub ir_j: Option<f64>,
    /// Inverse temperature of the infinite-range model.
    #[arg(long, default_value_t = 0.001)]
    pub beta: f64,
    /// Number of sites of the infinite-range model.
    #[arg(long = "N", default_value_t = 1000)]
    pub n: usize,
    #[arg(long, default_value_t = 100)]
    pub count: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Sweeps discarded before the first sample.
    #[arg(long, default_value_t = 500)]
    pub burn_in: usize,
    /// Sweeps between retained samples.
    #[arg(long, default_value_t = 10)]
    pub thin: usize,
    #[arg(long)]
    pub out: PathBuf,
    /// Labels file for mixture models; defaults to OUT with a `.labels` extension.
    #[arg(long)]
    pub labels: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum InitKind {
    Random,
    Codeword,
}

#[derive(Debug, Args)]
pub struct FitArgs {
    /// Dataset file.
    #[arg(long, conflicts_with = "msa", required_unless_present = "msa")]
    pub data: Option<PathBuf>,
    /// Aligned FASTA file (21-letter protein alphabet).
    #[arg(long)]
    pub msa: Option<PathBuf>,
    #[arg(long = "K", default_value_t = 1)]
    pub k: usize,
    /// Infinite-range components sharing one coupling each; fields stay zero.
    #[arg(long)]
    pub tie_ir: bool,
    #[arg(long, default_value_t = 1.0)]
    pub beta: f64,
    #[arg(long, value_enum, default_value_t = InitKind::Codeword)]
    pub init: InitKind,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Candidate pool for codeword selection; defaults to min(B, max(10K, 100)).
    #[arg(long)]
    pub subset_size: Option<usize>,
    /// L2 strength; defaults to 0 for binary data and 0.01 otherwise.
    #[arg(long)]
    pub lambda: Option<f64>,
    #[arg(long, default_value_t = 200)]
    pub max_iter: usize,
    /// Relative change of the mixture log-PL that ends the EM loop.
    #[arg(long, default_value_t = 1e-6)]
    pub tol: f64,
    #[arg(long)]
    pub out: PathBuf,
    /// Per-iteration CSV report.
    #[arg(long)]
    pub report: Option<PathBuf>,
    /// Hard component assignment of every sample.
    #[arg(long)]
    pub labels: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SurfaceArgs {
    #[arg(long)]
    pub data: PathBuf,
    #[arg(long = "K", default_value_t = 1)]
    pub k: usize,
    #[arg(long, default_value_t = 0.001)]
    pub beta: f64,
    /// `min:max:steps`, inclusive.
    #[arg(long, allow_hyphen_values = true)]
    pub grid: String,
    /// Grid of the second coupling for K=2; defaults to --grid.
    #[arg(long, allow_hyphen_values = true)]
    pub grid2: Option<String>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct DcaScoreArgs {
    #[arg(long)]
    pub model: PathBuf,
    /// 0-based component index.
    #[arg(long, default_value_t = 0)]
    pub component: usize,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct TpRateArgs {
    /// `i,j,score` CSV.
    #[arg(long)]
    pub scores: PathBuf,
    /// `i,j` CSV of true contacts, 1-based.
    #[arg(long)]
    pub contacts: PathBuf,
    /// Only pairs with `j - i > min_sep` are ranked.
    #[arg(long, default_value_t = 4)]
    pub min_sep: usize,
    /// Sequence length; must match the scores when given.
    #[arg(long)]
    pub length: Option<usize>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("usage: {0}")]
    Usage(String),
    #[error(transparent)]
    Runtime(#[from] anyhow::Error),
}

impl From<mixpl::Error> for CliError {
    fn from(e: mixpl::Error) -> Self {
        CliError::Runtime(e.into())
    }
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Runtime(_) => 1,
        }
    }
}

/// `mixpl` followed by the arguments, quoted where they contain whitespace.
pub fn invocation(args: &[String]) -> String {
    std::iter::once("mixpl".to_string())
        .chain(args.iter().skip(1).map(|a| {
            if a.is_empty() || a.chars().any(char::is_whitespace) {
                format!("{a:?}")
            } else {
                a.clone()
            }
        }))
        .collect::<Vec<_>>()
        .join(" ")
}

pub fn run(cli: &Cli, invocation: &str) -> Result<(), CliError> {
    match &cli.command {
        Command::Generate(a) => commands::generate(a, invocation),
        Command::Fit(a) => commands::fit_command(a, invocation),
        Command::Surface(a) => commands::surface(a, invocation),
        Command::DcaScore(a) => commands::dca_score(a, invocation),
        Command::Tprate(a) => commands::tprate(a, invocation),
    }
}

/// Parses `args` (program name first), runs the command and returns the exit code.
pub fn main_with_args(args: Vec<String>) -> i32 {
    let cli = match Cli::try_parse_from(&args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    match run(&cli, &invocation(&args)) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e:#}");
            e.exit_code()
        }
    }
}
