use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

/// Condensate-density lower bounds for gapped superstable Bose gases.
///
/// Units are reduced: hbar^2/2m = 1, kB = 1.
#[derive(Parser, Debug)]
#[command(name = "bec-kit", version)]
pub struct Cli {
    /// key = value file supplying any long flag; the command line wins
    #[arg(long, global = true, value_name = "PATH")]
    pub config: Option<PathBuf>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Positive-type certification of a pair potential
    PotentialCheck(PotentialCheckArgs),
    /// Condensate lower bounds
    #[command(subcommand)]
    Bound(BoundCommand),
    /// Gapped mean-field reference gas
    Meanfield(MeanfieldArgs),
    /// Finite-volume oracle checks
    Verify(VerifyArgs),
}

#[derive(Subcommand, Debug)]
pub enum BoundCommand {
    /// Bound at one parameter point
    Eval(BoundEvalArgs),
    /// Smallest gap that certifies a condensate density of at least eta
    DeltaMin(DeltaMinArgs),
    /// Bound over a parameter grid
    Sweep(BoundSweepArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ModelKind {
    Gaussian,
    Exponential,
    Table,
}

#[derive(Args, Debug, Clone)]
pub struct OutputArgs {
    #[arg(long, value_enum)]
    pub format: Option<Format>,
    /// write here instead of stdout
    #[arg(long, short = 'o', value_name = "PATH")]
    pub output: Option<PathBuf>,
    /// leave out the metadata block (for byte-for-byte comparisons)
    #[arg(long)]
    pub no_meta: bool,
}

#[derive(Args, Debug, Clone)]
pub struct PotentialArgs {
    #[arg(long, value_enum)]
    pub model: ModelKind,
    /// amplitude v(0) of an analytic model
    #[arg(long)]
    pub v0: Option<f64>,
    /// gaussian width
    #[arg(long)]
    pub sigma: Option<f64>,
    /// exponential decay rate
    #[arg(long)]
    pub kappa: Option<f64>,
    /// two-column radial table "r v(r)"
    #[arg(long, value_name = "PATH")]
    pub table: Option<PathBuf>,
    /// largest wavenumber of the positivity scan
    #[arg(long, default_value_t = 20.0)]
    pub q_max: f64,
    #[arg(long, default_value_t = 401)]
    pub samples: usize,
}

#[derive(Args, Debug)]
pub struct PotentialCheckArgs {
    #[command(flatten)]
    pub potential: PotentialArgs,
    #[arg(long, default_value_t = 3)]
    pub dim: u32,
    /// superstability slack in A = v̂(0)(1 − epsilon)
    #[arg(long, default_value_t = 0.0)]
    pub epsilon: f64,
    #[command(flatten)]
    pub out: OutputArgs,
}

#[derive(Args, Debug, Clone)]
pub struct GaplessArgs {
    /// "rigorous" or a nonnegative density
    #[arg(long, default_value = "rigorous")]
    pub rho_gapless: String,
    /// shift range and resolution of the rigorous density bound
    #[arg(long, default_value_t = 1e-3)]
    pub shift_lo: f64,
    #[arg(long, default_value_t = 10.0)]
    pub shift_hi: f64,
    #[arg(long, default_value_t = 200)]
    pub shift_points: usize,
}

#[derive(Args, Debug)]
pub struct BoundEvalArgs {
    #[arg(long)]
    pub beta: f64,
    #[arg(long, allow_hyphen_values = true)]
    pub mu: f64,
    #[arg(long)]
    pub g: f64,
    #[arg(long)]
    pub delta: f64,
    /// reference gap; switches to the reference-gap form of the bound
    #[arg(long)]
    pub delta0: Option<f64>,
    #[arg(long, default_value_t = 3)]
    pub dim: u32,
    #[command(flatten)]
    pub potential: PotentialArgs,
    #[command(flatten)]
    pub gapless: GaplessArgs,
    #[command(flatten)]
    pub out: OutputArgs,
}

#[derive(Args, Debug)]
pub struct DeltaMinArgs {
    #[arg(long)]
    pub beta: f64,
    #[arg(long, allow_hyphen_values = true)]
    pub mu: f64,
    #[arg(long)]
    pub g: f64,
    #[arg(long)]
    pub eta: f64,
    #[arg(long, default_value_t = 1e3)]
    pub delta_cap: f64,
    #[arg(long, default_value_t = 3)]
    pub dim: u32,
    #[command(flatten)]
    pub potential: PotentialArgs,
    #[command(flatten)]
    pub gapless: GaplessArgs,
    #[command(flatten)]
    pub out: OutputArgs,
}

#[derive(Args, Debug)]
pub struct BoundSweepArgs {
    #[arg(long)]
    pub beta: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub mu: Option<f64>,
    #[arg(long)]
    pub g: Option<f64>,
    #[arg(long)]
    pub delta: Option<f64>,
    #[arg(long)]
    pub delta0: Option<f64>,
    #[arg(long, default_value_t = 3)]
    pub dim: u32,
    /// grid "name=start:stop:count" over beta, mu, g or delta; repeatable
    #[arg(long, value_name = "NAME=A:B:N", allow_hyphen_values = true)]
    pub sweep: Vec<String>,
    #[command(flatten)]
    pub potential: PotentialArgs,
    #[command(flatten)]
    pub gapless: GaplessArgs,
    #[command(flatten)]
    pub out: OutputArgs,
}

#[derive(Args, Debug)]
pub struct MeanfieldArgs {
    #[arg(long)]
    pub beta: f64,
    #[arg(long, allow_hyphen_values = true)]
    pub mu: Option<f64>,
    #[arg(long)]
    pub g: f64,
    #[arg(long, default_value_t = 1.0)]
    pub lambda: f64,
    #[arg(long, default_value_t = 0.0)]
    pub delta: f64,
    #[arg(long, default_value_t = 3)]
    pub dim: u32,
    /// chemical-potential grid "mu=start:stop:count"; emits a CSV phase diagram
    #[arg(long, value_name = "mu=A:B:N", allow_hyphen_values = true)]
    pub sweep: Option<String>,
    #[command(flatten)]
    pub out: OutputArgs,
}

#[derive(Args, Debug)]
pub struct VerifyArgs {
    #[arg(long, default_value_t = 1.0)]
    pub beta: f64,
    #[arg(long, default_value_t = 2.0, allow_hyphen_values = true)]
    pub mu: f64,
    #[arg(long, default_value_t = 1.0)]
    pub g: f64,
    #[arg(long, default_value_t = 1.0)]
    pub lambda: f64,
    #[arg(long, default_value_t = 1.0)]
    pub delta: f64,
    #[arg(long, default_value_t = 3)]
    pub dim: u32,
    /// box sides of the convergence check, comma separated
    #[arg(long, value_delimiter = ',', default_values_t = vec![6.0, 8.0, 10.0, 12.0])]
    pub sides: Vec<f64>,
    #[arg(long, default_value_t = 4.0)]
    pub pair_side: f64,
    #[arg(long, default_value_t = 6.0)]
    pub convexity_side: f64,
    #[command(flatten)]
    pub out: OutputArgs,
}
