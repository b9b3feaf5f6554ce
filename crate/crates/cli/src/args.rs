use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

/// Environment variable naming the directory that receives output files.
pub const OUT_DIR_ENV: &str = "COLLATZ_FLOWS_OUT_DIR";

#[derive(Debug, Parser)]
#[command(name = "collatz-flows", version, about = "Exact Collatz-map dynamics and the linear Collatz flow")]
pub struct Cli {
    #[command(flatten)]
    pub output: OutputArgs,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, ValueEnum)]
pub enum Format {
    #[default]
    Csv,
    Json,
}

impl Format {
    pub fn extension(self) -> &'static str {
        match self {
            Format::Csv => "csv",
            Format::Json => "json",
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct OutputArgs {
    #[arg(long, value_enum, default_value_t = Format::Csv, global = true)]
    pub format: Format,
    /// Output file; `-` for stdout. Relative paths resolve against
    /// $COLLATZ_FLOWS_OUT_DIR when it is set. Without this flag output goes to
    /// stdout, or to `<subcommand>.<format>` in $COLLATZ_FLOWS_OUT_DIR.
    #[arg(long, short, global = true)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, Args)]
pub struct ParamArgs {
    #[arg(long)]
    pub alpha: u64,
    #[arg(long)]
    pub beta: u64,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Forward orbit with cycle detection.
    Orbit {
        #[command(flatten)]
        params: ParamArgs,
        /// Starting value (any integer, arbitrary size).
        #[arg(long, allow_hyphen_values = true)]
        n: String,
        #[arg(long, default_value_t = 10_000)]
        max_steps: u64,
        /// Largest |value| before the orbit is abandoned: a decimal integer or `2^K`.
        #[arg(long, default_value = "2^256")]
        max_value: String,
    },
    /// Parity vectors of length k.
    Parity {
        #[command(flatten)]
        params: ParamArgs,
        #[arg(long)]
        k: u32,
        /// Only this start value; otherwise every n in [1, 2^k].
        #[arg(long)]
        n: Option<String>,
        /// Check that n -> parity vector is a bijection on [1, 2^k].
        #[arg(long)]
        check_bijection: bool,
    },
    /// Residue-class coefficients a(i,k), b(i,k).
    Coeffs {
        #[command(flatten)]
        params: ParamArgs,
        #[arg(long)]
        k: u32,
        /// Check the decomposition and both coefficient sums.
        #[arg(long)]
        verify: bool,
        /// Largest table order allowed (tables hold 2^k rows).
        #[arg(long, default_value_t = 24)]
        max_k: u32,
    },
    /// Block sums s_k, s_{k,m} and the conserved energy.
    Energy {
        #[command(flatten)]
        params: ParamArgs,
        #[arg(long, required_unless_present = "sweep")]
        n: Option<u64>,
        #[arg(long)]
        k: u32,
        #[arg(long, default_value_t = 1)]
        m: u64,
        /// Inclusive range of starts, `n0..n1`.
        #[arg(long)]
        sweep: Option<String>,
    },
    /// Affine form of the m-th discrete derivative per residue class mod 2^m.
    Deriv {
        #[command(flatten)]
        params: ParamArgs,
        #[arg(long)]
        m: u32,
        /// Check the affine form exhaustively on n <= 2^(m+2), k <= 4.
        #[arg(long)]
        verify: bool,
    },
    /// Solve d/dt u_n = u_C(n) on the forward closure of the initial data.
    Flow(FlowArgs),
    /// Run the full identity suite and emit a certificate.
    Verify {
        #[arg(long, value_enum, default_value_t = Grid::Default)]
        grid: Grid,
        /// Record per-check wall time (makes output nondeterministic).
        #[arg(long)]
        timing: bool,
        /// Worker threads (default: available parallelism).
        #[arg(long)]
        threads: Option<usize>,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Grid {
    /// The five reference pairs at full size.
    Default,
    /// The same pairs with reduced ranges.
    Quick,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Scheme {
    Closed,
    Rk4,
    Picard,
}

#[derive(Debug, Clone, Args)]
pub struct FlowArgs {
    #[command(flatten)]
    pub params: ParamArgs,
    /// `delta:5`, `ones:1,2` or `list:3=1.0+0.5i,7=2.0`.
    #[arg(long)]
    pub init: String,
    #[arg(long)]
    pub t_max: f64,
    /// Number of time steps after t = 0.
    #[arg(long, default_value_t = 10)]
    pub t_steps: usize,
    #[arg(long, value_enum, default_value_t = Scheme::Closed)]
    pub scheme: Scheme,
    /// RK4 step size.
    #[arg(long, default_value_t = 1e-3)]
    pub dt: f64,
    /// Add frequencies 1..=W to the window.
    #[arg(long)]
    pub window: Option<u64>,
    #[arg(long, default_value_t = 100_000)]
    pub max_steps: u64,
}
