use std::path::PathBuf;

use clap::{ArgAction, Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

#[derive(Debug, Parser)]
#[command(
    name = "mdimer",
    version,
    about = "Two-population mean-field monomer-dimer model: exact sums, variational pressure, critical analysis"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

/// Flags shared by every subcommand.
#[derive(Debug, Clone, Args)]
pub struct Common {
    /// Write to this file instead of stdout.
    #[arg(long)]
    pub output: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Json)]
    pub format: Format,
    /// Seed for the randomized methods.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Parallel reductions are always merged in a fixed order; the flag is
    /// recorded in the output for provenance.
    #[arg(long, num_args = 0..=1, default_value_t = true, default_missing_value = "true", action = ArgAction::Set)]
    pub determinism: bool,
    /// Worker threads for the parallel kernels (default: all cores).
    #[arg(long)]
    pub threads: Option<usize>,
    /// key=value file, one per line; its entries override flags.
    #[arg(long)]
    pub config: Option<PathBuf>,
}

/// `α`, `h` and `J` for the full model.
#[derive(Debug, Clone, Args)]
pub struct ModelArgs {
    #[arg(long, default_value_t = 0.5)]
    pub alpha: f64,
    /// Fields `h_A,h_B,h_AB`.
    #[arg(long, value_delimiter = ',', num_args = 1, action = ArgAction::Set, default_value = "0,0,0", allow_hyphen_values = true)]
    pub h: Vec<f64>,
    /// Couplings, 9 values row-major in the order A, B, AB.
    #[arg(long, value_delimiter = ',', num_args = 1, action = ArgAction::Set, default_value = "0,0,0,0,0,0,0,0,0", allow_hyphen_values = true)]
    pub j: Vec<f64>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Exact log Z_N and Gibbs averages by enumeration over an N grid.
    Exact {
        #[command(flatten)]
        model: ModelArgs,
        /// System sizes, comma separated.
        #[arg(long = "N", value_delimiter = ',', num_args = 1, action = ArgAction::Set, required = true)]
        n: Vec<u64>,
        /// Largest N accepted.
        #[arg(long, default_value_t = mdimer::model::DEFAULT_ENUMERATION_CAP)]
        cap: u64,
        #[command(flatten)]
        common: Common,
    },
    /// Variational pressure and all global maximizers.
    Pressure {
        #[command(flatten)]
        model: ModelArgs,
        #[command(flatten)]
        common: Common,
    },
    /// Critical point (d_c, h_c, J_c) and its small-alpha residuals.
    Critical {
        /// One or more alpha values.
        #[arg(long, value_delimiter = ',', num_args = 1, action = ArgAction::Set, default_value = "1e-3")]
        alpha: Vec<f64>,
        #[command(flatten)]
        common: Common,
    },
    /// All stationary points of the reduced problem over an (h, J) grid.
    Branches {
        #[arg(long, default_value_t = 1e-3)]
        alpha: f64,
        /// Default: h_c - 0.25 d_c J_c - 0.5.
        #[arg(long, allow_hyphen_values = true)]
        h_min: Option<f64>,
        /// Default: h_c + 0.5.
        #[arg(long, allow_hyphen_values = true)]
        h_max: Option<f64>,
        #[arg(long, default_value_t = 41)]
        h_steps: usize,
        /// Default: 0.9 J_c.
        #[arg(long)]
        j_min: Option<f64>,
        /// Default: 1.5 J_c.
        #[arg(long)]
        j_max: Option<f64>,
        #[arg(long, default_value_t = 7)]
        j_steps: usize,
        #[command(flatten)]
        common: Common,
    },
    /// Square-root law along the tangent path J = J_c + delta, h = h_c - d_c delta.
    Exponent {
        #[arg(long, default_value_t = 1e-3)]
        alpha: f64,
        #[arg(long, default_value_t = 10.0)]
        offset_min: f64,
        /// Default: 0.05 J_c, the largest offset the scan accepts.
        #[arg(long)]
        offset_max: Option<f64>,
        #[arg(long, default_value_t = 25)]
        points: usize,
        #[command(flatten)]
        common: Common,
    },
    /// Critical alpha at scaled coupling J = alpha (1 - alpha) J' and the d_mix scan above it.
    Scaled {
        #[arg(long, default_value_t = 160_000.0)]
        jprime: f64,
        #[arg(long, value_enum, default_value_t = PathArg::Tangent)]
        path: PathArg,
        /// Smallest relative distance (alpha - alpha_c) / alpha_c.
        #[arg(long, default_value_t = 1e-7)]
        rel_min: f64,
        #[arg(long, default_value_t = 1e-4)]
        rel_max: f64,
        #[arg(long, default_value_t = 20)]
        points: usize,
        #[command(flatten)]
        common: Common,
    },
    /// Gaussian-moment representation at J = 0: identity check, restricted moment, super-additivity.
    Gauss {
        #[arg(long, default_value_t = 0.5)]
        alpha: f64,
        #[arg(long, value_delimiter = ',', num_args = 1, action = ArgAction::Set, default_value = "0,0,-1", allow_hyphen_values = true)]
        h: Vec<f64>,
        #[arg(long = "N", value_delimiter = ',', num_args = 1, action = ArgAction::Set, default_value = "2,4,8,16,32,64,128")]
        n: Vec<u64>,
        #[arg(long, value_enum, default_value_t = MethodArg::Quadrature)]
        method: MethodArg,
        /// Monte-Carlo sample count.
        #[arg(long, default_value_t = 1_000_000)]
        samples: u64,
        #[command(flatten)]
        common: Common,
    },
    /// (1/N) log Z_N - p against N, with the C log N / N envelope.
    Convergence {
        #[command(flatten)]
        model: ModelArgs,
        #[arg(long = "N", value_delimiter = ',', num_args = 1, action = ArgAction::Set, default_value = "50,100,200,400,800")]
        n: Vec<u64>,
        #[command(flatten)]
        common: Common,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum PathArg {
    Tangent,
    Frozen,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum MethodArg {
    Quadrature,
    MonteCarlo,
}

impl Command {
    pub fn common(&self) -> &Common {
        match self {
            Command::Exact { common, .. }
            | Command::Pressure { common, .. }
            | Command::Critical { common, .. }
            | Command::Branches { common, .. }
            | Command::Exponent { common, .. }
            | Command::Scaled { common, .. }
            | Command::Gauss { common, .. }
            | Command::Convergence { common, .. } => common,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Command::Exact { .. } => "exact",
            Command::Pressure { .. } => "pressure",
            Command::Critical { .. } => "critical",
            Command::Branches { .. } => "branches",
            Command::Exponent { .. } => "exponent",
            Command::Scaled { .. } => "scaled",
            Command::Gauss { .. } => "gauss",
            Command::Convergence { .. } => "convergence",
        }
    }
}
