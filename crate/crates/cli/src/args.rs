use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::report::Format;

/// Cat-state visibility behind a beam splitter.
///
/// Every flag can also be set through an environment variable named
/// `CATVIS_<FLAG>` (upper case, dashes as underscores).
#[derive(Debug, Parser)]
#[command(name = "catvis", version, about)]
pub struct Cli {
    /// Increase log verbosity (-v info, -vv debug).
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    pub verbose: u8,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Closed-form, which-path and (optionally) Fock-space visibility.
    Visibility(VisibilityArgs),
    /// Two-mode Husimi function on a grid, or a single-mode marginal.
    Qfunction(QfunctionArgs),
    /// Post-selected rate against interferometer phase, with a sinusoid fit.
    Fringe(FringeArgs),
    /// Cartesian sweep over reflectivity, |alpha0| and phi.
    Sweep(SweepArgs),
}

#[derive(Debug, Clone, Args)]
pub struct PhysicsArgs {
    /// Beam-splitter reflectivity R in [0, 1).
    #[arg(long = "R", visible_alias = "r", env = "CATVIS_R", default_value_t = 0.1, allow_negative_numbers = true)]
    pub reflectivity: f64,

    /// Cat amplitude |alpha0|.
    #[arg(long, env = "CATVIS_ALPHA0", default_value_t = 2.0)]
    pub alpha0: f64,

    /// Phase of alpha0 (default pi/2, i.e. alpha0 = i|alpha0|).
    #[arg(long, env = "CATVIS_ALPHA0_PHASE", default_value_t = std::f64::consts::FRAC_PI_2, allow_negative_numbers = true)]
    pub alpha0_phase: f64,

    /// Half-angle phi between the cat components.
    #[arg(long, env = "CATVIS_PHI", default_value_t = std::f64::consts::FRAC_PI_4, allow_negative_numbers = true)]
    pub phi: f64,

    /// Single-photon interferometer phase theta.
    #[arg(long, env = "CATVIS_THETA", default_value_t = 0.0, allow_negative_numbers = true)]
    pub theta: f64,

    /// Read every angle flag in degrees.
    #[arg(long, env = "CATVIS_DEGREES")]
    pub degrees: bool,
}

#[derive(Debug, Clone, Args)]
pub struct NumericArgs {
    /// Fock cutoff of mode A (default ceil(|a|^2 + 8|a| + 10)).
    #[arg(long, env = "CATVIS_CUTOFF_A")]
    pub cutoff_a: Option<usize>,

    /// Fock cutoff of mode B (default sized for R|alpha0|).
    #[arg(long, env = "CATVIS_CUTOFF_B")]
    pub cutoff_b: Option<usize>,

    #[command(flatten)]
    pub grid: GridArgs,
}

#[derive(Debug, Clone, Args)]
pub struct GridArgs {
    /// Phase-space grid half-width per plane.
    #[arg(long, env = "CATVIS_HALF_WIDTH")]
    pub half_width: Option<f64>,

    /// Phase-space grid spacing.
    #[arg(long, env = "CATVIS_SPACING", default_value_t = 0.1)]
    pub spacing: f64,
}

#[derive(Debug, Clone, Args)]
pub struct OutputArgs {
    #[arg(long, value_enum, env = "CATVIS_FORMAT", default_value = "csv")]
    pub format: Format,

    /// Write to this file instead of stdout.
    #[arg(short, long, env = "CATVIS_OUTPUT")]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct VisibilityArgs {
    #[command(flatten)]
    pub physics: PhysicsArgs,
    #[command(flatten)]
    pub numeric: NumericArgs,
    #[command(flatten)]
    pub out: OutputArgs,

    /// Also compute the visibility in the truncated Fock basis.
    #[arg(long, env = "CATVIS_BRUTE_FORCE")]
    pub brute_force: bool,

    /// Also integrate the interference term of the Husimi function.
    #[arg(long, env = "CATVIS_Q_INTEGRAL")]
    pub q_integral: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum StateKind {
    Vacuum,
    Coherent,
    Cat,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Stage {
    /// Before the beam splitter.
    Input,
    /// After the beam splitter.
    Output,
    /// After the beam splitter and the kept interferometer branches.
    PostSelected,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Marginal {
    A,
    B,
    None,
}

#[derive(Debug, Clone, Args)]
pub struct QfunctionArgs {
    #[command(flatten)]
    pub physics: PhysicsArgs,
    #[command(flatten)]
    pub numeric: NumericArgs,
    #[command(flatten)]
    pub out: OutputArgs,

    #[arg(long, value_enum, env = "CATVIS_STATE", default_value = "cat")]
    pub state: StateKind,

    #[arg(long, value_enum, env = "CATVIS_STAGE", default_value = "output")]
    pub stage: Stage,

    /// Integrate out the other mode (`none` writes the full 4-D grid).
    #[arg(long, value_enum, env = "CATVIS_MARGINAL", default_value = "a")]
    pub marginal: Marginal,
}

#[derive(Debug, Clone, Args)]
pub struct FringeArgs {
    #[command(flatten)]
    pub physics: PhysicsArgs,
    #[command(flatten)]
    pub numeric: NumericArgs,
    #[command(flatten)]
    pub out: OutputArgs,

    /// Number of equally spaced theta samples over one period.
    #[arg(long, env = "CATVIS_N_THETA", default_value_t = 16)]
    pub n_theta: usize,
}

#[derive(Debug, Clone, Args)]
pub struct SweepArgs {
    #[arg(long, env = "CATVIS_R_VALUES", value_delimiter = ',', default_value = "0.05,0.1,0.2,0.3,0.5")]
    pub r_values: Vec<f64>,

    #[arg(long, env = "CATVIS_ALPHA0_VALUES", value_delimiter = ',', default_value = "0.5,1,2,3")]
    pub alpha0_values: Vec<f64>,

    /// Defaults to pi/6, pi/4, pi/2.
    #[arg(long, env = "CATVIS_PHI_VALUES", value_delimiter = ',', allow_negative_numbers = true)]
    pub phi_values: Option<Vec<f64>>,

    #[arg(long, env = "CATVIS_ALPHA0_PHASE", default_value_t = std::f64::consts::FRAC_PI_2, allow_negative_numbers = true)]
    pub alpha0_phase: f64,

    #[arg(long, env = "CATVIS_DEGREES")]
    pub degrees: bool,

    /// Add the Fock-space brute-force column.
    #[arg(long, env = "CATVIS_BRUTE_FORCE")]
    pub brute_force: bool,

    /// Add the fringe-fit column.
    #[arg(long, env = "CATVIS_FRINGE")]
    pub fringe: bool,

    #[arg(long, env = "CATVIS_N_THETA", default_value_t = 16)]
    pub n_theta: usize,

    #[command(flatten)]
    pub grid: GridArgs,
    #[command(flatten)]
    pub out: OutputArgs,
}

pub fn angle(x: f64, degrees: bool) -> f64 {
    if degrees {
        x.to_radians()
    } else {
        x
    }
}
