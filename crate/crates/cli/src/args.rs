//! Command-line surface.

use std::path::PathBuf;

use clap::{ArgGroup, Args, Parser, Subcommand, ValueEnum};

use crate::grid::{parse_grid, Grid};
use crate::output::Format;

/// Environment variable naming the directory that relative `--out` paths
/// are resolved against.
pub const OUT_DIR_ENV: &str = "PHASEDPC_OUT_DIR";

#[derive(Debug, Parser)]
#[command(
    name = "phasedpc",
    version,
    about = "Rates for dirty-paper coding with uncertain interference phase",
    after_help = "Grids: a number, a comma list, or start:step:stop (stop included within half a step).\n\
                  Power-valued flags come in --x-db / --x-linear pairs; give at most one of each pair."
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Phase-unknown upper bound against treat-as-noise and interference-free rates.
    Bound(BoundArgs),
    /// Fade-dependent bound, outage probability and rate at a target outage.
    Outage(OutageArgs),
    /// Sectoring of the phase circle and the optimal sector count.
    Sector(SectorArgs),
    /// Effective rate with phase training over a coherence block.
    Feedback(FeedbackArgs),
    /// Monte Carlo oracles.
    Simulate(SimulateArgs),
    /// Run a command described by a TOML config file.
    Sweep(SweepArgs),
}

macro_rules! power_pair {
    ($name:ident, $db:literal, $lin:literal, $what:literal) => {
        #[derive(Debug, Clone, Args)]
        pub struct $name {
            #[arg(long = $db, id = $db, value_name = "DB", value_parser = parse_grid, allow_hyphen_values = true,
                  conflicts_with = $lin, help = concat!($what, " in dB"))]
            pub db: Option<Grid>,
            #[arg(long = $lin, id = $lin, value_name = "LINEAR", value_parser = parse_grid, allow_hyphen_values = true,
                  help = concat!($what, " on a linear scale"))]
            pub linear: Option<Grid>,
        }
    };
}

power_pair!(PPower, "p-db", "p-linear", "Secondary transmit power P");
power_pair!(QPower, "q-db", "q-linear", "Interference power Q");
power_pair!(NPower, "n-db", "n-linear", "Noise power N (default 1)");
power_pair!(DPower, "distortion-db", "distortion-linear", "Quantizer distortion D (default 1)");

#[derive(Debug, Clone, Args)]
pub struct Sigma2Power {
    #[arg(long = "sigma2-db", id = "sigma2-db", value_name = "DB", value_parser = parse_grid, allow_hyphen_values = true,
          conflicts_with = "sigma2-linear", help = "Rayleigh parameter σ² in dB")]
    pub db: Option<Grid>,
    #[arg(long = "sigma2-linear", id = "sigma2-linear", visible_alias = "sigma2", value_name = "LINEAR",
          value_parser = parse_grid, allow_hyphen_values = true, help = "Rayleigh parameter σ² on a linear scale")]
    pub linear: Option<Grid>,
}

#[derive(Debug, Clone, Args)]
pub struct OutputArgs {
    /// Output file; relative paths resolve against $PHASEDPC_OUT_DIR when set.
    /// Standard output when absent.
    #[arg(long, value_name = "PATH")]
    pub out: Option<PathBuf>,
    /// Output format; defaults to json for a .json path, csv otherwise.
    #[arg(long, value_enum)]
    pub format: Option<Format>,
    /// Also write a gnuplot script next to the CSV output.
    #[arg(long, requires = "out")]
    pub gnuplot: bool,
}

#[derive(Debug, Clone, Args)]
pub struct BoundArgs {
    #[command(flatten)]
    pub p: PPower,
    #[command(flatten)]
    pub q: QPower,
    #[command(flatten)]
    pub n: NPower,
    /// Residual phase width; adds an `achievable` column.
    #[arg(long, value_parser = parse_grid, allow_hyphen_values = true, value_name = "RAD")]
    pub delta_phi: Option<Grid>,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Clone, Args)]
#[command(group(ArgGroup::new("mode").required(true).args(["gamma", "rate", "p_out"])))]
pub struct OutageArgs {
    #[command(flatten)]
    pub p: PPower,
    #[command(flatten)]
    pub q: QPower,
    #[command(flatten)]
    pub n: NPower,
    #[command(flatten)]
    pub sigma2: Sigma2Power,
    /// Sweep the fade coefficient γ and print the bound against it.
    #[arg(long, value_parser = parse_grid, allow_hyphen_values = true)]
    pub gamma: Option<Grid>,
    /// Committed rate(s); prints the outage probability lower bound.
    #[arg(long, value_parser = parse_grid, allow_hyphen_values = true, value_name = "BITS")]
    pub rate: Option<Grid>,
    /// Target outage probability; prints the rate upper bound.
    #[arg(long, value_parser = parse_grid, allow_hyphen_values = true, value_name = "PROB")]
    pub p_out: Option<Grid>,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Clone, Args)]
pub struct SectorArgs {
    #[command(flatten)]
    pub p: PPower,
    #[command(flatten)]
    pub q: QPower,
    #[command(flatten)]
    pub n: NPower,
    /// Largest sector count searched.
    #[arg(long, default_value_t = phasedpc::achievable::DEFAULT_K_MAX)]
    pub k_max: u32,
    /// Evaluate this sector count instead of optimizing.
    #[arg(long)]
    pub k: Option<u32>,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ModeChoice {
    Contiguous,
    Bursty,
    Both,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum QuantizerChoice {
    Printed,
    Standard,
}

impl From<QuantizerChoice> for phasedpc::feedback::QuantizerChannel {
    fn from(q: QuantizerChoice) -> Self {
        match q {
            QuantizerChoice::Printed => Self::Printed,
            QuantizerChoice::Standard => Self::StandardTestChannel,
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct FeedbackArgs {
    #[command(flatten)]
    pub p: PPower,
    #[command(flatten)]
    pub q: QPower,
    /// Coherence lengths in symbols.
    #[arg(long, value_parser = parse_grid, allow_hyphen_values = true, value_name = "SYMBOLS", required = true)]
    pub l_coh: Grid,
    #[arg(long, value_enum, default_value_t = ModeChoice::Both)]
    pub mode: ModeChoice,
    /// Phase-estimate outage probability.
    #[arg(long, default_value_t = phasedpc::feedback::DEFAULT_CONFIDENCE)]
    pub confidence: f64,
    /// Points in each of the distortion and phase-width grids.
    #[arg(long, default_value_t = phasedpc::feedback::DEFAULT_GRID_POINTS)]
    pub grid_points: usize,
    #[arg(long, value_enum, default_value_t = QuantizerChoice::Printed)]
    pub quantizer: QuantizerChoice,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SimKind {
    /// LLSE error against the closed form.
    Llse,
    /// Dead-zone phase estimator tail probabilities.
    Phase,
    /// Rayleigh outage frequency against the interval bound.
    Outage,
}

#[derive(Debug, Clone, Args)]
pub struct SimulateArgs {
    #[arg(long, value_enum)]
    pub kind: SimKind,
    #[command(flatten)]
    pub p: PPower,
    #[command(flatten)]
    pub q: QPower,
    #[command(flatten)]
    pub n: NPower,
    #[command(flatten)]
    pub sigma2: Sigma2Power,
    #[command(flatten)]
    pub distortion: DPower,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Samples (or trials) per row; each kind has its own default.
    #[arg(long)]
    pub samples: Option<u64>,
    /// Costa scaling α (llse).
    #[arg(long, value_parser = parse_grid, allow_hyphen_values = true)]
    pub alpha: Option<Grid>,
    /// Phase width Δφ (llse, phase).
    #[arg(long, value_parser = parse_grid, allow_hyphen_values = true, value_name = "RAD")]
    pub delta_phi: Option<Grid>,
    /// True phase offset φ; llse defaults to Δφ, phase to 0.
    #[arg(long, value_parser = parse_grid, allow_hyphen_values = true, value_name = "RAD")]
    pub phi: Option<Grid>,
    /// Dead-zone length; derived from Δφ and the confidence when absent (phase).
    #[arg(long)]
    pub tau: Option<u64>,
    #[arg(long, default_value_t = phasedpc::feedback::DEFAULT_CONFIDENCE)]
    pub confidence: f64,
    #[arg(long, value_enum, default_value_t = QuantizerChoice::Printed)]
    pub quantizer: QuantizerChoice,
    /// Committed rate(s) (outage).
    #[arg(long, value_parser = parse_grid, allow_hyphen_values = true, value_name = "BITS")]
    pub rate: Option<Grid>,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Clone, Args)]
pub struct SweepArgs {
    /// TOML file with a `command` key and one key per flag.
    #[arg(long, value_name = "FILE")]
    pub config: PathBuf,
    /// Overrides the config's `out`.
    #[arg(long, value_name = "PATH")]
    pub out: Option<PathBuf>,
}
