use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use glauber_core::dynamics::{Basin, Start};
use glauber_core::exactchain::Starts;
use glauber_core::experiments::{MixingMethod, PhaseTarget, ScalingModel, SweepKind};

#[derive(Debug, Parser)]
#[command(
    name = "glauber",
    version,
    about = "Exact and simulated Glauber dynamics on vertex-weighted exponential random graphs"
)]
pub struct Cli {
    /// JSON object of flag values, keyed by long flag name; flags on the
    /// command line take precedence.
    #[arg(long, global = true, value_name = "FILE")]
    pub config: Option<PathBuf>,

    /// Worker threads for parallel stages (default: all cores).
    #[arg(long, global = true)]
    pub threads: Option<usize>,

    /// Write the result here instead of standard output. A manifest is
    /// written next to it as `<out>.manifest.json`.
    #[arg(long, global = true, value_name = "FILE")]
    pub out: Option<PathBuf>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Fixed points of lambda and the phase (JSON).
    #[command(args_override_self = true)]
    Analyze(ModelArgs),

    /// Critical point for a given cbar or alpha2, with its identities checked (JSON).
    #[command(args_override_self = true)]
    Critical(CriticalArgs),

    /// Spectral gap, mixing time and bottleneck of the level chain (JSON).
    #[command(args_override_self = true)]
    Exact(ExactArgs),

    /// Magnetization trajectory of one chain (CSV).
    #[command(args_override_self = true)]
    Simulate(SimulateArgs),

    /// Coalescence times of the monotone coupling (CSV).
    #[command(args_override_self = true)]
    Couple(CoupleArgs),

    /// Replicated runs over a range of n, with a scaling fit (CSV + JSON).
    #[command(args_override_self = true)]
    Sweep(SweepArgs),

    /// Phase classification over a (p, alpha1) grid at fixed alpha2 (CSV).
    #[command(name = "phase-diagram", args_override_self = true)]
    PhaseDiagram(PhaseDiagramArgs),

    /// Samples of lambda(c), phi(c) or lambda(c) - c (CSV).
    #[command(args_override_self = true)]
    Curve(CurveArgs),

    /// Brute-force comparison with the full 2^n-state chain, n <= 12 (JSON).
    #[command(args_override_self = true)]
    Oracle(ModelArgs),
}

#[derive(Debug, Clone, Args)]
pub struct ModelArgs {
    /// Number of vertices.
    #[arg(long)]
    pub n: Option<usize>,
    /// Prior probability of spin 1, in (0, 1).
    #[arg(long)]
    pub p: f64,
    /// Edge parameter.
    #[arg(long, default_value_t = 0.0)]
    pub a1: f64,
    /// Triangle parameter.
    #[arg(long, default_value_t = 0.0)]
    pub a2: f64,
}

#[derive(Debug, Clone, Args)]
#[group(required = true, multiple = false)]
pub struct CriticalArgs {
    /// Root of phi''' in [1/2, 2/3].
    #[arg(long)]
    pub cbar: Option<f64>,
    /// Triangle parameter; cbar is solved for.
    #[arg(long)]
    pub a2: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum StartsArg {
    Extremes,
    All,
}

impl From<StartsArg> for Starts {
    fn from(s: StartsArg) -> Self {
        match s {
            StartsArg::Extremes => Starts::Extremes,
            StartsArg::All => Starts::All,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum MethodArg {
    Iterate,
    Doubling,
}

impl From<MethodArg> for MixingMethod {
    fn from(m: MethodArg) -> Self {
        match m {
            MethodArg::Iterate => MixingMethod::Iterate,
            MethodArg::Doubling => MixingMethod::Doubling,
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct ExactArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    /// Total-variation threshold for the mixing time.
    #[arg(long, default_value_t = 0.25)]
    pub epsilon: f64,
    #[arg(long, value_enum, default_value_t = StartsArg::Extremes)]
    pub starts: StartsArg,
    #[arg(long, value_enum, default_value_t = MethodArg::Iterate)]
    pub method: MethodArg,
    /// Step cap for iteration (default: 1e9 level-updates of work).
    #[arg(long)]
    pub cap: Option<u64>,
    /// Also emit the kernel and the stationary distribution.
    #[arg(long)]
    pub kernel: bool,
}

fn parse_start(s: &str) -> Result<Start, String> {
    match s {
        "ones" => Ok(Start::AllOnes),
        "zeros" => Ok(Start::AllZeros),
        _ => s
            .strip_prefix("level:")
            .and_then(|k| k.parse().ok())
            .map(Start::Level)
            .ok_or_else(|| format!("expected ones, zeros or level:K, got {s:?}")),
    }
}

#[derive(Debug, Clone, Args)]
pub struct SimulateArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    #[arg(long)]
    pub steps: u64,
    /// Record every `stride` steps.
    #[arg(long, default_value_t = 1)]
    pub stride: u64,
    /// ones, zeros, or level:K (the first K vertices set).
    #[arg(long, default_value = "ones", value_parser = parse_start)]
    pub start: Start,
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, Args)]
pub struct CoupleArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    #[arg(long, default_value_t = 1)]
    pub replicas: u64,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long, default_value_t = 1_000_000_000)]
    pub cap: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum KindArg {
    Mixing,
    Gap,
    Bottleneck,
    Coupling,
    BurnIn,
    Escape,
}

impl From<KindArg> for SweepKind {
    fn from(k: KindArg) -> Self {
        match k {
            KindArg::Mixing => SweepKind::Mixing,
            KindArg::Gap => SweepKind::Gap,
            KindArg::Bottleneck => SweepKind::Bottleneck,
            KindArg::Coupling => SweepKind::Coupling,
            KindArg::BurnIn => SweepKind::BurnIn,
            KindArg::Escape => SweepKind::Escape,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum BasinArg {
    Lower,
    Upper,
}

impl From<BasinArg> for Basin {
    fn from(b: BasinArg) -> Self {
        match b {
            BasinArg::Lower => Basin::Lower,
            BasinArg::Upper => Basin::Upper,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum FitArg {
    PowerLaw,
    NLogN,
    Exponential,
}

impl From<FitArg> for ScalingModel {
    fn from(f: FitArg) -> Self {
        match f {
            FitArg::PowerLaw => ScalingModel::PowerLaw,
            FitArg::NLogN => ScalingModel::NLogN,
            FitArg::Exponential => ScalingModel::Exponential,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum PhaseArg {
    High,
    Low,
    Critical,
}

impl From<PhaseArg> for PhaseTarget {
    fn from(p: PhaseArg) -> Self {
        match p {
            PhaseArg::High => PhaseTarget::High,
            PhaseArg::Low => PhaseTarget::Low,
            PhaseArg::Critical => PhaseTarget::Critical,
        }
    }
}

/// A comma-separated list taken as one value, so a later `--n-values`
/// replaces an earlier one rather than extending it.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Sizes(pub Vec<usize>);

fn parse_sizes(s: &str) -> Result<Sizes, String> {
    s.split(',')
        .map(|t| t.trim().parse().map_err(|e| format!("bad size {t:?}: {e}")))
        .collect::<Result<_, _>>()
        .map(Sizes)
}

#[derive(Debug, Clone, Args)]
pub struct SweepArgs {
    /// Run the canonical experiment for a phase instead of a single sweep.
    #[arg(long, value_enum, conflicts_with_all = ["kind", "p", "a1", "a2", "n_values", "fit"])]
    pub phase: Option<PhaseArg>,
    #[arg(long, value_enum, required_unless_present = "phase")]
    pub kind: Option<KindArg>,
    #[arg(long, required_unless_present = "phase")]
    pub p: Option<f64>,
    #[arg(long, default_value_t = 0.0)]
    pub a1: f64,
    #[arg(long, default_value_t = 0.0)]
    pub a2: f64,
    /// Sizes, comma separated, strictly increasing.
    #[arg(long, value_parser = parse_sizes, required_unless_present = "phase")]
    pub n_values: Option<Sizes>,
    #[arg(long)]
    pub replicas: Option<u64>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub cap: Option<u64>,
    #[arg(long, value_enum, default_value_t = MethodArg::Iterate)]
    pub method: MethodArg,
    /// Starting magnetization for burn-in.
    #[arg(long, default_value_t = 1.0)]
    pub start_c: f64,
    /// Burn-in target magnetization.
    #[arg(long)]
    pub target: Option<f64>,
    #[arg(long, value_enum, default_value_t = BasinArg::Lower)]
    pub basin: BasinArg,
    /// Scaling law fitted to the per-n means.
    #[arg(long, value_enum)]
    pub fit: Option<FitArg>,
    /// Fit `1/y` instead of `y`, as for the gap and the bottleneck ratio.
    #[arg(long, requires = "fit")]
    pub invert: bool,
    /// Where to write the summary and fit JSON (default: `<out>.fit.json`,
    /// or standard error without --out).
    #[arg(long, value_name = "FILE")]
    pub fit_out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct PhaseDiagramArgs {
    #[arg(long, default_value_t = 0.0)]
    pub a2: f64,
    #[arg(long, default_value_t = 0.01)]
    pub p_min: f64,
    #[arg(long, default_value_t = 0.99)]
    pub p_max: f64,
    #[arg(long, default_value_t = 99)]
    pub p_steps: usize,
    #[arg(long, default_value_t = 0.0)]
    pub a1_min: f64,
    #[arg(long, default_value_t = 10.0)]
    pub a1_max: f64,
    #[arg(long, default_value_t = 101)]
    pub a1_steps: usize,
    /// Emit the boundary of the two-maximizer region over the p grid
    /// instead of the classified grid.
    #[arg(long)]
    pub boundary: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum CurveKind {
    Lambda,
    Phi,
    LambdaMinusIdentity,
}

#[derive(Debug, Clone, Args)]
pub struct CurveArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    #[arg(long, value_enum, default_value_t = CurveKind::Lambda)]
    pub what: CurveKind,
    #[arg(long, default_value_t = 1001)]
    pub samples: usize,
}
