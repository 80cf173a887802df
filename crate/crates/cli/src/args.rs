use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(name = "ensctl", version, about = "Dispersion-robust pulse design and ensemble analysis")]
#[command(args_override_self = true)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Broadband hard-pulse rotation by inverse SLR.
    DesignSlr(DesignSlr),
    /// Band-selective flip pattern by inverse SLR.
    DesignPattern(DesignPattern),
    /// Bracket-word composite pulse robust to rf or offset dispersion.
    DesignComposite(DesignComposite),
    /// Coupling-robust ZZ gate.
    DesignZz(DesignZz),
    /// Propagate a Bloch vector through a pulse over a grid.
    Simulate(Simulate),
    /// Fidelity of a pulse against a target Bloch vector over a grid.
    FidelityMap(FidelityMapArgs),
    /// Lie closure, nilpotency and approximability of a control system.
    AnalyzeLie(AnalyzeLie),
    /// Necessary conditions and reachability for a linear sample set.
    AnalyzeLinear(AnalyzeLinear),
    /// Show that a phase dispersion leaves trajectories unchanged.
    DemoPhase(DemoPhase),
    /// Show the ε² scaling of the Heisenberg integrator.
    DemoHeisenberg(DemoHeisenberg),
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::DesignSlr(_) => "design-slr",
            Command::DesignPattern(_) => "design-pattern",
            Command::DesignComposite(_) => "design-composite",
            Command::DesignZz(_) => "design-zz",
            Command::Simulate(_) => "simulate",
            Command::FidelityMap(_) => "fidelity-map",
            Command::AnalyzeLie(_) => "analyze-lie",
            Command::AnalyzeLinear(_) => "analyze-linear",
            Command::DemoPhase(_) => "demo-phase",
            Command::DemoHeisenberg(_) => "demo-heisenberg",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Axis {
    X,
    Y,
}

impl Axis {
    pub fn index(self) -> usize {
        match self {
            Axis::X => 0,
            Axis::Y => 1,
        }
    }

    pub fn vector(self) -> [f64; 3] {
        match self {
            Axis::X => [1.0, 0.0, 0.0],
            Axis::Y => [0.0, 1.0, 0.0],
        }
    }
}

/// Where a design writes its companions; defaults sit next to `--out`.
#[derive(Clone, Debug, Args)]
pub struct DesignOutputs {
    /// Designed artifact (JSON).
    #[arg(long)]
    pub out: PathBuf,
    /// Diagnostics JSON [default: <out>.diagnostics.json].
    #[arg(long)]
    pub diagnostics: Option<PathBuf>,
    /// Verification fidelity map CSV [default: <out>.fidelity.csv].
    #[arg(long)]
    pub map: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct DesignSlr {
    #[arg(long, value_enum)]
    pub axis: Axis,
    /// Rotation angle (rad), in [0, 2π).
    #[arg(long, allow_negative_numbers = true)]
    pub angle: f64,
    /// Band half-width (rad/s).
    #[arg(long)]
    pub band: f64,
    #[arg(long)]
    pub steps: usize,
    /// Step duration (s).
    #[arg(long)]
    pub dt: f64,
    /// Amplitude bound (rad/s).
    #[arg(long)]
    pub a_max: Option<f64>,
    #[command(flatten)]
    pub outputs: DesignOutputs,
}

#[derive(Debug, Args)]
pub struct DesignPattern {
    /// Flip angle inside the band (rad).
    #[arg(long)]
    pub inside: f64,
    /// Flip angle outside the band (rad).
    #[arg(long, default_value_t = 0.0)]
    pub outside: f64,
    /// Band half-width (rad/s).
    #[arg(long)]
    pub half_band: f64,
    /// Width of the unweighted transition around each band edge (rad/s).
    #[arg(long)]
    pub transition: f64,
    #[arg(long)]
    pub steps: usize,
    #[arg(long)]
    pub dt: f64,
    /// Profile samples [default: 16 per step].
    #[arg(long)]
    pub samples: Option<usize>,
    #[command(flatten)]
    pub outputs: DesignOutputs,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum CompositeKind {
    /// Rotation robust to rf amplitude scaling ε.
    Robust,
    /// Strong-rf rotation following a polynomial in the offset ω.
    Omega,
}

#[derive(Debug, Args)]
pub struct DesignComposite {
    #[arg(long, value_enum, default_value_t = CompositeKind::Robust)]
    pub kind: CompositeKind,
    #[arg(long, value_enum, default_value_t = Axis::X)]
    pub axis: Axis,
    /// Target angle (rad); for `omega` the constant term of the target.
    #[arg(long, allow_negative_numbers = true)]
    pub angle: f64,
    /// Linear-in-ω part of the target angle (`omega` only).
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    pub slope: f64,
    /// Lower end of the dispersion range [default: 0.9 for ε, −1 for ω].
    #[arg(long, allow_negative_numbers = true)]
    pub min: Option<f64>,
    /// Upper end of the dispersion range [default: 1.1 for ε, 1 for ω].
    #[arg(long, allow_negative_numbers = true)]
    pub max: Option<f64>,
    #[arg(long, default_value_t = 21)]
    pub points: usize,
    /// Exponents of the fit basis [default: 1,3,5 for ε, 0,1 for ω].
    #[arg(long, value_delimiter = ',')]
    pub basis: Option<Vec<u32>>,
    #[arg(long, default_value_t = 1e-2, value_parser = positive)]
    pub tol: f64,
    #[arg(long, default_value_t = 16)]
    pub subdivisions: usize,
    /// Duration of one leaf pulse (s).
    #[arg(long, default_value_t = 1e-4)]
    pub leaf_dt: f64,
    /// Only the x quadrature is available (`omega` only).
    #[arg(long)]
    pub single_quadrature: bool,
    #[command(flatten)]
    pub outputs: DesignOutputs,
}

#[derive(Debug, Args)]
pub struct DesignZz {
    /// Gate angle θ of exp(−iθσzσz).
    #[arg(long, allow_negative_numbers = true)]
    pub theta: f64,
    /// Nominal coupling (rad/s).
    #[arg(long)]
    pub j0: f64,
    /// Relative coupling spread.
    #[arg(long)]
    pub delta: f64,
    /// Odd powers of J.
    #[arg(long, value_delimiter = ',', default_value = "1,3")]
    pub basis: Vec<u32>,
    #[arg(long, default_value_t = 1e-2, value_parser = positive)]
    pub tol: f64,
    /// Subdivisions of each bracket word.
    #[arg(long, default_value_t = 64)]
    pub subdivisions: usize,
    #[arg(long, default_value_t = 21)]
    pub samples: usize,
    #[command(flatten)]
    pub outputs: DesignOutputs,
}

#[derive(Debug, Args)]
pub struct Simulate {
    #[arg(long)]
    pub pulse: PathBuf,
    #[arg(long)]
    pub grid: PathBuf,
    /// Initial Bloch vector.
    #[arg(long, value_delimiter = ',', default_value = "0,0,1", allow_negative_numbers = true)]
    pub initial: Vec<f64>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct FidelityMapArgs {
    #[arg(long)]
    pub pulse: PathBuf,
    #[arg(long)]
    pub grid: PathBuf,
    #[arg(long, value_delimiter = ',', default_value = "0,0,1", allow_negative_numbers = true)]
    pub initial: Vec<f64>,
    /// Target Bloch vector.
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    pub target: Vec<f64>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum LieSystem {
    /// {εΩx, εΩy}: rf amplitude scaling.
    EpsRf,
    /// {ωΩz, Ωx, Ωy}: offset under strong rf.
    StrongRf,
    /// {ε₁Ωx, ε₂Ωy}: independent scalings per quadrature.
    TwoParam,
    /// {B1, J·B2}: two qubits with uncertain coupling.
    Coupling,
    /// Heisenberg integrator, as matrices and as vector fields.
    Heisenberg,
    /// Rotated-frame rf generators sampled over θ.
    Phase,
}

impl LieSystem {
    pub fn parameter(self) -> &'static str {
        match self {
            LieSystem::EpsRf | LieSystem::TwoParam => "epsilon",
            LieSystem::StrongRf => "omega",
            LieSystem::Coupling => "J",
            LieSystem::Heisenberg | LieSystem::Phase => "theta",
        }
    }
}

#[derive(Debug, Args)]
pub struct AnalyzeLie {
    #[arg(long, value_enum)]
    pub system: LieSystem,
    #[arg(long, default_value_t = 8)]
    pub depth: usize,
    /// Drop the y quadrature (`strong-rf` only).
    #[arg(long)]
    pub single_quadrature: bool,
    /// Samples of θ for `phase`.
    #[arg(long, default_value_t = 33)]
    pub points: usize,
    /// Polynomial target c₀ + c₁p + … in the system parameter p; enables
    /// the approximability check.
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    pub fit_target: Option<Vec<f64>>,
    /// Powers of p available to the fit.
    #[arg(long, value_delimiter = ',', default_value = "1,3,5")]
    pub fit_powers: Vec<u32>,
    #[arg(long, default_value_t = -1.0, allow_negative_numbers = true)]
    pub fit_min: f64,
    #[arg(long, default_value_t = 1.0, allow_negative_numbers = true)]
    pub fit_max: f64,
    #[arg(long, default_value_t = 21)]
    pub fit_points: usize,
    #[arg(long, default_value_t = 1e-6, value_parser = positive)]
    pub fit_tol: f64,
    /// Also write the report here.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct AnalyzeLinear {
    /// Sample-set JSON.
    #[arg(long)]
    pub samples: PathBuf,
    /// Control steps for the reachability check; it is repeated at twice
    /// this horizon.
    #[arg(long, default_value_t = 8)]
    pub horizon: usize,
    #[arg(long, default_value_t = 0.1)]
    pub dt: f64,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct DemoPhase {
    #[arg(long)]
    pub pulse: PathBuf,
    /// Phase offsets θ, strictly increasing.
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    pub thetas: Vec<f64>,
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    pub omega: f64,
    #[arg(long, default_value_t = 1.0, allow_negative_numbers = true)]
    pub epsilon: f64,
    #[arg(long, default_value_t = 1e-9, value_parser = positive)]
    pub tol: f64,
}

#[derive(Debug, Args)]
pub struct DemoHeisenberg {
    #[arg(long, value_delimiter = ',', default_value = "0.5,1,2", allow_negative_numbers = true)]
    pub epsilons: Vec<f64>,
    /// Random control draws.
    #[arg(long, default_value_t = 20)]
    pub draws: usize,
    /// Piecewise-constant control samples per draw.
    #[arg(long, default_value_t = 16)]
    pub samples: usize,
    #[arg(long, default_value_t = 0.1)]
    pub dt: f64,
    #[arg(long, default_value_t = 7)]
    pub seed: u64,
    /// Common final x₃ the ensemble is asked to reach.
    #[arg(long, default_value_t = 1.0, allow_negative_numbers = true)]
    pub target: f64,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

fn positive(s: &str) -> Result<f64, String> {
    let x: f64 = s.parse().map_err(|e| format!("{e}"))?;
    if x > 0.0 && x.is_finite() {
        Ok(x)
    } else {
        Err(format!("tolerance must be positive, got {s}"))
    }
}
