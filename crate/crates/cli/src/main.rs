//! `sqswap`: batch driver that turns each experiment into CSV tables plus a
//! JSON manifest.

mod commands;
mod output;
mod settings;

use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use settings::{Common, Settings};

#[derive(Debug)]
pub enum AppError {
    Usage(String),
    Compute(String),
}

impl AppError {
    fn code(&self) -> u8 {
        match self {
            AppError::Usage(_) => 2,
            AppError::Compute(_) => 3,
        }
    }
}

impl std::fmt::Display for AppError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            AppError::Usage(m) => write!(f, "usage error: {m}"),
            AppError::Compute(m) => write!(f, "computation failed: {m}"),
        }
    }
}

#[derive(Parser)]
#[command(name = "sqswap", version, about = "Mode-swapped spin squeezing experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Mid-fringe gain and bandwidth against squeezing time.
    GainScan(ScanArgs),
    /// Gain map over the orientation and the mode-swap phase.
    MsScan(MsScanArgs),
    /// Fraction of the phase plane with gain above one, plus a gain map.
    Bandwidth(ScanArgs),
    /// Gain averaged over a common phase window.
    AvgGain(AvgGainArgs),
    /// Monte Carlo phase estimation under common phase noise.
    Estimate(EstimateArgs),
    /// Differential clock comparison against interrogation time.
    Clock(ClockArgs),
    /// Exact search over the protocol parameters.
    Optimize(OptimizeArgs),
}

#[derive(Args)]
struct Search {
    /// Coarse grid points per searched dimension.
    #[arg(long)]
    grid: Option<usize>,
    /// Coordinate refinement rounds after the grid.
    #[arg(long)]
    rounds: Option<usize>,
    /// Cap on exact evaluations.
    #[arg(long = "max-evals")]
    max_evals: Option<usize>,
}

impl Search {
    fn apply(&self, s: &mut Settings) {
        if let Some(g) = self.grid {
            s.grid = g;
        }
        if let Some(r) = self.rounds {
            s.rounds = r;
        }
        if self.max_evals.is_some() {
            s.max_evals = self.max_evals;
        }
    }
}

#[derive(Args)]
struct ScanArgs {
    #[command(flatten)]
    common: Common,
    #[command(flatten)]
    search: Search,
    /// Number of squeezing times, from 0 to --tau-max inclusive.
    #[arg(long)]
    points: Option<usize>,
    /// Largest squeezing time in units of tau_ref.
    #[arg(long = "tau-max")]
    tau_max: Option<f64>,
    /// Grid resolution of the bandwidth estimate.
    #[arg(long)]
    resolution: Option<usize>,
}

#[derive(Args)]
struct MsScanArgs {
    #[command(flatten)]
    common: Common,
    /// Orientation grid points over [0, 4 pi).
    #[arg(long)]
    grid: Option<usize>,
    /// Mode-swap phase grid points (defaults to --grid).
    #[arg(long = "grid-phi")]
    grid_phi: Option<usize>,
    #[arg(long = "phi-min", allow_hyphen_values = true)]
    phi_min: Option<f64>,
    #[arg(long = "phi-max", allow_hyphen_values = true)]
    phi_max: Option<f64>,
}

#[derive(Args)]
struct AvgGainArgs {
    #[command(flatten)]
    common: Common,
    #[command(flatten)]
    search: Search,
    /// Half-width of the phase window; scans (0, --lambda-max] when absent.
    #[arg(long)]
    lambda: Option<f64>,
    #[arg(long = "lambda-max")]
    lambda_max: Option<f64>,
    #[arg(long)]
    points: Option<usize>,
    /// Quadrature points of the window average.
    #[arg(long)]
    resolution: Option<usize>,
}

#[derive(Args)]
struct EstimateArgs {
    #[command(flatten)]
    common: Common,
    #[command(flatten)]
    search: Search,
    /// Common phase-noise width (rad); scans [0, --sigma-max] when absent.
    #[arg(long)]
    sigma: Option<f64>,
    #[arg(long = "sigma-max")]
    sigma_max: Option<f64>,
    #[arg(long)]
    points: Option<usize>,
    /// Working phase of interferometer A.
    #[arg(long = "phi-a", allow_hyphen_values = true)]
    phi_a: Option<f64>,
    /// Working phase of interferometer B.
    #[arg(long = "phi-b", allow_hyphen_values = true)]
    phi_b: Option<f64>,
}

#[derive(Args)]
struct ClockArgs {
    #[command(flatten)]
    common: Common,
    #[command(flatten)]
    search: Search,
    /// Interrogation times; a log grid from --t-min to --t-max when absent.
    #[arg(long, value_delimiter = ',')]
    t: Vec<f64>,
    #[arg(long = "t-min")]
    t_min: Option<f64>,
    #[arg(long = "t-max")]
    t_max: Option<f64>,
    #[arg(long)]
    points: Option<usize>,
    /// Total interrogation time.
    #[arg(long = "t-tot")]
    t_tot: Option<f64>,
    /// Local-oscillator decoherence rate.
    #[arg(long = "gamma-lo")]
    gamma_lo: Option<f64>,
    /// Reference transition frequency.
    #[arg(long)]
    omega0: Option<f64>,
    /// Unsqueezed reference (forces --tau 0 and --nu 0).
    #[arg(long)]
    coherent: bool,
}

#[derive(Args)]
struct OptimizeArgs {
    #[command(flatten)]
    common: Common,
    #[command(flatten)]
    search: Search,
    /// Searched parameters: nu_e, phi_ms, theta_ms, tau_e.
    #[arg(long, value_delimiter = ',')]
    free: Vec<String>,
    /// Compass-search sweeps after the coordinate refinement.
    #[arg(long)]
    polish: Option<usize>,
}

macro_rules! set {
    ($s:ident, $a:ident, [$($f:ident),* $(,)?]) => {
        $( if let Some(v) = $a.$f { $s.$f = v; } )*
    };
}

fn resolve(cmd: &Command) -> Result<Settings, AppError> {
    match cmd {
        Command::GainScan(a) | Command::Bandwidth(a) => Settings::resolve(&a.common, |s| {
            a.search.apply(s);
            set!(s, a, [tau_max, resolution]);
            if a.points.is_some() {
                s.points = a.points;
            }
        }),
        Command::MsScan(a) => Settings::resolve(&a.common, |s| {
            set!(s, a, [grid, phi_min, phi_max]);
            if a.grid_phi.is_some() {
                s.grid_phi = a.grid_phi;
            }
        }),
        Command::AvgGain(a) => Settings::resolve(&a.common, |s| {
            a.search.apply(s);
            set!(s, a, [lambda_max, resolution]);
            if a.lambda.is_some() {
                s.lambda = a.lambda;
            }
            if a.points.is_some() {
                s.points = a.points;
            }
        }),
        Command::Estimate(a) => Settings::resolve(&a.common, |s| {
            a.search.apply(s);
            set!(s, a, [sigma_max, phi_a, phi_b]);
            if a.sigma.is_some() {
                s.sigma = a.sigma;
            }
            if a.points.is_some() {
                s.points = a.points;
            }
        }),
        Command::Clock(a) => Settings::resolve(&a.common, |s| {
            a.search.apply(s);
            set!(s, a, [t_min, t_max, t_tot, gamma_lo, omega0]);
            if !a.t.is_empty() {
                s.t = a.t.clone();
            }
            if a.points.is_some() {
                s.points = a.points;
            }
            s.coherent |= a.coherent;
        }),
        Command::Optimize(a) => Settings::resolve(&a.common, |s| {
            a.search.apply(s);
            set!(s, a, [polish]);
            if !a.free.is_empty() {
                s.free = a.free.clone();
            }
        }),
    }
}

fn run(cmd: &Command) -> Result<(), AppError> {
    let s = resolve(cmd)?;
    if let Some(t) = s.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(t)
            .build_global()
            .map_err(|e| AppError::Compute(format!("thread pool: {e}")))?;
    }
    match cmd {
        Command::GainScan(_) => commands::gain_scan(&s),
        Command::MsScan(_) => commands::ms_scan(&s),
        Command::Bandwidth(_) => commands::bandwidth_cmd(&s),
        Command::AvgGain(_) => commands::avg_gain(&s),
        Command::Estimate(_) => commands::estimate(&s),
        Command::Clock(_) => commands::clock(&s),
        Command::Optimize(_) => commands::optimize(&s),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(&cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("sqswap: {e}");
            ExitCode::from(e.code())
        }
    }
}
