//! Resolved run parameters: defaults, overlaid by a flat JSON config file,
//! overlaid by command-line flags.

use std::f64::consts::{FRAC_PI_2, PI};
use std::path::{Path, PathBuf};

use clap::{Args, ValueEnum};
use serde::{Deserialize, Serialize};
use sqswap::fock::Generator;
use sqswap::optimizer::tau_ref;
use sqswap::protocol::ProtocolConfig;

use crate::AppError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum GeneratorArg {
    Oat,
    Tat,
}

impl From<GeneratorArg> for Generator {
    fn from(g: GeneratorArg) -> Self {
        match g {
            GeneratorArg::Oat => Generator::Oat,
            GeneratorArg::Tat => Generator::Tat,
        }
    }
}

/// Every knob any subcommand reads. Squeezing times are in units of
/// `tau_ref` of the chosen generator.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Settings {
    pub n: usize,
    pub tau: f64,
    /// `None` optimizes the orientation at the given mode swap.
    pub nu: Option<f64>,
    pub theta_ms: f64,
    pub phi_ms: f64,
    pub generator: Generator,
    pub msep: bool,
    pub tau_a: f64,
    pub tau_b: f64,
    pub shots: usize,
    pub seed: u64,
    pub threads: Option<usize>,
    pub out: PathBuf,

    pub points: Option<usize>,
    pub tau_max: f64,
    pub grid: usize,
    pub grid_phi: Option<usize>,
    pub phi_min: f64,
    pub phi_max: f64,
    pub rounds: usize,
    pub max_evals: Option<usize>,
    pub polish: usize,
    pub free: Vec<String>,
    pub resolution: usize,
    pub lambda: Option<f64>,
    pub lambda_max: f64,
    pub sigma: Option<f64>,
    pub sigma_max: f64,
    pub phi_a: f64,
    pub phi_b: f64,
    pub t: Vec<f64>,
    pub t_min: f64,
    pub t_max: f64,
    pub t_tot: f64,
    pub gamma_lo: f64,
    pub omega0: f64,
    pub coherent: bool,
}

impl Default for Settings {
    fn default() -> Self {
        let c = sqswap::optimizer::optimal_conditions();
        Self {
            n: 100,
            tau: 0.0,
            nu: None,
            theta_ms: c.theta_ms,
            phi_ms: c.phi_ms,
            generator: Generator::Oat,
            msep: false,
            tau_a: 0.0,
            tau_b: 0.0,
            shots: 100_000,
            seed: 42,
            threads: None,
            out: PathBuf::from("."),
            points: None,
            tau_max: 2.0,
            grid: 64,
            grid_phi: None,
            phi_min: -FRAC_PI_2,
            phi_max: FRAC_PI_2,
            rounds: 3,
            max_evals: None,
            polish: 0,
            free: vec!["nu_e".into(), "phi_ms".into()],
            resolution: 64,
            lambda: None,
            lambda_max: FRAC_PI_2,
            sigma: None,
            sigma_max: 0.2 * PI,
            phi_a: FRAC_PI_2,
            phi_b: FRAC_PI_2,
            t: Vec::new(),
            t_min: 1e-3,
            t_max: 0.05,
            t_tot: 1000.0,
            gamma_lo: 1.0,
            omega0: 1.0,
            coherent: false,
        }
    }
}

/// Flags shared by every subcommand.
#[derive(Debug, Clone, Default, Args)]
pub struct Common {
    /// Total atom number.
    #[arg(long)]
    pub n: Option<usize>,
    /// Entangling time in units of tau_ref.
    #[arg(long)]
    pub tau: Option<f64>,
    /// Orientation angle nu_E (rad); optimized when absent.
    #[arg(long)]
    pub nu: Option<f64>,
    /// Mode-swap strength (rad).
    #[arg(long = "theta-ms", allow_hyphen_values = true)]
    pub theta_ms: Option<f64>,
    /// Mode-swap laser phase (rad).
    #[arg(long = "phi-ms", allow_hyphen_values = true)]
    pub phi_ms: Option<f64>,
    #[arg(long, value_enum)]
    pub generator: Option<GeneratorArg>,
    /// Use the mode-separable reference instead of the mode swap.
    #[arg(long)]
    pub msep: bool,
    /// Squeezing time of the separable interferometer A (units of tau_ref).
    #[arg(long = "tau-a")]
    pub tau_a: Option<f64>,
    /// Squeezing time of the separable interferometer B (units of tau_ref).
    #[arg(long = "tau-b")]
    pub tau_b: Option<f64>,
    #[arg(long)]
    pub shots: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Worker threads for the internal parallel loops.
    #[arg(long)]
    pub threads: Option<usize>,
    /// Output directory.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Flat JSON object whose keys mirror the flag names.
    #[arg(long)]
    pub config: Option<PathBuf>,
}

macro_rules! overlay {
    ($dst:expr, $src:expr, [$($f:ident),* $(,)?]) => {
        $( if let Some(v) = $src.$f.clone() { $dst.$f = v.into(); } )*
    };
}

impl Common {
    pub fn apply(&self, s: &mut Settings) {
        overlay!(s, self, [n, tau, theta_ms, phi_ms, tau_a, tau_b, shots, seed, out]);
        if let Some(nu) = self.nu {
            s.nu = Some(nu);
        }
        if let Some(g) = self.generator {
            s.generator = g.into();
        }
        if let Some(t) = self.threads {
            s.threads = Some(t);
        }
        s.msep |= self.msep;
    }
}

/// Read a config file, accepting either `-` or `_` inside keys.
pub fn load_config(path: &Path) -> Result<Settings, AppError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| AppError::Usage(format!("cannot read config {}: {e}", path.display())))?;
    let value: serde_json::Value = serde_json::from_str(&text)
        .map_err(|e| AppError::Usage(format!("config {} is not valid JSON: {e}", path.display())))?;
    let serde_json::Value::Object(map) = value else {
        return Err(AppError::Usage("config file must hold a flat JSON object".into()));
    };
    let map: serde_json::Map<String, serde_json::Value> =
        map.into_iter().map(|(k, v)| (k.replace('-', "_"), v)).collect();
    serde_json::from_value(serde_json::Value::Object(map))
        .map_err(|e| AppError::Usage(format!("config {}: {e}", path.display())))
}

impl Settings {
    pub fn resolve(common: &Common, specific: impl FnOnce(&mut Settings)) -> Result<Self, AppError> {
        let mut s = match &common.config {
            Some(p) => load_config(p)?,
            None => Settings::default(),
        };
        common.apply(&mut s);
        specific(&mut s);
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<(), AppError> {
        let bad = |m: &str| Err(AppError::Usage(m.to_string()));
        if self.n == 0 {
            return bad("--n must be at least 1");
        }
        if self.tau < 0.0 || self.tau_a < 0.0 || self.tau_b < 0.0 {
            return bad("squeezing times must be non-negative");
        }
        if self.shots == 0 {
            return bad("--shots must be positive");
        }
        if self.grid == 0 || self.resolution < 32 {
            return bad("--grid must be positive and --resolution at least 32");
        }
        if self.points == Some(0) {
            return bad("--points must be positive");
        }
        if self.threads == Some(0) {
            return bad("--threads must be positive");
        }
        Ok(())
    }

    pub fn tau_ref(&self) -> f64 {
        tau_ref(self.n, self.generator)
    }

    /// Protocol configuration at entangling time `tau` (units of `tau_ref`).
    pub fn protocol(&self, tau: f64) -> ProtocolConfig {
        let tr = self.tau_ref();
        ProtocolConfig {
            n: self.n,
            tau_e: tau * tr,
            nu_e: self.nu.unwrap_or(sqswap::optimizer::optimal_conditions().nu_e),
            theta_ms: self.theta_ms,
            phi_ms: self.phi_ms,
            theta_a: FRAC_PI_2,
            theta_b: FRAC_PI_2,
            generator: self.generator,
            tau_s_a: self.tau_a * tr,
            tau_s_b: self.tau_b * tr,
        }
    }
}
