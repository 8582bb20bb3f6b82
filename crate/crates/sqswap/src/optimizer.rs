//! Reduced objective of the joint `(nu_E, delta_cb)` optimization, its
//! minimum-point functions, and a numerical search over the exact protocol.

use std::collections::HashMap;
use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, FRAC_PI_8, PI};
use std::sync::{Arc, Mutex};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fock::{self, FockBasis, Generator, ModePair, StateVector};
use crate::gaussian::{self, golden_max, OptimalConstants};
use crate::protocol::{InputMoments, Observables, ProtocolConfig};

const TWO_PI: f64 = 2.0 * PI;
const FOUR_PI: f64 = 4.0 * PI;

/// `f(nu, delta, r) = (e^{2r}-1) S^2 - (1-e^{-2r}) C^2` with
/// `S = sin(pi/4 + nu) + sin(pi/4 + nu/2 + delta)` and `C` the matching
/// cosine sum.
pub fn f_objective(nu: f64, delta: f64, r: f64) -> f64 {
    let (e, f) = prefactors(r);
    let (s1, c1) = (FRAC_PI_4 + nu).sin_cos();
    let (s2, c2) = (FRAC_PI_4 + 0.5 * nu + delta).sin_cos();
    e * (s1 + s2).powi(2) - f * (c1 + c2).powi(2)
}

/// `d f / d nu`.
pub fn f_derivative(nu: f64, delta: f64, r: f64) -> f64 {
    let (e, f) = prefactors(r);
    let (s1, c1) = (FRAC_PI_4 + nu).sin_cos();
    let (s2, c2) = (FRAC_PI_4 + 0.5 * nu + delta).sin_cos();
    let s = s1 + s2;
    let c = c1 + c2;
    let ds = c1 + 0.5 * c2;
    let dc = -s1 - 0.5 * s2;
    2.0 * e * s * ds - 2.0 * f * c * dc
}

fn prefactors(r: f64) -> (f64, f64) {
    ((2.0 * r).exp_m1(), -(-2.0 * r).exp_m1())
}

/// Reduce `x` into `[0, 4 pi)`.
pub fn wrap_nu(x: f64) -> f64 {
    let y = x.rem_euclid(FOUR_PI);
    if y >= FOUR_PI { 0.0 } else { y }
}

/// Split `delta = delta0 + k pi/2` with `delta0` in `[-7pi/8, -3pi/8)`.
pub fn canonical_delta(delta: f64) -> (f64, i64) {
    let lo = -7.0 * FRAC_PI_8;
    let k = ((delta - lo) / FRAC_PI_2).floor();
    let mut d0 = delta - k * FRAC_PI_2;
    let mut k = k as i64;
    // guard the upper edge against round-off
    if d0 >= lo + FRAC_PI_2 {
        d0 -= FRAC_PI_2;
        k += 1;
    }
    (d0, k)
}

/// First branch of the minimum point, valid for `delta` in
/// `[-7pi/8, -3pi/8]`. At `r = 0` the `r -> 0` limit is returned.
pub fn nu_min_branch1(delta: f64, r: f64) -> f64 {
    let (e, f) = prefactors(r);
    if e + f <= 1e-300 {
        return nu_small_r_branch1(delta);
    }
    (21.0 * PI / 8.0 * e + 25.0 * PI / 8.0 * f - (0.75 * e + 0.5 * f) * delta)
        / (9.0 / 8.0 * e + 1.25 * f)
}

/// Second branch, `delta` in `[-3pi/8, pi/8]`, tied to the first by
/// `nu_2(delta) = nu_1(delta - pi/2) + pi`.
pub fn nu_min_branch2(delta: f64, r: f64) -> f64 {
    nu_min_branch1(delta - FRAC_PI_2, r) + PI
}

/// Analytic minimum point in `[0, 4pi)` for any `delta`, reduced to the
/// first branch through `nu(delta + pi/2) = nu(delta) + pi`.
pub fn nu_min_analytic(delta: f64, r: f64) -> f64 {
    let (d0, k) = canonical_delta(delta);
    wrap_nu(nu_min_branch1(d0, r) + k as f64 * PI)
}

fn nu_small_r_branch1(delta: f64) -> f64 {
    46.0 * PI / 19.0 - 10.0 * delta / 19.0
}

fn nu_large_r_branch1(delta: f64) -> f64 {
    7.0 * PI / 3.0 - 2.0 * delta / 3.0
}

/// `r -> 0` limit of [`nu_min_analytic`].
pub fn nu_min_small_r(delta: f64) -> f64 {
    let (d0, k) = canonical_delta(delta);
    wrap_nu(nu_small_r_branch1(d0) + k as f64 * PI)
}

/// `r -> infinity` limit of [`nu_min_analytic`].
pub fn nu_min_large_r(delta: f64) -> f64 {
    let (d0, k) = canonical_delta(delta);
    wrap_nu(nu_large_r_branch1(d0) + k as f64 * PI)
}

const SCAN_POINTS: usize = 4096;

fn scan(delta: f64, r: f64) -> Vec<f64> {
    let h = FOUR_PI / SCAN_POINTS as f64;
    (0..SCAN_POINTS)
        .map(|i| f_objective(i as f64 * h, delta, r))
        .collect()
}

/// Refine a bracketed minimum: golden section on `f`, then bisection on the
/// sign change of `f'` when one is bracketed.
fn refine(delta: f64, r: f64, center: f64) -> f64 {
    let h = FOUR_PI / SCAN_POINTS as f64;
    let (lo, hi) = (center - h, center + h);
    let (x, _) = golden_max(|nu| -f_objective(nu, delta, r), lo, hi, 1e-9);
    let (mut a, mut b) = (x - 1e-8, x + 1e-8);
    let (mut fa, fb) = (f_derivative(a, delta, r), f_derivative(b, delta, r));
    if fa < 0.0 && fb > 0.0 {
        for _ in 0..60 {
            let m = 0.5 * (a + b);
            let fm = f_derivative(m, delta, r);
            if (fm < 0.0) == (fa < 0.0) {
                a = m;
                fa = fm;
            } else {
                b = m;
            }
        }
        return wrap_nu(0.5 * (a + b));
    }
    wrap_nu(x)
}

/// Global minimum point of `f` over `nu` in `[0, 4pi)` from a dense scan and
/// local refinement. The objective vanishes identically at `r = 0`, where the
/// small-`r` limit is returned.
pub fn nu_min_numeric(delta: f64, r: f64) -> f64 {
    if r == 0.0 {
        return nu_min_small_r(delta);
    }
    let values = scan(delta, r);
    let (best, _) = values
        .iter()
        .enumerate()
        .fold((0, f64::INFINITY), |acc, (i, &v)| if v < acc.1 { (i, v) } else { acc });
    refine(delta, r, best as f64 * FOUR_PI / SCAN_POINTS as f64)
}

/// Every global minimum point of `f` in `[0, 4pi)`, sorted. Two points are
/// returned on the degenerate lines `delta = -3pi/8 + k pi/2`.
pub fn nu_min_numeric_all(delta: f64, r: f64) -> Vec<f64> {
    let values = scan(delta, r);
    let m = values.len();
    let mut found: Vec<(f64, f64)> = Vec::new();
    for i in 0..m {
        let v = values[i];
        if v <= values[(i + m - 1) % m] && v <= values[(i + 1) % m] {
            let nu = refine(delta, r, i as f64 * FOUR_PI / m as f64);
            found.push((nu, f_objective(nu, delta, r)));
        }
    }
    let fmin = found.iter().map(|p| p.1).fold(f64::INFINITY, f64::min);
    let tol = 1e-9 * fmin.abs().max(1e-12);
    let mut out: Vec<f64> = Vec::new();
    for (nu, v) in found {
        if v <= fmin + tol && !out.iter().any(|&o| circular_distance(o, nu) < 1e-6) {
            out.push(nu);
        }
    }
    out.sort_by(f64::total_cmp);
    out
}

/// Distance on the `[0, 4pi)` circle.
pub fn circular_distance(a: f64, b: f64) -> f64 {
    let d = (a - b).rem_euclid(FOUR_PI);
    d.min(FOUR_PI - d)
}

/// Reference twisting time: `1.2 (N/2)^{-2/3}` for one-axis twisting and
/// `log10(2 pi N)/(4N)` for counter-twisting.
pub fn tau_ref(n: usize, generator: Generator) -> f64 {
    let n = n as f64;
    match generator {
        Generator::Oat => 1.2 * (0.5 * n).powf(-2.0 / 3.0),
        Generator::Tat => (TWO_PI * n).log10() / (4.0 * n),
    }
}

/// The chosen absolute optimum `(l, m) = (-1, 1)`.
pub fn optimal_conditions() -> OptimalConstants {
    gaussian::optimal_constants()
}

/// Member `(l, m)` of the optimal family: `(delta_cb, nu_E)` with
/// `delta_cb = -pi/8 + l pi/2` and `nu_E = 2 delta_cb + 4 m pi`.
pub fn optimal_family(l: i64, m: i64) -> (f64, f64) {
    let delta = -FRAC_PI_8 + l as f64 * FRAC_PI_2;
    (delta, 2.0 * delta + m as f64 * FOUR_PI)
}

/// Parameters the exact search may vary.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FreeParam {
    NuE,
    PhiMs,
    ThetaMs,
    TauE,
}

impl FreeParam {
    pub fn name(self) -> &'static str {
        match self {
            FreeParam::NuE => "nu_e",
            FreeParam::PhiMs => "phi_ms",
            FreeParam::ThetaMs => "theta_ms",
            FreeParam::TauE => "tau_e",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "nu_e" | "nu" => Some(FreeParam::NuE),
            "phi_ms" => Some(FreeParam::PhiMs),
            "theta_ms" => Some(FreeParam::ThetaMs),
            "tau_e" | "tau" => Some(FreeParam::TauE),
            _ => None,
        }
    }
}

/// Search effort.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Budget {
    /// Coarse-grid points per free dimension.
    pub grid: usize,
    /// Coordinate-refinement rounds after the grid.
    pub rounds: usize,
    /// Hard cap on exact-engine evaluations.
    pub max_evals: Option<usize>,
}

impl Default for Budget {
    fn default() -> Self {
        Self { grid: 64, rounds: 3, max_evals: None }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Analytic,
    Grid,
    Refined,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptResult {
    pub nu_opt: f64,
    pub phi_ms_opt: f64,
    pub theta_ms_opt: f64,
    pub tau_opt: f64,
    pub gain_at_opt: f64,
    pub method: Method,
    pub evaluations: usize,
    /// The evaluation cap was hit; the result is the best point seen.
    pub exhausted: bool,
    /// `|G(nu + pi, phi + pi/2) - G(nu, phi)| / G` at the optimum, reported
    /// when both angles were searched.
    pub phi_periodicity_error: Option<f64>,
}

/// Closed-form optimum of the Gaussian picture at squeezing `r`.
pub fn analytic_optimum(n: usize, r: f64) -> OptResult {
    let c = optimal_conditions();
    OptResult {
        nu_opt: c.nu_e,
        phi_ms_opt: c.phi_ms,
        theta_ms_opt: c.theta_ms,
        tau_opt: 4.0 * r / n as f64,
        gain_at_opt: gaussian::gain_analytic(n, r),
        method: Method::Analytic,
        evaluations: 0,
        exhausted: false,
        phi_periodicity_error: None,
    }
}

/// Exact mid-fringe gain of the entangled pipeline with the twisted state
/// cached per twisting time.
pub struct Evaluator {
    config: ProtocolConfig,
    basis: Arc<FockBasis>,
    obs: Observables,
    twisted: Mutex<HashMap<u64, Arc<StateVector>>>,
}

/// Point of the search space `(nu_E, phi_MS, theta_MS, tau_E)`.
pub type Point = [f64; 4];

impl Evaluator {
    pub fn new(config: &ProtocolConfig) -> Result<Self> {
        config.validate()?;
        let basis = Arc::new(FockBasis::new(config.n)?);
        let obs = Observables::new(&basis);
        Ok(Self {
            config: config.clone(),
            basis,
            obs,
            twisted: Mutex::new(HashMap::new()),
        })
    }

    pub fn config(&self) -> &ProtocolConfig {
        &self.config
    }

    fn twisted(&self, tau: f64) -> Result<Arc<StateVector>> {
        if let Some(s) = self.twisted.lock().unwrap().get(&tau.to_bits()) {
            return Ok(s.clone());
        }
        let psi0 = StateVector::initial(self.basis.clone());
        let psi = Arc::new(fock::evolve_squeezing(&psi0, self.config.generator, tau, 0.0)?);
        let mut cache = self.twisted.lock().unwrap();
        if cache.len() > 8 {
            cache.clear();
        }
        Ok(cache.entry(tau.to_bits()).or_insert(psi).clone())
    }

    /// Input-port state at the given point.
    pub fn input_state(&self, p: &Point) -> Result<StateVector> {
        let [nu, phi, theta, tau] = *p;
        let mut psi = (*self.twisted(tau)?).clone();
        fock::rotate_z(&mut psi, ModePair::AB, nu);
        fock::rotate_in_plane(&mut psi, ModePair::BC, theta, phi);
        psi.settle_norm()?;
        Ok(psi)
    }

    /// Input-port moments at the given point.
    pub fn moments(&self, p: &Point) -> Result<InputMoments> {
        self.obs.measure(&self.input_state(p)?)
    }

    /// `G^2` at the configured phases for the given point.
    pub fn gain(&self, p: &Point) -> Result<f64> {
        self.moments(p)?
            .gain(self.config.theta_a, self.config.theta_b)
    }

    /// Gain with degenerate working points scored as zero.
    fn score(&self, p: &Point) -> Result<f64> {
        match self.gain(p) {
            Ok(g) => Ok(g),
            Err(Error::DegenerateWorkingPoint { .. }) => Ok(0.0),
            Err(e) => Err(e),
        }
    }
}

fn index(p: FreeParam) -> usize {
    match p {
        FreeParam::NuE => 0,
        FreeParam::PhiMs => 1,
        FreeParam::ThetaMs => 2,
        FreeParam::TauE => 3,
    }
}

/// Coarse grid coordinates of one free parameter.
fn axis(p: FreeParam, grid: usize, tau_max: f64) -> Vec<f64> {
    let g = grid as f64;
    (0..grid)
        .map(|i| {
            let i = i as f64;
            match p {
                FreeParam::NuE => i * FOUR_PI / g,
                FreeParam::PhiMs => -FRAC_PI_4 + i * FRAC_PI_2 / g,
                FreeParam::ThetaMs if grid > 1 => i * PI / (g - 1.0),
                FreeParam::ThetaMs => FRAC_PI_2,
                FreeParam::TauE => (i + 1.0) * tau_max / g,
            }
        })
        .collect()
}

/// Admissible interval of a coordinate during refinement.
fn clamp_to_range(p: FreeParam, x: f64, tau_max: f64) -> f64 {
    match p {
        FreeParam::NuE | FreeParam::PhiMs => x,
        FreeParam::ThetaMs => x.clamp(0.0, PI),
        FreeParam::TauE => x.clamp(1e-9 * tau_max, tau_max),
    }
}

/// Map a point to the reporting ranges, moving `phi_MS` into
/// `[-pi/4, pi/4)` through the joint shift `(nu + pi, phi + pi/2)` that
/// leaves the gain unchanged.
fn normalize(mut p: Point) -> Point {
    let k = ((p[1] + FRAC_PI_4) / FRAC_PI_2).floor();
    p[1] -= k * FRAC_PI_2;
    p[0] = wrap_nu(p[0] - k * PI);
    p
}

/// Better of two scored points: larger gain, ties to the lexicographically
/// smaller coordinates.
fn better(a: (Point, f64), b: (Point, f64)) -> bool {
    a.1 > b.1 || (a.1 == b.1 && a.0 < b.0)
}

struct Tracker<'a> {
    eval: &'a Evaluator,
    evals: usize,
    cap: usize,
    exhausted: bool,
}

impl Tracker<'_> {
    fn take(&mut self, k: usize) -> usize {
        let allowed = k.min(self.cap.saturating_sub(self.evals));
        if allowed < k {
            self.exhausted = true;
        }
        self.evals += allowed;
        allowed
    }

    fn one(&mut self, p: &Point) -> Result<Option<f64>> {
        if self.take(1) == 0 {
            return Ok(None);
        }
        self.eval.score(p).map(Some)
    }
}

/// Grid search over `free` followed by coordinate-wise golden-section
/// refinement. Parameters outside `free` keep their values in `config`.
///
/// Ranges: `nu_E` in `[0, 4pi)`, `phi_MS` in `[-pi/4, pi/4)` (the gain is
/// invariant under the joint shift `nu + pi, phi + pi/2`), `theta_MS` in
/// `[0, pi]`, `tau_E` in `(0, 2 tau_ref]`.
pub fn optimize_protocol(
    config: &ProtocolConfig,
    free: &[FreeParam],
    budget: Budget,
) -> Result<OptResult> {
    let eval = Evaluator::new(config)?;
    optimize_with(&eval, free, budget)
}

pub fn optimize_with(eval: &Evaluator, free: &[FreeParam], budget: Budget) -> Result<OptResult> {
    let config = eval.config().clone();
    let mut free: Vec<FreeParam> = free.to_vec();
    free.sort();
    free.dedup();
    if budget.grid == 0 {
        return Err(Error::InvalidConfig("grid budget must be positive".into()));
    }
    let tau_max = 2.0 * tau_ref(config.n, config.generator);
    let start: Point = [config.nu_e, config.phi_ms, config.theta_ms, config.tau_e];
    let mut tracker = Tracker {
        eval,
        evals: 0,
        cap: budget.max_evals.unwrap_or(usize::MAX),
        exhausted: false,
    };

    // coarse grid in lexicographic order of the free coordinates
    let axes: Vec<Vec<f64>> = free.iter().map(|&p| axis(p, budget.grid, tau_max)).collect();
    let total: usize = axes.iter().map(Vec::len).product();
    let mut points = Vec::with_capacity(total);
    for flat in 0..total {
        let mut p = start;
        let mut rem = flat;
        for d in (0..free.len()).rev() {
            let len = axes[d].len();
            p[index(free[d])] = axes[d][rem % len];
            rem /= len;
        }
        points.push(p);
    }
    let n_grid = tracker.take(points.len());
    let scored: Vec<Result<f64>> = points[..n_grid].par_iter().map(|p| eval.score(p)).collect();
    let mut best: Option<(Point, f64)> = None;
    for (p, g) in points.iter().zip(scored) {
        let cand = (*p, g?);
        if best.map_or(true, |b| better(cand, b)) {
            best = Some(cand);
        }
    }
    let Some(mut best) = best else {
        return Err(Error::InvalidConfig("evaluation budget allows no grid point".into()));
    };

    // coordinate refinement with shrinking half-widths
    let mut half: Vec<f64> = free
        .iter()
        .zip(&axes)
        .map(|(&p, ax)| match p {
            FreeParam::ThetaMs if ax.len() > 1 => PI / (ax.len() - 1) as f64,
            FreeParam::ThetaMs => FRAC_PI_2,
            FreeParam::NuE => FOUR_PI / ax.len() as f64,
            FreeParam::PhiMs => FRAC_PI_2 / ax.len() as f64,
            FreeParam::TauE => tau_max / ax.len() as f64,
        })
        .collect();
    'rounds: for _ in 0..budget.rounds {
        for (d, &p) in free.iter().enumerate() {
            let k = index(p);
            let lo = clamp_to_range(p, best.0[k] - half[d], tau_max);
            let hi = clamp_to_range(p, best.0[k] + half[d], tau_max);
            if hi <= lo {
                continue;
            }
            let cell = best;
            let mut failure = None;
            let mut seen: Vec<(Point, f64)> = Vec::new();
            golden_max(
                |x| {
                    let mut q = cell.0;
                    q[k] = x;
                    match tracker.one(&q) {
                        Ok(Some(g)) => {
                            seen.push((q, g));
                            g
                        }
                        Ok(None) => f64::NEG_INFINITY,
                        Err(e) => {
                            failure.get_or_insert(e);
                            f64::NEG_INFINITY
                        }
                    }
                },
                lo,
                hi,
                (hi - lo) / 64.0,
            );
            if let Some(e) = failure {
                return Err(e);
            }
            for cand in seen {
                if better(cand, best) {
                    best = cand;
                }
            }
            if tracker.exhausted {
                break 'rounds;
            }
        }
        for h in &mut half {
            *h *= 0.25;
        }
    }

    let method = if budget.rounds > 0 && !free.is_empty() {
        Method::Refined
    } else {
        Method::Grid
    };
    let phi_periodicity_error =
        if free.contains(&FreeParam::NuE) && free.contains(&FreeParam::PhiMs) {
            let mut shifted = best.0;
            shifted[0] += PI;
            shifted[1] += FRAC_PI_2;
            let g = eval.score(&normalize(shifted))?;
            Some((g - best.1).abs() / best.1.abs().max(f64::MIN_POSITIVE))
        } else {
            None
        };
    let p = normalize(best.0);
    Ok(OptResult {
        nu_opt: p[0],
        phi_ms_opt: p[1],
        theta_ms_opt: p[2],
        tau_opt: p[3],
        gain_at_opt: best.1,
        method,
        evaluations: tracker.evals,
        exhausted: tracker.exhausted,
        phi_periodicity_error,
    })
}

/// Compass search from `start` over `free`: try `+-step` along each free
/// coordinate, keep any improvement, and shrink the steps by 0.6 after every
/// sweep. Returns the refined result.
pub fn polish(
    eval: &Evaluator,
    start: &OptResult,
    free: &[FreeParam],
    step: Point,
    sweeps: usize,
) -> Result<OptResult> {
    let tau_max = 2.0 * tau_ref(eval.config().n, eval.config().generator);
    let mut p: Point = [start.nu_opt, start.phi_ms_opt, start.theta_ms_opt, start.tau_opt];
    let mut g = eval.score(&p)?;
    let mut h = step;
    let mut evals = 1;
    for _ in 0..sweeps {
        for &fp in free {
            let k = index(fp);
            loop {
                let mut moved = false;
                for s in [-1.0, 1.0] {
                    let mut q = p;
                    q[k] = clamp_to_range(fp, q[k] + s * h[k], tau_max);
                    if q[k] == p[k] {
                        continue;
                    }
                    let gq = eval.score(&q)?;
                    evals += 1;
                    if gq > g {
                        g = gq;
                        p = q;
                        moved = true;
                    }
                }
                if !moved {
                    break;
                }
            }
        }
        for x in &mut h {
            *x *= 0.6;
        }
    }
    let q = normalize(p);
    Ok(OptResult {
        nu_opt: q[0],
        phi_ms_opt: q[1],
        theta_ms_opt: q[2],
        tau_opt: q[3],
        gain_at_opt: g,
        method: Method::Refined,
        evaluations: start.evaluations + evals,
        exhausted: start.exhausted,
        phi_periodicity_error: start.phi_periodicity_error,
    })
}

/// Ridge `nu ~ nu_min(phi_MS - pi/2, r)` linking the optimal orientation to
/// the mode-swap phase.
pub fn ridge_nu(phi_ms: f64, r: f64) -> f64 {
    nu_min_analytic(phi_ms - FRAC_PI_2, r)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn objective_examples() {
        assert_eq!(f_objective(1.3, -0.2, 0.0), 0.0);
        for r in [0.1, 1.0, 2.5] {
            let v = f_objective(11.0 * PI / 4.0, -5.0 * PI / 8.0, r);
            assert!((v + 4.0 * (1.0 - (-2.0 * r).exp())).abs() < 1e-12);
            let a = f_objective(0.7, 0.3, r);
            assert!((a - f_objective(0.7 + FOUR_PI, 0.3, r)).abs() < 1e-12);
        }
    }

    #[test]
    fn derivative_matches_difference() {
        let h = 1e-6;
        for (nu, d, r) in [(0.3, -1.0, 0.2), (7.0, 0.4, 1.5)] {
            let fd = (f_objective(nu + h, d, r) - f_objective(nu - h, d, r)) / (2.0 * h);
            assert!((fd - f_derivative(nu, d, r)).abs() < 1e-6);
        }
    }

    #[test]
    fn analytic_examples() {
        for r in [0.01, 0.5, 3.0] {
            assert!((nu_min_analytic(-5.0 * PI / 8.0, r) - 11.0 * PI / 4.0).abs() < 1e-12);
            assert!((nu_min_analytic(-PI / 8.0, r) - 15.0 * PI / 4.0).abs() < 1e-12);
        }
        let d = -7.0 * PI / 8.0;
        assert!((nu_min_small_r(d) - 219.0 * PI / 76.0).abs() < 1e-12);
        assert!((nu_min_branch1(d, 1e-9) - 219.0 * PI / 76.0).abs() < 1e-6);
        assert!((nu_min_branch1(d, 40.0) - nu_large_r_branch1(d)).abs() < 1e-12);
    }

    #[test]
    fn canonical_split() {
        for d in [-7.0 * PI / 8.0, -0.5, 0.3, 2.0, -4.0] {
            let (d0, k) = canonical_delta(d);
            assert!((-7.0 * FRAC_PI_8..-3.0 * FRAC_PI_8).contains(&d0));
            assert!((d0 + k as f64 * FRAC_PI_2 - d).abs() < 1e-12);
        }
    }

    #[test]
    fn tau_ref_examples() {
        assert!((tau_ref(2000, Generator::Oat) - 0.012).abs() < 1e-12);
        assert!((tau_ref(100, Generator::Oat) - 0.0884168).abs() < 1e-6);
        assert!((tau_ref(100, Generator::Tat) - 0.006996).abs() < 1e-6);
    }

    #[test]
    fn family_members_share_the_optimum() {
        let c = optimal_conditions();
        let (d, nu) = optimal_family(-1, 1);
        assert!((d - c.delta_cb).abs() < 1e-15 && (nu - c.nu_e).abs() < 1e-15);
        for r in [0.3, 1.2] {
            let base = f_objective(c.nu_e, c.delta_cb, r);
            for l in -2..=2 {
                for m in 0..=1 {
                    let (d, nu) = optimal_family(l, m);
                    assert!((f_objective(nu, d, r) - base).abs() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn degenerate_line_has_two_minima() {
        let mins = nu_min_numeric_all(-3.0 * PI / 8.0, 0.7);
        assert_eq!(mins.len(), 2, "{mins:?}");
        let s = (mins[0] + mins[1] + 1.5 * PI).rem_euclid(FOUR_PI);
        assert!(s.min(FOUR_PI - s) < 1e-6);
    }

    #[test]
    fn small_grid_is_deterministic() {
        let cfg = ProtocolConfig { n: 8, tau_e: 0.2, ..Default::default() };
        let budget = Budget { grid: 6, rounds: 1, max_evals: None };
        let free = [FreeParam::NuE, FreeParam::PhiMs];
        let a = optimize_protocol(&cfg, &free, budget).unwrap();
        let b = optimize_protocol(&cfg, &free, budget).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.method, Method::Refined);
        assert!(a.phi_periodicity_error.unwrap() < 1e-9);
    }

    #[test]
    fn budget_cap_flags_exhaustion() {
        let cfg = ProtocolConfig { n: 6, tau_e: 0.2, ..Default::default() };
        let budget = Budget { grid: 4, rounds: 3, max_evals: Some(20) };
        let res = optimize_protocol(&cfg, &[FreeParam::NuE, FreeParam::PhiMs], budget).unwrap();
        assert!(res.exhausted);
        assert_eq!(res.evaluations, 20);
    }
}
