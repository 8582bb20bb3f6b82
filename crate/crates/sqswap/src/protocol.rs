//! The mode-entangled pipeline, its mode-separable reference, and the
//! moment-based sensitivity metrics built on top of them.

use std::f64::consts::FRAC_PI_2;
use std::sync::Arc;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fock::spectrum;
use crate::fock::state::ln_binomial;
use crate::fock::{
    apply_mode_swap, encode_phases, evolve_squeezing, moments, Axis, FockBasis, Generator,
    ModePair, MomentTable, PairOperator, StateVector,
};

/// All knobs of the protocol.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ProtocolConfig {
    pub n: usize,
    pub tau_e: f64,
    pub nu_e: f64,
    pub theta_ms: f64,
    pub phi_ms: f64,
    pub theta_a: f64,
    pub theta_b: f64,
    pub generator: Generator,
    pub tau_s_a: f64,
    pub tau_s_b: f64,
}

impl Default for ProtocolConfig {
    fn default() -> Self {
        Self {
            n: 100,
            tau_e: 0.0,
            nu_e: 0.0,
            theta_ms: FRAC_PI_2,
            phi_ms: FRAC_PI_2,
            theta_a: FRAC_PI_2,
            theta_b: FRAC_PI_2,
            generator: Generator::Oat,
            tau_s_a: 0.0,
            tau_s_b: 0.0,
        }
    }
}

impl ProtocolConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n == 0 {
            return Err(Error::InvalidConfig("N must be at least 1".into()));
        }
        let all = [
            self.tau_e,
            self.nu_e,
            self.theta_ms,
            self.phi_ms,
            self.theta_a,
            self.theta_b,
            self.tau_s_a,
            self.tau_s_b,
        ];
        if all.iter().any(|x| !x.is_finite()) {
            return Err(Error::InvalidConfig("all angles and strengths must be finite".into()));
        }
        Ok(())
    }

    /// Standard quantum limit of the differential phase, `4/N`.
    pub fn sql(&self) -> f64 {
        4.0 / self.n as f64
    }
}

/// Metrics of one working point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SensitivityReport {
    pub theta_a: f64,
    pub theta_b: f64,
    pub v_a: f64,
    pub v_b: f64,
    pub var_theta_a: f64,
    pub var_theta_b: f64,
    /// Output covariance of `J_z^{ab}` and `J_z^{cd}`.
    pub cov_ab: f64,
    pub slope_a: f64,
    pub slope_b: f64,
    pub var_diff: f64,
    pub gain: f64,
    pub sql: f64,
}

/// Index of each observable inside an [`InputMoments`] table.
pub const ZA: usize = 0;
pub const XA: usize = 1;
pub const ZB: usize = 2;
pub const XB: usize = 3;

/// The four input-port observables `J_z^{ab}, J_x^{ab}, J_z^{cd}, J_x^{cd}`
/// built once per basis.
#[derive(Debug, Clone)]
pub struct Observables {
    pub za: PairOperator,
    pub xa: PairOperator,
    pub zb: PairOperator,
    pub xb: PairOperator,
}

impl Observables {
    pub fn new(basis: &FockBasis) -> Self {
        Self {
            za: PairOperator::new(basis, ModePair::AB, Axis::Z),
            xa: PairOperator::new(basis, ModePair::AB, Axis::X),
            zb: PairOperator::new(basis, ModePair::CD, Axis::Z),
            xb: PairOperator::new(basis, ModePair::CD, Axis::X),
        }
    }

    /// Moments of the four observables in one sweep: the `J_z` values are
    /// read off the occupations and only the two `J_x` images are formed.
    pub fn measure(&self, psi: &StateVector) -> Result<InputMoments> {
        let xa = self.xa.apply_state(psi)?;
        let xb = self.xb.apply_state(psi)?;
        let mut s = [0.0f64; 4];
        let mut ss = [[0.0f64; 4]; 4];
        for (((a, occ), ia), ib) in psi
            .amplitudes()
            .iter()
            .zip(psi.basis().states())
            .zip(&xa)
            .zip(&xb)
        {
            let p = a.norm_sqr();
            let za = 0.5 * (occ[0] as f64 - occ[1] as f64);
            let zb = 0.5 * (occ[2] as f64 - occ[3] as f64);
            let ca = (a.conj() * ia).re;
            let cb = (a.conj() * ib).re;
            s[ZA] += p * za;
            s[ZB] += p * zb;
            s[XA] += ca;
            s[XB] += cb;
            ss[ZA][ZA] += p * za * za;
            ss[ZB][ZB] += p * zb * zb;
            ss[ZA][ZB] += p * za * zb;
            ss[ZA][XA] += za * ca;
            ss[ZA][XB] += za * cb;
            ss[XA][ZB] += zb * ca;
            ss[ZB][XB] += zb * cb;
            ss[XA][XA] += ia.norm_sqr();
            ss[XB][XB] += ib.norm_sqr();
            ss[XA][XB] += (ia.conj() * ib).re;
        }
        let mut cov = vec![vec![0.0; 4]; 4];
        for i in 0..4 {
            for j in i..4 {
                // every product above is stored in the upper triangle
                let c = ss[i][j] - s[i] * s[j];
                cov[i][j] = c;
                cov[j][i] = c;
            }
        }
        Ok(InputMoments {
            n: psi.basis().n(),
            table: MomentTable {
                means: s.to_vec(),
                cov,
            },
        })
    }
}

/// Moments of the input-port state from which every working point follows
/// in closed form through the fringe law
/// `<J_z>_out = <J_z> cos(theta) - <J_x> sin(theta)`.
#[derive(Debug, Clone, PartialEq)]
pub struct InputMoments {
    pub n: usize,
    pub table: MomentTable,
}

impl InputMoments {
    pub fn mean(&self, i: usize) -> f64 {
        self.table.means[i]
    }

    pub fn cov(&self, i: usize, j: usize) -> f64 {
        self.table.cov[i][j]
    }

    /// Mean output `J_z` of interferometer A or B at phase `theta`.
    pub fn fringe(&self, b_side: bool, theta: f64) -> f64 {
        let (z, x) = if b_side { (ZB, XB) } else { (ZA, XA) };
        self.mean(z) * theta.cos() - self.mean(x) * theta.sin()
    }

    fn slope(&self, z: usize, x: usize, theta: f64) -> f64 {
        -self.mean(z) * theta.sin() - self.mean(x) * theta.cos()
    }

    fn out_var(&self, z: usize, x: usize, theta: f64) -> f64 {
        let (s, c) = theta.sin_cos();
        c * c * self.cov(z, z) + s * s * self.cov(x, x) - 2.0 * c * s * self.cov(z, x)
    }

    fn out_cov(&self, theta_a: f64, theta_b: f64) -> f64 {
        let (sa, ca) = theta_a.sin_cos();
        let (sb, cb) = theta_b.sin_cos();
        ca * cb * self.cov(ZA, ZB) - ca * sb * self.cov(ZA, XB) - sa * cb * self.cov(XA, ZB)
            + sa * sb * self.cov(XA, XB)
    }

    /// Method-of-moments uncertainty of `v_a theta_a + v_b theta_b`.
    pub fn report(&self, theta_a: f64, theta_b: f64, v_a: f64, v_b: f64) -> Result<SensitivityReport> {
        let slope_a = self.slope(ZA, XA, theta_a);
        let slope_b = self.slope(ZB, XB, theta_b);
        let floor = 1e-12 * self.n as f64;
        if slope_a.abs() < floor {
            return Err(Error::DegenerateWorkingPoint { which: "interferometer A" });
        }
        if slope_b.abs() < floor {
            return Err(Error::DegenerateWorkingPoint { which: "interferometer B" });
        }
        let var_a = self.out_var(ZA, XA, theta_a);
        let var_b = self.out_var(ZB, XB, theta_b);
        let cov_ab = self.out_cov(theta_a, theta_b);
        Ok(assemble(
            self.n, theta_a, theta_b, v_a, v_b, var_a, var_b, cov_ab, slope_a, slope_b,
        ))
    }

    /// `G^2` of the differential phase at `(theta_a, theta_b)`.
    pub fn gain(&self, theta_a: f64, theta_b: f64) -> Result<f64> {
        Ok(self.report(theta_a, theta_b, 1.0, -1.0)?.gain)
    }
}

#[allow(clippy::too_many_arguments)]
fn assemble(
    n: usize,
    theta_a: f64,
    theta_b: f64,
    v_a: f64,
    v_b: f64,
    var_a: f64,
    var_b: f64,
    cov_ab: f64,
    slope_a: f64,
    slope_b: f64,
) -> SensitivityReport {
    let var_theta_a = var_a / (slope_a * slope_a);
    let var_theta_b = var_b / (slope_b * slope_b);
    let var_diff = v_a * v_a * var_theta_a
        + v_b * v_b * var_theta_b
        + 2.0 * v_a * v_b * cov_ab / (slope_a * slope_b);
    let sql = 4.0 / n as f64;
    SensitivityReport {
        theta_a,
        theta_b,
        v_a,
        v_b,
        var_theta_a,
        var_theta_b,
        cov_ab,
        slope_a,
        slope_b,
        var_diff,
        gain: sql / var_diff,
        sql,
    }
}

/// State at the interferometer input ports: initial binomial state, the
/// entangling step with its orientation, then the mode swap.
pub fn prepare_input(config: &ProtocolConfig) -> Result<StateVector> {
    config.validate()?;
    let basis = Arc::new(FockBasis::new(config.n)?);
    prepare_input_on(basis, config)
}

pub fn prepare_input_on(basis: Arc<FockBasis>, config: &ProtocolConfig) -> Result<StateVector> {
    let psi1 = StateVector::initial(basis);
    let psi2 = evolve_squeezing(&psi1, config.generator, config.tau_e, config.nu_e)?;
    apply_mode_swap(&psi2, config.theta_ms, config.phi_ms)
}

/// Result of a full pipeline run.
#[derive(Debug, Clone)]
pub struct MepeRun {
    pub input: StateVector,
    pub output: StateVector,
    pub report: SensitivityReport,
}

/// Run the full mode-entangled pipeline and evaluate the differential
/// uncertainty from the output state, with slopes from the input moments.
pub fn run_mepe(config: &ProtocolConfig) -> Result<MepeRun> {
    let input = prepare_input(config)?;
    let output = encode_phases(&input, config.theta_a, config.theta_b)?;
    let obs = Observables::new(input.basis());
    let inp = obs.measure(&input)?;
    let slope_a = inp.slope(ZA, XA, config.theta_a);
    let slope_b = inp.slope(ZB, XB, config.theta_b);
    let floor = 1e-12 * config.n as f64;
    if slope_a.abs() < floor || slope_b.abs() < floor {
        return Err(Error::DegenerateWorkingPoint { which: "pipeline working point" });
    }
    let out = moments(&output, &[&obs.za, &obs.zb])?;
    let report = assemble(
        config.n,
        config.theta_a,
        config.theta_b,
        1.0,
        -1.0,
        out.variance(0),
        out.variance(1),
        out.cov[0][1],
        slope_a,
        slope_b,
    );
    Ok(MepeRun {
        input,
        output,
        report,
    })
}

/// Uncertainty of `v_a theta_a + v_b theta_b` for an input-port state.
pub fn sensitivity_linear_combination(
    input: &StateVector,
    theta_a: f64,
    theta_b: f64,
    v_a: f64,
    v_b: f64,
) -> Result<f64> {
    input.check_normalized()?;
    let obs = Observables::new(input.basis());
    Ok(obs.measure(input)?.report(theta_a, theta_b, v_a, v_b)?.var_diff)
}

/// Mid-fringe uncertainty as the variance of
/// `J_x^{ab}/<J_z^{ab}> - J_x^{cd}/<J_z^{cd}>` on the input state.
pub fn midfringe_sensitivity(input: &StateVector) -> Result<f64> {
    input.check_normalized()?;
    let basis = input.basis();
    let amps = input.amplitudes();
    let expect = |op: &PairOperator| -> Result<f64> {
        let img = op.apply_state(input)?;
        Ok(amps.iter().zip(&img).map(|(a, b)| (a.conj() * b).re).sum())
    };
    let za = expect(&PairOperator::new(basis, ModePair::AB, Axis::Z))?;
    let zb = expect(&PairOperator::new(basis, ModePair::CD, Axis::Z))?;
    let floor = 1e-12 * basis.n() as f64;
    if za.abs() < floor || zb.abs() < floor {
        return Err(Error::DegenerateWorkingPoint { which: "vanishing input J_z" });
    }
    let xa = PairOperator::new(basis, ModePair::AB, Axis::X).apply_state(input)?;
    let xb = PairOperator::new(basis, ModePair::CD, Axis::X).apply_state(input)?;
    let y: Vec<Complex64> = xa.iter().zip(&xb).map(|(a, b)| a / za - b / zb).collect();
    let mean: f64 = amps.iter().zip(&y).map(|(a, b)| (a.conj() * b).re).sum();
    let second: f64 = y.iter().map(|v| v.norm_sqr()).sum();
    Ok(second - mean * mean)
}

/// Fraction of an open uniform `res x res` grid over `(0, pi)^2` where the
/// gain exceeds one.
pub fn bandwidth(moments: &InputMoments, resolution: usize) -> Result<f64> {
    if resolution < 32 {
        return Err(Error::InvalidConfig("bandwidth grid resolution must be at least 32".into()));
    }
    let step = std::f64::consts::PI / resolution as f64;
    let mut hits = 0usize;
    for i in 0..resolution {
        let ta = (i as f64 + 0.5) * step;
        for j in 0..resolution {
            let tb = (j as f64 + 0.5) * step;
            match moments.gain(ta, tb) {
                Ok(g) if g > 1.0 => hits += 1,
                Ok(_) | Err(Error::DegenerateWorkingPoint { .. }) => {}
                Err(e) => return Err(e),
            }
        }
    }
    Ok(hits as f64 / (resolution * resolution) as f64)
}

/// Mean of `G^2(pi/2 + phi, pi/2 + phi)` over `phi` in `[-lambda, lambda]`
/// (midpoint rule, normalized by the interval length `2 lambda`).
pub fn average_gain(moments: &InputMoments, lambda: f64, n_points: usize) -> Result<f64> {
    if !(lambda > 0.0 && lambda <= FRAC_PI_2) {
        return Err(Error::InvalidConfig("lambda must lie in (0, pi/2]".into()));
    }
    let n_points = n_points.max(1);
    let h = 2.0 * lambda / n_points as f64;
    let mut acc = 0.0;
    for i in 0..n_points {
        let phi = -lambda + (i as f64 + 0.5) * h;
        let t = FRAC_PI_2 + phi;
        acc += match moments.gain(t, t) {
            Ok(g) => g,
            Err(Error::DegenerateWorkingPoint { .. }) => 0.0,
            Err(e) => return Err(e),
        };
    }
    Ok(acc / n_points as f64)
}

/// How atoms are shared between the two separable interferometers.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
pub enum AtomSplit {
    /// Exactly `N/2` atoms each.
    #[default]
    Fixed,
    /// Binomial partition, as produced by the coherent splitting of the
    /// entangled pipeline.
    Binomial,
}

/// Orientation of a separable squeezed state about `J_z`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
pub enum Orientation {
    /// Rotate so that `J_x` carries the smallest transverse variance.
    #[default]
    Optimal,
    /// Rotate by the given angle.
    Angle(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
pub struct SeparableOptions {
    pub split: AtomSplit,
    pub orientation_a: Orientation,
    pub orientation_b: Orientation,
}

/// Two-mode spin state over `|k, n-k>`, `k` = occupation of the first mode.
#[derive(Debug, Clone)]
struct PairState {
    n: usize,
    amps: Vec<Complex64>,
}

/// `<z>, <x>, <y>` and symmetrized second moments of one pair state.
#[derive(Debug, Clone, Copy, Default)]
struct PairMoments {
    mean: [f64; 3],
    second: [[f64; 3]; 3],
}

impl PairState {
    fn basis_state(n: usize, k: usize) -> Self {
        let mut amps = vec![Complex64::new(0.0, 0.0); n + 1];
        amps[k] = Complex64::new(1.0, 0.0);
        Self { n, amps }
    }

    fn squeeze(&mut self, generator: Generator, tau: f64) {
        if tau == 0.0 || self.n == 0 {
            return;
        }
        let mut w = Vec::new();
        match generator {
            Generator::Oat => spectrum::jx(self.n).apply_function(&mut self.amps, &mut w, |m| {
                Complex64::from_polar(1.0, -tau * m * m)
            }),
            Generator::Tat => {
                for (k, a) in self.amps.iter_mut().enumerate() {
                    *a *= spectrum::counter_gauge(k).conj();
                }
                spectrum::counter_twist(self.n).apply_function(&mut self.amps, &mut w, |l| {
                    Complex64::from_polar(1.0, -tau * l)
                });
                for (k, a) in self.amps.iter_mut().enumerate() {
                    *a *= spectrum::counter_gauge(k);
                }
            }
        }
    }

    fn rotate_z(&mut self, angle: f64) {
        let half = 0.5 * self.n as f64;
        for (k, a) in self.amps.iter_mut().enumerate() {
            *a *= Complex64::from_polar(1.0, -angle * (k as f64 - half));
        }
    }

    /// `[J_z psi, J_x psi, J_y psi]`
    fn images(&self) -> [Vec<Complex64>; 3] {
        let n = self.n;
        let half = 0.5 * n as f64;
        let zero = Complex64::new(0.0, 0.0);
        let mut z = vec![zero; n + 1];
        let mut x = vec![zero; n + 1];
        let mut y = vec![zero; n + 1];
        for k in 0..=n {
            z[k] = self.amps[k] * (k as f64 - half);
        }
        for k in 0..n {
            // <k+1| J+ |k>
            let e = (((k + 1) * (n - k)) as f64).sqrt();
            let up = self.amps[k] * e;
            let down = self.amps[k + 1] * e;
            x[k + 1] += up * 0.5;
            x[k] += down * 0.5;
            y[k + 1] += up * Complex64::new(0.0, -0.5);
            y[k] += down * Complex64::new(0.0, 0.5);
        }
        [z, x, y]
    }

    fn moments(&self) -> PairMoments {
        let imgs = self.images();
        let dot = |a: &[Complex64], b: &[Complex64]| -> f64 {
            a.iter().zip(b).map(|(u, v)| (u.conj() * v).re).sum()
        };
        let mut m = PairMoments::default();
        for i in 0..3 {
            m.mean[i] = dot(&self.amps, &imgs[i]);
            for j in 0..3 {
                m.second[i][j] = dot(&imgs[i], &imgs[j]);
            }
        }
        m
    }
}

/// Angle `nu` such that `exp(-i nu J_z)` leaves the smallest transverse
/// variance along `J_x`.
fn optimal_orientation(m: &PairMoments) -> f64 {
    let vxx = m.second[1][1] - m.mean[1] * m.mean[1];
    let vyy = m.second[2][2] - m.mean[2] * m.mean[2];
    let cxy = m.second[1][2] - m.mean[1] * m.mean[2];
    // Var(J_x cos nu - J_y sin nu) = A + B cos 2nu + C sin 2nu
    let b = 0.5 * (vxx - vyy);
    let c = -cxy;
    0.5 * (c.atan2(b) + std::f64::consts::PI)
}

fn pair_moments(
    n: usize,
    start_in_first: bool,
    generator: Generator,
    tau: f64,
    orientation: Orientation,
) -> (PairMoments, f64) {
    let mut st = PairState::basis_state(n, if start_in_first { n } else { 0 });
    st.squeeze(generator, tau);
    let nu = match orientation {
        Orientation::Angle(a) => a,
        Orientation::Optimal => optimal_orientation(&st.moments()),
    };
    st.rotate_z(nu);
    (st.moments(), nu)
}

/// Input moments of the mode-separable reference: interferometer A prepared
/// from mode `a` and squeezed by `tau_s_a`, B from mode `d` squeezed by
/// `tau_s_b`, no mode swap.
pub fn separable_moments(config: &ProtocolConfig, opts: SeparableOptions) -> Result<InputMoments> {
    config.validate()?;
    let n = config.n;
    let splits: Vec<(usize, f64)> = match opts.split {
        AtomSplit::Fixed => {
            if n % 2 != 0 {
                return Err(Error::InvalidSplit { n });
            }
            vec![(n / 2, 1.0)]
        }
        AtomSplit::Binomial => {
            let ln2 = std::f64::consts::LN_2;
            (0..=n)
                .map(|k| (k, (ln_binomial(n, k) - n as f64 * ln2).exp()))
                .collect()
        }
    };
    // accumulate E[O_i] and E[O_i O_j] over the split distribution
    let mut mean = [0.0; 4];
    let mut second = [[0.0; 4]; 4];
    for &(na, w) in &splits {
        let (ma, _) = pair_moments(na, true, config.generator, config.tau_s_a, opts.orientation_a);
        let (mb, _) = pair_moments(n - na, false, config.generator, config.tau_s_b, opts.orientation_b);
        let local = [(ma, ZA), (mb, ZB)];
        let vals = [ma.mean[0], ma.mean[1], mb.mean[0], mb.mean[1]];
        for i in 0..4 {
            mean[i] += w * vals[i];
            for j in 0..4 {
                let same = (i < 2) == (j < 2);
                second[i][j] += w * if same {
                    let (m, base) = local[if i < 2 { 0 } else { 1 }];
                    m.second[i - base][j - base]
                } else {
                    vals[i] * vals[j]
                };
            }
        }
    }
    let mut cov = vec![vec![0.0; 4]; 4];
    for i in 0..4 {
        for j in 0..4 {
            cov[i][j] = second[i][j] - mean[i] * mean[j];
        }
    }
    Ok(InputMoments {
        n,
        table: MomentTable {
            means: mean.to_vec(),
            cov,
        },
    })
}

/// Orientation angles actually used by the separable reference for a
/// fixed split (interferometer A, interferometer B).
pub fn separable_orientations(config: &ProtocolConfig, opts: SeparableOptions) -> Result<(f64, f64)> {
    if config.n % 2 != 0 {
        return Err(Error::InvalidSplit { n: config.n });
    }
    let h = config.n / 2;
    let (_, nu_a) = pair_moments(h, true, config.generator, config.tau_s_a, opts.orientation_a);
    let (_, nu_b) = pair_moments(h, false, config.generator, config.tau_s_b, opts.orientation_b);
    Ok((nu_a, nu_b))
}

/// Mode-separable reference with `N/2` atoms per interferometer and
/// optimally oriented squeezed states.
pub fn run_separable(config: &ProtocolConfig) -> Result<SensitivityReport> {
    run_separable_with(config, SeparableOptions::default())
}

pub fn run_separable_with(config: &ProtocolConfig, opts: SeparableOptions) -> Result<SensitivityReport> {
    separable_moments(config, opts)?.report(config.theta_a, config.theta_b, 1.0, -1.0)
}

/// Wineland parameter `xi_R^2 = (N/2) min_perp Var(J^{ab}) / <J_z^{ab}>^2` of
/// the twisted state on modes `a`, `b`, with `a` carrying the binomial share
/// of the initial state.
pub fn squeezing_parameter_exact(n: usize, generator: Generator, tau: f64) -> Result<f64> {
    if n == 0 {
        return Err(Error::InvalidConfig("N must be at least 1".into()));
    }
    let ln2 = std::f64::consts::LN_2;
    let mut mean = [0.0; 3];
    let mut second = [[0.0; 3]; 3];
    for na in 0..=n {
        let w = (ln_binomial(n, na) - n as f64 * ln2).exp();
        let mut st = PairState::basis_state(na, na);
        st.squeeze(generator, tau);
        let m = st.moments();
        for i in 0..3 {
            mean[i] += w * m.mean[i];
            for j in 0..3 {
                second[i][j] += w * m.second[i][j];
            }
        }
    }
    let vxx = second[1][1] - mean[1] * mean[1];
    let vyy = second[2][2] - mean[2] * mean[2];
    let cxy = second[1][2] - mean[1] * mean[2];
    let vmin = 0.5 * (vxx + vyy) - (0.25 * (vxx - vyy).powi(2) + cxy * cxy).sqrt();
    Ok(0.5 * n as f64 * vmin / (mean[0] * mean[0]))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn coherent_input_saturates_sql() {
        let cfg = ProtocolConfig { n: 20, ..Default::default() };
        let run = run_mepe(&cfg).unwrap();
        assert!((run.report.var_diff - 0.2).abs() < 1e-12);
        assert!((run.report.gain - 1.0).abs() < 1e-12);
    }

    #[test]
    fn optimal_orientation_minimizes_jx_variance() {
        let mut st = PairState::basis_state(30, 30);
        st.squeeze(Generator::Oat, 0.05);
        let m0 = st.moments();
        let nu = optimal_orientation(&m0);
        let var_at = |angle: f64| {
            let mut s = st.clone();
            s.rotate_z(angle);
            let m = s.moments();
            m.second[1][1] - m.mean[1] * m.mean[1]
        };
        let best = var_at(nu);
        for i in 0..64 {
            let a = i as f64 * std::f64::consts::PI / 64.0;
            assert!(best <= var_at(a) + 1e-12);
        }
    }

    #[test]
    fn untwisted_state_is_not_squeezed() {
        let xi = squeezing_parameter_exact(40, Generator::Oat, 0.0).unwrap();
        assert!((xi - 1.0).abs() < 1e-12);
        assert!(squeezing_parameter_exact(40, Generator::Oat, 0.01).unwrap() < 1.0);
    }

    #[test]
    fn separable_split_rejects_odd_n() {
        let cfg = ProtocolConfig { n: 7, ..Default::default() };
        assert!(matches!(run_separable(&cfg), Err(Error::InvalidSplit { n: 7 })));
    }
}
