//! Closed-form Gaussian layer.
//!
//! Modes `a` and `d` are replaced by coherent amplitudes of `N/2` atoms each,
//! mode `b` carries a single-mode squeezed vacuum and `c` starts empty. In
//! that picture the differential uncertainty, the optimal mode-swap phases and
//! the quadrature variance of `x_b + x_c` all have short analytic forms,
//! collected here and used as oracles for the exact engine.

use std::f64::consts::{FRAC_1_SQRT_2, FRAC_PI_2, FRAC_PI_4, FRAC_PI_8};

use log::warn;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Beam-splitter matrix acting on `(b, c)` in the Heisenberg picture:
///
/// ```text
/// U^dag b U = |u_bb| e^{i d_bb} b - |u_cb| e^{-i d_bc} c
/// U^dag c U = |u_cb| e^{i d_cb} b + |u_bb| e^{-i d_cc} c
/// ```
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MsMatrix {
    pub u_bb_mag: f64,
    pub u_cb_mag: f64,
    pub delta_bb: f64,
    pub delta_cb: f64,
    pub delta_bc: f64,
    pub delta_cc: f64,
}

impl MsMatrix {
    pub fn identity() -> Self {
        Self {
            u_bb_mag: 1.0,
            u_cb_mag: 0.0,
            delta_bb: 0.0,
            delta_cb: 0.0,
            delta_bc: 0.0,
            delta_cc: 0.0,
        }
    }

    /// Build from magnitudes and the three free phases; `delta_cc` follows
    /// from unitarity.
    pub fn new(u_bb_mag: f64, delta_bb: f64, delta_cb: f64, delta_bc: f64) -> Self {
        let u_bb_mag = u_bb_mag.clamp(0.0, 1.0);
        Self {
            u_bb_mag,
            u_cb_mag: (1.0 - u_bb_mag * u_bb_mag).sqrt(),
            delta_bb,
            delta_cb,
            delta_bc,
            delta_cc: delta_bb + delta_bc - delta_cb,
        }
    }
}

/// Matrix realized by the laser coupling of strength `theta_ms` and phase
/// `phi_ms`.
pub fn ms_matrix_from_protocol(theta_ms: f64, phi_ms: f64) -> MsMatrix {
    let delta = phi_ms - FRAC_PI_2;
    MsMatrix {
        u_bb_mag: (0.5 * theta_ms).cos(),
        u_cb_mag: (0.5 * theta_ms).sin(),
        delta_bb: 0.0,
        delta_cb: delta,
        delta_bc: delta,
        delta_cc: 0.0,
    }
}

/// Inputs of the analytic sensitivity.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GaussianConfig {
    pub alpha_a_mag: f64,
    pub alpha_d_mag: f64,
    pub phi_a0: f64,
    pub phi_d0: f64,
    pub r: f64,
    pub phi0: f64,
    pub nu_e: f64,
    pub ms: MsMatrix,
    pub v_a: f64,
    pub v_b: f64,
    pub theta_a: f64,
    pub theta_b: f64,
}

impl GaussianConfig {
    /// The concrete protocol: equal real coherent amplitudes of `N/2` atoms,
    /// squeezing phase `pi/2`, mid-fringe, differential weights, and the
    /// optimal orientation and mode swap.
    pub fn protocol(n: usize, r: f64) -> Self {
        let c = optimal_constants();
        let alpha = (0.5 * n as f64).sqrt();
        Self {
            alpha_a_mag: alpha,
            alpha_d_mag: alpha,
            phi_a0: 0.0,
            phi_d0: 0.0,
            r,
            phi0: FRAC_PI_2,
            nu_e: c.nu_e,
            ms: ms_matrix_from_protocol(c.theta_ms, c.phi_ms),
            v_a: 1.0,
            v_b: -1.0,
            theta_a: FRAC_PI_2,
            theta_b: FRAC_PI_2,
        }
    }

    /// Total atom number carried by the coherent modes.
    pub fn atoms(&self) -> f64 {
        self.alpha_a_mag.powi(2) + self.alpha_d_mag.powi(2)
    }

    /// Mean occupation of the squeezed mode, `sinh^2 r`.
    pub fn n_s(&self) -> f64 {
        self.r.sinh().powi(2)
    }
}

/// Location of the absolute optimum used throughout.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OptimalConstants {
    pub nu_e: f64,
    pub delta_cb: f64,
    pub phi_ms: f64,
    pub theta_ms: f64,
    pub u_bb_mag: f64,
    pub u_cb_mag: f64,
}

pub fn optimal_constants() -> OptimalConstants {
    OptimalConstants {
        nu_e: 11.0 * FRAC_PI_4,
        delta_cb: -5.0 * FRAC_PI_8,
        phi_ms: -FRAC_PI_8,
        theta_ms: FRAC_PI_2,
        u_bb_mag: FRAC_1_SQRT_2,
        u_cb_mag: FRAC_1_SQRT_2,
    }
}

/// `(chi_A, chi_B)`: the relative phases between each coherent amplitude and
/// the squeezing axis seen by the corresponding interferometer.
pub fn chi_angles(cfg: &GaussianConfig) -> (f64, f64) {
    let chi_a = cfg.phi_a0 - 0.5 * cfg.phi0 - cfg.nu_e - cfg.ms.delta_bb;
    let chi_b = cfg.phi_d0 - 0.5 * cfg.phi0 - 0.5 * cfg.nu_e - cfg.ms.delta_cb;
    (chi_a, chi_b)
}

/// Per-interferometer ingredients shared by the mid-fringe part and `Q`.
struct Arms {
    /// `|alpha||u| / (|alpha|^2 - |u|^2 s^2)`
    ka: f64,
    kb: f64,
    /// `(|alpha|^2 + |u|^2 s^2) / (|alpha|^2 - |u|^2 s^2)^2`
    na: f64,
    nb: f64,
    /// `|u|^2 / (|alpha|^2 - |u|^2 s^2)`
    la: f64,
    lb: f64,
}

fn arms(cfg: &GaussianConfig) -> Result<Arms> {
    let s2 = cfg.n_s();
    let n = cfg.atoms();
    if s2 > 0.1 * n {
        warn!(
            "squeezed-mode occupation {s2:.3} exceeds N/10 = {:.3}; the undepleted-pump picture degrades",
            0.1 * n
        );
    }
    let side = |alpha: f64, u: f64, which: &'static str| -> Result<(f64, f64, f64)> {
        let a2 = alpha * alpha;
        let u2 = u * u;
        let den = a2 - u2 * s2;
        if den <= 0.0 {
            return Err(Error::DenominatorNonPositive { which });
        }
        Ok((alpha * u / den, (a2 + u2 * s2) / (den * den), u2 / den))
    };
    let (ka, na, la) = side(cfg.alpha_a_mag, cfg.ms.u_bb_mag, "interferometer A")?;
    let (kb, nb, lb) = side(cfg.alpha_d_mag, cfg.ms.u_cb_mag, "interferometer B")?;
    Ok(Arms { ka, kb, na, nb, la, lb })
}

fn cot(theta: f64) -> f64 {
    theta.cos() / theta.sin()
}

/// Phase-dependent part `Q(cot theta_A, cot theta_B)`; zero at mid-fringe.
pub fn q_polynomial(cfg: &GaussianConfig) -> Result<f64> {
    let a = arms(cfg)?;
    Ok(q_from(&a, cfg))
}

fn q_from(a: &Arms, cfg: &GaussianConfig) -> f64 {
    let (ca, cb) = (cot(cfg.theta_a), cot(cfg.theta_b));
    let (s, c) = (cfg.r.sinh(), cfg.r.cosh());
    let cross = ca * a.la * cfg.v_a + cb * a.lb * cfg.v_b;
    ca * ca * a.na * cfg.v_a * cfg.v_a
        + cb * cb * a.nb * cfg.v_b * cfg.v_b
        + (2.0 * c * c - 1.0) * s * s * cross * cross
}

/// Method-of-moments uncertainty of `v_A theta_A + v_B theta_B` for the
/// Gaussian input state.
pub fn sensitivity_general(cfg: &GaussianConfig) -> Result<f64> {
    let a = arms(cfg)?;
    let (chi_a, chi_b) = chi_angles(cfg);
    let e_plus = (2.0 * cfg.r).exp() - 1.0;
    let e_minus = 1.0 - (-2.0 * cfg.r).exp();
    let sin_term = a.ka * chi_a.sin() * cfg.v_a - a.kb * chi_b.sin() * cfg.v_b;
    let cos_term = a.ka * chi_a.cos() * cfg.v_a - a.kb * chi_b.cos() * cfg.v_b;
    Ok(e_plus * sin_term * sin_term - e_minus * cos_term * cos_term
        + a.na * cfg.v_a * cfg.v_a
        + a.nb * cfg.v_b * cfg.v_b
        + q_from(&a, cfg))
}

/// Mid-fringe uncertainty with the depletion of the coherent modes
/// neglected (`|u|^2 sinh^2 r` dropped against `|alpha|^2`).
pub fn sensitivity_undepleted(cfg: &GaussianConfig) -> f64 {
    let (chi_a, chi_b) = chi_angles(cfg);
    let ka = cfg.ms.u_bb_mag / cfg.alpha_a_mag;
    let kb = cfg.ms.u_cb_mag / cfg.alpha_d_mag;
    let sin_term = ka * chi_a.sin() * cfg.v_a - kb * chi_b.sin() * cfg.v_b;
    let cos_term = ka * chi_a.cos() * cfg.v_a - kb * chi_b.cos() * cfg.v_b;
    ((2.0 * cfg.r).exp() - 1.0) * sin_term * sin_term
        - (1.0 - (-2.0 * cfg.r).exp()) * cos_term * cos_term
        + (cfg.v_a / cfg.alpha_a_mag).powi(2)
        + (cfg.v_b / cfg.alpha_d_mag).powi(2)
}

/// `G^2 = (e^{-2r} + sinh^2(r)/N)^{-1}`.
pub fn gain_analytic(n: usize, r: f64) -> f64 {
    let n_s = r.sinh().powi(2);
    if n_s > 0.1 * n as f64 {
        warn!("gain_analytic: sinh^2 r = {n_s:.3} is not small against N = {n}");
    }
    1.0 / ((-2.0 * r).exp() + n_s / n as f64)
}

/// `G^2` as a function of the squeezed occupation in the strongly squeezed
/// regime, where `e^{-2r} ~ 1/(4 n_s)`.
pub fn gain_of_occupation(n: usize, n_s: f64) -> f64 {
    1.0 / (0.25 / n_s + n_s / n as f64)
}

/// Same as [`gain_of_occupation`] with the exact `e^{-2r}` for
/// `n_s = sinh^2 r`.
pub fn gain_of_occupation_exact(n: usize, n_s: f64) -> f64 {
    let e = ((n_s + 1.0).sqrt() - n_s.sqrt()).powi(2);
    1.0 / (e + n_s / n as f64)
}

/// Maximize a unimodal function on `[lo, hi]` by golden-section search.
pub fn golden_max(mut f: impl FnMut(f64) -> f64, mut lo: f64, mut hi: f64, tol: f64) -> (f64, f64) {
    let g = 0.5 * (5f64.sqrt() - 1.0);
    let mut x1 = hi - g * (hi - lo);
    let mut x2 = lo + g * (hi - lo);
    let (mut f1, mut f2) = (f(x1), f(x2));
    while hi - lo > tol {
        if f1 >= f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - g * (hi - lo);
            f1 = f(x1);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + g * (hi - lo);
            f2 = f(x2);
        }
    }
    let x = 0.5 * (lo + hi);
    (x, f(x))
}

/// `(G^2_max, n_s at the maximum)` from a numerical maximization of
/// [`gain_of_occupation`] over continuous `n_s`.
pub fn gain_max(n: usize) -> (f64, f64) {
    let (x, g) = golden_max(|s| gain_of_occupation(n, s), 1e-6, n as f64, 1e-10);
    (g, x)
}

/// Like [`gain_max`] with the exact `e^{-2r}`.
pub fn gain_max_exact(n: usize) -> (f64, f64) {
    let (x, g) = golden_max(|s| gain_of_occupation_exact(n, s), 1e-6, n as f64, 1e-10);
    (g, x)
}

/// Zero-squeezing differential uncertainty: the Gaussian-model value and the
/// exact fixed-`N` value, `(theory, numerical)`.
pub fn no_squeezing_closed_forms(theta_a: f64, theta_b: f64, n: usize) -> Result<(f64, f64)> {
    for theta in [theta_a, theta_b] {
        if !(theta > 0.0 && theta < std::f64::consts::PI) {
            return Err(Error::BoundaryPhase { theta });
        }
    }
    let (ca, cb) = (cot(theta_a), cot(theta_b));
    let n = n as f64;
    let theory = 2.0 / n * (ca * ca + cb * cb + 2.0);
    let numerical = theory - (ca - cb).powi(2) / n;
    Ok((theory, numerical))
}

/// State of modes `(b, c)` entering the quadrature picture.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum QuadratureKind {
    /// Squeezed `b`, vacuum `c`, squeezing axis aligned with the quadrature.
    NoMs,
    /// The same state after the balanced, optimally phased mode swap.
    OptimalMs,
    /// Two-mode squeezed vacuum with its squeezed axis on `x_b + x_c`.
    Tmsv,
}

/// `Var(x_b(lambda) + x_c(lambda))` with `x = (b + b^dag)/sqrt 2`, so the
/// two-mode vacuum gives 1.
pub fn quadrature_variance(kind: QuadratureKind, r: f64, lambda: f64) -> f64 {
    let (s2, c2) = (lambda.sin().powi(2), lambda.cos().powi(2));
    match kind {
        QuadratureKind::NoMs => {
            0.5 * ((2.0 * r).exp() + 1.0) * s2 + 0.5 * ((-2.0 * r).exp() + 1.0) * c2
        }
        QuadratureKind::OptimalMs | QuadratureKind::Tmsv => {
            (2.0 * r).exp() * s2 + (-2.0 * r).exp() * c2
        }
    }
}

/// General mode-swapped single-mode squeezed vacuum:
/// `Var(x_b(lambda) + x_c(lambda))` for arbitrary magnitudes and `chi` angles.
pub fn quadrature_variance_general(
    r: f64,
    u_bb_mag: f64,
    u_cb_mag: f64,
    chi_a: f64,
    chi_b: f64,
    lambda: f64,
) -> f64 {
    let s = u_bb_mag * (lambda + chi_a).sin() + u_cb_mag * (lambda + chi_b).sin();
    let c = u_bb_mag * (lambda + chi_a).cos() + u_cb_mag * (lambda + chi_b).cos();
    0.5 * ((2.0 * r).exp() - 1.0) * s * s - 0.5 * (1.0 - (-2.0 * r).exp()) * c * c + 1.0
}

/// Two-mode squeezed vacuum variance in the `x = b + b^dag` convention,
/// `2 e^{-2r}`, whose crossing of 1 marks the EPR threshold.
pub fn tmsv_quoted_variance(r: f64) -> f64 {
    2.0 * (-2.0 * r).exp()
}

/// Zero-mean Gaussian state of modes `(b, c)` as the symmetrized covariance
/// matrix of `(x_b, p_b, x_c, p_c)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TwoModeGaussian {
    pub cov: [[f64; 4]; 4],
}

impl TwoModeGaussian {
    pub fn vacuum() -> Self {
        let mut cov = [[0.0; 4]; 4];
        for (i, row) in cov.iter_mut().enumerate() {
            row[i] = 0.5;
        }
        Self { cov }
    }

    /// Apply a unitary whose Heisenberg action on the quadrature vector is
    /// `xi -> m xi`.
    pub fn transform(&self, m: &[[f64; 4]; 4]) -> Self {
        let mut tmp = [[0.0; 4]; 4];
        for i in 0..4 {
            for j in 0..4 {
                tmp[i][j] = (0..4).map(|k| m[i][k] * self.cov[k][j]).sum();
            }
        }
        let mut cov = [[0.0; 4]; 4];
        for i in 0..4 {
            for j in 0..4 {
                cov[i][j] = (0..4).map(|k| tmp[i][k] * m[j][k]).sum();
            }
        }
        Self { cov }
    }

    /// Single-mode squeezing of `b` with the reduced quadrature along angle
    /// `axis` (`x_b(axis)` variance `e^{-2r}/2`).
    pub fn squeeze_b(&self, r: f64, axis: f64) -> Self {
        let (s, c) = axis.sin_cos();
        // rotate to the axis frame, scale, rotate back
        let rot = [[c, s], [-s, c]];
        let scale = [(-r).exp(), r.exp()];
        let mut m = identity4();
        for i in 0..2 {
            for j in 0..2 {
                m[i][j] = (0..2).map(|k| rot[k][i] * scale[k] * rot[k][j]).sum();
            }
        }
        self.transform(&m)
    }

    /// Beam splitter of an [`MsMatrix`] (only the real-quadrature image of
    /// the complex 2x2 matrix is needed).
    pub fn mode_swap(&self, ms: &MsMatrix) -> Self {
        // complex coefficients of U^dag (b, c) U in terms of (b, c)
        let entries = [
            [(ms.u_bb_mag, ms.delta_bb), (-ms.u_cb_mag, -ms.delta_bc)],
            [(ms.u_cb_mag, ms.delta_cb), (ms.u_bb_mag, -ms.delta_cc)],
        ];
        let mut m = [[0.0; 4]; 4];
        for (out, row) in entries.iter().enumerate() {
            for (inp, &(mag, ph)) in row.iter().enumerate() {
                // z = mag e^{i ph} acting on x + i p
                let (s, c) = ph.sin_cos();
                m[2 * out][2 * inp] = mag * c;
                m[2 * out][2 * inp + 1] = -mag * s;
                m[2 * out + 1][2 * inp] = mag * s;
                m[2 * out + 1][2 * inp + 1] = mag * c;
            }
        }
        self.transform(&m)
    }

    /// Two-mode squeezing `b -> cosh r b - sinh r c^dag`,
    /// `c -> cosh r c - sinh r b^dag`.
    pub fn two_mode_squeeze(&self, r: f64) -> Self {
        let (ch, sh) = (r.cosh(), r.sinh());
        let m = [
            [ch, 0.0, -sh, 0.0],
            [0.0, ch, 0.0, sh],
            [-sh, 0.0, ch, 0.0],
            [0.0, sh, 0.0, ch],
        ];
        self.transform(&m)
    }

    /// `Var(x_b(lb) + x_c(lc))`.
    pub fn sum_variance(&self, lambda_b: f64, lambda_c: f64) -> f64 {
        let v = [lambda_b.cos(), lambda_b.sin(), lambda_c.cos(), lambda_c.sin()];
        let mut acc = 0.0;
        for i in 0..4 {
            for j in 0..4 {
                acc += v[i] * self.cov[i][j] * v[j];
            }
        }
        acc
    }
}

fn identity4() -> [[f64; 4]; 4] {
    let mut m = [[0.0; 4]; 4];
    for (i, row) in m.iter_mut().enumerate() {
        row[i] = 1.0;
    }
    m
}

/// Covariance-matrix construction of each [`QuadratureKind`].
pub fn quadrature_state(kind: QuadratureKind, r: f64) -> TwoModeGaussian {
    let vac = TwoModeGaussian::vacuum();
    match kind {
        QuadratureKind::NoMs => vac.squeeze_b(r, 0.0),
        QuadratureKind::OptimalMs => vac
            .squeeze_b(r, 0.0)
            .mode_swap(&MsMatrix::new(FRAC_1_SQRT_2, 0.0, 0.0, 0.0)),
        QuadratureKind::Tmsv => vac.two_mode_squeeze(r),
    }
}

/// Linearized mid-fringe uncertainty of the differential phase for `N`
/// atoms with real coherent amplitudes in `a` and `d`.
///
/// Replacing `a` and `d` by `sqrt(N/2)` turns `J_x^{ab}` into
/// `sqrt(N) x_b / 2` and `J_x^{cd}` into `sqrt(N) x_c / 2`, while the input
/// `J_z` means become `+N/4` and `-N/4`.
pub fn midfringe_linearized(state: &TwoModeGaussian, n: usize) -> f64 {
    let n = n as f64;
    let jz_a = 0.25 * n;
    let jz_b = -0.25 * n;
    let w = 0.5 * n.sqrt();
    // J_x^{ab}/<J_z^{ab}> - J_x^{cd}/<J_z^{cd}> = (w/jz_a) x_b - (w/jz_b) x_c
    let (ka, kb) = (w / jz_a, -w / jz_b);
    let v = [ka, 0.0, kb, 0.0];
    let mut acc = 0.0;
    for i in 0..4 {
        for j in 0..4 {
            acc += v[i] * state.cov[i][j] * v[j];
        }
    }
    acc
}

/// `xi_R^2 = e^{-2r}`.
pub fn squeezing_parameter(r: f64) -> f64 {
    (-2.0 * r).exp()
}

/// Squeezing magnitude `r = N tau / 4` produced by one-axis twisting.
pub fn r_from_tau(n: usize, tau: f64) -> f64 {
    0.25 * n as f64 * tau
}

/// Cubic-order expansion `1 - N tau/2 + (N tau)^2/8` of the one-axis
/// twisting squeezing parameter.
pub fn oat_squeezing_series(n: usize, tau: f64) -> f64 {
    let x = n as f64 * tau;
    1.0 - 0.5 * x + x * x / 8.0
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn protocol_matrix_examples() {
        let id = ms_matrix_from_protocol(0.0, 0.3);
        assert_eq!(id.u_bb_mag, 1.0);
        assert_eq!(id.u_cb_mag, 0.0);
        let bal = ms_matrix_from_protocol(FRAC_PI_2, -FRAC_PI_8);
        assert!((bal.u_bb_mag - FRAC_1_SQRT_2).abs() < 1e-15);
        assert!((bal.u_cb_mag - FRAC_1_SQRT_2).abs() < 1e-15);
        assert!((bal.delta_cb + 5.0 * FRAC_PI_8).abs() < 1e-15);
        assert!((bal.delta_cc - (bal.delta_bb + bal.delta_bc - bal.delta_cb)).abs() < 1e-15);
    }

    #[test]
    fn chi_examples() {
        let mut cfg = GaussianConfig::protocol(100, 0.1);
        cfg.nu_e = 0.0;
        cfg.ms = MsMatrix::identity();
        let (a, b) = chi_angles(&cfg);
        assert!((a + FRAC_PI_4).abs() < 1e-15 && (b + FRAC_PI_4).abs() < 1e-15);

        let cfg = GaussianConfig::protocol(100, 0.1);
        let (a, b) = chi_angles(&cfg);
        assert!((a + 3.0 * PI).abs() < 1e-12 && (b + PI).abs() < 1e-12);
        assert!((a.cos() + 1.0).abs() < 1e-12 && (b.cos() + 1.0).abs() < 1e-12);
    }

    #[test]
    fn coherent_limit_is_sql() {
        let mut cfg = GaussianConfig::protocol(100, 0.0);
        cfg.ms = MsMatrix::identity();
        assert!((sensitivity_general(&cfg).unwrap() - 0.04).abs() < 1e-15);
    }

    #[test]
    fn optimal_point_matches_leading_order() {
        let n = 2000;
        let r = 0.5;
        let cfg = GaussianConfig::protocol(n, r);
        let exact = sensitivity_general(&cfg).unwrap();
        let lead = 4.0 * (-2.0 * r).exp() / n as f64 + 4.0 * cfg.n_s() / (n * n) as f64;
        assert!((exact - lead).abs() / lead < 1e-3, "{exact} vs {lead}");
    }

    #[test]
    fn depletion_guard() {
        let mut cfg = GaussianConfig::protocol(4, 3.0);
        cfg.alpha_a_mag = 0.1;
        assert!(matches!(
            sensitivity_general(&cfg),
            Err(Error::DenominatorNonPositive { .. })
        ));
    }

    #[test]
    fn no_squeezing_examples() {
        let (t, n) = no_squeezing_closed_forms(FRAC_PI_2, FRAC_PI_2, 100).unwrap();
        assert!((t - 0.04).abs() < 1e-15 && (n - 0.04).abs() < 1e-15);
        let (t, n) = no_squeezing_closed_forms(FRAC_PI_4, FRAC_PI_2, 100).unwrap();
        assert!((t - 0.06).abs() < 1e-12 && (n - 0.05).abs() < 1e-12);
        for i in 1..20 {
            let ta = i as f64 * PI / 20.0;
            let (_, n) = no_squeezing_closed_forms(ta, PI - ta, 100).unwrap();
            assert!((n - 0.04).abs() < 1e-12);
        }
        assert!(matches!(
            no_squeezing_closed_forms(0.0, 1.0, 10),
            Err(Error::BoundaryPhase { .. })
        ));
    }

    #[test]
    fn gain_examples() {
        assert_eq!(gain_analytic(100, 0.0), 1.0);
        let (g, s) = gain_max(2000);
        assert!((g - 2000f64.sqrt()).abs() < 1e-6 * g);
        assert!((s - 0.5 * 2000f64.sqrt()).abs() < 1e-4);
        let r: f64 = 0.4;
        assert!((gain_analytic(1_000_000_000, r) - (2.0 * r).exp()).abs() < 1e-6);
    }

    #[test]
    fn quadrature_examples() {
        assert!((quadrature_variance(QuadratureKind::OptimalMs, 0.7, 0.0) - (-1.4f64).exp()).abs() < 1e-15);
        assert!((quadrature_variance(QuadratureKind::NoMs, 40.0, 0.0) - 0.5).abs() < 1e-15);
        assert!((tmsv_quoted_variance(0.5 * std::f64::consts::LN_2) - 1.0).abs() < 1e-15);
        assert_eq!(squeezing_parameter(0.0), 1.0);
        assert!((squeezing_parameter(1.0) - 0.1353352832366127).abs() < 1e-15);
    }

    #[test]
    fn covariance_states_reproduce_closed_forms() {
        for kind in [QuadratureKind::NoMs, QuadratureKind::OptimalMs, QuadratureKind::Tmsv] {
            for r in [0.0, 0.2, 1.1] {
                let st = quadrature_state(kind, r);
                for l in [0.0, 0.4, 1.3] {
                    let a = st.sum_variance(l, l);
                    let b = quadrature_variance(kind, r, l);
                    assert!((a - b).abs() < 1e-12, "{kind:?} r={r} l={l}: {a} vs {b}");
                }
            }
        }
    }
}
