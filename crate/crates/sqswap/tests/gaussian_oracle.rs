//! Exact vacuum-Wick evaluation of the Gaussian input state, checked against
//! the closed-form sensitivity.

use std::f64::consts::PI;

use num_complex::Complex64 as C;
use proptest::prelude::*;
use sqswap::fock::MomentTable;
use sqswap::gaussian::{
    ms_matrix_from_protocol, no_squeezing_closed_forms, q_polynomial, sensitivity_general,
    GaussianConfig, MsMatrix,
};
use sqswap::protocol::InputMoments;

/// `c + sum_m (alpha_m v_m + beta_m v_m^dag)` over four vacuum modes.
#[derive(Clone, Copy)]
struct Affine {
    c: C,
    alpha: [C; 4],
    beta: [C; 4],
}

impl Affine {
    fn constant(c: C) -> Self {
        Self { c, alpha: [C::new(0.0, 0.0); 4], beta: [C::new(0.0, 0.0); 4] }
    }

    fn dagger(&self) -> Self {
        let mut out = Self::constant(self.c.conj());
        for m in 0..4 {
            out.alpha[m] = self.beta[m].conj();
            out.beta[m] = self.alpha[m].conj();
        }
        out
    }

    fn scale(&self, z: C) -> Self {
        let mut out = Self::constant(self.c * z);
        for m in 0..4 {
            out.alpha[m] = self.alpha[m] * z;
            out.beta[m] = self.beta[m] * z;
        }
        out
    }

    fn add(&self, o: &Self) -> Self {
        let mut out = Self::constant(self.c + o.c);
        for m in 0..4 {
            out.alpha[m] = self.alpha[m] + o.alpha[m];
            out.beta[m] = self.beta[m] + o.beta[m];
        }
        out
    }
}

/// `<0| L_1 L_2 ... L_k |0>`.
fn expect(ops: &[Affine]) -> C {
    let Some((first, rest)) = ops.split_first() else {
        return C::new(1.0, 0.0);
    };
    let mut total = first.c * expect(rest);
    for j in 0..rest.len() {
        let g: C = (0..4).map(|m| first.alpha[m] * rest[j].beta[m]).sum();
        if g.norm() == 0.0 {
            continue;
        }
        let mut reduced = rest.to_vec();
        reduced.remove(j);
        total += g * expect(&reduced);
    }
    total
}

/// Quadratic observable `sum coeff * A^dag B`.
type Quad = Vec<(C, Affine, Affine)>;

fn mean(q: &Quad) -> f64 {
    q.iter().map(|(k, x, y)| k * expect(&[x.dagger(), *y])).sum::<C>().re
}

fn second(q1: &Quad, q2: &Quad) -> f64 {
    let mut acc = C::new(0.0, 0.0);
    for (k1, x1, y1) in q1 {
        for (k2, x2, y2) in q2 {
            acc += k1 * k2 * expect(&[x1.dagger(), *y1, x2.dagger(), *y2]);
        }
    }
    acc.re
}

fn vac(m: usize) -> Affine {
    let mut a = Affine::constant(C::new(0.0, 0.0));
    a.alpha[m] = C::new(1.0, 0.0);
    a
}

fn jz(p: Affine, q: Affine) -> Quad {
    vec![(C::new(0.5, 0.0), p, p), (C::new(-0.5, 0.0), q, q)]
}

fn jx(p: Affine, q: Affine) -> Quad {
    vec![(C::new(0.5, 0.0), p, q), (C::new(0.5, 0.0), q, p)]
}

fn wick_moments(cfg: &GaussianConfig) -> InputMoments {
    let (ch, sh) = (cfg.r.cosh(), cfg.r.sinh());
    let phi_a = cfg.phi_a0 - 0.5 * cfg.nu_e;
    let a = vac(0).add(&Affine::constant(C::from_polar(cfg.alpha_a_mag, phi_a)));
    let d = vac(3).add(&Affine::constant(C::from_polar(cfg.alpha_d_mag, cfg.phi_d0)));
    let sq_phase = C::from_polar(1.0, cfg.phi0 + cfg.nu_e);
    let b0 = vac(1).scale(C::new(ch, 0.0)).add(&vac(1).dagger().scale(-sq_phase * sh));
    let c0 = vac(2);
    let ms = &cfg.ms;
    let b = b0
        .scale(C::from_polar(ms.u_bb_mag, ms.delta_bb))
        .add(&c0.scale(C::from_polar(-ms.u_cb_mag, -ms.delta_bc)));
    let c = b0
        .scale(C::from_polar(ms.u_cb_mag, ms.delta_cb))
        .add(&c0.scale(C::from_polar(ms.u_bb_mag, -ms.delta_cc)));
    let obs = [jz(a, b), jx(a, b), jz(c, d), jx(c, d)];
    let means: Vec<f64> = obs.iter().map(mean).collect();
    let mut cov = vec![vec![0.0; 4]; 4];
    for i in 0..4 {
        for j in 0..4 {
            cov[i][j] = second(&obs[i], &obs[j]) - means[i] * means[j];
        }
    }
    for i in 0..4 {
        for j in 0..i {
            let s = 0.5 * (cov[i][j] + cov[j][i]);
            cov[i][j] = s;
            cov[j][i] = s;
        }
    }
    InputMoments { n: cfg.atoms().round() as usize, table: MomentTable { means, cov } }
}

fn wick_sensitivity(cfg: &GaussianConfig) -> f64 {
    wick_moments(cfg)
        .report(cfg.theta_a, cfg.theta_b, cfg.v_a, cfg.v_b)
        .unwrap()
        .var_diff
}

#[test]
fn protocol_point_agrees() {
    for (n, r) in [(100, 0.0), (100, 0.3), (400, 0.9), (50, 0.05)] {
        let cfg = GaussianConfig::protocol(n, r);
        let a = sensitivity_general(&cfg).unwrap();
        let b = wick_sensitivity(&cfg);
        assert!((a - b).abs() < 1e-12 * b.max(1e-3), "N={n} r={r}: {a} vs {b}");
    }
}

#[test]
fn zero_squeezing_matches_theory_form() {
    for (ta, tb) in [(0.4, 2.1), (1.2, 1.2), (PI / 2.0, 0.7)] {
        let mut cfg = GaussianConfig::protocol(100, 0.0);
        cfg.theta_a = ta;
        cfg.theta_b = tb;
        let (theory, _) = no_squeezing_closed_forms(ta, tb, 100).unwrap();
        assert!((sensitivity_general(&cfg).unwrap() - theory).abs() < 1e-14);
        assert!((wick_sensitivity(&cfg) - theory).abs() < 1e-13);
    }
}

fn arb_config() -> impl Strategy<Value = GaussianConfig> {
    (
        (20.0f64..200.0, 20.0f64..200.0, -PI..PI, -PI..PI, 0.0f64..1.2, -PI..PI),
        (0.0f64..4.0 * PI, 0.0f64..PI, -PI..PI, -PI..PI, -PI..PI),
        (-2.0f64..2.0, -2.0f64..2.0, 0.15f64..3.0, 0.15f64..3.0),
    )
        .prop_map(|((na, nd, pa, pd, r, p0), (nu, th, dbb, dcb, dbc), (va, vb, ta, tb))| {
            GaussianConfig {
                alpha_a_mag: na.sqrt(),
                alpha_d_mag: nd.sqrt(),
                phi_a0: pa,
                phi_d0: pd,
                r,
                phi0: p0,
                nu_e: nu,
                ms: MsMatrix::new((0.5 * th).cos(), dbb, dcb, dbc),
                v_a: va,
                v_b: vb,
                theta_a: ta,
                theta_b: tb,
            }
        })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn closed_form_matches_wick(cfg in arb_config()) {
        let a = sensitivity_general(&cfg).unwrap();
        let b = wick_sensitivity(&cfg);
        prop_assert!((a - b).abs() <= 1e-9 * b.abs().max(1e-6), "{} vs {}", a, b);
    }

    #[test]
    fn q_is_nonnegative(cfg in arb_config()) {
        prop_assert!(q_polynomial(&cfg).unwrap() >= -1e-15);
    }

    #[test]
    fn joint_shift_symmetry(r in 0.0f64..1.5, nu in 0.0f64..4.0 * PI, phi in -PI..PI) {
        let mut cfg = GaussianConfig::protocol(200, r);
        cfg.nu_e = nu;
        cfg.ms = ms_matrix_from_protocol(PI / 2.0, phi);
        let base = sensitivity_general(&cfg).unwrap();
        cfg.nu_e = nu + PI;
        cfg.ms = ms_matrix_from_protocol(PI / 2.0, phi + PI / 2.0);
        let moved = sensitivity_general(&cfg).unwrap();
        prop_assert!((base - moved).abs() < 1e-12 * base);
    }
}
