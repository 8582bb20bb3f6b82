//! One function per subcommand. Each resolves its inputs, runs the library,
//! and hands tables to [`output::emit`].

use std::f64::consts::PI;

use log::info;
use rayon::prelude::*;
use serde_json::json;
use sqswap::estimation::{clock_with, differential_with, Experiment, NoiseConfig};
use sqswap::fock::Generator;
use sqswap::gaussian::{gain_analytic, r_from_tau};
use sqswap::optimizer::{optimize_with, polish, ridge_nu, Budget, Evaluator, FreeParam, Point};
use sqswap::protocol::{
    average_gain, bandwidth, separable_moments, separable_orientations, InputMoments,
    SeparableOptions,
};

use crate::output::{db, emit, Table};
use crate::settings::Settings;
use crate::AppError;

impl From<sqswap::Error> for AppError {
    fn from(e: sqswap::Error) -> Self {
        match e {
            sqswap::Error::InvalidConfig(m) => AppError::Usage(m),
            sqswap::Error::InvalidSplit { .. } | sqswap::Error::CapacityExceeded { .. } => {
                AppError::Usage(e.to_string())
            }
            other => AppError::Compute(other.to_string()),
        }
    }
}

fn budget(s: &Settings) -> Budget {
    Budget { grid: s.grid, rounds: s.rounds, max_evals: s.max_evals }
}

fn linspace(lo: f64, hi: f64, points: usize) -> Vec<f64> {
    if points == 1 {
        return vec![lo];
    }
    (0..points)
        .map(|i| lo + (hi - lo) * i as f64 / (points - 1) as f64)
        .collect()
}

fn logspace(lo: f64, hi: f64, points: usize) -> Vec<f64> {
    linspace(lo.ln(), hi.ln(), points).into_iter().map(f64::exp).collect()
}

/// Entangled working point at `tau` (units of `tau_ref`), with `nu`
/// optimized when the settings leave it open.
struct Working {
    eval: Evaluator,
    point: Point,
    gain: f64,
}

fn working_point(s: &Settings, tau: f64) -> Result<Working, AppError> {
    let cfg = s.protocol(tau);
    let eval = Evaluator::new(&cfg)?;
    let mut point = [cfg.nu_e, cfg.phi_ms, cfg.theta_ms, cfg.tau_e];
    if s.nu.is_none() {
        let opt = optimize_with(&eval, &[FreeParam::NuE], budget(s))?;
        point[0] = opt.nu_opt;
    }
    let gain = eval.gain(&point)?;
    Ok(Working { eval, point, gain })
}

/// Separable reference: interferometer A squeezed by `tau`, B by `--tau-b`.
fn separable(s: &Settings, tau: f64) -> Result<(InputMoments, f64), AppError> {
    let mut cfg = s.protocol(0.0);
    cfg.tau_s_a = tau * s.tau_ref();
    let opts = SeparableOptions::default();
    let m = separable_moments(&cfg, opts)?;
    let (nu_a, _) = separable_orientations(&cfg, opts)?;
    Ok((m, nu_a))
}

fn reject_msep(s: &Settings, cmd: &str) -> Result<(), AppError> {
    if s.msep {
        return Err(AppError::Usage(format!(
            "{cmd} needs the full four-mode state and does not support --msep"
        )));
    }
    Ok(())
}

fn tau_grid(s: &Settings) -> Vec<f64> {
    linspace(0.0, s.tau_max, s.points.unwrap_or(40))
}

fn gain_or_zero(m: &InputMoments) -> Result<f64, AppError> {
    match m.gain(std::f64::consts::FRAC_PI_2, std::f64::consts::FRAC_PI_2) {
        Ok(g) => Ok(g),
        Err(sqswap::Error::DegenerateWorkingPoint { .. }) => Ok(0.0),
        Err(e) => Err(e.into()),
    }
}

pub fn gain_scan(s: &Settings) -> Result<(), AppError> {
    let mut t = Table::new(
        "gain-scan",
        &[
            "tau_over_tauref",
            "tau_e",
            "nu_opt",
            "gain_exact",
            "gain_exact_db",
            "gain_analytic",
            "gain_analytic_db",
            "bandwidth",
        ],
    );
    let tr = s.tau_ref();
    for tau in tau_grid(s) {
        let (moments, nu, g) = if s.msep {
            let (m, nu_a) = separable(s, tau)?;
            let g = gain_or_zero(&m)?;
            (m, nu_a, g)
        } else {
            let w = working_point(s, tau)?;
            (w.eval.moments(&w.point)?, w.point[0], w.gain)
        };
        // the squeezing map r = N tau / 4 only holds for one-axis twisting
        let ga = match s.generator {
            Generator::Oat => gain_analytic(s.n, r_from_tau(s.n, tau * tr)),
            Generator::Tat => f64::NAN,
        };
        let bw = bandwidth(&moments, s.resolution)?;
        info!("tau/tau_ref = {tau:.4}: gain {g:.5}");
        t.push(vec![
            tau.into(),
            (tau * tr).into(),
            nu.into(),
            g.into(),
            db(g).into(),
            ga.into(),
            db(ga).into(),
            bw.into(),
        ]);
    }
    emit("gain-scan", s, &[t], json!({ "tau_ref": tr }))?;
    Ok(())
}

pub fn ms_scan(s: &Settings) -> Result<(), AppError> {
    reject_msep(s, "ms-scan")?;
    let tau = s.tau;
    let cfg = s.protocol(tau);
    let eval = Evaluator::new(&cfg)?;
    let n_nu = s.grid;
    let n_phi = s.grid_phi.unwrap_or(s.grid);
    let nus: Vec<f64> = (0..n_nu).map(|i| 4.0 * PI * i as f64 / n_nu as f64).collect();
    let phis: Vec<f64> = (0..n_phi)
        .map(|j| s.phi_min + (s.phi_max - s.phi_min) * j as f64 / n_phi as f64)
        .collect();
    let r = r_from_tau(s.n, cfg.tau_e);
    let cells: Vec<(usize, usize)> =
        (0..n_phi).flat_map(|j| (0..n_nu).map(move |i| (i, j))).collect();
    let gains: Vec<Result<f64, sqswap::Error>> = cells
        .par_iter()
        .map(|&(i, j)| match eval.gain(&[nus[i], phis[j], cfg.theta_ms, cfg.tau_e]) {
            Err(sqswap::Error::DegenerateWorkingPoint { .. }) => Ok(0.0),
            other => other,
        })
        .collect();
    let mut t = Table::new("ms-scan", &["nu", "phi_ms", "gain", "gain_db", "ridge_nu"]);
    let mut best = vec![(f64::NEG_INFINITY, 0.0); n_phi];
    for (&(i, j), g) in cells.iter().zip(gains) {
        let g = g?;
        if g > best[j].0 {
            best[j] = (g, nus[i]);
        }
        t.push(vec![
            nus[i].into(),
            phis[j].into(),
            g.into(),
            db(g).into(),
            ridge_nu(phis[j], r).into(),
        ]);
    }
    let mut m = Table::new(
        "ms-scan-marginal",
        &["phi_ms", "max_gain", "max_gain_db", "nu_at_max", "ridge_nu"],
    );
    for (j, &(g, nu)) in best.iter().enumerate() {
        m.push(vec![
            phis[j].into(),
            g.into(),
            db(g).into(),
            nu.into(),
            ridge_nu(phis[j], r).into(),
        ]);
    }
    emit("ms-scan", s, &[t, m], json!({ "r": r, "tau_e": cfg.tau_e }))?;
    Ok(())
}

fn moments_at(s: &Settings, tau: f64) -> Result<(InputMoments, f64), AppError> {
    if s.msep {
        separable(s, tau)
    } else {
        let w = working_point(s, tau)?;
        Ok((w.eval.moments(&w.point)?, w.point[0]))
    }
}

pub fn bandwidth_cmd(s: &Settings) -> Result<(), AppError> {
    let mut t = Table::new(
        "bandwidth",
        &["tau_over_tauref", "tau_e", "nu", "gain_mid", "gain_mid_db", "bandwidth"],
    );
    let tr = s.tau_ref();
    for tau in tau_grid(s) {
        let (m, nu) = moments_at(s, tau)?;
        let g = gain_or_zero(&m)?;
        t.push(vec![
            tau.into(),
            (tau * tr).into(),
            nu.into(),
            g.into(),
            db(g).into(),
            bandwidth(&m, s.resolution)?.into(),
        ]);
    }
    let (m, _) = moments_at(s, s.tau)?;
    let mut map = Table::new("bandwidth-map", &["theta_a", "theta_b", "gain"]);
    let step = PI / s.resolution as f64;
    for i in 0..s.resolution {
        let ta = (i as f64 + 0.5) * step;
        for j in 0..s.resolution {
            let tb = (j as f64 + 0.5) * step;
            let g = match m.gain(ta, tb) {
                Ok(g) => g,
                Err(sqswap::Error::DegenerateWorkingPoint { .. }) => 0.0,
                Err(e) => return Err(e.into()),
            };
            map.push(vec![ta.into(), tb.into(), g.into()]);
        }
    }
    emit("bandwidth", s, &[t, map], json!({ "tau_ref": tr }))?;
    Ok(())
}

pub fn avg_gain(s: &Settings) -> Result<(), AppError> {
    let (m, nu) = moments_at(s, s.tau)?;
    let mid = gain_or_zero(&m)?;
    let lambdas = match s.lambda {
        Some(l) => vec![l],
        None => {
            let p = s.points.unwrap_or(40);
            (1..=p).map(|i| s.lambda_max * i as f64 / p as f64).collect()
        }
    };
    let mut t = Table::new(
        "avg-gain",
        &["lambda", "avg_gain", "avg_gain_db", "gain_mid", "gain_mid_db"],
    );
    for l in lambdas {
        let g = average_gain(&m, l, s.resolution)?;
        t.push(vec![l.into(), g.into(), db(g).into(), mid.into(), db(mid).into()]);
    }
    emit("avg-gain", s, &[t], json!({ "nu": nu }))?;
    Ok(())
}

fn experiment(s: &Settings) -> Result<(Experiment, f64), AppError> {
    let w = working_point(s, s.tau)?;
    let input = w.eval.input_state(&w.point)?;
    Ok((Experiment::from_input(&input)?, w.point[0]))
}

pub fn estimate(s: &Settings) -> Result<(), AppError> {
    reject_msep(s, "estimate")?;
    let (exp, nu) = experiment(s)?;
    let sigmas = match s.sigma {
        Some(x) => vec![x],
        None => linspace(0.0, s.sigma_max, s.points.unwrap_or(11)),
    };
    let sql = 4.0 / s.n as f64;
    let mut t = Table::new(
        "estimate",
        &[
            "sigma",
            "shots",
            "mean_a",
            "mean_b",
            "var_a",
            "var_b",
            "cov_ab",
            "var_diff",
            "var_sum",
            "sql",
            "gain_empirical",
        ],
    );
    let mut last = None;
    for (k, &sigma) in sigmas.iter().enumerate() {
        let noise = NoiseConfig {
            sigma_pn: sigma,
            shots: s.shots,
            seed: s.seed.wrapping_add((k as u64) << 32),
            ..Default::default()
        };
        let res = differential_with(&exp, &noise, s.phi_a, s.phi_b)?;
        let st = res.stats;
        t.push(vec![
            sigma.into(),
            st.shots.into(),
            st.mean_a.into(),
            st.mean_b.into(),
            st.var_a.into(),
            st.var_b.into(),
            st.cov_ab.into(),
            st.var_diff.into(),
            st.var_sum.into(),
            sql.into(),
            (sql / st.var_diff).into(),
        ]);
        last = Some(res.histogram);
    }
    let hist = last.expect("at least one noise width");
    let mut h = Table::new("estimate-histogram", &["theta_a", "theta_b", "count"]);
    for i in 0..hist.bins {
        for j in 0..hist.bins {
            let (a, b) = hist.center(i, j);
            h.push(vec![a.into(), b.into(), hist.counts[i * hist.bins + j].into()]);
        }
    }
    emit(
        "estimate",
        s,
        &[t, h],
        json!({ "nu": nu, "histogram_sigma": sigmas.last(), "histogram_outside": hist.outside }),
    )?;
    Ok(())
}

pub fn clock(s: &Settings) -> Result<(), AppError> {
    reject_msep(s, "clock")?;
    let mut s = s.clone();
    if s.coherent {
        s.tau = 0.0;
        s.nu = Some(0.0);
    }
    let (exp, nu) = experiment(&s)?;
    let ts = if s.t.is_empty() {
        if !(s.t_min > 0.0 && s.t_max >= s.t_min) {
            return Err(AppError::Usage("need 0 < --t-min <= --t-max".into()));
        }
        logspace(s.t_min, s.t_max, s.points.unwrap_or(12))
    } else {
        s.t.clone()
    };
    let noise = NoiseConfig {
        gamma_lo: s.gamma_lo,
        t_tot: s.t_tot,
        omega_0: s.omega0,
        omega_a: s.omega0,
        omega_b: s.omega0,
        shots: s.shots,
        seed: s.seed,
        ..Default::default()
    };
    let rows = clock_with(&exp, &noise, &ts)?;
    let mut t = Table::new(
        "clock",
        &[
            "t",
            "cycles",
            "mean_single",
            "var_single",
            "var_avg",
            "coherent_reference",
            "squeezed_floor",
            "ratio_to_coherent",
            "ratio_to_floor",
        ],
    );
    for r in rows {
        t.push(vec![
            r.t.into(),
            r.cycles.into(),
            r.mean_single.into(),
            r.var_single.into(),
            r.var_avg.into(),
            r.coherent_reference.into(),
            r.squeezed_floor.into(),
            (r.var_avg / r.coherent_reference).into(),
            (r.var_avg / r.squeezed_floor).into(),
        ]);
    }
    emit("clock", &s, &[t], json!({ "nu": nu }))?;
    Ok(())
}

pub fn optimize(s: &Settings) -> Result<(), AppError> {
    reject_msep(s, "optimize")?;
    let mut free = Vec::new();
    for name in &s.free {
        let p = FreeParam::parse(&name.replace('-', "_")).ok_or_else(|| {
            AppError::Usage(format!(
                "unknown free parameter {name:?} (expected nu_e, phi_ms, theta_ms, tau_e)"
            ))
        })?;
        free.push(p);
    }
    if free.is_empty() {
        return Err(AppError::Usage("--free needs at least one parameter".into()));
    }
    let tr = s.tau_ref();
    let eval = Evaluator::new(&s.protocol(s.tau))?;
    let mut res = optimize_with(&eval, &free, budget(s))?;
    if s.polish > 0 {
        let step = [PI / 16.0, PI / 32.0, PI / 16.0, tr / 8.0];
        res = polish(&eval, &res, &free, step, s.polish)?;
    }
    let mut t = Table::new(
        "optimize",
        &[
            "nu_opt",
            "phi_ms_opt",
            "theta_ms_opt",
            "tau_opt",
            "tau_opt_over_tauref",
            "gain",
            "gain_db",
            "method",
            "evaluations",
            "exhausted",
            "phi_periodicity_error",
        ],
    );
    let method = serde_json::to_value(res.method)
        .ok()
        .and_then(|v| v.as_str().map(str::to_string))
        .unwrap_or_default();
    t.push(vec![
        res.nu_opt.into(),
        res.phi_ms_opt.into(),
        res.theta_ms_opt.into(),
        res.tau_opt.into(),
        (res.tau_opt / tr).into(),
        res.gain_at_opt.into(),
        db(res.gain_at_opt).into(),
        method.as_str().into(),
        res.evaluations.into(),
        res.exhausted.into(),
        res.phi_periodicity_error.unwrap_or(f64::NAN).into(),
    ]);
    emit("optimize", s, &[t], json!({ "tau_ref": tr, "free": s.free }))?;
    Ok(())
}
