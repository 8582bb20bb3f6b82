//! Unitary steps of the protocol, applied sector by sector.

use std::f64::consts::FRAC_PI_2;

use std::collections::HashMap;
use std::sync::{Arc, Mutex};

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::basis::ModePair;
use super::spectrum::{self, counter_gauge};
use super::state::StateVector;
use crate::error::Result;

/// Nonlinear generator used to entangle modes `a` and `b`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Generator {
    /// One-axis twisting `exp(-i tau J_x^2)`.
    #[default]
    Oat,
    /// Two-axis counter-twisting `exp(-tau [(J+)^2 - (J-)^2])`.
    Tat,
}

/// Gather each conserved sector of `pair` into a contiguous slice, run `f`
/// on it together with its pair total, and scatter the result back.
pub fn transform_sectors<F>(psi: &mut StateVector, pair: ModePair, f: F)
where
    F: Fn(usize, &mut [Complex64], &mut Vec<Complex64>) + Sync,
{
    let basis = psi.basis().clone();
    let layout = basis.layout(pair);
    let amps = psi.amplitudes_mut();
    let mut buf: Vec<Complex64> = layout.perm.iter().map(|&i| amps[i as usize]).collect();

    let mut chunks = Vec::with_capacity(layout.len());
    let mut rest: &mut [Complex64] = &mut buf;
    for s in 0..layout.len() {
        let len = layout.offsets[s + 1] - layout.offsets[s];
        let (head, tail) = rest.split_at_mut(len);
        chunks.push((layout.totals[s], head));
        rest = tail;
    }
    chunks
        .into_par_iter()
        .for_each_init(Vec::new, |scratch, (n, chunk)| f(n, chunk, scratch));

    for (&i, &v) in layout.perm.iter().zip(&buf) {
        amps[i as usize] = v;
    }
}

/// `exp(-i angle m)` for every `2m + N` in `0..=2N`.
fn half_integer_phases(n: usize, angle: f64) -> Vec<Complex64> {
    (0..=2 * n)
        .map(|i| Complex64::from_polar(1.0, -angle * 0.5 * (i as f64 - n as f64)))
        .collect()
}

/// `exp(-i angle J_z)` on `pair`: a diagonal phase.
pub fn rotate_z(psi: &mut StateVector, pair: ModePair, angle: f64) {
    if angle == 0.0 {
        return;
    }
    let (p, q, _, _) = pair.modes();
    let basis = psi.basis().clone();
    let n = basis.n();
    let table = half_integer_phases(n, angle);
    for (a, occ) in psi.amplitudes_mut().iter_mut().zip(basis.states()) {
        *a *= table[n + occ[p] as usize - occ[q] as usize];
    }
}

/// `exp(-i theta (cos(phi) J_x + sin(phi) J_y))` on `pair`, evaluated as
/// `exp(-i phi J_z) exp(-i theta J_x) exp(i phi J_z)`.
pub fn rotate_in_plane(psi: &mut StateVector, pair: ModePair, theta: f64, phi: f64) {
    if theta == 0.0 {
        return;
    }
    let big_n = psi.basis().n();
    // gauge[2k - n + N] = exp(-i phi (k - n/2))
    let gauge = half_integer_phases(big_n, phi);
    let spin = half_integer_phases(big_n, theta);
    let apply = |n: usize, x: &mut [Complex64], w: &mut Vec<Complex64>| {
        let spec = spectrum::jx(n);
        let base = big_n - n;
        if phi != 0.0 {
            for (k, xk) in x.iter_mut().enumerate() {
                *xk *= gauge[base + 2 * k].conj();
            }
        }
        spec.to_eigen(x, w);
        for (j, xj) in x.iter_mut().enumerate() {
            *xj *= spin[base + 2 * j];
        }
        spec.from_eigen(x, w);
        if phi != 0.0 {
            for (k, xk) in x.iter_mut().enumerate() {
                *xk *= gauge[base + 2 * k];
            }
        }
    };
    // Sectors holding a single basis vector are common (an empty mode makes
    // every sector of that pair one-dimensional in occupation), and their
    // image only depends on the sector size and the occupied slot.
    let columns: Mutex<HashMap<(usize, usize), Arc<Vec<Complex64>>>> = Mutex::new(HashMap::new());
    transform_sectors(psi, pair, |n, x, w| {
        let mut nonzero = x.iter().enumerate().filter(|(_, v)| v.re != 0.0 || v.im != 0.0);
        let (k0, amp) = match (nonzero.next(), nonzero.next()) {
            (None, _) => return,
            (Some((k0, &amp)), None) => (k0, amp),
            _ => return apply(n, x, w),
        };
        let cached = columns.lock().unwrap().get(&(n, k0)).cloned();
        let column = cached.unwrap_or_else(|| {
            let mut e = vec![Complex64::new(0.0, 0.0); n + 1];
            e[k0] = Complex64::new(1.0, 0.0);
            apply(n, &mut e, w);
            let e = Arc::new(e);
            columns.lock().unwrap().insert((n, k0), e.clone());
            e
        });
        for (xk, ck) in x.iter_mut().zip(column.iter()) {
            *xk = amp * ck;
        }
    });
}

/// `exp(-i tau J_x^2)` on `pair`.
pub fn twist_x(psi: &mut StateVector, pair: ModePair, tau: f64) {
    if tau == 0.0 {
        return;
    }
    transform_sectors(psi, pair, |n, x, w| {
        spectrum::jx(n).apply_function(x, w, |m| Complex64::from_polar(1.0, -tau * m * m));
    });
}

/// `exp(-tau [(J+)^2 - (J-)^2])` on `pair`.
pub fn counter_twist(psi: &mut StateVector, pair: ModePair, tau: f64) {
    if tau == 0.0 {
        return;
    }
    transform_sectors(psi, pair, |n, x, w| {
        for (k, xk) in x.iter_mut().enumerate() {
            *xk *= counter_gauge(k).conj();
        }
        spectrum::counter_twist(n).apply_function(x, w, |lam| {
            Complex64::from_polar(1.0, -tau * lam)
        });
        for (k, xk) in x.iter_mut().enumerate() {
            *xk *= counter_gauge(k);
        }
    });
}

/// Entangling step on modes `a`, `b` followed by the orientation rotation
/// `exp(-i nu J_z^{ab})`.
pub fn evolve_squeezing(
    psi: &StateVector,
    generator: Generator,
    tau: f64,
    nu: f64,
) -> Result<StateVector> {
    psi.check_normalized()?;
    let mut out = psi.clone();
    match generator {
        Generator::Oat => twist_x(&mut out, ModePair::AB, tau),
        Generator::Tat => counter_twist(&mut out, ModePair::AB, tau),
    }
    rotate_z(&mut out, ModePair::AB, nu);
    out.settle_norm()?;
    Ok(out)
}

/// Beam-splitter coupling of modes `b` and `c` with strength `theta` and laser
/// phase `phi`, `exp(-i theta (cos(phi) J_x^{bc} + sin(phi) J_y^{bc}))`.
pub fn apply_mode_swap(psi: &StateVector, theta: f64, phi: f64) -> Result<StateVector> {
    psi.check_normalized()?;
    let mut out = psi.clone();
    rotate_in_plane(&mut out, ModePair::BC, theta, phi);
    out.settle_norm()?;
    Ok(out)
}

/// Interferometer phases `exp(-i theta_a J_y^{ab}) exp(-i theta_b J_y^{cd})`.
pub fn encode_phases(psi: &StateVector, theta_a: f64, theta_b: f64) -> Result<StateVector> {
    psi.check_normalized()?;
    let mut out = psi.clone();
    rotate_in_plane(&mut out, ModePair::AB, theta_a, FRAC_PI_2);
    rotate_in_plane(&mut out, ModePair::CD, theta_b, FRAC_PI_2);
    out.settle_norm()?;
    Ok(out)
}
