use std::io::{Read, Write};
use std::sync::Arc;

use num_complex::Complex64;

use super::basis::{binomial, FockBasis};
use crate::error::{Error, Result};

/// Silent renormalization threshold on `| ||psi|| - 1 |`.
pub const NORM_SILENT: f64 = 1e-10;
/// Deviation above which a state is rejected.
pub const NORM_REJECT: f64 = 1e-8;

const MAGIC: &[u8; 5] = b"SQSW1";

/// Complex amplitudes over a shared [`FockBasis`].
#[derive(Debug, Clone)]
pub struct StateVector {
    basis: Arc<FockBasis>,
    amps: Vec<Complex64>,
}

impl StateVector {
    pub fn from_amplitudes(basis: Arc<FockBasis>, amps: Vec<Complex64>) -> Result<Self> {
        if amps.len() != basis.len() {
            return Err(Error::InvalidConfig(format!(
                "amplitude vector has length {} but the basis has {} states",
                amps.len(),
                basis.len()
            )));
        }
        Ok(Self { basis, amps })
    }

    /// Binomial superposition of all atoms in mode `a` or mode `d`,
    /// `sum_m sqrt(C(N,m)) / 2^(N/2) |N-m, 0, 0, m>`.
    pub fn initial(basis: Arc<FockBasis>) -> Self {
        let n = basis.n();
        let mut amps = vec![Complex64::new(0.0, 0.0); basis.len()];
        let log_norm = -(n as f64) * std::f64::consts::LN_2 / 2.0;
        for m in 0..=n {
            let idx = basis.index_of([n - m, 0, 0, m]).expect("edge tuple");
            amps[idx] = Complex64::new((0.5 * ln_binomial(n, m) + log_norm).exp(), 0.0);
        }
        Self { basis, amps }
    }

    pub fn basis(&self) -> &Arc<FockBasis> {
        &self.basis
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amps
    }

    pub fn amplitudes_mut(&mut self) -> &mut [Complex64] {
        &mut self.amps
    }

    pub fn into_amplitudes(self) -> Vec<Complex64> {
        self.amps
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum()
    }

    pub fn same_basis(&self, other: &FockBasis) -> Result<()> {
        if self.basis.n() != other.n() {
            return Err(Error::BasisMismatch {
                left: self.basis.n(),
                right: other.n(),
            });
        }
        Ok(())
    }

    /// Reject inputs whose norm is off by more than [`NORM_REJECT`].
    pub fn check_normalized(&self) -> Result<()> {
        let deviation = (self.norm_sqr().sqrt() - 1.0).abs();
        if deviation > NORM_REJECT {
            return Err(Error::NonNormalizedInput { deviation });
        }
        Ok(())
    }

    /// Apply the norm policy after a unitary step: tiny drift is absorbed,
    /// moderate drift is logged and absorbed, anything larger is an error.
    pub fn settle_norm(&mut self) -> Result<()> {
        let norm = self.norm_sqr().sqrt();
        let deviation = (norm - 1.0).abs();
        if deviation > NORM_REJECT {
            return Err(Error::NonNormalizedInput { deviation });
        }
        if deviation > NORM_SILENT {
            log::warn!("renormalizing state after norm drift {deviation:e}");
        }
        if deviation > 0.0 {
            let inv = 1.0 / norm;
            self.amps.iter_mut().for_each(|a| *a *= inv);
        }
        Ok(())
    }

    /// `P(tuple) = |amplitude|^2` in basis order.
    pub fn outcome_distribution(&self) -> Vec<f64> {
        self.amps.iter().map(|a| a.norm_sqr()).collect()
    }

    /// Marginal distribution of the occupation of one mode.
    pub fn mode_marginal(&self, mode: usize) -> Vec<f64> {
        let mut out = vec![0.0; self.basis.n() + 1];
        for (occ, a) in self.basis.states().iter().zip(&self.amps) {
            out[occ[mode] as usize] += a.norm_sqr();
        }
        out
    }

    /// Marginal distribution of the summed occupation of two modes.
    pub fn pair_total_marginal(&self, p: usize, q: usize) -> Vec<f64> {
        let mut out = vec![0.0; self.basis.n() + 1];
        for (occ, a) in self.basis.states().iter().zip(&self.amps) {
            out[(occ[p] + occ[q]) as usize] += a.norm_sqr();
        }
        out
    }

    pub fn inner(&self, other: &StateVector) -> Result<Complex64> {
        self.same_basis(&other.basis)?;
        Ok(self
            .amps
            .iter()
            .zip(&other.amps)
            .map(|(a, b)| a.conj() * b)
            .sum())
    }

    /// Binary dump: magic, `N` as u64 LE, basis size as u64 LE, then
    /// `(re, im)` pairs as f64 LE in basis order.
    pub fn write_to<W: Write>(&self, mut w: W) -> Result<()> {
        w.write_all(MAGIC)?;
        w.write_all(&(self.basis.n() as u64).to_le_bytes())?;
        w.write_all(&(self.basis.len() as u64).to_le_bytes())?;
        for a in &self.amps {
            w.write_all(&a.re.to_le_bytes())?;
            w.write_all(&a.im.to_le_bytes())?;
        }
        Ok(())
    }

    pub fn read_from<R: Read>(mut r: R, basis: Arc<FockBasis>) -> Result<Self> {
        let mut magic = [0u8; 5];
        r.read_exact(&mut magic)?;
        if &magic != MAGIC {
            return Err(Error::InvalidConfig("not a state dump".into()));
        }
        let mut word = [0u8; 8];
        r.read_exact(&mut word)?;
        let n = u64::from_le_bytes(word) as usize;
        r.read_exact(&mut word)?;
        let size = u64::from_le_bytes(word) as usize;
        if n != basis.n() || size != basis.len() {
            return Err(Error::BasisMismatch {
                left: n,
                right: basis.n(),
            });
        }
        let mut amps = Vec::with_capacity(size);
        for _ in 0..size {
            r.read_exact(&mut word)?;
            let re = f64::from_le_bytes(word);
            r.read_exact(&mut word)?;
            let im = f64::from_le_bytes(word);
            amps.push(Complex64::new(re, im));
        }
        Ok(Self { basis, amps })
    }
}

/// `ln C(n, k)`, exact through `u64` when it fits and by log-gamma sums otherwise.
pub fn ln_binomial(n: usize, k: usize) -> f64 {
    if n <= 60 {
        return (binomial(n as u64, k as u64) as f64).ln();
    }
    let k = k.min(n - k);
    (0..k)
        .map(|i| ((n - i) as f64).ln() - ((i + 1) as f64).ln())
        .sum()
}
