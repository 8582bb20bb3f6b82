use num_complex::Complex64;

use super::operator::PairOperator;
use super::state::StateVector;
use crate::error::{Error, Result};

/// First moments and symmetrized covariances of a list of Hermitian operators.
#[derive(Debug, Clone, PartialEq)]
pub struct MomentTable {
    pub means: Vec<f64>,
    /// `cov[i][j] = Re<O_i psi | O_j psi> - <O_i><O_j>`
    pub cov: Vec<Vec<f64>>,
}

impl MomentTable {
    pub fn variance(&self, i: usize) -> f64 {
        self.cov[i][i]
    }
}

fn dot(a: &[Complex64], b: &[Complex64]) -> Complex64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

/// Evaluate all first moments and pairwise covariances of `ops` on `psi`.
pub fn moments(psi: &StateVector, ops: &[&PairOperator]) -> Result<MomentTable> {
    let images: Vec<Vec<Complex64>> = ops
        .iter()
        .map(|op| op.apply_state(psi))
        .collect::<Result<_>>()?;
    let amps = psi.amplitudes();
    let means: Vec<f64> = images.iter().map(|img| dot(amps, img).re).collect();
    let k = ops.len();
    let mut cov = vec![vec![0.0; k]; k];
    for i in 0..k {
        for j in i..k {
            let c = dot(&images[i], &images[j]).re - means[i] * means[j];
            cov[i][j] = c;
            cov[j][i] = c;
        }
    }
    Ok(MomentTable { means, cov })
}

/// Check that a probability table is normalized within `tol`.
pub fn check_distribution(p: &[f64], tol: f64) -> Result<()> {
    let total: f64 = p.iter().sum();
    if (total - 1.0).abs() > tol || p.iter().any(|&x| x < 0.0 || !x.is_finite()) {
        return Err(Error::NonNormalizedDistribution { total });
    }
    Ok(())
}
