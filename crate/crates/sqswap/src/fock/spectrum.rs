//! Per-sector eigendecompositions of the pair generators.
//!
//! A sector of a mode pair with `n` atoms is spanned by `|k, n-k>`, `k = 0..=n`,
//! and every generator used by the protocol acts on it as a small real
//! symmetric matrix. Its eigenvectors are computed once per `n` and shared.

use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;

/// Real orthogonal eigenbasis `V` of a sector generator.
#[derive(Debug)]
pub struct SectorSpectrum {
    pub dim: usize,
    pub values: Vec<f64>,
    /// `v[k * dim + j] = V[k][j]`
    v: Vec<f64>,
    /// `vt[j * dim + k] = V[k][j]`
    vt: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
enum Kind {
    Jx,
    Counter,
}

fn cache() -> &'static Mutex<HashMap<(Kind, usize), Arc<SectorSpectrum>>> {
    static CACHE: OnceLock<Mutex<HashMap<(Kind, usize), Arc<SectorSpectrum>>>> = OnceLock::new();
    CACHE.get_or_init(|| Mutex::new(HashMap::new()))
}

fn cached(kind: Kind, n: usize, build: impl FnOnce() -> SectorSpectrum) -> Arc<SectorSpectrum> {
    if let Some(s) = cache().lock().unwrap().get(&(kind, n)) {
        return s.clone();
    }
    let s = Arc::new(build());
    cache()
        .lock()
        .unwrap()
        .entry((kind, n))
        .or_insert(s)
        .clone()
}

/// Spectrum of `J_x` on `n` atoms; eigenvalues are exactly `-n/2, ..., n/2`.
pub fn jx(n: usize) -> Arc<SectorSpectrum> {
    cached(Kind::Jx, n, || {
        let dim = n + 1;
        let mut m = DMatrix::<f64>::zeros(dim, dim);
        for k in 0..n {
            let e = 0.5 * (((k + 1) * (n - k)) as f64).sqrt();
            m[(k + 1, k)] = e;
            m[(k, k + 1)] = e;
        }
        let mut s = SectorSpectrum::from_matrix(m);
        // the spectrum is known in closed form; drop the round-off
        for (j, val) in s.values.iter_mut().enumerate() {
            *val = j as f64 - 0.5 * n as f64;
        }
        s
    })
}

/// Spectrum of the counter-twisting generator conjugated to a real matrix.
///
/// `H = -i[(J+)^2 - (J-)^2]` satisfies `D^dag H D = R` with
/// `D = diag(exp(i pi k / 4))` and `R` real symmetric, coupling `k` and `k+2`
/// with `-sqrt((k+1)(n-k)(k+2)(n-k-1))`.
pub fn counter_twist(n: usize) -> Arc<SectorSpectrum> {
    cached(Kind::Counter, n, || {
        let dim = n + 1;
        let mut m = DMatrix::<f64>::zeros(dim, dim);
        for k in 0..n.saturating_sub(1) {
            let c = (((k + 1) * (n - k)) as f64).sqrt() * (((k + 2) * (n - k - 1)) as f64).sqrt();
            m[(k + 2, k)] = -c;
            m[(k, k + 2)] = -c;
        }
        SectorSpectrum::from_matrix(m)
    })
}

/// Phase `exp(i pi k / 4)` of the counter-twisting gauge.
pub fn counter_gauge(k: usize) -> Complex64 {
    Complex64::from_polar(1.0, std::f64::consts::FRAC_PI_4 * (k % 8) as f64)
}

impl SectorSpectrum {
    fn from_matrix(m: DMatrix<f64>) -> Self {
        let dim = m.nrows();
        let eig = SymmetricEigen::new(m);
        let mut order: Vec<usize> = (0..dim).collect();
        order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
        let mut v = vec![0.0; dim * dim];
        let mut vt = vec![0.0; dim * dim];
        let mut values = Vec::with_capacity(dim);
        for (j, &src) in order.iter().enumerate() {
            values.push(eig.eigenvalues[src]);
            for k in 0..dim {
                let x = eig.eigenvectors[(k, src)];
                v[k * dim + j] = x;
                vt[j * dim + k] = x;
            }
        }
        Self { dim, values, v, vt }
    }

    /// `x <- V^T x`, skipping zero input entries.
    pub fn to_eigen(&self, x: &mut [Complex64], w: &mut Vec<Complex64>) {
        Self::product(&self.v, self.dim, x, w);
    }

    /// `x <- V x`, skipping zero input entries.
    pub fn from_eigen(&self, x: &mut [Complex64], w: &mut Vec<Complex64>) {
        Self::product(&self.vt, self.dim, x, w);
    }

    /// `x <- M^T x` where `rows` holds `M` row-major.
    fn product(rows: &[f64], d: usize, x: &mut [Complex64], w: &mut Vec<Complex64>) {
        w.clear();
        w.resize(d, Complex64::new(0.0, 0.0));
        for (i, &xi) in x.iter().enumerate() {
            if xi.re == 0.0 && xi.im == 0.0 {
                continue;
            }
            for (acc, &r) in w.iter_mut().zip(&rows[i * d..(i + 1) * d]) {
                *acc += xi * r;
            }
        }
        x.copy_from_slice(w);
    }

    /// `x <- V diag(phase(lambda_j)) V^T x`.
    pub fn apply_function(
        &self,
        x: &mut [Complex64],
        w: &mut Vec<Complex64>,
        phase: impl Fn(f64) -> Complex64,
    ) {
        self.to_eigen(x, w);
        for (xj, &lam) in x.iter_mut().zip(&self.values) {
            *xj *= phase(lam);
        }
        self.from_eigen(x, w);
    }

    /// Eigenvectors as the columns of a dense matrix.
    pub fn matrix(&self) -> DMatrix<f64> {
        DMatrix::from_row_slice(self.dim, self.dim, &self.v)
    }

    pub fn vector(&self, j: usize) -> Vec<f64> {
        (0..self.dim).map(|k| self.v[k * self.dim + j]).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn jx_eigenpairs_are_consistent() {
        for n in [1usize, 2, 5, 12] {
            let s = jx(n);
            for j in 0..=n {
                let v = s.vector(j);
                // residual of J_x v - m v
                for k in 0..=n {
                    let mut acc = -s.values[j] * v[k];
                    if k > 0 {
                        acc += 0.5 * ((k * (n - k + 1)) as f64).sqrt() * v[k - 1];
                    }
                    if k < n {
                        acc += 0.5 * (((k + 1) * (n - k)) as f64).sqrt() * v[k + 1];
                    }
                    assert!(acc.abs() < 1e-12, "n={n} j={j} k={k} residual {acc}");
                }
            }
        }
    }

    #[test]
    fn transforms_are_inverse() {
        let s = counter_twist(9);
        let mut x: Vec<Complex64> = (0..10)
            .map(|k| Complex64::new(k as f64 * 0.1, 1.0 - k as f64 * 0.05))
            .collect();
        let orig = x.clone();
        let mut w = Vec::new();
        s.to_eigen(&mut x, &mut w);
        s.from_eigen(&mut x, &mut w);
        for (a, b) in x.iter().zip(&orig) {
            assert!((a - b).norm() < 1e-13);
        }
    }
}
