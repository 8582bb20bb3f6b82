use num_complex::Complex64;

use super::basis::{FockBasis, ModePair};
use super::state::StateVector;
use crate::error::Result;

/// Cartesian component of a pair pseudo-spin.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Axis {
    X,
    Y,
    Z,
}

/// Collective spin component `J_axis` of a mode pair, stored in CSR form.
///
/// With `J+ = p^dag q`: `J_x = (J+ + J-)/2`, `J_y = (J+ - J-)/(2i)` and
/// `J_z = (n_p - n_q)/2`.
#[derive(Debug, Clone)]
pub struct PairOperator {
    pub pair: ModePair,
    pub axis: Axis,
    n: usize,
    row_ptr: Vec<usize>,
    cols: Vec<u32>,
    vals: Vec<Complex64>,
}

impl PairOperator {
    pub fn new(basis: &FockBasis, pair: ModePair, axis: Axis) -> Self {
        let (p, q, _, _) = pair.modes();
        let len = basis.len();
        let mut row_ptr = Vec::with_capacity(len + 1);
        let mut cols = Vec::with_capacity(2 * len);
        let mut vals = Vec::with_capacity(2 * len);
        let (plus, minus) = match axis {
            Axis::X => (Complex64::new(0.5, 0.0), Complex64::new(0.5, 0.0)),
            Axis::Y => (Complex64::new(0.0, -0.5), Complex64::new(0.0, 0.5)),
            Axis::Z => (Complex64::new(0.0, 0.0), Complex64::new(0.0, 0.0)),
        };
        row_ptr.push(0);
        for occ in basis.states() {
            let np = occ[p] as usize;
            let nq = occ[q] as usize;
            let mut entries: Vec<(u32, Complex64)> = Vec::with_capacity(2);
            match axis {
                Axis::Z => {
                    let v = 0.5 * (np as f64 - nq as f64);
                    if v != 0.0 {
                        let i = basis.index_of(occ.map(|x| x as usize)).unwrap();
                        entries.push((i as u32, Complex64::new(v, 0.0)));
                    }
                }
                Axis::X | Axis::Y => {
                    if np >= 1 {
                        // <i| J+ |j> with j one atom lower in p
                        let mut o = occ.map(|x| x as usize);
                        o[p] -= 1;
                        o[q] += 1;
                        let j = basis.index_of(o).unwrap();
                        let amp = ((np * (nq + 1)) as f64).sqrt();
                        entries.push((j as u32, plus * amp));
                    }
                    if nq >= 1 {
                        let mut o = occ.map(|x| x as usize);
                        o[p] += 1;
                        o[q] -= 1;
                        let j = basis.index_of(o).unwrap();
                        let amp = (((np + 1) * nq) as f64).sqrt();
                        entries.push((j as u32, minus * amp));
                    }
                }
            }
            entries.sort_by_key(|e| e.0);
            for (c, v) in entries {
                cols.push(c);
                vals.push(v);
            }
            row_ptr.push(cols.len());
        }
        Self {
            pair,
            axis,
            n: basis.n(),
            row_ptr,
            cols,
            vals,
        }
    }

    /// Atom number of the basis this operator was built on.
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn dim(&self) -> usize {
        self.row_ptr.len() - 1
    }

    pub fn nnz(&self) -> usize {
        self.vals.len()
    }

    pub fn apply_into(&self, x: &[Complex64], y: &mut [Complex64]) {
        for (row, out) in y.iter_mut().enumerate() {
            let mut acc = Complex64::new(0.0, 0.0);
            for k in self.row_ptr[row]..self.row_ptr[row + 1] {
                acc += self.vals[k] * x[self.cols[k] as usize];
            }
            *out = acc;
        }
    }

    pub fn apply(&self, x: &[Complex64]) -> Vec<Complex64> {
        let mut y = vec![Complex64::new(0.0, 0.0); x.len()];
        self.apply_into(x, &mut y);
        y
    }

    pub fn apply_state(&self, psi: &StateVector) -> Result<Vec<Complex64>> {
        if psi.basis().n() != self.n {
            return Err(crate::error::Error::BasisMismatch {
                left: psi.basis().n(),
                right: self.n,
            });
        }
        Ok(self.apply(psi.amplitudes()))
    }

    /// Dense copy, row-major, intended for small bases in tests.
    pub fn to_dense(&self) -> Vec<Vec<Complex64>> {
        let d = self.dim();
        let mut m = vec![vec![Complex64::new(0.0, 0.0); d]; d];
        for (row, r) in m.iter_mut().enumerate() {
            for k in self.row_ptr[row]..self.row_ptr[row + 1] {
                r[self.cols[k] as usize] += self.vals[k];
            }
        }
        m
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn mat_mul(a: &[Vec<Complex64>], b: &[Vec<Complex64>]) -> Vec<Vec<Complex64>> {
        let d = a.len();
        let mut c = vec![vec![Complex64::new(0.0, 0.0); d]; d];
        for i in 0..d {
            for k in 0..d {
                if a[i][k] == Complex64::new(0.0, 0.0) {
                    continue;
                }
                for j in 0..d {
                    c[i][j] += a[i][k] * b[k][j];
                }
            }
        }
        c
    }

    #[test]
    fn single_atom_actions() {
        let basis = FockBasis::new(1).unwrap();
        let ia = basis.index_of([1, 0, 0, 0]).unwrap();
        let ib = basis.index_of([0, 1, 0, 0]).unwrap();
        let mut e = vec![Complex64::new(0.0, 0.0); basis.len()];
        e[ia] = Complex64::new(1.0, 0.0);
        let z = PairOperator::new(&basis, ModePair::AB, Axis::Z).apply(&e);
        assert_eq!(z[ia], Complex64::new(0.5, 0.0));
        let x = PairOperator::new(&basis, ModePair::AB, Axis::X).apply(&e);
        assert_eq!(x[ib], Complex64::new(0.5, 0.0));
        assert_eq!(x[ia], Complex64::new(0.0, 0.0));
    }

    #[test]
    fn operators_are_hermitian() {
        let basis = FockBasis::new(4).unwrap();
        for pair in ModePair::ALL {
            for axis in [Axis::X, Axis::Y, Axis::Z] {
                let m = PairOperator::new(&basis, pair, axis).to_dense();
                for i in 0..m.len() {
                    for j in 0..m.len() {
                        assert_eq!(m[i][j], m[j][i].conj());
                    }
                }
            }
        }
    }

    #[test]
    fn angular_momentum_algebra() {
        let basis = FockBasis::new(2).unwrap();
        for pair in ModePair::ALL {
            let x = PairOperator::new(&basis, pair, Axis::X).to_dense();
            let y = PairOperator::new(&basis, pair, Axis::Y).to_dense();
            let z = PairOperator::new(&basis, pair, Axis::Z).to_dense();
            let i = Complex64::new(0.0, 1.0);
            for (a, b, c) in [(&x, &y, &z), (&y, &z, &x), (&z, &x, &y)] {
                let ab = mat_mul(a, b);
                let ba = mat_mul(b, a);
                for r in 0..ab.len() {
                    for s in 0..ab.len() {
                        let comm = ab[r][s] - ba[r][s];
                        assert!((comm - i * c[r][s]).norm() < 1e-14);
                    }
                }
            }
        }
    }
}
