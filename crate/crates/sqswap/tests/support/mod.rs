//! Dense reference implementation used as a test oracle.
//!
//! Everything here is built from scratch on a separately enumerated basis:
//! bilinears `p^dag q` as dense matrices, generators assembled from them, and
//! a scaling-and-squaring Taylor exponential.

#![allow(dead_code)]

use std::collections::HashMap;

use num_complex::Complex64;

pub type C = Complex64;
pub type Dense = Vec<Vec<C>>;

pub fn c(re: f64, im: f64) -> C {
    C::new(re, im)
}

/// Fixed-N four-mode basis enumerated with mode `d` outermost, so its order
/// differs from the library's.
pub struct OracleBasis {
    pub n: usize,
    pub states: Vec<[usize; 4]>,
    pub index: HashMap<[usize; 4], usize>,
}

impl OracleBasis {
    pub fn new(n: usize) -> Self {
        let mut states = Vec::new();
        for nd in (0..=n).rev() {
            for nc in 0..=(n - nd) {
                for nb in (0..=(n - nd - nc)).rev() {
                    states.push([n - nd - nc - nb, nb, nc, nd]);
                }
            }
        }
        let index = states.iter().enumerate().map(|(i, s)| (*s, i)).collect();
        Self { n, states, index }
    }

    pub fn dim(&self) -> usize {
        self.states.len()
    }

    /// Dense `p^dag q`.
    pub fn hop(&self, p: usize, q: usize) -> Dense {
        let d = self.dim();
        let mut m = zeros(d);
        for (j, s) in self.states.iter().enumerate() {
            if p == q {
                m[j][j] = c(s[p] as f64, 0.0);
                continue;
            }
            if s[q] == 0 {
                continue;
            }
            let mut t = *s;
            t[q] -= 1;
            t[p] += 1;
            let i = self.index[&t];
            m[i][j] = c(((s[q] * (s[p] + 1)) as f64).sqrt(), 0.0);
        }
        m
    }

    pub fn jx(&self, p: usize, q: usize) -> Dense {
        let up = self.hop(p, q);
        let down = self.hop(q, p);
        lin(&[(c(0.5, 0.0), &up), (c(0.5, 0.0), &down)])
    }

    pub fn jy(&self, p: usize, q: usize) -> Dense {
        let up = self.hop(p, q);
        let down = self.hop(q, p);
        lin(&[(c(0.0, -0.5), &up), (c(0.0, 0.5), &down)])
    }

    pub fn jz(&self, p: usize, q: usize) -> Dense {
        let np = self.hop(p, p);
        let nq = self.hop(q, q);
        lin(&[(c(0.5, 0.0), &np), (c(-0.5, 0.0), &nq)])
    }

    /// Map a library amplitude vector (indexed by its own tuple list) into
    /// oracle order.
    pub fn import(&self, tuples: &[[u16; 4]], amps: &[C]) -> Vec<C> {
        let mut out = vec![c(0.0, 0.0); self.dim()];
        for (t, a) in tuples.iter().zip(amps) {
            out[self.index[&t.map(|x| x as usize)]] = *a;
        }
        out
    }

    pub fn export(&self, tuples: &[[u16; 4]], v: &[C]) -> Vec<C> {
        tuples
            .iter()
            .map(|t| v[self.index[&t.map(|x| x as usize)]])
            .collect()
    }
}

pub fn zeros(d: usize) -> Dense {
    vec![vec![c(0.0, 0.0); d]; d]
}

pub fn identity(d: usize) -> Dense {
    let mut m = zeros(d);
    for (i, row) in m.iter_mut().enumerate() {
        row[i] = c(1.0, 0.0);
    }
    m
}

pub fn lin(terms: &[(C, &Dense)]) -> Dense {
    let d = terms[0].1.len();
    let mut m = zeros(d);
    for (w, a) in terms {
        for i in 0..d {
            for j in 0..d {
                m[i][j] += *w * a[i][j];
            }
        }
    }
    m
}

pub fn matmul(a: &Dense, b: &Dense) -> Dense {
    let d = a.len();
    let mut m = zeros(d);
    for i in 0..d {
        for k in 0..d {
            let aik = a[i][k];
            if aik.norm_sqr() == 0.0 {
                continue;
            }
            for j in 0..d {
                m[i][j] += aik * b[k][j];
            }
        }
    }
    m
}

pub fn matvec(a: &Dense, v: &[C]) -> Vec<C> {
    a.iter()
        .map(|row| row.iter().zip(v).map(|(x, y)| x * y).sum())
        .collect()
}

fn norm1(a: &Dense) -> f64 {
    let d = a.len();
    (0..d)
        .map(|j| (0..d).map(|i| a[i][j].norm()).sum::<f64>())
        .fold(0.0, f64::max)
}

/// `exp(a)` by scaling and squaring with a 30-term Taylor series.
pub fn expm(a: &Dense) -> Dense {
    let d = a.len();
    let nrm = norm1(a);
    let mut s = 0u32;
    while nrm * 0.5f64.powi(s as i32) > 0.25 && s < 60 {
        s += 1;
    }
    let scale = 0.5f64.powi(s as i32);
    let scaled = lin(&[(c(scale, 0.0), a)]);
    let mut result = identity(d);
    let mut term = identity(d);
    for k in 1..=30 {
        term = matmul(&term, &scaled);
        let inv = 1.0 / k as f64;
        for row in term.iter_mut() {
            for x in row.iter_mut() {
                *x *= inv;
            }
        }
        for i in 0..d {
            for j in 0..d {
                result[i][j] += term[i][j];
            }
        }
    }
    for _ in 0..s {
        result = matmul(&result, &result);
    }
    result
}

/// `exp(-i t H)`.
pub fn unitary(h: &Dense, t: f64) -> Dense {
    expm(&lin(&[(c(0.0, -t), h)]))
}

pub fn max_diff(a: &[C], b: &[C]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).norm())
        .fold(0.0, f64::max)
}

/// Deterministic pseudo-random normalized vector (simple LCG, no deps).
pub fn random_state(dim: usize, seed: u64) -> Vec<C> {
    let mut x = seed.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
    let mut next = || {
        x = x
            .wrapping_mul(6364136223846793005)
            .wrapping_add(1442695040888963407);
        ((x >> 11) as f64) / ((1u64 << 53) as f64) - 0.5
    };
    let mut v: Vec<C> = (0..dim).map(|_| c(next(), next())).collect();
    let nrm: f64 = v.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
    v.iter_mut().for_each(|a| *a /= nrm);
    v
}
