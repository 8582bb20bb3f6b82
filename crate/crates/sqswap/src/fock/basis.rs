use std::sync::OnceLock;

use crate::error::{Error, Result};

/// Default largest atom number accepted by [`FockBasis::new`].
pub const DEFAULT_CAP: usize = 400;

/// The four bosonic modes of the two interferometers.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Mode {
    A = 0,
    B = 1,
    C = 2,
    D = 3,
}

/// Mode pairs on which collective pseudo-spin operators are defined.
///
/// The first mode of each pair carries the `+1/2` weight of `J_z`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ModePair {
    AB,
    CD,
    BC,
    AD,
}

impl ModePair {
    pub const ALL: [ModePair; 4] = [ModePair::AB, ModePair::CD, ModePair::BC, ModePair::AD];

    /// `(p, q, r, s)`: the pair `(p, q)` followed by the two spectator modes.
    pub fn modes(self) -> (usize, usize, usize, usize) {
        match self {
            ModePair::AB => (0, 1, 2, 3),
            ModePair::CD => (2, 3, 0, 1),
            ModePair::BC => (1, 2, 0, 3),
            ModePair::AD => (0, 3, 1, 2),
        }
    }

    fn slot(self) -> usize {
        self as usize
    }

    pub fn name(self) -> &'static str {
        match self {
            ModePair::AB => "ab",
            ModePair::CD => "cd",
            ModePair::BC => "bc",
            ModePair::AD => "ad",
        }
    }
}

/// Occupation tuple `(n_a, n_b, n_c, n_d)`.
pub type Occupation = [u16; 4];

/// Basis indices grouped by the conserved sectors of one mode pair.
///
/// Sector `s` holds the indices `perm[offsets[s]..offsets[s + 1]]`, ordered by
/// the occupation `k` of the first mode of the pair, `k = 0..=n`.
#[derive(Debug, Clone)]
pub struct SectorLayout {
    pub perm: Vec<u32>,
    pub offsets: Vec<usize>,
    pub totals: Vec<usize>,
}

impl SectorLayout {
    pub fn len(&self) -> usize {
        self.totals.len()
    }

    pub fn is_empty(&self) -> bool {
        self.totals.is_empty()
    }

    pub fn sector(&self, s: usize) -> &[u32] {
        &self.perm[self.offsets[s]..self.offsets[s + 1]]
    }
}

/// All four-mode occupations with a fixed total atom number, in lexicographic
/// order of `(n_a, n_b, n_c)`.
#[derive(Debug)]
pub struct FockBasis {
    n: usize,
    states: Vec<Occupation>,
    // offset_a[na] = index of the first tuple with that n_a
    offset_a: Vec<usize>,
    layouts: [OnceLock<SectorLayout>; 4],
}

/// Binomial coefficient `C(n, k)` in exact integer arithmetic.
pub fn binomial(n: u64, k: u64) -> u64 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    (0..k).fold(1u64, |acc, i| acc * (n - i) / (i + 1))
}

/// Number of tuples for `n` atoms in four modes, `C(n+3, 3)`.
pub fn basis_size(n: usize) -> usize {
    binomial(n as u64 + 3, 3) as usize
}

impl FockBasis {
    /// Build the basis for `n` atoms with the default cap.
    pub fn new(n: usize) -> Result<Self> {
        Self::with_cap(n, DEFAULT_CAP)
    }

    pub fn with_cap(n: usize, cap: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidConfig("atom number must be at least 1".into()));
        }
        if n > cap || n > u16::MAX as usize {
            return Err(Error::CapacityExceeded { n, cap });
        }
        let size = basis_size(n);
        let mut states = Vec::with_capacity(size);
        let mut offset_a = Vec::with_capacity(n + 1);
        for na in 0..=n {
            offset_a.push(states.len());
            for nb in 0..=(n - na) {
                for nc in 0..=(n - na - nb) {
                    let nd = n - na - nb - nc;
                    states.push([na as u16, nb as u16, nc as u16, nd as u16]);
                }
            }
        }
        debug_assert_eq!(states.len(), size);
        Ok(Self {
            n,
            states,
            offset_a,
            layouts: Default::default(),
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn states(&self) -> &[Occupation] {
        &self.states
    }

    pub fn state(&self, idx: usize) -> Occupation {
        self.states[idx]
    }

    /// Closed-form inverse of the enumeration order.
    pub fn index_of(&self, occ: [usize; 4]) -> Option<usize> {
        let [na, nb, nc, nd] = occ;
        if na + nb + nc + nd != self.n {
            return None;
        }
        let m = self.n - na;
        // tuples with this n_a and a smaller n_b: sum_{k<nb} (m - k + 1)
        let off_b = nb * (m + 1) - nb * nb.saturating_sub(1) / 2;
        Some(self.offset_a[na] + off_b + nc)
    }

    /// Sector decomposition for `pair`, built on first use and cached.
    pub fn layout(&self, pair: ModePair) -> &SectorLayout {
        self.layouts[pair.slot()].get_or_init(|| self.build_layout(pair))
    }

    fn build_layout(&self, pair: ModePair) -> SectorLayout {
        let (p, q, r, s) = pair.modes();
        let n = self.n;
        let mut perm = Vec::with_capacity(self.len());
        let mut offsets = vec![0];
        let mut totals = Vec::new();
        for nr in 0..=n {
            for ns in 0..=(n - nr) {
                let tot = n - nr - ns;
                for k in 0..=tot {
                    let mut occ = [0usize; 4];
                    occ[p] = k;
                    occ[q] = tot - k;
                    occ[r] = nr;
                    occ[s] = ns;
                    let idx = self.index_of(occ).expect("occupation inside the basis");
                    perm.push(idx as u32);
                }
                offsets.push(perm.len());
                totals.push(tot);
            }
        }
        SectorLayout {
            perm,
            offsets,
            totals,
        }
    }
}

impl PartialEq for FockBasis {
    fn eq(&self, other: &Self) -> bool {
        self.n == other.n
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sizes_follow_tetrahedral_numbers() {
        assert_eq!(FockBasis::new(1).unwrap().len(), 4);
        assert_eq!(FockBasis::new(2).unwrap().len(), 10);
        assert_eq!(basis_size(100), 103 * 102 * 101 / 6);
    }

    #[test]
    fn index_is_inverse_of_enumeration() {
        let basis = FockBasis::new(7).unwrap();
        for (i, occ) in basis.states().iter().enumerate() {
            let o = occ.map(|x| x as usize);
            assert_eq!(basis.index_of(o), Some(i));
        }
        assert_eq!(basis.index_of([1, 1, 1, 1]), None);
    }

    #[test]
    fn ordering_is_lexicographic() {
        let basis = FockBasis::new(5).unwrap();
        for w in basis.states().windows(2) {
            assert!(w[0][..3] < w[1][..3]);
        }
    }

    #[test]
    fn layouts_cover_every_index_once() {
        let basis = FockBasis::new(6).unwrap();
        for pair in ModePair::ALL {
            let layout = basis.layout(pair);
            let mut seen = vec![false; basis.len()];
            for &i in &layout.perm {
                assert!(!seen[i as usize]);
                seen[i as usize] = true;
            }
            assert!(seen.iter().all(|&x| x));
            let (p, q, _, _) = pair.modes();
            for s in 0..layout.len() {
                for (k, &i) in layout.sector(s).iter().enumerate() {
                    let occ = basis.state(i as usize);
                    assert_eq!(occ[p] as usize, k);
                    assert_eq!((occ[p] + occ[q]) as usize, layout.totals[s]);
                }
            }
        }
    }

    #[test]
    fn cap_is_enforced() {
        assert!(matches!(
            FockBasis::with_cap(11, 10),
            Err(Error::CapacityExceeded { n: 11, cap: 10 })
        ));
    }
}
