//! Monte Carlo measurements and method-of-moments phase estimation.
//!
//! Both interferometer rotations conserve the atom number of their own pair,
//! so the input state splits into blocks labelled by the number `M` of atoms
//! in modes `a, b`. Inside a block the output amplitudes form an
//! `(M+1) x (N-M+1)` matrix `R_A(theta_A) Psi_M R_B(theta_B)^T`, and each
//! rotation is diagonal in the eigenframe of the pair generator. The
//! [`PhaseEncoder`] keeps every block in that frame so a shot at fresh phases
//! costs two small real-complex matrix products.

use std::f64::consts::{FRAC_PI_2, PI};

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fock::{spectrum, StateVector};
use crate::protocol::{prepare_input, InputMoments, Observables, ProtocolConfig, XA, XB, ZA, ZB};

/// Shots handled by one random stream.
const CHUNK: usize = 2048;

/// Noise and experiment settings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct NoiseConfig {
    /// Width of the common phase noise (rad).
    pub sigma_pn: f64,
    /// Half-width of the box average of the gain (rad).
    pub lambda_pn: f64,
    /// Local-oscillator decoherence rate.
    pub gamma_lo: f64,
    /// Ramsey interrogation time.
    pub t: f64,
    /// Total interrogation time.
    pub t_tot: f64,
    pub omega_0: f64,
    pub omega_a: f64,
    pub omega_b: f64,
    pub shots: usize,
    pub seed: u64,
}

impl Default for NoiseConfig {
    fn default() -> Self {
        Self {
            sigma_pn: 0.0,
            lambda_pn: 0.0,
            gamma_lo: 0.0,
            t: 1.0,
            t_tot: 1000.0,
            omega_0: 1.0,
            omega_a: 1.0,
            omega_b: 1.0,
            shots: 100_000,
            seed: 42,
        }
    }
}

impl NoiseConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.sigma_pn >= 0.0) {
            return Err(Error::InvalidConfig("sigma_pn must be non-negative".into()));
        }
        if self.shots == 0 {
            return Err(Error::InvalidConfig("at least one shot is required".into()));
        }
        if !(self.t > 0.0 && self.t_tot > 0.0) {
            return Err(Error::InvalidConfig("T and T_tot must be positive".into()));
        }
        if !(self.gamma_lo >= 0.0) {
            return Err(Error::InvalidConfig("gamma_LO must be non-negative".into()));
        }
        Ok(())
    }
}

/// One simulated shot.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EstimateRecord {
    /// `(N_a, N_b, N_c, N_d)`
    pub outcome: [u32; 4],
    pub mu_a: f64,
    pub mu_b: f64,
    pub theta_est_a: f64,
    pub theta_est_b: f64,
}

impl EstimateRecord {
    fn new(outcome: [u32; 4], moments: &InputMoments) -> Result<Self> {
        let mu_a = 0.5 * (outcome[0] as f64 - outcome[1] as f64);
        let mu_b = 0.5 * (outcome[2] as f64 - outcome[3] as f64);
        let (theta_est_a, theta_est_b) = invert_phases(mu_a, mu_b, moments)?;
        Ok(Self { outcome, mu_a, mu_b, theta_est_a, theta_est_b })
    }
}

/// Stream generator for chunk `index` of a run seeded with `seed`.
pub fn stream_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

fn cumulative(p: &[f64]) -> Vec<f64> {
    let mut acc = 0.0;
    p.iter()
        .map(|&x| {
            acc += x;
            acc
        })
        .collect()
}

fn draw(cdf: &[f64], u: f64) -> usize {
    let total = *cdf.last().unwrap_or(&0.0);
    let target = u * total;
    cdf.partition_point(|&c| c <= target).min(cdf.len().saturating_sub(1))
}

/// I.i.d. draws of outcome indices from a probability table by inversion
/// of its cumulative sum.
pub fn sample_shots(distribution: &[f64], shots: usize, seed: u64) -> Result<Vec<usize>> {
    crate::fock::moments::check_distribution(distribution, 1e-8)?;
    let cdf = cumulative(distribution);
    let chunks: Vec<Vec<usize>> = (0..shots.div_ceil(CHUNK))
        .into_par_iter()
        .map(|c| {
            let mut rng = stream_rng(seed, c as u64);
            let len = CHUNK.min(shots - c * CHUNK);
            (0..len).map(|_| draw(&cdf, rng.random::<f64>())).collect()
        })
        .collect();
    Ok(chunks.concat())
}

/// Solve `mu = <J_z> cos(theta) - <J_x> sin(theta)` on one interferometer,
/// keeping the root in `(0, pi)` nearest to mid-fringe. Values beyond the
/// fringe amplitude are clamped onto it.
pub fn invert_fringe(mu: f64, z: f64, x: f64) -> Result<f64> {
    let amplitude = z.hypot(x);
    if amplitude < 1e-12 {
        return Err(Error::ZeroFringeAmplitude { amplitude });
    }
    // mu = A cos(theta + beta)
    let beta = x.atan2(z);
    let a = (mu / amplitude).clamp(-1.0, 1.0).acos();
    let best = [a - beta, -a - beta]
        .into_iter()
        .map(|t| (t + FRAC_PI_2).rem_euclid(2.0 * PI) - FRAC_PI_2)
        .min_by(|p, q| (p - FRAC_PI_2).abs().total_cmp(&(q - FRAC_PI_2).abs()))
        .unwrap();
    Ok(best.clamp(1e-12, PI - 1e-12))
}

/// Method-of-moments estimates of both phases from the measured
/// half-differences.
pub fn invert_phases(mu_a: f64, mu_b: f64, moments: &InputMoments) -> Result<(f64, f64)> {
    Ok((
        invert_fringe(mu_a, moments.mean(ZA), moments.mean(XA))?,
        invert_fringe(mu_b, moments.mean(ZB), moments.mean(XB))?,
    ))
}

/// Input state of one pair-total block, held in the eigenframes of the two
/// interferometer generators.
#[derive(Debug, Clone)]
struct Block {
    /// atoms in modes `a, b`
    m: usize,
    va: DMatrix<f64>,
    vb: DMatrix<f64>,
    re: DMatrix<f64>,
    im: DMatrix<f64>,
}

/// Output-distribution engine for arbitrary interferometer phases.
#[derive(Debug, Clone)]
pub struct PhaseEncoder {
    n: usize,
    blocks: Vec<Block>,
    block_cdf: Vec<f64>,
}

fn spin_phases(n: usize, theta: f64) -> Vec<Complex64> {
    (0..=n)
        .map(|j| Complex64::from_polar(1.0, -theta * (j as f64 - 0.5 * n as f64)))
        .collect()
}

impl PhaseEncoder {
    pub fn new(input: &StateVector) -> Result<Self> {
        input.check_normalized()?;
        let basis = input.basis();
        let n = basis.n();
        let zero = Complex64::new(0.0, 0.0);
        let mut psi: Vec<DMatrix<Complex64>> =
            (0..=n).map(|m| DMatrix::from_element(m + 1, n - m + 1, zero)).collect();
        for (amp, occ) in input.amplitudes().iter().zip(basis.states()) {
            let m = (occ[0] + occ[1]) as usize;
            psi[m][(occ[0] as usize, occ[2] as usize)] = *amp;
        }
        let mut blocks = Vec::new();
        let mut weights = Vec::new();
        for (m, p) in psi.into_iter().enumerate() {
            let weight = p.iter().map(|z| z.norm_sqr()).sum::<f64>();
            if weight == 0.0 {
                continue;
            }
            let k = n - m;
            // Psi' = V_A^T G_A^dag Psi conj(G_B) V_B with G = diag(e^{-i pi/2 (j - n/2)})
            let ga = spin_phases(m, FRAC_PI_2);
            let gb = spin_phases(k, FRAC_PI_2);
            let scaled = DMatrix::from_fn(m + 1, k + 1, |i, j| p[(i, j)] * ga[i].conj() * gb[j].conj());
            let va = spectrum::jx(m).matrix();
            let vb = spectrum::jx(k).matrix();
            let re = DMatrix::from_fn(m + 1, k + 1, |i, j| scaled[(i, j)].re);
            let im = DMatrix::from_fn(m + 1, k + 1, |i, j| scaled[(i, j)].im);
            let re2 = va.transpose() * &re * &vb;
            let im2 = va.transpose() * &im * &vb;
            blocks.push(Block { m, va, vb, re: re2, im: im2 });
            weights.push(weight);
        }
        Ok(Self { n, block_cdf: cumulative(&weights), blocks })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Row-major `|amplitude|^2` table over `(N_a, N_c)` of one block.
    fn block_probabilities(&self, b: &Block, theta_a: f64, theta_b: f64) -> DMatrix<f64> {
        let ea = spin_phases(b.m, theta_a);
        let eb = spin_phases(self.n - b.m, theta_b);
        let (rows, cols) = b.re.shape();
        let mut wr = DMatrix::zeros(rows, cols);
        let mut wi = DMatrix::zeros(rows, cols);
        for j in 0..cols {
            for i in 0..rows {
                let z = Complex64::new(b.re[(i, j)], b.im[(i, j)]) * ea[i] * eb[j];
                wr[(i, j)] = z.re;
                wi[(i, j)] = z.im;
            }
        }
        let vbt = b.vb.transpose();
        let or = &b.va * wr * &vbt;
        let oi = &b.va * wi * &vbt;
        or.zip_map(&oi, |x, y| x * x + y * y)
    }

    /// Full outcome distribution indexed like the Fock basis.
    pub fn distribution(&self, input_basis: &crate::fock::FockBasis, theta_a: f64, theta_b: f64) -> Vec<f64> {
        let mut p = vec![0.0; input_basis.len()];
        for b in &self.blocks {
            let probs = self.block_probabilities(b, theta_a, theta_b);
            for na in 0..=b.m {
                for nc in 0..=(self.n - b.m) {
                    let occ = [na, b.m - na, nc, self.n - b.m - nc];
                    if let Some(idx) = input_basis.index_of(occ) {
                        p[idx] = probs[(na, nc)];
                    }
                }
            }
        }
        p
    }

    /// One outcome at the given phases.
    pub fn sample(&self, theta_a: f64, theta_b: f64, rng: &mut impl Rng) -> [u32; 4] {
        let b = &self.blocks[draw(&self.block_cdf, rng.random::<f64>())];
        let probs = self.block_probabilities(b, theta_a, theta_b);
        let k = self.n - b.m;
        // probabilities are column-major in nalgebra: index = na + (m+1) nc
        let cdf = cumulative(probs.as_slice());
        let idx = draw(&cdf, rng.random::<f64>());
        let (na, nc) = (idx % (b.m + 1), idx / (b.m + 1));
        [na as u32, (b.m - na) as u32, nc as u32, (k - nc) as u32]
    }

    /// Sampler for many shots at one fixed pair of phases.
    pub fn fixed(&self, theta_a: f64, theta_b: f64) -> FixedSampler {
        let mut outcomes = Vec::new();
        let mut probs = Vec::new();
        for b in &self.blocks {
            let table = self.block_probabilities(b, theta_a, theta_b);
            let k = self.n - b.m;
            for nc in 0..=k {
                for na in 0..=b.m {
                    outcomes.push([na as u32, (b.m - na) as u32, nc as u32, (k - nc) as u32]);
                    probs.push(table[(na, nc)]);
                }
            }
        }
        FixedSampler { cdf: cumulative(&probs), outcomes }
    }
}

/// Precomputed cumulative table for repeated draws at fixed phases.
#[derive(Debug, Clone)]
pub struct FixedSampler {
    cdf: Vec<f64>,
    outcomes: Vec<[u32; 4]>,
}

impl FixedSampler {
    pub fn sample(&self, rng: &mut impl Rng) -> [u32; 4] {
        self.outcomes[draw(&self.cdf, rng.random::<f64>())]
    }
}

/// Sample statistics of paired estimates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PairStats {
    pub shots: usize,
    pub mean_a: f64,
    pub mean_b: f64,
    pub var_a: f64,
    pub var_b: f64,
    pub cov_ab: f64,
    /// Sample variance of `theta_est_A - theta_est_B`.
    pub var_diff: f64,
    /// Sample variance of `theta_est_A + theta_est_B`.
    pub var_sum: f64,
}

impl PairStats {
    pub fn from_pairs(pairs: impl Iterator<Item = (f64, f64)> + Clone) -> Self {
        let mut n = 0usize;
        let (mut sa, mut sb) = (0.0, 0.0);
        for (a, b) in pairs.clone() {
            n += 1;
            sa += a;
            sb += b;
        }
        let nf = n as f64;
        let (ma, mb) = (sa / nf, sb / nf);
        let (mut vaa, mut vbb, mut vab) = (0.0, 0.0, 0.0);
        for (a, b) in pairs {
            vaa += (a - ma) * (a - ma);
            vbb += (b - mb) * (b - mb);
            vab += (a - ma) * (b - mb);
        }
        let d = (nf - 1.0).max(1.0);
        let (var_a, var_b, cov_ab) = (vaa / d, vbb / d, vab / d);
        Self {
            shots: n,
            mean_a: ma,
            mean_b: mb,
            var_a,
            var_b,
            cov_ab,
            var_diff: var_a + var_b - 2.0 * cov_ab,
            var_sum: var_a + var_b + 2.0 * cov_ab,
        }
    }
}

/// Joint histogram of `(theta_est_A, theta_est_B)` on a square window.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Histogram2D {
    pub bins: usize,
    pub lo_a: f64,
    pub lo_b: f64,
    pub width: f64,
    /// `counts[i * bins + j]` for bin `i` along A and `j` along B.
    pub counts: Vec<u64>,
    pub outside: u64,
}

impl Histogram2D {
    pub fn build(records: &[EstimateRecord], stats: &PairStats, bins: usize) -> Self {
        let spread = stats.var_a.max(stats.var_b).sqrt();
        let half = if spread > 0.0 { 5.0 * spread } else { 1e-3 };
        let width = 2.0 * half / bins as f64;
        let (lo_a, lo_b) = (stats.mean_a - half, stats.mean_b - half);
        let mut counts = vec![0u64; bins * bins];
        let mut outside = 0;
        for r in records {
            let i = ((r.theta_est_a - lo_a) / width).floor();
            let j = ((r.theta_est_b - lo_b) / width).floor();
            if i >= 0.0 && j >= 0.0 && (i as usize) < bins && (j as usize) < bins {
                counts[i as usize * bins + j as usize] += 1;
            } else {
                outside += 1;
            }
        }
        Self { bins, lo_a, lo_b, width, counts, outside }
    }

    /// Bin center along A and along B.
    pub fn center(&self, i: usize, j: usize) -> (f64, f64) {
        (
            self.lo_a + (i as f64 + 0.5) * self.width,
            self.lo_b + (j as f64 + 0.5) * self.width,
        )
    }
}

/// Outcome of a differential-phase run.
#[derive(Debug, Clone)]
pub struct DifferentialResult {
    pub stats: PairStats,
    pub histogram: Histogram2D,
    pub records: Vec<EstimateRecord>,
}

/// Everything a run needs from the prepared state.
pub struct Experiment {
    pub encoder: PhaseEncoder,
    pub moments: InputMoments,
}

impl Experiment {
    pub fn prepare(protocol: &ProtocolConfig) -> Result<Self> {
        let input = prepare_input(protocol)?;
        Self::from_input(&input)
    }

    pub fn from_input(input: &StateVector) -> Result<Self> {
        let moments = Observables::new(input.basis()).measure(input)?;
        Ok(Self { encoder: PhaseEncoder::new(input)?, moments })
    }

    /// `shots` records at phases `(phi_a + x, phi_b + x)` with a common
    /// offset `x ~ Normal(0, sigma^2)` per shot.
    pub fn run_common_noise(
        &self,
        phi_a: f64,
        phi_b: f64,
        sigma: f64,
        shots: usize,
        seed: u64,
    ) -> Result<Vec<EstimateRecord>> {
        let noise = Normal::new(0.0, sigma)
            .map_err(|e| Error::InvalidConfig(format!("noise width: {e}")))?;
        let fixed = (sigma == 0.0).then(|| self.encoder.fixed(phi_a, phi_b));
        let chunks: Vec<Result<Vec<EstimateRecord>>> = (0..shots.div_ceil(CHUNK))
            .into_par_iter()
            .map(|c| {
                let mut rng = stream_rng(seed, c as u64);
                let len = CHUNK.min(shots - c * CHUNK);
                (0..len)
                    .map(|_| {
                        let outcome = match &fixed {
                            Some(s) => s.sample(&mut rng),
                            None => {
                                let x = noise.sample(&mut rng);
                                self.encoder.sample(phi_a + x, phi_b + x, &mut rng)
                            }
                        };
                        EstimateRecord::new(outcome, &self.moments)
                    })
                    .collect()
            })
            .collect();
        let mut out = Vec::with_capacity(shots);
        for c in chunks {
            out.extend(c?);
        }
        Ok(out)
    }
}

/// Differential-phase experiment with common-mode phase noise at working
/// point `(phi_a, phi_b)`.
pub fn differential_experiment(
    protocol: &ProtocolConfig,
    noise: &NoiseConfig,
    phi_a: f64,
    phi_b: f64,
) -> Result<DifferentialResult> {
    noise.validate()?;
    let exp = Experiment::prepare(protocol)?;
    differential_with(&exp, noise, phi_a, phi_b)
}

pub fn differential_with(
    exp: &Experiment,
    noise: &NoiseConfig,
    phi_a: f64,
    phi_b: f64,
) -> Result<DifferentialResult> {
    noise.validate()?;
    let records = exp.run_common_noise(phi_a, phi_b, noise.sigma_pn, noise.shots, noise.seed)?;
    let stats = PairStats::from_pairs(records.iter().map(|r| (r.theta_est_a, r.theta_est_b)));
    let histogram = Histogram2D::build(&records, &stats, 64);
    Ok(DifferentialResult { stats, histogram, records })
}

/// One interrogation time of the clock comparison.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClockRow {
    pub t: f64,
    /// `T_tot / T`
    pub cycles: f64,
    /// Mean single-cycle estimate of `(omega_A - omega_B)/omega_0`.
    pub mean_single: f64,
    /// Single-cycle variance of that estimate.
    pub var_single: f64,
    /// Variance after averaging over all cycles.
    pub var_avg: f64,
    /// Coherent-state prediction `4 / (omega_0^2 N T T_tot)`.
    pub coherent_reference: f64,
    /// Squeezing floor `4 / (omega_0^2 N^{3/2} T T_tot)`.
    pub squeezed_floor: f64,
}

/// Differential clock comparison: each cycle draws a local-oscillator phase
/// `~ Normal(0, (gamma_LO T)^2)` common to both interferometers, estimates
/// both phases, and converts their difference into a fractional frequency.
pub fn clock_experiment(
    protocol: &ProtocolConfig,
    noise: &NoiseConfig,
    t_values: &[f64],
) -> Result<Vec<ClockRow>> {
    noise.validate()?;
    let exp = Experiment::prepare(protocol)?;
    clock_with(&exp, noise, t_values)
}

pub fn clock_with(exp: &Experiment, noise: &NoiseConfig, t_values: &[f64]) -> Result<Vec<ClockRow>> {
    noise.validate()?;
    if !(noise.omega_0 > 0.0) {
        return Err(Error::InvalidConfig("omega_0 must be positive".into()));
    }
    let n = exp.encoder.n() as f64;
    let mut rows = Vec::with_capacity(t_values.len());
    for (row, &t) in t_values.iter().enumerate() {
        if !(t > 0.0) {
            return Err(Error::InvalidConfig("interrogation times must be positive".into()));
        }
        let phi_a = FRAC_PI_2 - (noise.omega_a - noise.omega_0) * t;
        let phi_b = FRAC_PI_2 - (noise.omega_b - noise.omega_0) * t;
        let seed = noise.seed.wrapping_add((row as u64) << 32);
        let records =
            exp.run_common_noise(phi_a, phi_b, noise.gamma_lo * t, noise.shots, seed)?;
        let scale = -1.0 / (noise.omega_0 * t);
        let ys: Vec<f64> = records
            .iter()
            .map(|r| scale * (r.theta_est_a - r.theta_est_b))
            .collect();
        let m = ys.len() as f64;
        let mean = ys.iter().sum::<f64>() / m;
        let var = ys.iter().map(|y| (y - mean).powi(2)).sum::<f64>() / (m - 1.0).max(1.0);
        let cycles = noise.t_tot / t;
        let w2 = noise.omega_0 * noise.omega_0;
        rows.push(ClockRow {
            t,
            cycles,
            mean_single: mean,
            var_single: var,
            var_avg: var / cycles,
            coherent_reference: 4.0 / (w2 * n * t * noise.t_tot),
            squeezed_floor: 4.0 / (w2 * n.powf(1.5) * t * noise.t_tot),
        });
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fock::FockBasis;
    use crate::fock::MomentTable;
    use std::sync::Arc;

    fn moments(z: f64, x: f64) -> InputMoments {
        InputMoments {
            n: 4,
            table: MomentTable { means: vec![z, x, z, x], cov: vec![vec![0.0; 4]; 4] },
        }
    }

    #[test]
    fn inversion_examples() {
        let m = moments(25.0, 0.0);
        let (a, _) = invert_phases(0.0, 0.0, &m).unwrap();
        assert!((a - FRAC_PI_2).abs() < 1e-15);
        let (a, _) = invert_phases(25.0, 25.0, &m).unwrap();
        assert_eq!(a, 1e-12);
        let (a, _) = invert_phases(-40.0, 0.0, &m).unwrap();
        assert_eq!(a, PI - 1e-12);
        assert!(matches!(
            invert_phases(0.0, 0.0, &moments(0.0, 0.0)),
            Err(Error::ZeroFringeAmplitude { .. })
        ));
    }

    #[test]
    fn inversion_round_trip() {
        for (z, x) in [(25.0, 0.0), (-25.0, 0.0), (20.0, 3.0), (-18.0, -4.0)] {
            for i in 1..30 {
                let theta = 0.1 + i as f64 * (PI - 0.2) / 30.0;
                let mu = z * theta.cos() - x * theta.sin();
                let est = invert_fringe(mu, z, x).unwrap();
                // the fringe is monotonic on (0, pi) only when x = 0
                if x == 0.0 {
                    assert!((est - theta).abs() < 1e-9, "z={z} theta={theta} est={est}");
                }
                let back = z * est.cos() - x * est.sin();
                assert!((back - mu).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn point_mass_draws_are_constant() {
        let p = [0.0, 0.0, 1.0, 0.0];
        assert!(sample_shots(&p, 1000, 7).unwrap().iter().all(|&i| i == 2));
        assert!(matches!(
            sample_shots(&[0.5, 0.4], 10, 1),
            Err(Error::NonNormalizedDistribution { .. })
        ));
    }

    #[test]
    fn encoder_matches_direct_rotation() {
        let cfg = ProtocolConfig { n: 6, tau_e: 0.3, nu_e: 0.7, phi_ms: -0.4, ..Default::default() };
        let basis = Arc::new(FockBasis::new(6).unwrap());
        let input = crate::protocol::prepare_input_on(basis.clone(), &cfg).unwrap();
        let enc = PhaseEncoder::new(&input).unwrap();
        for (ta, tb) in [(0.3, 1.9), (FRAC_PI_2, FRAC_PI_2), (2.8, 0.1)] {
            let direct = crate::fock::encode_phases(&input, ta, tb)
                .unwrap()
                .outcome_distribution();
            let fast = enc.distribution(&basis, ta, tb);
            for (a, b) in direct.iter().zip(&fast) {
                assert!((a - b).abs() < 1e-12);
            }
        }
    }
}
