//! Spectral diagnostics, exhaustive search and batch statistics.

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::graph::{IsingProblem, SpinConfig};
use crate::seed::run_rng;

/// Largest problem accepted by [`brute_force_optimum`].
pub const MAX_BRUTE_FORCE_N: usize = 24;

#[derive(Debug, Error, PartialEq)]
pub enum AnalysisError {
    #[error("vector has zero norm")]
    ZeroVector,
    #[error("J x is the zero vector")]
    ZeroImage,
    #[error("vector length {got} does not match problem size {expected}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("exhaustive search refused: n = {0} exceeds the limit of {MAX_BRUTE_FORCE_N}")]
    TooLarge(usize),
    #[error("cannot build a histogram of an empty sample")]
    EmptyInput,
    #[error("bin width must be positive and finite, got {0}")]
    InvalidBinWidth(f64),
}

/// Dominant (largest algebraic) eigenpair estimate of `J`.
#[derive(Clone, Debug, Serialize)]
pub struct SpectralInfo {
    pub lambda_max: f64,
    pub dominant_vector: Vec<f64>,
    pub iterations_used: usize,
    /// `||J v - lambda v||`.
    pub residual: f64,
    pub converged: bool,
    /// Set when `J` has no nonzero entry; `lambda_max` is then 0.
    pub zero_matrix: bool,
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|a| a * a).sum::<f64>().sqrt()
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn normalize(v: &mut [f64]) -> f64 {
    let s = norm(v);
    if s > 0.0 {
        v.iter_mut().for_each(|a| *a /= s);
    }
    s
}

/// Shifted power iteration for the largest algebraic eigenvalue of `J`.
///
/// A short unshifted pass estimates the spectral radius `rho`; iterating on
/// `J + rho I` then makes the top of the spectrum dominant. The eigenvalue
/// is the Rayleigh quotient of the current unit vector. Stops once the
/// residual drops below `tol` or after `max_iter` shifted iterations.
pub fn power_iteration(problem: &IsingProblem, tol: f64, max_iter: usize, seed: u64) -> SpectralInfo {
    let n = problem.n();
    if problem.edge_count() == 0 {
        let mut v = vec![0.0; n];
        v[0] = 1.0;
        return SpectralInfo {
            lambda_max: 0.0,
            dominant_vector: v,
            iterations_used: 0,
            residual: 0.0,
            converged: true,
            zero_matrix: true,
        };
    }
    let mut rng = run_rng(seed);
    let mut v: Vec<f64> = (0..n).map(|_| rng.sample::<f64, _>(StandardNormal)).collect();
    normalize(&mut v);
    let mut jv = vec![0.0; n];

    let radius_bound = problem.max_abs_row_sum();
    let mut radius: f64 = 0.0;
    for _ in 0..50 {
        problem.mul_vec(&v, &mut jv);
        radius = norm(&jv);
        if radius == 0.0 {
            break;
        }
        v.copy_from_slice(&jv);
        normalize(&mut v);
    }
    // a starting vector inside the null space gives no estimate
    let shift = if radius > 0.0 { radius.min(radius_bound) } else { radius_bound };

    let mut v: Vec<f64> = (0..n).map(|_| rng.sample::<f64, _>(StandardNormal)).collect();
    normalize(&mut v);
    let mut iterations = 0;
    let mut converged = false;
    let (lambda, residual) = loop {
        problem.mul_vec(&v, &mut jv);
        let lambda = dot(&v, &jv);
        let residual = jv.iter().zip(&v).map(|(a, b)| (a - lambda * b).powi(2)).sum::<f64>().sqrt();
        if residual < tol {
            converged = true;
            break (lambda, residual);
        }
        if iterations >= max_iter {
            break (lambda, residual);
        }
        for (a, b) in v.iter_mut().zip(&jv) {
            *a = b + shift * *a;
        }
        normalize(&mut v);
        iterations += 1;
    };
    // fix the sign so the largest-magnitude component is positive
    if let Some(k) = (0..n).max_by(|&a, &b| v[a].abs().total_cmp(&v[b].abs())) {
        if v[k] < 0.0 {
            v.iter_mut().for_each(|a| *a = -*a);
        }
    }
    SpectralInfo { lambda_max: lambda, dominant_vector: v, iterations_used: iterations, residual, converged, zero_matrix: false }
}

/// Largest algebraic eigenvalue of `J` to the precision needed for
/// coupling auto-scaling (fixed seed, so repeatable).
pub fn dominant_eigenvalue(problem: &IsingProblem) -> f64 {
    let tol = 1e-6 * problem.max_abs_row_sum().max(f64::MIN_POSITIVE);
    power_iteration(problem, tol, 1000, 0x5EED).lambda_max
}

/// `|| x/|x| - Jx/|Jx| ||`: zero when `x` is an eigenvector of `J` with a
/// positive eigenvalue, 2 for a negative one.
pub fn eig_proximity(problem: &IsingProblem, x: &[f64]) -> Result<f64, AnalysisError> {
    if x.len() != problem.n() {
        return Err(AnalysisError::DimensionMismatch { expected: problem.n(), got: x.len() });
    }
    let mut jx = vec![0.0; x.len()];
    problem.mul_vec(x, &mut jx);
    eig_proximity_with_image(x, &jx)
}

pub(crate) fn eig_proximity_with_image(x: &[f64], jx: &[f64]) -> Result<f64, AnalysisError> {
    let nx = norm(x);
    if nx == 0.0 {
        return Err(AnalysisError::ZeroVector);
    }
    let njx = norm(jx);
    if njx == 0.0 {
        return Err(AnalysisError::ZeroImage);
    }
    let d = x.iter().zip(jx).map(|(a, b)| (a / nx - b / njx).powi(2)).sum::<f64>().sqrt();
    Ok(d.min(2.0))
}

#[derive(Clone, Debug, PartialEq)]
pub struct Optimum {
    pub config: SpinConfig,
    pub max_cut: f64,
    pub min_energy: f64,
}

/// Exact ground state by Gray-code enumeration of the `2^(n-1)`
/// configurations with the last spin fixed to `+1`.
pub fn brute_force_optimum(problem: &IsingProblem) -> Result<Optimum, AnalysisError> {
    let n = problem.n();
    if n > MAX_BRUTE_FORCE_N {
        return Err(AnalysisError::TooLarge(n));
    }
    let m = problem.to_dense_matrix();
    let free = n - 1;
    let mut spins = vec![1.0f64; n];
    let mut field: Vec<f64> = (0..n).map(|i| m[i * n..(i + 1) * n].iter().sum()).collect();
    let mut energy = -0.5 * field.iter().sum::<f64>();
    let mut best_energy = energy;
    let mut best_code = 0u64;
    for k in 1..(1u64 << free) {
        let b = k.trailing_zeros() as usize;
        let old = spins[b];
        energy += 2.0 * old * field[b];
        spins[b] = -old;
        let row = &m[b * n..(b + 1) * n];
        for (f, &c) in field.iter_mut().zip(row) {
            *f -= 2.0 * old * c;
        }
        if energy < best_energy {
            best_energy = energy;
            best_code = k ^ (k >> 1);
        }
    }
    let config = SpinConfig::from_bits(n, best_code);
    let min_energy = problem.energy(&config).expect("length matches");
    let max_cut = problem.cut_value(&config).expect("length matches");
    Ok(Optimum { config, max_cut, min_energy })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Stats {
    pub count: usize,
    pub min: f64,
    pub max: f64,
    pub mean: f64,
    /// Sample standard deviation (`n - 1` denominator; 0 for one value).
    pub std: f64,
}

impl Stats {
    pub fn from_values(values: &[f64]) -> Result<Self, AnalysisError> {
        if values.is_empty() {
            return Err(AnalysisError::EmptyInput);
        }
        let count = values.len();
        let min = values.iter().copied().fold(f64::INFINITY, f64::min);
        let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let mean = values.iter().sum::<f64>() / count as f64;
        let std = if count > 1 {
            (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (count - 1) as f64).sqrt()
        } else {
            0.0
        };
        Ok(Self { count, min, max, mean, std })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Histogram {
    pub bin_width: f64,
    /// `counts.len() + 1` bin boundaries, each a multiple of `bin_width`.
    pub edges: Vec<f64>,
    pub counts: Vec<usize>,
}

/// Bins aligned to multiples of `bin_width`, covering `[min, max]`.
pub fn build_histogram(values: &[f64], bin_width: f64) -> Result<Histogram, AnalysisError> {
    if !(bin_width > 0.0 && bin_width.is_finite()) {
        return Err(AnalysisError::InvalidBinWidth(bin_width));
    }
    let stats = Stats::from_values(values)?;
    let start = (stats.min / bin_width).floor();
    let bins = ((stats.max / bin_width).floor() - start) as usize + 1;
    let mut counts = vec![0usize; bins];
    for &v in values {
        let k = ((v / bin_width).floor() - start) as usize;
        counts[k.min(bins - 1)] += 1;
    }
    let edges = (0..=bins).map(|k| (start + k as f64) * bin_width).collect();
    Ok(Histogram { bin_width, edges, counts })
}

/// Freedman-Diaconis width `2 IQR n^(-1/3)`, falling back to 1 when the
/// interquartile range vanishes.
pub fn freedman_diaconis_width(values: &[f64]) -> f64 {
    if values.len() < 2 {
        return 1.0;
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let q = |p: f64| {
        let pos = p * (sorted.len() - 1) as f64;
        let lo = pos.floor() as usize;
        let hi = pos.ceil() as usize;
        sorted[lo] + (sorted[hi] - sorted[lo]) * (pos - lo as f64)
    };
    let iqr = q(0.75) - q(0.25);
    let width = 2.0 * iqr / (sorted.len() as f64).cbrt();
    if width > 0.0 && width.is_finite() {
        width
    } else {
        1.0
    }
}

/// Width 1 when every coupling is integral, Freedman-Diaconis otherwise.
pub fn default_bin_width(problem: &IsingProblem, cuts: &[f64]) -> f64 {
    if problem.edges().all(|(_, _, v)| v.fract() == 0.0) {
        1.0
    } else {
        freedman_diaconis_width(cuts)
    }
}

/// Per-run outcomes of a batch plus aggregate statistics.
#[derive(Clone, Debug, Serialize)]
pub struct RunBatchResult {
    pub seeds: Vec<u64>,
    pub cuts: Vec<f64>,
    pub energies: Vec<f64>,
    /// Wall time attributed to each run. Runs executed in lockstep share
    /// their group's time equally.
    pub wall_ms: Vec<f64>,
    pub best_run: usize,
    pub best_config: SpinConfig,
    pub stats: Stats,
    pub histogram: Histogram,
    pub total_wall_ms: f64,
}

impl RunBatchResult {
    pub fn runs(&self) -> usize {
        self.cuts.len()
    }

    /// Number of runs whose cut is within `tol` of `target` or above it.
    pub fn hits(&self, target: f64, tol: f64) -> usize {
        self.cuts.iter().filter(|&&c| c >= target - tol).count()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{generate_random, GraphGenSpec};

    #[test]
    fn two_node_eigenpair() {
        let p = IsingProblem::from_couplings(2, [(0, 1, 1.0)], "").unwrap();
        let info = power_iteration(&p, 1e-12, 1000, 1);
        assert!(info.converged);
        assert!((info.lambda_max - 1.0).abs() < 1e-12);
        let s = 1.0 / 2f64.sqrt();
        assert!((info.dominant_vector[0] - s).abs() < 1e-9);
        assert!((info.dominant_vector[1] - s).abs() < 1e-9);
    }

    #[test]
    fn negative_dominant_spectrum_reports_algebraic_top() {
        // eigenvalues -1 and +1 for J_12 = -1, so the top is still +1
        let p = IsingProblem::from_couplings(2, [(0, 1, -1.0)], "").unwrap();
        let info = power_iteration(&p, 1e-12, 1000, 5);
        assert!((info.lambda_max - 1.0).abs() < 1e-12);
        assert!((info.dominant_vector[0] + info.dominant_vector[1]).abs() < 1e-9);
        // triangle with J = -1: spectrum {-2, 1, 1}
        let t = IsingProblem::from_couplings(3, [(0, 1, -1.0), (0, 2, -1.0), (1, 2, -1.0)], "").unwrap();
        let info = power_iteration(&t, 1e-10, 10_000, 5);
        assert!((info.lambda_max - 1.0).abs() < 1e-9, "{}", info.lambda_max);
    }

    #[test]
    fn zero_matrix_is_flagged() {
        let p = IsingProblem::from_couplings(4, [], "").unwrap();
        let info = power_iteration(&p, 1e-10, 100, 0);
        assert!(info.zero_matrix);
        assert_eq!(info.lambda_max, 0.0);
    }

    #[test]
    fn proximity_of_eigenvectors() {
        let p = IsingProblem::from_couplings(2, [(0, 1, 1.0)], "").unwrap();
        assert!(eig_proximity(&p, &[1.0, 1.0]).unwrap() < 1e-12);
        assert!((eig_proximity(&p, &[1.0, -1.0]).unwrap() - 2.0).abs() < 1e-12);
        assert_eq!(eig_proximity(&p, &[0.0, 0.0]), Err(AnalysisError::ZeroVector));
        let z = IsingProblem::from_couplings(2, [], "").unwrap();
        assert_eq!(eig_proximity(&z, &[1.0, 0.0]), Err(AnalysisError::ZeroImage));
    }

    #[test]
    fn brute_force_small_cases() {
        let t = IsingProblem::from_couplings(3, [(0, 1, -1.0), (0, 2, -1.0), (1, 2, -1.0)], "").unwrap();
        let o = brute_force_optimum(&t).unwrap();
        assert_eq!(o.max_cut, 2.0);
        assert_eq!(o.min_energy, -1.0);

        let pair = IsingProblem::from_couplings(2, [(0, 1, -1.0)], "").unwrap();
        let o = brute_force_optimum(&pair).unwrap();
        assert_eq!(o.max_cut, 1.0);
        assert_ne!(o.config.as_slice()[0], o.config.as_slice()[1]);

        let zero = IsingProblem::from_couplings(4, [], "").unwrap();
        assert_eq!(brute_force_optimum(&zero).unwrap().max_cut, 0.0);

        let single = IsingProblem::from_couplings(1, [], "").unwrap();
        assert_eq!(brute_force_optimum(&single).unwrap().max_cut, 0.0);
    }

    #[test]
    fn brute_force_matches_direct_enumeration() {
        let p = generate_random(&GraphGenSpec::gaussian(9, 4)).unwrap();
        let direct = (0..1u64 << 9)
            .map(|b| p.energy(&SpinConfig::from_bits(9, b)).unwrap())
            .fold(f64::INFINITY, f64::min);
        let o = brute_force_optimum(&p).unwrap();
        assert!((o.min_energy - direct).abs() < 1e-9);
    }

    #[test]
    fn brute_force_refuses_large_problems() {
        let p = IsingProblem::from_couplings(25, [], "").unwrap();
        assert_eq!(brute_force_optimum(&p), Err(AnalysisError::TooLarge(25)));
    }

    #[test]
    fn histogram_examples() {
        let h = build_histogram(&[5.0, 5.0, 5.0], 1.0).unwrap();
        assert_eq!(h.counts, vec![3]);
        assert_eq!(h.edges, vec![5.0, 6.0]);
        let h = build_histogram(&[1.0, 2.0, 3.0], 1.0).unwrap();
        assert_eq!(h.counts, vec![1, 1, 1]);
        assert_eq!(build_histogram(&[], 1.0), Err(AnalysisError::EmptyInput));
        assert!(build_histogram(&[1.0], 0.0).is_err());
        let h = build_histogram(&[-0.3, 0.2, 0.7, 1.2], 0.5).unwrap();
        assert_eq!(h.edges[0], -0.5);
        assert_eq!(h.counts.iter().sum::<usize>(), 4);
    }

    #[test]
    fn stats_basics() {
        let s = Stats::from_values(&[1.0, 2.0, 3.0, 4.0]).unwrap();
        assert_eq!((s.min, s.max, s.mean), (1.0, 4.0, 2.5));
        assert!((s.std - (5.0f64 / 3.0).sqrt()).abs() < 1e-15);
        assert_eq!(Stats::from_values(&[7.0]).unwrap().std, 0.0);
    }

    #[test]
    fn freedman_diaconis_fallback() {
        assert_eq!(freedman_diaconis_width(&[3.0, 3.0, 3.0]), 1.0);
        let w = freedman_diaconis_width(&(0..1000).map(|k| k as f64).collect::<Vec<_>>());
        assert!((w - 2.0 * 499.5 / 10.0).abs() < 1e-9);
    }
}
