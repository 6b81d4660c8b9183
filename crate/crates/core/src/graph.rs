//! Ising problem instances.
//!
//! An [`IsingProblem`] holds a symmetric, zero-diagonal coupling matrix `J`
//! and evaluates the Hamiltonian `H = -1/2 sum_{i,j} J_ij s_i s_j` and the
//! equivalent max-cut objective `cut = -1/2 sum_{i<j} J_ij (1 - s_i s_j)`.
//!
//! GSet edge weights map to couplings as `J_ij = -w_ij`, so maximizing the
//! cut of a GSet graph is the same as minimizing `H`.

use std::collections::HashSet;
use std::fmt;
use std::io::{self, BufRead, BufReader, Read, Write};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::kernel;

/// Pair density at or above which a problem is stored densely.
pub const DENSE_THRESHOLD: f64 = 0.10;

#[derive(Debug, Error)]
pub enum GraphError {
    #[error("dimension mismatch: problem has {expected} nodes, vector has {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("invalid coupling ({i}, {j}): {message}")]
    InvalidCoupling { i: usize, j: usize, message: String },
    #[error("invalid generator spec: {0}")]
    InvalidSpec(String),
    #[error("spin values must be +1 or -1, found {value} at index {index}")]
    InvalidSpin { index: usize, value: i8 },
    #[error("amplitude {index} is NaN")]
    NanAmplitude { index: usize },
    #[error("problem must have at least one node")]
    Empty,
    #[error(transparent)]
    Io(#[from] io::Error),
}

/// Memory layout of the coupling matrix.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Storage {
    Dense,
    Sparse,
}

impl fmt::Display for Storage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Storage::Dense => f.write_str("dense"),
            Storage::Sparse => f.write_str("sparse"),
        }
    }
}

#[derive(Clone, Debug)]
enum Couplings {
    /// Row-major `n * n`.
    Dense(Vec<f64>),
    /// CSR holding both triangles, columns ascending within each row.
    Sparse {
        row_ptr: Vec<usize>,
        cols: Vec<u32>,
        vals: Vec<f64>,
    },
}

/// A symmetric zero-diagonal coupling matrix with a label.
///
/// Immutable after construction; share it freely between solver runs.
#[derive(Clone, Debug)]
pub struct IsingProblem {
    n: usize,
    name: String,
    couplings: Couplings,
    /// Number of unordered pairs with a nonzero coupling.
    edge_count: usize,
}

impl IsingProblem {
    /// Builds a problem from a list of unordered pairs `(i, j, J_ij)` with
    /// 0-based indices. Storage is chosen from the pair density.
    pub fn from_couplings<I>(n: usize, couplings: I, name: impl Into<String>) -> Result<Self, GraphError>
    where
        I: IntoIterator<Item = (usize, usize, f64)>,
    {
        if n == 0 {
            return Err(GraphError::Empty);
        }
        let mut seen = HashSet::new();
        let mut triples = Vec::new();
        for (i, j, v) in couplings {
            if i >= n || j >= n {
                return Err(GraphError::InvalidCoupling {
                    i,
                    j,
                    message: format!("index out of range for {n} nodes"),
                });
            }
            if i == j {
                return Err(GraphError::InvalidCoupling { i, j, message: "self-loop".into() });
            }
            if !v.is_finite() {
                return Err(GraphError::InvalidCoupling { i, j, message: "non-finite value".into() });
            }
            let key = (i.min(j), i.max(j));
            if !seen.insert(key) {
                return Err(GraphError::InvalidCoupling { i, j, message: "duplicate pair".into() });
            }
            if v != 0.0 {
                triples.push((key.0, key.1, v));
            }
        }
        let storage = if pair_density(n, triples.len()) >= DENSE_THRESHOLD {
            Storage::Dense
        } else {
            Storage::Sparse
        };
        Ok(Self::assemble(n, triples, storage, name.into()))
    }

    /// Builds a problem from a full row-major `n * n` matrix, checking
    /// exact symmetry and a zero diagonal.
    pub fn from_dense(n: usize, matrix: Vec<f64>, name: impl Into<String>) -> Result<Self, GraphError> {
        if n == 0 {
            return Err(GraphError::Empty);
        }
        if matrix.len() != n * n {
            return Err(GraphError::DimensionMismatch { expected: n * n, got: matrix.len() });
        }
        let mut triples = Vec::new();
        for i in 0..n {
            if matrix[i * n + i] != 0.0 {
                return Err(GraphError::InvalidCoupling { i, j: i, message: "nonzero diagonal".into() });
            }
            for j in (i + 1)..n {
                let (a, b) = (matrix[i * n + j], matrix[j * n + i]);
                if a != b {
                    return Err(GraphError::InvalidCoupling { i, j, message: format!("asymmetric: {a} vs {b}") });
                }
                if !a.is_finite() {
                    return Err(GraphError::InvalidCoupling { i, j, message: "non-finite value".into() });
                }
                if a != 0.0 {
                    triples.push((i, j, a));
                }
            }
        }
        let storage = if pair_density(n, triples.len()) >= DENSE_THRESHOLD {
            Storage::Dense
        } else {
            Storage::Sparse
        };
        Ok(Self::assemble(n, triples, storage, name.into()))
    }

    fn assemble(n: usize, triples: Vec<(usize, usize, f64)>, storage: Storage, name: String) -> Self {
        let edge_count = triples.len();
        let couplings = match storage {
            Storage::Dense => {
                let mut m = vec![0.0; n * n];
                for &(i, j, v) in &triples {
                    m[i * n + j] = v;
                    m[j * n + i] = v;
                }
                Couplings::Dense(m)
            }
            Storage::Sparse => {
                let mut degree = vec![0usize; n];
                for &(i, j, _) in &triples {
                    degree[i] += 1;
                    degree[j] += 1;
                }
                let mut row_ptr = vec![0usize; n + 1];
                for i in 0..n {
                    row_ptr[i + 1] = row_ptr[i] + degree[i];
                }
                let mut fill = row_ptr[..n].to_vec();
                let mut cols = vec![0u32; row_ptr[n]];
                let mut vals = vec![0.0; row_ptr[n]];
                for &(i, j, v) in &triples {
                    cols[fill[i]] = j as u32;
                    vals[fill[i]] = v;
                    fill[i] += 1;
                    cols[fill[j]] = i as u32;
                    vals[fill[j]] = v;
                    fill[j] += 1;
                }
                for i in 0..n {
                    let (lo, hi) = (row_ptr[i], row_ptr[i + 1]);
                    let mut row: Vec<(u32, f64)> = cols[lo..hi].iter().copied().zip(vals[lo..hi].iter().copied()).collect();
                    row.sort_unstable_by_key(|&(c, _)| c);
                    for (k, (c, v)) in row.into_iter().enumerate() {
                        cols[lo + k] = c;
                        vals[lo + k] = v;
                    }
                }
                Couplings::Sparse { row_ptr, cols, vals }
            }
        };
        Self { n, name, couplings, edge_count }
    }

    /// Returns a copy of this problem converted to the given layout.
    pub fn with_storage(&self, storage: Storage) -> Self {
        if storage == self.storage() {
            return self.clone();
        }
        let triples: Vec<_> = self.edges().collect();
        Self::assemble(self.n, triples, storage, self.name.clone())
    }

    pub fn with_name(mut self, name: impl Into<String>) -> Self {
        self.name = name.into();
        self
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn storage(&self) -> Storage {
        match self.couplings {
            Couplings::Dense(_) => Storage::Dense,
            Couplings::Sparse { .. } => Storage::Sparse,
        }
    }

    /// Number of unordered pairs with nonzero coupling.
    pub fn edge_count(&self) -> usize {
        self.edge_count
    }

    /// Fraction of unordered pairs that carry a nonzero coupling.
    pub fn density(&self) -> f64 {
        pair_density(self.n, self.edge_count)
    }

    pub fn coupling(&self, i: usize, j: usize) -> f64 {
        match &self.couplings {
            Couplings::Dense(m) => m[i * self.n + j],
            Couplings::Sparse { row_ptr, cols, vals } => {
                let row = &cols[row_ptr[i]..row_ptr[i + 1]];
                match row.binary_search(&(j as u32)) {
                    Ok(k) => vals[row_ptr[i] + k],
                    Err(_) => 0.0,
                }
            }
        }
    }

    /// Nonzero couplings `(i, j, J_ij)` with `i < j`, in row-major order.
    pub fn edges(&self) -> Box<dyn Iterator<Item = (usize, usize, f64)> + '_> {
        let n = self.n;
        match &self.couplings {
            Couplings::Dense(m) => Box::new(
                (0..n).flat_map(move |i| ((i + 1)..n).map(move |j| (i, j, m[i * n + j]))).filter(|e| e.2 != 0.0),
            ),
            Couplings::Sparse { row_ptr, cols, vals } => Box::new((0..n).flat_map(move |i| {
                (row_ptr[i]..row_ptr[i + 1])
                    .filter(move |&k| cols[k] as usize > i)
                    .map(move |k| (i, cols[k] as usize, vals[k]))
            })),
        }
    }

    /// Full row-major copy of `J`.
    pub fn to_dense_matrix(&self) -> Vec<f64> {
        match &self.couplings {
            Couplings::Dense(m) => m.clone(),
            Couplings::Sparse { .. } => {
                let mut m = vec![0.0; self.n * self.n];
                for (i, j, v) in self.edges() {
                    m[i * self.n + j] = v;
                    m[j * self.n + i] = v;
                }
                m
            }
        }
    }

    /// Maximum absolute row sum, an upper bound on the spectral radius.
    pub fn max_abs_row_sum(&self) -> f64 {
        let mut best: f64 = 0.0;
        for i in 0..self.n {
            let s: f64 = match &self.couplings {
                Couplings::Dense(m) => m[i * self.n..(i + 1) * self.n].iter().map(|v| v.abs()).sum(),
                Couplings::Sparse { row_ptr, vals, .. } => vals[row_ptr[i]..row_ptr[i + 1]].iter().map(|v| v.abs()).sum(),
            };
            best = best.max(s);
        }
        best
    }

    /// Constant offset `C = -1/2 sum_{i<j} J_ij` relating cut and energy.
    pub fn cut_offset(&self) -> f64 {
        -0.5 * self.edges().map(|e| e.2).sum::<f64>()
    }

    /// `y = J x`.
    pub fn mul_vec(&self, x: &[f64], y: &mut [f64]) {
        self.mul_lanes(x, y, 1);
    }

    /// Multiplies `J` into `lanes` vectors stored node-major
    /// (`x[j * lanes + r]` is component `j` of vector `r`).
    ///
    /// Every output element sums its terms in ascending column order
    /// starting from zero, so a lane's result does not depend on how many
    /// other lanes share the call.
    pub fn mul_lanes(&self, x: &[f64], y: &mut [f64], lanes: usize) {
        assert_eq!(x.len(), self.n * lanes);
        assert_eq!(y.len(), self.n * lanes);
        match &self.couplings {
            Couplings::Dense(m) => kernel::dense_mul_lanes(self.n, m, x, y, lanes),
            Couplings::Sparse { row_ptr, cols, vals } => kernel::sparse_mul_lanes(row_ptr, cols, vals, x, y, lanes),
        }
    }

    fn check_len(&self, len: usize) -> Result<(), GraphError> {
        if len != self.n {
            return Err(GraphError::DimensionMismatch { expected: self.n, got: len });
        }
        Ok(())
    }

    /// `H = -1/2 sum_{i,j} J_ij s_i s_j`, summed over both orderings.
    pub fn energy(&self, config: &SpinConfig) -> Result<f64, GraphError> {
        self.check_len(config.len())?;
        let x: Vec<f64> = config.iter().map(|&s| s as f64).collect();
        // adding 0.0 turns a negative zero into a positive one
        Ok(self.relaxed_energy(&x) + 0.0)
    }

    /// The Hamiltonian evaluated at real-valued amplitudes, `-1/2 x^T J x`.
    pub fn relaxed_energy(&self, x: &[f64]) -> f64 {
        let mut jx = vec![0.0; self.n];
        self.mul_vec(x, &mut jx);
        -0.5 * x.iter().zip(&jx).map(|(a, b)| a * b).sum::<f64>()
    }

    /// `cut = -1/2 sum_{i<j} J_ij (1 - s_i s_j)`.
    pub fn cut_value(&self, config: &SpinConfig) -> Result<f64, GraphError> {
        self.check_len(config.len())?;
        let s = config.as_slice();
        let mut total = 0.0;
        for (i, j, v) in self.edges() {
            if s[i] != s[j] {
                total += v;
            }
        }
        // each crossing pair contributes -1/2 * J * 2
        Ok(0.0 - total)
    }
}

fn pair_density(n: usize, pairs: usize) -> f64 {
    if n < 2 {
        return 0.0;
    }
    pairs as f64 / (n as f64 * (n as f64 - 1.0) / 2.0)
}

/// A configuration of `n` Ising spins, each exactly `+1` or `-1`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SpinConfig(Vec<i8>);

impl SpinConfig {
    pub fn new(spins: Vec<i8>) -> Result<Self, GraphError> {
        if let Some((index, &value)) = spins.iter().enumerate().find(|(_, &s)| s != 1 && s != -1) {
            return Err(GraphError::InvalidSpin { index, value });
        }
        Ok(Self(spins))
    }

    pub fn uniform(n: usize, spin: i8) -> Self {
        assert!(spin == 1 || spin == -1);
        Self(vec![spin; n])
    }

    /// Spin `i` is `-1` when bit `i` of `bits` is set.
    pub fn from_bits(n: usize, bits: u64) -> Self {
        Self((0..n).map(|i| if bits >> i & 1 == 1 { -1 } else { 1 }).collect())
    }

    pub fn flipped(&self) -> Self {
        Self(self.0.iter().map(|s| -s).collect())
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[i8] {
        &self.0
    }

    pub fn iter(&self) -> std::slice::Iter<'_, i8> {
        self.0.iter()
    }
}

/// Reads spins off amplitudes by sign; `x >= 0` (including `-0.0`) is `+1`.
pub fn spins_from_amplitudes(x: &[f64]) -> Result<SpinConfig, GraphError> {
    let mut spins = Vec::with_capacity(x.len());
    for (index, &v) in x.iter().enumerate() {
        if v.is_nan() {
            return Err(GraphError::NanAmplitude { index });
        }
        spins.push(if v >= 0.0 { 1 } else { -1 });
    }
    Ok(SpinConfig(spins))
}

/// Distribution of the upper-triangle couplings of a generated instance.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum EdgeDistribution {
    Gaussian { mean: f64, std_dev: f64 },
    /// Each pair is coupled with probability `p`, with `J = +1` or `-1` equally likely.
    Discrete { p: f64 },
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GraphGenSpec {
    pub n: usize,
    pub distribution: EdgeDistribution,
    pub seed: u64,
}

impl GraphGenSpec {
    pub fn gaussian(n: usize, seed: u64) -> Self {
        Self { n, distribution: EdgeDistribution::Gaussian { mean: 0.0, std_dev: 1.0 }, seed }
    }

    pub fn validate(&self) -> Result<(), GraphError> {
        if self.n < 2 {
            return Err(GraphError::InvalidSpec(format!("need at least 2 nodes, got {}", self.n)));
        }
        match self.distribution {
            EdgeDistribution::Gaussian { mean, std_dev } => {
                if !(std_dev > 0.0 && std_dev.is_finite()) || !mean.is_finite() {
                    return Err(GraphError::InvalidSpec(format!("gaussian needs finite mean and stddev > 0, got ({mean}, {std_dev})")));
                }
            }
            EdgeDistribution::Discrete { p } => {
                if !(p > 0.0 && p <= 1.0) {
                    return Err(GraphError::InvalidSpec(format!("edge probability must lie in (0, 1], got {p}")));
                }
            }
        }
        Ok(())
    }

    /// Short label such as `gauss800_s7`.
    pub fn label(&self) -> String {
        match self.distribution {
            EdgeDistribution::Gaussian { .. } => format!("gauss{}_s{}", self.n, self.seed),
            EdgeDistribution::Discrete { p } => format!("pm1_{}_p{}_s{}", self.n, p, self.seed),
        }
    }
}

/// Draws a random instance. Pairs are visited row-major over `i < j`, so a
/// fixed seed always yields the same matrix.
pub fn generate_random(spec: &GraphGenSpec) -> Result<IsingProblem, GraphError> {
    spec.validate()?;
    let n = spec.n;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut triples = Vec::new();
    match spec.distribution {
        EdgeDistribution::Gaussian { mean, std_dev } => {
            let normal = Normal::new(mean, std_dev).map_err(|e| GraphError::InvalidSpec(e.to_string()))?;
            triples.reserve(n * (n - 1) / 2);
            for i in 0..n {
                for j in (i + 1)..n {
                    triples.push((i, j, normal.sample(&mut rng)));
                }
            }
        }
        EdgeDistribution::Discrete { p } => {
            for i in 0..n {
                for j in (i + 1)..n {
                    if rng.random::<f64>() < p {
                        let v = if rng.random::<bool>() { 1.0 } else { -1.0 };
                        triples.push((i, j, v));
                    }
                }
            }
        }
    }
    IsingProblem::from_couplings(n, triples, spec.label())
}

/// Parses a GSet-format graph: a header `n m`, then `m` lines `i j w` with
/// 1-based indices. Lines starting with `#` and blank lines are ignored.
pub fn parse_gset<R: Read>(reader: R) -> Result<IsingProblem, GraphError> {
    let reader = BufReader::new(reader);
    let mut header: Option<(usize, usize)> = None;
    let mut seen = HashSet::new();
    let mut triples = Vec::new();
    for (idx, line) in reader.lines().enumerate() {
        let line_no = idx + 1;
        let line = line?;
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let err = |message: String| GraphError::Parse { line: line_no, message };
        let fields: Vec<&str> = trimmed.split_whitespace().collect();
        let Some((n, m)) = header else {
            if fields.len() != 2 {
                return Err(err(format!("expected header `n m`, found `{trimmed}`")));
            }
            let n: usize = fields[0].parse().map_err(|_| err(format!("invalid node count `{}`", fields[0])))?;
            let m: usize = fields[1].parse().map_err(|_| err(format!("invalid edge count `{}`", fields[1])))?;
            if n == 0 {
                return Err(err("node count must be positive".into()));
            }
            header = Some((n, m));
            continue;
        };
        if seen.len() >= m {
            return Err(err(format!("more than the {m} declared edges")));
        }
        if fields.len() != 3 {
            return Err(err(format!("expected `i j w`, found `{trimmed}`")));
        }
        let parse_index = |s: &str| -> Result<usize, GraphError> {
            let v: usize = s.parse().map_err(|_| err(format!("invalid node index `{s}`")))?;
            if v < 1 || v > n {
                return Err(err(format!("node index {v} out of range [1, {n}]")));
            }
            Ok(v - 1)
        };
        let i = parse_index(fields[0])?;
        let j = parse_index(fields[1])?;
        let w: f64 = fields[2].parse().map_err(|_| err(format!("invalid weight `{}`", fields[2])))?;
        if !w.is_finite() {
            return Err(err(format!("non-finite weight `{}`", fields[2])));
        }
        if i == j {
            return Err(err(format!("self-loop on node {}", i + 1)));
        }
        if !seen.insert((i.min(j), i.max(j))) {
            return Err(err(format!("duplicate edge {} {}", i + 1, j + 1)));
        }
        triples.push((i, j, -w));
    }
    let Some((n, m)) = header else {
        return Err(GraphError::Parse { line: 0, message: "missing header".into() });
    };
    if seen.len() != m {
        return Err(GraphError::Parse { line: 0, message: format!("declared {m} edges, found {}", seen.len()) });
    }
    IsingProblem::from_couplings(n, triples, "")
}

pub fn parse_gset_str(text: &str) -> Result<IsingProblem, GraphError> {
    parse_gset(text.as_bytes())
}

/// Writes `problem` in GSet format with edges in canonical `i < j` order
/// and weights `w = -J_ij`. Integral weights are written without a
/// fractional part.
pub fn write_gset<W: Write>(problem: &IsingProblem, mut out: W) -> io::Result<()> {
    writeln!(out, "{} {}", problem.n(), problem.edge_count())?;
    for (i, j, v) in problem.edges() {
        let w = -v;
        if w.fract() == 0.0 && w.abs() < 9.0e15 {
            writeln!(out, "{} {} {}", i + 1, j + 1, w as i64)?;
        } else {
            writeln!(out, "{} {} {}", i + 1, j + 1, w)?;
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn triangle() -> IsingProblem {
        IsingProblem::from_couplings(3, [(0, 1, -1.0), (0, 2, -1.0), (1, 2, -1.0)], "triangle").unwrap()
    }

    #[test]
    fn energy_of_aligned_pair() {
        let p = IsingProblem::from_couplings(2, [(0, 1, 1.0)], "").unwrap();
        assert_eq!(p.energy(&SpinConfig::uniform(2, 1)).unwrap(), -1.0);
    }

    #[test]
    fn zero_couplings_give_zero_energy_and_cut() {
        let p = IsingProblem::from_couplings(5, [], "").unwrap();
        let s = SpinConfig::new(vec![1, -1, 1, 1, -1]).unwrap();
        assert_eq!(p.energy(&s).unwrap(), 0.0);
        assert_eq!(p.cut_value(&s).unwrap(), 0.0);
    }

    #[test]
    fn triangle_energy_matches_enumeration() {
        let p = triangle();
        let target = SpinConfig::new(vec![1, 1, -1]).unwrap();
        // H = -sum_{i<j} J s_i s_j = s0 s1 + s0 s2 + s1 s2
        let mut min = f64::INFINITY;
        for bits in 0..8u64 {
            let s = SpinConfig::from_bits(3, bits);
            let v = s.as_slice();
            let direct = (v[0] * v[1] + v[0] * v[2] + v[1] * v[2]) as f64;
            assert_eq!(p.energy(&s).unwrap(), direct);
            min = min.min(direct);
        }
        assert_eq!(p.energy(&target).unwrap(), -1.0);
        assert_eq!(min, -1.0);
    }

    #[test]
    fn cut_examples() {
        let p = IsingProblem::from_couplings(2, [(0, 1, -1.0)], "").unwrap();
        assert_eq!(p.cut_value(&SpinConfig::new(vec![1, -1]).unwrap()).unwrap(), 1.0);
        assert_eq!(p.cut_value(&SpinConfig::uniform(2, -1)).unwrap(), 0.0);
        let t = triangle();
        let best = (0..8u64).map(|b| t.cut_value(&SpinConfig::from_bits(3, b)).unwrap()).fold(f64::MIN, f64::max);
        assert_eq!(best, 2.0);
    }

    #[test]
    fn dimension_mismatch_is_reported() {
        let t = triangle();
        let s = SpinConfig::uniform(2, 1);
        assert!(matches!(t.energy(&s), Err(GraphError::DimensionMismatch { expected: 3, got: 2 })));
        assert!(matches!(t.cut_value(&s), Err(GraphError::DimensionMismatch { .. })));
    }

    #[test]
    fn parse_examples() {
        let p = parse_gset_str("3 2\n1 2 1\n2 3 1").unwrap();
        assert_eq!(p.n(), 3);
        assert_eq!(p.coupling(0, 1), -1.0);
        assert_eq!(p.coupling(1, 2), -1.0);
        assert_eq!(p.coupling(2, 1), -1.0);
        assert_eq!(p.coupling(0, 2), 0.0);

        let q = parse_gset_str("2 1\n1 2 -1").unwrap();
        assert_eq!(q.coupling(0, 1), 1.0);

        let err = parse_gset_str("2 1\n1 3 1").unwrap_err();
        assert!(matches!(err, GraphError::Parse { line: 2, .. }), "{err}");
    }

    #[test]
    fn parse_rejects_bad_input() {
        let cases = [
            ("3 2\n1 2 1\n1 2 1", 3),
            ("3 1\n2 2 1", 2),
            ("3 1\n1 x 1", 2),
            ("3 1\n1 2", 2),
            ("3 1 5\n1 2 1", 1),
            ("# c\n3 1\n1 2 1\n2 3 1", 4),
            ("3 1\n0 2 1", 2),
        ];
        for (text, line) in cases {
            match parse_gset_str(text) {
                Err(GraphError::Parse { line: l, .. }) => assert_eq!(l, line, "{text:?}"),
                other => panic!("{text:?}: expected parse error, got {other:?}"),
            }
        }
        assert!(parse_gset_str("3 2\n1 2 1").is_err());
        assert!(parse_gset_str("").is_err());
    }

    #[test]
    fn parse_skips_comments_and_accepts_real_weights() {
        let p = parse_gset_str("# header comment\n3 2\n\n1 2 0.5\n# mid\n3 1 -2.25\n").unwrap();
        assert_eq!(p.coupling(0, 1), -0.5);
        assert_eq!(p.coupling(0, 2), 2.25);
    }

    #[test]
    fn write_is_canonical() {
        let p = parse_gset_str("3 2\n3 2 1\n2 1 -4").unwrap();
        let mut buf = Vec::new();
        write_gset(&p, &mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), "3 2\n1 2 -4\n2 3 1\n");
    }

    #[test]
    fn storage_is_chosen_by_density() {
        let sparse = parse_gset_str("20 1\n1 2 1").unwrap();
        assert_eq!(sparse.storage(), Storage::Sparse);
        let dense = generate_random(&GraphGenSpec::gaussian(10, 1)).unwrap();
        assert_eq!(dense.storage(), Storage::Dense);
    }

    #[test]
    fn rejects_asymmetric_and_diagonal() {
        assert!(IsingProblem::from_dense(2, vec![0.0, 1.0, 2.0, 0.0], "").is_err());
        assert!(IsingProblem::from_dense(2, vec![1.0, 0.0, 0.0, 0.0], "").is_err());
        assert!(IsingProblem::from_couplings(2, [(0, 0, 1.0)], "").is_err());
        assert!(IsingProblem::from_couplings(0, [], "").is_err());
    }

    #[test]
    fn generation_is_deterministic_and_symmetric() {
        let spec = GraphGenSpec::gaussian(3, 99);
        let a = generate_random(&spec).unwrap();
        let m = a.to_dense_matrix();
        for i in 0..3 {
            assert_eq!(m[i * 3 + i], 0.0);
            for j in 0..3 {
                assert_eq!(m[i * 3 + j], m[j * 3 + i]);
            }
        }
        let b = generate_random(&spec).unwrap();
        assert_eq!(m, b.to_dense_matrix());
        assert!(generate_random(&GraphGenSpec::gaussian(1, 0)).is_err());
    }

    #[test]
    fn generator_spec_validation() {
        let bad = [
            EdgeDistribution::Gaussian { mean: 0.0, std_dev: 0.0 },
            EdgeDistribution::Discrete { p: 0.0 },
            EdgeDistribution::Discrete { p: 1.5 },
        ];
        for d in bad {
            assert!(GraphGenSpec { n: 4, distribution: d, seed: 0 }.validate().is_err());
        }
        let full = generate_random(&GraphGenSpec { n: 30, distribution: EdgeDistribution::Discrete { p: 1.0 }, seed: 3 }).unwrap();
        assert_eq!(full.edge_count(), 30 * 29 / 2);
        assert!(full.edges().all(|(_, _, v)| v == 1.0 || v == -1.0));
    }

    #[test]
    fn sign_readout() {
        assert_eq!(spins_from_amplitudes(&[0.3, -0.9]).unwrap().as_slice(), &[1, -1]);
        assert_eq!(spins_from_amplitudes(&[0.0, -0.0]).unwrap().as_slice(), &[1, 1]);
        assert_eq!(spins_from_amplitudes(&[1.0, -1.0, 0.01]).unwrap().as_slice(), &[1, -1, 1]);
        assert!(matches!(spins_from_amplitudes(&[0.0, f64::NAN]), Err(GraphError::NanAmplitude { index: 1 })));
    }

    #[test]
    fn spin_config_validates() {
        assert!(SpinConfig::new(vec![1, 0]).is_err());
        assert_eq!(SpinConfig::from_bits(3, 0b101).as_slice(), &[-1, 1, -1]);
    }
}
