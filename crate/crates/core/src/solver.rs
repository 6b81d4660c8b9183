//! The solver interface, the name-keyed registry and the shared run/batch
//! drivers.
//!
//! Every algorithm implements [`Solver`]: it is built from a [`ParamMap`]
//! through a registered factory, resolves problem-dependent settings, and
//! hands out a [`Dynamics`] that advances a group of independent runs in
//! lockstep. The drivers in this module turn that into single runs, traced
//! runs and parallel batches.

use std::collections::BTreeMap;
use std::time::Instant;

use rayon::prelude::*;
use serde::Serialize;

use crate::analysis::{build_histogram, default_bin_width, eig_proximity_with_image, RunBatchResult, Stats};
use crate::error::SolverError;
use crate::graph::{spins_from_amplitudes, IsingProblem, SpinConfig};
use crate::params::ParamMap;
use crate::seed::derive_seed;
use crate::{cim_physics, nmfa, simcim};

/// A run inside a lockstep group produced a non-finite value.
#[derive(Clone, Debug, PartialEq)]
pub struct LaneFailure {
    pub lane: usize,
    pub iteration: usize,
    pub detail: String,
}

/// The evolving state of a group of runs.
///
/// Amplitudes are stored node-major: component `i` of lane `r` is at
/// `i * lanes + r`.
pub trait Dynamics {
    fn lanes(&self) -> usize;
    /// Number of completed steps.
    fn iteration(&self) -> usize;
    /// Schedule value applied by the next step (pump-loss `v`, mean-field
    /// gain, or parametric gain).
    fn control(&self) -> f64;
    fn step(&mut self) -> Result<(), LaneFailure>;
    /// Amplitudes whose signs are read out as spins.
    fn amplitudes(&self) -> &[f64];
}

pub trait Solver: Send + Sync {
    fn name(&self) -> &'static str;
    fn iterations(&self) -> usize;
    /// Effective parameters. Feeding them back into the registry rebuilds
    /// an equivalent solver.
    fn params(&self) -> ParamMap;
    /// Fixes problem-dependent settings such as the auto-scaled coupling.
    fn resolve(&self, problem: &IsingProblem) -> Result<Box<dyn Solver>, SolverError>;
    /// Starts one run per seed from the solver's initial state.
    fn start<'a>(&'a self, problem: &'a IsingProblem, seeds: &[u64]) -> Result<Box<dyn Dynamics + 'a>, SolverError>;
}

pub type SolverFactory = fn(&ParamMap) -> Result<Box<dyn Solver>, SolverError>;

struct Entry {
    factory: SolverFactory,
    keys: &'static [&'static str],
}

/// Name-keyed solver constructors.
pub struct SolverRegistry {
    entries: BTreeMap<&'static str, Entry>,
}

impl SolverRegistry {
    pub fn empty() -> Self {
        Self { entries: BTreeMap::new() }
    }

    /// Registry holding `simcim`, `nmfa` and `cim_physics`.
    pub fn builtin() -> Self {
        let mut r = Self::empty();
        r.register(simcim::NAME, simcim::factory, simcim::PARAM_KEYS);
        r.register(nmfa::NAME, nmfa::factory, nmfa::PARAM_KEYS);
        r.register(cim_physics::NAME, cim_physics::factory, cim_physics::PARAM_KEYS);
        r
    }

    /// Adds a solver. `keys` lists every parameter its factory accepts.
    pub fn register(&mut self, name: &'static str, factory: SolverFactory, keys: &'static [&'static str]) {
        self.entries.insert(name, Entry { factory, keys });
    }

    pub fn names(&self) -> impl Iterator<Item = &'static str> + '_ {
        self.entries.keys().copied()
    }

    pub fn param_keys(&self, name: &str) -> Option<&'static [&'static str]> {
        self.entries.get(name).map(|e| e.keys)
    }

    pub fn build(&self, name: &str, params: &ParamMap) -> Result<Box<dyn Solver>, SolverError> {
        let entry = self.entries.get(name).ok_or_else(|| SolverError::UnknownSolver(name.to_string()))?;
        (entry.factory)(params)
    }
}

impl Default for SolverRegistry {
    fn default() -> Self {
        Self::builtin()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunOutcome {
    pub seed: u64,
    pub config: SpinConfig,
    pub energy: f64,
    pub cut: f64,
    pub amplitudes: Vec<f64>,
}

#[derive(Clone, Copy, Debug)]
pub struct TraceOptions {
    /// Record every `stride`-th step (the last step is always recorded).
    pub stride: usize,
    /// Number of evenly spaced nodes whose amplitudes are recorded.
    pub sampled_nodes: usize,
}

impl Default for TraceOptions {
    fn default() -> Self {
        Self { stride: 1, sampled_nodes: 16 }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct TracePoint {
    /// Number of completed steps.
    pub iteration: usize,
    /// Schedule value used by the step that produced this point.
    pub control: f64,
    /// `None` when `x` or `J x` vanishes.
    pub eig_proximity: Option<f64>,
    pub amplitudes: Vec<f64>,
}

#[derive(Clone, Debug, Serialize)]
pub struct SolverTrace {
    pub sampled_nodes: Vec<usize>,
    pub points: Vec<TracePoint>,
}

fn outcome(problem: &IsingProblem, seed: u64, amplitudes: Vec<f64>) -> Result<RunOutcome, SolverError> {
    let config = spins_from_amplitudes(&amplitudes)?;
    let energy = problem.energy(&config)?;
    let cut = problem.cut_value(&config)?;
    Ok(RunOutcome { seed, config, energy, cut, amplitudes })
}

fn lane_column(amplitudes: &[f64], lanes: usize, lane: usize) -> Vec<f64> {
    amplitudes.iter().skip(lane).step_by(lanes).copied().collect()
}

/// Runs `seeds.len()` runs in lockstep to completion.
pub fn run_group(solver: &dyn Solver, problem: &IsingProblem, seeds: &[u64]) -> Result<Vec<RunOutcome>, SolverError> {
    let mut dynamics = solver.start(problem, seeds)?;
    for _ in 0..solver.iterations() {
        dynamics.step().map_err(|f| SolverError::Divergence { run: f.lane, iteration: f.iteration, detail: f.detail })?;
    }
    let lanes = dynamics.lanes();
    let amps = dynamics.amplitudes();
    seeds
        .iter()
        .enumerate()
        .map(|(r, &seed)| outcome(problem, seed, lane_column(amps, lanes, r)))
        .collect()
}

/// One run with the given seed.
pub fn run(solver: &dyn Solver, problem: &IsingProblem, seed: u64) -> Result<RunOutcome, SolverError> {
    Ok(run_group(solver, problem, &[seed])?.remove(0))
}

/// One run that also records its trajectory. The outcome is identical to
/// [`run`] with the same seed.
pub fn run_traced(
    solver: &dyn Solver,
    problem: &IsingProblem,
    seed: u64,
    options: &TraceOptions,
) -> Result<(RunOutcome, SolverTrace), SolverError> {
    let n = problem.n();
    let count = options.sampled_nodes.clamp(1, n);
    let sampled_nodes: Vec<usize> = (0..count).map(|k| k * n / count).collect();
    let stride = options.stride.max(1);
    let iterations = solver.iterations();
    let mut dynamics = solver.start(problem, &[seed])?;
    let mut points = Vec::new();
    let mut jx = vec![0.0; n];
    for t in 0..iterations {
        let control = dynamics.control();
        dynamics.step().map_err(|f| SolverError::Divergence { run: 0, iteration: f.iteration, detail: f.detail })?;
        if (t + 1) % stride == 0 || t + 1 == iterations {
            let x = dynamics.amplitudes();
            problem.mul_vec(x, &mut jx);
            points.push(TracePoint {
                iteration: t + 1,
                control,
                eig_proximity: eig_proximity_with_image(x, &jx).ok(),
                amplitudes: sampled_nodes.iter().map(|&i| x[i]).collect(),
            });
        }
    }
    let result = outcome(problem, seed, dynamics.amplitudes().to_vec())?;
    Ok((result, SolverTrace { sampled_nodes, points }))
}

#[derive(Clone, Copy, Debug)]
pub struct BatchOptions {
    /// Worker threads; `None` uses the ambient rayon pool.
    pub threads: Option<usize>,
    /// Upper bound on runs advanced together in one group.
    pub max_lanes: usize,
}

impl Default for BatchOptions {
    fn default() -> Self {
        Self { threads: None, max_lanes: 128 }
    }
}

impl BatchOptions {
    pub fn with_threads(threads: usize) -> Self {
        Self { threads: Some(threads), ..Self::default() }
    }
}

/// Contiguous run-index ranges, one per lockstep group.
fn partition(n_runs: usize, workers: usize, max_lanes: usize) -> Vec<std::ops::Range<usize>> {
    let by_size = n_runs.div_ceil(max_lanes.max(1));
    let groups = workers.max(by_size).clamp(1, n_runs);
    (0..groups).map(|g| (g * n_runs / groups)..((g + 1) * n_runs / groups)).collect()
}

/// Executes `n_runs` independent runs seeded by [`derive_seed`] from
/// `master_seed`. Results are ordered by run index and do not depend on the
/// thread count or grouping.
pub fn run_batch(
    solver: &dyn Solver,
    problem: &IsingProblem,
    n_runs: usize,
    master_seed: u64,
    options: &BatchOptions,
) -> Result<RunBatchResult, SolverError> {
    if n_runs == 0 {
        return Err(SolverError::InvalidParams("a batch needs at least one run".into()));
    }
    let seeds: Vec<u64> = (0..n_runs as u64).map(|i| derive_seed(master_seed, i)).collect();
    let started = Instant::now();
    let execute = |workers: usize| -> Vec<Result<(Vec<RunOutcome>, f64), SolverError>> {
        partition(n_runs, workers, options.max_lanes)
            .into_par_iter()
            .map(|range| {
                let t0 = Instant::now();
                let base = range.start;
                let out = run_group(solver, problem, &seeds[range]).map_err(|e| match e {
                    SolverError::Divergence { run, iteration, detail } => {
                        SolverError::Divergence { run: base + run, iteration, detail }
                    }
                    other => other,
                })?;
                let ms = t0.elapsed().as_secs_f64() * 1e3;
                Ok((out, ms))
            })
            .collect()
    };
    let groups = match options.threads {
        Some(threads) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(threads.max(1))
                .build()
                .map_err(|e| SolverError::InvalidParams(format!("thread pool: {e}")))?;
            pool.install(|| execute(threads.max(1)))
        }
        None => execute(rayon::current_num_threads()),
    };
    let mut outcomes = Vec::with_capacity(n_runs);
    let mut wall_ms = Vec::with_capacity(n_runs);
    for group in groups {
        let (runs, ms) = group?;
        let share = ms / runs.len() as f64;
        wall_ms.extend(std::iter::repeat_n(share, runs.len()));
        outcomes.extend(runs);
    }
    let total_wall_ms = started.elapsed().as_secs_f64() * 1e3;
    assemble(problem, outcomes, wall_ms, total_wall_ms)
}

fn assemble(
    problem: &IsingProblem,
    outcomes: Vec<RunOutcome>,
    wall_ms: Vec<f64>,
    total_wall_ms: f64,
) -> Result<RunBatchResult, SolverError> {
    let cuts: Vec<f64> = outcomes.iter().map(|o| o.cut).collect();
    let energies: Vec<f64> = outcomes.iter().map(|o| o.energy).collect();
    let seeds: Vec<u64> = outcomes.iter().map(|o| o.seed).collect();
    let best_run = (0..cuts.len()).fold(0, |best, k| if cuts[k] > cuts[best] { k } else { best });
    let stats = Stats::from_values(&cuts).map_err(|e| SolverError::Analysis(e.to_string()))?;
    let histogram =
        build_histogram(&cuts, default_bin_width(problem, &cuts)).map_err(|e| SolverError::Analysis(e.to_string()))?;
    Ok(RunBatchResult {
        seeds,
        cuts,
        energies,
        wall_ms,
        best_run,
        best_config: outcomes[best_run].config.clone(),
        stats,
        histogram,
        total_wall_ms,
    })
}
