//! SimCIM: clamped linear amplitude dynamics driven by a pump-loss ramp.
//!
//! Each iteration computes the increment
//!
//! ```text
//! dx_i = v(t) x_i + zeta (J x)_i + f_i,      f_i ~ N(0, noise^2)
//! ```
//!
//! smooths it with momentum `m <- beta m + (1 - beta) dx` and moves the
//! amplitude to `x_i <- phi(x_i + m_i)`, where `phi` clamps to
//! `[-x_sat, x_sat]`. Runs start from `x = m = 0`; the noise seeds the
//! symmetry breaking. Spins are the signs of the final amplitudes.

use rand::Rng;
use rand_distr::StandardNormal;
use serde::Serialize;

use crate::analysis::dominant_eigenvalue;
use crate::error::SolverError;
use crate::graph::IsingProblem;
use crate::params::{parse_auto, ParamMap};
use crate::schedule::{PumpSchedule, ScheduleForm};
use crate::seed::{run_rng, RunRng};
use crate::solver::{self, BatchOptions, Dynamics, LaneFailure, RunOutcome, Solver, SolverTrace, TraceOptions};
use crate::analysis::RunBatchResult;

pub const NAME: &str = "simcim";

pub const DEFAULT_ITERATIONS: usize = 1000;
pub const DEFAULT_ZETA_SCALE: f64 = 5.0;
pub const DEFAULT_NOISE: f64 = 0.8;
pub const DEFAULT_X_SAT: f64 = 1.0;
pub const DEFAULT_BETA: f64 = 0.7;
pub const DEFAULT_V_START: f64 = -5.0;
pub const DEFAULT_V_END: f64 = 0.0;
pub const DEFAULT_STEEPNESS: f64 = 3.0;

pub const PARAM_KEYS: &[&str] = &[
    "iterations", "seed", "zeta", "zeta-auto", "noise", "x-sat", "beta", "schedule", "v-start", "v-end", "steepness",
];

/// Sign-preserving clamp to `[-x_sat, x_sat]`.
#[inline]
pub fn activation(x: f64, x_sat: f64) -> f64 {
    if x > x_sat {
        x_sat
    } else if x < -x_sat {
        -x_sat
    } else {
        x
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SimCimParams {
    /// Feedforward coupling strength. Overridden when `zeta_auto` is set.
    pub zeta: f64,
    /// When set, `zeta = c / lambda_max(J)` with this `c`.
    pub zeta_auto: Option<f64>,
    /// Standard deviation of the per-spin, per-step Gaussian noise.
    pub noise_amplitude: f64,
    pub x_sat: f64,
    pub momentum_beta: f64,
    /// Pump-loss `v(t)`; its duration is the iteration count.
    pub schedule: PumpSchedule,
    /// Run seed for single runs, master seed for batches.
    pub seed: u64,
}

impl Default for SimCimParams {
    fn default() -> Self {
        Self {
            zeta: 0.0,
            zeta_auto: Some(DEFAULT_ZETA_SCALE),
            noise_amplitude: DEFAULT_NOISE,
            x_sat: DEFAULT_X_SAT,
            momentum_beta: DEFAULT_BETA,
            schedule: PumpSchedule::tanh_ramp(DEFAULT_V_START, DEFAULT_V_END, DEFAULT_STEEPNESS, DEFAULT_ITERATIONS),
            seed: 0,
        }
    }
}

impl SimCimParams {
    pub fn iterations(&self) -> usize {
        self.schedule.duration
    }

    pub fn validate(&self) -> Result<(), SolverError> {
        let bad = |m: &str| Err(SolverError::InvalidParams(m.into()));
        self.schedule.validate()?;
        match self.zeta_auto {
            Some(c) if !(c > 0.0 && c.is_finite()) => return bad("zeta-auto coefficient must be positive"),
            None if !(self.zeta > 0.0 && self.zeta.is_finite()) => return bad("zeta must be positive"),
            _ => {}
        }
        if !(self.noise_amplitude >= 0.0 && self.noise_amplitude.is_finite()) {
            return bad("noise must be non-negative");
        }
        if !(self.x_sat > 0.0 && self.x_sat.is_finite()) {
            return bad("x-sat must be positive");
        }
        if !(0.0..1.0).contains(&self.momentum_beta) {
            return bad("beta must lie in [0, 1)");
        }
        Ok(())
    }

    /// Applies overrides from `map` on top of the defaults.
    pub fn from_map(map: &ParamMap) -> Result<Self, SolverError> {
        map.check_keys(NAME, PARAM_KEYS)?;
        let mut p = Self::default();
        let iterations = map.parse_or("iterations", DEFAULT_ITERATIONS)?;
        p.seed = map.parse_or("seed", 0)?;
        if let Some(z) = map.parse::<f64>("zeta")? {
            p.zeta = z;
            p.zeta_auto = None;
        }
        if let Some(auto) = parse_auto(map, "zeta-auto")? {
            if auto.is_some() && map.contains("zeta") {
                return Err(SolverError::InvalidParams("give either zeta or zeta-auto, not both".into()));
            }
            p.zeta_auto = auto;
        }
        p.noise_amplitude = map.parse_or("noise", p.noise_amplitude)?;
        p.x_sat = map.parse_or("x-sat", p.x_sat)?;
        p.momentum_beta = map.parse_or("beta", p.momentum_beta)?;
        p.schedule = schedule_from_map(map, iterations, (DEFAULT_V_START, DEFAULT_V_END, DEFAULT_STEEPNESS))?;
        p.validate()?;
        Ok(p)
    }

    pub fn to_map(&self) -> ParamMap {
        let mut m = ParamMap::new();
        m.set("iterations", self.iterations()).set("seed", self.seed);
        match self.zeta_auto {
            Some(c) => m.set("zeta-auto", c),
            None => m.set("zeta", self.zeta),
        };
        m.set("noise", self.noise_amplitude).set("x-sat", self.x_sat).set("beta", self.momentum_beta);
        schedule_to_map(&self.schedule, &mut m);
        m
    }

    /// Replaces an auto-scaled `zeta` with its value for `problem`.
    pub fn resolved(&self, problem: &IsingProblem) -> Self {
        let mut p = self.clone();
        if let Some(c) = p.zeta_auto.take() {
            p.zeta = auto_zeta(problem, c);
        }
        p
    }
}

/// `c / lambda_max(J)`, or `c` when `J` has no positive eigenvalue.
pub fn auto_zeta(problem: &IsingProblem, c: f64) -> f64 {
    let lambda = dominant_eigenvalue(problem);
    if lambda > 0.0 {
        c / lambda
    } else {
        c
    }
}

pub(crate) fn schedule_from_map(
    map: &ParamMap,
    iterations: usize,
    defaults: (f64, f64, f64),
) -> Result<PumpSchedule, SolverError> {
    let start = map.parse_or("v-start", defaults.0)?;
    let schedule = match map.get("schedule").map(str::trim).unwrap_or("tanh") {
        "tanh" => PumpSchedule::tanh_ramp(start, map.parse_or("v-end", defaults.1)?, map.parse_or("steepness", defaults.2)?, iterations),
        "constant" => {
            if map.contains("v-end") || map.contains("steepness") {
                return Err(SolverError::InvalidParams("a constant schedule takes only v-start".into()));
            }
            PumpSchedule::constant(start, iterations)
        }
        other => return Err(SolverError::InvalidParams(format!("unknown schedule `{other}`"))),
    };
    schedule.validate()?;
    Ok(schedule)
}

pub(crate) fn schedule_to_map(schedule: &PumpSchedule, m: &mut ParamMap) {
    match schedule.form {
        ScheduleForm::TanhRamp { start, end, steepness } => {
            m.set("schedule", "tanh").set("v-start", start).set("v-end", end).set("steepness", steepness);
        }
        ScheduleForm::Constant { value } => {
            m.set("schedule", "constant").set("v-start", value);
        }
    }
}

/// State of a single SimCIM run.
#[derive(Clone, Debug)]
pub struct SolverState {
    pub x: Vec<f64>,
    pub momentum: Vec<f64>,
    pub iteration: usize,
    pub rng: RunRng,
}

impl SolverState {
    pub fn new(n: usize, seed: u64) -> Self {
        Self { x: vec![0.0; n], momentum: vec![0.0; n], iteration: 0, rng: run_rng(seed) }
    }
}

#[inline(always)]
#[allow(clippy::too_many_arguments)]
fn update(x: &mut f64, m: &mut f64, jx: f64, f: f64, v: f64, zeta: f64, beta: f64, x_sat: f64) {
    let dx = v * *x + zeta * jx + f;
    *m = beta * *m + (1.0 - beta) * dx;
    *x = activation(*x + *m, x_sat);
}

fn divergence_detail(p: &SimCimParams, v: f64) -> String {
    format!("non-finite amplitude (zeta = {:e}, v = {v}, x-sat = {}); reduce zeta * lambda_max", p.zeta, p.x_sat)
}

/// Advances one run by a step, drawing `noise_amplitude * N(0, 1)` per spin.
/// `params.zeta` is used as given; resolve auto-scaling first.
pub fn step(problem: &IsingProblem, state: &mut SolverState, params: &SimCimParams) -> Result<(), SolverError> {
    let n = problem.n();
    let noise: Vec<f64> = if params.noise_amplitude > 0.0 {
        (0..n).map(|_| params.noise_amplitude * state.rng.sample::<f64, _>(StandardNormal)).collect()
    } else {
        vec![0.0; n]
    };
    step_with_noise(problem, state, params, &noise)
}

/// [`step`] with an explicit noise vector `f`.
pub fn step_with_noise(
    problem: &IsingProblem,
    state: &mut SolverState,
    params: &SimCimParams,
    noise: &[f64],
) -> Result<(), SolverError> {
    let n = problem.n();
    if state.x.len() != n || state.momentum.len() != n || noise.len() != n {
        return Err(SolverError::InvalidParams(format!("state vectors must have length {n}")));
    }
    let v = params.schedule.value(state.iteration)?;
    let mut jx = vec![0.0; n];
    problem.mul_vec(&state.x, &mut jx);
    for i in 0..n {
        update(&mut state.x[i], &mut state.momentum[i], jx[i], noise[i], v, params.zeta, params.momentum_beta, params.x_sat);
    }
    if state.x.iter().chain(&state.momentum).any(|a| !a.is_finite()) {
        return Err(SolverError::Divergence { run: 0, iteration: state.iteration, detail: divergence_detail(params, v) });
    }
    state.iteration += 1;
    Ok(())
}

/// Solver-registry handle around [`SimCimParams`].
#[derive(Clone, Debug)]
pub struct SimCim {
    pub params: SimCimParams,
}

impl SimCim {
    pub fn new(params: SimCimParams) -> Result<Self, SolverError> {
        params.validate()?;
        Ok(Self { params })
    }
}

pub fn factory(map: &ParamMap) -> Result<Box<dyn Solver>, SolverError> {
    Ok(Box::new(SimCim::new(SimCimParams::from_map(map)?)?))
}

impl Solver for SimCim {
    fn name(&self) -> &'static str {
        NAME
    }

    fn iterations(&self) -> usize {
        self.params.iterations()
    }

    fn params(&self) -> ParamMap {
        self.params.to_map()
    }

    fn resolve(&self, problem: &IsingProblem) -> Result<Box<dyn Solver>, SolverError> {
        Ok(Box::new(SimCim { params: self.params.resolved(problem) }))
    }

    fn start<'a>(&'a self, problem: &'a IsingProblem, seeds: &[u64]) -> Result<Box<dyn Dynamics + 'a>, SolverError> {
        if self.params.zeta_auto.is_some() {
            return Err(SolverError::InvalidParams("resolve zeta-auto before starting runs".into()));
        }
        let lanes = seeds.len();
        let len = problem.n() * lanes;
        Ok(Box::new(Lanes {
            problem,
            params: &self.params,
            lanes,
            x: vec![0.0; len],
            m: vec![0.0; len],
            jx: vec![0.0; len],
            noise: vec![0.0; len],
            rngs: seeds.iter().map(|&s| run_rng(s)).collect(),
            t: 0,
        }))
    }
}

struct Lanes<'a> {
    problem: &'a IsingProblem,
    params: &'a SimCimParams,
    lanes: usize,
    x: Vec<f64>,
    m: Vec<f64>,
    jx: Vec<f64>,
    noise: Vec<f64>,
    rngs: Vec<RunRng>,
    t: usize,
}

impl Dynamics for Lanes<'_> {
    fn lanes(&self) -> usize {
        self.lanes
    }

    fn iteration(&self) -> usize {
        self.t
    }

    fn control(&self) -> f64 {
        self.params.schedule.value_unchecked(self.t.min(self.params.iterations() - 1))
    }

    fn step(&mut self) -> Result<(), LaneFailure> {
        let p = self.params;
        let v = p.schedule.value_unchecked(self.t);
        self.problem.mul_lanes(&self.x, &mut self.jx, self.lanes);
        fill_noise(&mut self.noise, &mut self.rngs, p.noise_amplitude);
        for e in 0..self.x.len() {
            update(&mut self.x[e], &mut self.m[e], self.jx[e], self.noise[e], v, p.zeta, p.momentum_beta, p.x_sat);
        }
        if let Some(e) = self.x.iter().zip(&self.m).position(|(a, b)| !(a.is_finite() && b.is_finite())) {
            return Err(LaneFailure { lane: e % self.lanes, iteration: self.t, detail: divergence_detail(p, v) });
        }
        self.t += 1;
        Ok(())
    }

    fn amplitudes(&self) -> &[f64] {
        &self.x
    }
}

/// Fills a node-major buffer with `amplitude * N(0, 1)`, each lane drawing
/// from its own stream in node order. Draws nothing when `amplitude == 0`.
pub(crate) fn fill_noise(buf: &mut [f64], rngs: &mut [RunRng], amplitude: f64) {
    let lanes = rngs.len();
    if amplitude == 0.0 {
        buf.fill(0.0);
        return;
    }
    for (r, rng) in rngs.iter_mut().enumerate() {
        for slot in buf.iter_mut().skip(r).step_by(lanes) {
            *slot = amplitude * rng.sample::<f64, _>(StandardNormal);
        }
    }
}

/// Single run seeded with `params.seed`; `trace` also records the trajectory.
pub fn run(
    problem: &IsingProblem,
    params: &SimCimParams,
    trace: bool,
) -> Result<(RunOutcome, Option<SolverTrace>), SolverError> {
    let solver = SimCim::new(params.resolved(problem))?;
    if trace {
        let (o, t) = solver::run_traced(&solver, problem, params.seed, &TraceOptions::default())?;
        Ok((o, Some(t)))
    } else {
        Ok((solver::run(&solver, problem, params.seed)?, None))
    }
}

/// `n_runs` runs with seeds derived from `params.seed`.
pub fn run_batch(problem: &IsingProblem, params: &SimCimParams, n_runs: usize) -> Result<RunBatchResult, SolverError> {
    let solver = SimCim::new(params.resolved(problem))?;
    solver::run_batch(&solver, problem, n_runs, params.seed, &BatchOptions::default())
}
