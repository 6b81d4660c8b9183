//! Per-roundtrip integrator of the full coherent Ising machine model.
//!
//! Each pulse carries both quadratures `(x_i, p_i)`. One roundtrip applies
//!
//! ```text
//! dx_i =  w x_i - gamma x_i - s (x_i^2 + p_i^2) x_i + zeta (J x)_i + Re f_i
//! dp_i = -w p_i - gamma p_i - s (x_i^2 + p_i^2) p_i             + Im f_i
//! ```
//!
//! as an explicit map, with independent `N(0, noise^2)` quadrature noise.
//! The real parts of the noise are drawn first (node order), then the
//! imaginary parts, so the `x` noise matches the SimCIM stream for the same
//! seed.

use serde::Serialize;

use crate::analysis::RunBatchResult;
use crate::error::SolverError;
use crate::graph::IsingProblem;
use crate::params::{parse_auto, ParamMap};
use crate::seed::{run_rng, RunRng};
use crate::simcim::{auto_zeta, fill_noise};
use crate::solver::{self, BatchOptions, Dynamics, LaneFailure, RunOutcome, Solver, SolverTrace, TraceOptions};

pub const NAME: &str = "cim_physics";

pub const DEFAULT_ITERATIONS: usize = 1000;
pub const DEFAULT_GAIN: f64 = 0.15;
pub const DEFAULT_LINEAR_LOSS: f64 = 0.1;
pub const DEFAULT_NONLINEAR_LOSS: f64 = 0.05;
pub const DEFAULT_ZETA_SCALE: f64 = 0.05;
pub const DEFAULT_NOISE: f64 = 0.01;

pub const PARAM_KEYS: &[&str] = &["iterations", "seed", "gain", "loss", "nonlinear-loss", "zeta", "zeta-auto", "noise"];

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CimPhysicsParams {
    /// Parametric gain `w` per roundtrip.
    pub gain: f64,
    /// Linear loss `gamma`.
    pub linear_loss: f64,
    /// Nonlinear (saturation) loss `s`.
    pub nonlinear_loss: f64,
    pub zeta: f64,
    pub zeta_auto: Option<f64>,
    /// Standard deviation of each noise quadrature.
    pub noise_amplitude: f64,
    pub iterations: usize,
    pub seed: u64,
}

impl Default for CimPhysicsParams {
    fn default() -> Self {
        Self {
            gain: DEFAULT_GAIN,
            linear_loss: DEFAULT_LINEAR_LOSS,
            nonlinear_loss: DEFAULT_NONLINEAR_LOSS,
            zeta: 0.0,
            zeta_auto: Some(DEFAULT_ZETA_SCALE),
            noise_amplitude: DEFAULT_NOISE,
            iterations: DEFAULT_ITERATIONS,
            seed: 0,
        }
    }
}

impl CimPhysicsParams {
    /// Steady-state amplitude `sqrt((w - gamma) / s)` of an uncoupled mode
    /// above threshold.
    pub fn steady_amplitude(&self) -> Option<f64> {
        let net = self.gain - self.linear_loss;
        (net > 0.0).then(|| (net / self.nonlinear_loss).sqrt())
    }

    pub fn validate(&self) -> Result<(), SolverError> {
        let bad = |m: &str| Err(SolverError::InvalidParams(m.into()));
        if !self.gain.is_finite() {
            return bad("gain must be finite");
        }
        if !(self.linear_loss >= 0.0 && self.linear_loss.is_finite()) {
            return bad("loss must be non-negative");
        }
        if !(self.nonlinear_loss > 0.0 && self.nonlinear_loss.is_finite()) {
            return bad("nonlinear-loss must be positive");
        }
        match self.zeta_auto {
            Some(c) if !(c > 0.0 && c.is_finite()) => return bad("zeta-auto coefficient must be positive"),
            None if !self.zeta.is_finite() => return bad("zeta must be finite"),
            _ => {}
        }
        if !(self.noise_amplitude >= 0.0 && self.noise_amplitude.is_finite()) {
            return bad("noise must be non-negative");
        }
        if self.iterations == 0 {
            return bad("iterations must be at least 1");
        }
        Ok(())
    }

    pub fn from_map(map: &ParamMap) -> Result<Self, SolverError> {
        map.check_keys(NAME, PARAM_KEYS)?;
        let mut p = Self::default();
        p.iterations = map.parse_or("iterations", p.iterations)?;
        p.seed = map.parse_or("seed", 0)?;
        p.gain = map.parse_or("gain", p.gain)?;
        p.linear_loss = map.parse_or("loss", p.linear_loss)?;
        p.nonlinear_loss = map.parse_or("nonlinear-loss", p.nonlinear_loss)?;
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
        p.validate()?;
        Ok(p)
    }

    pub fn to_map(&self) -> ParamMap {
        let mut m = ParamMap::new();
        m.set("iterations", self.iterations)
            .set("seed", self.seed)
            .set("gain", self.gain)
            .set("loss", self.linear_loss)
            .set("nonlinear-loss", self.nonlinear_loss);
        match self.zeta_auto {
            Some(c) => m.set("zeta-auto", c),
            None => m.set("zeta", self.zeta),
        };
        m.set("noise", self.noise_amplitude);
        m
    }

    pub fn resolved(&self, problem: &IsingProblem) -> Self {
        let mut p = self.clone();
        if let Some(c) = p.zeta_auto.take() {
            p.zeta = auto_zeta(problem, c);
        }
        p
    }
}

#[derive(Clone, Debug)]
pub struct CimState {
    pub x: Vec<f64>,
    pub p: Vec<f64>,
    pub iteration: usize,
    pub rng: RunRng,
}

impl CimState {
    pub fn new(n: usize, seed: u64) -> Self {
        Self { x: vec![0.0; n], p: vec![0.0; n], iteration: 0, rng: run_rng(seed) }
    }
}

#[inline(always)]
fn roundtrip(x: &mut f64, p: &mut f64, jx: f64, fr: f64, fi: f64, c: &CimPhysicsParams) {
    let r2 = *x * *x + *p * *p;
    let dx = c.gain * *x - c.linear_loss * *x - c.nonlinear_loss * r2 * *x + c.zeta * jx + fr;
    let dp = -c.gain * *p - c.linear_loss * *p - c.nonlinear_loss * r2 * *p + fi;
    *x += dx;
    *p += dp;
}

fn divergence_detail(c: &CimPhysicsParams) -> String {
    format!(
        "non-finite amplitude: the cubic loss term s * amplitude^3 (s = {}) overshot; lower gain (w = {}) or zeta ({:e})",
        c.nonlinear_loss, c.gain, c.zeta
    )
}

/// One roundtrip with explicit noise quadratures.
pub fn cim_step_with_noise(
    problem: &IsingProblem,
    state: &mut CimState,
    params: &CimPhysicsParams,
    noise_re: &[f64],
    noise_im: &[f64],
) -> Result<(), SolverError> {
    let n = problem.n();
    if state.x.len() != n || state.p.len() != n || noise_re.len() != n || noise_im.len() != n {
        return Err(SolverError::InvalidParams(format!("state vectors must have length {n}")));
    }
    let mut jx = vec![0.0; n];
    problem.mul_vec(&state.x, &mut jx);
    for i in 0..n {
        roundtrip(&mut state.x[i], &mut state.p[i], jx[i], noise_re[i], noise_im[i], params);
    }
    if state.x.iter().chain(&state.p).any(|a| !a.is_finite()) {
        return Err(SolverError::Divergence { run: 0, iteration: state.iteration, detail: divergence_detail(params) });
    }
    state.iteration += 1;
    Ok(())
}

/// One roundtrip drawing noise from the state's stream.
pub fn cim_step(problem: &IsingProblem, state: &mut CimState, params: &CimPhysicsParams) -> Result<(), SolverError> {
    let n = problem.n();
    let mut re = vec![0.0; n];
    let mut im = vec![0.0; n];
    fill_noise(&mut re, std::slice::from_mut(&mut state.rng), params.noise_amplitude);
    fill_noise(&mut im, std::slice::from_mut(&mut state.rng), params.noise_amplitude);
    cim_step_with_noise(problem, state, params, &re, &im)
}

#[derive(Clone, Debug)]
pub struct CimPhysics {
    pub params: CimPhysicsParams,
}

impl CimPhysics {
    pub fn new(params: CimPhysicsParams) -> Result<Self, SolverError> {
        params.validate()?;
        Ok(Self { params })
    }
}

pub fn factory(map: &ParamMap) -> Result<Box<dyn Solver>, SolverError> {
    Ok(Box::new(CimPhysics::new(CimPhysicsParams::from_map(map)?)?))
}

impl Solver for CimPhysics {
    fn name(&self) -> &'static str {
        NAME
    }

    fn iterations(&self) -> usize {
        self.params.iterations
    }

    fn params(&self) -> ParamMap {
        self.params.to_map()
    }

    fn resolve(&self, problem: &IsingProblem) -> Result<Box<dyn Solver>, SolverError> {
        Ok(Box::new(CimPhysics { params: self.params.resolved(problem) }))
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
            p: vec![0.0; len],
            jx: vec![0.0; len],
            re: vec![0.0; len],
            im: vec![0.0; len],
            rngs: seeds.iter().map(|&s| run_rng(s)).collect(),
            t: 0,
        }))
    }
}

struct Lanes<'a> {
    problem: &'a IsingProblem,
    params: &'a CimPhysicsParams,
    lanes: usize,
    x: Vec<f64>,
    p: Vec<f64>,
    jx: Vec<f64>,
    re: Vec<f64>,
    im: Vec<f64>,
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
        self.params.gain
    }

    fn step(&mut self) -> Result<(), LaneFailure> {
        let c = self.params;
        self.problem.mul_lanes(&self.x, &mut self.jx, self.lanes);
        if c.noise_amplitude > 0.0 {
            // each lane draws its real then imaginary parts
            let lanes = self.lanes;
            for (r, rng) in self.rngs.iter_mut().enumerate() {
                fill_noise_lane(&mut self.re, r, lanes, rng, c.noise_amplitude);
                fill_noise_lane(&mut self.im, r, lanes, rng, c.noise_amplitude);
            }
        }
        for e in 0..self.x.len() {
            roundtrip(&mut self.x[e], &mut self.p[e], self.jx[e], self.re[e], self.im[e], c);
        }
        if let Some(e) = self.x.iter().zip(&self.p).position(|(a, b)| !(a.is_finite() && b.is_finite())) {
            return Err(LaneFailure { lane: e % self.lanes, iteration: self.t, detail: divergence_detail(c) });
        }
        self.t += 1;
        Ok(())
    }

    fn amplitudes(&self) -> &[f64] {
        &self.x
    }
}

fn fill_noise_lane(buf: &mut [f64], lane: usize, lanes: usize, rng: &mut RunRng, amplitude: f64) {
    use rand::Rng;
    use rand_distr::StandardNormal;
    for slot in buf.iter_mut().skip(lane).step_by(lanes) {
        *slot = amplitude * rng.sample::<f64, _>(StandardNormal);
    }
}

pub fn cim_run(
    problem: &IsingProblem,
    params: &CimPhysicsParams,
    trace: bool,
) -> Result<(RunOutcome, Option<SolverTrace>), SolverError> {
    let solver = CimPhysics::new(params.resolved(problem))?;
    if trace {
        let (o, t) = solver::run_traced(&solver, problem, params.seed, &TraceOptions::default())?;
        Ok((o, Some(t)))
    } else {
        Ok((solver::run(&solver, problem, params.seed)?, None))
    }
}

pub fn cim_run_batch(problem: &IsingProblem, params: &CimPhysicsParams, n_runs: usize) -> Result<RunBatchResult, SolverError> {
    let solver = CimPhysics::new(params.resolved(problem))?;
    solver::run_batch(&solver, problem, n_runs, params.seed, &BatchOptions::default())
}
