//! Noisy mean-field annealing baseline.
//!
//! Each soft spin relaxes toward its mean-field value:
//!
//! ```text
//! x_i <- (1 - alpha) x_i + alpha tanh(zeta s(t) [(J x)_i + eta_i]),   eta_i ~ N(0, noise^2)
//! ```
//!
//! with an optional gain schedule `s(t)` (1 when absent). With
//! `noise-at = amplitude` the noise is added after the `tanh` instead:
//!
//! ```text
//! x_i <- (1 - alpha) x_i + alpha clamp(tanh(zeta s(t) (J x)_i) + eta_i)
//! ```

use serde::Serialize;

use crate::analysis::RunBatchResult;
use crate::error::SolverError;
use crate::graph::IsingProblem;
use crate::params::{parse_auto, ParamMap};
use crate::schedule::PumpSchedule;
use crate::seed::{run_rng, RunRng};
use crate::simcim::{auto_zeta, fill_noise, schedule_from_map, schedule_to_map};
use crate::solver::{self, BatchOptions, Dynamics, LaneFailure, RunOutcome, Solver, SolverTrace, TraceOptions};

pub const NAME: &str = "nmfa";

pub const DEFAULT_ITERATIONS: usize = 1000;
pub const DEFAULT_ALPHA: f64 = 0.6;
pub const DEFAULT_ZETA_SCALE: f64 = 2.0;
pub const DEFAULT_NOISE: f64 = 2.0;
pub const DEFAULT_S_START: f64 = 0.5;
pub const DEFAULT_S_END: f64 = 4.0;
pub const DEFAULT_STEEPNESS: f64 = 2.0;

/// Largest double below 1; `tanh` rounds to exactly 1 for large arguments.
const BELOW_ONE: f64 = 1.0 - f64::EPSILON / 2.0;

pub const PARAM_KEYS: &[&str] = &[
    "iterations", "seed", "alpha", "zeta", "zeta-auto", "noise", "noise-at", "schedule", "v-start", "v-end", "steepness",
];

/// Where the Gaussian noise enters the update.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum NoisePlacement {
    /// Added to the local field inside the `tanh`.
    #[default]
    Field,
    /// Added to the `tanh` output, clamped back into `(-1, 1)`.
    Amplitude,
}

impl NoisePlacement {
    fn parse(text: &str) -> Result<Self, SolverError> {
        match text.trim() {
            "field" => Ok(Self::Field),
            "amplitude" => Ok(Self::Amplitude),
            other => Err(SolverError::InvalidParams(format!("noise-at must be field or amplitude, got `{other}`"))),
        }
    }

    fn as_str(self) -> &'static str {
        match self {
            Self::Field => "field",
            Self::Amplitude => "amplitude",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct NmfaParams {
    /// Relaxation rate in `(0, 1]`.
    pub alpha: f64,
    pub zeta: f64,
    /// When set, `zeta = c / lambda_max(J)` with this `c`.
    pub zeta_auto: Option<f64>,
    /// Standard deviation of the noise `eta`.
    pub noise_amplitude: f64,
    pub noise_at: NoisePlacement,
    /// Gain `s(t)`; `None` holds it at 1.
    pub schedule: Option<PumpSchedule>,
    pub iterations: usize,
    pub seed: u64,
}

impl Default for NmfaParams {
    fn default() -> Self {
        Self {
            alpha: DEFAULT_ALPHA,
            zeta: 0.0,
            zeta_auto: Some(DEFAULT_ZETA_SCALE),
            noise_amplitude: DEFAULT_NOISE,
            noise_at: NoisePlacement::Field,
            schedule: Some(PumpSchedule::tanh_ramp(DEFAULT_S_START, DEFAULT_S_END, DEFAULT_STEEPNESS, DEFAULT_ITERATIONS)),
            iterations: DEFAULT_ITERATIONS,
            seed: 0,
        }
    }
}

impl NmfaParams {
    pub fn validate(&self) -> Result<(), SolverError> {
        let bad = |m: String| Err(SolverError::InvalidParams(m));
        if !(self.alpha > 0.0 && self.alpha <= 1.0) {
            return bad(format!("alpha must lie in (0, 1], got {}", self.alpha));
        }
        match self.zeta_auto {
            Some(c) if !(c > 0.0 && c.is_finite()) => return bad("zeta-auto coefficient must be positive".into()),
            None if !(self.zeta > 0.0 && self.zeta.is_finite()) => return bad("zeta must be positive".into()),
            _ => {}
        }
        if !(self.noise_amplitude >= 0.0 && self.noise_amplitude.is_finite()) {
            return bad("noise must be non-negative".into());
        }
        if self.iterations == 0 {
            return bad("iterations must be at least 1".into());
        }
        if let Some(s) = &self.schedule {
            s.validate()?;
            if s.duration != self.iterations {
                return bad(format!("schedule length {} differs from iterations {}", s.duration, self.iterations));
            }
        }
        Ok(())
    }

    pub fn from_map(map: &ParamMap) -> Result<Self, SolverError> {
        map.check_keys(NAME, PARAM_KEYS)?;
        let mut p = Self { iterations: map.parse_or("iterations", DEFAULT_ITERATIONS)?, ..Self::default() };
        p.seed = map.parse_or("seed", 0)?;
        p.alpha = map.parse_or("alpha", p.alpha)?;
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
        if let Some(at) = map.get("noise-at") {
            p.noise_at = NoisePlacement::parse(at)?;
        }
        p.schedule = if map.get("schedule").map(str::trim) == Some("none") {
            if ["v-start", "v-end", "steepness"].iter().any(|k| map.contains(k)) {
                return Err(SolverError::InvalidParams("schedule = none takes no schedule values".into()));
            }
            None
        } else {
            Some(schedule_from_map(map, p.iterations, (DEFAULT_S_START, DEFAULT_S_END, DEFAULT_STEEPNESS))?)
        };
        p.validate()?;
        Ok(p)
    }

    pub fn to_map(&self) -> ParamMap {
        let mut m = ParamMap::new();
        m.set("iterations", self.iterations).set("seed", self.seed).set("alpha", self.alpha);
        match self.zeta_auto {
            Some(c) => m.set("zeta-auto", c),
            None => m.set("zeta", self.zeta),
        };
        m.set("noise", self.noise_amplitude).set("noise-at", self.noise_at.as_str());
        match &self.schedule {
            Some(s) => schedule_to_map(s, &mut m),
            None => {
                m.set("schedule", "none");
            }
        }
        m
    }

    pub fn resolved(&self, problem: &IsingProblem) -> Self {
        let mut p = self.clone();
        if let Some(c) = p.zeta_auto.take() {
            p.zeta = auto_zeta(problem, c);
        }
        p
    }

    fn gain(&self, t: usize) -> f64 {
        self.schedule.as_ref().map_or(1.0, |s| s.value_unchecked(t))
    }
}

#[inline(always)]
fn relax(x: f64, field: f64, eta: f64, alpha: f64, scale: f64, at: NoisePlacement) -> f64 {
    let target = match at {
        NoisePlacement::Field => (scale * (field + eta)).tanh(),
        NoisePlacement::Amplitude => (scale * field).tanh() + eta,
    }
    .clamp(-BELOW_ONE, BELOW_ONE);
    ((1.0 - alpha) * x + alpha * target).clamp(-BELOW_ONE, BELOW_ONE)
}

/// One relaxation step of a single run at iteration `t` with explicit field
/// noise `eta`. `params.zeta` is used as given.
pub fn nmfa_step_with_noise(
    problem: &IsingProblem,
    x: &[f64],
    params: &NmfaParams,
    t: usize,
    eta: &[f64],
) -> Result<Vec<f64>, SolverError> {
    let n = problem.n();
    if x.len() != n || eta.len() != n {
        return Err(SolverError::InvalidParams(format!("vectors must have length {n}")));
    }
    if t >= params.iterations {
        return Err(SolverError::InvalidParams(format!("iteration {t} beyond {}", params.iterations)));
    }
    if let Some(i) = x.iter().position(|a| !a.is_finite()) {
        return Err(SolverError::Divergence { run: 0, iteration: t, detail: format!("non-finite input amplitude at node {i}") });
    }
    let mut jx = vec![0.0; n];
    problem.mul_vec(x, &mut jx);
    let scale = params.zeta * params.gain(t);
    Ok((0..n).map(|i| relax(x[i], jx[i], eta[i], params.alpha, scale, params.noise_at)).collect())
}

/// One relaxation step drawing the field noise from `rng`.
pub fn nmfa_step(
    problem: &IsingProblem,
    x: &[f64],
    params: &NmfaParams,
    t: usize,
    rng: &mut RunRng,
) -> Result<Vec<f64>, SolverError> {
    let mut eta = vec![0.0; problem.n()];
    fill_noise(&mut eta, std::slice::from_mut(rng), params.noise_amplitude);
    nmfa_step_with_noise(problem, x, params, t, &eta)
}

#[derive(Clone, Debug)]
pub struct Nmfa {
    pub params: NmfaParams,
}

impl Nmfa {
    pub fn new(params: NmfaParams) -> Result<Self, SolverError> {
        params.validate()?;
        Ok(Self { params })
    }
}

pub fn factory(map: &ParamMap) -> Result<Box<dyn Solver>, SolverError> {
    Ok(Box::new(Nmfa::new(NmfaParams::from_map(map)?)?))
}

impl Solver for Nmfa {
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
        Ok(Box::new(Nmfa { params: self.params.resolved(problem) }))
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
            jx: vec![0.0; len],
            eta: vec![0.0; len],
            rngs: seeds.iter().map(|&s| run_rng(s)).collect(),
            t: 0,
        }))
    }
}

struct Lanes<'a> {
    problem: &'a IsingProblem,
    params: &'a NmfaParams,
    lanes: usize,
    x: Vec<f64>,
    jx: Vec<f64>,
    eta: Vec<f64>,
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
        self.params.gain(self.t.min(self.params.iterations - 1))
    }

    fn step(&mut self) -> Result<(), LaneFailure> {
        let p = self.params;
        let scale = p.zeta * p.gain(self.t);
        self.problem.mul_lanes(&self.x, &mut self.jx, self.lanes);
        fill_noise(&mut self.eta, &mut self.rngs, p.noise_amplitude);
        for e in 0..self.x.len() {
            self.x[e] = relax(self.x[e], self.jx[e], self.eta[e], p.alpha, scale, p.noise_at);
        }
        if let Some(e) = self.x.iter().position(|a| !a.is_finite()) {
            return Err(LaneFailure {
                lane: e % self.lanes,
                iteration: self.t,
                detail: format!("non-finite amplitude (zeta = {}, gain = {})", p.zeta, p.gain(self.t)),
            });
        }
        self.t += 1;
        Ok(())
    }

    fn amplitudes(&self) -> &[f64] {
        &self.x
    }
}

pub fn nmfa_run(
    problem: &IsingProblem,
    params: &NmfaParams,
    trace: bool,
) -> Result<(RunOutcome, Option<SolverTrace>), SolverError> {
    let solver = Nmfa::new(params.resolved(problem))?;
    if trace {
        let (o, t) = solver::run_traced(&solver, problem, params.seed, &TraceOptions::default())?;
        Ok((o, Some(t)))
    } else {
        Ok((solver::run(&solver, problem, params.seed)?, None))
    }
}

pub fn nmfa_run_batch(problem: &IsingProblem, params: &NmfaParams, n_runs: usize) -> Result<RunBatchResult, SolverError> {
    let solver = Nmfa::new(params.resolved(problem))?;
    solver::run_batch(&solver, problem, n_runs, params.seed, &BatchOptions::default())
}
