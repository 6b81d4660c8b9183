//! Serialized run artifacts: per-run CSV, JSON summary and trace CSV.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use serde::Serialize;
use simcim::analysis::{Histogram, RunBatchResult, Stats};
use simcim::graph::IsingProblem;
use simcim::solver::SolverTrace;
use simcim::ParamMap;

use crate::error::CliError;

/// Version of the CSV column layout and JSON schema.
pub const SCHEMA_VERSION: u32 = 1;

/// GPU time per run quoted as context for the CPU timings.
pub const REFERENCE_GPU_MS_PER_RUN: f64 = 4.0;

pub const RESULTS_FILE: &str = "results.csv";
pub const SUMMARY_FILE: &str = "summary.json";
pub const TRACE_FILE: &str = "trace.csv";

#[derive(Clone, Debug, Serialize)]
pub struct ProblemInfo {
    pub name: String,
    pub source: String,
    pub n: usize,
    pub edges: usize,
    pub density: f64,
    pub storage: String,
    /// Constant `C` in `cut = C - energy / 2`.
    pub cut_offset: f64,
}

impl ProblemInfo {
    pub fn new(problem: &IsingProblem, source: String) -> Self {
        Self {
            name: problem.name().to_string(),
            source,
            n: problem.n(),
            edges: problem.edge_count(),
            density: problem.density(),
            storage: problem.storage().to_string(),
            cut_offset: problem.cut_offset(),
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct BestRun {
    pub run_index: usize,
    pub seed: u64,
    pub cut: f64,
    pub energy: f64,
    pub spins: Vec<i8>,
}

#[derive(Clone, Debug, Serialize)]
pub struct Timing {
    pub total_wall_ms: f64,
    pub mean_run_wall_ms: f64,
    pub reference_gpu_ms_per_run: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct Summary {
    pub schema_version: u32,
    pub solver: String,
    /// Flat settings that reproduce the run when loaded with `--config`.
    pub config: BTreeMap<String, String>,
    /// Solver parameters after problem-dependent resolution.
    pub resolved_params: BTreeMap<String, String>,
    pub problem: ProblemInfo,
    pub runs: usize,
    pub master_seed: u64,
    pub stats: Stats,
    pub histogram: Histogram,
    pub best: BestRun,
    pub timing: Timing,
}

impl Summary {
    pub fn new(
        solver: &str,
        config: &ParamMap,
        resolved: &ParamMap,
        problem: ProblemInfo,
        master_seed: u64,
        batch: &RunBatchResult,
    ) -> Self {
        let to_btree = |m: &ParamMap| m.iter().map(|(k, v)| (k.to_string(), v.to_string())).collect();
        let b = batch.best_run;
        Self {
            schema_version: SCHEMA_VERSION,
            solver: solver.to_string(),
            config: to_btree(config),
            resolved_params: to_btree(resolved),
            problem,
            runs: batch.runs(),
            master_seed,
            stats: batch.stats,
            histogram: batch.histogram.clone(),
            best: BestRun {
                run_index: b,
                seed: batch.seeds[b],
                cut: batch.cuts[b],
                energy: batch.energies[b],
                spins: batch.best_config.as_slice().to_vec(),
            },
            timing: Timing {
                total_wall_ms: batch.total_wall_ms,
                mean_run_wall_ms: batch.wall_ms.iter().sum::<f64>() / batch.runs() as f64,
                reference_gpu_ms_per_run: REFERENCE_GPU_MS_PER_RUN,
            },
        }
    }
}

fn csv_error(path: &Path, e: csv::Error) -> CliError {
    CliError::io(path, std::io::Error::other(e))
}

/// `run_index,seed,cut,energy,wall_time_ms`, one row per run. Floats use
/// the shortest representation that parses back to the same value.
pub fn results_csv(batch: &RunBatchResult, path: &Path) -> Result<Vec<u8>, CliError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let err = |e| csv_error(path, e);
    w.write_record(["run_index", "seed", "cut", "energy", "wall_time_ms"]).map_err(err)?;
    for k in 0..batch.runs() {
        w.write_record([
            k.to_string(),
            batch.seeds[k].to_string(),
            batch.cuts[k].to_string(),
            batch.energies[k].to_string(),
            format!("{:.3}", batch.wall_ms[k]),
        ])
        .map_err(err)?;
    }
    w.into_inner().map_err(|e| CliError::io(path, e.into_error()))
}

/// `iteration,v,eig_proximity,x_<node>...`. A missing proximity (zero
/// amplitude vector) is left empty.
pub fn trace_csv(trace: &SolverTrace, path: &Path) -> Result<Vec<u8>, CliError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let err = |e| csv_error(path, e);
    let mut header = vec!["iteration".to_string(), "v".to_string(), "eig_proximity".to_string()];
    header.extend(trace.sampled_nodes.iter().map(|i| format!("x_{i}")));
    w.write_record(&header).map_err(err)?;
    for p in &trace.points {
        let mut row = vec![p.iteration.to_string(), p.control.to_string()];
        row.push(p.eig_proximity.map(|d| d.to_string()).unwrap_or_default());
        row.extend(p.amplitudes.iter().map(f64::to_string));
        w.write_record(&row).map_err(err)?;
    }
    w.into_inner().map_err(|e| CliError::io(path, e.into_error()))
}

/// Rendered artifacts of one run, written together once complete.
pub struct Artifacts {
    pub results: Vec<u8>,
    pub summary: Vec<u8>,
    pub trace: Option<Vec<u8>>,
}

impl Artifacts {
    pub fn render(summary: &Summary, batch: &RunBatchResult, trace: Option<&SolverTrace>, dir: &Path) -> Result<Self, CliError> {
        let results = results_csv(batch, &dir.join(RESULTS_FILE))?;
        let mut json = serde_json::to_vec_pretty(summary)
            .map_err(|e| CliError::io(dir.join(SUMMARY_FILE), std::io::Error::other(e)))?;
        json.push(b'\n');
        let trace = trace.map(|t| trace_csv(t, &dir.join(TRACE_FILE))).transpose()?;
        Ok(Self { results, summary: json, trace })
    }

    pub fn write(&self, dir: &Path) -> Result<(), CliError> {
        fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
        let put = |name: &str, bytes: &[u8]| {
            let path = dir.join(name);
            fs::write(&path, bytes).map_err(|e| CliError::io(path, e))
        };
        put(RESULTS_FILE, &self.results)?;
        put(SUMMARY_FILE, &self.summary)?;
        if let Some(trace) = &self.trace {
            put(TRACE_FILE, trace)?;
        }
        Ok(())
    }
}
