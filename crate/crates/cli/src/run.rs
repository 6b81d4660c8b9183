use std::fs::File;
use std::io::BufReader;
use std::path::Path;

use simcim::analysis::RunBatchResult;
use simcim::graph::{generate_random, parse_gset, IsingProblem};
use simcim::seed::derive_seed;
use simcim::solver::{run_batch, run_traced, SolverTrace};
use simcim::SolverRegistry;

use crate::config::{ProblemSource, RunSpec};
use crate::error::CliError;
use crate::output::{Artifacts, ProblemInfo, Summary};

/// Reads or generates the problem. A missing file is a configuration
/// error; an unreadable or malformed one is an I/O or parse error.
pub fn load_problem(source: &ProblemSource) -> Result<IsingProblem, CliError> {
    match source {
        ProblemSource::Gset(path) => {
            if !path.is_file() {
                return Err(CliError::Config(format!("graph file {} not found", path.display())));
            }
            let file = File::open(path).map_err(|e| CliError::io(path, e))?;
            let problem = parse_gset(BufReader::new(file)).map_err(|e| CliError::from_graph(e, &source.describe()))?;
            let name = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
            Ok(problem.with_name(name))
        }
        ProblemSource::Generate(spec) => generate_random(spec).map_err(|e| CliError::from_graph(e, &source.describe())),
    }
}

/// Everything a completed run produced, before anything is written.
pub struct Completed {
    pub summary: Summary,
    pub batch: RunBatchResult,
    pub trace: Option<SolverTrace>,
}

/// Runs the batch (and the optional traced run) without touching the
/// file system beyond reading the problem.
pub fn compute(spec: &RunSpec, registry: &SolverRegistry) -> Result<Completed, CliError> {
    let problem = load_problem(&spec.source)?;
    compute_on(spec, registry, &problem)
}

pub(crate) fn compute_on(spec: &RunSpec, registry: &SolverRegistry, problem: &IsingProblem) -> Result<Completed, CliError> {
    let origin = spec.source.describe();
    let solver = registry.build(&spec.solver, &spec.solver_params).map_err(|e| CliError::from_solver(e, &origin))?;
    let resolved = solver.resolve(problem).map_err(|e| CliError::from_solver(e, &origin))?;
    let batch = run_batch(resolved.as_ref(), problem, spec.runs, spec.seed, &spec.batch_options())
        .map_err(|e| CliError::from_solver(e, &origin))?;
    let trace = match &spec.trace {
        Some(options) => {
            let (_, trace) = run_traced(resolved.as_ref(), problem, derive_seed(spec.seed, 0), options)
                .map_err(|e| CliError::from_solver(e, &origin))?;
            Some(trace)
        }
        None => None,
    };
    let summary = Summary::new(
        &spec.solver,
        &spec.echo(&solver.params()),
        &resolved.params(),
        ProblemInfo::new(problem, origin),
        spec.seed,
        &batch,
    );
    Ok(Completed { summary, batch, trace })
}

impl Completed {
    pub fn write(&self, dir: &Path) -> Result<(), CliError> {
        Artifacts::render(&self.summary, &self.batch, self.trace.as_ref(), dir)?.write(dir)
    }
}

/// Executes a single run and writes `results.csv`, `summary.json` and,
/// when tracing, `trace.csv` into the spec's output directory. Nothing is
/// written unless every run succeeds.
pub fn execute(spec: &RunSpec, registry: &SolverRegistry) -> Result<Summary, CliError> {
    let done = compute(spec, registry)?;
    done.write(&spec.out_dir)?;
    Ok(done.summary)
}
