//! Command-line harness around the `simcim` solvers.
//!
//! A single run loads or generates one problem, executes a seeded batch
//! and writes `results.csv`, `summary.json` and optionally `trace.csv`.
//! A manifest run does the same for many problems and solvers and adds a
//! `report.json` with cross-problem aggregates.

pub mod args;
pub mod config;
pub mod error;
pub mod output;
pub mod run;
pub mod suite;

use std::path::Path;

use simcim::{ParamMap, SolverRegistry};

pub use config::RunSpec;
pub use error::CliError;

/// What a successful invocation produced.
pub enum Outcome {
    Single(Box<output::Summary>),
    Suite(suite::Report),
}

/// Merges defaults, the optional config file and command-line settings
/// (later wins), then runs a single problem or a manifest suite.
pub fn dispatch(cli: &ParamMap, registry: &SolverRegistry) -> Result<Outcome, CliError> {
    let mut settings = match cli.get("config") {
        Some(path) => config::load_config_file(Path::new(path))?,
        None => ParamMap::new(),
    };
    let mut overrides = cli.clone();
    overrides.remove("config");
    settings.merge(&overrides);
    settings.remove("config");

    match settings.get("manifest").map(str::to_string) {
        Some(manifest) => {
            let report = suite::benchmark_suite(Path::new(&manifest), &settings, registry)?;
            if report.failed > 0 {
                return Err(CliError::SuiteFailed { failed: report.failed, total: report.entries.len() });
            }
            Ok(Outcome::Suite(report))
        }
        None => {
            let spec = RunSpec::from_map(&settings, registry)?;
            Ok(Outcome::Single(Box::new(run::execute(&spec, registry)?)))
        }
    }
}
