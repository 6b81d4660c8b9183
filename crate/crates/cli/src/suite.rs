//! Benchmark suites: several problems, several solvers, one report.
//!
//! A manifest lists one problem per line:
//!
//! ```text
//! # name   source                       overrides
//! g22      gset:graphs/G22.txt
//! r07      generate:800,gaussian,7      runs=50 simcim.noise=0.1
//! ```
//!
//! Relative `gset:` paths are resolved against the manifest's directory.
//! Overrides are `key=value`; a `solver.key=value` override applies only
//! to that solver, an unscoped solver key applies to every selected solver
//! that accepts it.

use std::collections::BTreeSet;
use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;
use simcim::{ParamMap, SolverRegistry};

use crate::config::{normalize_key, unknown_solver, RunSpec, DEFAULT_OUT_DIR, RUN_KEYS};
use crate::error::CliError;
use crate::output::SCHEMA_VERSION;
use crate::run::{compute_on, load_problem, Completed};

pub const DEFAULT_SUITE_SOLVERS: &str = "simcim,nmfa";
pub const REPORT_FILE: &str = "report.json";

/// Run-level keys a manifest line may override.
const ENTRY_RUN_KEYS: &[&str] = &["runs", "seed", "trace", "trace-stride", "trace-nodes"];

#[derive(Clone, Debug, PartialEq)]
pub struct ManifestEntry {
    pub name: String,
    /// `graph`/`format` or `generate` settings.
    pub source: ParamMap,
    pub overrides: ParamMap,
}

pub fn parse_manifest(text: &str, base_dir: &Path) -> Result<Vec<ManifestEntry>, CliError> {
    let mut entries = Vec::new();
    let mut names = BTreeSet::new();
    for (k, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let bad = |why: String| CliError::Config(format!("manifest line {}: {why}", k + 1));
        let mut fields = line.split_whitespace();
        let name = fields.next().unwrap_or_default().to_string();
        if !name.chars().all(|c| c.is_ascii_alphanumeric() || "-_.".contains(c)) || name.starts_with('.') {
            return Err(bad(format!("`{name}` is not a valid entry name")));
        }
        if !names.insert(name.clone()) {
            return Err(bad(format!("duplicate entry `{name}`")));
        }
        let source_text = fields.next().ok_or_else(|| bad("missing problem source".into()))?;
        let source = match source_text.split_once(':') {
            Some(("gset", path)) => {
                let path = base_dir.join(path);
                ParamMap::new().with("graph", path.display()).with("format", "gset")
            }
            Some(("generate", spec)) => ParamMap::new().with("generate", spec),
            _ => return Err(bad(format!("source `{source_text}` must be gset:PATH or generate:N,DIST,SEED"))),
        };
        let mut overrides = ParamMap::new();
        for field in fields {
            let (key, value) = field.split_once('=').ok_or_else(|| bad(format!("expected key=value, got `{field}`")))?;
            let key = normalize_key(key);
            if RUN_KEYS.contains(&key.as_str()) && !ENTRY_RUN_KEYS.contains(&key.as_str()) {
                return Err(bad(format!("`{key}` cannot be set per entry")));
            }
            overrides.set(key, value);
        }
        entries.push(ManifestEntry { name, source, overrides });
    }
    if entries.is_empty() {
        return Err(CliError::Config("manifest lists no problems".into()));
    }
    Ok(entries)
}

#[derive(Clone, Debug, Serialize)]
pub struct EntryReport {
    pub problem: String,
    pub solver: String,
    pub status: &'static str,
    pub error: Option<String>,
    pub exit_status: Option<u8>,
    pub output_dir: String,
    pub n: Option<usize>,
    pub runs: Option<usize>,
    pub mean_cut: Option<f64>,
    pub max_cut: Option<f64>,
    pub min_cut: Option<f64>,
    pub std_cut: Option<f64>,
    pub total_wall_ms: Option<f64>,
}

/// Cross-problem statistics over one solver's successful entries.
#[derive(Clone, Debug, Serialize)]
pub struct Aggregate {
    pub solver: String,
    pub problems: usize,
    pub mean_of_means: Option<f64>,
    pub mean_of_maxes: Option<f64>,
}

#[derive(Clone, Debug, Serialize)]
pub struct Report {
    pub schema_version: u32,
    pub solvers: Vec<String>,
    pub entries: Vec<EntryReport>,
    pub aggregates: Vec<Aggregate>,
    pub failed: usize,
}

/// Splits the global settings into the base map and the selected solvers,
/// and checks that every solver key is accepted by at least one solver.
fn solvers_and_base(global: &ParamMap, registry: &SolverRegistry) -> Result<(Vec<String>, ParamMap), CliError> {
    let list = global.get("solver").unwrap_or(DEFAULT_SUITE_SOLVERS);
    let mut solvers: Vec<String> = Vec::new();
    for name in list.split(',').map(str::trim).filter(|s| !s.is_empty()) {
        if registry.param_keys(name).is_none() {
            return Err(unknown_solver(name, registry));
        }
        if !solvers.iter().any(|s| s == name) {
            solvers.push(name.to_string());
        }
    }
    if solvers.is_empty() {
        return Err(CliError::Config("no solver selected".into()));
    }
    for key in ["graph", "generate", "format"] {
        if global.contains(key) {
            return Err(CliError::Config(format!("`{key}` is set per manifest entry, not globally")));
        }
    }
    let base: ParamMap = global
        .iter()
        .filter(|(k, _)| !matches!(*k, "solver" | "manifest" | "out-dir"))
        .map(|(k, v)| (k.to_string(), v.to_string()))
        .collect();
    Ok((solvers, base))
}

/// Settings for one solver: run keys pass through, scoped keys for this
/// solver are unwrapped, unscoped solver keys are kept only if accepted.
fn settings_for(solver: &str, layers: &[&ParamMap], registry: &SolverRegistry, solvers: &[String]) -> Result<ParamMap, CliError> {
    let accepted = registry.param_keys(solver).unwrap_or_default();
    let mut out = ParamMap::new().with("solver", solver);
    for layer in layers {
        for (key, value) in layer.iter() {
            if let Some((scope, inner)) = key.split_once('.') {
                if !solvers.iter().any(|s| s == scope) {
                    return Err(CliError::Config(format!("`{key}` is scoped to a solver that is not selected")));
                }
                if scope == solver {
                    out.set(inner, value);
                }
            } else if RUN_KEYS.contains(&key) || accepted.contains(&key) {
                out.set(key, value);
            } else if !solvers.iter().any(|s| registry.param_keys(s).unwrap_or_default().contains(&key)) {
                return Err(CliError::Config(format!("no selected solver accepts `{key}`")));
            }
        }
    }
    Ok(out)
}

/// Runs every manifest entry with every selected solver. Per-entry
/// failures are recorded in the report; the suite then fails as a whole.
pub fn benchmark_suite(manifest: &Path, global: &ParamMap, registry: &SolverRegistry) -> Result<Report, CliError> {
    if !manifest.is_file() {
        return Err(CliError::Config(format!("manifest {} not found", manifest.display())));
    }
    let text = fs::read_to_string(manifest).map_err(|e| CliError::io(manifest, e))?;
    let base_dir = manifest.parent().unwrap_or(Path::new("."));
    let entries = parse_manifest(&text, base_dir)?;
    let (solvers, base) = solvers_and_base(global, registry)?;
    let out_root = PathBuf::from(global.get("out-dir").unwrap_or(DEFAULT_OUT_DIR));

    // Validate every (entry, solver) pair before running anything.
    let mut plan = Vec::new();
    for entry in &entries {
        let mut specs = Vec::new();
        for solver in &solvers {
            let mut map = settings_for(solver, &[&base, &entry.overrides], registry, &solvers)?;
            map.merge(&entry.source);
            map.set("out-dir", out_root.join(&entry.name).join(solver).display());
            let spec = RunSpec::from_map(&map, registry)
                .map_err(|e| CliError::Config(format!("entry `{}`, solver {solver}: {e}", entry.name)))?;
            specs.push(spec);
        }
        plan.push((entry, specs));
    }

    let mut reports = Vec::new();
    for (entry, specs) in &plan {
        let problem = load_problem(&specs[0].source);
        for spec in specs {
            let outcome = match &problem {
                Err(e) => Err(Failure(e.to_string(), e.exit_status())),
                Ok(p) => compute_on(spec, registry, p)
                    .and_then(|done| done.write(&spec.out_dir).map(|_| done))
                    .map_err(Failure::from),
            };
            reports.push(entry_report(&entry.name, spec, outcome));
        }
    }

    let aggregates = solvers
        .iter()
        .map(|solver| {
            let ok: Vec<&EntryReport> = reports.iter().filter(|r| &r.solver == solver && r.status == "ok").collect();
            let mean = |f: fn(&EntryReport) -> Option<f64>| {
                (!ok.is_empty()).then(|| ok.iter().filter_map(|r| f(r)).sum::<f64>() / ok.len() as f64)
            };
            Aggregate {
                solver: solver.clone(),
                problems: ok.len(),
                mean_of_means: mean(|r| r.mean_cut),
                mean_of_maxes: mean(|r| r.max_cut),
            }
        })
        .collect();
    let failed = reports.iter().filter(|r| r.status != "ok").count();
    let report = Report { schema_version: SCHEMA_VERSION, solvers, entries: reports, aggregates, failed };

    fs::create_dir_all(&out_root).map_err(|e| CliError::io(&out_root, e))?;
    let path = out_root.join(REPORT_FILE);
    let mut json = serde_json::to_vec_pretty(&report).map_err(|e| CliError::io(&path, std::io::Error::other(e)))?;
    json.push(b'\n');
    fs::write(&path, json).map_err(|e| CliError::io(&path, e))?;
    Ok(report)
}

/// Message and exit status of a failed entry.
struct Failure(String, u8);

impl From<CliError> for Failure {
    fn from(e: CliError) -> Self {
        Failure(e.to_string(), e.exit_status())
    }
}

fn entry_report(name: &str, spec: &RunSpec, outcome: Result<Completed, Failure>) -> EntryReport {
    let mut r = EntryReport {
        problem: name.to_string(),
        solver: spec.solver.clone(),
        status: "ok",
        error: None,
        exit_status: None,
        output_dir: spec.out_dir.display().to_string(),
        n: None,
        runs: None,
        mean_cut: None,
        max_cut: None,
        min_cut: None,
        std_cut: None,
        total_wall_ms: None,
    };
    match outcome {
        Ok(done) => {
            let s = &done.summary;
            r.n = Some(s.problem.n);
            r.runs = Some(s.runs);
            r.mean_cut = Some(s.stats.mean);
            r.max_cut = Some(s.stats.max);
            r.min_cut = Some(s.stats.min);
            r.std_cut = Some(s.stats.std);
            r.total_wall_ms = Some(s.timing.total_wall_ms);
        }
        Err(Failure(message, status)) => {
            r.status = "failed";
            r.error = Some(message);
            r.exit_status = Some(status);
        }
    }
    r
}
