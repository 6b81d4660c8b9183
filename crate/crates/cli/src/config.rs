//! Layered run configuration.
//!
//! Settings arrive as flat `key = value` pairs from three layers: built-in
//! defaults, an optional config file and command-line flags, with later
//! layers winning. Keys shared by every run (problem source, run count,
//! seed, outputs) are consumed here; everything else is handed to the
//! chosen solver, which rejects keys it does not know.

use std::fs;
use std::path::{Path, PathBuf};

use serde_json::Value;
use simcim::graph::{EdgeDistribution, GraphGenSpec};
use simcim::solver::{BatchOptions, TraceOptions};
use simcim::{ParamMap, SolverRegistry};

use crate::error::CliError;

pub const DEFAULT_SOLVER: &str = "simcim";
pub const DEFAULT_RUNS: usize = 100;
pub const DEFAULT_OUT_DIR: &str = "simcim-out";

/// Keys interpreted by the harness rather than by a solver.
pub const RUN_KEYS: &[&str] = &[
    "solver", "graph", "format", "generate", "runs", "seed", "trace", "trace-stride", "trace-nodes", "out-dir",
    "threads", "manifest",
];

#[derive(Clone, Debug, PartialEq)]
pub enum ProblemSource {
    Gset(PathBuf),
    Generate(GraphGenSpec),
}

impl ProblemSource {
    /// Human-readable origin used in error messages and metadata.
    pub fn describe(&self) -> String {
        match self {
            ProblemSource::Gset(path) => path.display().to_string(),
            ProblemSource::Generate(spec) => format!("generate:{}", format_generate(spec)),
        }
    }
}

/// A fully validated single-problem run.
#[derive(Clone, Debug)]
pub struct RunSpec {
    pub solver: String,
    pub source: ProblemSource,
    /// Solver parameters exactly as configured (auto-scaling unresolved).
    pub solver_params: ParamMap,
    pub runs: usize,
    pub seed: u64,
    pub out_dir: PathBuf,
    pub trace: Option<TraceOptions>,
    pub threads: Option<usize>,
}

impl RunSpec {
    /// Builds a spec from merged settings. The solver is constructed once
    /// so that invalid parameters surface before any work starts.
    pub fn from_map(map: &ParamMap, registry: &SolverRegistry) -> Result<Self, CliError> {
        if map.contains("manifest") {
            return Err(CliError::Config("`manifest` selects a benchmark suite, not a single run".into()));
        }
        let solver = map.get("solver").unwrap_or(DEFAULT_SOLVER).trim().to_string();
        if registry.param_keys(&solver).is_none() {
            return Err(unknown_solver(&solver, registry));
        }
        let source = problem_source(map)?;
        let runs = parse_key(map, "runs")?.unwrap_or(DEFAULT_RUNS);
        if runs == 0 {
            return Err(CliError::Config("runs must be at least 1".into()));
        }
        let seed = parse_key(map, "seed")?.unwrap_or(0u64);
        let trace = trace_options(map)?;
        let threads = threads(map)?;
        let out_dir = PathBuf::from(map.get("out-dir").unwrap_or(DEFAULT_OUT_DIR));

        let mut solver_params: ParamMap =
            map.iter().filter(|(k, _)| !RUN_KEYS.contains(k)).map(|(k, v)| (k.to_string(), v.to_string())).collect();
        solver_params.set("seed", seed);
        registry.build(&solver, &solver_params).map_err(|e| CliError::Config(e.to_string()))?;

        Ok(Self { solver, source, solver_params, runs, seed, out_dir, trace, threads })
    }

    pub fn batch_options(&self) -> BatchOptions {
        match self.threads {
            Some(t) => BatchOptions::with_threads(t),
            None => BatchOptions::default(),
        }
    }

    /// Settings that reproduce this run's results when loaded as a config
    /// file. `effective_params` should be the solver's full parameter map.
    pub fn echo(&self, effective_params: &ParamMap) -> ParamMap {
        let mut m = effective_params.clone();
        m.set("solver", &self.solver).set("runs", self.runs).set("seed", self.seed);
        match &self.source {
            ProblemSource::Gset(path) => {
                let abs = fs::canonicalize(path).unwrap_or_else(|_| path.clone());
                m.set("graph", abs.display()).set("format", "gset");
            }
            ProblemSource::Generate(spec) => {
                m.set("generate", format_generate(spec));
            }
        }
        if let Some(t) = &self.trace {
            m.set("trace", true).set("trace-stride", t.stride).set("trace-nodes", t.sampled_nodes);
        }
        m
    }
}

pub(crate) fn unknown_solver(name: &str, registry: &SolverRegistry) -> CliError {
    let known: Vec<&str> = registry.names().collect();
    CliError::Config(format!("unknown solver `{name}` (available: {})", known.join(", ")))
}

pub(crate) fn parse_key<T: std::str::FromStr>(map: &ParamMap, key: &str) -> Result<Option<T>, CliError> {
    match map.get(key) {
        None => Ok(None),
        Some(raw) => raw
            .trim()
            .parse()
            .map(Some)
            .map_err(|_| CliError::Config(format!("cannot parse `{key}` value `{raw}`"))),
    }
}

pub(crate) fn parse_flag(map: &ParamMap, key: &str) -> Result<bool, CliError> {
    match map.get(key).map(|s| s.trim().to_ascii_lowercase()) {
        None => Ok(false),
        Some(v) => match v.as_str() {
            "true" | "yes" | "on" | "1" => Ok(true),
            "false" | "no" | "off" | "0" => Ok(false),
            _ => Err(CliError::Config(format!("`{key}` expects true or false, got `{v}`"))),
        },
    }
}

fn threads(map: &ParamMap) -> Result<Option<usize>, CliError> {
    match parse_key::<usize>(map, "threads")? {
        Some(0) => Err(CliError::Config("threads must be at least 1".into())),
        t => Ok(t),
    }
}

fn trace_options(map: &ParamMap) -> Result<Option<TraceOptions>, CliError> {
    if !parse_flag(map, "trace")? {
        if map.contains("trace-stride") || map.contains("trace-nodes") {
            return Err(CliError::Config("trace-stride and trace-nodes need trace enabled".into()));
        }
        return Ok(None);
    }
    let defaults = TraceOptions::default();
    let stride = parse_key(map, "trace-stride")?.unwrap_or(defaults.stride);
    let sampled_nodes = parse_key(map, "trace-nodes")?.unwrap_or(defaults.sampled_nodes);
    if stride == 0 || sampled_nodes == 0 {
        return Err(CliError::Config("trace-stride and trace-nodes must be positive".into()));
    }
    Ok(Some(TraceOptions { stride, sampled_nodes }))
}

pub(crate) fn problem_source(map: &ParamMap) -> Result<ProblemSource, CliError> {
    match (map.get("graph"), map.get("generate")) {
        (Some(_), Some(_)) => Err(CliError::Config("give either graph or generate, not both".into())),
        (None, None) => Err(CliError::Config("no problem given: set graph or generate".into())),
        (Some(path), None) => {
            match map.get("format").map(str::trim) {
                None | Some("gset") => {}
                Some(other) => return Err(CliError::Config(format!("unsupported graph format `{other}`"))),
            }
            Ok(ProblemSource::Gset(PathBuf::from(path.trim())))
        }
        (None, Some(g)) => {
            if map.contains("format") {
                return Err(CliError::Config("format applies only to graph files".into()));
            }
            Ok(ProblemSource::Generate(parse_generate(g)?))
        }
    }
}

/// Parses `n,dist,seed` where `dist` is `gaussian`, `gaussian:MEAN:STD`,
/// `pm1` or `pm1:P`.
pub fn parse_generate(text: &str) -> Result<GraphGenSpec, CliError> {
    let bad = |why: &str| CliError::Config(format!("bad generator `{text}`: {why}"));
    let parts: Vec<&str> = text.split(',').map(str::trim).collect();
    let [n, dist, seed] = parts[..] else {
        return Err(bad("expected n,dist,seed"));
    };
    let n: usize = n.parse().map_err(|_| bad("n is not a count"))?;
    let seed: u64 = seed.parse().map_err(|_| bad("seed is not an unsigned integer"))?;
    let fields: Vec<&str> = dist.split(':').collect();
    let num = |s: &str| s.parse::<f64>().map_err(|_| bad("distribution argument is not a number"));
    let distribution = match fields[..] {
        ["gaussian"] => EdgeDistribution::Gaussian { mean: 0.0, std_dev: 1.0 },
        ["gaussian", mean, std_dev] => EdgeDistribution::Gaussian { mean: num(mean)?, std_dev: num(std_dev)? },
        ["pm1"] => EdgeDistribution::Discrete { p: 1.0 },
        ["pm1", p] => EdgeDistribution::Discrete { p: num(p)? },
        _ => return Err(bad("distribution must be gaussian[:MEAN:STD] or pm1[:P]")),
    };
    let spec = GraphGenSpec { n, distribution, seed };
    spec.validate().map_err(|e| CliError::Config(e.to_string()))?;
    Ok(spec)
}

/// Inverse of [`parse_generate`].
pub fn format_generate(spec: &GraphGenSpec) -> String {
    let dist = match spec.distribution {
        EdgeDistribution::Gaussian { mean, std_dev } => format!("gaussian:{mean}:{std_dev}"),
        EdgeDistribution::Discrete { p } => format!("pm1:{p}"),
    };
    format!("{},{dist},{}", spec.n, spec.seed)
}

/// Reads a config file: either `key = value` lines (`#` starts a comment)
/// or a JSON summary, whose `config` object is used.
pub fn load_config_file(path: &Path) -> Result<ParamMap, CliError> {
    if !path.is_file() {
        return Err(CliError::Config(format!("config file {} not found", path.display())));
    }
    let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    if text.trim_start().starts_with('{') {
        parse_json_config(&text).map_err(|m| CliError::Config(format!("{}: {m}", path.display())))
    } else {
        parse_key_values(&text).map_err(|m| CliError::Config(format!("{}: {m}", path.display())))
    }
}

pub fn parse_key_values(text: &str) -> Result<ParamMap, String> {
    let mut map = ParamMap::new();
    for (k, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line.split_once('=').ok_or_else(|| format!("line {}: expected key = value", k + 1))?;
        let key = normalize_key(key);
        if key.is_empty() {
            return Err(format!("line {}: empty key", k + 1));
        }
        if map.contains(&key) {
            return Err(format!("line {}: `{key}` given twice", k + 1));
        }
        map.set(key, value.trim());
    }
    Ok(map)
}

fn parse_json_config(text: &str) -> Result<ParamMap, String> {
    let value: Value = serde_json::from_str(text).map_err(|e| e.to_string())?;
    let object = match value.get("config") {
        Some(inner) => inner,
        None => &value,
    };
    let object = object.as_object().ok_or("expected a JSON object")?;
    let mut map = ParamMap::new();
    for (key, v) in object {
        let text = match v {
            Value::String(s) => s.clone(),
            Value::Number(n) => n.to_string(),
            Value::Bool(b) => b.to_string(),
            _ => return Err(format!("`{key}` must be a string, number or boolean")),
        };
        map.set(normalize_key(key), text);
    }
    Ok(map)
}

/// `zeta_auto` and `zeta-auto` name the same key.
pub(crate) fn normalize_key(key: &str) -> String {
    key.trim().replace('_', "-")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn generator_round_trip() {
        for text in ["800,gaussian,7", "16,gaussian:0.5:2,1", "2000,pm1,5", "50,pm1:0.25,3"] {
            let spec = parse_generate(text).unwrap();
            assert_eq!(parse_generate(&format_generate(&spec)).unwrap(), spec);
        }
        assert!(parse_generate("800,gaussian").is_err());
        assert!(parse_generate("1,gaussian,0").is_err());
        assert!(parse_generate("10,uniform,0").is_err());
    }

    #[test]
    fn key_value_file() {
        let m = parse_key_values("# tuned\nsolver = nmfa\nzeta_auto=0.8   # inline\n\nruns=5\n").unwrap();
        assert_eq!(m.get("solver"), Some("nmfa"));
        assert_eq!(m.get("zeta-auto"), Some("0.8"));
        assert_eq!(m.get("runs"), Some("5"));
        assert!(parse_key_values("runs 5").is_err());
        assert!(parse_key_values("runs=5\nruns=6").is_err());
    }

    #[test]
    fn json_config_prefers_config_object() {
        let m = parse_json_config(r#"{"schema_version": 1, "config": {"runs": "3", "noise": 0.1, "trace": true}}"#).unwrap();
        assert_eq!(m.get("runs"), Some("3"));
        assert_eq!(m.get("noise"), Some("0.1"));
        assert_eq!(m.get("trace"), Some("true"));
    }

    #[test]
    fn spec_requires_exactly_one_source() {
        let reg = SolverRegistry::builtin();
        assert!(RunSpec::from_map(&ParamMap::new(), &reg).is_err());
        let both = ParamMap::new().with("graph", "a.txt").with("generate", "10,gaussian,1");
        assert!(RunSpec::from_map(&both, &reg).is_err());
        let ok = RunSpec::from_map(&ParamMap::new().with("generate", "10,gaussian,1"), &reg).unwrap();
        assert_eq!(ok.runs, DEFAULT_RUNS);
        assert_eq!(ok.solver, "simcim");
    }

    #[test]
    fn params_are_checked_against_the_solver() {
        let reg = SolverRegistry::builtin();
        let m = ParamMap::new().with("generate", "10,gaussian,1").with("alpha", "0.2");
        assert!(matches!(RunSpec::from_map(&m, &reg), Err(CliError::Config(_))));
        let m = m.with("solver", "nmfa");
        assert!(RunSpec::from_map(&m, &reg).is_ok());
    }
}
