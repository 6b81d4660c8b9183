use std::path::PathBuf;

use clap::Parser;
use simcim::ParamMap;

/// Simulated coherent Ising machine and mean-field annealing for Ising
/// ground states and max-cut.
///
/// Settings may also come from a config file (`key = value` lines or a
/// previous summary.json); command-line flags take precedence.
#[derive(Debug, Parser)]
#[command(name = "simcim", version)]
pub struct Args {
    /// Solver: simcim, nmfa or cim_physics (comma-separated list with --manifest).
    #[arg(long)]
    pub solver: Option<String>,
    /// Graph file.
    #[arg(long)]
    pub graph: Option<PathBuf>,
    /// Graph file format.
    #[arg(long, value_parser = ["gset"])]
    pub format: Option<String>,
    /// Random instance `n,dist,seed` with dist gaussian[:MEAN:STD] or pm1[:P].
    #[arg(long)]
    pub generate: Option<String>,
    /// Benchmark manifest; runs every listed problem with every solver.
    #[arg(long)]
    pub manifest: Option<PathBuf>,
    /// Config file.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub runs: Option<usize>,
    #[arg(long)]
    pub iterations: Option<usize>,
    /// Master seed; run `i` uses a seed derived from it and `i`.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Fixed coupling strength.
    #[arg(long, allow_hyphen_values = true)]
    pub zeta: Option<f64>,
    /// Coupling strength as `C / lambda_max(J)`; `off` disables.
    #[arg(long)]
    pub zeta_auto: Option<String>,
    #[arg(long)]
    pub noise: Option<f64>,
    #[arg(long)]
    pub x_sat: Option<f64>,
    /// Momentum coefficient.
    #[arg(long)]
    pub beta: Option<f64>,
    /// Schedule form: tanh or constant (nmfa also accepts none).
    #[arg(long)]
    pub schedule: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    pub v_start: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub v_end: Option<f64>,
    #[arg(long)]
    pub steepness: Option<f64>,
    /// Mean-field relaxation rate.
    #[arg(long)]
    pub alpha: Option<f64>,
    /// Parametric gain.
    #[arg(long)]
    pub gain: Option<f64>,
    /// Linear loss.
    #[arg(long)]
    pub loss: Option<f64>,
    /// Saturation (nonlinear loss) coefficient.
    #[arg(long)]
    pub nonlinear_loss: Option<f64>,
    /// Extra solver setting, repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    pub set: Vec<String>,
    /// Record run 0 into trace.csv.
    #[arg(long)]
    pub trace: bool,
    #[arg(long)]
    pub trace_stride: Option<usize>,
    #[arg(long)]
    pub trace_nodes: Option<usize>,
    #[arg(long)]
    pub out_dir: Option<PathBuf>,
    /// Worker threads (default: all cores).
    #[arg(long)]
    pub threads: Option<usize>,
}

impl Args {
    /// Flags that were given, keyed like config-file settings.
    pub fn to_settings(&self) -> Result<ParamMap, String> {
        let mut m = ParamMap::new();
        let mut put = |key: &str, value: Option<String>| {
            if let Some(v) = value {
                m.set(key, v);
            }
        };
        let s = |v: &Option<String>| v.clone();
        let p = |v: &Option<PathBuf>| v.as_ref().map(|p| p.display().to_string());
        let f = |v: Option<f64>| v.map(|x| x.to_string());
        let u = |v: Option<usize>| v.map(|x| x.to_string());
        put("solver", s(&self.solver));
        put("graph", p(&self.graph));
        put("format", s(&self.format));
        put("generate", s(&self.generate));
        put("manifest", p(&self.manifest));
        put("config", p(&self.config));
        put("runs", u(self.runs));
        put("iterations", u(self.iterations));
        put("seed", self.seed.map(|x| x.to_string()));
        put("zeta", f(self.zeta));
        put("zeta-auto", s(&self.zeta_auto));
        put("noise", f(self.noise));
        put("x-sat", f(self.x_sat));
        put("beta", f(self.beta));
        put("schedule", s(&self.schedule));
        put("v-start", f(self.v_start));
        put("v-end", f(self.v_end));
        put("steepness", f(self.steepness));
        put("alpha", f(self.alpha));
        put("gain", f(self.gain));
        put("loss", f(self.loss));
        put("nonlinear-loss", f(self.nonlinear_loss));
        put("trace", self.trace.then(|| "true".to_string()));
        put("trace-stride", u(self.trace_stride));
        put("trace-nodes", u(self.trace_nodes));
        put("out-dir", p(&self.out_dir));
        put("threads", u(self.threads));
        for kv in &self.set {
            let (key, value) = kv.split_once('=').ok_or_else(|| format!("--set expects KEY=VALUE, got `{kv}`"))?;
            let key = crate::config::normalize_key(key);
            if m.contains(&key) {
                return Err(format!("`{key}` given twice"));
            }
            m.set(key, value.trim());
        }
        Ok(m)
    }
}
