//! Experiment configuration: a TOML document deserialized into
//! [`ExperimentConfig`], then validated field by field.

use std::fmt;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

/// Largest seed the text form can carry (TOML integers are signed).
pub const MAX_CONFIG_SEED: u64 = i64::MAX as u64;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    /// Master seed; every random stream is split from it.
    pub seed: u64,
    /// Output directory, relative to the working directory.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out: Option<String>,
    /// Diffusion coefficient of the PDE.
    #[serde(default)]
    pub nu: f64,
    /// Particle noise amplitude; defaults to `sqrt(2 nu)`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sigma: Option<f64>,
    pub graph: GraphSpec,
    pub kernel: KernelSpec,
    pub initial: InitialSpec,
    pub grid: GridSpec,
    pub time: TimeSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub observe: Option<ObserveSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rearrange: Option<RearrangeSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub convergence: Option<ConvergenceSpec>,
    #[serde(default)]
    pub output: OutputSpec,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "generator", rename_all = "snake_case", deny_unknown_fields)]
pub enum GraphSpec {
    /// `w_ij = w_bar / N`.
    Uniform {
        n_agents: usize,
        #[serde(default = "one")]
        w_bar: f64,
        #[serde(default)]
        include_diagonal: bool,
    },
    /// Blocks of `class_size` agents; block `k` listens to block
    /// `(k + shift) mod classes` with weight `1 / class_size`.
    ClassPermutation {
        n_agents: usize,
        class_size: usize,
        #[serde(default = "one_usize")]
        shift: usize,
    },
    /// Directed Erdos-Renyi graph with weights `1 / N` on kept edges.
    Bernoulli { n_agents: usize, p: f64 },
    /// Weights read from an edge-list file.
    EdgeList { path: String },
}

fn one() -> f64 {
    1.0
}

fn one_usize() -> usize {
    1
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "preset", rename_all = "snake_case", deny_unknown_fields)]
pub enum KernelSpec {
    /// `K(x) = -s x exp(-x^2)`.
    LinearAttraction { strength: f64 },
    /// `K(x) = -slope x`; particles only.
    Linear { slope: f64 },
    /// `K(x) = -coupling sin(x)` on the circle. `omega` holds natural
    /// frequencies, one per agent or a single shared value.
    Kuramoto {
        coupling: f64,
        #[serde(default, skip_serializing_if = "Vec::is_empty")]
        omega: Vec<f64>,
    },
    /// Gap-junction coupled neurons with squid-axon constants; particles
    /// only. The initial law sets the membrane potential, gates start at
    /// their steady state.
    HodgkinHuxley {
        #[serde(default = "one")]
        capacitance: f64,
        #[serde(default)]
        i_ext: f64,
    },
}

impl KernelSpec {
    pub fn name(&self) -> &'static str {
        match self {
            KernelSpec::LinearAttraction { .. } => "linear_attraction",
            KernelSpec::Linear { .. } => "linear",
            KernelSpec::Kuramoto { .. } => "kuramoto",
            KernelSpec::HodgkinHuxley { .. } => "hodgkin_huxley",
        }
    }

    /// Whether the kernel is bounded and one-dimensional, as the PDE
    /// solver requires.
    pub fn supports_pde(&self) -> bool {
        matches!(self, KernelSpec::LinearAttraction { .. } | KernelSpec::Kuramoto { .. })
    }
}

/// Initial laws. Fiber `i` uses mixture `fibers[i mod len]` with every
/// mean shifted by `spread * (2 i / (N - 1) - 1)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InitialSpec {
    #[serde(default)]
    pub spread: f64,
    pub fibers: Vec<MixtureSpec>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MixtureSpec {
    pub means: Vec<f64>,
    pub stds: Vec<f64>,
    pub weights: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TopologySpec {
    Line,
    Torus,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    pub x_min: f64,
    pub x_max: f64,
    pub cells: usize,
    pub topology: TopologySpec,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum MethodSpec {
    Euler,
    #[default]
    Rk4,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TimeSpec {
    pub t_end: f64,
    /// Step of the particle integrator and cap on the PDE step.
    pub dt: f64,
    /// Snapshot times in `[0, t_end]`; default `[0, t_end]`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub snapshots: Option<Vec<f64>>,
    #[serde(default)]
    pub method: MethodSpec,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ObserveSpec {
    /// Largest tree order in the hierarchy.
    pub n_max: usize,
    pub lambda: f64,
    /// Compute hierarchy residuals for trees of order `<= min(n_max, 3)` at
    /// every snapshot `t` with `t -+ time.dt` inside `[0, t_end]`.
    #[serde(default = "yes")]
    pub residuals: bool,
}

fn yes() -> bool {
    true
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum RearrangeMode {
    #[default]
    Strict,
    General,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RearrangeSpec {
    /// Number of functions `K`.
    pub funcs: usize,
    /// Number of cells `P`.
    pub cells: usize,
    /// Random instance index.
    #[serde(default)]
    pub instance: u64,
    #[serde(default)]
    pub mode: RearrangeMode,
    /// Shifts (in cells) for the modulus table; default powers of two.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub shifts: Option<Vec<usize>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConvergenceSpec {
    /// Class-permutation graphs to sweep.
    pub runs: Vec<SweepPoint>,
    /// Replicas per independence-gap run (at least 100); 0 skips it.
    #[serde(default)]
    pub replicas: usize,
    /// Seeds per mean-field-gap run; 0 skips it.
    #[serde(default)]
    pub seeds: usize,
    #[serde(default)]
    pub bootstrap: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepPoint {
    pub n_agents: usize,
    pub class_size: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct OutputSpec {
    /// Also write the binary density dump.
    #[serde(default)]
    pub binary_density: bool,
}

/// A configuration problem pinned to a field and, when known, a source
/// position (1-based).
#[derive(Debug, Clone, PartialEq)]
pub struct ConfigError {
    pub field: String,
    pub line: Option<usize>,
    pub column: Option<usize>,
    pub message: String,
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.field.is_empty() {
            write!(f, "config")?;
        } else {
            write!(f, "config field `{}`", self.field)?;
        }
        match (self.line, self.column) {
            (Some(l), Some(c)) => write!(f, " (line {l}, column {c})")?,
            (Some(l), None) => write!(f, " (line {l})")?,
            _ => {}
        }
        write!(f, ": {}", self.message)
    }
}

impl std::error::Error for ConfigError {}

fn line_col(text: &str, offset: usize) -> (usize, usize) {
    let before = &text[..offset.min(text.len())];
    let line = before.matches('\n').count() + 1;
    let col = before.rsplit('\n').next().map_or(0, |s| s.chars().count()) + 1;
    (line, col)
}

/// Best-effort line of a dotted field path such as `graph.n_agents` or
/// `initial.fibers[1].stds`.
pub fn locate(text: &str, field: &str) -> Option<usize> {
    // "a.b[1].c" -> tables ["a", "b"], index 1 of the `[[a.b]]` array, key "c"
    let mut names = Vec::new();
    let mut index = None;
    for seg in field.split('.').filter(|s| !s.is_empty()) {
        let name = seg.split('[').next().unwrap_or(seg);
        if let Some(i) = seg.split('[').nth(1).and_then(|r| r.trim_end_matches(']').parse::<usize>().ok()) {
            index = Some(i);
        }
        names.push(name);
    }
    let key = names.pop()?;
    let target = names.join(".");
    let mut seen = 0usize;
    let mut inside = target.is_empty();
    let mut table_line = None;
    for (no, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.starts_with('[') {
            let current = line.trim_matches(|c| c == '[' || c == ']').trim();
            inside = false;
            if current == target {
                let array = line.starts_with("[[");
                inside = !array || index.map_or(true, |i| i == seen);
                if array {
                    seen += 1;
                }
                if inside {
                    table_line.get_or_insert(no + 1);
                }
            }
            continue;
        }
        if inside && line.split('=').next().map(str::trim) == Some(key) {
            return Some(no + 1);
        }
    }
    // inline tables or missing keys: point at the enclosing table
    table_line
}

impl ExperimentConfig {
    /// Parses and validates a TOML document.
    pub fn from_toml(text: &str) -> Result<Self, ConfigError> {
        let de = toml::Deserializer::new(text);
        let cfg: ExperimentConfig = serde_path_to_error::deserialize(de).map_err(|e| {
            let field = e.path().to_string();
            let inner = e.into_inner();
            let (line, column) = match inner.span() {
                Some(s) => {
                    let (l, c) = line_col(text, s.start);
                    (Some(l), Some(c))
                }
                None => (locate(text, &field), None),
            };
            ConfigError {
                field: if field == "." { String::new() } else { field },
                line,
                column,
                message: inner.message().trim().to_string(),
            }
        })?;
        cfg.validate().map_err(|(field, message)| ConfigError {
            line: locate(text, &field),
            column: None,
            field,
            message,
        })?;
        Ok(cfg)
    }

    pub fn from_path(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|e| ConfigError {
            field: String::new(),
            line: None,
            column: None,
            message: format!("cannot read {}: {e}", path.display()),
        })?;
        Self::from_toml(&text)
    }

    /// Canonical text form; parsing it gives back an equal config.
    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config types serialize to TOML")
    }

    pub fn n_agents(&self) -> Option<usize> {
        match &self.graph {
            GraphSpec::Uniform { n_agents, .. }
            | GraphSpec::ClassPermutation { n_agents, .. }
            | GraphSpec::Bernoulli { n_agents, .. } => Some(*n_agents),
            GraphSpec::EdgeList { .. } => None,
        }
    }

    pub fn sigma(&self) -> f64 {
        self.sigma.unwrap_or((2.0 * self.nu).sqrt())
    }

    /// Snapshot times, defaulting to `[0, t_end]`.
    pub fn snapshots(&self) -> Vec<f64> {
        match &self.time.snapshots {
            Some(s) => s.clone(),
            None if self.time.t_end == 0.0 => vec![0.0],
            None => vec![0.0, self.time.t_end],
        }
    }

    pub fn out_dir(&self, base: Option<&Path>) -> PathBuf {
        match (base, &self.out) {
            (Some(b), _) => b.to_path_buf(),
            (None, Some(o)) => PathBuf::from(o),
            (None, None) => PathBuf::from("out"),
        }
    }

    /// Checks every numeric range and cross-field constraint; the error
    /// names the offending field.
    pub fn validate(&self) -> Result<(), (String, String)> {
        fn err<T>(field: impl Into<String>, msg: impl Into<String>) -> Result<T, (String, String)> {
            Err((field.into(), msg.into()))
        }
        fn finite(field: &str, v: f64) -> Result<(), (String, String)> {
            if v.is_finite() {
                Ok(())
            } else {
                err(field, "must be finite")
            }
        }
        if self.seed > MAX_CONFIG_SEED {
            return err("seed", format!("must not exceed {MAX_CONFIG_SEED}"));
        }
        if let Some(o) = &self.out {
            if o.trim().is_empty() {
                return err("out", "must not be empty");
            }
        }
        if !(self.nu >= 0.0) || !self.nu.is_finite() {
            return err("nu", "must be finite and nonnegative");
        }
        if let Some(s) = self.sigma {
            if !(s >= 0.0) || !s.is_finite() {
                return err("sigma", "must be finite and nonnegative");
            }
        }

        match &self.graph {
            GraphSpec::Uniform { n_agents, w_bar, .. } => {
                if *n_agents == 0 {
                    return err("graph.n_agents", "must be at least 1");
                }
                finite("graph.w_bar", *w_bar)?;
            }
            GraphSpec::ClassPermutation {
                n_agents,
                class_size,
                shift,
            } => {
                if *n_agents == 0 {
                    return err("graph.n_agents", "must be at least 1");
                }
                if *class_size == 0 || n_agents % class_size != 0 {
                    return err("graph.class_size", "must be positive and divide n_agents");
                }
                if *shift >= n_agents / class_size {
                    return err("graph.shift", "must be smaller than the number of classes");
                }
            }
            GraphSpec::Bernoulli { n_agents, p } => {
                if *n_agents == 0 {
                    return err("graph.n_agents", "must be at least 1");
                }
                if !(0.0..=1.0).contains(p) {
                    return err("graph.p", "must lie in [0, 1]");
                }
            }
            GraphSpec::EdgeList { path } => {
                if path.trim().is_empty() {
                    return err("graph.path", "must not be empty");
                }
            }
        }

        match &self.kernel {
            KernelSpec::LinearAttraction { strength } => finite("kernel.strength", *strength)?,
            KernelSpec::Linear { slope } => finite("kernel.slope", *slope)?,
            KernelSpec::Kuramoto { coupling, omega } => {
                finite("kernel.coupling", *coupling)?;
                if omega.iter().any(|v| !v.is_finite()) {
                    return err("kernel.omega", "entries must be finite");
                }
                if omega.len() > 1 && self.n_agents().is_some_and(|n| n != omega.len()) {
                    return err("kernel.omega", "needs one entry or one per agent");
                }
                let period = self.grid.x_max - self.grid.x_min;
                if self.grid.topology != TopologySpec::Torus
                    || (period - std::f64::consts::TAU).abs() > 1e-9
                {
                    return err("grid.topology", "kuramoto needs a torus grid of length 2 pi");
                }
            }
            KernelSpec::HodgkinHuxley { capacitance, i_ext } => {
                if !(*capacitance > 0.0) || !capacitance.is_finite() {
                    return err("kernel.capacitance", "must be finite and positive");
                }
                finite("kernel.i_ext", *i_ext)?;
            }
        }

        if self.initial.fibers.is_empty() {
            return err("initial.fibers", "need at least one mixture");
        }
        finite("initial.spread", self.initial.spread)?;
        for (i, m) in self.initial.fibers.iter().enumerate() {
            let at = |f: &str| format!("initial.fibers[{i}].{f}");
            if m.means.is_empty() {
                return err(at("means"), "need at least one component");
            }
            if m.stds.len() != m.means.len() {
                return err(at("stds"), "must have one entry per mean");
            }
            if m.weights.len() != m.means.len() {
                return err(at("weights"), "must have one entry per mean");
            }
            if m.means.iter().any(|v| !v.is_finite()) {
                return err(at("means"), "must be finite");
            }
            if m.stds.iter().any(|v| !(*v > 0.0) || !v.is_finite()) {
                return err(at("stds"), "must be finite and positive");
            }
            if m.weights.iter().any(|v| !(*v >= 0.0) || !v.is_finite()) || !(m.weights.iter().sum::<f64>() > 0.0) {
                return err(at("weights"), "must be nonnegative with a positive sum");
            }
        }

        let g = &self.grid;
        finite("grid.x_min", g.x_min)?;
        finite("grid.x_max", g.x_max)?;
        if !(g.x_max > g.x_min) {
            return err("grid.x_max", "must exceed x_min");
        }
        if g.cells < 8 {
            return err("grid.cells", "need at least 8 cells");
        }

        let t = &self.time;
        if !(t.t_end >= 0.0) || !t.t_end.is_finite() {
            return err("time.t_end", "must be finite and nonnegative");
        }
        if !(t.dt > 0.0) || !t.dt.is_finite() {
            return err("time.dt", "must be finite and positive");
        }
        if let Some(s) = &t.snapshots {
            if s.is_empty() {
                return err("time.snapshots", "must not be empty");
            }
            if s.iter().any(|v| !(*v >= 0.0) || *v > t.t_end) {
                return err("time.snapshots", "must lie in [0, t_end]");
            }
            if s.windows(2).any(|w| !(w[1] > w[0])) {
                return err("time.snapshots", "must be strictly increasing");
            }
        }

        if let Some(o) = &self.observe {
            if o.n_max == 0 || o.n_max > meanfield_core::observables::MAX_GRID_ORDER {
                return err("observe.n_max", "must lie in 1..=4");
            }
            if !(o.lambda > 0.0) || !o.lambda.is_finite() {
                return err("observe.lambda", "must be finite and positive");
            }
        }

        if let Some(r) = &self.rearrange {
            if r.funcs == 0 || r.funcs > 6 {
                return err("rearrange.funcs", "must lie in 1..=6");
            }
            if r.cells == 0 || r.cells > 1 << 24 {
                return err("rearrange.cells", "must lie in 1..=16777216");
            }
            let n_k = meanfield_core::rearrange::pieces_at_level(r.funcs).map_err(|e| ("rearrange.funcs".to_string(), e.to_string()))?;
            if r.cells as u64 % n_k != 0 {
                let near = ((r.cells as u64).div_ceil(n_k)).max(1) * n_k;
                return err(
                    "rearrange.cells",
                    format!("must be a multiple of {n_k}; nearest admissible count is {near}"),
                );
            }
            if let Some(s) = &r.shifts {
                if s.iter().any(|&h| h >= r.cells) {
                    return err("rearrange.shifts", "shifts must be smaller than cells");
                }
            }
        }

        if let Some(c) = &self.convergence {
            if c.runs.is_empty() {
                return err("convergence.runs", "need at least one sweep point");
            }
            for (i, p) in c.runs.iter().enumerate() {
                if p.n_agents == 0 {
                    return err(format!("convergence.runs[{i}].n_agents"), "must be at least 1");
                }
                if p.class_size == 0 || p.n_agents % p.class_size != 0 {
                    return err(
                        format!("convergence.runs[{i}].class_size"),
                        "must be positive and divide n_agents",
                    );
                }
            }
            if c.replicas == 0 && c.seeds == 0 {
                return err("convergence.replicas", "replicas and seeds cannot both be zero");
            }
            if c.replicas != 0 && c.replicas < meanfield_core::metrics::MIN_REPLICAS {
                return err("convergence.replicas", "need at least 100 replicas");
            }
            if c.bootstrap > 10_000 {
                return err("convergence.bootstrap", "at most 10000 resamples");
            }
            if !self.kernel.supports_pde() {
                return err("kernel.preset", "convergence needs a bounded one-dimensional kernel");
            }
        }
        Ok(())
    }
}
