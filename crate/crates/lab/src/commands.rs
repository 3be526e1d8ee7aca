//! The five pipelines behind the binary's subcommands. Each pipeline
//! renders its artifacts in memory; [`execute`] writes them together with
//! the canonical config and a manifest.

use std::path::{Path, PathBuf};

use meanfield_core::metrics::{self, FiberSampler, GapSetup};
use meanfield_core::observables::{self, hierarchy, hierarchy_norm, hierarchy_residual};
use meanfield_core::particles::{self, Dynamics, HhParams, Method, ParticleState, RunSpec};
use meanfield_core::pde::{ConservationLedger, Solution, Transport};
use meanfield_core::rearrange::{self, CellFunctions};
use meanfield_core::rng::{self, Purpose};
use meanfield_core::trees::enumerate_trees;
use meanfield_core::{FiberedDensity, Grid1D, SparseWeights, Topology};
use rand::Rng;

use crate::config::*;
use crate::formats;
use crate::manifest::{sha256_hex, Manifest, OutputEntry};
use crate::{Context, LabError};

/// Largest tolerated per-step mass defect of the transport solver.
pub const MASS_DRIFT_LIMIT: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Simulate,
    Solve,
    Observe,
    Rearrange,
    Convergence,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Simulate => "simulate",
            Command::Solve => "solve",
            Command::Observe => "observe",
            Command::Rearrange => "rearrange",
            Command::Convergence => "convergence",
        }
    }
}

#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
    pub threads: Option<usize>,
    /// Directory that relative input paths (edge lists) resolve against.
    pub base_dir: Option<PathBuf>,
}

/// Named output files, in emission order.
#[derive(Debug, Clone, Default)]
pub struct Artifacts {
    pub files: Vec<(String, Vec<u8>)>,
    /// Conservation ledgers of every transport solve in the run.
    pub ledgers: Vec<(Topology, ConservationLedger)>,
}

impl Artifacts {
    fn text(&mut self, name: impl Into<String>, s: String) {
        self.files.push((name.into(), s.into_bytes()));
    }

    pub fn get(&self, name: &str) -> Option<&[u8]> {
        self.files.iter().find(|(n, _)| n == name).map(|(_, b)| b.as_slice())
    }

    pub fn get_text(&self, name: &str) -> Option<&str> {
        self.get(name).and_then(|b| std::str::from_utf8(b).ok())
    }
}

/// Runs `cmd` in a pool of `opts.threads` workers (the global pool when
/// unset), writes every artifact, `config.toml` and `manifest.toml` into
/// the output directory, and returns the manifest.
pub fn execute(cmd: Command, cfg: &ExperimentConfig, opts: &RunOptions) -> Result<Manifest, LabError> {
    let mut cfg = cfg.clone();
    if let Some(s) = opts.seed {
        cfg.seed = s;
    }
    let artifacts = in_pool(opts.threads, || run_command(cmd, &cfg, opts.base_dir.as_deref()))?;
    let dir = cfg.out_dir(opts.out.as_deref());
    write_run(&dir, cmd, &cfg, &artifacts)
}

pub(crate) fn in_pool<T: Send>(
    threads: Option<usize>,
    f: impl FnOnce() -> Result<T, LabError> + Send,
) -> Result<T, LabError> {
    match threads {
        None => f(),
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| LabError::Threads(e.to_string()))?
            .install(f),
    }
}

/// Renders the manifest for a finished run without touching the disk.
pub fn manifest_for(cmd: Command, cfg: &ExperimentConfig, artifacts: &Artifacts) -> Manifest {
    let config_text = cfg.to_toml();
    let mut outputs = vec![OutputEntry {
        path: "config.toml".into(),
        bytes: config_text.len(),
        sha256: sha256_hex(config_text.as_bytes()),
    }];
    outputs.extend(artifacts.files.iter().map(|(name, bytes)| OutputEntry {
        path: name.clone(),
        bytes: bytes.len(),
        sha256: sha256_hex(bytes),
    }));
    Manifest {
        command: cmd.name().into(),
        seed: cfg.seed,
        config_sha256: sha256_hex(config_text.as_bytes()),
        outputs,
    }
}

fn write_run(dir: &Path, cmd: Command, cfg: &ExperimentConfig, artifacts: &Artifacts) -> Result<Manifest, LabError> {
    let io = |path: &Path| {
        let path = path.to_path_buf();
        move |source| LabError::Io { path, source }
    };
    std::fs::create_dir_all(dir).map_err(io(dir))?;
    let manifest = manifest_for(cmd, cfg, artifacts);
    let mut all: Vec<(&str, &[u8])> = vec![("config.toml", b"")];
    let config_text = cfg.to_toml();
    all[0].1 = config_text.as_bytes();
    all.extend(artifacts.files.iter().map(|(n, b)| (n.as_str(), b.as_slice())));
    let manifest_text = manifest.to_toml();
    all.push(("manifest.toml", manifest_text.as_bytes()));
    for (name, bytes) in all {
        let path = dir.join(name);
        if let Some(parent) = path.parent() {
            std::fs::create_dir_all(parent).map_err(io(parent))?;
        }
        std::fs::write(&path, bytes).map_err(io(&path))?;
    }
    Ok(manifest)
}

/// Runs one pipeline and returns its artifacts.
pub fn run_command(cmd: Command, cfg: &ExperimentConfig, base_dir: Option<&Path>) -> Result<Artifacts, LabError> {
    match cmd {
        Command::Simulate => simulate(cfg, base_dir),
        Command::Solve => solve(cfg, base_dir),
        Command::Observe => observe(cfg, base_dir),
        Command::Rearrange => rearrange_cmd(cfg),
        Command::Convergence => convergence(cfg),
    }
}

fn config_err(field: &str, message: impl Into<String>) -> LabError {
    LabError::Config(ConfigError {
        field: field.into(),
        line: None,
        column: None,
        message: message.into(),
    })
}

pub fn build_weights(cfg: &ExperimentConfig, base_dir: Option<&Path>) -> Result<SparseWeights, LabError> {
    match &cfg.graph {
        GraphSpec::Uniform {
            n_agents,
            w_bar,
            include_diagonal,
        } => SparseWeights::uniform(*n_agents, *w_bar, *include_diagonal).ctx("graph"),
        GraphSpec::ClassPermutation {
            n_agents,
            class_size,
            shift,
        } => class_permutation(*n_agents, *class_size, *shift),
        GraphSpec::Bernoulli { n_agents, p } => SparseWeights::from_graphon(
            *n_agents,
            |_, _| *p,
            meanfield_core::graph::GraphonSampling::Bernoulli { seed: cfg.seed },
        )
        .ctx("graph"),
        GraphSpec::EdgeList { path } => {
            let p = match base_dir {
                Some(b) if Path::new(path).is_relative() => b.join(path),
                _ => PathBuf::from(path),
            };
            let text = std::fs::read_to_string(&p).map_err(|_| config_err("graph.path", format!("cannot read {}", p.display())))?;
            formats::read_edge_list(&text).map_err(|source| LabError::Format { path: p, source })
        }
    }
}

/// Class-permutation weights with block `k` listening to block
/// `(k + shift) mod classes`.
pub fn class_permutation(n: usize, class_size: usize, shift: usize) -> Result<SparseWeights, LabError> {
    let classes = n / class_size.max(1);
    let perm: Vec<usize> = (0..classes).map(|k| (k + shift) % classes.max(1)).collect();
    SparseWeights::class_permutation(n, class_size, &perm).ctx("graph")
}

pub fn build_dynamics(cfg: &ExperimentConfig, n: usize) -> Result<Dynamics, LabError> {
    match &cfg.kernel {
        KernelSpec::LinearAttraction { strength } => Ok(Dynamics::linear_attraction(*strength)),
        KernelSpec::Linear { slope } => Ok(Dynamics::new(meanfield_core::Kernel::linear(1, *slope))),
        KernelSpec::Kuramoto { coupling, omega } => {
            let omega = match omega.len() {
                0 => None,
                1 => Some(vec![omega[0]; n]),
                k if k == n => Some(omega.clone()),
                _ => return Err(config_err("kernel.omega", "needs one entry or one per agent")),
            };
            Dynamics::kuramoto(*coupling, omega).ctx("kernel")
        }
        KernelSpec::HodgkinHuxley { capacitance, i_ext } => Dynamics::hodgkin_huxley(HhParams {
            capacitance: *capacitance,
            i_ext: *i_ext,
            ..HhParams::squid_axon()
        })
        .ctx("kernel"),
    }
}

pub fn build_grid(cfg: &ExperimentConfig) -> Result<Grid1D, LabError> {
    let g = &cfg.grid;
    let topology = match g.topology {
        TopologySpec::Line => Topology::Line,
        TopologySpec::Torus => Topology::Torus,
    };
    Grid1D::new(g.x_min, g.x_max, g.cells, topology).ctx("grid")
}

/// Gaussian-mixture fibers on the grid, each normalized to mass 1. On the
/// torus distances are taken to the nearest periodic image.
pub fn initial_density(cfg: &ExperimentConfig, grid: Grid1D, n: usize) -> Result<FiberedDensity, LabError> {
    let domain = grid.domain();
    let spec = &cfg.initial;
    let f = FiberedDensity::from_fn(grid, n, |i, x| {
        let m = &spec.fibers[i % spec.fibers.len()];
        let offset = if n > 1 {
            spec.spread * (2.0 * i as f64 / (n - 1) as f64 - 1.0)
        } else {
            0.0
        };
        m.means
            .iter()
            .zip(&m.stds)
            .zip(&m.weights)
            .map(|((mu, sd), wt)| {
                let z = domain.wrap_diff(x - mu - offset) / sd;
                wt * (-0.5 * z * z).exp() / sd
            })
            .sum()
    })
    .ctx("initial")?;
    if (0..n).any(|i| !(f.fiber_mass(i) > 0.0)) {
        return Err(config_err("initial.fibers", "a fiber has no mass on the grid"));
    }
    Ok(f.normalized())
}

/// Initial particle state for replica `replica`: positions drawn from the
/// fibers; for neurons the draw is the membrane potential and the gates
/// start at their steady state.
pub fn initial_particles(
    cfg: &ExperimentConfig,
    f0: &FiberedDensity,
    replica: u64,
) -> Result<ParticleState, LabError> {
    let sampler = FiberSampler::new(f0).ctx("initial")?;
    let x = sampler.draw_state(cfg.seed, replica).ctx("initial")?;
    match &cfg.kernel {
        KernelSpec::HodgkinHuxley { .. } => {
            let p = HhParams::squid_axon();
            let steady = |a: f64, b: f64| a / (a + b);
            let mut pos = Vec::with_capacity(4 * x.n_agents());
            for &v in x.positions() {
                pos.extend_from_slice(&[
                    v,
                    steady(p.alpha_n.eval(v), p.beta_n.eval(v)),
                    steady(p.alpha_m.eval(v), p.beta_m.eval(v)),
                    steady(p.alpha_h.eval(v), p.beta_h.eval(v)),
                ]);
            }
            ParticleState::new(pos, 4).ctx("initial")
        }
        _ => Ok(x),
    }
}

fn agent_count(cfg: &ExperimentConfig, w: &SparseWeights) -> Result<usize, LabError> {
    if let KernelSpec::Kuramoto { omega, .. } = &cfg.kernel {
        if omega.len() > 1 && omega.len() != w.n_agents() {
            return Err(config_err("kernel.omega", "needs one entry or one per agent"));
        }
    }
    Ok(w.n_agents())
}

fn require_pde(cfg: &ExperimentConfig) -> Result<(), LabError> {
    if cfg.kernel.supports_pde() {
        Ok(())
    } else {
        Err(config_err(
            "kernel.preset",
            format!("`{}` is particle-only; the PDE needs a bounded one-dimensional kernel", cfg.kernel.name()),
        ))
    }
}

fn check_ledger(context: &'static str, ledger: &ConservationLedger) -> Result<(), LabError> {
    if ledger.max_mass_drift > MASS_DRIFT_LIMIT {
        return Err(LabError::Conservation {
            context,
            drift: ledger.max_mass_drift,
            limit: MASS_DRIFT_LIMIT,
        });
    }
    Ok(())
}

fn simulate(cfg: &ExperimentConfig, base_dir: Option<&Path>) -> Result<Artifacts, LabError> {
    let w = build_weights(cfg, base_dir)?;
    let n = agent_count(cfg, &w)?;
    let dynamics = build_dynamics(cfg, n)?;
    let grid = build_grid(cfg)?;
    let f0 = initial_density(cfg, grid, n)?;
    let x0 = initial_particles(cfg, &f0, 0)?;
    let spec = RunSpec {
        dt: cfg.time.dt,
        method: match cfg.time.method {
            MethodSpec::Euler => Method::Euler,
            MethodSpec::Rk4 => Method::Rk4,
        },
        sigma: cfg.sigma(),
        seed: rng::stream_seed(cfg.seed, Purpose::Noise, 0, 0),
    };
    let states = particles::run(&w, &dynamics, &x0, &spec, &cfg.snapshots()).ctx("simulate")?;
    let mut a = Artifacts::default();
    a.text("weights.edges", formats::write_edge_list(&w));
    a.text("scaling.csv", formats::write_scaling(&w.check_scaling()));
    a.text("trajectory.csv", formats::write_trajectory(&states));
    Ok(a)
}

fn solve_snapshots(
    cfg: &ExperimentConfig,
    w: &SparseWeights,
    dynamics: &Dynamics,
    f0: &FiberedDensity,
    times: &[f64],
) -> Result<Solution, LabError> {
    let sol = Transport::new(f0.grid(), w, &dynamics.kernel, cfg.nu)
        .ctx("solve")?
        .solve_capped(f0, times, cfg.time.dt)
        .ctx("solve")?;
    check_ledger("solve", &sol.ledger)?;
    Ok(sol)
}

fn solve(cfg: &ExperimentConfig, base_dir: Option<&Path>) -> Result<Artifacts, LabError> {
    require_pde(cfg)?;
    let w = build_weights(cfg, base_dir)?;
    let n = agent_count(cfg, &w)?;
    let dynamics = build_dynamics(cfg, n)?;
    let grid = build_grid(cfg)?;
    let f0 = initial_density(cfg, grid, n)?;
    let sol = solve_snapshots(cfg, &w, &dynamics, &f0, &cfg.snapshots())?;
    let mut a = Artifacts::default();
    a.text("density.csv", formats::write_density_csv(&sol.snapshots));
    if cfg.output.binary_density {
        for (k, s) in sol.snapshots.iter().enumerate() {
            a.files.push((format!("density_{k:03}.bin"), formats::write_density_bin(s)));
        }
    }
    a.text("ledger.toml", formats::write_ledger(&sol.ledger));
    a.ledgers.push((grid.topology, sol.ledger));
    Ok(a)
}

/// File stem for a tree: the parent list with `r` for the root.
pub fn tree_stem(t: &meanfield_core::LabeledTree) -> String {
    t.to_text().replace('-', "r").replace(',', "_")
}

fn observe(cfg: &ExperimentConfig, base_dir: Option<&Path>) -> Result<Artifacts, LabError> {
    require_pde(cfg)?;
    let spec = cfg
        .observe
        .as_ref()
        .ok_or_else(|| config_err("observe", "the observe command needs an [observe] table"))?;
    let w = build_weights(cfg, base_dir)?;
    let n = agent_count(cfg, &w)?;
    let dynamics = build_dynamics(cfg, n)?;
    let grid = build_grid(cfg)?;
    let f0 = initial_density(cfg, grid, n)?;
    let snaps = cfg.snapshots();
    let h = cfg.time.dt;
    let t_end = cfg.time.t_end;
    let tol = 1e-12 * t_end.max(1.0);

    // residuals need neighbours at t -+ h
    let with_residual: Vec<f64> = if spec.residuals {
        snaps.iter().copied().filter(|&t| t - h >= -tol && t + h <= t_end + tol).collect()
    } else {
        Vec::new()
    };
    let mut times: Vec<f64> = snaps.clone();
    for &t in &with_residual {
        times.push((t - h).max(0.0));
        times.push((t + h).min(t_end));
    }
    times.sort_by(f64::total_cmp);
    times.dedup_by(|a, b| (*a - *b).abs() <= tol);
    let sol = solve_snapshots(cfg, &w, &dynamics, &f0, &times)?;
    let at = |t: f64| {
        sol.snapshots
            .iter()
            .find(|s| (s.time - t).abs() <= tol)
            .expect("every requested time has a snapshot")
    };

    let mut a = Artifacts::default();
    let mut norms = String::from("t,hierarchy_norm\n");
    for (k, &t) in snaps.iter().enumerate() {
        let state = hierarchy(&w, at(t), spec.n_max, spec.lambda).ctx("observe")?;
        for o in &state.entries {
            let stem = format!("observables/s{k:03}_{}", tree_stem(&o.tree));
            if o.order() <= 2 {
                a.text(format!("{stem}.csv"), formats::write_observable_csv(o));
            } else {
                a.files.push((format!("{stem}.bin"), formats::write_observable_bin(o)));
            }
        }
        norms.push_str(&format!("{:?},{:?}\n", t, hierarchy_norm(&state)));
    }
    a.text("hierarchy_norms.csv", norms);

    if spec.residuals {
        let max_order = spec.n_max.min(observables::MAX_GRID_ORDER - 1);
        let mut table = String::from("tree,t,dt,dx,residual\n");
        for &t in &with_residual {
            let series = [at((t - h).max(0.0)).clone(), at(t).clone(), at((t + h).min(t_end)).clone()];
            for order in 1..=max_order {
                for tree in enumerate_trees(order).ctx("observe")? {
                    let r = hierarchy_residual(&tree, &w, &series, &dynamics.kernel, cfg.nu).ctx("observe")?;
                    table.push_str(&format!("\"{}\",{:?},{:?},{:?},{:?}\n", tree.to_text(), r.time, r.dt, r.dx, r.value));
                }
            }
        }
        a.text("residuals.csv", table);
    }
    a.text("ledger.toml", formats::write_ledger(&sol.ledger));
    a.ledgers.push((grid.topology, sol.ledger));
    Ok(a)
}

fn rearrange_cmd(cfg: &ExperimentConfig) -> Result<Artifacts, LabError> {
    let spec = cfg
        .rearrange
        .as_ref()
        .ok_or_else(|| config_err("rearrange", "the rearrange command needs a [rearrange] table"))?;
    let g = match spec.mode {
        RearrangeMode::Strict => CellFunctions::random_strict(spec.funcs, spec.cells, cfg.seed, spec.instance),
        RearrangeMode::General => {
            let mut r = rng::stream(cfg.seed, Purpose::CellFunctions, spec.instance, 1);
            let values = (0..spec.funcs * spec.cells).map(|_| r.random_range(-1.0..1.0)).collect();
            CellFunctions::general(spec.funcs, values)
        }
    }
    .ctx("rearrange")?;
    let phi = rearrange::build_phi(&g);
    let shifts = spec.shifts.clone().unwrap_or_else(|| {
        core::iter::successors(Some(1usize), |h| h.checked_mul(2))
            .take_while(|&h| h < spec.cells)
            .collect()
    });
    let table = rearrange::modulus(&g, &phi, &shifts).ctx("rearrange")?;
    let bounds = rearrange::level_bounds(&g, &phi).ctx("rearrange")?;
    let mut lb = String::from("k,max_shift,worst,bound,holds\n");
    for b in &bounds {
        lb.push_str(&format!("{},{},{:?},{:?},{}\n", b.k, b.max_shift, b.worst, b.bound, b.holds()));
    }
    let mut a = Artifacts::default();
    a.text("permutation.txt", formats::write_permutation(&phi.perm));
    a.text("modulus.csv", formats::write_modulus(&table));
    a.text("level_bounds.csv", lb);
    Ok(a)
}

fn convergence(cfg: &ExperimentConfig) -> Result<Artifacts, LabError> {
    require_pde(cfg)?;
    let spec = cfg
        .convergence
        .as_ref()
        .ok_or_else(|| config_err("convergence", "the convergence command needs a [convergence] table"))?;
    let grid = build_grid(cfg)?;
    let mut a = Artifacts::default();
    for p in &spec.runs {
        let w = class_permutation(p.n_agents, p.class_size, 1)?;
        let dynamics = build_dynamics(cfg, p.n_agents)?;
        let f0 = initial_density(cfg, grid, p.n_agents)?;
        let setup = GapSetup {
            weights: &w,
            dynamics: &dynamics,
            initial: &f0,
            nu: cfg.nu,
            dt: cfg.time.dt,
            times: cfg.snapshots(),
            seed: cfg.seed,
            bootstrap: spec.bootstrap,
        };
        let tag = format!("n{}_m{}", p.n_agents, p.class_size);
        if spec.replicas > 0 {
            let run = metrics::independence_gap(&setup, spec.replicas).ctx("independence gap")?;
            check_ledger("independence gap", &run.ledger)?;
            a.text(format!("gap_independence_{tag}.csv"), formats::write_gap_reports(&run.reports));
            a.ledgers.push((grid.topology, run.ledger));
        }
        if spec.seeds > 0 {
            let run = metrics::meanfield_gap(&setup, spec.seeds).ctx("mean-field gap")?;
            check_ledger("mean-field gap", &run.ledger)?;
            a.text(format!("gap_meanfield_{tag}.csv"), formats::write_gap_reports(&run.reports));
            a.ledgers.push((grid.topology, run.ledger));
        }
    }
    Ok(a)
}
