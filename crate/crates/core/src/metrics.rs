//! Exact 1-D Wasserstein-1 distances and the Monte Carlo gap experiments
//! comparing particle systems with the fibered PDE.

use alloc::vec;
use alloc::vec::Vec;

#[allow(unused_imports)]
use num_traits::Float;
use rand::Rng;

use crate::error::{Error, Result};
use crate::graph::SparseWeights;
use crate::particles::{self, Dynamics, Method, ParticleState, RunSpec};
use crate::pde::{self, ConservationLedger, FiberedDensity, Grid1D};
use crate::rng::{self, Purpose};

const MASS_TOL: f64 = 1e-9;

/// A probability law on the line: weighted atoms or a piecewise-constant
/// density on a grid.
#[derive(Debug, Clone, PartialEq)]
pub enum Law1D {
    Atoms { points: Vec<f64>, weights: Vec<f64> },
    Grid { grid: Grid1D, density: Vec<f64> },
}

fn check_mass(mass: f64) -> Result<()> {
    if !((mass - 1.0).abs() <= MASS_TOL) {
        return Err(Error::Unnormalized { mass });
    }
    Ok(())
}

impl Law1D {
    pub fn atoms(points: Vec<f64>, weights: Vec<f64>) -> Result<Self> {
        if points.len() != weights.len() || points.is_empty() {
            return Err(Error::invalid("atoms", "need matching, nonempty points and weights"));
        }
        if points.iter().any(|p| !p.is_finite()) || weights.iter().any(|w| !(*w >= 0.0) || !w.is_finite()) {
            return Err(Error::invalid("atoms", "points must be finite and weights nonnegative"));
        }
        check_mass(crate::neumaier_sum(weights.iter().copied()))?;
        let mut pairs: Vec<(f64, f64)> = points.into_iter().zip(weights).collect();
        pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
        let (points, weights) = pairs.into_iter().unzip();
        Ok(Law1D::Atoms { points, weights })
    }

    /// Equal weights `1/n`.
    pub fn empirical(points: &[f64]) -> Result<Self> {
        if points.is_empty() || points.iter().any(|p| !p.is_finite()) {
            return Err(Error::invalid("atoms", "need finite points"));
        }
        let mut points = points.to_vec();
        points.sort_by(f64::total_cmp);
        let w = 1.0 / points.len() as f64;
        Ok(Law1D::Atoms {
            weights: vec![w; points.len()],
            points,
        })
    }

    pub fn grid(grid: Grid1D, density: Vec<f64>) -> Result<Self> {
        if density.len() != grid.n_cells {
            return Err(Error::DimensionMismatch {
                context: "grid law",
                expected: grid.n_cells,
                found: density.len(),
            });
        }
        if density.iter().any(|v| !(*v >= 0.0) || !v.is_finite()) {
            return Err(Error::invalid("density", "values must be finite and nonnegative"));
        }
        check_mass(crate::neumaier_sum(density.iter().copied()) * grid.dx())?;
        Ok(Law1D::Grid { grid, density })
    }

    /// Grid law rescaled to mass one (e.g. after boundary leakage).
    pub fn grid_normalized(grid: Grid1D, mut density: Vec<f64>) -> Result<Self> {
        let mass = crate::neumaier_sum(density.iter().copied()) * grid.dx();
        if !(mass > 0.0) {
            return Err(Error::Unnormalized { mass });
        }
        for v in &mut density {
            *v /= mass;
        }
        Self::grid(grid, density)
    }

    /// Atoms at cell centers carrying the cell masses.
    pub fn atomized(&self) -> Law1D {
        match self {
            Law1D::Atoms { .. } => self.clone(),
            Law1D::Grid { grid, density } => Law1D::Atoms {
                points: grid.centers(),
                weights: density.iter().map(|v| v * grid.dx()).collect(),
            },
        }
    }

    fn breakpoints(&self, out: &mut Vec<f64>) {
        match self {
            Law1D::Atoms { points, .. } => out.extend_from_slice(points),
            Law1D::Grid { grid, .. } => {
                out.extend((0..=grid.n_cells).map(|c| grid.x_min + c as f64 * grid.dx()))
            }
        }
    }
}

/// Cumulative distribution evaluated along increasing arguments.
struct Cdf<'a> {
    law: &'a Law1D,
    cum: Vec<f64>,
}

impl<'a> Cdf<'a> {
    fn new(law: &'a Law1D) -> Self {
        let cum = match law {
            Law1D::Atoms { weights, .. } => prefix(weights.iter().copied()),
            Law1D::Grid { grid, density } => prefix(density.iter().map(|v| v * grid.dx())),
        };
        Cdf { law, cum }
    }

    /// `(F(x), F(x-))`.
    fn at(&self, x: f64) -> (f64, f64) {
        match self.law {
            Law1D::Atoms { points, .. } => {
                let right = points.partition_point(|p| *p <= x);
                let left = points.partition_point(|p| *p < x);
                (self.cum[right], self.cum[left])
            }
            Law1D::Grid { grid, density } => {
                let dx = grid.dx();
                let s = (x - grid.x_min) / dx;
                let v = if s <= 0.0 {
                    0.0
                } else if s >= grid.n_cells as f64 {
                    self.cum[grid.n_cells]
                } else {
                    let c = s.floor() as usize;
                    self.cum[c] + density[c] * (x - (grid.x_min + c as f64 * dx))
                };
                (v, v)
            }
        }
    }
}

fn prefix<I: Iterator<Item = f64>>(it: I) -> Vec<f64> {
    let mut out = vec![0.0];
    let mut acc = 0.0;
    for v in it {
        acc += v;
        out.push(acc);
    }
    out
}

/// `W_1(a, b) = int |F_a - F_b| dx`, exact for atoms and piecewise-constant
/// densities: both CDFs are linear between merged breakpoints.
pub fn w1(a: &Law1D, b: &Law1D) -> f64 {
    let mut xs = Vec::new();
    a.breakpoints(&mut xs);
    b.breakpoints(&mut xs);
    xs.sort_by(f64::total_cmp);
    xs.dedup();
    let (fa, fb) = (Cdf::new(a), Cdf::new(b));
    let mut total = 0.0;
    for pair in xs.windows(2) {
        let (x0, x1) = (pair[0], pair[1]);
        let len = x1 - x0;
        if len <= 0.0 {
            continue;
        }
        let d0 = fa.at(x0).0 - fb.at(x0).0;
        let d1 = fa.at(x1).1 - fb.at(x1).1;
        total += if d0 * d1 >= 0.0 {
            0.5 * (d0.abs() + d1.abs()) * len
        } else {
            0.5 * (d0 * d0 + d1 * d1) / (d0 - d1).abs() * len
        };
    }
    total
}

/// `C_1(t) = sqrt(2/C) (exp(2 C t ||K||_{W^{1,inf}}) - 1)`; the `C -> 0`
/// limit is 0.
pub fn c1(t: f64, c: f64, k_w1inf: f64) -> f64 {
    if c == 0.0 {
        return 0.0;
    }
    (2.0 / c).sqrt() * (2.0 * c * t * k_w1inf).exp_m1()
}

/// `C_2(t) = (2 M^2 + 2 C^2 ||K||_inf^2 t^2)^{1/2}`.
pub fn c2(t: f64, m: f64, c: f64, k_sup: f64) -> f64 {
    (2.0 * m * m + 2.0 * c * c * k_sup * k_sup * t * t).sqrt()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GapReport {
    pub t: f64,
    pub gap: f64,
    /// Explicit right-hand side `C_1(t) sup|w_ij|^{1/2}`.
    pub bound: f64,
    pub stderr: f64,
    pub seeds: usize,
    /// Estimator tolerance `3 stderr + dx` granted on top of `bound`.
    pub tolerance: f64,
}

impl GapReport {
    pub fn within_bound(&self) -> bool {
        self.gap <= self.bound + self.tolerance
    }
}

/// Draws positions from the fibers of a density, uniformly within cells.
pub struct FiberSampler {
    grid: Grid1D,
    cum: Vec<Vec<f64>>,
}

impl FiberSampler {
    pub fn new(f: &FiberedDensity) -> Result<Self> {
        let mut cum = Vec::with_capacity(f.n_fibers());
        for i in 0..f.n_fibers() {
            let c = prefix(f.fiber(i).iter().copied());
            if !(c[c.len() - 1] > 0.0) {
                return Err(Error::Unnormalized { mass: 0.0 });
            }
            cum.push(c);
        }
        Ok(FiberSampler { grid: *f.grid(), cum })
    }

    pub fn sample<R: Rng>(&self, fiber: usize, r: &mut R) -> f64 {
        let cum = &self.cum[fiber];
        let total = cum[cum.len() - 1];
        let u: f64 = r.random::<f64>() * total;
        let c = (cum.partition_point(|v| *v <= u).max(1) - 1).min(self.grid.n_cells - 1);
        let v: f64 = r.random();
        self.grid.x_min + (c as f64 + v) * self.grid.dx()
    }

    /// Initial state of replica `replica`: agent `i` drawn from fiber `i`
    /// on its own stream.
    pub fn draw_state(&self, seed: u64, replica: u64) -> Result<ParticleState> {
        let n = self.cum.len();
        let positions = (0..n)
            .map(|i| {
                let mut r = rng::stream(seed, Purpose::InitialPosition, replica, i as u64);
                self.sample(i, &mut r)
            })
            .collect();
        ParticleState::new(positions, 1)
    }
}

/// Common inputs of the gap experiments. Particles use the step `dt` (RK4,
/// or Euler-Maruyama with `sigma = sqrt(2 nu)` when `nu > 0`); the PDE runs
/// with automatic steps.
#[derive(Debug, Clone)]
pub struct GapSetup<'a> {
    pub weights: &'a SparseWeights,
    pub dynamics: &'a Dynamics,
    /// Initial per-agent laws, also the PDE initial data.
    pub initial: &'a FiberedDensity,
    pub nu: f64,
    pub dt: f64,
    /// Report times, nondecreasing, starting at or after 0.
    pub times: Vec<f64>,
    pub seed: u64,
    /// Bootstrap resamples for the standard error.
    pub bootstrap: usize,
}

#[derive(Debug, Clone)]
pub struct GapRun {
    pub reports: Vec<GapReport>,
    pub ledger: ConservationLedger,
}

impl GapSetup<'_> {
    fn validate(&self) -> Result<()> {
        if self.dynamics.kernel.dim != 1 {
            return Err(Error::invalid("kernel", "gap experiments are one-dimensional"));
        }
        if self.weights.n_agents() != self.initial.n_fibers() {
            return Err(Error::DimensionMismatch {
                context: "weights vs initial laws",
                expected: self.initial.n_fibers(),
                found: self.weights.n_agents(),
            });
        }
        if self.times.is_empty() {
            return Err(Error::invalid("times", "need at least one report time"));
        }
        Ok(())
    }

    fn solve_pde(&self) -> Result<pde::Solution> {
        let mut f0 = self.initial.clone();
        f0.time = 0.0;
        pde::Transport::new(f0.grid(), self.weights, &self.dynamics.kernel, self.nu)?.solve(&f0, &self.times)
    }

    fn spec(&self, replica: u64) -> RunSpec {
        RunSpec {
            dt: self.dt,
            method: Method::Rk4,
            sigma: (2.0 * self.nu).sqrt(),
            seed: rng::stream_seed(self.seed, Purpose::Noise, replica, 0),
        }
    }

    /// Positions per replica and report time: `out[r][t]` is `N` values.
    fn run_replicas(&self, n: usize) -> Result<Vec<Vec<Vec<f64>>>> {
        let sampler = FiberSampler::new(self.initial)?;
        crate::exec::map_range(n, |r| -> Result<Vec<Vec<f64>>> {
            let x0 = sampler.draw_state(self.seed, r as u64)?;
            let states = particles::run(self.weights, self.dynamics, &x0, &self.spec(r as u64), &self.times)?;
            Ok(states.into_iter().map(|s| s.positions().to_vec()).collect())
        })
        .into_iter()
        .collect()
    }

    fn explicit_bound(&self, t: f64) -> f64 {
        let s = self.weights.check_scaling();
        c1(t, s.max_row_abs_sum, self.dynamics.kernel.w1inf_norm()) * s.max_entry_abs.sqrt()
    }
}

fn std_dev(xs: &[f64]) -> f64 {
    if xs.len() < 2 {
        return 0.0;
    }
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    (xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1.0)).sqrt()
}

pub const MIN_REPLICAS: usize = 100;

/// `sup_i W_1(Law(X_i(t)), f_i(t))` with `Law(X_i(t))` estimated by the
/// empirical measure over `n_replicas` independent particle runs, against
/// `C_1(t) sup|w_ij|^{1/2}`.
pub fn independence_gap(setup: &GapSetup<'_>, n_replicas: usize) -> Result<GapRun> {
    setup.validate()?;
    if n_replicas < MIN_REPLICAS {
        return Err(Error::invalid("n_replicas", "at least 100 replicas are required"));
    }
    let solution = setup.solve_pde()?;
    let runs = setup.run_replicas(n_replicas)?;
    let n = setup.weights.n_agents();
    let dx = setup.initial.grid().dx();
    let mut reports = Vec::with_capacity(setup.times.len());
    for (ti, &t) in setup.times.iter().enumerate() {
        let snap = &solution.snapshots[ti];
        let fibers: Vec<Law1D> = (0..n)
            .map(|i| Law1D::grid_normalized(*snap.grid(), snap.fiber(i).to_vec()))
            .collect::<Result<_>>()?;
        let samples: Vec<Vec<f64>> = (0..n)
            .map(|i| runs.iter().map(|r| r[ti][i]).collect())
            .collect();
        let gap_of = |pick: &(dyn Fn(usize) -> usize + Sync)| -> f64 {
            crate::exec::map_range(n, |i| {
                let pts: Vec<f64> = (0..n_replicas).map(|r| samples[i][pick(r)]).collect();
                w1(&Law1D::empirical(&pts).expect("finite samples"), &fibers[i])
            })
            .into_iter()
            .fold(0.0, f64::max)
        };
        let gap = gap_of(&|r| r);
        let boots: Vec<f64> = (0..setup.bootstrap)
            .map(|b| {
                let mut r = rng::stream(setup.seed, Purpose::Bootstrap, b as u64, ti as u64);
                let idx: Vec<usize> = (0..n_replicas).map(|_| r.random_range(0..n_replicas)).collect();
                gap_of(&|k| idx[k])
            })
            .collect();
        let stderr = std_dev(&boots);
        reports.push(GapReport {
            t,
            gap,
            bound: setup.explicit_bound(t),
            stderr,
            seeds: n_replicas,
            tolerance: 3.0 * stderr + dx,
        });
    }
    Ok(GapRun {
        reports,
        ledger: solution.ledger,
    })
}

/// Seed-averaged `W_1(mu_N(t), (1/N) sum_i f_i(t))` from finished runs:
/// `particles[s][t]` is seed `s` at report time `t`, `marginals[t]` the
/// fibered PDE solution at the same times.
pub fn meanfield_gap_from_runs(
    particles: &[Vec<ParticleState>],
    marginals: &[FiberedDensity],
    bound: impl Fn(f64) -> f64,
) -> Result<Vec<GapReport>> {
    if particles.is_empty() {
        return Err(Error::invalid("particles", "need at least one seed"));
    }
    let mut reports = Vec::with_capacity(marginals.len());
    for (ti, snap) in marginals.iter().enumerate() {
        let law = Law1D::grid_normalized(*snap.grid(), pde::marginal(snap))?;
        let per_seed: Vec<f64> = particles
            .iter()
            .map(|run| {
                let s = run.get(ti).ok_or(Error::invalid("particles", "missing report time"))?;
                Ok(w1(&Law1D::empirical(s.positions())?, &law))
            })
            .collect::<Result<_>>()?;
        let k = per_seed.len();
        let gap = per_seed.iter().sum::<f64>() / k as f64;
        let stderr = std_dev(&per_seed) / (k as f64).sqrt();
        reports.push(GapReport {
            t: snap.time,
            gap,
            bound: bound(snap.time),
            stderr,
            seeds: k,
            tolerance: 3.0 * stderr + snap.grid().dx(),
        });
    }
    Ok(reports)
}

/// Runs `n_seeds` particle systems and the PDE and reports the seed-averaged
/// mean-field gap at each time. `bound` carries only the explicit part
/// `C_1(t) sup|w_ij|^{1/2}` of the estimate; the sampling term has no
/// explicit constant.
pub fn meanfield_gap(setup: &GapSetup<'_>, n_seeds: usize) -> Result<GapRun> {
    setup.validate()?;
    if n_seeds == 0 {
        return Err(Error::invalid("n_seeds", "must be positive"));
    }
    let solution = setup.solve_pde()?;
    let sampler = FiberSampler::new(setup.initial)?;
    let runs: Vec<Vec<ParticleState>> = crate::exec::map_range(n_seeds, |s| {
        let x0 = sampler.draw_state(setup.seed, s as u64)?;
        particles::run(setup.weights, setup.dynamics, &x0, &setup.spec(s as u64), &setup.times)
    })
    .into_iter()
    .collect::<Result<_>>()?;
    let reports = meanfield_gap_from_runs(&runs, &solution.snapshots, |t| setup.explicit_bound(t))?;
    Ok(GapRun {
        reports,
        ledger: solution.ledger,
    })
}
