//! Conservative finite-volume solver for the coupled fibered transport
//! system
//!
//! `d_t f(x, xi) + d_x( f(x, xi) V_f(x, xi) ) = nu d_xx f(x, xi)`,
//! `V_f(x, xi) = sum_zeta w_{xi zeta} phi_zeta(x)`, `phi_zeta = K * f(., zeta)`,
//!
//! one fiber per agent (or per cell of a coarser xi-partition).

#[cfg(feature = "std")]
use alloc::sync::Arc;
use alloc::vec;
use alloc::vec::Vec;

#[allow(unused_imports)]
use num_traits::Float;

use crate::error::{Error, Result};
use crate::graph::{check_permutation, SparseWeights};
use crate::kernel::{Domain, Kernel};
use crate::particles::check_output_times;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Topology {
    /// Truncated line: nothing flows in, outflow is booked as leakage.
    Line,
    /// Periodic cell `[x_min, x_max)`.
    Torus,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid1D {
    pub x_min: f64,
    pub x_max: f64,
    pub n_cells: usize,
    pub topology: Topology,
}

impl Grid1D {
    pub const MIN_CELLS: usize = 8;

    pub fn new(x_min: f64, x_max: f64, n_cells: usize, topology: Topology) -> Result<Self> {
        if !x_min.is_finite() || !x_max.is_finite() || !(x_max > x_min) {
            return Err(Error::invalid("grid", "need finite bounds with x_max > x_min"));
        }
        if n_cells < Self::MIN_CELLS {
            return Err(Error::invalid("grid.n_cells", "at least 8 cells required"));
        }
        Ok(Grid1D {
            x_min,
            x_max,
            n_cells,
            topology,
        })
    }

    #[inline]
    pub fn dx(&self) -> f64 {
        (self.x_max - self.x_min) / self.n_cells as f64
    }

    #[inline]
    pub fn center(&self, c: usize) -> f64 {
        self.x_min + (c as f64 + 0.5) * self.dx()
    }

    pub fn centers(&self) -> Vec<f64> {
        (0..self.n_cells).map(|c| self.center(c)).collect()
    }

    pub fn length(&self) -> f64 {
        self.x_max - self.x_min
    }

    /// The same interval with twice as many cells.
    pub fn refined(&self) -> Self {
        Grid1D {
            n_cells: 2 * self.n_cells,
            ..*self
        }
    }

    pub fn domain(&self) -> Domain {
        match self.topology {
            Topology::Line => Domain::Line,
            Topology::Torus => Domain::Torus {
                period: self.length(),
            },
        }
    }

    /// Index of the cell containing `x`, or `None` outside the line grid.
    pub fn cell_of(&self, x: f64) -> Option<usize> {
        let x = self.domain().reduce(x - self.x_min) + self.x_min;
        let c = ((x - self.x_min) / self.dx()).floor();
        if c < 0.0 || c >= self.n_cells as f64 || c.is_nan() {
            None
        } else {
            Some(c as usize)
        }
    }
}

/// Per-fiber densities `f(x, xi)` on a common grid, `n_fibers x G`
/// row-major, together with the boundary bookkeeping of the run that
/// produced them.
#[derive(Debug, Clone, PartialEq)]
pub struct FiberedDensity {
    grid: Grid1D,
    n_fibers: usize,
    values: Vec<f64>,
    pub time: f64,
    /// Mass that left each fiber through the ends of a line grid.
    pub leakage: Vec<f64>,
    /// Total negative mass removed by the positivity clamp.
    pub clamped: f64,
}

impl FiberedDensity {
    pub fn new(grid: Grid1D, n_fibers: usize, values: Vec<f64>) -> Result<Self> {
        if n_fibers == 0 {
            return Err(Error::invalid("n_fibers", "must be positive"));
        }
        if values.len() != n_fibers * grid.n_cells {
            return Err(Error::DimensionMismatch {
                context: "density values",
                expected: n_fibers * grid.n_cells,
                found: values.len(),
            });
        }
        if values.iter().any(|v| !v.is_finite() || *v < 0.0) {
            return Err(Error::invalid("density", "values must be finite and nonnegative"));
        }
        Ok(FiberedDensity {
            grid,
            n_fibers,
            values,
            time: 0.0,
            leakage: vec![0.0; n_fibers],
            clamped: 0.0,
        })
    }

    pub fn zeros(grid: Grid1D, n_fibers: usize) -> Result<Self> {
        Self::new(grid, n_fibers, vec![0.0; n_fibers * grid.n_cells])
    }

    /// Samples `density(fiber, x)` at cell centers.
    pub fn from_fn<F: Fn(usize, f64) -> f64>(grid: Grid1D, n_fibers: usize, density: F) -> Result<Self> {
        let mut values = Vec::with_capacity(n_fibers * grid.n_cells);
        for i in 0..n_fibers {
            for c in 0..grid.n_cells {
                values.push(density(i, grid.center(c)));
            }
        }
        Self::new(grid, n_fibers, values)
    }

    /// Rescales every fiber with positive mass to mass one.
    pub fn normalized(mut self) -> Self {
        let g = self.grid.n_cells;
        let dx = self.grid.dx();
        for fiber in self.values.chunks_mut(g) {
            let m = crate::neumaier_sum(fiber.iter().copied()) * dx;
            if m > 0.0 {
                for v in fiber {
                    *v /= m;
                }
            }
        }
        self
    }

    pub fn grid(&self) -> &Grid1D {
        &self.grid
    }

    pub fn n_fibers(&self) -> usize {
        self.n_fibers
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn fiber(&self, i: usize) -> &[f64] {
        let g = self.grid.n_cells;
        &self.values[i * g..(i + 1) * g]
    }

    pub fn fiber_mass(&self, i: usize) -> f64 {
        crate::neumaier_sum(self.fiber(i).iter().copied()) * self.grid.dx()
    }

    pub fn masses(&self) -> Vec<f64> {
        (0..self.n_fibers).map(|i| self.fiber_mass(i)).collect()
    }

    pub fn max_fiber_mass(&self) -> f64 {
        self.masses().into_iter().fold(0.0, f64::max)
    }

    pub fn max_value(&self) -> f64 {
        self.values.iter().copied().fold(0.0, f64::max)
    }

    /// Discrete `W^{1,inf}` seminorm `max |f_{c+1} - f_c| / dx` over fibers.
    pub fn lipschitz_seminorm(&self) -> f64 {
        let g = self.grid.n_cells;
        let dx = self.grid.dx();
        let torus = self.grid.topology == Topology::Torus;
        let mut best = 0.0f64;
        for fiber in self.values.chunks(g) {
            for c in 0..g {
                let next = if c + 1 < g {
                    fiber[c + 1]
                } else if torus {
                    fiber[0]
                } else {
                    continue;
                };
                best = best.max((next - fiber[c]).abs() / dx);
            }
        }
        best
    }

    /// Fiber `i` of the result is fiber `perm[i]` of `self`.
    pub fn permuted(&self, perm: &[usize]) -> Result<Self> {
        if perm.len() != self.n_fibers {
            return Err(Error::DimensionMismatch {
                context: "permutation",
                expected: self.n_fibers,
                found: perm.len(),
            });
        }
        check_permutation(perm)?;
        let mut values = Vec::with_capacity(self.values.len());
        for &p in perm {
            values.extend_from_slice(self.fiber(p));
        }
        Ok(FiberedDensity {
            values,
            leakage: perm.iter().map(|&p| self.leakage[p]).collect(),
            ..self.clone()
        })
    }
}

/// Average over fibers, `(1/N) sum_i f_i(x)`.
pub fn marginal(f: &FiberedDensity) -> Vec<f64> {
    let g = f.grid.n_cells;
    let n = f.n_fibers as f64;
    (0..g)
        .map(|c| (0..f.n_fibers).map(|i| f.values[i * g + c]).sum::<f64>() / n)
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct VelocityFieldGrid {
    pub n_fibers: usize,
    pub n_cells: usize,
    pub values: Vec<f64>,
}

impl VelocityFieldGrid {
    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn fiber(&self, i: usize) -> &[f64] {
        &self.values[i * self.n_cells..(i + 1) * self.n_cells]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ConvolutionMethod {
    /// Direct `O(G^2)` sums.
    Direct,
    /// FFT when available (`std` feature), direct sums otherwise.
    #[default]
    Auto,
}

#[cfg(feature = "std")]
struct FftPlan {
    size: usize,
    forward: Arc<dyn rustfft::Fft<f64>>,
    inverse: Arc<dyn rustfft::Fft<f64>>,
    kernel_hat: Vec<rustfft::num_complex::Complex<f64>>,
}

/// Discrete convolution `phi(x_c) = sum_c' K(x_c - x_c') f_c' dx` for one
/// kernel and grid, precomputed.
pub struct Convolver {
    g: usize,
    dx: f64,
    torus: bool,
    /// Torus: `table[m] = K(m dx)` wrapped, `m in 0..G`.
    /// Line: `table[m + G - 1] = K(m dx)`, `m in -(G-1)..G`.
    table: Vec<f64>,
    #[cfg(feature = "std")]
    fft: Option<FftPlan>,
}

impl Convolver {
    pub fn new(grid: &Grid1D, k: &Kernel, method: ConvolutionMethod) -> Result<Self> {
        k.require_dim(1, "grid kernels")?;
        if let Domain::Torus { period } = k.domain {
            if grid.topology != Topology::Torus || (grid.length() - period).abs() > 1e-9 * period {
                return Err(Error::invalid(
                    "grid",
                    "a periodic kernel needs a torus grid of the same period",
                ));
            }
        }
        let g = grid.n_cells;
        let dx = grid.dx();
        let torus = grid.topology == Topology::Torus;
        let domain = grid.domain();
        let table: Vec<f64> = if torus {
            (0..g).map(|m| k.eval1(domain.wrap_diff(m as f64 * dx))).collect()
        } else {
            (0..2 * g - 1)
                .map(|m| k.eval1((m as f64 - (g as f64 - 1.0)) * dx))
                .collect()
        };
        #[cfg(feature = "std")]
        let fft = match method {
            ConvolutionMethod::Direct => None,
            ConvolutionMethod::Auto => Some(Self::plan(g, torus, &table)),
        };
        #[cfg(not(feature = "std"))]
        let _ = method;
        Ok(Convolver {
            g,
            dx,
            torus,
            table,
            #[cfg(feature = "std")]
            fft,
        })
    }

    #[cfg(feature = "std")]
    fn plan(g: usize, torus: bool, table: &[f64]) -> FftPlan {
        use rustfft::num_complex::Complex;
        let size = if torus { g } else { (2 * g - 1).next_power_of_two() };
        let mut planner = rustfft::FftPlanner::new();
        let forward = planner.plan_fft_forward(size);
        let inverse = planner.plan_fft_inverse(size);
        let mut kernel_hat = vec![Complex::new(0.0, 0.0); size];
        if torus {
            for (k, t) in kernel_hat.iter_mut().zip(table) {
                k.re = *t;
            }
        } else {
            for m in 0..g {
                kernel_hat[m].re = table[m + g - 1];
            }
            for m in 1..g {
                kernel_hat[size - m].re = table[g - 1 - m];
            }
        }
        forward.process(&mut kernel_hat);
        FftPlan {
            size,
            forward,
            inverse,
            kernel_hat,
        }
    }

    #[inline]
    pub(crate) fn tap(&self, offset: isize) -> f64 {
        if self.torus {
            self.table[offset.rem_euclid(self.g as isize) as usize]
        } else {
            self.table[(offset + self.g as isize - 1) as usize]
        }
    }

    pub fn convolve_direct(&self, fiber: &[f64]) -> Vec<f64> {
        (0..self.g)
            .map(|c| {
                let mut acc = 0.0;
                for (cp, v) in fiber.iter().enumerate() {
                    if *v != 0.0 {
                        acc += self.tap(c as isize - cp as isize) * v;
                    }
                }
                acc * self.dx
            })
            .collect()
    }

    pub fn convolve(&self, fiber: &[f64]) -> Vec<f64> {
        if fiber.iter().all(|v| *v == 0.0) {
            return vec![0.0; self.g];
        }
        #[cfg(feature = "std")]
        if let Some(p) = &self.fft {
            use rustfft::num_complex::Complex;
            let mut buf = vec![Complex::new(0.0, 0.0); p.size];
            for (b, v) in buf.iter_mut().zip(fiber) {
                b.re = *v;
            }
            p.forward.process(&mut buf);
            for (b, k) in buf.iter_mut().zip(&p.kernel_hat) {
                *b *= *k;
            }
            p.inverse.process(&mut buf);
            let scale = self.dx / p.size as f64;
            return buf[..self.g].iter().map(|b| b.re * scale).collect();
        }
        self.convolve_direct(fiber)
    }

    /// `phi` for every fiber, `n_fibers x G`.
    pub fn convolve_fibers(&self, f: &FiberedDensity) -> Vec<f64> {
        crate::exec::map_range(f.n_fibers, |i| self.convolve(f.fiber(i)))
            .into_iter()
            .flatten()
            .collect()
    }
}

fn check_pair(f: &FiberedDensity, w: &SparseWeights) -> Result<()> {
    if w.n_agents() != f.n_fibers {
        return Err(Error::DimensionMismatch {
            context: "weights vs fibers",
            expected: f.n_fibers,
            found: w.n_agents(),
        });
    }
    Ok(())
}

fn velocity_with(f: &FiberedDensity, w: &SparseWeights, conv: &Convolver) -> Result<VelocityFieldGrid> {
    check_pair(f, w)?;
    let phi = conv.convolve_fibers(f);
    Ok(VelocityFieldGrid {
        n_fibers: f.n_fibers,
        n_cells: f.grid.n_cells,
        values: w.apply_rows_block(&phi, f.grid.n_cells)?,
    })
}

/// `V_f(x_c, xi) = sum_zeta w_{xi zeta} phi_zeta(x_c)`.
pub fn velocity(f: &FiberedDensity, w: &SparseWeights, k: &Kernel) -> Result<VelocityFieldGrid> {
    velocity_with(f, w, &Convolver::new(&f.grid, k, ConvolutionMethod::Auto)?)
}

/// Largest step allowed by the advective and diffusive CFL conditions.
pub fn admissible_dt(max_speed: f64, dx: f64, nu: f64) -> f64 {
    let adv = if max_speed > 0.0 { 0.4 * dx / max_speed } else { f64::INFINITY };
    let diff = if nu > 0.0 { 0.25 * dx * dx / nu } else { f64::INFINITY };
    adv.min(diff)
}

/// Diagnostics of one transport step.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct StepStats {
    /// Largest per-fiber `|mass_after + outflow - mass_before|`.
    pub mass_drift: f64,
    pub max_speed: f64,
    /// `max_row_abs_sum * sup|K| * max_fiber_mass` for this step.
    pub speed_bound: f64,
    pub clamped: f64,
}

fn transport_update(
    f: &FiberedDensity,
    v: &VelocityFieldGrid,
    dt: f64,
    nu: f64,
) -> (FiberedDensity, StepStats) {
    let g = f.grid.n_cells;
    let dx = f.grid.dx();
    let torus = f.grid.topology == Topology::Torus;
    let lambda = dt / dx;
    let diff = nu / dx;
    let per_fiber = crate::exec::map_range(f.n_fibers, |i| {
        let u = f.fiber(i);
        let vel = v.fiber(i);
        // flux[c] lives on the face to the left of cell c; flux[g] on the
        // right end.
        let mut flux = vec![0.0; g + 1];
        for c in 1..g {
            let s = 0.5 * (vel[c - 1] + vel[c]);
            let up = if s > 0.0 { u[c - 1] } else { u[c] };
            flux[c] = s * up - diff * (u[c] - u[c - 1]);
        }
        if torus {
            let s = 0.5 * (vel[g - 1] + vel[0]);
            let up = if s > 0.0 { u[g - 1] } else { u[0] };
            flux[0] = s * up - diff * (u[0] - u[g - 1]);
            flux[g] = flux[0];
        } else {
            flux[0] = vel[0].min(0.0) * u[0] - diff * u[0];
            flux[g] = vel[g - 1].max(0.0) * u[g - 1] + diff * u[g - 1];
        }
        let mut next: Vec<f64> = (0..g)
            .map(|c| u[c] - lambda * (flux[c + 1] - flux[c]))
            .collect();
        let outflow = if torus {
            0.0
        } else {
            dt * (flux[g] - flux[0])
        };
        let mut clamped = 0.0;
        for x in &mut next {
            if *x < 0.0 {
                clamped -= *x * dx;
                *x = 0.0;
            }
        }
        let before = crate::neumaier_sum(u.iter().copied()) * dx;
        let after = crate::neumaier_sum(next.iter().copied()) * dx;
        let drift = (after - clamped + outflow - before).abs();
        (next, outflow, clamped, drift)
    });
    let mut values = Vec::with_capacity(f.values.len());
    let mut leakage = f.leakage.clone();
    let mut stats = StepStats::default();
    let mut clamped = f.clamped;
    for (i, (next, outflow, c, drift)) in per_fiber.into_iter().enumerate() {
        values.extend_from_slice(&next);
        leakage[i] += outflow;
        clamped += c;
        stats.clamped += c;
        stats.mass_drift = stats.mass_drift.max(drift);
    }
    stats.max_speed = v.max_abs();
    (
        FiberedDensity {
            grid: f.grid,
            n_fibers: f.n_fibers,
            values,
            time: f.time + dt,
            leakage,
            clamped,
        },
        stats,
    )
}

/// Reusable solver state for one `(w, K, grid)` triple.
pub struct Transport<'a> {
    w: &'a SparseWeights,
    k: &'a Kernel,
    conv: Convolver,
    row_sum: f64,
    pub nu: f64,
}

impl<'a> Transport<'a> {
    pub fn new(grid: &Grid1D, w: &'a SparseWeights, k: &'a Kernel, nu: f64) -> Result<Self> {
        Self::with_method(grid, w, k, nu, ConvolutionMethod::Auto)
    }

    pub fn with_method(
        grid: &Grid1D,
        w: &'a SparseWeights,
        k: &'a Kernel,
        nu: f64,
        method: ConvolutionMethod,
    ) -> Result<Self> {
        if !(nu >= 0.0) || !nu.is_finite() {
            return Err(Error::invalid("nu", "must be finite and nonnegative"));
        }
        Ok(Transport {
            w,
            k,
            conv: Convolver::new(grid, k, method)?,
            row_sum: w.check_scaling().max_row_abs_sum,
            nu,
        })
    }

    pub fn velocity(&self, f: &FiberedDensity) -> Result<VelocityFieldGrid> {
        velocity_with(f, self.w, &self.conv)
    }

    fn check_grid(&self, f: &FiberedDensity) -> Result<()> {
        if f.grid.n_cells != self.conv.g || (f.grid.dx() - self.conv.dx).abs() > 1e-15 * self.conv.dx {
            return Err(Error::invalid("grid", "density grid differs from the solver grid"));
        }
        Ok(())
    }

    /// One step of size `dt`, rejected if it violates the CFL conditions.
    pub fn step(&self, f: &FiberedDensity, dt: f64) -> Result<(FiberedDensity, StepStats)> {
        self.check_grid(f)?;
        if !(dt > 0.0) || !dt.is_finite() {
            return Err(Error::invalid("dt", "must be positive and finite"));
        }
        let v = self.velocity(f)?;
        let admissible = admissible_dt(v.max_abs(), f.grid.dx(), self.nu);
        if dt > admissible * (1.0 + 1e-12) {
            return Err(Error::StabilityGuard {
                dt,
                admissible,
                detail: "CFL: dt <= 0.4 dx / max|V| and dt <= 0.25 dx^2 / nu",
            });
        }
        Ok(self.update(f, &v, dt))
    }

    fn update(&self, f: &FiberedDensity, v: &VelocityFieldGrid, dt: f64) -> (FiberedDensity, StepStats) {
        let (next, mut stats) = transport_update(f, v, dt, self.nu);
        stats.speed_bound = self.row_sum * self.k.sup_norm * f.max_fiber_mass();
        (next, stats)
    }

    /// Runs to each of `output_times` with automatic steps
    /// `0.9 * admissible_dt`, shortened to land on output times exactly.
    pub fn solve(&self, f0: &FiberedDensity, output_times: &[f64]) -> Result<Solution> {
        self.solve_capped(f0, output_times, f64::INFINITY)
    }

    /// As [`Transport::solve`] with steps no longer than `max_dt`.
    pub fn solve_capped(&self, f0: &FiberedDensity, output_times: &[f64], max_dt: f64) -> Result<Solution> {
        self.check_grid(f0)?;
        check_output_times(f0.time, output_times)?;
        if !(max_dt > 0.0) {
            return Err(Error::invalid("max_dt", "must be positive"));
        }
        let mut ledger = ConservationLedger::default();
        let mut snapshots = Vec::with_capacity(output_times.len());
        let mut f = f0.clone();
        for &t in output_times {
            while t - f.time > 1e-12 * t.abs().max(1.0) {
                let v = self.velocity(&f)?;
                let dt = (0.9 * admissible_dt(v.max_abs(), f.grid.dx(), self.nu))
                    .min(max_dt)
                    .min(t - f.time);
                let (next, stats) = self.update(&f, &v, dt);
                ledger.record(&stats);
                f = next;
            }
            f.time = t;
            snapshots.push(f.clone());
        }
        ledger.leakage = f.leakage.clone();
        ledger.clamped = f.clamped;
        Ok(Solution { snapshots, ledger })
    }
}

/// Run-level conservation bookkeeping.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ConservationLedger {
    pub steps: u64,
    /// Worst per-fiber, per-step mass defect after accounting for outflow
    /// and clamping.
    pub max_mass_drift: f64,
    /// Per-fiber outflow through line-grid ends, accumulated from `t = 0`.
    pub leakage: Vec<f64>,
    pub clamped: f64,
    pub max_speed: f64,
    /// Steps on which `max|V|` exceeded the row-sum velocity bound.
    pub speed_bound_violations: u64,
}

impl ConservationLedger {
    fn record(&mut self, s: &StepStats) {
        self.steps += 1;
        self.max_mass_drift = self.max_mass_drift.max(s.mass_drift);
        self.max_speed = self.max_speed.max(s.max_speed);
        if s.max_speed > s.speed_bound * (1.0 + 1e-12) + 1e-300 {
            self.speed_bound_violations += 1;
        }
    }

    pub fn total_leakage(&self) -> f64 {
        self.leakage.iter().sum()
    }
}

#[derive(Debug, Clone)]
pub struct Solution {
    pub snapshots: Vec<FiberedDensity>,
    pub ledger: ConservationLedger,
}

/// One transport step; see [`Transport::step`].
pub fn step_transport(
    f: &FiberedDensity,
    w: &SparseWeights,
    k: &Kernel,
    dt: f64,
    nu: f64,
) -> Result<FiberedDensity> {
    check_pair(f, w)?;
    Ok(Transport::new(&f.grid, w, k, nu)?.step(f, dt)?.0)
}

/// Solves from `f0` up to `t_end` and returns snapshots at `output_times`
/// (all within `[f0.time, t_end]`); an empty list means `[t_end]`.
pub fn solve(
    f0: &FiberedDensity,
    w: &SparseWeights,
    k: &Kernel,
    nu: f64,
    t_end: f64,
    output_times: &[f64],
) -> Result<Solution> {
    check_pair(f0, w)?;
    if !(t_end >= f0.time) || !t_end.is_finite() {
        return Err(Error::invalid("t_end", "must be finite and not before the start time"));
    }
    if output_times.iter().any(|&t| t > t_end) {
        return Err(Error::invalid("output_times", "must not exceed t_end"));
    }
    let default = [t_end];
    let times = if output_times.is_empty() { &default[..] } else { output_times };
    Transport::new(&f0.grid, w, k, nu)?.solve(f0, times)
}
