//! Finite-N agent dynamics `dX_i/dt = sum_j w_ij K(X_i - X_j)`, its noisy
//! variant and the McKean-type system driven by prescribed laws.

use alloc::vec;
use alloc::vec::Vec;

#[allow(unused_imports)]
use num_traits::Float;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::graph::SparseWeights;
use crate::kernel::{Domain, Kernel};
use crate::pde::FiberedDensity;
use crate::rng::{self, Purpose};

/// Positions of `N` agents in `R^d`, row-major `N x d`.
#[derive(Debug, Clone, PartialEq)]
pub struct ParticleState {
    positions: Vec<f64>,
    dim: usize,
    pub time: f64,
    /// Number of steps taken; keys the noise streams.
    pub step: u64,
}

impl ParticleState {
    pub fn new(positions: Vec<f64>, dim: usize) -> Result<Self> {
        if dim == 0 {
            return Err(Error::invalid("dim", "must be at least 1"));
        }
        if positions.is_empty() || positions.len() % dim != 0 {
            return Err(Error::invalid(
                "positions",
                "length must be a positive multiple of dim",
            ));
        }
        if positions.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid("positions", "entries must be finite"));
        }
        Ok(ParticleState {
            positions,
            dim,
            time: 0.0,
            step: 0,
        })
    }

    pub fn n_agents(&self) -> usize {
        self.positions.len() / self.dim
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn positions(&self) -> &[f64] {
        &self.positions
    }

    pub fn position(&self, i: usize) -> &[f64] {
        &self.positions[i * self.dim..(i + 1) * self.dim]
    }

    /// State with agents relabeled: agent `i` of the result is agent
    /// `perm[i]` of `self`.
    pub fn permuted(&self, perm: &[usize]) -> Result<Self> {
        if perm.len() != self.n_agents() {
            return Err(Error::DimensionMismatch {
                context: "permutation",
                expected: self.n_agents(),
                found: perm.len(),
            });
        }
        crate::graph::check_permutation(perm)?;
        let mut positions = Vec::with_capacity(self.positions.len());
        for &p in perm {
            positions.extend_from_slice(self.position(p));
        }
        Ok(ParticleState {
            positions,
            dim: self.dim,
            time: self.time,
            step: self.step,
        })
    }

    fn reduce(&mut self, domain: Domain) {
        if let Domain::Torus { .. } = domain {
            for v in &mut self.positions {
                *v = domain.reduce(*v);
            }
        }
    }
}

/// Equal-weight atoms `mu_N = (1/N) sum_i delta_{X_i}`.
#[derive(Debug, Clone, PartialEq)]
pub struct EmpiricalMeasure {
    pub atoms: Vec<f64>,
    pub dim: usize,
}

impl EmpiricalMeasure {
    pub fn n_atoms(&self) -> usize {
        self.atoms.len() / self.dim
    }

    pub fn weight(&self) -> f64 {
        1.0 / self.n_atoms() as f64
    }

    pub fn total_mass(&self) -> f64 {
        self.weight() * self.n_atoms() as f64
    }
}

pub fn empirical(x: &ParticleState) -> EmpiricalMeasure {
    EmpiricalMeasure {
        atoms: x.positions.clone(),
        dim: x.dim,
    }
}

/// Rate function families for the gating variables, in the membrane
/// potential `v`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum RateFn {
    /// `a * exp((v - b) / c)`
    Exp { a: f64, b: f64, c: f64 },
    /// `a / (1 + exp(-(v - b) / c))`
    Sigmoid { a: f64, b: f64, c: f64 },
    /// `a (v - b) / (1 - exp(-(v - b) / c))`, continuous at `v = b`.
    Linoid { a: f64, b: f64, c: f64 },
}

impl RateFn {
    pub fn eval(&self, v: f64) -> f64 {
        match *self {
            RateFn::Exp { a, b, c } => a * ((v - b) / c).exp(),
            RateFn::Sigmoid { a, b, c } => a / (1.0 + (-(v - b) / c).exp()),
            RateFn::Linoid { a, b, c } => {
                let u = (v - b) / c;
                if u.abs() < 1e-7 {
                    a * c * (1.0 + 0.5 * u)
                } else {
                    a * (v - b) / (1.0 - (-u).exp())
                }
            }
        }
    }
}

/// Neuron constants. State per agent is `(V, n, m, h)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HhParams {
    pub capacitance: f64,
    pub g_k: f64,
    pub g_na: f64,
    pub g_l: f64,
    pub v_k: f64,
    pub v_na: f64,
    pub v_l: f64,
    /// Constant injected current, zero in the closed model.
    pub i_ext: f64,
    pub alpha_n: RateFn,
    pub beta_n: RateFn,
    pub alpha_m: RateFn,
    pub beta_m: RateFn,
    pub alpha_h: RateFn,
    pub beta_h: RateFn,
}

impl HhParams {
    /// The 1952 squid-axon fit with the resting potential shifted to 0 mV.
    pub fn squid_axon() -> Self {
        HhParams {
            capacitance: 1.0,
            g_k: 36.0,
            g_na: 120.0,
            g_l: 0.3,
            v_k: -12.0,
            v_na: 115.0,
            v_l: 10.613,
            i_ext: 0.0,
            alpha_n: RateFn::Linoid { a: 0.01, b: 10.0, c: 10.0 },
            beta_n: RateFn::Exp { a: 0.125, b: 0.0, c: -80.0 },
            alpha_m: RateFn::Linoid { a: 0.1, b: 25.0, c: 10.0 },
            beta_m: RateFn::Exp { a: 4.0, b: 0.0, c: -18.0 },
            alpha_h: RateFn::Exp { a: 0.07, b: 0.0, c: -20.0 },
            beta_h: RateFn::Sigmoid { a: 1.0, b: 30.0, c: 10.0 },
        }
    }

    fn validate(&self) -> Result<()> {
        let all = [
            self.capacitance,
            self.g_k,
            self.g_na,
            self.g_l,
            self.v_k,
            self.v_na,
            self.v_l,
            self.i_ext,
        ];
        if all.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid("hodgkin_huxley", "constants must be finite"));
        }
        if !(self.capacitance > 0.0) {
            return Err(Error::invalid("hodgkin_huxley.capacitance", "must be positive"));
        }
        if self.g_k < 0.0 || self.g_na < 0.0 || self.g_l < 0.0 {
            return Err(Error::invalid("hodgkin_huxley", "conductances must be nonnegative"));
        }
        Ok(())
    }

    /// Uncoupled right-hand side for one neuron.
    pub fn local_rhs(&self, s: &[f64], out: &mut [f64]) {
        let (v, n, m, h) = (s[0], s[1], s[2], s[3]);
        let i_ion = self.g_k * n.powi(4) * (v - self.v_k)
            + self.g_na * m.powi(3) * h * (v - self.v_na)
            + self.g_l * (v - self.v_l);
        out[0] = (self.i_ext - i_ion) / self.capacitance;
        out[1] = self.alpha_n.eval(v) * (1.0 - n) - self.beta_n.eval(v) * n;
        out[2] = self.alpha_m.eval(v) * (1.0 - m) - self.beta_m.eval(v) * m;
        out[3] = self.alpha_h.eval(v) * (1.0 - h) - self.beta_h.eval(v) * h;
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum LocalDynamics {
    HodgkinHuxley(HhParams),
}

/// How the terms of a row are accumulated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SumOrder {
    /// Column order of the sparse row.
    #[default]
    Row,
    /// Terms sorted by value first: the result does not depend on agent
    /// labels, at the cost of a sort per row.
    Canonical,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Method {
    Euler,
    #[default]
    Rk4,
}

/// Interaction kernel plus optional self-dynamics.
#[derive(Debug, Clone)]
pub struct Dynamics {
    pub kernel: Kernel,
    /// Constant per-agent drift (`N x d`), e.g. natural frequencies.
    pub omega: Option<Vec<f64>>,
    pub local: Option<LocalDynamics>,
    pub sum_order: SumOrder,
}

impl From<Kernel> for Dynamics {
    fn from(kernel: Kernel) -> Self {
        Dynamics::new(kernel)
    }
}

impl Dynamics {
    pub fn new(kernel: Kernel) -> Self {
        Dynamics {
            kernel,
            omega: None,
            local: None,
            sum_order: SumOrder::Row,
        }
    }

    /// Phase oscillators `dtheta_i/dt = Omega_i + sum_j w_ij sin(theta_j - theta_i)`
    /// scaled by `coupling`.
    pub fn kuramoto(coupling: f64, omega: Option<Vec<f64>>) -> Result<Self> {
        if let Some(o) = &omega {
            if o.iter().any(|v| !v.is_finite()) {
                return Err(Error::invalid("omega", "entries must be finite"));
            }
        }
        Ok(Dynamics {
            omega,
            ..Dynamics::new(Kernel::kuramoto(coupling))
        })
    }

    pub fn linear_attraction(strength: f64) -> Self {
        Dynamics::new(Kernel::linear_attraction(1, strength))
    }

    /// Gap-junction coupled neurons; particle simulation only.
    pub fn hodgkin_huxley(params: HhParams) -> Result<Self> {
        params.validate()?;
        Ok(Dynamics {
            local: Some(LocalDynamics::HodgkinHuxley(params)),
            ..Dynamics::new(Kernel::membrane(params.capacitance)?)
        })
    }

    pub fn with_sum_order(mut self, order: SumOrder) -> Self {
        self.sum_order = order;
        self
    }

    fn check(&self, w: &SparseWeights, x: &ParticleState) -> Result<()> {
        self.kernel.require_dim(x.dim, "kernel dimension")?;
        if w.n_agents() != x.n_agents() {
            return Err(Error::DimensionMismatch {
                context: "weights vs agents",
                expected: x.n_agents(),
                found: w.n_agents(),
            });
        }
        if let Some(o) = &self.omega {
            if o.len() != x.positions.len() {
                return Err(Error::DimensionMismatch {
                    context: "omega length",
                    expected: x.positions.len(),
                    found: o.len(),
                });
            }
        }
        if self.local.is_some() && x.dim != 4 {
            return Err(Error::DimensionMismatch {
                context: "neuron state dimension",
                expected: 4,
                found: x.dim,
            });
        }
        Ok(())
    }

    /// Full right-hand side at raw positions `pos`.
    fn rhs(&self, w: &SparseWeights, pos: &[f64], dim: usize) -> Vec<f64> {
        let mut out = interaction(w, &self.kernel, pos, dim, self.sum_order);
        if let Some(o) = &self.omega {
            for (d, v) in out.iter_mut().zip(o) {
                *d += v;
            }
        }
        if let Some(LocalDynamics::HodgkinHuxley(p)) = &self.local {
            let mut buf = [0.0; 4];
            for (s, d) in pos.chunks(4).zip(out.chunks_mut(4)) {
                p.local_rhs(s, &mut buf);
                for (a, b) in d.iter_mut().zip(buf) {
                    *a += b;
                }
            }
        }
        out
    }

    /// `dt * max_row_abs_sum * lipschitz <= 0.5`.
    pub fn check_stability(&self, w: &SparseWeights, dt: f64) -> Result<()> {
        if !(dt > 0.0) || !dt.is_finite() {
            return Err(Error::invalid("dt", "must be positive and finite"));
        }
        let scale = w.check_scaling().max_row_abs_sum * self.kernel.lipschitz;
        if dt * scale > 0.5 {
            return Err(Error::StabilityGuard {
                dt,
                admissible: 0.5 / scale,
                detail: "dt * max_row_abs_sum * lipschitz must not exceed 0.5",
            });
        }
        Ok(())
    }
}

fn add_sorted(terms: &mut [f64]) -> f64 {
    terms.sort_unstable_by(f64::total_cmp);
    terms.iter().fold(0.0, |a, b| a + b)
}

fn interaction(w: &SparseWeights, k: &Kernel, pos: &[f64], dim: usize, order: SumOrder) -> Vec<f64> {
    let mut out = vec![0.0; pos.len()];
    let domain = k.domain;
    crate::exec::for_each_chunk(&mut out, dim, |i, dst| {
        let xi = &pos[i * dim..(i + 1) * dim];
        match (dim, order) {
            (1, SumOrder::Row) => {
                let mut acc = 0.0;
                for (j, wij) in w.row(i) {
                    acc += wij * k.eval1(domain.wrap_diff(xi[0] - pos[j]));
                }
                dst[0] = acc;
            }
            (_, SumOrder::Row) => {
                let mut diff = vec![0.0; dim];
                let mut kv = vec![0.0; dim];
                for (j, wij) in w.row(i) {
                    for c in 0..dim {
                        diff[c] = domain.wrap_diff(xi[c] - pos[j * dim + c]);
                    }
                    k.eval(&diff, &mut kv);
                    for c in 0..dim {
                        dst[c] += wij * kv[c];
                    }
                }
            }
            (_, SumOrder::Canonical) => {
                let deg = w.row(i).count();
                let mut terms = vec![0.0; deg * dim];
                let mut diff = vec![0.0; dim];
                let mut kv = vec![0.0; dim];
                for (t, (j, wij)) in w.row(i).enumerate() {
                    for c in 0..dim {
                        diff[c] = domain.wrap_diff(xi[c] - pos[j * dim + c]);
                    }
                    k.eval(&diff, &mut kv);
                    for c in 0..dim {
                        terms[c * deg + t] = wij * kv[c];
                    }
                }
                for c in 0..dim {
                    dst[c] = add_sorted(&mut terms[c * deg..(c + 1) * deg]);
                }
            }
        }
    });
    out
}

/// Interaction drift `drift_i = sum_j w_ij K(x_i - x_j)` over the stored
/// entries of row `i`, `N x d` row-major.
pub fn drift(w: &SparseWeights, k: &Kernel, x: &ParticleState) -> Result<Vec<f64>> {
    k.require_dim(x.dim, "kernel dimension")?;
    if w.n_agents() != x.n_agents() {
        return Err(Error::DimensionMismatch {
            context: "weights vs agents",
            expected: x.n_agents(),
            found: w.n_agents(),
        });
    }
    Ok(interaction(w, k, &x.positions, x.dim, SumOrder::Row))
}

fn axpy(base: &[f64], a: f64, dir: &[f64]) -> Vec<f64> {
    base.iter().zip(dir).map(|(b, d)| b + a * d).collect()
}

fn advance(
    w: &SparseWeights,
    dynamics: &Dynamics,
    x: &ParticleState,
    dt: f64,
    method: Method,
) -> Vec<f64> {
    let dim = x.dim;
    let p = &x.positions;
    match method {
        Method::Euler => {
            let k1 = dynamics.rhs(w, p, dim);
            axpy(p, dt, &k1)
        }
        Method::Rk4 => {
            let k1 = dynamics.rhs(w, p, dim);
            let k2 = dynamics.rhs(w, &axpy(p, 0.5 * dt, &k1), dim);
            let k3 = dynamics.rhs(w, &axpy(p, 0.5 * dt, &k2), dim);
            let k4 = dynamics.rhs(w, &axpy(p, dt, &k3), dim);
            let s = dt / 6.0;
            (0..p.len())
                .map(|i| p[i] + s * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]))
                .collect()
        }
    }
}

/// One explicit step of the deterministic dynamics.
pub fn step_deterministic(
    w: &SparseWeights,
    dynamics: &Dynamics,
    x: &ParticleState,
    dt: f64,
    method: Method,
) -> Result<ParticleState> {
    dynamics.check(w, x)?;
    dynamics.check_stability(w, dt)?;
    let mut next = ParticleState {
        positions: advance(w, dynamics, x, dt, method),
        dim: x.dim,
        time: x.time + dt,
        step: x.step + 1,
    };
    next.reduce(dynamics.kernel.domain);
    Ok(next)
}

fn add_noise(pos: &mut [f64], dim: usize, scale: f64, seed: u64, step: u64) {
    crate::exec::for_each_chunk(pos, dim, |i, dst| {
        let mut r = rng::stream(seed, Purpose::Noise, i as u64, step);
        for v in dst.iter_mut() {
            let z: f64 = r.sample(StandardNormal);
            *v += scale * z;
        }
    });
}

/// Euler-Maruyama step with additive noise `sigma * sqrt(dt) * N(0, 1)`,
/// independent per agent, coordinate and step.
pub fn step_stochastic(
    w: &SparseWeights,
    dynamics: &Dynamics,
    x: &ParticleState,
    dt: f64,
    sigma: f64,
    seed: u64,
) -> Result<ParticleState> {
    if !(sigma >= 0.0) || !sigma.is_finite() {
        return Err(Error::invalid("sigma", "must be finite and nonnegative"));
    }
    dynamics.check(w, x)?;
    dynamics.check_stability(w, dt)?;
    let mut positions = advance(w, dynamics, x, dt, Method::Euler);
    if sigma > 0.0 {
        add_noise(&mut positions, x.dim, sigma * dt.sqrt(), seed, x.step);
    }
    let mut next = ParticleState {
        positions,
        dim: x.dim,
        time: x.time + dt,
        step: x.step + 1,
    };
    next.reduce(dynamics.kernel.domain);
    Ok(next)
}

/// Interaction drift against prescribed laws:
/// `drift_i = sum_j w_ij int K(x_i - y) f_j(dy)` by midpoint quadrature on
/// the fiber grid.
pub fn mckean_drift(
    w: &SparseWeights,
    k: &Kernel,
    x: &ParticleState,
    laws: &FiberedDensity,
) -> Result<Vec<f64>> {
    if x.dim != 1 || k.dim != 1 {
        return Err(Error::invalid(
            "dim",
            "the McKean system is solved on 1-D grids only",
        ));
    }
    let n = x.n_agents();
    if laws.n_fibers() != n || w.n_agents() != n {
        return Err(Error::DimensionMismatch {
            context: "laws vs agents",
            expected: n,
            found: laws.n_fibers(),
        });
    }
    let grid = laws.grid();
    let g = grid.n_cells;
    let dx = grid.dx();
    let mixed = w.apply_rows_block(laws.values(), g)?;
    let centers: Vec<f64> = (0..g).map(|c| grid.center(c)).collect();
    let domain = k.domain;
    Ok(crate::exec::map_range(n, |i| {
        let xi = x.positions[i];
        let row = &mixed[i * g..(i + 1) * g];
        let mut acc = 0.0;
        for (y, v) in centers.iter().zip(row) {
            if *v != 0.0 {
                acc += k.eval1(domain.wrap_diff(xi - y)) * v;
            }
        }
        acc * dx
    }))
}

/// Euler-Maruyama step of the McKean system with the laws frozen over the
/// step.
#[allow(clippy::too_many_arguments)]
pub fn step_mckean(
    w: &SparseWeights,
    dynamics: &Dynamics,
    x: &ParticleState,
    laws: &FiberedDensity,
    dt: f64,
    sigma: f64,
    seed: u64,
) -> Result<ParticleState> {
    if !(sigma >= 0.0) || !sigma.is_finite() {
        return Err(Error::invalid("sigma", "must be finite and nonnegative"));
    }
    dynamics.check(w, x)?;
    dynamics.check_stability(w, dt)?;
    let mut d = mckean_drift(w, &dynamics.kernel, x, laws)?;
    if let Some(o) = &dynamics.omega {
        for (a, b) in d.iter_mut().zip(o) {
            *a += b;
        }
    }
    let mut positions = axpy(&x.positions, dt, &d);
    if sigma > 0.0 {
        add_noise(&mut positions, 1, sigma * dt.sqrt(), seed, x.step);
    }
    let mut next = ParticleState {
        positions,
        dim: 1,
        time: x.time + dt,
        step: x.step + 1,
    };
    next.reduce(dynamics.kernel.domain);
    Ok(next)
}

/// Time stepping parameters for [`run`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RunSpec {
    pub dt: f64,
    pub method: Method,
    /// Noise amplitude; `sigma > 0` switches to Euler-Maruyama.
    pub sigma: f64,
    pub seed: u64,
}

/// Integrates from `x0` and returns the states at `output_times`
/// (nondecreasing, each `>= x0.time`). Steps are shortened to land on every
/// output time exactly.
pub fn run(
    w: &SparseWeights,
    dynamics: &Dynamics,
    x0: &ParticleState,
    spec: &RunSpec,
    output_times: &[f64],
) -> Result<Vec<ParticleState>> {
    dynamics.check(w, x0)?;
    dynamics.check_stability(w, spec.dt)?;
    check_output_times(x0.time, output_times)?;
    let mut out = Vec::with_capacity(output_times.len());
    let mut x = x0.clone();
    for &t in output_times {
        while t - x.time > 1e-12 * t.abs().max(1.0) {
            let h = spec.dt.min(t - x.time);
            x = if spec.sigma > 0.0 {
                step_stochastic(w, dynamics, &x, h, spec.sigma, spec.seed)?
            } else {
                step_deterministic(w, dynamics, &x, h, spec.method)?
            };
        }
        x.time = t;
        out.push(x.clone());
    }
    Ok(out)
}

pub(crate) fn check_output_times(t0: f64, times: &[f64]) -> Result<()> {
    let mut prev = t0;
    for &t in times {
        if !t.is_finite() || t < prev {
            return Err(Error::invalid(
                "output_times",
                "must be finite, nondecreasing and not before the start time",
            ));
        }
        prev = t;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn state(p: &[f64]) -> ParticleState {
        ParticleState::new(p.to_vec(), 1).unwrap()
    }

    #[test]
    fn two_agent_drift() {
        let w = SparseWeights::uniform(2, 1.0, false).unwrap();
        let d = drift(&w, &Kernel::linear(1, 1.0), &state(&[0.0, 1.0])).unwrap();
        assert_eq!(d, vec![0.5, -0.5]);
    }

    #[test]
    fn euler_matches_closed_form() {
        let w_bar = 0.8;
        let w = SparseWeights::uniform(2, w_bar, false).unwrap();
        let dynamics = Dynamics::new(Kernel::linear(1, 1.0));
        let x = state(&[0.3, -1.1]);
        let dt = 0.1;
        let y = step_deterministic(&w, &dynamics, &x, dt, Method::Euler).unwrap();
        assert!((y.positions()[0] - (0.3 + dt * w_bar / 2.0 * (-1.1 - 0.3))).abs() < 1e-15);
        assert_eq!(y.time, dt);
    }

    #[test]
    fn stability_guard_reports_admissible_dt() {
        let w = SparseWeights::uniform(4, 1.0, true).unwrap();
        let dynamics = Dynamics::new(Kernel::linear(1, 2.0));
        let err = step_deterministic(&w, &dynamics, &state(&[0.0; 4]), 0.3, Method::Rk4).unwrap_err();
        match err {
            Error::StabilityGuard { admissible, .. } => assert!((admissible - 0.25).abs() < 1e-15),
            e => panic!("unexpected {e:?}"),
        }
    }

    #[test]
    fn rate_functions_are_continuous() {
        let r = RateFn::Linoid { a: 0.1, b: 25.0, c: 10.0 };
        assert!((r.eval(25.0) - 1.0).abs() < 1e-12);
        assert!((r.eval(25.0 + 1e-6) - r.eval(25.0)).abs() < 1e-6);
        let s = RateFn::Sigmoid { a: 1.0, b: 30.0, c: 10.0 };
        assert!((s.eval(30.0) - 0.5).abs() < 1e-15);
    }

    #[test]
    fn neuron_rest_state_is_nearly_stationary() {
        let p = HhParams::squid_axon();
        let v = 0.0;
        let gate = |a: RateFn, b: RateFn| a.eval(v) / (a.eval(v) + b.eval(v));
        let s = [
            v,
            gate(p.alpha_n, p.beta_n),
            gate(p.alpha_m, p.beta_m),
            gate(p.alpha_h, p.beta_h),
        ];
        let mut out = [0.0; 4];
        p.local_rhs(&s, &mut out);
        assert!(out[0].abs() < 0.05, "dV/dt = {}", out[0]);
        assert!(out[1..].iter().all(|d| d.abs() < 1e-12));
    }

    #[test]
    fn torus_positions_are_reduced() {
        let w = SparseWeights::uniform(2, 1.0, false).unwrap();
        let dynamics = Dynamics::kuramoto(1.0, Some(vec![10.0, 10.0])).unwrap();
        let y = step_deterministic(&w, &dynamics, &state(&[6.0, 6.2]), 0.1, Method::Rk4).unwrap();
        assert!(y.positions().iter().all(|v| (0.0..core::f64::consts::TAU).contains(v)));
    }
}
