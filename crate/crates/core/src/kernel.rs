//! Interaction kernels `K: R^d -> R^d` together with the norms the
//! estimates are stated in.

use alloc::sync::Arc;
use core::f64::consts::{PI, TAU};
use core::fmt;

#[allow(unused_imports)]
use num_traits::Float;

use crate::error::{Error, Result};

/// State space of a single agent coordinate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Domain {
    Line,
    Torus { period: f64 },
}

impl Domain {
    /// Representative of a coordinate difference: identity on the line,
    /// the value in `[-period/2, period/2)` on the torus.
    #[inline]
    pub fn wrap_diff(&self, d: f64) -> f64 {
        match *self {
            Domain::Line => d,
            Domain::Torus { period } => d - period * (d / period + 0.5).floor(),
        }
    }

    /// Reduces a position into `[0, period)` on the torus.
    #[inline]
    pub fn reduce(&self, x: f64) -> f64 {
        match *self {
            Domain::Line => x,
            Domain::Torus { period } => {
                let r = x - period * (x / period).floor();
                if r >= period {
                    0.0
                } else {
                    r
                }
            }
        }
    }
}

pub type KernelFn = dyn Fn(&[f64], &mut [f64]) + Send + Sync;

#[derive(Clone)]
pub enum Shape {
    /// `K(x) = -slope * x`.
    Linear { slope: f64 },
    /// `K(x) = -strength * x * exp(-|x|^2)`.
    GaussianAttraction { strength: f64 },
    /// `K(x) = -coupling * sin(x)`, componentwise.
    Sine { coupling: f64 },
    /// Gap-junction coupling of membrane potentials: only the first
    /// coordinate interacts, `K(x) = (-x_0 / capacitance, 0, ..., 0)`.
    Membrane { capacitance: f64 },
    Custom(Arc<KernelFn>),
}

impl fmt::Debug for Shape {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Shape::Linear { slope } => write!(f, "Linear {{ slope: {slope} }}"),
            Shape::GaussianAttraction { strength } => {
                write!(f, "GaussianAttraction {{ strength: {strength} }}")
            }
            Shape::Sine { coupling } => write!(f, "Sine {{ coupling: {coupling} }}"),
            Shape::Membrane { capacitance } => write!(f, "Membrane {{ capacitance: {capacitance} }}"),
            Shape::Custom(_) => f.write_str("Custom(..)"),
        }
    }
}

/// An interaction kernel and its norms. Norms that do not exist are `+inf`.
#[derive(Debug, Clone)]
pub struct Kernel {
    pub dim: usize,
    pub shape: Shape,
    pub domain: Domain,
    /// Lipschitz constant (sup of the Jacobian norm).
    pub lipschitz: f64,
    pub sup_norm: f64,
    pub l1_norm: f64,
    /// `sup |div K|`.
    pub div_sup: f64,
    pub zero_at_origin: bool,
}

/// `Gamma((d+1)/2) / Gamma(d/2)`.
fn gamma_ratio(d: usize) -> f64 {
    let (mut r, mut k) = if d % 2 == 1 {
        (1.0 / PI.sqrt(), 1usize)
    } else {
        (PI.sqrt() / 2.0, 2usize)
    };
    while k < d {
        r *= (k + 1) as f64 / k as f64;
        k += 2;
    }
    r
}

impl Kernel {
    /// `K(x) = -slope * x` on the line in dimension `dim`.
    pub fn linear(dim: usize, slope: f64) -> Self {
        Kernel {
            dim,
            shape: Shape::Linear { slope },
            domain: Domain::Line,
            lipschitz: slope.abs(),
            sup_norm: if slope == 0.0 { 0.0 } else { f64::INFINITY },
            l1_norm: if slope == 0.0 { 0.0 } else { f64::INFINITY },
            div_sup: slope.abs() * dim as f64,
            zero_at_origin: true,
        }
    }

    /// Smooth, integrable attraction `K(x) = -s x exp(-|x|^2)`.
    pub fn linear_attraction(dim: usize, strength: f64) -> Self {
        let s = strength.abs();
        Kernel {
            dim,
            shape: Shape::GaussianAttraction { strength },
            domain: Domain::Line,
            lipschitz: s,
            sup_norm: s / (2.0 * core::f64::consts::E).sqrt(),
            l1_norm: s * PI.powf(dim as f64 / 2.0) * gamma_ratio(dim),
            div_sup: s * dim as f64,
            zero_at_origin: true,
        }
    }

    /// Kuramoto coupling on the circle `[0, 2pi)`: `K(x) = -coupling sin(x)`,
    /// so that `dtheta_i/dt = sum_j w_ij sin(theta_j - theta_i)`.
    pub fn kuramoto(coupling: f64) -> Self {
        let c = coupling.abs();
        Kernel {
            dim: 1,
            shape: Shape::Sine { coupling },
            domain: Domain::Torus { period: TAU },
            lipschitz: c,
            sup_norm: c,
            l1_norm: 4.0 * c,
            div_sup: c,
            zero_at_origin: true,
        }
    }

    /// Membrane-potential coupling for the 4-dimensional neuron state.
    pub fn membrane(capacitance: f64) -> Result<Self> {
        if !(capacitance > 0.0) {
            return Err(Error::invalid("capacitance", "must be positive"));
        }
        Ok(Kernel {
            dim: 4,
            shape: Shape::Membrane { capacitance },
            domain: Domain::Line,
            lipschitz: 1.0 / capacitance,
            sup_norm: f64::INFINITY,
            l1_norm: f64::INFINITY,
            div_sup: 1.0 / capacitance,
            zero_at_origin: true,
        })
    }

    /// User-supplied kernel; the caller vouches for the stated norms.
    pub fn custom(dim: usize, domain: Domain, f: Arc<KernelFn>, lipschitz: f64, sup_norm: f64) -> Self {
        let zero = [0.0; 8];
        let mut probe = [0.0; 8];
        let zero_at_origin = if dim <= 8 {
            f(&zero[..dim], &mut probe[..dim]);
            probe[..dim].iter().all(|v| *v == 0.0)
        } else {
            false
        };
        Kernel {
            dim,
            shape: Shape::Custom(f),
            domain,
            lipschitz,
            sup_norm,
            l1_norm: f64::INFINITY,
            div_sup: lipschitz * dim as f64,
            zero_at_origin,
        }
    }

    /// `||K||_{W^{1,inf}} = sup|K| + sup|grad K|`.
    pub fn w1inf_norm(&self) -> f64 {
        self.sup_norm + self.lipschitz
    }

    /// Evaluates `K(x)` into `out`; both slices have length `dim`.
    #[inline]
    pub fn eval(&self, x: &[f64], out: &mut [f64]) {
        match &self.shape {
            Shape::Linear { slope } => {
                for (o, v) in out.iter_mut().zip(x) {
                    *o = -slope * v;
                }
            }
            Shape::GaussianAttraction { strength } => {
                let r2: f64 = x.iter().map(|v| v * v).sum();
                let g = -strength * (-r2).exp();
                for (o, v) in out.iter_mut().zip(x) {
                    *o = g * v;
                }
            }
            Shape::Sine { coupling } => {
                for (o, v) in out.iter_mut().zip(x) {
                    *o = -coupling * v.sin();
                }
            }
            Shape::Membrane { capacitance } => {
                out.fill(0.0);
                out[0] = -x[0] / capacitance;
            }
            Shape::Custom(f) => f(x, out),
        }
    }

    /// Scalar evaluation for one-dimensional kernels.
    #[inline]
    pub fn eval1(&self, x: f64) -> f64 {
        match &self.shape {
            Shape::Linear { slope } => -slope * x,
            Shape::GaussianAttraction { strength } => -strength * x * (-x * x).exp(),
            Shape::Sine { coupling } => -coupling * x.sin(),
            _ => {
                let mut out = [0.0];
                self.eval(&[x], &mut out);
                out[0]
            }
        }
    }

    pub(crate) fn require_dim(&self, dim: usize, context: &'static str) -> Result<()> {
        if self.dim != dim {
            return Err(Error::DimensionMismatch {
                context,
                expected: dim,
                found: self.dim,
            });
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn presets_vanish_at_origin() {
        for k in [
            Kernel::linear(1, 2.0),
            Kernel::linear_attraction(1, 1.0),
            Kernel::kuramoto(0.7),
        ] {
            assert!(k.zero_at_origin);
            assert_eq!(k.eval1(0.0), 0.0);
        }
        let m = Kernel::membrane(1.0).unwrap();
        let mut out = [1.0; 4];
        m.eval(&[0.0; 4], &mut out);
        assert_eq!(out, [0.0; 4]);
    }

    #[test]
    fn attraction_norms_match_closed_forms() {
        let k = Kernel::linear_attraction(1, 1.0);
        // sup |x e^{-x^2}| at x = 1/sqrt(2)
        let x = 0.5f64.sqrt();
        assert!((k.sup_norm - x * (-0.5f64).exp()).abs() < 1e-15);
        assert!((k.l1_norm - 1.0).abs() < 1e-15);
        let k3 = Kernel::linear_attraction(3, 1.0);
        assert!((k3.l1_norm - 2.0 * PI).abs() < 1e-12);
        let k2 = Kernel::linear_attraction(2, 1.0);
        assert!((k2.l1_norm - PI * PI.sqrt() / 2.0).abs() < 1e-12);
    }

    #[test]
    fn torus_wrapping() {
        let d = Domain::Torus { period: 1.0 };
        assert!((d.wrap_diff(0.75) + 0.25).abs() < 1e-15);
        assert!((d.wrap_diff(-0.75) - 0.25).abs() < 1e-15);
        assert!((d.reduce(-0.25) - 0.75).abs() < 1e-15);
        assert_eq!(Domain::Line.wrap_diff(5.0), 5.0);
    }

    #[test]
    fn custom_probe_detects_origin() {
        let k = Kernel::custom(1, Domain::Line, Arc::new(|x, o| o[0] = x[0] + 1.0), 1.0, 1.0);
        assert!(!k.zero_at_origin);
        assert!(Kernel::membrane(0.0).is_err());
    }
}
