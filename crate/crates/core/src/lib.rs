//! Numerical core for mean-field limits of non-exchangeable particle systems
//! on sparse weighted digraphs.
//!
//! The crate covers the whole chain from a finite weight matrix to its limit
//! objects:
//!
//! * [`graph`]: sparse weights `w_ij`, scaling diagnostics, empirical graphons
//!   and the kernel-as-operator action.
//! * [`trees`]: labeled rooted trees built by leaf addition.
//! * [`kernel`] and [`particles`]: interaction kernels, presets and the finite
//!   agent dynamics (deterministic, stochastic and McKean-type).
//! * [`pde`]: the coupled fibered transport system on a 1-D grid.
//! * [`observables`]: tree-indexed observables, homomorphism densities, the
//!   transform algebra and hierarchy diagnostics.
//! * [`rearrange`]: hierarchical measure-preserving rearrangements and their
//!   L¹ shift modulus.
//! * [`metrics`]: exact 1-D Wasserstein distances and the convergence gap
//!   experiments.
//!
//! The crate is `no_std` + `alloc` when built without the default `std`
//! feature. With `std`, work is spread across threads with rayon and
//! convolutions use FFTs; results are bitwise identical for any thread count.

#![cfg_attr(not(feature = "std"), no_std)]
#![forbid(unsafe_code)]

extern crate alloc;

mod error;
mod exec;
mod sum;

pub mod graph;
pub mod kernel;
pub mod metrics;
pub mod observables;
pub mod particles;
pub mod pde;
pub mod rearrange;
pub mod rng;
pub mod trees;

pub use error::{Error, Result};
pub use graph::{EmpiricalGraphon, ScalingReport, SparseWeights};
pub use kernel::{Domain, Kernel};
pub use pde::{FiberedDensity, Grid1D, Topology};
pub use sum::neumaier_sum;
pub use trees::LabeledTree;

/// Crate version, recorded in run manifests.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
