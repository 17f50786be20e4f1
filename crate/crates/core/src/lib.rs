//! Zero-temperature random-field curve models in the plane.
//!
//! The crate computes exact ground states of lattice random-field energies
//! through minimum cuts, evaluates the weak norm
//! `S_R = sup |∫_M ξ| / per(M)` over cell-union sets of a ball by parametric
//! ratio optimisation, and measures the geometry of the resulting phase
//! boundaries (averaged normals, excesses, almost-minimality).
//!
//! Module map:
//!
//! - [`noise`]: the two Gaussian noise classes (discretized and
//!   spectrally regularized white noise) on rectangular grids.
//! - [`maxflow`]: max-flow / min-cut engine with interchangeable solvers and
//!   the graph builders that encode energies as cut problems.
//! - [`groundstate`]: ground states, the order parameter `m(L)`, the
//!   correlation length and local-minimality audits.
//! - [`weaknorm`]: exact `S_R` and its pinned suprema over scales and space.
//! - [`geometry`]: jump sets, averaged normals, excesses and the
//!   deterministic regularity checks.
//! - [`stats`]: estimators, scaling fits and tail-envelope checks.
//! - [`oracle`]: exhaustive brute-force ground truths for small instances.

pub mod error;
pub mod geometry;
pub mod groundstate;
pub mod lattice;
pub mod maxflow;
pub mod noise;
pub mod oracle;
pub mod rng;
pub mod stats;
pub mod stencil;
pub mod weaknorm;

pub use error::{Error, Result};
pub use lattice::{Cell, Point};
pub use stencil::{Stencil, StencilKind};
