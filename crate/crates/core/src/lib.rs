//! Fits a neural signed-distance field to sparse curve and point constraints,
//! regularizes its zero-level set with a curvature-based thin-plate energy that
//! relaxes near sharp feature curves, and extracts and evaluates the surface.
//!
//! Module map:
//! - [`field`]: the MLP, analytic value/gradient/Hessian jets, parameter
//!   gradients, Adam, and checkpoints.
//! - [`energy`]: Eikonal, Dirichlet, exponential off-surface, and thin-plate losses.
//! - [`sampling`]: box, curve, and zero-level-set sample populations.
//! - [`geometry`]: marching cubes, k-d tree, Poisson-disk elimination, Hausdorff,
//!   genus, and dihedral measurements.
//! - [`pipeline`]: the training loop, metrics, and experiment sweeps.
//! - [`io`]: curve ingestion, normalization, noise, and mesh export.
//! - [`cli`]: the `tpsurf` command-line tool.

pub mod cli;
pub mod energy;
pub mod error;
pub mod field;
pub mod fixtures;
pub mod geometry;
pub mod io;
pub mod pipeline;
pub mod sampling;

pub use error::{Error, Result};

/// Three-component point or direction in normalized space.
pub type Vec3 = nalgebra::Vector3<f64>;

/// Gradient norms below this are treated as degenerate for curvature and projection.
pub const GRADIENT_FLOOR: f64 = 1e-6;
