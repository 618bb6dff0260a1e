//! A numerical laboratory for planar l2 decoupling with degenerate
//! curvature.
//!
//! The crate evaluates extension-operator fields `E_Q g` on spatial grids,
//! measures both sides of the l2 decoupling inequality against weighted
//! L^p norms over the spatial rectangle matched to the curve's order of
//! vanishing, and probes the decoupling constant by extremizer search. The
//! supporting machinery follows the structure of the underlying argument:
//! dyadic blocks isolating the degeneracy, per-block curvature
//! normalization, osculating parabolas with their validity length, and the
//! rescaling iteration count. A discretized side runs weighted L^6
//! averages of exponential sums against an exact solution-counting oracle.

pub mod cli;
pub mod config;
pub mod curve;
pub mod decoupling;
pub mod error;
pub mod expr;
pub mod expsum;
pub mod norms;
pub mod oscillatory;
pub mod partition;
pub mod quad;
pub mod reduce;
pub mod rescale;

pub use error::{Error, Result};
