//! Two-stage mixed-field source localization with a scalable-spacing linear array.
//!
//! Stage 1 runs spatially-smoothed far-field MUSIC on a compressed array
//! (spacing below half a wavelength). Stage 2 switches to an extended array
//! and refines every coarse angle with a 1D range search followed by a
//! windowed 2D search over the exact spherical-wavefront manifold.

pub mod array;
pub mod coupling;
pub mod crb;
pub mod estimators;
pub mod harness;
pub mod signal;
mod error;

pub use error::{Error, Result};

pub type CVec = nalgebra::DVector<num_complex::Complex64>;
pub type CMat = nalgebra::DMatrix<num_complex::Complex64>;
