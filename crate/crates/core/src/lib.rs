//! Clustering coefficients and degree-of-separation statistics for random
//! networks whose link probability depends on distance on a circle or a flat
//! torus.
//!
//! Three independent routes compute the same quantities:
//! [`fourier`] evaluates closed-form Fourier series, [`quadrature`] integrates
//! and sums the defining expressions directly, and [`mc`] samples the random
//! graphs themselves.

pub mod error;
pub mod fourier;
pub mod kernel;
pub mod mc;
pub mod quadrature;

pub use error::{Error, Result};
pub use kernel::{ConnectionKernel, MeanDegree, NetworkModel, Space};
