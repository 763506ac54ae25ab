//! Sliced Wasserstein distances between probability measures on a separable
//! Hilbert space, truncated to its first `d` basis coefficients.
//!
//! Directions are drawn from the normalized surface measure of a
//! non-degenerate Gaussian reference, measures are projected onto each
//! direction, and the one-dimensional `W_p^p` values are averaged.
//!
//! | Module | Contents |
//! |--------|----------|
//! | [`hilbert`] | coefficient vectors, discrete measures, moments, measure families |
//! | [`ot1d`] | exact 1D `W_p`, the empirical-rate integral and its Chebyshev envelope |
//! | [`discrete_ot`] | exact `W_p` between small discrete measures (min-cost flow) |
//! | [`surface`] | Gaussian references and thin-shell direction sampling |
//! | [`sliced`] | the sliced estimator and its property checks |
//! | [`experiments`] | rate, two-sample, counterexample, narrow-convergence and dimension sweeps |
//!
//! ```
//! use sw_core::hilbert::{CoefficientVector, DiscreteMeasure};
//! use sw_core::sliced::sw_estimate;
//! use sw_core::surface::{sample_directions, GaussianReference};
//!
//! let reference = GaussianReference::isotropic(3).unwrap();
//! let dirs = sample_directions(&reference, 256, 0.05, 7, 1 << 20).unwrap();
//! let origin = DiscreteMeasure::dirac(CoefficientVector::zeros(3).unwrap());
//! let unit = DiscreteMeasure::dirac(CoefficientVector::basis(3, 0).unwrap());
//! let est = sw_estimate(&origin, &unit, 2.0, &dirs).unwrap();
//! assert!(est.value > 0.0 && est.value <= 1.0);
//! ```

pub mod discrete_ot;
pub mod error;
pub mod experiments;
pub mod hilbert;
pub mod ot1d;
pub mod quadrature;
pub mod rng;
pub mod sliced;
pub mod surface;

pub use error::{Error, Result};
