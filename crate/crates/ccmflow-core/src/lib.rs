//! Contraction-metric nonlinear control with a dynamic path realization.
//!
//! The controller's internal state is a path joining the reference state to
//! the measured state, sampled at Chebyshev nodes. The path is evolved by the
//! plant flow plus a covariant-derivative gradient flow that drives it toward
//! a geodesic of the contraction metric; the control output integrates the
//! differential gain along the path. A geodesic-optimization static
//! controller is included as the baseline.
//!
//! Module map:
//! - [`chebyshev`]: spectral toolbox on `[-1, 1]` (nodes, fit, eval,
//!   differentiation, integration, Clenshaw-Curtis quadrature).
//! - [`geometry`]: Riemannian machinery for metrics `M(x) = W(x)^-1`
//!   (energy, length, Christoffel symbols, covariant derivative, first
//!   variation) and the sampled-path state.
//! - [`ccm`]: certificate `(W, Y, lambda)`, differential gain, path-integrated
//!   feedback, pointwise LMI residual.
//! - [`geodesic`]: energy minimization over Chebyshev paths with fixed
//!   endpoints; static controller built on top of it.
//! - [`pathdyn`]: dynamic realizations (forward, nominal, robust) and the
//!   adaptive weighting construction.
//! - [`plant`]: control-affine plant abstraction, the built-in benchmark
//!   system and its certificate, disturbances, reference signals.
//! - [`sim`]: closed-loop simulator and trajectory logs.

pub mod ccm;
pub mod chebyshev;
pub mod geodesic;
pub mod geometry;
pub mod plant;

mod error;

pub use ccm::CcmCertificate;
pub use chebyshev::{ChebGrid, ChebSeries};
pub use error::{Error, Result};
pub use geodesic::{GeodesicProblem, GeodesicSolution};
pub use geometry::{MetricField, PathState};
pub use plant::{DisturbanceModel, Plant, ReferenceSignal};
