//! Numerical toolkit for perturbed Hardy-Schrodinger problems
//! `(-Delta)^{alpha/2} u - gamma u/|x|^alpha - lambda u = u^{2*(s)-1}/|x|^s + h u^{q-1}`
//! on bounded domains containing the origin.
//!
//! The crate computes the explicit constants that govern existence of
//! positive solutions (the Hardy constant, the fundamental exponents, the
//! criticality and perturbation thresholds), classifies problem instances
//! into existence regimes, and verifies the variational machinery at desk
//! scale: discrete Hardy-Sobolev quotients, energy fiber maxima,
//! test-function energy expansions, an interior-mass estimator, and a
//! numerical mountain-pass solver for the local case `alpha = 2`.

pub mod error;
pub mod mountainpass;
pub mod quadform;
pub mod roots;
pub mod specfun;
pub mod testfun;
pub mod thresholds;

pub use error::{Error, Result};
