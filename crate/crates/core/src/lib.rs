//! Optimal control of separable network dynamics.
//!
//! A controlled system `z' = mu(t) h(z, p)` with a scalar positive input
//! becomes the autonomous flow `z' = h(z, p)` after the time change
//! `tau(t) = int_0^t mu(s) ds`. Everything in this crate is organized around
//! that fact:
//!
//! - [`ode`] integrates controlled and rescaled systems, forward
//!   sensitivities, and the Lie derivative of an observable along `h`.
//! - [`models`] provides the finite Kuramoto network, the degree-class
//!   Ott-Antonsen reduction and SI spreading on activity-driven networks.
//! - [`control`] holds the Chebyshev control parameterization and the
//!   integral functionals `I(mu)` and `G(mu)`.
//! - [`reference`] solves the integral-constrained reference problems in
//!   closed form (or by root finding for a general cost) and maps their
//!   multipliers onto the original problems.
//! - [`coupling`] inverts `Phi(z(C2)) = target` and finds zeros of the Lie
//!   derivative along the rescaled flow.
//! - [`ocp`] is the numeric KKT solver over polynomial controls used to
//!   cross-check the analytic route.

pub mod control;
pub mod coupling;
mod error;
pub mod models;
pub mod ocp;
pub mod ode;
pub mod quadrature;
pub mod reference;
pub mod system;
pub mod validation;

pub use control::{ControlPolynomial, CostFunction};
pub use error::{Error, Result};
pub use system::{ClosureSystem, SeparableSystem};

/// Default integration tolerance.
pub const DEFAULT_TOL: f64 = 1e-10;
