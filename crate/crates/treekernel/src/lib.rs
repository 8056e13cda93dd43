//! Evolution kernels of Schrödinger operators on (q+1)-regular trees.
//!
//! Two models are covered:
//!
//! * the adjacency matrix on the combinatorial tree ([`discrete`]), where the
//!   kernel is an explicit spectral integral against the Kesten-type density,
//!   and
//! * the equilateral quantum tree ([`quantum`]): every edge carries the same
//!   symmetric potential W on [0, L] and every vertex the same delta coupling
//!   alpha. The absolutely continuous part of the evolution is a sum of band
//!   integrals built from one-edge transfer quantities ([`edge_ode`]) and the
//!   band structure of the discriminant w = (q+1)c + alpha*s ([`bands`]).
//!
//! Both kernels decay like t^(-3/2); the crate computes the first-order
//! large-time asymptotics and checks them against direct quadrature. The
//! [`stationary_phase`] module provides the endpoint stationary-phase
//! estimator with a certified error bound that drives those asymptotics.

pub mod bands;
pub mod cli;
pub mod discrete;
pub mod edge_ode;
pub mod error;
pub mod interp;
pub mod ode;
pub mod potential;
pub mod quad;
pub mod quantum;
pub mod specfun;
pub mod stationary_phase;

pub use error::{Error, Result};
