//! Space-time Petrov-Galerkin discretization of linear parabolic problems with
//! random diffusion coefficients, together with the numerical machinery to
//! measure inf-sup and CFL constants, quasi-optimality ratios and `L^p(Ω)`
//! moments of pathwise solutions.

pub mod constants;
pub mod error;
pub mod experiments;
pub mod fem_space;
pub mod oracle;
pub mod quadrature;
pub mod spacetime;
pub mod stochastic;

pub use error::{Error, Result};
