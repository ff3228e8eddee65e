//! Closed-form dynamics of a charged particle in a magnetic field coupled to a Drude bath.
//!
//! The crate builds the exponential-sum propagators of the non-Markovian Langevin equations,
//! then derives transport coefficients, noise correlators, diffusion coefficients, covariance
//! evolution and orbital magnetization from them.

pub mod bath;
pub mod charpoly;
pub mod checks;
pub mod correlators;
pub mod diffusion;
pub mod error;
pub mod figures;
pub mod magnetism;
pub mod moments;
pub mod params;
pub mod propagator;
pub mod quadrature;
pub mod transport;

pub use error::{Error, Result};
pub use params::SystemParams;
