//! Weighted fractional Brownian sheets.
//!
//! The crate evaluates the separable covariance of the sheet, samples it
//! exactly on rectangular grids, and simulates the Poisson system of paired
//! stable particles whose occupation-time fluctuations converge to it.

pub mod error;
pub mod params;
pub mod quadrature;
pub mod special_functions;

pub use error::{Result, WfbsError};
pub mod covariance;
pub mod exec;
pub mod field_sampler;
pub mod particle_system;
pub mod prelimit_oracle;
pub mod verify;
