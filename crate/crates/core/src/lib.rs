//! Multi-shell three-species LEO population model with a synthetic
//! Monte-Carlo ensemble, distribution-fit ranking, and an unscented
//! Kalman filter over an augmented state that carries the per-shell
//! collision parameters as estimated quantities.
//!
//! The crate is organized bottom-up:
//!
//! - [`shell`], [`params`], [`state`] — the grid, constants, and state
//!   vectors (plain three-species and augmented layouts).
//! - [`dynamics`] — governing equations, collision parameters φ, and
//!   fragment counts.
//! - [`atmosphere`] — piecewise-exponential density with an optional
//!   solar-cycle modulation, and the inter-shell drag flux.
//! - [`integrator`] — deterministic fixed-step RK4.
//! - [`ensemble`] — seeded Monte-Carlo member generation and per-shell
//!   moment extraction.
//! - [`distfit`] — Gaussian/Gamma/Rician fitting and the RMSE
//!   performance index.
//! - [`ukf`] — scaled unscented Kalman filter with covariance
//!   conditioning and the model-specific process/measurement glue.
//! - [`reference`] — bundled steady-state φ̄ reference table.
//! - [`config`] — file-based configuration for all of the above.
//!
//! Everything numerical is generic over the scalar type via
//! [`scalar::Real`]; the aliases below fix `f64` for ordinary use.

pub mod atmosphere;
pub mod config;
pub mod distfit;
pub mod dynamics;
pub mod ensemble;
pub mod error;
pub mod integrator;
pub mod linalg;
pub mod params;
pub mod reference;
pub mod scalar;
pub mod shell;
pub mod state;
pub mod ukf;

pub use error::{Error, Result};
pub use scalar::Real;

/// Concrete `f64` aliases for the main model types.
pub type ShellGrid64 = shell::ShellGrid<f64>;
pub type ModelParams64 = params::ModelParams<f64>;
pub type PopulationState64 = state::PopulationState<f64>;
pub type AugmentedState64 = state::AugmentedState<f64>;
pub type PhiValues64 = state::PhiValues<f64>;
pub type DensityModel64 = atmosphere::DensityModel<f64>;
pub type SsemDynamics64 = dynamics::SsemDynamics<f64>;
pub type MomentRecord64 = ensemble::MomentRecord<f64>;
pub type UkfConfig64 = ukf::UkfConfig<f64>;
pub type FilterTrace64 = ukf::FilterTrace<f64>;
