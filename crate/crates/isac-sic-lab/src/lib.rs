//! Desk-scale simulation and analysis toolkit for an uplink system in which
//! several single-antenna users share one band with a monostatic sensing
//! function at the base station.
//!
//! The receiver cancels the two signal classes in one of two orders:
//!
//! * [`model::SicOrder::CSic`]: the echo is reconstructed and removed first,
//!   so decoding pays no sensing interference while sensing runs against the
//!   superposed uplink traffic.
//! * [`model::SicOrder::SSic`]: the uplink messages are decoded and removed
//!   first, so sensing is interference-free while each decoding slot pays a
//!   residual echo penalty.
//!
//! The crate provides closed-form optimizers and asymptotes for both orders,
//! Monte Carlo estimators for outage and ergodic rates, a frequency-division
//! baseline, and rate-region construction, all behind the `isac-sic-lab`
//! command line tool.

pub mod chart;
pub mod comms;
pub mod config;
pub mod error;
pub mod matrixkit;
pub mod model;
pub mod montecarlo;
pub mod region;
pub mod runner;
pub mod sensing;
pub mod special;

pub use error::Error;

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;
