//! Circuit-level simulator for tightly-coupled massive MIMO antenna arrays.
//!
//! The library builds impedance models of uniform linear arrays whose
//! elements are electrically small antennas confined to spheres of radius
//! `a`, derives the far-field channel matrix and noise covariance from the
//! resulting multiport circuit, and evaluates achievable rates under
//! water-filling power allocation. It also provides the analytic
//! tight-coupling condition (reactance cancellation of an infinite colinear
//! array) whose optimum spacing-to-antenna-size ratio is `(6 zeta(3))^(1/3)`.
//!
//! Module map:
//!
//! * [`chu`] — self-impedance of a single sphere-bounded antenna element;
//! * [`coupling`] — pairwise mutual impedance and array impedance matrices;
//! * [`propagation`] — LoS and correlated-Rayleigh transimpedance matrices;
//! * [`network`] — multiport circuit solve: channel matrix and noise covariance;
//! * [`rate`] — eigenmodes, water-filling, band-restricted rate integration;
//! * [`tightcoupling`] — zeta/polylog identities and the reactance residual;
//! * [`scenario`] — configuration, experiment sweeps, CSV output, CLI backend.
//!
//! Units are SI throughout: frequencies in Hz, lengths in meters, impedances
//! in ohms, powers in watts. Voltage power spectral densities are in V^2/Hz.

// validation sites use `!(x > 0.0)` so NaN fails the check too
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod chu;
pub mod coupling;
pub mod error;
pub mod network;
pub mod propagation;
pub mod rate;
pub mod scenario;
pub mod tightcoupling;

pub use error::{Error, Result};

/// Speed of light in vacuum [m/s].
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

/// Boltzmann constant [J/K].
pub const BOLTZMANN: f64 = 1.380_649e-23;
