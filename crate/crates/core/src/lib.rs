//! Direct multi-object tracking on raw MIMO-radar signals.
//!
//! The crate bundles everything needed to run the tracker end to end:
//!
//! - [`steering`]: kinematic state to delay/bearing geometry and the
//!   spatio-temporal steering vector of the virtual array.
//! - [`radar_sim`]: scenario description, chirp waveform, raw baseband
//!   synthesis and the frequency-domain matched filter.
//! - [`vmp`]: closed-form mean-field updates (reflectivity, existence,
//!   Gaussian data-message projection, kinematic chain, process noise).
//! - [`tracker`]: the per-step message schedule, pruning and grid-based
//!   birth of new potential objects.
//! - [`baseline`]: detect-then-track comparator (peak detector, GNN, Kalman
//!   filter, M-of-N track management).
//! - [`metrics`]: OSPA, cardinality statistics and error CDFs.
//! - [`harness`]: seeded Monte-Carlo batches and report files.

pub mod assignment;
pub mod baseline;
pub mod error;
pub mod harness;
pub mod metrics;
pub mod radar_sim;
pub mod steering;
pub mod tracker;
pub mod vmp;

pub use error::{Error, Result};

/// Complex baseband sample type used throughout.
pub type C64 = num_complex::Complex64;

/// Speed of light in vacuum [m/s].
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

/// Boltzmann constant [J/K].
pub const BOLTZMANN: f64 = 1.380_649e-23;
