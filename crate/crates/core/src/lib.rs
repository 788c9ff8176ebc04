//! Burst frequency offset (BFO) analysis for aircraft SATCOM links relayed
//! through a geosynchronous satellite.
//!
//! The crate covers the BFO forward model, error statistics, cruise trend
//! fitting, track-angle sweeps, oscillator warm-up drift bounds after a
//! terminal power cycle, and the two-hypothesis descent-rate bounding that
//! combines them.

pub mod bfo_model;
pub mod config;
pub mod descent;
pub mod error;
pub mod geodesy;
pub mod io;
pub mod pipeline;
pub mod satellite;
pub mod stats;
pub mod synthetic;
pub mod time;
pub mod track_sweep;
pub mod trend;
pub mod units;
pub mod warmup;

pub use error::{Error, Result};
pub use time::UtcTime;
