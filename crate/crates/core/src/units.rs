//! Unit conversions shared across modules.

/// Meters per second in one foot per minute.
pub const FPM_TO_MPS: f64 = 0.00508;

/// Meters per second in one knot.
pub const KNOTS_TO_MPS: f64 = 0.514444;

/// Standard gravity used for acceleration in g, m/s².
pub const STANDARD_GRAVITY: f64 = 9.8;

pub fn knots_to_mps(knots: f64) -> f64 {
    knots * KNOTS_TO_MPS
}

pub fn fpm_to_mps(fpm: f64) -> f64 {
    fpm * FPM_TO_MPS
}

pub fn mps_to_fpm(mps: f64) -> f64 {
    mps / FPM_TO_MPS
}
