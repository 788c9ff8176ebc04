//! Straight-line trend of cruise BFOs and its extrapolation.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::stats::{BfoMeasurement, MessageType};
use crate::time::UtcTime;

/// Extrapolating further than this from the fit window is flagged.
pub const FAR_EXTRAPOLATION_SECONDS: f64 = 2.0 * 3600.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrendModel {
    /// Hz per hour.
    pub slope: f64,
    /// BFO at `window.0`, Hz.
    pub intercept: f64,
    pub window: (UtcTime, UtcTime),
    pub residual_rms: f64,
    pub count: usize,
}

impl TrendModel {
    pub fn extrapolate(&self, t: UtcTime) -> f64 {
        self.intercept + self.slope * t.seconds_since(self.window.0) / 3600.0
    }

    /// Seconds from `t` to the nearest edge of the fit window (0 inside it).
    pub fn distance_from_window(&self, t: UtcTime) -> f64 {
        if t < self.window.0 {
            self.window.0.seconds_since(t)
        } else if t > self.window.1 {
            t.seconds_since(self.window.1)
        } else {
            0.0
        }
    }

    pub fn is_far_extrapolation(&self, t: UtcTime) -> bool {
        self.distance_from_window(t) > FAR_EXTRAPOLATION_SECONDS
    }

    /// Level-flight expectation: the trend value plus a track-dependent
    /// offset (see [`crate::track_sweep::track_offset`]).
    pub fn expected_level_flight_bfo(&self, t: UtcTime, track_offset: f64) -> f64 {
        self.extrapolate(t) + track_offset
    }
}

/// Ordinary least squares over in-window bursts. Phone-call bursts are left
/// out; they are used separately as a consistency check.
pub fn fit_linear_trend(measurements: &[BfoMeasurement], window: (UtcTime, UtcTime)) -> Result<TrendModel> {
    if window.0 >= window.1 {
        return Err(Error::InvalidInput(format!(
            "fit window start {} is not before end {}",
            window.0, window.1
        )));
    }
    let points: Vec<(f64, f64)> = measurements
        .iter()
        .filter(|m| m.time >= window.0 && m.time <= window.1 && m.message_type != MessageType::Phone)
        .map(|m| (m.time.seconds_since(window.0) / 3600.0, m.bfo))
        .collect();
    let n = points.len();
    if n < 2 {
        return Err(Error::InsufficientData(format!(
            "trend fit needs at least 2 in-window bursts, got {n}"
        )));
    }
    let nf = n as f64;
    let mean_t = points.iter().map(|p| p.0).sum::<f64>() / nf;
    let mean_f = points.iter().map(|p| p.1).sum::<f64>() / nf;
    let stt: f64 = points.iter().map(|p| (p.0 - mean_t).powi(2)).sum();
    if stt == 0.0 {
        return Err(Error::InsufficientData("trend fit needs distinct timestamps".into()));
    }
    let stf: f64 = points.iter().map(|p| (p.0 - mean_t) * (p.1 - mean_f)).sum();
    let slope = stf / stt;
    let intercept = mean_f - slope * mean_t;
    let ss_res: f64 = points.iter().map(|p| (p.1 - intercept - slope * p.0).powi(2)).sum();
    Ok(TrendModel {
        slope,
        intercept,
        window,
        residual_rms: (ss_res / nf).sqrt(),
        count: n,
    })
}
