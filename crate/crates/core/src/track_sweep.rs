//! BFO error as a function of assumed track angle at a fixed crossing point.

use serde::{Deserialize, Serialize};

use crate::bfo_model::{predict_bfo, AircraftState, ChannelConfig};
use crate::error::{Error, Result};
use crate::geodesy::{GeodeticPosition, GroundKinematics};
use crate::satellite::{CorrectionTable, NominalSlot, SatelliteSource};
use crate::stats::bfo_error;
use crate::time::UtcTime;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TrackSector {
    /// Tracks in [90, 270] degrees; the minimum-BFO side.
    South,
    /// Tracks in [270, 360] and [0, 90] degrees; the maximum-BFO side.
    North,
}

impl TrackSector {
    pub fn contains(self, track_deg: f64) -> bool {
        match self {
            TrackSector::South => (90.0..=270.0).contains(&track_deg),
            TrackSector::North => track_deg <= 90.0 || track_deg >= 270.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrackPoint {
    pub track_deg: f64,
    pub bfo_error_hz: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrackCurve {
    pub ground_speed: f64,
    /// Includes both 0 and 360 degrees.
    pub points: Vec<TrackPoint>,
}

impl TrackCurve {
    pub fn peak_to_peak(&self) -> f64 {
        let (lo, hi) = self.points.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), p| {
            (lo.min(p.bfo_error_hz), hi.max(p.bfo_error_hz))
        });
        hi - lo
    }
}

/// Inputs shared by every point of a sweep.
pub struct SweepSetup<'a> {
    pub satellite: &'a dyn SatelliteSource,
    pub corrections: &'a CorrectionTable,
    pub bias: f64,
    pub slot: NominalSlot,
    pub channel: ChannelConfig,
}

/// For each track angle, `predict_bfo(level flight) − measured_bfo`.
pub fn bfo_error_vs_track(
    crossing: &GeodeticPosition,
    t: UtcTime,
    ground_speed: f64,
    measured_bfo: f64,
    setup: &SweepSetup<'_>,
    step_deg: f64,
) -> Result<TrackCurve> {
    let steps = 360.0 / step_deg;
    if !(step_deg > 0.0 && step_deg <= 360.0 && (steps - steps.round()).abs() < 1e-9) {
        return Err(Error::InvalidInput(format!("track step {step_deg} does not divide 360")));
    }
    let sat = setup.satellite.state_at(t)?;
    let points = (0..=steps.round() as usize)
        .map(|k| {
            let track_deg = k as f64 * step_deg;
            let aircraft = AircraftState {
                position: *crossing,
                kinematics: GroundKinematics::new(ground_speed, track_deg, 0.0)?,
                time: t,
            };
            let (predicted, _) = predict_bfo(&aircraft, &sat, setup.corrections, setup.bias, &setup.slot, &setup.channel)?;
            Ok(TrackPoint {
                track_deg,
                bfo_error_hz: bfo_error(predicted, measured_bfo),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(TrackCurve { ground_speed, points })
}

/// Sector extremum of the error curve: the minimum over southerly tracks, the
/// maximum over northerly ones.
pub fn track_offset(curve: &TrackCurve, sector: TrackSector) -> Result<f64> {
    let in_sector = curve.points.iter().filter(|p| sector.contains(p.track_deg)).map(|p| p.bfo_error_hz);
    let extremum = match sector {
        TrackSector::South => in_sector.fold(None, |acc: Option<f64>, e| Some(acc.map_or(e, |a| a.min(e)))),
        TrackSector::North => in_sector.fold(None, |acc: Option<f64>, e| Some(acc.map_or(e, |a| a.max(e)))),
    };
    extremum.ok_or_else(|| Error::InsufficientData(format!("no curve points in the {sector:?} sector")))
}
