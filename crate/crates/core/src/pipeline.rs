//! End-to-end analyses driven by an [`AnalysisConfig`].

use serde::Serialize;

use crate::bfo_model::{calibrate_bias, descent_sensitivity, predict_bfo, AircraftState, BfoTerms};
use crate::config::AnalysisConfig;
use crate::descent::{
    estimate_downward_acceleration, Acceleration, AccelerationEstimator, DescentAnalysis, DescentBoundsTable, DescentScenario, Hypothesis,
};
use crate::error::{Error, Result};
use crate::geodesy::{elevation_angle, GeodeticPosition};
use crate::io;
use crate::satellite::{nominal_satellite_position, CorrectionTable, EphemerisTable, FixedSatellite, SatelliteSource, SatelliteState};
use crate::stats::BfoMeasurement;
use crate::time::UtcTime;
use crate::track_sweep::{bfo_error_vs_track, track_offset, SweepSetup, TrackCurve, TrackSector};
use crate::trend::{fit_linear_trend, TrendModel};
use crate::units::knots_to_mps;
use crate::warmup::{drift_report, DriftReport};

/// Satellite motion: tabulated ephemeris, or the nominal slot at rest when
/// the configuration names no ephemeris file.
pub enum Satellite {
    Ephemeris(EphemerisTable),
    Nominal(FixedSatellite),
}

impl SatelliteSource for Satellite {
    fn state_at(&self, t: UtcTime) -> Result<SatelliteState> {
        match self {
            Satellite::Ephemeris(e) => e.state_at(t),
            Satellite::Nominal(f) => f.state_at(t),
        }
    }
}

pub fn load_satellite(cfg: &AnalysisConfig) -> Result<Satellite> {
    match &cfg.files.ephemeris {
        Some(path) => Ok(Satellite::Ephemeris(EphemerisTable::new(io::read_ephemeris(path)?.value)?)),
        None => {
            log::warn!("no ephemeris configured; holding the satellite at its nominal slot");
            Ok(Satellite::Nominal(FixedSatellite(SatelliteState {
                position: nominal_satellite_position(&cfg.slot),
                velocity: crate::geodesy::EcefVector::ZERO,
            })))
        }
    }
}

/// Configured corrections, or zero around `t` when none are configured.
pub fn load_corrections(cfg: &AnalysisConfig, around: UtcTime) -> Result<CorrectionTable> {
    match &cfg.files.corrections {
        Some(path) => CorrectionTable::new(io::read_corrections(path)?.value),
        None => Ok(CorrectionTable::zero_over(around, around)),
    }
}

fn load_logs(cfg: &AnalysisConfig) -> Result<Vec<BfoMeasurement>> {
    io::ingest_logs(AnalysisConfig::require(&cfg.files.logs, "logs")?)
}

#[derive(Debug, Clone, Serialize)]
pub struct Prediction {
    pub time: UtcTime,
    pub bfo_hz: f64,
    pub terms: BfoTerms,
}

pub fn predict(cfg: &AnalysisConfig, aircraft: &AircraftState) -> Result<Prediction> {
    let sat = load_satellite(cfg)?.state_at(aircraft.time)?;
    let corrections = load_corrections(cfg, aircraft.time)?;
    let (bfo_hz, terms) = predict_bfo(aircraft, &sat, &corrections, cfg.bias, &cfg.slot, &cfg.channel)?;
    Ok(Prediction {
        time: aircraft.time,
        bfo_hz,
        terms,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct SweepCurve {
    pub speed_kts: f64,
    pub peak_to_peak_hz: f64,
    pub south_offset_hz: f64,
    pub north_offset_hz: f64,
    pub curve: TrackCurve,
}

#[derive(Debug, Clone, Serialize)]
pub struct SweepReport {
    pub time: UtcTime,
    pub crossing: GeodeticPosition,
    pub measured_bfo_hz: f64,
    pub curves: Vec<SweepCurve>,
}

impl SweepReport {
    pub fn curve_at(&self, speed_kts: f64) -> Option<&SweepCurve> {
        self.curves.iter().find(|c| c.speed_kts == speed_kts)
    }
}

/// Optional overrides of the configured sweep.
#[derive(Debug, Clone, Default)]
pub struct SweepOverrides {
    pub time: Option<UtcTime>,
    pub speeds_kts: Option<Vec<f64>>,
    pub step_deg: Option<f64>,
    pub measured_bfo: Option<f64>,
}

pub fn sweep(cfg: &AnalysisConfig, o: &SweepOverrides) -> Result<SweepReport> {
    let s = cfg.sweep.as_ref().ok_or_else(|| Error::Config("no [sweep] section".into()))?;
    let time = o.time.unwrap_or(s.time);
    let speeds = o.speeds_kts.clone().unwrap_or_else(|| s.speeds_kts.clone());
    let step = o.step_deg.unwrap_or(s.step_deg);
    let measured = o.measured_bfo.unwrap_or(s.measured_bfo);
    let satellite = load_satellite(cfg)?;
    let corrections = load_corrections(cfg, time)?;
    let setup = SweepSetup {
        satellite: &satellite,
        corrections: &corrections,
        bias: cfg.bias,
        slot: cfg.slot,
        channel: cfg.channel,
    };
    let curves = speeds
        .iter()
        .map(|&speed_kts| {
            let curve = bfo_error_vs_track(&s.crossing, time, knots_to_mps(speed_kts), measured, &setup, step)?;
            Ok(SweepCurve {
                speed_kts,
                peak_to_peak_hz: curve.peak_to_peak(),
                south_offset_hz: track_offset(&curve, TrackSector::South)?,
                north_offset_hz: track_offset(&curve, TrackSector::North)?,
                curve,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(SweepReport {
        time,
        crossing: s.crossing,
        measured_bfo_hz: measured,
        curves,
    })
}

/// South and north offsets from the reference-speed curve of the configured sweep.
pub fn reference_offsets(cfg: &AnalysisConfig) -> Result<(f64, f64)> {
    let s = cfg.sweep.as_ref().ok_or_else(|| Error::Config("no [sweep] section".into()))?;
    let report = sweep(
        cfg,
        &SweepOverrides {
            speeds_kts: Some(vec![s.reference_speed_kts]),
            ..Default::default()
        },
    )?;
    let c = &report.curves[0];
    Ok((c.south_offset_hz, c.north_offset_hz))
}

#[derive(Debug, Clone, Serialize)]
pub struct Extrapolation {
    pub time: UtcTime,
    pub bfo_hz: f64,
    pub far_from_window: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub expected_south_hz: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub expected_north_hz: Option<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct TrendReport {
    pub model: TrendModel,
    pub extrapolations: Vec<Extrapolation>,
}

pub fn trend(
    cfg: &AnalysisConfig,
    window: Option<(UtcTime, UtcTime)>,
    at: Option<Vec<UtcTime>>,
    offsets: Option<(f64, f64)>,
) -> Result<TrendReport> {
    let settings = cfg.trend.as_ref();
    let window = window
        .or(settings.map(|s| s.window))
        .ok_or_else(|| Error::Config("no trend window given".into()))?;
    let at = at.or_else(|| settings.map(|s| s.extrapolate.clone())).unwrap_or_default();
    let model = fit_linear_trend(&load_logs(cfg)?, window)?;
    let extrapolations = at
        .into_iter()
        .map(|t| Extrapolation {
            time: t,
            bfo_hz: model.extrapolate(t),
            far_from_window: model.is_far_extrapolation(t),
            expected_south_hz: offsets.map(|o| model.expected_level_flight_bfo(t, o.0)),
            expected_north_hz: offsets.map(|o| model.expected_level_flight_bfo(t, o.1)),
        })
        .collect();
    Ok(TrendReport { model, extrapolations })
}

pub fn logon_drift(cfg: &AnalysisConfig) -> Result<DriftReport> {
    let seqs = io::ingest_logon_sequences(
        AnalysisConfig::require(&cfg.files.logon_sequences, "logon_sequences")?,
        cfg.files.logon_meta.as_deref(),
    )?;
    drift_report(&seqs, &cfg.outliers)
}

/// The descent scenario described by the configuration. Drift bounds come
/// from the `[descent.drift]` table when present, otherwise from the log-on
/// sequences.
pub fn descent_scenario(cfg: &AnalysisConfig) -> Result<DescentScenario> {
    let d = cfg.descent.as_ref().ok_or_else(|| Error::Config("no [descent] section".into()))?;
    let drift = match d.drift {
        Some(b) => Some(b),
        None if cfg.files.logon_sequences.is_some() => Some(logon_drift(cfg)?.bounds),
        None => None,
    };
    let sensitivity = if d.geometric_sensitivity {
        let crossing = d.crossing.expect("validated with the config");
        let first = d.bursts.first().ok_or_else(|| Error::InsufficientData("no final bursts".into()))?;
        let sat = load_satellite(cfg)?.state_at(first.time)?;
        descent_sensitivity(elevation_angle(&crossing, sat.position)?, &cfg.channel)
    } else {
        d.sensitivity_hz_per_100fpm
    };
    Ok(DescentScenario {
        bursts: d.bursts.clone(),
        expected_south: d.expected_south,
        expected_north: d.expected_north,
        sensitivity_hz_per_100fpm: sensitivity,
        noise: cfg.noise,
        drift,
    })
}

/// Elevation of the satellite from the configured final crossing at the first final burst.
pub fn final_elevation(cfg: &AnalysisConfig) -> Result<f64> {
    let d = cfg.descent.as_ref().ok_or_else(|| Error::Config("no [descent] section".into()))?;
    let crossing = d.crossing.ok_or_else(|| Error::Config("no [descent.crossing]".into()))?;
    let first = d.bursts.first().ok_or_else(|| Error::InsufficientData("no final bursts".into()))?;
    let sat = load_satellite(cfg)?.state_at(first.time)?;
    elevation_angle(&crossing, sat.position)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HypothesisChoice {
    One(Hypothesis),
    Both,
}

#[derive(Debug, Clone, Serialize)]
pub struct DescentReport {
    pub sensitivity_hz_per_100fpm: f64,
    pub tables: Vec<DescentBoundsTable>,
    /// Outer envelope; present when both hypotheses were evaluated.
    pub combined: Option<DescentBoundsTable>,
    pub acceleration: Option<Acceleration>,
}

pub fn descent(cfg: &AnalysisConfig, choice: HypothesisChoice, estimator: AccelerationEstimator) -> Result<DescentReport> {
    let scenario = descent_scenario(cfg)?;
    match choice {
        HypothesisChoice::Both => {
            let DescentAnalysis {
                power_outage,
                other_cause,
                combined,
                acceleration,
            } = scenario.analyze(estimator)?;
            Ok(DescentReport {
                sensitivity_hz_per_100fpm: scenario.sensitivity_hz_per_100fpm,
                tables: vec![power_outage, other_cause],
                combined: Some(combined),
                acceleration,
            })
        }
        HypothesisChoice::One(h) => {
            let table = scenario.table(h)?;
            let acceleration = match table.rows.as_slice() {
                [a, .., b] => Some(estimate_downward_acceleration(&a.rates, a.time, &b.rates, b.time, estimator)?),
                _ => None,
            };
            Ok(DescentReport {
                sensitivity_hz_per_100fpm: scenario.sensitivity_hz_per_100fpm,
                tables: vec![table],
                combined: None,
                acceleration,
            })
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct BiasReport {
    pub bias_hz: f64,
    pub count: usize,
    pub window: (UtcTime, UtcTime),
}

/// Bias from bursts logged inside `window` while parked at the configured position.
pub fn calibrate(cfg: &AnalysisConfig, window: Option<(UtcTime, UtcTime)>) -> Result<BiasReport> {
    let cal = cfg
        .calibration
        .as_ref()
        .ok_or_else(|| Error::Config("no [calibration] section".into()))?;
    let window = window.unwrap_or(cal.window);
    let tarmac: Vec<(BfoMeasurement, AircraftState)> = load_logs(cfg)?
        .into_iter()
        .filter(|m| m.time >= window.0 && m.time <= window.1)
        .map(|m| {
            let state = AircraftState::stationary(cal.position, m.time);
            (m, state)
        })
        .collect();
    let satellite = load_satellite(cfg)?;
    let corrections = load_corrections(cfg, window.0)?;
    let bias_hz = calibrate_bias(&tarmac, &satellite, &corrections, &cfg.slot, &cfg.channel)?;
    Ok(BiasReport {
        bias_hz,
        count: tarmac.len(),
        window,
    })
}
