//! Oscillator warm-up drift bounds from terminal log-on sequences.
//!
//! After a power cycle the terminal's oven-controlled oscillator runs fast
//! and decays to its settled frequency over a few minutes. Each log-on
//! sequence is re-referenced to its log-on acknowledgment, halved when the
//! terminal used closed-loop Doppler compensation (which doubles the
//! oscillator's effect on the BFO), and compared against its settled level.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::stats::{flag_outliers, BfoMeasurement, MessageType, OutlierRule};
use crate::time::UtcTime;

/// Two trailing samples closer than this are considered settled.
pub const SETTLED_TOLERANCE_HZ: f64 = 3.0;
/// ...provided the last one is at least this long after log-on.
pub const SETTLED_MIN_SECONDS: f64 = 120.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CompensationMode {
    OpenLoop,
    ClosedLoop,
}

impl CompensationMode {
    /// Factor mapping an observed BFO excursion to its open-loop equivalent.
    pub fn scale(self) -> f64 {
        match self {
            CompensationMode::OpenLoop => 1.0,
            CompensationMode::ClosedLoop => 0.5,
        }
    }
}

impl FromStr for CompensationMode {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "open_loop" => Ok(CompensationMode::OpenLoop),
            "closed_loop" => Ok(CompensationMode::ClosedLoop),
            other => Err(Error::InvalidInput(format!("unknown compensation mode '{other}'"))),
        }
    }
}

impl fmt::Display for CompensationMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            CompensationMode::OpenLoop => "open_loop",
            CompensationMode::ClosedLoop => "closed_loop",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogonSequence {
    pub id: String,
    pub logon_time: UtcTime,
    pub measurements: Vec<BfoMeasurement>,
    pub compensation_mode: CompensationMode,
    /// Bounds on the preceding outage, minutes.
    pub outage_minutes: Option<(f64, f64)>,
    pub notes: String,
    /// Externally supplied settled BFO (same scale as `measurements`).
    pub settled_annotation: Option<f64>,
}

impl LogonSequence {
    pub fn new(id: impl Into<String>, measurements: Vec<BfoMeasurement>, compensation_mode: CompensationMode) -> Result<Self> {
        let id = id.into();
        let first = measurements
            .first()
            .ok_or_else(|| Error::InsufficientData(format!("log-on sequence {id} is empty")))?;
        let seq = Self {
            logon_time: first.time,
            id,
            measurements,
            compensation_mode,
            outage_minutes: None,
            notes: String::new(),
            settled_annotation: None,
        };
        seq.validate()?;
        Ok(seq)
    }

    pub fn validate(&self) -> Result<()> {
        let first = self
            .measurements
            .first()
            .ok_or_else(|| Error::InsufficientData(format!("log-on sequence {} is empty", self.id)))?;
        if first.message_type != MessageType::LogonRequest {
            return Err(Error::InvalidInput(format!(
                "log-on sequence {} must start with a logon_request, found {}",
                self.id, first.message_type
            )));
        }
        if self.measurements.windows(2).any(|w| w[1].time < w[0].time) {
            return Err(Error::InvalidInput(format!("log-on sequence {} is not time-ordered", self.id)));
        }
        if let Some((lo, hi)) = self.outage_minutes {
            if lo > hi {
                return Err(Error::InvalidInput(format!("log-on sequence {} outage bounds reversed", self.id)));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RelativePoint {
    /// Seconds after the log-on request.
    pub seconds: f64,
    /// BFO relative to the log-on acknowledgment, Hz.
    pub offset_hz: f64,
    pub message_type: MessageType,
}

/// Shifts the sequence so its (first) log-on acknowledgment sits at 0 Hz,
/// dropping bursts flagged untrustworthy by `rule`.
pub fn normalize_to_ack(seq: &LogonSequence, rule: &OutlierRule) -> Result<Vec<RelativePoint>> {
    let flags = flag_outliers(&seq.measurements, rule);
    let kept: Vec<&BfoMeasurement> = seq
        .measurements
        .iter()
        .zip(&flags)
        .filter_map(|(m, &flagged)| (!flagged).then_some(m))
        .collect();
    let ack = kept
        .iter()
        .find(|m| m.message_type == MessageType::LogonAck)
        .ok_or_else(|| Error::InsufficientData(format!("log-on sequence {} has no usable logon_ack", seq.id)))?;
    let reference = ack.bfo;
    Ok(kept
        .iter()
        .map(|m| RelativePoint {
            seconds: m.time.seconds_since(seq.logon_time),
            offset_hz: m.bfo - reference,
            message_type: m.message_type,
        })
        .collect())
}

pub fn apply_compensation_scaling(curve: &[RelativePoint], mode: CompensationMode) -> Vec<RelativePoint> {
    let k = mode.scale();
    curve
        .iter()
        .map(|p| RelativePoint {
            offset_hz: p.offset_hz * k,
            ..*p
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SettledKind {
    /// Trailing samples met the settling rule.
    Detected,
    /// Supplied with the sequence.
    Annotated,
    /// Sequence too short; final sample used as a conservative stand-in.
    FinalSampleProxy,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SequenceDrift {
    pub id: String,
    pub compensation_mode: CompensationMode,
    /// `None` when the log-on request itself was discarded as untrustworthy.
    pub logon_minus_settled: Option<f64>,
    pub ack_minus_settled: f64,
    pub ack_below_logon: Option<f64>,
    pub settled: SettledKind,
    /// The scaled, ack-referenced curve the figures above were read from.
    pub curve: Vec<RelativePoint>,
}

pub fn analyze_sequence(seq: &LogonSequence, rule: &OutlierRule) -> Result<SequenceDrift> {
    seq.validate()?;
    let curve = apply_compensation_scaling(&normalize_to_ack(seq, rule)?, seq.compensation_mode);
    let last = curve.last().expect("ack is present");

    let detected = curve.len() >= 2 && {
        let prev = &curve[curve.len() - 2];
        (last.offset_hz - prev.offset_hz).abs() <= SETTLED_TOLERANCE_HZ && last.seconds >= SETTLED_MIN_SECONDS
    };
    let ack_raw = seq
        .measurements
        .iter()
        .zip(flag_outliers(&seq.measurements, rule))
        .find(|(m, flagged)| !flagged && m.message_type == MessageType::LogonAck)
        .map(|(m, _)| m.bfo)
        .expect("ack is present");
    let (settled, kind) = if detected {
        (last.offset_hz, SettledKind::Detected)
    } else if let Some(annotated) = seq.settled_annotation {
        ((annotated - ack_raw) * seq.compensation_mode.scale(), SettledKind::Annotated)
    } else {
        (last.offset_hz, SettledKind::FinalSampleProxy)
    };

    let logon = curve
        .iter()
        .find(|p| p.message_type == MessageType::LogonRequest)
        .map(|p| p.offset_hz);
    Ok(SequenceDrift {
        id: seq.id.clone(),
        compensation_mode: seq.compensation_mode,
        logon_minus_settled: logon.map(|l| l - settled),
        ack_minus_settled: -settled,
        ack_below_logon: logon,
        settled: kind,
        curve,
    })
}

/// Closed interval `[min, max]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HzRange {
    pub min: f64,
    pub max: f64,
}

impl HzRange {
    fn of(values: impl Iterator<Item = f64>) -> Option<Self> {
        values.fold(None, |acc, v| {
            Some(match acc {
                None => HzRange { min: v, max: v },
                Some(r) => HzRange {
                    min: r.min.min(v),
                    max: r.max.max(v),
                },
            })
        })
    }

    pub fn new(min: f64, max: f64) -> Result<Self> {
        if !(min.is_finite() && max.is_finite()) || min > max {
            return Err(Error::InvalidInput(format!("[{min}, {max}] is not a valid range")));
        }
        Ok(Self { min, max })
    }
}

/// How much higher than steady state the log-on and acknowledgment BFOs can
/// read after a power cycle, and how far the acknowledgment sits below the
/// log-on.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DriftBounds {
    pub logon_minus_settled: HzRange,
    pub ack_minus_settled: HzRange,
    pub ack_below_logon: HzRange,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DriftReport {
    pub bounds: DriftBounds,
    pub sequences: Vec<SequenceDrift>,
}

pub fn drift_report(sequences: &[LogonSequence], rule: &OutlierRule) -> Result<DriftReport> {
    let analyzed = sequences.iter().map(|s| analyze_sequence(s, rule)).collect::<Result<Vec<_>>>()?;
    if !analyzed.iter().any(|a| a.settled != SettledKind::FinalSampleProxy) {
        return Err(Error::InsufficientData(
            "no log-on sequence settles and none carries a settled annotation".into(),
        ));
    }
    let missing = || Error::InsufficientData("no sequence retains its log-on request".into());
    let bounds = DriftBounds {
        logon_minus_settled: HzRange::of(analyzed.iter().filter_map(|a| a.logon_minus_settled)).ok_or_else(missing)?,
        ack_minus_settled: HzRange::of(analyzed.iter().map(|a| a.ack_minus_settled)).ok_or_else(missing)?,
        ack_below_logon: HzRange::of(analyzed.iter().filter_map(|a| a.ack_below_logon)).ok_or_else(missing)?,
    };
    Ok(DriftReport {
        bounds,
        sequences: analyzed,
    })
}

pub fn extract_drift_bounds(sequences: &[LogonSequence], rule: &OutlierRule) -> Result<DriftBounds> {
    drift_report(sequences, rule).map(|r| r.bounds)
}
