//! Descent-rate bounds from the final log-on pair.
//!
//! Each recorded BFO is widened into a range by removing the possible
//! oscillator warm-up drift (only when the log-on followed a power outage)
//! and the measurement noise. The gap between the expected level-flight BFO
//! and that range, divided by the BFO change per 100 ft/min of descent,
//! brackets the descent rate.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::stats::NoiseBounds;
use crate::time::UtcTime;
use crate::units::{FPM_TO_MPS, STANDARD_GRAVITY};
use crate::warmup::DriftBounds;

/// Hz of BFO per 100 ft/min of descent used by default.
pub const DEFAULT_SENSITIVITY_HZ_PER_100FPM: f64 = 1.7;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Hypothesis {
    /// The log-on followed a power interruption, so warm-up drift applies.
    PowerOutage,
    /// The log-on had some other cause; the oscillator was already settled.
    OtherCause,
}

impl Hypothesis {
    pub const ALL: [Hypothesis; 2] = [Hypothesis::PowerOutage, Hypothesis::OtherCause];

    pub fn number(self) -> u8 {
        match self {
            Hypothesis::PowerOutage => 1,
            Hypothesis::OtherCause => 2,
        }
    }
}

impl fmt::Display for Hypothesis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Hypothesis::PowerOutage => "power_outage",
            Hypothesis::OtherCause => "other_cause",
        })
    }
}

impl FromStr for Hypothesis {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "1" | "power_outage" => Ok(Hypothesis::PowerOutage),
            "2" | "other_cause" => Ok(Hypothesis::OtherCause),
            other => Err(Error::InvalidInput(format!("unknown hypothesis '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LogonMessage {
    Logon,
    Ack,
}

impl fmt::Display for LogonMessage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            LogonMessage::Logon => "logon",
            LogonMessage::Ack => "ack",
        })
    }
}

impl FromStr for LogonMessage {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "logon" | "logon_request" => Ok(LogonMessage::Logon),
            "ack" | "logon_ack" => Ok(LogonMessage::Ack),
            other => Err(Error::InvalidInput(format!("unknown log-on message '{other}'"))),
        }
    }
}

/// Closed BFO interval, Hz.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BfoRange {
    pub lower: f64,
    pub upper: f64,
}

impl BfoRange {
    pub fn new(lower: f64, upper: f64) -> Result<Self> {
        if !(lower.is_finite() && upper.is_finite()) || lower > upper {
            return Err(Error::InvalidInput(format!("[{lower}, {upper}] is not a valid BFO range")));
        }
        Ok(Self { lower, upper })
    }

    pub fn point(v: f64) -> Self {
        Self { lower: v, upper: v }
    }

    pub fn contains(&self, other: &BfoRange) -> bool {
        self.lower <= other.lower && other.upper <= self.upper
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AdjustedRange {
    pub recorded: f64,
    /// After warm-up drift removal; `None` when no drift applies.
    pub drift_removed: Option<BfoRange>,
    /// Final range after removing measurement noise.
    pub adjusted: BfoRange,
}

pub fn adjusted_bfo_range(
    recorded: f64,
    message: LogonMessage,
    hypothesis: Hypothesis,
    drift: Option<&DriftBounds>,
    noise: &NoiseBounds,
) -> Result<AdjustedRange> {
    if !recorded.is_finite() {
        return Err(Error::InvalidInput("recorded BFO must be finite".into()));
    }
    let drift_removed = match hypothesis {
        Hypothesis::OtherCause => None,
        Hypothesis::PowerOutage => {
            let d = drift.ok_or_else(|| Error::InvalidInput("power-outage hypothesis needs warm-up drift bounds".into()))?;
            let r = match message {
                LogonMessage::Logon => d.logon_minus_settled,
                LogonMessage::Ack => d.ack_minus_settled,
            };
            Some(BfoRange::new(recorded - r.max, recorded - r.min)?)
        }
    };
    let base = drift_removed.unwrap_or(BfoRange::point(recorded));
    let adjusted = BfoRange::new(base.lower - noise.upper, base.upper - noise.lower)?;
    Ok(AdjustedRange {
        recorded,
        drift_removed,
        adjusted,
    })
}

/// Descent rates in ft/min, positive downward.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DescentRates {
    pub min_south: f64,
    pub min_north: f64,
    pub max_south: f64,
    pub max_north: f64,
}

impl DescentRates {
    pub fn outer(&self) -> (f64, f64) {
        (self.min_south.min(self.min_north), self.max_south.max(self.max_north))
    }

    pub fn midpoint(&self) -> f64 {
        let (lo, hi) = self.outer();
        0.5 * (lo + hi)
    }

    fn map(self, f: impl Fn(f64) -> f64) -> Self {
        Self {
            min_south: f(self.min_south),
            min_north: f(self.min_north),
            max_south: f(self.max_south),
            max_north: f(self.max_north),
        }
    }
}

/// Nearest 100 ft/min, halves away from zero.
pub fn round_to_hundred(fpm: f64) -> f64 {
    (fpm / 100.0).round() * 100.0
}

pub fn descent_rate_bounds_unrounded(
    expected_south: f64,
    expected_north: f64,
    adjusted: &BfoRange,
    sensitivity_hz_per_100fpm: f64,
) -> Result<DescentRates> {
    if !(sensitivity_hz_per_100fpm.is_finite() && sensitivity_hz_per_100fpm > 0.0) {
        return Err(Error::InvalidInput("descent sensitivity must be positive".into()));
    }
    if !(expected_south.is_finite() && expected_north.is_finite()) {
        return Err(Error::InvalidInput("expected BFO must be finite".into()));
    }
    let rate = |expected: f64, bfo: f64| (expected - bfo) / sensitivity_hz_per_100fpm * 100.0;
    Ok(DescentRates {
        min_south: rate(expected_south, adjusted.upper),
        min_north: rate(expected_north, adjusted.upper),
        max_south: rate(expected_south, adjusted.lower),
        max_north: rate(expected_north, adjusted.lower),
    })
}

pub fn descent_rate_bounds(
    expected_south: f64,
    expected_north: f64,
    adjusted: &BfoRange,
    sensitivity_hz_per_100fpm: f64,
) -> Result<DescentRates> {
    descent_rate_bounds_unrounded(expected_south, expected_north, adjusted, sensitivity_hz_per_100fpm).map(|r| r.map(round_to_hundred))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DescentRow {
    pub time: UtcTime,
    pub message: LogonMessage,
    pub range: AdjustedRange,
    pub rates: DescentRates,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DescentBoundsTable {
    pub hypothesis: Option<Hypothesis>,
    pub rows: Vec<DescentRow>,
}

/// Outer envelope of two hypotheses, row by row.
pub fn combine_hypotheses(a: &DescentBoundsTable, b: &DescentBoundsTable) -> Result<DescentBoundsTable> {
    if a.rows.len() != b.rows.len() {
        return Err(Error::InvalidInput("hypothesis tables have different lengths".into()));
    }
    let rows = a
        .rows
        .iter()
        .zip(&b.rows)
        .map(|(x, y)| {
            if x.time != y.time || x.message != y.message {
                return Err(Error::InvalidInput(format!("hypothesis rows disagree: {} vs {}", x.time, y.time)));
            }
            let range = BfoRange {
                lower: x.range.adjusted.lower.min(y.range.adjusted.lower),
                upper: x.range.adjusted.upper.max(y.range.adjusted.upper),
            };
            Ok(DescentRow {
                time: x.time,
                message: x.message,
                range: AdjustedRange {
                    recorded: x.range.recorded,
                    drift_removed: None,
                    adjusted: range,
                },
                rates: DescentRates {
                    min_south: x.rates.min_south.min(y.rates.min_south),
                    min_north: x.rates.min_north.min(y.rates.min_north),
                    max_south: x.rates.max_south.max(y.rates.max_south),
                    max_north: x.rates.max_north.max(y.rates.max_north),
                },
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(DescentBoundsTable { hypothesis: None, rows })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AccelerationEstimator {
    /// Change in the midpoint of the outer bounds.
    Midpoint,
    /// Change in the lower outer bound.
    MinToMin,
    /// Change in the upper outer bound.
    MaxToMax,
}

impl FromStr for AccelerationEstimator {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "midpoint" => Ok(AccelerationEstimator::Midpoint),
            "min_to_min" | "min" => Ok(AccelerationEstimator::MinToMin),
            "max_to_max" | "max" => Ok(AccelerationEstimator::MaxToMax),
            other => Err(Error::InvalidInput(format!("unknown acceleration estimator '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Acceleration {
    pub fpm_per_s: f64,
    pub mps2: f64,
    pub g: f64,
}

impl Acceleration {
    pub fn from_fpm_per_s(fpm_per_s: f64) -> Self {
        let mps2 = fpm_per_s * FPM_TO_MPS;
        Self {
            fpm_per_s,
            mps2,
            g: mps2 / STANDARD_GRAVITY,
        }
    }
}

/// Downward acceleration implied by two descent-rate rows.
pub fn estimate_downward_acceleration(
    first: &DescentRates,
    t1: UtcTime,
    second: &DescentRates,
    t2: UtcTime,
    estimator: AccelerationEstimator,
) -> Result<Acceleration> {
    let dt = t2.seconds_since(t1);
    if dt <= 0.0 {
        return Err(Error::Degenerate("acceleration needs a positive time step"));
    }
    let pick = |r: &DescentRates| match estimator {
        AccelerationEstimator::Midpoint => r.midpoint(),
        AccelerationEstimator::MinToMin => r.outer().0,
        AccelerationEstimator::MaxToMax => r.outer().1,
    };
    Ok(Acceleration::from_fpm_per_s((pick(second) - pick(first)) / dt))
}

/// One recorded BFO from the final log-on pair.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FinalBurst {
    pub time: UtcTime,
    pub message: LogonMessage,
    pub recorded: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DescentScenario {
    pub bursts: Vec<FinalBurst>,
    pub expected_south: f64,
    pub expected_north: f64,
    pub sensitivity_hz_per_100fpm: f64,
    pub noise: NoiseBounds,
    pub drift: Option<DriftBounds>,
}

impl DescentScenario {
    pub fn table(&self, hypothesis: Hypothesis) -> Result<DescentBoundsTable> {
        if self.bursts.is_empty() {
            return Err(Error::InsufficientData("no final bursts to bound".into()));
        }
        let rows = self
            .bursts
            .iter()
            .map(|b| {
                let range = adjusted_bfo_range(b.recorded, b.message, hypothesis, self.drift.as_ref(), &self.noise)?;
                let rates = descent_rate_bounds(
                    self.expected_south,
                    self.expected_north,
                    &range.adjusted,
                    self.sensitivity_hz_per_100fpm,
                )?;
                Ok(DescentRow {
                    time: b.time,
                    message: b.message,
                    range,
                    rates,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(DescentBoundsTable {
            hypothesis: Some(hypothesis),
            rows,
        })
    }

    pub fn analyze(&self, estimator: AccelerationEstimator) -> Result<DescentAnalysis> {
        let power_outage = self.table(Hypothesis::PowerOutage)?;
        let other_cause = self.table(Hypothesis::OtherCause)?;
        let combined = combine_hypotheses(&power_outage, &other_cause)?;
        let acceleration = match combined.rows.as_slice() {
            [a, .., b] => Some(estimate_downward_acceleration(&a.rates, a.time, &b.rates, b.time, estimator)?),
            _ => None,
        };
        Ok(DescentAnalysis {
            power_outage,
            other_cause,
            combined,
            acceleration,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DescentAnalysis {
    pub power_outage: DescentBoundsTable,
    pub other_cause: DescentBoundsTable,
    pub combined: DescentBoundsTable,
    /// Between the first and last burst; `None` with a single burst.
    pub acceleration: Option<Acceleration>,
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::warmup::HzRange;
    use proptest::prelude::*;

    fn drift() -> DriftBounds {
        DriftBounds {
            logon_minus_settled: HzRange { min: 17.0, max: 136.0 },
            ack_minus_settled: HzRange { min: 17.0, max: 130.0 },
            ack_below_logon: HzRange { min: 0.0, max: 6.0 },
        }
    }

    #[test]
    fn other_cause_only_removes_noise() {
        let r = adjusted_bfo_range(
            100.0,
            LogonMessage::Ack,
            Hypothesis::OtherCause,
            None,
            &NoiseBounds::new(-5.0, 3.0).unwrap(),
        )
        .unwrap();
        assert_eq!(r.drift_removed, None);
        assert_eq!((r.adjusted.lower, r.adjusted.upper), (97.0, 105.0));
    }

    #[test]
    fn power_outage_requires_drift() {
        assert!(adjusted_bfo_range(1.0, LogonMessage::Logon, Hypothesis::PowerOutage, None, &NoiseBounds::default()).is_err());
    }

    #[test]
    fn drift_selected_by_message() {
        let n = NoiseBounds::new(0.0, 0.0).unwrap();
        let l = adjusted_bfo_range(200.0, LogonMessage::Logon, Hypothesis::PowerOutage, Some(&drift()), &n).unwrap();
        let a = adjusted_bfo_range(200.0, LogonMessage::Ack, Hypothesis::PowerOutage, Some(&drift()), &n).unwrap();
        assert_eq!((l.adjusted.lower, l.adjusted.upper), (64.0, 183.0));
        assert_eq!((a.adjusted.lower, a.adjusted.upper), (70.0, 183.0));
    }

    #[test]
    fn rounding_goes_half_away() {
        assert_eq!(round_to_hundred(150.0), 200.0);
        assert_eq!(round_to_hundred(-150.0), -200.0);
        assert_eq!(round_to_hundred(149.9), 100.0);
        assert_eq!(round_to_hundred(3941.2), 3900.0);
    }

    #[test]
    fn rates_scale_inversely_with_sensitivity() {
        let r = BfoRange::new(10.0, 20.0).unwrap();
        let a = descent_rate_bounds_unrounded(30.0, 40.0, &r, 2.0).unwrap();
        assert_eq!(
            (a.min_south, a.max_south, a.min_north, a.max_north),
            (500.0, 1000.0, 1000.0, 1500.0)
        );
        assert!(descent_rate_bounds(30.0, 40.0, &r, 0.0).is_err());
    }

    #[test]
    fn combine_rejects_mismatched_rows() {
        let s = DescentScenario {
            bursts: vec![FinalBurst {
                time: UtcTime::from_seconds(0.0),
                message: LogonMessage::Logon,
                recorded: 100.0,
            }],
            expected_south: 200.0,
            expected_north: 210.0,
            sensitivity_hz_per_100fpm: 1.7,
            noise: NoiseBounds::default(),
            drift: Some(drift()),
        };
        let a = s.table(Hypothesis::PowerOutage).unwrap();
        let mut b = s.table(Hypothesis::OtherCause).unwrap();
        b.rows[0].time = UtcTime::from_seconds(1.0);
        assert!(combine_hypotheses(&a, &b).is_err());
        b.rows.clear();
        assert!(combine_hypotheses(&a, &b).is_err());
    }

    #[test]
    fn acceleration_unit_chain() {
        let a = Acceleration::from_fpm_per_s(1000.0);
        assert!((a.mps2 - 5.08).abs() < 1e-12);
        assert!((a.g - 5.08 / 9.8).abs() < 1e-12);
    }

    #[test]
    fn acceleration_needs_forward_time() {
        let r = DescentRates {
            min_south: 0.0,
            min_north: 0.0,
            max_south: 0.0,
            max_north: 0.0,
        };
        let t = UtcTime::from_seconds(10.0);
        assert!(estimate_downward_acceleration(&r, t, &r, t, AccelerationEstimator::Midpoint).is_err());
    }

    proptest! {
        #[test]
        fn wider_inputs_never_narrow_bounds(
            recorded in -100.0f64..300.0,
            lo in -40.0f64..0.0, hi in 0.0f64..40.0, widen_lo in 0.0f64..20.0, widen_hi in 0.0f64..20.0,
            dmin in 0.0f64..50.0, dspan in 0.0f64..100.0, dwiden in 0.0f64..30.0,
            sens in 0.5f64..3.0,
        ) {
            let n1 = NoiseBounds::new(lo, hi).unwrap();
            let n2 = NoiseBounds::new(lo - widen_lo, hi + widen_hi).unwrap();
            let mk = |a: f64, b: f64| DriftBounds {
                logon_minus_settled: HzRange { min: a, max: b },
                ack_minus_settled: HzRange { min: a, max: b },
                ack_below_logon: HzRange { min: 0.0, max: 0.0 },
            };
            let d1 = mk(dmin, dmin + dspan);
            let d2 = mk(dmin - dwiden, dmin + dspan + dwiden);
            for h in Hypothesis::ALL {
                let r1 = adjusted_bfo_range(recorded, LogonMessage::Logon, h, Some(&d1), &n1).unwrap();
                let r2 = adjusted_bfo_range(recorded, LogonMessage::Logon, h, Some(&d2), &n2).unwrap();
                prop_assert!(r2.adjusted.contains(&r1.adjusted));
                let b1 = descent_rate_bounds(250.0, 270.0, &r1.adjusted, sens).unwrap();
                let b2 = descent_rate_bounds(250.0, 270.0, &r2.adjusted, sens).unwrap();
                prop_assert!(b2.min_south <= b1.min_south && b2.max_south >= b1.max_south);
                prop_assert!(b2.min_north <= b1.min_north && b2.max_north >= b1.max_north);
            }
        }

        #[test]
        fn power_outage_range_contains_other_cause_when_drift_spans_zero(recorded in -100.0f64..300.0, a in -50.0f64..0.0, b in 0.0f64..50.0) {
            let d = DriftBounds {
                logon_minus_settled: HzRange { min: a, max: b },
                ack_minus_settled: HzRange { min: a, max: b },
                ack_below_logon: HzRange { min: 0.0, max: 0.0 },
            };
            let n = NoiseBounds::default();
            let h1 = adjusted_bfo_range(recorded, LogonMessage::Ack, Hypothesis::PowerOutage, Some(&d), &n).unwrap();
            let h2 = adjusted_bfo_range(recorded, LogonMessage::Ack, Hypothesis::OtherCause, Some(&d), &n).unwrap();
            prop_assert!(h1.adjusted.contains(&h2.adjusted));
        }

        #[test]
        fn combined_is_outer_envelope(rec1 in 0.0f64..300.0, rec2 in -100.0f64..100.0) {
            let s = DescentScenario {
                bursts: vec![
                    FinalBurst { time: UtcTime::from_seconds(0.0), message: LogonMessage::Logon, recorded: rec1 },
                    FinalBurst { time: UtcTime::from_seconds(8.0), message: LogonMessage::Ack, recorded: rec2 },
                ],
                expected_south: 260.0,
                expected_north: 280.0,
                sensitivity_hz_per_100fpm: 1.7,
                noise: NoiseBounds::default(),
                drift: Some(drift()),
            };
            let an = s.analyze(AccelerationEstimator::Midpoint).unwrap();
            for ((c, p), o) in an.combined.rows.iter().zip(&an.power_outage.rows).zip(&an.other_cause.rows) {
                let (lo, hi) = c.rates.outer();
                for r in [p.rates, o.rates] {
                    let (a, b) = r.outer();
                    prop_assert!(lo <= a && b <= hi);
                }
            }
        }
    }
}
