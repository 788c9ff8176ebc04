//! Relay-satellite state and the tabulated ground-segment frequency terms.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geodesy::EcefVector;
use crate::time::UtcTime;

/// Geostationary orbital radius, meters.
pub const GEOSTATIONARY_RADIUS: f64 = 42_164_169.0;

/// Allowed deviation of ephemeris positions from the geostationary radius.
pub const GEO_SHELL_TOLERANCE: f64 = 500_000.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SatelliteState {
    pub position: EcefVector,
    pub velocity: EcefVector,
}

/// Anything that can report the relay satellite's state at a given instant.
pub trait SatelliteSource {
    fn state_at(&self, t: UtcTime) -> Result<SatelliteState>;
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EphemerisRow {
    pub time: UtcTime,
    pub position: EcefVector,
    pub velocity: EcefVector,
}

/// Time-ordered satellite states, interpolated with cubic Hermite splines
/// that use the tabulated velocities as derivatives.
#[derive(Debug, Clone, PartialEq)]
pub struct EphemerisTable {
    rows: Vec<EphemerisRow>,
}

impl EphemerisTable {
    pub fn new(rows: Vec<EphemerisRow>) -> Result<Self> {
        if rows.len() < 2 {
            return Err(Error::InsufficientData(format!(
                "ephemeris needs at least 2 rows, got {}",
                rows.len()
            )));
        }
        ensure_increasing(rows.iter().map(|r| r.time), "ephemeris")?;
        for row in &rows {
            if !row.position.is_finite() || !row.velocity.is_finite() {
                return Err(Error::InvalidInput(format!("non-finite ephemeris state at {}", row.time)));
            }
            let r = row.position.norm();
            if (r - GEOSTATIONARY_RADIUS).abs() > GEO_SHELL_TOLERANCE {
                return Err(Error::InvalidInput(format!(
                    "ephemeris radius {:.0} m at {} is outside the geosynchronous shell",
                    r, row.time
                )));
            }
        }
        Ok(Self { rows })
    }

    pub fn rows(&self) -> &[EphemerisRow] {
        &self.rows
    }

    pub fn span(&self) -> (UtcTime, UtcTime) {
        (self.rows[0].time, self.rows[self.rows.len() - 1].time)
    }

    pub fn satellite_state_at(&self, t: UtcTime) -> Result<SatelliteState> {
        let i = bracket(&self.rows, t, |r| r.time, self.span())?;
        let a = &self.rows[i];
        if a.time == t {
            return Ok(SatelliteState {
                position: a.position,
                velocity: a.velocity,
            });
        }
        let b = &self.rows[i + 1];
        if b.time == t {
            return Ok(SatelliteState {
                position: b.position,
                velocity: b.velocity,
            });
        }
        let h = b.time.seconds_since(a.time);
        let s = t.seconds_since(a.time) / h;
        let (s2, s3) = (s * s, s * s * s);

        let h00 = 2.0 * s3 - 3.0 * s2 + 1.0;
        let h10 = s3 - 2.0 * s2 + s;
        let h01 = -2.0 * s3 + 3.0 * s2;
        let h11 = s3 - s2;
        let position = a.position * h00 + a.velocity * (h10 * h) + b.position * h01 + b.velocity * (h11 * h);

        let d00 = 6.0 * s2 - 6.0 * s;
        let d10 = 3.0 * s2 - 4.0 * s + 1.0;
        let d01 = -d00;
        let d11 = 3.0 * s2 - 2.0 * s;
        let velocity = (a.position * d00 + b.position * d01) * (1.0 / h) + a.velocity * d10 + b.velocity * d11;

        Ok(SatelliteState { position, velocity })
    }
}

impl SatelliteSource for EphemerisTable {
    fn state_at(&self, t: UtcTime) -> Result<SatelliteState> {
        self.satellite_state_at(t)
    }
}

/// Satellite held at a fixed ECEF state; handy for controlled geometry.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FixedSatellite(pub SatelliteState);

impl SatelliteSource for FixedSatellite {
    fn state_at(&self, _t: UtcTime) -> Result<SatelliteState> {
        Ok(self.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CorrectionRow {
    pub time: UtcTime,
    /// Satellite translation-frequency variation plus ground AFC, Hz.
    pub delta_f: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CorrectionTable {
    rows: Vec<CorrectionRow>,
}

impl CorrectionTable {
    pub fn new(rows: Vec<CorrectionRow>) -> Result<Self> {
        if rows.is_empty() {
            return Err(Error::InsufficientData("empty correction table".into()));
        }
        ensure_increasing(rows.iter().map(|r| r.time), "correction table")?;
        if let Some(r) = rows.iter().find(|r| !r.delta_f.is_finite()) {
            return Err(Error::InvalidInput(format!("non-finite correction at {}", r.time)));
        }
        Ok(Self { rows })
    }

    /// All-zero corrections over `[start, end]`.
    pub fn zero_over(start: UtcTime, end: UtcTime) -> Self {
        let mut rows = vec![CorrectionRow { time: start, delta_f: 0.0 }];
        if end > start {
            rows.push(CorrectionRow { time: end, delta_f: 0.0 });
        }
        Self { rows }
    }

    pub fn rows(&self) -> &[CorrectionRow] {
        &self.rows
    }

    pub fn span(&self) -> (UtcTime, UtcTime) {
        (self.rows[0].time, self.rows[self.rows.len() - 1].time)
    }

    /// Linear interpolation of the deterministic correction term.
    pub fn deterministic_correction_at(&self, t: UtcTime) -> Result<f64> {
        if self.rows.len() == 1 {
            return if t == self.rows[0].time {
                Ok(self.rows[0].delta_f)
            } else {
                Err(Error::OutOfRange {
                    t,
                    start: self.rows[0].time,
                    end: self.rows[0].time,
                })
            };
        }
        let i = bracket(&self.rows, t, |r| r.time, self.span())?;
        let (a, b) = (&self.rows[i], &self.rows[i + 1]);
        if t == a.time {
            return Ok(a.delta_f);
        }
        if t == b.time {
            return Ok(b.delta_f);
        }
        let w = t.seconds_since(a.time) / b.time.seconds_since(a.time);
        Ok(a.delta_f + w * (b.delta_f - a.delta_f))
    }
}

/// The satellite position assumed by the aircraft terminal's Doppler
/// pre-compensation: on the equator at a fixed longitude.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NominalSlot {
    pub longitude: f64,
    #[serde(default = "default_radius")]
    pub radius: f64,
}

fn default_radius() -> f64 {
    GEOSTATIONARY_RADIUS
}

impl Default for NominalSlot {
    fn default() -> Self {
        Self {
            longitude: 64.5,
            radius: GEOSTATIONARY_RADIUS,
        }
    }
}

impl NominalSlot {
    pub fn at_longitude(longitude: f64) -> Self {
        Self {
            longitude,
            radius: GEOSTATIONARY_RADIUS,
        }
    }
}

pub fn nominal_satellite_position(slot: &NominalSlot) -> EcefVector {
    let (s, c) = slot.longitude.to_radians().sin_cos();
    EcefVector::new(slot.radius * c, slot.radius * s, 0.0)
}

fn ensure_increasing(mut times: impl Iterator<Item = UtcTime>, what: &str) -> Result<()> {
    let Some(mut prev) = times.next() else {
        return Ok(());
    };
    for t in times {
        if t <= prev {
            return Err(Error::InvalidInput(format!("{what} timestamps not strictly increasing at {t}")));
        }
        prev = t;
    }
    Ok(())
}

/// Index `i` such that `rows[i].time <= t <= rows[i + 1].time`.
fn bracket<R>(rows: &[R], t: UtcTime, time_of: impl Fn(&R) -> UtcTime, span: (UtcTime, UtcTime)) -> Result<usize> {
    if t < span.0 || t > span.1 {
        return Err(Error::OutOfRange {
            t,
            start: span.0,
            end: span.1,
        });
    }
    let upper = rows.partition_point(|r| time_of(r) <= t);
    Ok(upper.saturating_sub(1).min(rows.len() - 2))
}
