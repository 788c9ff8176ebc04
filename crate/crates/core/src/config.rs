//! Analysis configuration loaded from TOML.
//!
//! Relative file paths resolve against the directory holding the config
//! file. Times may be full ISO-8601 Zulu timestamps or bare times of day,
//! which are placed on or after `time_anchor`.

use std::path::{Path, PathBuf};

use serde::Deserialize;

use crate::bfo_model::{ChannelConfig, DEFAULT_DOWNLINK_HZ, DEFAULT_UPLINK_HZ, SPEED_OF_LIGHT};
use crate::descent::{FinalBurst, LogonMessage, DEFAULT_SENSITIVITY_HZ_PER_100FPM};
use crate::error::{Error, Result};
use crate::geodesy::GeodeticPosition;
use crate::satellite::{NominalSlot, GEOSTATIONARY_RADIUS};
use crate::stats::{NoiseBounds, OutlierRule};
use crate::time::UtcTime;

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    time_anchor: String,
    #[serde(default)]
    files: RawFiles,
    #[serde(default)]
    channel: RawChannel,
    #[serde(default)]
    slot: RawSlot,
    #[serde(default)]
    bias_hz: Option<f64>,
    #[serde(default)]
    noise: Option<RawRange>,
    #[serde(default)]
    outliers: Option<RawOutliers>,
    trend: Option<RawTrend>,
    sweep: Option<RawSweep>,
    descent: Option<RawDescent>,
    calibration: Option<RawCalibration>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawFiles {
    logs: Option<PathBuf>,
    ephemeris: Option<PathBuf>,
    corrections: Option<PathBuf>,
    logon_sequences: Option<PathBuf>,
    logon_meta: Option<PathBuf>,
    error_sample: Option<PathBuf>,
    events: Option<PathBuf>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawChannel {
    #[serde(default = "default_uplink")]
    uplink_hz: f64,
    #[serde(default = "default_downlink")]
    downlink_hz: f64,
    #[serde(default = "default_c")]
    speed_of_light: f64,
    #[serde(default)]
    ges: Option<RawPosition>,
}

fn default_uplink() -> f64 {
    DEFAULT_UPLINK_HZ
}
fn default_downlink() -> f64 {
    DEFAULT_DOWNLINK_HZ
}
fn default_c() -> f64 {
    SPEED_OF_LIGHT
}

impl Default for RawChannel {
    fn default() -> Self {
        Self {
            uplink_hz: DEFAULT_UPLINK_HZ,
            downlink_hz: DEFAULT_DOWNLINK_HZ,
            speed_of_light: SPEED_OF_LIGHT,
            ges: None,
        }
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSlot {
    longitude: f64,
    #[serde(default = "default_radius")]
    radius: f64,
}

fn default_radius() -> f64 {
    GEOSTATIONARY_RADIUS
}

impl Default for RawSlot {
    fn default() -> Self {
        let s = NominalSlot::default();
        Self {
            longitude: s.longitude,
            radius: s.radius,
        }
    }
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawPosition {
    latitude: f64,
    longitude: f64,
    #[serde(default)]
    altitude: f64,
}

impl RawPosition {
    fn resolve(self, what: &str) -> Result<GeodeticPosition> {
        GeodeticPosition::new(self.latitude, self.longitude, self.altitude).map_err(|e| Error::Config(format!("{what}: {e}")))
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawRange {
    lower: f64,
    upper: f64,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawOutliers {
    cn0_drop_db: f64,
    window: usize,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawTrend {
    start: String,
    end: String,
    #[serde(default)]
    extrapolate: Vec<String>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSweep {
    time: String,
    crossing: RawPosition,
    measured_bfo_hz: f64,
    #[serde(default = "default_speeds")]
    speeds_kts: Vec<f64>,
    #[serde(default = "default_step")]
    step_deg: f64,
    #[serde(default = "default_reference_speed")]
    reference_speed_kts: f64,
}

fn default_speeds() -> Vec<f64> {
    vec![450.0, 500.0]
}
fn default_step() -> f64 {
    1.0
}
fn default_reference_speed() -> f64 {
    450.0
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawDescent {
    expected_south_hz: f64,
    expected_north_hz: f64,
    #[serde(default = "default_sensitivity")]
    sensitivity_hz_per_100fpm: f64,
    #[serde(default)]
    geometric_sensitivity: bool,
    crossing: Option<RawPosition>,
    #[serde(default)]
    drift: Option<RawDrift>,
    bursts: Vec<RawBurst>,
}

fn default_sensitivity() -> f64 {
    DEFAULT_SENSITIVITY_HZ_PER_100FPM
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawDrift {
    logon_minus_settled: [f64; 2],
    ack_minus_settled: [f64; 2],
    ack_below_logon: [f64; 2],
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawBurst {
    time: String,
    message: String,
    recorded_hz: f64,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawCalibration {
    start: String,
    end: String,
    position: RawPosition,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct InputFiles {
    pub logs: Option<PathBuf>,
    pub ephemeris: Option<PathBuf>,
    pub corrections: Option<PathBuf>,
    pub logon_sequences: Option<PathBuf>,
    pub logon_meta: Option<PathBuf>,
    pub error_sample: Option<PathBuf>,
    pub events: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrendSettings {
    pub window: (UtcTime, UtcTime),
    pub extrapolate: Vec<UtcTime>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepSettings {
    pub time: UtcTime,
    pub crossing: GeodeticPosition,
    pub measured_bfo: f64,
    pub speeds_kts: Vec<f64>,
    pub step_deg: f64,
    /// Ground speed whose curve supplies the track offsets.
    pub reference_speed_kts: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DescentSettings {
    pub expected_south: f64,
    pub expected_north: f64,
    pub sensitivity_hz_per_100fpm: f64,
    /// Derive the sensitivity from the elevation at `crossing` instead.
    pub geometric_sensitivity: bool,
    pub crossing: Option<GeodeticPosition>,
    /// Fixed drift bounds; when absent they come from the log-on sequences.
    pub drift: Option<crate::warmup::DriftBounds>,
    pub bursts: Vec<FinalBurst>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CalibrationSettings {
    pub window: (UtcTime, UtcTime),
    pub position: GeodeticPosition,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AnalysisConfig {
    pub time_anchor: UtcTime,
    pub files: InputFiles,
    pub channel: ChannelConfig,
    pub slot: NominalSlot,
    pub bias: f64,
    pub noise: NoiseBounds,
    pub outliers: OutlierRule,
    pub trend: Option<TrendSettings>,
    pub sweep: Option<SweepSettings>,
    pub descent: Option<DescentSettings>,
    pub calibration: Option<CalibrationSettings>,
}

impl AnalysisConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })?;
        let base = path.parent().unwrap_or_else(|| Path::new("."));
        Self::from_toml(&text, base)
    }

    pub fn from_toml(text: &str, base_dir: &Path) -> Result<Self> {
        let raw: RawConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        let anchor: UtcTime = raw.time_anchor.parse().map_err(|e| Error::Config(format!("time_anchor: {e}")))?;
        let time = |s: &str, what: &str| UtcTime::parse_with_anchor(s, anchor).map_err(|e| Error::Config(format!("{what}: {e}")));
        let window = |a: &str, b: &str, what: &str| -> Result<(UtcTime, UtcTime)> {
            let (a, b) = (time(a, what)?, time(b, what)?);
            if b < a {
                return Err(Error::Config(format!("{what}: window ends before it starts")));
            }
            Ok((a, b))
        };
        let file = |p: Option<PathBuf>, what: &str| -> Result<Option<PathBuf>> {
            let Some(p) = p else { return Ok(None) };
            let p = if p.is_absolute() { p } else { base_dir.join(p) };
            if !p.is_file() {
                return Err(Error::Config(format!("{what} file {} does not exist", p.display())));
            }
            Ok(Some(p))
        };

        let files = InputFiles {
            logs: file(raw.files.logs, "logs")?,
            ephemeris: file(raw.files.ephemeris, "ephemeris")?,
            corrections: file(raw.files.corrections, "corrections")?,
            logon_sequences: file(raw.files.logon_sequences, "logon_sequences")?,
            logon_meta: file(raw.files.logon_meta, "logon_meta")?,
            error_sample: file(raw.files.error_sample, "error_sample")?,
            events: file(raw.files.events, "events")?,
        };

        let mut channel = ChannelConfig {
            uplink_frequency: raw.channel.uplink_hz,
            downlink_frequency: raw.channel.downlink_hz,
            speed_of_light: raw.channel.speed_of_light,
            ..ChannelConfig::default()
        };
        if let Some(ges) = raw.channel.ges {
            channel.ges_position = ges.resolve("channel.ges")?;
        }
        channel.validate().map_err(|e| Error::Config(e.to_string()))?;

        if !(raw.slot.radius.is_finite() && raw.slot.radius > 0.0 && raw.slot.longitude.is_finite()) {
            return Err(Error::Config("slot: longitude and positive radius required".into()));
        }
        let slot = NominalSlot {
            longitude: raw.slot.longitude,
            radius: raw.slot.radius,
        };

        let noise = match raw.noise {
            Some(r) => NoiseBounds::new(r.lower, r.upper).map_err(|e| Error::Config(format!("noise: {e}")))?,
            None => NoiseBounds::default(),
        };
        let outliers = match raw.outliers {
            Some(o) if o.window > 0 && o.cn0_drop_db.is_finite() => OutlierRule {
                cn0_drop_threshold: o.cn0_drop_db,
                window: o.window,
            },
            Some(_) => return Err(Error::Config("outliers: window must be positive".into())),
            None => OutlierRule::default(),
        };
        let bias = raw.bias_hz.unwrap_or(0.0);
        if !bias.is_finite() {
            return Err(Error::Config("bias_hz must be finite".into()));
        }

        let trend = raw
            .trend
            .map(|t| -> Result<TrendSettings> {
                Ok(TrendSettings {
                    window: window(&t.start, &t.end, "trend")?,
                    extrapolate: t.extrapolate.iter().map(|s| time(s, "trend.extrapolate")).collect::<Result<_>>()?,
                })
            })
            .transpose()?;

        let sweep = raw
            .sweep
            .map(|s| -> Result<SweepSettings> {
                let speed_ok = |v: f64| v.is_finite() && v >= 0.0;
                if s.step_deg.is_nan()
                    || s.step_deg <= 0.0
                    || !s.speeds_kts.iter().all(|&v| speed_ok(v))
                    || !speed_ok(s.reference_speed_kts)
                {
                    return Err(Error::Config("sweep: step and speeds must be positive".into()));
                }
                Ok(SweepSettings {
                    time: time(&s.time, "sweep.time")?,
                    crossing: s.crossing.resolve("sweep.crossing")?,
                    measured_bfo: s.measured_bfo_hz,
                    speeds_kts: s.speeds_kts,
                    step_deg: s.step_deg,
                    reference_speed_kts: s.reference_speed_kts,
                })
            })
            .transpose()?;

        let descent = raw
            .descent
            .map(|d| -> Result<DescentSettings> {
                if !d.sensitivity_hz_per_100fpm.is_finite() || d.sensitivity_hz_per_100fpm <= 0.0 {
                    return Err(Error::Config("descent: sensitivity must be positive".into()));
                }
                if d.geometric_sensitivity && d.crossing.is_none() {
                    return Err(Error::Config("descent: geometric sensitivity needs a crossing point".into()));
                }
                let drift = d
                    .drift
                    .map(|r| -> Result<crate::warmup::DriftBounds> {
                        let hz = |v: [f64; 2], what: &str| {
                            crate::warmup::HzRange::new(v[0], v[1]).map_err(|e| Error::Config(format!("descent.drift.{what}: {e}")))
                        };
                        Ok(crate::warmup::DriftBounds {
                            logon_minus_settled: hz(r.logon_minus_settled, "logon_minus_settled")?,
                            ack_minus_settled: hz(r.ack_minus_settled, "ack_minus_settled")?,
                            ack_below_logon: hz(r.ack_below_logon, "ack_below_logon")?,
                        })
                    })
                    .transpose()?;
                let bursts = d
                    .bursts
                    .iter()
                    .map(|b| {
                        Ok(FinalBurst {
                            time: time(&b.time, "descent.bursts")?,
                            message: b.message.parse::<LogonMessage>().map_err(|e| Error::Config(e.to_string()))?,
                            recorded: b.recorded_hz,
                        })
                    })
                    .collect::<Result<Vec<_>>>()?;
                Ok(DescentSettings {
                    expected_south: d.expected_south_hz,
                    expected_north: d.expected_north_hz,
                    sensitivity_hz_per_100fpm: d.sensitivity_hz_per_100fpm,
                    geometric_sensitivity: d.geometric_sensitivity,
                    crossing: d.crossing.map(|c| c.resolve("descent.crossing")).transpose()?,
                    drift,
                    bursts,
                })
            })
            .transpose()?;

        let calibration = raw
            .calibration
            .map(|c| -> Result<CalibrationSettings> {
                Ok(CalibrationSettings {
                    window: window(&c.start, &c.end, "calibration")?,
                    position: c.position.resolve("calibration.position")?,
                })
            })
            .transpose()?;

        Ok(Self {
            time_anchor: anchor,
            files,
            channel,
            slot,
            bias,
            noise,
            outliers,
            trend,
            sweep,
            descent,
            calibration,
        })
    }

    /// Resolves a CLI time argument against this configuration's anchor.
    pub fn parse_time(&self, s: &str) -> Result<UtcTime> {
        UtcTime::parse_with_anchor(s, self.time_anchor)
    }

    pub fn require<'a>(path: &'a Option<PathBuf>, what: &str) -> Result<&'a Path> {
        path.as_deref()
            .ok_or_else(|| Error::Config(format!("configuration does not name a {what} file")))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"
time_anchor = "2014-03-07T12:00:00Z"
bias_hz = 150.0

[trend]
start = "19:41"
end = "00:11"
extrapolate = ["00:19:29Z"]

[descent]
expected_south_hz = 260.0
expected_north_hz = 280.0

[[descent.bursts]]
time = "00:19:29"
message = "logon"
recorded_hz = 182.0
"#;

    #[test]
    fn times_roll_past_midnight() {
        let c = AnalysisConfig::from_toml(MINIMAL, Path::new(".")).unwrap();
        let t = c.trend.unwrap();
        assert_eq!(t.window.0.to_string(), "2014-03-07T19:41:00Z");
        assert_eq!(t.window.1.to_string(), "2014-03-08T00:11:00Z");
        assert_eq!(t.extrapolate[0].to_string(), "2014-03-08T00:19:29Z");
        let d = c.descent.unwrap();
        assert_eq!(d.sensitivity_hz_per_100fpm, 1.7);
        assert_eq!(d.bursts[0].message, LogonMessage::Logon);
        assert_eq!(c.noise, NoiseBounds::default());
    }

    #[test]
    fn missing_file_is_config_error() {
        let text = format!("{MINIMAL}\n[files]\nlogs = \"nope.csv\"\n");
        assert!(matches!(
            AnalysisConfig::from_toml(&text, Path::new("/nonexistent")),
            Err(Error::Config(_))
        ));
    }

    #[test]
    fn reversed_noise_rejected() {
        let text = format!("{MINIMAL}\n[noise]\nlower = 5.0\nupper = -5.0\n");
        assert!(matches!(AnalysisConfig::from_toml(&text, Path::new(".")), Err(Error::Config(_))));
    }

    #[test]
    fn unknown_keys_rejected() {
        let text = format!("{MINIMAL}\nbogus = 1\n");
        assert!(AnalysisConfig::from_toml(&text, Path::new(".")).is_err());
    }
}
