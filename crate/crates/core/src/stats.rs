//! Burst measurements, BFO error statistics and quality-based outlier flags.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::time::UtcTime;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ChannelType {
    R,
    T,
    C,
    P,
}

impl FromStr for ChannelType {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "R" => Ok(ChannelType::R),
            "T" => Ok(ChannelType::T),
            "C" => Ok(ChannelType::C),
            "P" => Ok(ChannelType::P),
            other => Err(Error::InvalidInput(format!("unknown channel type '{other}'"))),
        }
    }
}

impl fmt::Display for ChannelType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            ChannelType::R => "R",
            ChannelType::T => "T",
            ChannelType::C => "C",
            ChannelType::P => "P",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MessageType {
    LogonRequest,
    LogonAck,
    Data,
    Phone,
    Interrogation,
    Other,
}

impl FromStr for MessageType {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "logon_request" => Ok(MessageType::LogonRequest),
            "logon_ack" => Ok(MessageType::LogonAck),
            "data" => Ok(MessageType::Data),
            "phone" => Ok(MessageType::Phone),
            "interrogation" => Ok(MessageType::Interrogation),
            "other" => Ok(MessageType::Other),
            other => Err(Error::InvalidInput(format!("unknown message type '{other}'"))),
        }
    }
}

impl fmt::Display for MessageType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            MessageType::LogonRequest => "logon_request",
            MessageType::LogonAck => "logon_ack",
            MessageType::Data => "data",
            MessageType::Phone => "phone",
            MessageType::Interrogation => "interrogation",
            MessageType::Other => "other",
        };
        f.write_str(s)
    }
}

/// One logged burst as recorded by the ground station.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BfoMeasurement {
    pub time: UtcTime,
    pub channel: ChannelType,
    pub message_type: MessageType,
    /// Burst frequency offset, Hz.
    pub bfo: f64,
    /// Burst timing offset, microseconds.
    pub bto: Option<f64>,
    /// Bit error count or rate.
    pub ber: f64,
    /// Carrier-to-noise density, dBHz.
    pub cn0: f64,
    /// Received signal level, dB.
    pub signal_level: Option<f64>,
}

impl BfoMeasurement {
    pub fn new(time: UtcTime, channel: ChannelType, message_type: MessageType, bfo: f64, ber: f64, cn0: f64) -> Result<Self> {
        let m = Self {
            time,
            channel,
            message_type,
            bfo,
            bto: None,
            ber,
            cn0,
            signal_level: None,
        };
        m.validate()?;
        Ok(m)
    }

    pub fn validate(&self) -> Result<()> {
        if !self.bfo.is_finite() {
            return Err(Error::InvalidInput(format!("non-finite BFO at {}", self.time)));
        }
        if !(self.ber.is_finite() && self.ber >= 0.0) {
            return Err(Error::InvalidInput(format!("BER must be finite and >= 0 at {}", self.time)));
        }
        if !self.cn0.is_finite() {
            return Err(Error::InvalidInput(format!("non-finite C/N0 at {}", self.time)));
        }
        Ok(())
    }
}

/// BFO error, i.e. predicted minus measured.
pub fn bfo_error(predicted: f64, measured: f64) -> f64 {
    predicted - measured
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ErrorStats {
    pub mean: f64,
    /// Sample standard deviation (n - 1 denominator).
    pub std: f64,
    pub min: f64,
    pub max: f64,
    pub count: usize,
}

pub fn compute_error_stats(errors: &[f64]) -> Result<ErrorStats> {
    if errors.len() < 2 {
        return Err(Error::InsufficientData(format!(
            "error statistics need at least 2 samples, got {}",
            errors.len()
        )));
    }
    if errors.iter().any(|e| !e.is_finite()) {
        return Err(Error::InvalidInput("non-finite BFO error".into()));
    }
    let n = errors.len() as f64;
    let mean = errors.iter().sum::<f64>() / n;
    let ss: f64 = errors.iter().map(|e| (e - mean).powi(2)).sum();
    let (min, max) = errors
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &e| (lo.min(e), hi.max(e)));
    Ok(ErrorStats {
        // keep the ordering invariant under rounding
        mean: mean.clamp(min, max),
        std: (ss / (n - 1.0)).sqrt(),
        min,
        max,
        count: errors.len(),
    })
}

/// Strict interval assumed to contain every BFO error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseBounds {
    pub lower: f64,
    pub upper: f64,
}

impl NoiseBounds {
    pub fn new(lower: f64, upper: f64) -> Result<Self> {
        if !(lower.is_finite() && upper.is_finite()) || lower > upper {
            return Err(Error::InvalidInput(format!(
                "noise bounds [{lower}, {upper}] are not a valid interval"
            )));
        }
        Ok(Self { lower, upper })
    }

    /// The observed extremes of a reference error sample.
    pub fn from_extremes(stats: &ErrorStats) -> Self {
        Self {
            lower: stats.min,
            upper: stats.max,
        }
    }

    /// `mean ± k·std`.
    pub fn from_sigma(stats: &ErrorStats, k: f64) -> Self {
        Self {
            lower: stats.mean - k * stats.std,
            upper: stats.mean + k * stats.std,
        }
    }
}

impl Default for NoiseBounds {
    fn default() -> Self {
        Self { lower: -28.0, upper: 18.0 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct HistogramBin {
    pub lower: f64,
    pub upper: f64,
    pub count: usize,
    /// Expected count under a normal distribution with the sample's moments.
    pub gaussian_count: f64,
}

/// Fixed-width histogram aligned on multiples of `bin_width`, paired with
/// the fitted Gaussian's expected count per bin.
pub fn histogram(errors: &[f64], bin_width: f64) -> Result<Vec<HistogramBin>> {
    if !(bin_width.is_finite() && bin_width > 0.0) {
        return Err(Error::InvalidInput(format!("bad bin width {bin_width}")));
    }
    let stats = compute_error_stats(errors)?;
    let first = (stats.min / bin_width).floor() as i64;
    let last = (stats.max / bin_width).floor() as i64;
    let mut counts = vec![0usize; (last - first + 1) as usize];
    for e in errors {
        counts[((e / bin_width).floor() as i64 - first) as usize] += 1;
    }
    let n = errors.len() as f64;
    Ok(counts
        .into_iter()
        .enumerate()
        .map(|(i, count)| {
            let lower = (first + i as i64) as f64 * bin_width;
            let upper = lower + bin_width;
            let p = normal_cdf((upper - stats.mean) / stats.std) - normal_cdf((lower - stats.mean) / stats.std);
            HistogramBin {
                lower,
                upper,
                count,
                gaussian_count: n * p,
            }
        })
        .collect())
}

fn normal_cdf(z: f64) -> f64 {
    if z.is_nan() {
        return 0.5;
    }
    0.5 * erfc(-z / std::f64::consts::SQRT_2)
}

// Numerical Recipes erfc (Chebyshev fit, |rel err| < 1.2e-7).
fn erfc(x: f64) -> f64 {
    let z = x.abs();
    let t = 1.0 / (1.0 + 0.5 * z);
    let poly = -z * z - 1.265_512_23
        + t * (1.000_023_68
            + t * (0.374_091_96
                + t * (0.096_784_18
                    + t * (-0.186_288_06
                        + t * (0.278_868_07 + t * (-1.135_203_98 + t * (1.488_515_87 + t * (-0.822_152_23 + t * 0.170_872_77))))))));
    let r = t * poly.exp();
    if x >= 0.0 {
        r
    } else {
        2.0 - r
    }
}

/// Rule for discarding bursts whose frequency measurement is untrustworthy.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OutlierRule {
    /// Minimum drop below the neighbourhood median C/N0, dB.
    pub cn0_drop_threshold: f64,
    /// Number of neighbouring bursts forming the neighbourhood.
    pub window: usize,
}

impl Default for OutlierRule {
    fn default() -> Self {
        Self {
            cn0_drop_threshold: 3.0,
            window: 5,
        }
    }
}

/// A burst is flagged iff its BER is non-zero and its C/N0 sits at least
/// `cn0_drop_threshold` below the median C/N0 of its `window` nearest
/// neighbours (by position in the sequence).
pub fn flag_outliers(measurements: &[BfoMeasurement], rule: &OutlierRule) -> Vec<bool> {
    (0..measurements.len())
        .map(|i| {
            let m = &measurements[i];
            if m.ber <= 0.0 {
                return false;
            }
            let neighbours = nearest_neighbours(measurements.len(), i, rule.window);
            if neighbours.is_empty() {
                return false;
            }
            let mut cn0: Vec<f64> = neighbours.iter().map(|&j| measurements[j].cn0).collect();
            let median = median(&mut cn0);
            median - m.cn0 >= rule.cn0_drop_threshold
        })
        .collect()
}

fn nearest_neighbours(len: usize, i: usize, window: usize) -> Vec<usize> {
    let mut out = Vec::with_capacity(window);
    let mut d = 1;
    while out.len() < window && (d <= i || i + d < len) {
        if d <= i {
            out.push(i - d);
        }
        if out.len() < window && i + d < len {
            out.push(i + d);
        }
        d += 1;
    }
    out
}

fn median(values: &mut [f64]) -> f64 {
    values.sort_by(|a, b| a.total_cmp(b));
    let n = values.len();
    if n % 2 == 1 {
        values[n / 2]
    } else {
        0.5 * (values[n / 2 - 1] + values[n / 2])
    }
}
