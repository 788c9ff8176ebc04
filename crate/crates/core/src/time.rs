//! UTC instants with millisecond resolution.
//!
//! Everything in the crate that carries a timestamp uses [`UtcTime`]. Text
//! form is ISO-8601 Zulu (`2014-03-08T00:19:29Z`, or with `.mmm` when the
//! instant is not a whole second). Local time zones are never consulted.

use std::fmt;
use std::str::FromStr;

use chrono::{DateTime, NaiveDate, NaiveDateTime, NaiveTime, TimeZone, Utc};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct UtcTime {
    millis: i64,
}

impl UtcTime {
    pub const fn from_millis(millis: i64) -> Self {
        Self { millis }
    }

    /// Rounds to the nearest millisecond.
    pub fn from_seconds(seconds: f64) -> Self {
        Self {
            millis: (seconds * 1000.0).round() as i64,
        }
    }

    pub fn ymd_hms(year: i32, month: u32, day: u32, h: u32, m: u32, s: u32) -> Self {
        let dt = Utc
            .with_ymd_and_hms(year, month, day, h, m, s)
            .single()
            .expect("valid calendar date");
        Self {
            millis: dt.timestamp_millis(),
        }
    }

    pub fn millis(self) -> i64 {
        self.millis
    }

    /// Seconds since the Unix epoch.
    pub fn seconds(self) -> f64 {
        self.millis as f64 / 1000.0
    }

    /// `self - earlier` in seconds.
    pub fn seconds_since(self, earlier: UtcTime) -> f64 {
        (self.millis - earlier.millis) as f64 / 1000.0
    }

    pub fn add_seconds(self, seconds: f64) -> Self {
        Self {
            millis: self.millis + (seconds * 1000.0).round() as i64,
        }
    }

    fn to_chrono(self) -> DateTime<Utc> {
        DateTime::from_timestamp_millis(self.millis).expect("timestamp within chrono range")
    }

    /// Parses either a full ISO-8601 Zulu timestamp or a bare time of day
    /// (`00:19:29Z`, `19:41Z`). A bare time of day resolves to the first
    /// instance at or after `anchor`.
    pub fn parse_with_anchor(s: &str, anchor: UtcTime) -> Result<Self, Error> {
        if let Ok(t) = s.parse::<UtcTime>() {
            return Ok(t);
        }
        let tod = s.trim().trim_end_matches(['Z', 'z']);
        let time = NaiveTime::parse_from_str(tod, "%H:%M:%S%.f")
            .or_else(|_| NaiveTime::parse_from_str(tod, "%H:%M"))
            .map_err(|_| Error::InvalidInput(format!("unparsable time '{s}'")))?;
        let anchor_dt = anchor.to_chrono();
        let candidate = anchor_dt.date_naive().and_time(time).and_utc();
        let candidate = if candidate < anchor_dt {
            candidate + chrono::Duration::days(1)
        } else {
            candidate
        };
        Ok(Self {
            millis: candidate.timestamp_millis(),
        })
    }
}

impl fmt::Display for UtcTime {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let dt = self.to_chrono();
        if self.millis.rem_euclid(1000) == 0 {
            write!(f, "{}", dt.format("%Y-%m-%dT%H:%M:%SZ"))
        } else {
            write!(f, "{}", dt.format("%Y-%m-%dT%H:%M:%S%.3fZ"))
        }
    }
}

impl FromStr for UtcTime {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim();
        let bad = || Error::InvalidInput(format!("unparsable UTC timestamp '{s}'"));
        let body = s.strip_suffix('Z').ok_or_else(bad)?;
        let naive = NaiveDateTime::parse_from_str(body, "%Y-%m-%dT%H:%M:%S%.f")
            .or_else(|_| NaiveDateTime::parse_from_str(body, "%Y-%m-%dT%H:%M"))
            .or_else(|_| NaiveDate::parse_from_str(body, "%Y-%m-%d").map(|d| d.and_time(NaiveTime::MIN)))
            .map_err(|_| bad())?;
        Ok(Self {
            millis: naive.and_utc().timestamp_millis(),
        })
    }
}

impl Serialize for UtcTime {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for UtcTime {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}
