//! CSV ingestion and report writers.
//!
//! Every file may open with `#` comment lines carrying provenance; readers
//! keep them so that writing a file back reproduces it byte for byte.
//! Timestamps are ISO-8601 Zulu, numbers use a decimal point and no
//! grouping separators.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::descent::{DescentBoundsTable, FinalBurst};
use crate::error::{Error, LineError, Result};
use crate::geodesy::EcefVector;
use crate::satellite::{CorrectionRow, EphemerisRow};
use crate::stats::{BfoMeasurement, ChannelType, MessageType};
use crate::time::UtcTime;
use crate::track_sweep::TrackCurve;
use crate::warmup::{CompensationMode, LogonSequence};

pub const LOG_COLUMNS: [&str; 8] = [
    "time_utc",
    "channel",
    "msg_type",
    "bfo_hz",
    "bto_us",
    "ber",
    "cn0_dbhz",
    "signal_db",
];
pub const EVENT_COLUMNS: [&str; 3] = ["start_utc", "end_utc", "description"];
pub const EPHEMERIS_COLUMNS: [&str; 7] = ["time_utc", "x_m", "y_m", "z_m", "vx_mps", "vy_mps", "vz_mps"];
pub const CORRECTION_COLUMNS: [&str; 2] = ["time_utc", "delta_f_hz"];
pub const LOGON_COLUMNS: [&str; 7] = ["seq_id", "time_utc", "msg_type", "bfo_hz", "ber", "cn0_dbhz", "comp_mode"];
pub const LOGON_META_COLUMNS: [&str; 5] = ["seq_id", "outage_min_minutes", "outage_max_minutes", "settled_bfo_hz", "notes"];
pub const ERROR_SAMPLE_COLUMNS: [&str; 1] = ["bfo_error_hz"];

/// File contents plus the comment lines that preceded the header.
#[derive(Debug, Clone, PartialEq)]
pub struct Fixture<T> {
    pub provenance: Vec<String>,
    pub value: T,
}

impl<T> Fixture<T> {
    pub fn new(provenance: Vec<String>, value: T) -> Self {
        Self { provenance, value }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KeyEvent {
    pub start: UtcTime,
    pub end: Option<UtcTime>,
    pub description: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LogonMeta {
    pub seq_id: String,
    pub outage_minutes: Option<(f64, f64)>,
    pub settled_bfo: Option<f64>,
    pub notes: String,
}

/// Formats a float so that parsing it back yields the same value.
pub fn fmt_f64(v: f64) -> String {
    format!("{v}")
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map(fmt_f64).unwrap_or_default()
}

struct Row<'a> {
    record: &'a csv::StringRecord,
    index: &'a HashMap<String, usize>,
}

impl Row<'_> {
    fn text(&self, col: &str) -> &str {
        self.index.get(col).and_then(|&i| self.record.get(i)).unwrap_or("")
    }

    fn f64(&self, col: &str) -> std::result::Result<f64, String> {
        let s = self.text(col).trim();
        let v: f64 = s.parse().map_err(|_| format!("{col}: '{s}' is not a number"))?;
        if !v.is_finite() {
            return Err(format!("{col}: non-finite value '{s}'"));
        }
        Ok(v)
    }

    fn opt_f64(&self, col: &str) -> std::result::Result<Option<f64>, String> {
        if self.text(col).trim().is_empty() {
            Ok(None)
        } else {
            self.f64(col).map(Some)
        }
    }

    fn time(&self, col: &str) -> std::result::Result<UtcTime, String> {
        self.text(col).parse().map_err(|e: Error| format!("{col}: {e}"))
    }

    fn parse<T: std::str::FromStr<Err = Error>>(&self, col: &str) -> std::result::Result<T, String> {
        self.text(col).parse().map_err(|e: Error| format!("{col}: {e}"))
    }
}

fn read_text(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}

/// Parses a commented CSV whose header must name exactly `columns`.
fn parse_table<T>(
    path: &Path,
    text: &str,
    columns: &[&str],
    mut parse_row: impl FnMut(&Row<'_>) -> std::result::Result<T, String>,
) -> Result<Fixture<Vec<T>>> {
    let mut provenance = Vec::new();
    let mut offset = 0;
    let mut comment_lines = 0;
    for line in text.split_inclusive('\n') {
        let Some(comment) = line.strip_prefix('#') else { break };
        let comment = comment.trim_end_matches(['\n', '\r']);
        provenance.push(comment.strip_prefix(' ').unwrap_or(comment).to_string());
        offset += line.len();
        comment_lines += 1;
    }
    let body = &text[offset..];
    if body.trim().is_empty() {
        log::warn!("{} contains no data rows", path.display());
        return Ok(Fixture::new(provenance, Vec::new()));
    }

    let parse_err = |line: usize, message: String| Error::Parse {
        path: path.to_path_buf(),
        errors: vec![LineError { line, message }],
    };
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .from_reader(body.as_bytes());
    let header = reader.headers().map_err(|e| parse_err(comment_lines + 1, e.to_string()))?.clone();
    let header_line = comment_lines + 1;
    let mut index = HashMap::new();
    for (i, name) in header.iter().enumerate() {
        let name = name.trim();
        if !columns.contains(&name) {
            return Err(parse_err(header_line, format!("unknown column '{name}'")));
        }
        if index.insert(name.to_string(), i).is_some() {
            return Err(parse_err(header_line, format!("duplicate column '{name}'")));
        }
    }
    if let Some(missing) = columns.iter().find(|c| !index.contains_key(**c)) {
        return Err(parse_err(header_line, format!("missing column '{missing}'")));
    }

    let mut values = Vec::new();
    let mut errors = Vec::new();
    for record in reader.records() {
        let record = match record {
            Ok(r) => r,
            Err(e) => {
                let line = e.position().map(|p| p.line() as usize).unwrap_or(0) + comment_lines;
                errors.push(LineError {
                    line,
                    message: e.to_string(),
                });
                continue;
            }
        };
        let line = record.position().map(|p| p.line() as usize).unwrap_or(0) + comment_lines;
        if record.len() != header.len() {
            errors.push(LineError {
                line,
                message: format!("expected {} fields, found {}", header.len(), record.len()),
            });
            continue;
        }
        match parse_row(&Row {
            record: &record,
            index: &index,
        }) {
            Ok(v) => values.push(v),
            Err(message) => errors.push(LineError { line, message }),
        }
    }
    if !errors.is_empty() {
        return Err(Error::Parse {
            path: path.to_path_buf(),
            errors,
        });
    }
    Ok(Fixture::new(provenance, values))
}

fn read_table<T>(
    path: &Path,
    columns: &[&str],
    parse_row: impl FnMut(&Row<'_>) -> std::result::Result<T, String>,
) -> Result<Fixture<Vec<T>>> {
    let text = read_text(path)?;
    parse_table(path, &text, columns, parse_row)
}

/// Renders a commented CSV.
pub fn render_table(provenance: &[String], columns: &[&str], rows: &[Vec<String>]) -> String {
    let mut out = String::new();
    for line in provenance {
        let _ = writeln!(out, "# {line}");
    }
    let mut writer = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(Vec::new());
    writer.write_record(columns).expect("in-memory write");
    for row in rows {
        writer.write_record(row).expect("in-memory write");
    }
    out.push_str(&String::from_utf8(writer.into_inner().expect("in-memory flush")).expect("utf-8 input"));
    out
}

pub fn write_text(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}

fn parse_log_row(r: &Row<'_>) -> std::result::Result<BfoMeasurement, String> {
    let m = BfoMeasurement {
        time: r.time("time_utc")?,
        channel: r.parse::<ChannelType>("channel")?,
        message_type: r.parse::<MessageType>("msg_type")?,
        bfo: r.f64("bfo_hz")?,
        bto: r.opt_f64("bto_us")?,
        ber: r.f64("ber")?,
        cn0: r.f64("cn0_dbhz")?,
        signal_level: r.opt_f64("signal_db")?,
    };
    m.validate().map_err(|e| e.to_string())?;
    Ok(m)
}

/// Reads a burst log in file order.
pub fn read_logs(path: &Path) -> Result<Fixture<Vec<BfoMeasurement>>> {
    read_table(path, &LOG_COLUMNS, parse_log_row)
}

/// Reads a burst log, sorted by time (stable for equal timestamps).
pub fn ingest_logs(path: &Path) -> Result<Vec<BfoMeasurement>> {
    let mut v = read_logs(path)?.value;
    v.sort_by_key(|m| m.time);
    Ok(v)
}

pub fn render_logs(f: &Fixture<Vec<BfoMeasurement>>) -> String {
    let rows: Vec<Vec<String>> = f
        .value
        .iter()
        .map(|m| {
            vec![
                m.time.to_string(),
                m.channel.to_string(),
                m.message_type.to_string(),
                fmt_f64(m.bfo),
                fmt_opt(m.bto),
                fmt_f64(m.ber),
                fmt_f64(m.cn0),
                fmt_opt(m.signal_level),
            ]
        })
        .collect();
    render_table(&f.provenance, &LOG_COLUMNS, &rows)
}

pub fn read_events(path: &Path) -> Result<Fixture<Vec<KeyEvent>>> {
    read_table(path, &EVENT_COLUMNS, |r| {
        let start = r.time("start_utc")?;
        let end = if r.text("end_utc").trim().is_empty() {
            None
        } else {
            Some(r.time("end_utc")?)
        };
        if end.is_some_and(|e| e < start) {
            return Err("end_utc precedes start_utc".into());
        }
        Ok(KeyEvent {
            start,
            end,
            description: r.text("description").to_string(),
        })
    })
}

/// Reads a timeline of key events, sorted by start time.
pub fn ingest_events(path: &Path) -> Result<Vec<KeyEvent>> {
    let mut v = read_events(path)?.value;
    v.sort_by_key(|e| e.start);
    Ok(v)
}

pub fn render_events(f: &Fixture<Vec<KeyEvent>>) -> String {
    let rows: Vec<Vec<String>> = f
        .value
        .iter()
        .map(|e| {
            vec![
                e.start.to_string(),
                e.end.map(|t| t.to_string()).unwrap_or_default(),
                e.description.clone(),
            ]
        })
        .collect();
    render_table(&f.provenance, &EVENT_COLUMNS, &rows)
}

pub fn read_ephemeris(path: &Path) -> Result<Fixture<Vec<EphemerisRow>>> {
    read_table(path, &EPHEMERIS_COLUMNS, |r| {
        Ok(EphemerisRow {
            time: r.time("time_utc")?,
            position: EcefVector::new(r.f64("x_m")?, r.f64("y_m")?, r.f64("z_m")?),
            velocity: EcefVector::new(r.f64("vx_mps")?, r.f64("vy_mps")?, r.f64("vz_mps")?),
        })
    })
}

pub fn render_ephemeris(f: &Fixture<Vec<EphemerisRow>>) -> String {
    let rows: Vec<Vec<String>> = f
        .value
        .iter()
        .map(|e| {
            let (p, v) = (e.position, e.velocity);
            vec![
                e.time.to_string(),
                fmt_f64(p.x),
                fmt_f64(p.y),
                fmt_f64(p.z),
                fmt_f64(v.x),
                fmt_f64(v.y),
                fmt_f64(v.z),
            ]
        })
        .collect();
    render_table(&f.provenance, &EPHEMERIS_COLUMNS, &rows)
}

pub fn read_corrections(path: &Path) -> Result<Fixture<Vec<CorrectionRow>>> {
    read_table(path, &CORRECTION_COLUMNS, |r| {
        Ok(CorrectionRow {
            time: r.time("time_utc")?,
            delta_f: r.f64("delta_f_hz")?,
        })
    })
}

pub fn render_corrections(f: &Fixture<Vec<CorrectionRow>>) -> String {
    let rows: Vec<Vec<String>> = f.value.iter().map(|c| vec![c.time.to_string(), fmt_f64(c.delta_f)]).collect();
    render_table(&f.provenance, &CORRECTION_COLUMNS, &rows)
}

pub fn read_error_sample(path: &Path) -> Result<Fixture<Vec<f64>>> {
    read_table(path, &ERROR_SAMPLE_COLUMNS, |r| r.f64("bfo_error_hz"))
}

pub fn render_error_sample(f: &Fixture<Vec<f64>>) -> String {
    let rows: Vec<Vec<String>> = f.value.iter().map(|&e| vec![fmt_f64(e)]).collect();
    render_table(&f.provenance, &ERROR_SAMPLE_COLUMNS, &rows)
}

/// Reads log-on sequences grouped by `seq_id` in order of first appearance.
/// Metadata (outage bounds, settled annotation, notes) is merged separately
/// with [`attach_logon_meta`].
pub fn read_logon_sequences(path: &Path) -> Result<Fixture<Vec<LogonSequence>>> {
    let rows = read_table(path, &LOGON_COLUMNS, |r| {
        let m = BfoMeasurement {
            time: r.time("time_utc")?,
            channel: ChannelType::R,
            message_type: r.parse::<MessageType>("msg_type")?,
            bfo: r.f64("bfo_hz")?,
            bto: None,
            ber: r.f64("ber")?,
            cn0: r.f64("cn0_dbhz")?,
            signal_level: None,
        };
        m.validate().map_err(|e| e.to_string())?;
        let id = r.text("seq_id").trim().to_string();
        if id.is_empty() {
            return Err("seq_id is empty".into());
        }
        Ok((id, m, r.parse::<CompensationMode>("comp_mode")?))
    })?;

    let mut order: Vec<String> = Vec::new();
    let mut groups: HashMap<String, (Vec<BfoMeasurement>, CompensationMode)> = HashMap::new();
    for (id, m, mode) in rows.value {
        match groups.get_mut(&id) {
            Some((ms, existing)) => {
                if *existing != mode {
                    return Err(Error::InvalidInput(format!("sequence {id} mixes compensation modes")));
                }
                ms.push(m);
            }
            None => {
                order.push(id.clone());
                groups.insert(id, (vec![m], mode));
            }
        }
    }
    let sequences = order
        .into_iter()
        .map(|id| {
            let (ms, mode) = groups.remove(&id).expect("grouped");
            LogonSequence::new(id, ms, mode)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(Fixture::new(rows.provenance, sequences))
}

pub fn render_logon_sequences(f: &Fixture<Vec<LogonSequence>>) -> String {
    let rows: Vec<Vec<String>> = f
        .value
        .iter()
        .flat_map(|s| {
            s.measurements.iter().map(move |m| {
                vec![
                    s.id.clone(),
                    m.time.to_string(),
                    m.message_type.to_string(),
                    fmt_f64(m.bfo),
                    fmt_f64(m.ber),
                    fmt_f64(m.cn0),
                    s.compensation_mode.to_string(),
                ]
            })
        })
        .collect();
    render_table(&f.provenance, &LOGON_COLUMNS, &rows)
}

pub fn read_logon_meta(path: &Path) -> Result<Fixture<Vec<LogonMeta>>> {
    read_table(path, &LOGON_META_COLUMNS, |r| {
        let outage = match (r.opt_f64("outage_min_minutes")?, r.opt_f64("outage_max_minutes")?) {
            (Some(a), Some(b)) if a <= b => Some((a, b)),
            (Some(_), Some(_)) => return Err("outage bounds reversed".into()),
            (None, None) => None,
            _ => return Err("outage bounds must both be given or both be empty".into()),
        };
        Ok(LogonMeta {
            seq_id: r.text("seq_id").trim().to_string(),
            outage_minutes: outage,
            settled_bfo: r.opt_f64("settled_bfo_hz")?,
            notes: r.text("notes").to_string(),
        })
    })
}

pub fn render_logon_meta(f: &Fixture<Vec<LogonMeta>>) -> String {
    let rows: Vec<Vec<String>> = f
        .value
        .iter()
        .map(|m| {
            vec![
                m.seq_id.clone(),
                fmt_opt(m.outage_minutes.map(|o| o.0)),
                fmt_opt(m.outage_minutes.map(|o| o.1)),
                fmt_opt(m.settled_bfo),
                m.notes.clone(),
            ]
        })
        .collect();
    render_table(&f.provenance, &LOGON_META_COLUMNS, &rows)
}

pub fn attach_logon_meta(sequences: &mut [LogonSequence], meta: &[LogonMeta]) -> Result<()> {
    for m in meta {
        let seq = sequences
            .iter_mut()
            .find(|s| s.id == m.seq_id)
            .ok_or_else(|| Error::InvalidInput(format!("metadata for unknown sequence {}", m.seq_id)))?;
        seq.outage_minutes = m.outage_minutes;
        seq.settled_annotation = m.settled_bfo;
        seq.notes = m.notes.clone();
    }
    Ok(())
}

/// Sequences with their metadata merged in.
pub fn ingest_logon_sequences(path: &Path, meta: Option<&Path>) -> Result<Vec<LogonSequence>> {
    let mut seqs = read_logon_sequences(path)?.value;
    if let Some(meta) = meta {
        attach_logon_meta(&mut seqs, &read_logon_meta(meta)?.value)?;
    }
    Ok(seqs)
}

pub fn render_track_curve(curve: &TrackCurve) -> String {
    let rows: Vec<Vec<String>> = curve
        .points
        .iter()
        .map(|p| vec![fmt_f64(p.track_deg), fmt_f64(p.bfo_error_hz)])
        .collect();
    render_table(&[], &["track_deg", "bfo_error_hz"], &rows)
}

/// Recorded BFO with the drift-removed and noise-extended ranges.
pub fn render_bfo_ranges(table: &DescentBoundsTable) -> String {
    let rows: Vec<Vec<String>> = table
        .rows
        .iter()
        .map(|r| {
            let d = r.range.drift_removed;
            vec![
                r.time.to_string(),
                r.message.to_string(),
                fmt_f64(r.range.recorded),
                fmt_opt(d.map(|d| d.lower)),
                fmt_opt(d.map(|d| d.upper)),
                fmt_f64(r.range.adjusted.lower),
                fmt_f64(r.range.adjusted.upper),
            ]
        })
        .collect();
    render_table(
        &[],
        &[
            "timestamp",
            "message",
            "recorded_hz",
            "drift_removed_lower_hz",
            "drift_removed_upper_hz",
            "adjusted_lower_hz",
            "adjusted_upper_hz",
        ],
        &rows,
    )
}

pub fn render_descent_rates(table: &DescentBoundsTable) -> String {
    let rows: Vec<Vec<String>> = table
        .rows
        .iter()
        .map(|r| {
            let x = r.rates;
            vec![
                r.time.to_string(),
                fmt_f64(x.min_south),
                fmt_f64(x.min_north),
                fmt_f64(x.max_south),
                fmt_f64(x.max_north),
            ]
        })
        .collect();
    render_table(
        &[],
        &["timestamp", "min_south_fpm", "min_north_fpm", "max_south_fpm", "max_north_fpm"],
        &rows,
    )
}

pub fn render_outer_bounds(table: &DescentBoundsTable) -> String {
    let rows: Vec<Vec<String>> = table
        .rows
        .iter()
        .map(|r| {
            let (lo, hi) = r.rates.outer();
            vec![r.time.to_string(), fmt_f64(lo), fmt_f64(hi)]
        })
        .collect();
    render_table(&[], &["timestamp", "min_fpm", "max_fpm"], &rows)
}

/// Final log-on bursts as a small CSV, mostly for reports.
pub fn render_bursts(bursts: &[FinalBurst]) -> String {
    let rows: Vec<Vec<String>> = bursts
        .iter()
        .map(|b| vec![b.time.to_string(), b.message.to_string(), fmt_f64(b.recorded)])
        .collect();
    render_table(&[], &["timestamp", "message", "recorded_hz"], &rows)
}
