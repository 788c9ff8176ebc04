//! Rebuilds the bundled fixtures under `fixtures/`.
//!
//! Run with `cargo run --example regenerate_fixtures`. Output is
//! deterministic; the checked-in files are exactly what this writes.

use std::path::{Path, PathBuf};

use bfokit::bfo_model::{predict_bfo, AircraftState};
use bfokit::config::AnalysisConfig;
use bfokit::geodesy::elevation_angle;
use bfokit::io::{self, Fixture, KeyEvent, LogonMeta};
use bfokit::satellite::{CorrectionRow, CorrectionTable, EphemerisRow, EphemerisTable, SatelliteSource};
use bfokit::stats::{BfoMeasurement, ChannelType, MessageType};
use bfokit::synthetic::InclinedGeoOrbit;
use bfokit::track_sweep::{bfo_error_vs_track, track_offset, SweepSetup, TrackSector};
use bfokit::units::knots_to_mps;
use bfokit::warmup::{CompensationMode, LogonSequence};
use bfokit::UtcTime;
use rand::SeedableRng;
use rand_distr::{Distribution, StandardNormal};

/// South-sector BFO error the correction table is levelled to at the sweep time.
const SOUTH_OFFSET_TARGET_HZ: f64 = 5.0;

fn t(s: &str) -> UtcTime {
    s.parse().unwrap()
}

fn round_to(v: f64, step: f64) -> f64 {
    let r = (v / step).round() * step;
    // keep the decimal text short
    format!("{:.6}", r).parse().unwrap()
}

fn main() {
    let dir = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("fixtures");
    let config_path = dir.join("mh370.toml");
    for name in [
        "flight_log.csv",
        "ephemeris.csv",
        "corrections.csv",
        "logon_sequences.csv",
        "logon_meta.csv",
        "bfo_error_sample.csv",
        "key_events.csv",
    ] {
        let p = dir.join(name);
        if !p.exists() {
            std::fs::write(&p, "").unwrap();
        }
    }
    let cfg = AnalysisConfig::load(&config_path).expect("config");

    let ephemeris = write_ephemeris(&dir);
    let corrections = write_corrections(&dir, &cfg, &ephemeris);
    write_flight_log(&dir, &cfg, &ephemeris, &corrections);
    write_logon_sequences(&dir);
    write_error_sample(&dir);
    write_events(&dir);

    if let Some(d) = &cfg.descent {
        if let Some(c) = &d.crossing {
            let when = d.bursts[0].time;
            let sat = ephemeris.state_at(when).unwrap();
            println!("elevation at final crossing: {:.3} deg", elevation_angle(c, sat.position).unwrap());
        }
    }
}

fn write(dir: &Path, name: &str, text: String) {
    io::write_text(&dir.join(name), &text).unwrap();
    println!("wrote {name}");
}

fn write_ephemeris(dir: &Path) -> EphemerisTable {
    let orbit = InclinedGeoOrbit::default();
    let truth = orbit.tabulate(t("2014-03-07T16:00:00Z"), t("2014-03-08T01:00:00Z"), 600.0).unwrap();
    let rows: Vec<EphemerisRow> = truth
        .rows()
        .iter()
        .map(|r| {
            let mut r = *r;
            r.position.x = round_to(r.position.x, 1e-3);
            r.position.y = round_to(r.position.y, 1e-3);
            r.position.z = round_to(r.position.z, 1e-3);
            r.velocity.x = round_to(r.velocity.x, 1e-6);
            r.velocity.y = round_to(r.velocity.y, 1e-6);
            r.velocity.z = round_to(r.velocity.z, 1e-6);
            r
        })
        .collect();
    let f = Fixture::new(
        vec![
            "source: synthetic ephemeris, inclined circular geosynchronous orbit".into(),
            "inclination 1.65 deg, ascending node 2014-03-07T13:30:00Z at 64.5 E, sampled every 600 s".into(),
            "ECEF metres and metres per second".into(),
        ],
        rows.clone(),
    );
    write(dir, "ephemeris.csv", io::render_ephemeris(&f));
    EphemerisTable::new(rows).unwrap()
}

/// Slow drift plus a six-hour ripple, before levelling.
fn correction_shape(hours: f64) -> f64 {
    -0.6 * hours + 2.0 * (2.0 * std::f64::consts::PI * hours / 6.0).sin()
}

fn write_corrections(dir: &Path, cfg: &AnalysisConfig, ephemeris: &EphemerisTable) -> CorrectionTable {
    let start = t("2014-03-07T16:00:00Z");
    let rows = |level: f64| -> Vec<CorrectionRow> {
        (0..=54)
            .map(|k| {
                let time = start.add_seconds(600.0 * k as f64);
                CorrectionRow {
                    time,
                    delta_f: round_to(level + correction_shape(time.seconds_since(start) / 3600.0), 0.01),
                }
            })
            .collect()
    };
    let sweep = cfg.sweep.as_ref().expect("sweep settings");
    let south = |table: &CorrectionTable| {
        let setup = SweepSetup {
            satellite: ephemeris,
            corrections: table,
            bias: cfg.bias,
            slot: cfg.slot,
            channel: cfg.channel,
        };
        let curve = bfo_error_vs_track(
            &sweep.crossing,
            sweep.time,
            knots_to_mps(sweep.reference_speed_kts),
            sweep.measured_bfo,
            &setup,
            sweep.step_deg,
        )
        .unwrap();
        track_offset(&curve, TrackSector::South).unwrap()
    };
    let unlevelled = CorrectionTable::new(rows(0.0)).unwrap();
    let level = round_to(SOUTH_OFFSET_TARGET_HZ - south(&unlevelled), 0.01);
    let final_rows = rows(level);
    let table = CorrectionTable::new(final_rows.clone()).unwrap();
    println!("correction level {level} Hz, south offset {:.3} Hz", south(&table));
    let f = Fixture::new(
        vec![
            "source: synthetic satellite and ground-station frequency correction, Hz".into(),
            format!("slow drift with a six-hour ripple, levelled by {level} Hz so the south-track error at the sweep time is about {SOUTH_OFFSET_TARGET_HZ} Hz"),
        ],
        final_rows,
    );
    write(dir, "corrections.csv", io::render_corrections(&f));
    table
}

fn m(time: &str, channel: ChannelType, kind: MessageType, bfo: f64, ber: f64, cn0: f64) -> BfoMeasurement {
    BfoMeasurement::new(t(time), channel, kind, bfo, ber, cn0).unwrap()
}

/// The 18:25Z log-on after the outage; open-loop compensation.
fn seq7() -> Vec<BfoMeasurement> {
    use MessageType::*;
    vec![
        m("2014-03-07T18:25:27Z", ChannelType::R, LogonRequest, 142.0, 1.0, 37.6),
        m("2014-03-07T18:25:34Z", ChannelType::R, LogonAck, 273.0, 0.0, 43.8),
        m("2014-03-07T18:27:03Z", ChannelType::R, Data, 176.0, 0.0, 44.1),
        m("2014-03-07T18:27:08Z", ChannelType::R, Data, 172.0, 0.0, 43.9),
        m("2014-03-07T18:28:05Z", ChannelType::R, Data, 144.0, 0.0, 44.3),
        m("2014-03-07T18:28:06Z", ChannelType::R, Data, 143.0, 0.0, 44.0),
        m("2014-03-07T18:28:14Z", ChannelType::R, Data, 143.0, 0.0, 44.2),
        m("2014-03-07T18:28:15Z", ChannelType::R, Data, 143.0, 0.0, 44.1),
    ]
}

fn write_flight_log(dir: &Path, cfg: &AnalysisConfig, ephemeris: &EphemerisTable, corrections: &CorrectionTable) {
    let cal = cfg.calibration.as_ref().expect("calibration settings");
    let mut rows = Vec::new();
    let mut time = cal.window.0;
    while time <= cal.window.1 {
        let aircraft = AircraftState::stationary(cal.position, time);
        let sat = ephemeris.state_at(time).unwrap();
        let (bfo, _) = predict_bfo(&aircraft, &sat, corrections, cfg.bias, &cfg.slot, &cfg.channel).unwrap();
        rows.push(BfoMeasurement {
            bto: None,
            signal_level: None,
            ..BfoMeasurement::new(time, ChannelType::R, MessageType::Data, bfo.round(), 0.0, 44.0).unwrap()
        });
        time = time.add_seconds(150.0);
    }
    rows.extend(seq7());
    use MessageType::*;
    let call = [88.0, 90.0, 91.0, 91.0, 92.0, 91.0, 88.0, 87.0, 86.0, 85.0];
    let call_start = t("2014-03-07T18:39:55Z");
    for (k, bfo) in call.iter().enumerate() {
        let time = call_start.add_seconds((k as f64 * 61.0 / 9.0).round());
        rows.push(BfoMeasurement::new(time, ChannelType::C, Phone, *bfo, 0.0, 41.5).unwrap());
    }
    for (time, bfo) in [
        ("2014-03-07T19:41:03Z", 111.0),
        ("2014-03-07T20:41:05Z", 141.0),
        ("2014-03-07T21:41:27Z", 168.0),
        ("2014-03-07T22:41:22Z", 204.0),
        ("2014-03-08T00:10:59Z", 252.0),
    ] {
        rows.push(m(time, ChannelType::R, Interrogation, bfo, 0.0, 43.0));
    }
    rows.push(m("2014-03-08T00:19:29Z", ChannelType::R, LogonRequest, 182.0, 0.0, 42.0));
    rows.push(m("2014-03-08T00:19:37Z", ChannelType::R, LogonAck, -2.0, 0.0, 42.0));

    let f = Fixture::new(
        vec![
            "source: burst log assembled for this repository".into(),
            "16:00-16:30Z rows: synthetic, forward model at the departure gate with a 150 Hz bias, rounded to 1 Hz".into(),
            "18:25-18:28Z rows: log-on sequence BFOs as publicly released, C/N0 and BER values illustrative".into(),
            "18:39-18:41Z rows: call-attempt BFOs, approximate values".into(),
            "19:41Z onward: publicly released handshake and log-on BFOs".into(),
        ],
        rows,
    );
    write(dir, "flight_log.csv", io::render_logs(&f));
}

type Raw = (f64, MessageType, f64, f64, f64);

fn sequence(id: &str, start: &str, mode: CompensationMode, points: &[Raw]) -> LogonSequence {
    let t0 = t(start);
    let ms = points
        .iter()
        .map(|&(dt, kind, bfo, ber, cn0)| BfoMeasurement::new(t0.add_seconds(dt), ChannelType::R, kind, bfo, ber, cn0).unwrap())
        .collect();
    LogonSequence::new(id, ms, mode).unwrap()
}

fn write_logon_sequences(dir: &Path) {
    use CompensationMode::*;
    use MessageType::*;
    let seqs = vec![
        sequence(
            "1",
            "2014-02-23T23:57:00Z",
            ClosedLoop,
            &[
                (0.0, LogonRequest, 360.0, 0.0, 43.5),
                (7.0, LogonAck, 348.0, 2.0, 42.9),
                (20.0, Data, 200.0, 0.0, 43.8),
                (35.0, Data, 130.0, 0.0, 43.6),
                (52.0, Data, 88.0, 1.0, 43.1),
            ],
        ),
        sequence(
            "2",
            "2014-02-26T14:11:00Z",
            ClosedLoop,
            &[
                (0.0, LogonRequest, 190.0, 0.0, 44.0),
                (7.0, LogonAck, 186.0, 0.0, 44.2),
                (25.0, Data, 150.0, 0.0, 43.9),
                (45.0, Data, 118.0, 0.0, 44.1),
            ],
        ),
        sequence(
            "3",
            "2014-03-05T03:06:00Z",
            ClosedLoop,
            &[
                (0.0, LogonRequest, 122.0, 0.0, 44.4),
                (7.0, LogonAck, 122.0, 0.0, 44.0),
                (20.0, Data, 110.0, 0.0, 44.3),
                (40.0, Data, 100.0, 0.0, 44.2),
                (1800.0, Data, 88.0, 0.0, 44.5),
                (1802.0, Data, 88.0, 0.0, 44.4),
            ],
        ),
        sequence(
            "4",
            "2014-03-06T13:29:00Z",
            ClosedLoop,
            &[
                (0.0, LogonRequest, 170.0, 0.0, 43.7),
                (7.0, LogonAck, 166.0, 0.0, 43.9),
                (30.0, Data, 130.0, 0.0, 44.0),
                (50.0, Data, 110.0, 0.0, 43.8),
            ],
        ),
        sequence(
            "5",
            "2014-03-06T15:02:00Z",
            ClosedLoop,
            &[
                (0.0, LogonRequest, 150.0, 0.0, 44.1),
                (7.0, LogonAck, 146.0, 0.0, 44.3),
                (25.0, Data, 120.0, 0.0, 44.0),
                (45.0, Data, 106.0, 0.0, 44.2),
                (1790.0, Data, 91.0, 0.0, 44.1),
                (1795.0, Data, 90.0, 0.0, 44.0),
            ],
        ),
        sequence(
            "6",
            "2014-03-07T12:50:00Z",
            ClosedLoop,
            &[
                (0.0, LogonRequest, 260.0, 0.0, 43.2),
                (7.0, LogonAck, 252.0, 1.0, 42.8),
                (40.0, Data, 200.0, 0.0, 43.5),
                (70.0, Data, 160.0, 0.0, 43.4),
                (120.0, Data, 130.0, 3.0, 42.7),
                (180.0, Data, 118.0, 0.0, 43.3),
                (200.0, Data, 116.0, 0.0, 43.6),
            ],
        ),
        LogonSequence::new("7", seq7(), OpenLoop).unwrap(),
    ];
    let f = Fixture::new(
        vec![
            "source: reconstruction of seven log-on sequences, consistent with published per-sequence drift values; not a digitisation".into(),
            "sequences 1-6 used closed-loop Doppler compensation, sequence 7 open-loop".into(),
        ],
        seqs,
    );
    write(dir, "logon_sequences.csv", io::render_logon_sequences(&f));

    let meta = |id: &str, lo: f64, hi: f64, settled: Option<f64>, notes: &str| LogonMeta {
        seq_id: id.into(),
        outage_minutes: Some((lo, hi)),
        settled_bfo: settled,
        notes: notes.into(),
    };
    let f = Fixture::new(
        vec!["source: outage bounds per log-on as published; settled levels belong to the reconstruction".into()],
        vec![
            meta(
                "1",
                381.0,
                442.0,
                Some(88.0),
                "sequence ends before settling; settled level annotated",
            ),
            meta(
                "2",
                295.0,
                354.0,
                Some(118.0),
                "sequence ends before settling; settled level annotated",
            ),
            meta("3", 35.0, 95.0, None, ""),
            meta(
                "4",
                43.0,
                103.0,
                Some(110.0),
                "sequence ends before settling; settled level annotated",
            ),
            meta("5", 35.0, 92.0, None, ""),
            meta("6", 228.0, 288.0, None, ""),
            meta(
                "7",
                20.0,
                78.0,
                None,
                "log-on request burst has bit errors and a C/N0 dip; discarded",
            ),
        ],
    );
    write(dir, "logon_meta.csv", io::render_logon_meta(&f));
}

fn write_error_sample(dir: &Path) {
    const N: usize = 2501;
    const MEAN: f64 = 0.18;
    const STD: f64 = 4.3;
    const LO: f64 = -28.0;
    const HI: f64 = 18.0;
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(20140308);
    let z: Vec<f64> = (0..N - 2).map(|_| StandardNormal.sample(&mut rng)).collect();
    let zm = z.iter().sum::<f64>() / z.len() as f64;
    let zs = (z.iter().map(|v| (v - zm).powi(2)).sum::<f64>() / (z.len() - 1) as f64).sqrt();
    let z: Vec<f64> = z.iter().map(|v| (v - zm) / zs).collect();

    // Shift and scale the bulk so that, with the two extremes, the whole
    // sample has the target mean and standard deviation.
    let rest = (N - 2) as f64;
    let m = (N as f64 * MEAN - LO - HI) / rest;
    let ss_total = (N - 1) as f64 * STD * STD;
    let ss_ext = (LO - MEAN).powi(2) + (HI - MEAN).powi(2);
    let s = ((ss_total - ss_ext - rest * (m - MEAN).powi(2)) / (rest - 1.0)).sqrt();

    let mut values: Vec<f64> = z.iter().map(|v| round_to(m + s * v, 0.01)).collect();
    assert!(values.iter().all(|v| *v > LO && *v < HI));
    values.insert(N / 3, LO);
    values.insert(2 * N / 3, HI);
    let f = Fixture::new(
        vec![
            "source: synthetic BFO error sample, seeded normal draws rescaled to mean 0.18 Hz and standard deviation 4.3 Hz".into(),
            "extremes fixed at -28 Hz and +18 Hz".into(),
        ],
        values,
    );
    write(dir, "bfo_error_sample.csv", io::render_error_sample(&f));
}

fn write_events(dir: &Path) {
    let ev = |start: &str, end: Option<&str>, d: &str| KeyEvent {
        start: t(start),
        end: end.map(t),
        description: d.into(),
    };
    let f = Fixture::new(
        vec!["source: published timeline of the flight".into()],
        vec![
            ev("2014-03-07T16:42:00Z", None, "Departure from Kuala Lumpur, normal take-off"),
            ev("2014-03-07T17:07:00Z", None, "Last ACARS transmission, flight normal"),
            ev("2014-03-07T17:21:13Z", None, "Loss of secondary radar, transponder inactive"),
            ev(
                "2014-03-07T18:22:12Z",
                None,
                "Last military radar contact, tracking north-west over the Malacca Strait",
            ),
            ev("2014-03-07T18:25:00Z", Some("2014-03-07T18:28:00Z"), "SDU log-on sequence"),
            ev(
                "2014-03-07T18:39:00Z",
                Some("2014-03-07T18:41:00Z"),
                "Unanswered ground-to-air telephone call",
            ),
            ev("2014-03-07T19:41:00Z", Some("2014-03-08T00:11:00Z"), "Roughly hourly handshakes"),
            ev("2014-03-08T00:19:29Z", Some("2014-03-08T00:19:37Z"), "Partial SDU log-on sequence"),
        ],
    );
    write(dir, "key_events.csv", io::render_events(&f));
}
