//! End-to-end checks on the bundled flight scenario.

use std::path::Path;

use bfokit::config::AnalysisConfig;
use bfokit::descent::{AccelerationEstimator, Hypothesis};
use bfokit::io;
use bfokit::pipeline::{self, HypothesisChoice};
use bfokit::stats::MessageType;
use bfokit::warmup::SettledKind;
use bfokit::UtcTime;

fn config() -> AnalysisConfig {
    AnalysisConfig::load(&Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures/mh370.toml")).unwrap()
}

fn t(s: &str) -> UtcTime {
    s.parse().unwrap()
}

#[test]
fn elevation_at_final_crossing() {
    let e = pipeline::final_elevation(&config()).unwrap();
    assert!((e - 38.8).abs() <= 0.3, "{e}");
}

#[test]
fn backward_trend_agrees_with_call_attempt() {
    let cfg = config();
    let report = pipeline::trend(&cfg, None, Some(vec![t("2014-03-07T18:40:00Z")]), None).unwrap();
    let back = report.extrapolations[0].bfo_hz;
    let calls: Vec<f64> = io::ingest_logs(cfg.files.logs.as_deref().unwrap())
        .unwrap()
        .into_iter()
        .filter(|m| m.message_type == MessageType::Phone)
        .map(|m| m.bfo)
        .collect();
    assert_eq!(calls.len(), 10);
    let lo = calls.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = calls.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    assert!(back >= lo - 10.0 && back <= hi + 10.0, "{back} vs [{lo}, {hi}]");
    assert!(!report.extrapolations[0].far_from_window);
}

#[test]
fn expected_level_flight_bfos_match_configured_values() {
    let cfg = config();
    let (south, north) = pipeline::reference_offsets(&cfg).unwrap();
    let r = pipeline::trend(&cfg, None, Some(vec![t("2014-03-08T00:19:29Z")]), Some((south, north))).unwrap();
    let e = &r.extrapolations[0];
    let d = cfg.descent.as_ref().unwrap();
    assert!((e.expected_south_hz.unwrap() - d.expected_south).abs() <= 2.0);
    assert!((e.expected_north_hz.unwrap() - d.expected_north).abs() <= 2.0);
}

#[test]
fn trend_fit_ignores_call_attempt() {
    let cfg = config();
    let wide = pipeline::trend(&cfg, Some((t("2014-03-07T18:30:00Z"), t("2014-03-08T00:11:00Z"))), None, None).unwrap();
    let narrow = pipeline::trend(&cfg, None, None, None).unwrap();
    assert_eq!(wide.model.count, narrow.model.count);
    assert!((wide.model.slope - narrow.model.slope).abs() < 1e-9);
}

#[test]
fn drift_report_per_sequence() {
    let r = pipeline::logon_drift(&config()).unwrap();
    let by_id = |id: &str| r.sequences.iter().find(|s| s.id == id).unwrap();
    assert_eq!(by_id("7").logon_minus_settled, None);
    assert_eq!(by_id("7").ack_minus_settled, 130.0);
    assert_eq!(by_id("7").settled, SettledKind::Detected);
    assert_eq!(by_id("1").settled, SettledKind::Annotated);
    assert_eq!(by_id("1").logon_minus_settled, Some(136.0));
    assert_eq!(by_id("3").ack_below_logon, Some(0.0));
}

#[test]
fn geometric_sensitivity_stays_close_to_default() {
    let mut cfg = config();
    cfg.descent.as_mut().unwrap().geometric_sensitivity = true;
    let r = pipeline::descent(&cfg, HypothesisChoice::Both, AccelerationEstimator::Midpoint).unwrap();
    assert!((r.sensitivity_hz_per_100fpm - 1.75).abs() < 0.02, "{}", r.sensitivity_hz_per_100fpm);
    let combined = r.combined.unwrap();
    let (lo, hi) = combined.rows[0].rates.outer();
    // 1.7 vs ~1.75 Hz per 100 fpm shifts bounds by about 3 %
    assert!((lo - 2900.0).abs() <= 200.0 && (hi - 14800.0).abs() <= 600.0, "{lo} {hi}");
}

#[test]
fn other_estimators_give_similar_acceleration() {
    let cfg = config();
    let mid = pipeline::descent(&cfg, HypothesisChoice::Both, AccelerationEstimator::Midpoint)
        .unwrap()
        .acceleration
        .unwrap();
    let min = pipeline::descent(&cfg, HypothesisChoice::Both, AccelerationEstimator::MinToMin)
        .unwrap()
        .acceleration
        .unwrap();
    let max = pipeline::descent(&cfg, HypothesisChoice::Both, AccelerationEstimator::MaxToMax)
        .unwrap()
        .acceleration
        .unwrap();
    assert_eq!(min.fpm_per_s, 1362.5);
    assert_eq!(max.fpm_per_s, 1312.5);
    assert!((mid.fpm_per_s - min.fpm_per_s).abs() < 50.0 && (mid.fpm_per_s - max.fpm_per_s).abs() < 50.0);
}

#[test]
fn single_hypothesis_tables_are_labelled() {
    let r = pipeline::descent(
        &config(),
        HypothesisChoice::One(Hypothesis::OtherCause),
        AccelerationEstimator::Midpoint,
    )
    .unwrap();
    assert_eq!(r.tables.len(), 1);
    assert_eq!(r.tables[0].hypothesis, Some(Hypothesis::OtherCause));
    assert!(r.combined.is_none());
}
