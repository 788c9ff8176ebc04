//! Forward model of the burst frequency offset seen at the ground station.
//!
//! The predicted BFO is the sum of five terms:
//!
//! * uplink Doppler between aircraft and satellite,
//! * downlink Doppler between satellite and ground station,
//! * the aircraft terminal's own Doppler pre-compensation, computed from its
//!   navigation solution with vertical rate and altitude forced to zero and
//!   the satellite assumed at its nominal slot,
//! * the tabulated satellite-translation plus ground AFC correction,
//! * a constant oscillator bias calibrated on the ground.
//!
//! Doppler terms follow the convention `(F/c)·(v_s − v_x)·(p_x − p_s)/|p_x − p_s|`,
//! so closing range gives a positive shift.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geodesy::{geodetic_to_ecef, kinematics_to_ecef_velocity, GeodeticPosition, GroundKinematics};
use crate::satellite::{nominal_satellite_position, CorrectionTable, NominalSlot, SatelliteSource, SatelliteState};
use crate::stats::BfoMeasurement;
use crate::time::UtcTime;
use crate::units::FPM_TO_MPS;

pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

/// Aircraft-to-satellite carrier, Hz.
pub const DEFAULT_UPLINK_HZ: f64 = 1_646.652_5e6;

/// Satellite-to-ground carrier, Hz. Placeholder for synthetic scenarios.
pub const DEFAULT_DOWNLINK_HZ: f64 = 3_615.152_5e6;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChannelConfig {
    pub uplink_frequency: f64,
    pub downlink_frequency: f64,
    pub speed_of_light: f64,
    /// Ground earth station location (default: near Perth, Western Australia).
    pub ges_position: GeodeticPosition,
}

impl Default for ChannelConfig {
    fn default() -> Self {
        Self {
            uplink_frequency: DEFAULT_UPLINK_HZ,
            downlink_frequency: DEFAULT_DOWNLINK_HZ,
            speed_of_light: SPEED_OF_LIGHT,
            ges_position: GeodeticPosition::new(-31.8024, 115.8875, 0.0).expect("valid GES"),
        }
    }
}

impl ChannelConfig {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("uplink frequency", self.uplink_frequency),
            ("downlink frequency", self.downlink_frequency),
            ("speed of light", self.speed_of_light),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::InvalidInput(format!("{name} must be positive, got {v}")));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AircraftState {
    pub position: GeodeticPosition,
    pub kinematics: GroundKinematics,
    pub time: UtcTime,
}

impl AircraftState {
    pub fn stationary(position: GeodeticPosition, time: UtcTime) -> Self {
        Self {
            position,
            kinematics: GroundKinematics::stationary(),
            time,
        }
    }
}

/// Per-term decomposition of a predicted BFO, all in Hz.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct BfoTerms {
    pub uplink_doppler: f64,
    pub downlink_doppler: f64,
    pub aes_compensation: f64,
    pub sat_plus_afc: f64,
    pub bias: f64,
}

impl BfoTerms {
    pub fn total(&self) -> f64 {
        self.uplink_doppler + self.downlink_doppler + self.aes_compensation + self.sat_plus_afc + self.bias
    }
}

fn range_rate_doppler(freq: f64, c: f64, relative_velocity: crate::geodesy::EcefVector, los: crate::geodesy::EcefVector) -> Option<f64> {
    let n = los.norm();
    (n > 0.0).then(|| freq / c * relative_velocity.dot(los) / n)
}

pub fn uplink_doppler(aircraft: &AircraftState, sat: &SatelliteState, cfg: &ChannelConfig) -> Result<f64> {
    let p_x = geodetic_to_ecef(&aircraft.position);
    let v_x = kinematics_to_ecef_velocity(&aircraft.position, &aircraft.kinematics);
    range_rate_doppler(cfg.uplink_frequency, cfg.speed_of_light, sat.velocity - v_x, p_x - sat.position)
        .ok_or(Error::Degenerate("aircraft and satellite positions coincide"))
}

/// Doppler pre-compensation applied by the aircraft terminal.
pub fn aes_compensation(aircraft: &AircraftState, slot: &NominalSlot, cfg: &ChannelConfig) -> f64 {
    let sea_level = aircraft.position.with_altitude(0.0);
    let p_hat = geodetic_to_ecef(&sea_level);
    let v_hat = kinematics_to_ecef_velocity(&sea_level, &aircraft.kinematics.level());
    let p_s_hat = nominal_satellite_position(slot);
    range_rate_doppler(cfg.uplink_frequency, cfg.speed_of_light, v_hat, p_hat - p_s_hat).expect("nominal slot is far above sea level")
}

pub fn downlink_doppler(sat: &SatelliteState, cfg: &ChannelConfig) -> f64 {
    let p_ges = geodetic_to_ecef(&cfg.ges_position);
    range_rate_doppler(cfg.downlink_frequency, cfg.speed_of_light, sat.velocity, p_ges - sat.position).unwrap_or(0.0)
}

/// Predicted BFO and its decomposition. The scalar is exactly `terms.total()`.
pub fn predict_bfo(
    aircraft: &AircraftState,
    sat: &SatelliteState,
    corrections: &CorrectionTable,
    bias: f64,
    slot: &NominalSlot,
    cfg: &ChannelConfig,
) -> Result<(f64, BfoTerms)> {
    let terms = BfoTerms {
        uplink_doppler: uplink_doppler(aircraft, sat, cfg)?,
        downlink_doppler: downlink_doppler(sat, cfg),
        aes_compensation: aes_compensation(aircraft, slot, cfg),
        sat_plus_afc: corrections.deterministic_correction_at(aircraft.time)?,
        bias,
    };
    Ok((terms.total(), terms))
}

/// Doppler from vertical motion alone, projected on a line of sight at
/// `elevation_deg` above the horizon.
pub fn vertical_doppler(vertical_rate: f64, elevation_deg: f64, cfg: &ChannelConfig) -> f64 {
    vertical_rate * cfg.uplink_frequency * elevation_deg.to_radians().sin() / cfg.speed_of_light
}

/// BFO change per 100 fpm of climb at the given elevation, Hz.
pub fn descent_sensitivity(elevation_deg: f64, cfg: &ChannelConfig) -> f64 {
    vertical_doppler(100.0 * FPM_TO_MPS, elevation_deg, cfg)
}

/// Mean of `measured − predicted(bias = 0)` over bursts logged while the
/// aircraft state is known (typically parked at the gate).
pub fn calibrate_bias(
    tarmac: &[(BfoMeasurement, AircraftState)],
    satellite: &dyn SatelliteSource,
    corrections: &CorrectionTable,
    slot: &NominalSlot,
    cfg: &ChannelConfig,
) -> Result<f64> {
    if tarmac.is_empty() {
        return Err(Error::InsufficientData("no tarmac measurements for bias calibration".into()));
    }
    let mut sum = 0.0;
    for (m, aircraft) in tarmac {
        let sat = satellite.state_at(aircraft.time)?;
        let (predicted, _) = predict_bfo(aircraft, &sat, corrections, 0.0, slot, cfg)?;
        sum += m.bfo - predicted;
    }
    Ok(sum / tarmac.len() as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geodesy::{local_frame, EcefVector};
    use crate::satellite::{CorrectionRow, FixedSatellite, GEOSTATIONARY_RADIUS};
    use crate::stats::{ChannelType, MessageType};
    use proptest::prelude::*;

    fn t() -> UtcTime {
        UtcTime::ymd_hms(2014, 3, 7, 16, 0, 0)
    }

    fn aircraft(lat: f64, lon: f64, alt: f64, speed: f64, track: f64, vz: f64) -> AircraftState {
        AircraftState {
            position: GeodeticPosition::new(lat, lon, alt).unwrap(),
            kinematics: GroundKinematics::new(speed, track, vz).unwrap(),
            time: t(),
        }
    }

    fn parked_at_slot(slot: &NominalSlot) -> SatelliteState {
        SatelliteState {
            position: nominal_satellite_position(slot),
            velocity: EcefVector::ZERO,
        }
    }

    fn zero_corrections() -> CorrectionTable {
        CorrectionTable::zero_over(t().add_seconds(-3600.0), t().add_seconds(3600.0))
    }

    #[test]
    fn equal_velocities_give_no_uplink_doppler() {
        let a = aircraft(-20.0, 80.0, 10_000.0, 200.0, 45.0, 3.0);
        let v = kinematics_to_ecef_velocity(&a.position, &a.kinematics);
        let sat = SatelliteState {
            position: nominal_satellite_position(&NominalSlot::default()),
            velocity: v,
        };
        assert!(uplink_doppler(&a, &sat, &ChannelConfig::default()).unwrap().abs() < 1e-12);
    }

    #[test]
    fn closing_satellite_raises_frequency() {
        let cfg = ChannelConfig::default();
        let a = aircraft(0.0, 64.5, 0.0, 0.0, 0.0, 0.0);
        let p_s = nominal_satellite_position(&NominalSlot::default());
        let towards = (geodetic_to_ecef(&a.position) - p_s).unit().unwrap();
        let approach = SatelliteState {
            position: p_s,
            velocity: towards,
        };
        let recede = SatelliteState {
            position: p_s,
            velocity: -towards,
        };
        let k = cfg.uplink_frequency / cfg.speed_of_light;
        assert!((uplink_doppler(&a, &approach, &cfg).unwrap() - k).abs() < 1e-9);
        assert!((uplink_doppler(&a, &recede, &cfg).unwrap() + k).abs() < 1e-9);
        assert!((k - 5.4926).abs() < 1e-3);
    }

    #[test]
    fn climbing_under_the_satellite() {
        let cfg = ChannelConfig::default();
        let a = aircraft(0.0, 64.5, 0.0, 0.0, 0.0, 100.0 * FPM_TO_MPS);
        let sat = parked_at_slot(&NominalSlot::default());
        let f = uplink_doppler(&a, &sat, &cfg).unwrap();
        assert!((f - 2.8).abs() < 0.05, "{f}");
    }

    #[test]
    fn coincident_positions_are_degenerate() {
        let a = aircraft(0.0, 0.0, 0.0, 0.0, 0.0, 0.0);
        let sat = SatelliteState {
            position: geodetic_to_ecef(&a.position),
            velocity: EcefVector::ZERO,
        };
        assert!(matches!(
            uplink_doppler(&a, &sat, &ChannelConfig::default()),
            Err(Error::Degenerate(_))
        ));
    }

    #[test]
    fn compensation_ignores_vertical_rate_and_is_zero_when_parked() {
        let cfg = ChannelConfig::default();
        let slot = NominalSlot::default();
        assert_eq!(aes_compensation(&aircraft(-30.0, 90.0, 0.0, 0.0, 123.0, 0.0), &slot, &cfg), 0.0);
        let base = aes_compensation(&aircraft(-30.0, 90.0, 9_000.0, 230.0, 180.0, 0.0), &slot, &cfg);
        for vz in [-80.0, -5.0, 5.0, 40.0] {
            let c = aes_compensation(&aircraft(-30.0, 90.0, 9_000.0, 230.0, 180.0, vz), &slot, &cfg);
            assert_eq!(c, base);
        }
    }

    #[test]
    fn downlink_examples() {
        let cfg = ChannelConfig {
            downlink_frequency: 1.5e9,
            speed_of_light: 3.0e8,
            ..ChannelConfig::default()
        };
        let p_s = nominal_satellite_position(&NominalSlot::default());
        assert_eq!(
            downlink_doppler(
                &SatelliteState {
                    position: p_s,
                    velocity: EcefVector::ZERO
                },
                &cfg
            ),
            0.0
        );
        let away = (p_s - geodetic_to_ecef(&cfg.ges_position)).unit().unwrap();
        let receding = SatelliteState {
            position: p_s,
            velocity: away,
        };
        assert!((downlink_doppler(&receding, &cfg) + 5.0).abs() < 1e-12);
        let closing = SatelliteState {
            position: p_s,
            velocity: -away,
        };
        assert_eq!(downlink_doppler(&closing, &cfg), -downlink_doppler(&receding, &cfg));
    }

    #[test]
    fn static_world_predicts_zero() {
        let slot = NominalSlot::default();
        let a = aircraft(-10.0, 70.0, 0.0, 0.0, 0.0, 0.0);
        let (f, terms) = predict_bfo(
            &a,
            &parked_at_slot(&slot),
            &zero_corrections(),
            0.0,
            &slot,
            &ChannelConfig::default(),
        )
        .unwrap();
        assert_eq!(f, 0.0);
        assert_eq!(terms, BfoTerms::default());
    }

    #[test]
    fn terms_sum() {
        let terms = BfoTerms {
            uplink_doppler: 10.0,
            downlink_doppler: 5.0,
            aes_compensation: -3.0,
            sat_plus_afc: 2.0,
            bias: 150.0,
        };
        assert_eq!(terms.total(), 164.0);
    }

    #[test]
    fn correction_outside_span_propagates() {
        let slot = NominalSlot::default();
        let mut a = aircraft(-10.0, 70.0, 0.0, 0.0, 0.0, 0.0);
        a.time = t().add_seconds(7200.0);
        let r = predict_bfo(
            &a,
            &parked_at_slot(&slot),
            &zero_corrections(),
            0.0,
            &slot,
            &ChannelConfig::default(),
        );
        assert!(matches!(r, Err(Error::OutOfRange { .. })));
    }

    #[test]
    fn vertical_doppler_examples() {
        let cfg = ChannelConfig::default();
        let climb = 100.0 * FPM_TO_MPS;
        assert!((vertical_doppler(climb, 90.0, &cfg) - 2.8).abs() < 0.05);
        assert!((vertical_doppler(-climb, 38.8, &cfg) + 1.7).abs() < 0.06);
        assert_eq!(vertical_doppler(0.0, 38.8, &cfg), 0.0);
        assert!((descent_sensitivity(90.0, &cfg) - 2.790).abs() < 0.001);
        assert!((descent_sensitivity(38.8, &cfg) - 1.748).abs() < 0.001);
        assert_eq!(descent_sensitivity(0.0, &cfg), 0.0);
    }

    fn tarmac_burst(bfo: f64) -> BfoMeasurement {
        BfoMeasurement::new(t(), ChannelType::R, MessageType::Data, bfo, 0.0, 42.0).unwrap()
    }

    #[test]
    fn bias_calibration_examples() {
        let cfg = ChannelConfig::default();
        let slot = NominalSlot::default();
        let parked = aircraft(2.75, 101.71, 0.0, 0.0, 0.0, 0.0);
        let corrections = CorrectionTable::new(vec![
            CorrectionRow {
                time: t().add_seconds(-60.0),
                delta_f: 100.0,
            },
            CorrectionRow {
                time: t().add_seconds(60.0),
                delta_f: 100.0,
            },
        ])
        .unwrap();
        let sat = FixedSatellite(parked_at_slot(&slot));
        let one = [(tarmac_burst(250.0), parked)];
        assert!((calibrate_bias(&one, &sat, &corrections, &slot, &cfg).unwrap() - 150.0).abs() < 1e-12);
        let dup = [(tarmac_burst(250.0), parked), (tarmac_burst(250.0), parked)];
        assert!((calibrate_bias(&dup, &sat, &corrections, &slot, &cfg).unwrap() - 150.0).abs() < 1e-12);
        assert!(matches!(
            calibrate_bias(&[], &sat, &corrections, &slot, &cfg),
            Err(Error::InsufficientData(_))
        ));
    }

    #[test]
    fn injected_bias_recovered_on_synthetic_flight() {
        use crate::synthetic::InclinedGeoOrbit;
        let cfg = ChannelConfig::default();
        let slot = NominalSlot::default();
        let orbit = InclinedGeoOrbit::default();
        let corrections = CorrectionTable::new(
            (0..=12)
                .map(|i| CorrectionRow {
                    time: t().add_seconds(i as f64 * 600.0),
                    delta_f: -10.0 + i as f64,
                })
                .collect(),
        )
        .unwrap();
        let injected = 150.27;
        let tarmac: Vec<_> = (0..20)
            .map(|i| {
                let mut a = aircraft(2.7456, 101.7072, 20.0, 0.0, 0.0, 0.0);
                a.time = t().add_seconds(i as f64 * 300.0 + 17.0);
                let sat = orbit.state(a.time);
                let (f, _) = predict_bfo(&a, &sat, &corrections, injected, &slot, &cfg).unwrap();
                // zero-mean dither
                let dither = if i % 2 == 0 { 0.3 } else { -0.3 };
                (tarmac_burst(f + dither), a)
            })
            .collect();
        let bias = calibrate_bias(&tarmac, &orbit, &corrections, &slot, &cfg).unwrap();
        assert!((bias - injected).abs() < 0.01, "{bias}");
    }

    // Independent evaluation using nalgebra and the reduced-latitude surface.
    #[allow(clippy::too_many_arguments)]
    fn scripted_bfo(
        lat: f64,
        lon: f64,
        alt: f64,
        speed: f64,
        track: f64,
        vz: f64,
        p_s: [f64; 3],
        v_s: [f64; 3],
        det: f64,
        bias: f64,
    ) -> f64 {
        use nalgebra::Vector3;
        let f = 1.0 / 298.257223563;
        let a = 6378137.0;
        let b = a * (1.0 - f);
        let ecef = |lat: f64, lon: f64, h: f64| {
            let (phi, lam) = (lat.to_radians(), lon.to_radians());
            let beta = ((1.0 - f) * phi.tan()).atan();
            Vector3::new(
                (a * beta.cos() + h * phi.cos()) * lam.cos(),
                (a * beta.cos() + h * phi.cos()) * lam.sin(),
                b * beta.sin() + h * phi.sin(),
            )
        };
        let (phi, lam) = (lat.to_radians(), lon.to_radians());
        let up = Vector3::new(phi.cos() * lam.cos(), phi.cos() * lam.sin(), phi.sin());
        let east = Vector3::new(-lam.sin(), lam.cos(), 0.0);
        let north = up.cross(&east);
        let horiz = east * (speed * track.to_radians().sin()) + north * (speed * track.to_radians().cos());
        let k = 1646.6525e6 / 299792458.0;
        let kd = 3615.1525e6 / 299792458.0;
        let (ps, vs) = (Vector3::from(p_s), Vector3::from(v_s));
        let px = ecef(lat, lon, alt);
        let vx = horiz + up * vz;
        let up_dopp = k * (vs - vx).dot(&(px - ps)) / (px - ps).norm();
        let px_hat = ecef(lat, lon, 0.0);
        let ps_hat = Vector3::new(
            GEOSTATIONARY_RADIUS * 64.5f64.to_radians().cos(),
            GEOSTATIONARY_RADIUS * 64.5f64.to_radians().sin(),
            0.0,
        );
        let comp = k * horiz.dot(&(px_hat - ps_hat)) / (px_hat - ps_hat).norm();
        let ges = ecef(-31.8024, 115.8875, 0.0);
        let down = kd * vs.dot(&(ges - ps)) / (ges - ps).norm();
        up_dopp + comp + down + det + bias
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(10_000))]

        #[test]
        fn perfect_knowledge_cancels(lat in -80.0f64..80.0, lon in -180.0f64..180.0,
                                     speed in 0.0f64..300.0, track in 0.0f64..360.0) {
            let cfg = ChannelConfig::default();
            let slot = NominalSlot::default();
            let a = aircraft(lat, lon, 0.0, speed, track, 0.0);
            let sat = parked_at_slot(&slot);
            let sum = uplink_doppler(&a, &sat, &cfg).unwrap() + aes_compensation(&a, &slot, &cfg);
            prop_assert!(sum.abs() < 1e-9, "{}", sum);
        }
    }

    proptest! {
        #[test]
        fn matches_scripted_oracle(lat in -60.0f64..60.0, lon in 20.0f64..110.0, alt in 0.0f64..12_000.0,
                                   speed in 0.0f64..280.0, track in 0.0f64..360.0, vz in -100.0f64..30.0,
                                   slat in -2.0f64..2.0, slon in 63.0f64..66.0,
                                   vs in prop::array::uniform3(-90.0f64..90.0), det in -30.0f64..30.0, bias in 100.0f64..200.0) {
            let cfg = ChannelConfig::default();
            let slot = NominalSlot::default();
            let (ss, cs) = slat.to_radians().sin_cos();
            let p_s = EcefVector::new(GEOSTATIONARY_RADIUS * cs * slon.to_radians().cos(), GEOSTATIONARY_RADIUS * cs * slon.to_radians().sin(), GEOSTATIONARY_RADIUS * ss);
            let sat = SatelliteState { position: p_s, velocity: EcefVector::new(vs[0], vs[1], vs[2]) };
            let corrections = CorrectionTable::new(vec![
                CorrectionRow { time: t().add_seconds(-1.0), delta_f: det },
                CorrectionRow { time: t().add_seconds(1.0), delta_f: det },
            ]).unwrap();
            let a = aircraft(lat, lon, alt, speed, track, vz);
            let (f, terms) = predict_bfo(&a, &sat, &corrections, bias, &slot, &cfg).unwrap();
            let oracle = scripted_bfo(lat, lon, alt, speed, track, vz, [p_s.x, p_s.y, p_s.z], vs, det, bias);
            prop_assert!((f - oracle).abs() < 1e-6, "{} vs {}", f, oracle);
            prop_assert_eq!(f, terms.total());
        }

        #[test]
        fn linear_in_bias(bias in -500.0f64..500.0, lat in -60.0f64..60.0) {
            let cfg = ChannelConfig::default();
            let slot = NominalSlot::default();
            let sat = SatelliteState { position: nominal_satellite_position(&slot), velocity: EcefVector::new(1.0, -2.0, 40.0) };
            let a = aircraft(lat, 90.0, 10_000.0, 230.0, 200.0, -20.0);
            let (f0, _) = predict_bfo(&a, &sat, &zero_corrections(), 0.0, &slot, &cfg).unwrap();
            let (f1, _) = predict_bfo(&a, &sat, &zero_corrections(), bias, &slot, &cfg).unwrap();
            prop_assert!((f1 - f0 - bias).abs() < 1e-9);
        }

        #[test]
        fn vertical_doppler_odd_and_monotone(vz in 0.01f64..200.0, e1 in 0.0f64..90.0, e2 in 0.0f64..90.0) {
            let cfg = ChannelConfig::default();
            prop_assert_eq!(vertical_doppler(-vz, e1, &cfg), -vertical_doppler(vz, e1, &cfg));
            let (lo, hi) = if e1 <= e2 { (e1, e2) } else { (e2, e1) };
            prop_assert!(vertical_doppler(vz, lo, &cfg) <= vertical_doppler(vz, hi, &cfg));
        }

        #[test]
        fn uplink_odd_in_relative_velocity(lat in -60.0f64..60.0, lon in 30.0f64..100.0, speed in 0.0f64..250.0,
                                           track in 0.0f64..360.0, vz in -50.0f64..50.0) {
            let cfg = ChannelConfig::default();
            let a = aircraft(lat, lon, 5_000.0, speed, track, vz);
            let v_x = kinematics_to_ecef_velocity(&a.position, &a.kinematics);
            let p_s = nominal_satellite_position(&NominalSlot::default());
            // satellite velocity chosen so that v_s - v_x flips sign
            let fwd = SatelliteState { position: p_s, velocity: v_x + EcefVector::new(3.0, -1.0, 20.0) };
            let rev = SatelliteState { position: p_s, velocity: v_x - EcefVector::new(3.0, -1.0, 20.0) };
            let d1 = uplink_doppler(&a, &fwd, &cfg).unwrap();
            let d2 = uplink_doppler(&a, &rev, &cfg).unwrap();
            prop_assert!((d1 + d2).abs() < 1e-9);
        }
    }

    #[test]
    fn local_frame_is_orthonormal() {
        let p = GeodeticPosition::new(-38.67, 85.11, 0.0).unwrap();
        let f = local_frame(&p);
        assert!((f.east.cross(f.north) - f.up).norm() < 1e-12);
    }
}
