//! Closed-form inclined, slightly eccentric geosynchronous orbit.
//!
//! Used to build ephemeris fixtures and as a truth model in tests. The orbit
//! is Keplerian with the Earth's sidereal rate as mean motion; eccentricity
//! enters to first order (radius and along-track harmonics).

use crate::error::Result;
use crate::geodesy::EcefVector;
use crate::satellite::{EphemerisRow, EphemerisTable, SatelliteSource, SatelliteState, GEOSTATIONARY_RADIUS};
use crate::time::UtcTime;

/// Earth rotation rate, rad/s.
pub const EARTH_ROTATION_RATE: f64 = 7.292_115_146_7e-5;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InclinedGeoOrbit {
    pub radius: f64,
    pub inclination_deg: f64,
    /// Instant of the ascending-node crossing.
    pub node_time: UtcTime,
    /// Longitude of the sub-satellite point at the ascending node, degrees east.
    pub node_longitude_deg: f64,
    pub eccentricity: f64,
    /// Instant of perigee passage (only meaningful with eccentricity > 0).
    pub perigee_time: UtcTime,
}

impl Default for InclinedGeoOrbit {
    /// Roughly the geometry of an ageing Indian Ocean geosynchronous relay in
    /// early March 2014: 1.65 deg inclination, drifting about 64.5 E.
    fn default() -> Self {
        let node_time = UtcTime::ymd_hms(2014, 3, 7, 13, 30, 0);
        Self {
            radius: GEOSTATIONARY_RADIUS,
            inclination_deg: 1.65,
            node_time,
            node_longitude_deg: 64.5,
            eccentricity: 0.0,
            perigee_time: node_time,
        }
    }
}

impl InclinedGeoOrbit {
    pub fn state(&self, t: UtcTime) -> SatelliteState {
        let w = EARTH_ROTATION_RATE;
        let since_node = t.seconds_since(self.node_time);
        let mean_anomaly = w * t.seconds_since(self.perigee_time);
        let e = self.eccentricity;

        let rho = self.radius * (1.0 - e * mean_anomaly.cos());
        let rho_dot = self.radius * e * w * mean_anomaly.sin();
        let u = w * since_node + 2.0 * e * mean_anomaly.sin();
        let u_dot = w * (1.0 + 2.0 * e * mean_anomaly.cos());

        let (si, ci) = self.inclination_deg.to_radians().sin_cos();
        let p_axis = EcefVector::new(1.0, 0.0, 0.0);
        let q_axis = EcefVector::new(0.0, ci, si);
        let (su, cu) = u.sin_cos();
        let radial = p_axis * cu + q_axis * su;
        let transverse = q_axis * cu - p_axis * su;
        let r_inertial = radial * rho;
        let v_inertial = radial * rho_dot + transverse * (rho * u_dot);

        // Earth-fixed frame lags the inertial one by the sidereal angle.
        let theta = w * since_node - self.node_longitude_deg.to_radians();
        let position = r_inertial.rotate_z(-theta);
        let spin = EcefVector::new(0.0, 0.0, w);
        let velocity = v_inertial.rotate_z(-theta) - spin.cross(position);
        SatelliteState { position, velocity }
    }

    /// Samples the orbit every `step` seconds over `[start, end]` (inclusive
    /// when `end - start` is a multiple of `step`).
    pub fn tabulate(&self, start: UtcTime, end: UtcTime, step: f64) -> Result<EphemerisTable> {
        let n = (end.seconds_since(start) / step).floor() as usize;
        let rows = (0..=n)
            .map(|i| {
                let time = start.add_seconds(i as f64 * step);
                let s = self.state(time);
                EphemerisRow {
                    time,
                    position: s.position,
                    velocity: s.velocity,
                }
            })
            .collect();
        EphemerisTable::new(rows)
    }
}

impl SatelliteSource for InclinedGeoOrbit {
    fn state_at(&self, t: UtcTime) -> Result<SatelliteState> {
        Ok(self.state(t))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_inclination_circular_is_stationary() {
        let orbit = InclinedGeoOrbit {
            inclination_deg: 0.0,
            ..Default::default()
        };
        let a = orbit.state(orbit.node_time);
        let b = orbit.state(orbit.node_time.add_seconds(20_000.0));
        assert!((a.position - b.position).norm() < 1e-3);
        assert!(a.velocity.norm() < 1e-6);
        let lon = a.position.y.atan2(a.position.x).to_degrees();
        assert!((lon - 64.5).abs() < 1e-9);
    }

    #[test]
    fn latitude_peaks_a_quarter_period_after_node() {
        let orbit = InclinedGeoOrbit::default();
        let quarter = std::f64::consts::FRAC_PI_2 / EARTH_ROTATION_RATE;
        let s = orbit.state(orbit.node_time.add_seconds(quarter));
        let lat = (s.position.z / s.position.norm()).asin().to_degrees();
        assert!((lat - 1.65).abs() < 1e-6);
        assert!(s.velocity.z.abs() < 1e-3);
    }

    #[test]
    fn velocity_is_derivative_of_position() {
        let orbit = InclinedGeoOrbit {
            eccentricity: 3e-4,
            perigee_time: UtcTime::ymd_hms(2014, 3, 7, 2, 0, 0),
            ..Default::default()
        };
        for k in 0..48 {
            let t = orbit.node_time.add_seconds(k as f64 * 1800.0);
            let dt = 1.0;
            let fd = (orbit.state(t.add_seconds(dt)).position - orbit.state(t.add_seconds(-dt)).position) * (0.5 / dt);
            assert!((fd - orbit.state(t).velocity).norm() < 1e-4);
        }
    }
}
