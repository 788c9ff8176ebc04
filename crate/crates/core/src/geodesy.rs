//! WGS84 geodesy: geodetic/ECEF conversion, local-level kinematics and
//! line-of-sight elevation.

use std::ops::{Add, Mul, Neg, Sub};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// WGS84 semi-major axis, meters.
pub const WGS84_A: f64 = 6_378_137.0;
/// WGS84 flattening.
pub const WGS84_F: f64 = 1.0 / 298.257_223_563;
/// WGS84 semi-minor axis, meters.
pub const WGS84_B: f64 = WGS84_A * (1.0 - WGS84_F);
/// First eccentricity squared.
pub const WGS84_E2: f64 = WGS84_F * (2.0 - WGS84_F);

/// Earth-centered Earth-fixed vector. Meters for positions, m/s for velocities.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct EcefVector {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl EcefVector {
    pub const ZERO: EcefVector = EcefVector::new(0.0, 0.0, 0.0);

    pub const fn new(x: f64, y: f64, z: f64) -> Self {
        Self { x, y, z }
    }

    pub fn dot(self, other: EcefVector) -> f64 {
        self.x * other.x + self.y * other.y + self.z * other.z
    }

    pub fn cross(self, other: EcefVector) -> EcefVector {
        EcefVector::new(
            self.y * other.z - self.z * other.y,
            self.z * other.x - self.x * other.z,
            self.x * other.y - self.y * other.x,
        )
    }

    pub fn norm(self) -> f64 {
        self.dot(self).sqrt()
    }

    /// Unit vector, or `None` for the zero vector.
    pub fn unit(self) -> Option<EcefVector> {
        let n = self.norm();
        (n > 0.0).then(|| self * (1.0 / n))
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite() && self.z.is_finite()
    }

    /// Rotation about the Earth's polar axis by `angle` radians (east positive).
    pub fn rotate_z(self, angle: f64) -> EcefVector {
        let (s, c) = angle.sin_cos();
        EcefVector::new(c * self.x - s * self.y, s * self.x + c * self.y, self.z)
    }
}

impl Add for EcefVector {
    type Output = EcefVector;
    fn add(self, o: EcefVector) -> EcefVector {
        EcefVector::new(self.x + o.x, self.y + o.y, self.z + o.z)
    }
}

impl Sub for EcefVector {
    type Output = EcefVector;
    fn sub(self, o: EcefVector) -> EcefVector {
        EcefVector::new(self.x - o.x, self.y - o.y, self.z - o.z)
    }
}

impl Neg for EcefVector {
    type Output = EcefVector;
    fn neg(self) -> EcefVector {
        EcefVector::new(-self.x, -self.y, -self.z)
    }
}

impl Mul<f64> for EcefVector {
    type Output = EcefVector;
    fn mul(self, k: f64) -> EcefVector {
        EcefVector::new(self.x * k, self.y * k, self.z * k)
    }
}

/// Latitude/longitude in degrees, altitude in meters above the ellipsoid.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GeodeticPosition {
    latitude: f64,
    longitude: f64,
    altitude: f64,
}

impl GeodeticPosition {
    /// Longitude is wrapped into (-180, 180]; latitude must lie in [-90, 90].
    pub fn new(latitude: f64, longitude: f64, altitude: f64) -> Result<Self> {
        if !(latitude.is_finite() && longitude.is_finite() && altitude.is_finite()) {
            return Err(Error::InvalidInput("non-finite geodetic coordinate".into()));
        }
        if !(-90.0..=90.0).contains(&latitude) {
            return Err(Error::InvalidInput(format!("latitude {latitude} outside [-90, 90]")));
        }
        Ok(Self {
            latitude,
            longitude: wrap_longitude(longitude),
            altitude,
        })
    }

    pub fn latitude(&self) -> f64 {
        self.latitude
    }

    pub fn longitude(&self) -> f64 {
        self.longitude
    }

    pub fn altitude(&self) -> f64 {
        self.altitude
    }

    pub fn with_altitude(self, altitude: f64) -> Self {
        Self { altitude, ..self }
    }
}

fn wrap_longitude(lon: f64) -> f64 {
    let w = (lon + 180.0).rem_euclid(360.0) - 180.0;
    if w == -180.0 {
        180.0
    } else {
        w
    }
}

/// Horizontal and vertical motion relative to the local level frame.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GroundKinematics {
    ground_speed: f64,
    track_angle: f64,
    vertical_rate: f64,
}

impl GroundKinematics {
    /// `ground_speed` in m/s (>= 0), `track_angle` in degrees clockwise from
    /// true north (wrapped into [0, 360)), `vertical_rate` in m/s, up positive.
    pub fn new(ground_speed: f64, track_angle: f64, vertical_rate: f64) -> Result<Self> {
        if !(ground_speed.is_finite() && track_angle.is_finite() && vertical_rate.is_finite()) {
            return Err(Error::InvalidInput("non-finite kinematics".into()));
        }
        if ground_speed < 0.0 {
            return Err(Error::InvalidInput(format!("negative ground speed {ground_speed}")));
        }
        let track_angle = track_angle.rem_euclid(360.0);
        Ok(Self {
            ground_speed,
            // rem_euclid can round up to exactly 360 for tiny negative inputs
            track_angle: if track_angle >= 360.0 { 0.0 } else { track_angle },
            vertical_rate,
        })
    }

    pub fn stationary() -> Self {
        Self {
            ground_speed: 0.0,
            track_angle: 0.0,
            vertical_rate: 0.0,
        }
    }

    pub fn ground_speed(&self) -> f64 {
        self.ground_speed
    }

    pub fn track_angle(&self) -> f64 {
        self.track_angle
    }

    pub fn vertical_rate(&self) -> f64 {
        self.vertical_rate
    }

    pub fn level(self) -> Self {
        Self {
            vertical_rate: 0.0,
            ..self
        }
    }
}

/// East, north and up unit vectors at a geodetic position (ellipsoidal normal).
#[derive(Debug, Clone, Copy)]
pub struct LocalFrame {
    pub east: EcefVector,
    pub north: EcefVector,
    pub up: EcefVector,
}

pub fn local_frame(p: &GeodeticPosition) -> LocalFrame {
    let (slat, clat) = p.latitude.to_radians().sin_cos();
    let (slon, clon) = p.longitude.to_radians().sin_cos();
    LocalFrame {
        east: EcefVector::new(-slon, clon, 0.0),
        north: EcefVector::new(-slat * clon, -slat * slon, clat),
        up: EcefVector::new(clat * clon, clat * slon, slat),
    }
}

pub fn geodetic_to_ecef(p: &GeodeticPosition) -> EcefVector {
    let (slat, clat) = p.latitude.to_radians().sin_cos();
    let (slon, clon) = p.longitude.to_radians().sin_cos();
    let n = WGS84_A / (1.0 - WGS84_E2 * slat * slat).sqrt();
    EcefVector::new(
        (n + p.altitude) * clat * clon,
        (n + p.altitude) * clat * slon,
        (n * (1.0 - WGS84_E2) + p.altitude) * slat,
    )
}

/// Iterative inverse. Converges to well below a nanodegree in a handful of
/// passes for anything from the surface out to geosynchronous altitude.
pub fn ecef_to_geodetic(v: &EcefVector) -> Result<GeodeticPosition> {
    if !v.is_finite() {
        return Err(Error::InvalidInput("non-finite ECEF vector".into()));
    }
    let p = v.x.hypot(v.y);
    if p == 0.0 && v.z == 0.0 {
        return Err(Error::Degenerate("ECEF point at the Earth's center"));
    }
    let longitude = if p == 0.0 { 0.0 } else { v.y.atan2(v.x) };

    let mut lat = v.z.atan2(p * (1.0 - WGS84_E2));
    let mut h = 0.0;
    for _ in 0..32 {
        let (s, c) = lat.sin_cos();
        let n = WGS84_A / (1.0 - WGS84_E2 * s * s).sqrt();
        h = p * c + v.z * s - WGS84_A * WGS84_A / n;
        let next = v.z.atan2(p * (1.0 - WGS84_E2 * n / (n + h)));
        let done = (next - lat).abs() < 1e-15;
        lat = next;
        if done {
            break;
        }
    }
    let (s, c) = lat.sin_cos();
    let n = WGS84_A / (1.0 - WGS84_E2 * s * s).sqrt();
    h = if h.is_finite() {
        p * c + v.z * s - WGS84_A * WGS84_A / n
    } else {
        h
    };
    GeodeticPosition::new(lat.to_degrees(), longitude.to_degrees(), h)
}

/// ECEF velocity for motion described in the local level frame at `p`.
pub fn kinematics_to_ecef_velocity(p: &GeodeticPosition, k: &GroundKinematics) -> EcefVector {
    let frame = local_frame(p);
    let (s, c) = k.track_angle.to_radians().sin_cos();
    frame.east * (k.ground_speed * s) + frame.north * (k.ground_speed * c) + frame.up * k.vertical_rate
}

/// Signed elevation (degrees) of `target` above the local horizontal plane
/// at `observer`.
pub fn elevation_angle(observer: &GeodeticPosition, target: EcefVector) -> Result<f64> {
    let los = target - geodetic_to_ecef(observer);
    let n = los.norm();
    if n == 0.0 {
        return Err(Error::Degenerate("coincident observer and target"));
    }
    let up = local_frame(observer).up;
    let vertical = los.dot(up);
    let horizontal = (los - up * vertical).norm();
    Ok(vertical.atan2(horizontal).to_degrees())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn pos(lat: f64, lon: f64, alt: f64) -> GeodeticPosition {
        GeodeticPosition::new(lat, lon, alt).unwrap()
    }

    fn close(a: EcefVector, b: EcefVector, tol: f64) -> bool {
        (a - b).norm() <= tol
    }

    // Second, independent route through the reduced (parametric) latitude.
    fn ecef_via_reduced_latitude(lat: f64, lon: f64, alt: f64) -> EcefVector {
        let phi = lat.to_radians();
        let lambda = lon.to_radians();
        let beta = ((1.0 - WGS84_F) * phi.tan()).atan();
        let surface_r = WGS84_A * beta.cos();
        let surface_z = WGS84_B * beta.sin();
        EcefVector::new(
            (surface_r + alt * phi.cos()) * lambda.cos(),
            (surface_r + alt * phi.cos()) * lambda.sin(),
            surface_z + alt * phi.sin(),
        )
    }

    #[test]
    fn equator_prime_meridian() {
        let v = geodetic_to_ecef(&pos(0.0, 0.0, 0.0));
        assert!(close(v, EcefVector::new(6_378_137.0, 0.0, 0.0), 1e-9));
    }

    #[test]
    fn north_pole() {
        let v = geodetic_to_ecef(&pos(90.0, 123.0, 0.0));
        assert!(close(v, EcefVector::new(0.0, 0.0, 6_356_752.314_2), 1e-4));
        let g = ecef_to_geodetic(&EcefVector::new(0.0, 0.0, 6_356_752.314_2)).unwrap();
        assert!((g.latitude() - 90.0).abs() < 1e-12);
        assert_eq!(g.longitude(), 0.0);
        assert!(g.altitude().abs() < 1e-4);
    }

    #[test]
    fn inverse_on_semi_major_axis() {
        let g = ecef_to_geodetic(&EcefVector::new(6_378_137.0, 0.0, 0.0)).unwrap();
        assert!(g.latitude().abs() < 1e-12 && g.longitude().abs() < 1e-12);
        assert!(g.altitude().abs() < 1e-9);
    }

    #[test]
    fn southern_indian_ocean_matches_reduced_latitude_route() {
        let v = geodetic_to_ecef(&pos(-38.67, 85.11, 0.0));
        let oracle = ecef_via_reduced_latitude(-38.67, 85.11, 0.0);
        assert!(close(v, oracle, 1e-6), "{v:?} vs {oracle:?}");
        let v = geodetic_to_ecef(&pos(-38.67, 85.11, 10_668.0));
        let oracle = ecef_via_reduced_latitude(-38.67, 85.11, 10_668.0);
        assert!(close(v, oracle, 1e-6));
    }

    #[test]
    fn earth_center_is_degenerate() {
        assert!(matches!(ecef_to_geodetic(&EcefVector::ZERO), Err(Error::Degenerate(_))));
    }

    #[test]
    fn rejects_bad_latitude_and_negative_speed() {
        assert!(GeodeticPosition::new(91.0, 0.0, 0.0).is_err());
        assert!(GeodeticPosition::new(f64::NAN, 0.0, 0.0).is_err());
        assert!(GroundKinematics::new(-1.0, 0.0, 0.0).is_err());
    }

    #[test]
    fn longitude_and_track_wrap() {
        assert_eq!(pos(0.0, -180.0, 0.0).longitude(), 180.0);
        assert_eq!(pos(0.0, 270.0, 0.0).longitude(), -90.0);
        assert_eq!(GroundKinematics::new(1.0, -90.0, 0.0).unwrap().track_angle(), 270.0);
        assert_eq!(GroundKinematics::new(1.0, 360.0, 0.0).unwrap().track_angle(), 0.0);
    }

    #[test]
    fn velocity_examples() {
        let origin = pos(0.0, 0.0, 0.0);
        let zero = kinematics_to_ecef_velocity(&origin, &GroundKinematics::stationary());
        assert_eq!(zero, EcefVector::ZERO);
        let east = kinematics_to_ecef_velocity(&origin, &GroundKinematics::new(100.0, 90.0, 0.0).unwrap());
        assert!(close(east, EcefVector::new(0.0, 100.0, 0.0), 1e-12));
        let up = kinematics_to_ecef_velocity(&origin, &GroundKinematics::new(0.0, 0.0, 1.0).unwrap());
        assert!(close(up, EcefVector::new(1.0, 0.0, 0.0), 1e-15));
    }

    #[test]
    fn elevation_examples() {
        let obs = pos(10.0, 20.0, 100.0);
        let frame = local_frame(&obs);
        let here = geodetic_to_ecef(&obs);
        let zenith = here + frame.up * 3.0e7;
        assert!((elevation_angle(&obs, zenith).unwrap() - 90.0).abs() < 1e-9);
        let horizon = here + frame.north * 1.0e6 + frame.east * 2.0e6;
        assert!(elevation_angle(&obs, horizon).unwrap().abs() < 1e-9);
        assert!(matches!(elevation_angle(&obs, here), Err(Error::Degenerate(_))));
    }

    #[test]
    fn surface_radius_between_polar_and_equatorial() {
        for lat in (-90..=90).step_by(5) {
            let r = geodetic_to_ecef(&pos(lat as f64, 37.0, 0.0)).norm();
            assert!((WGS84_B - 1e-6..=WGS84_A + 1e-6).contains(&r));
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(1000))]

        #[test]
        fn round_trip(lat in -90.0f64..=90.0, lon in -179.999f64..=180.0, alt in -1_000.0f64..4.3e7) {
            let p = pos(lat, lon, alt);
            let back = ecef_to_geodetic(&geodetic_to_ecef(&p)).unwrap();
            prop_assert!((back.latitude() - lat).abs() < 1e-9);
            if lat.abs() < 90.0 - 1e-9 {
                let dlon = (back.longitude() - p.longitude() + 540.0).rem_euclid(360.0) - 180.0;
                prop_assert!(dlon.abs() < 1e-9);
            }
            prop_assert!((back.altitude() - alt).abs() < 1e-6, "{} vs {}", back.altitude(), alt);
        }

        #[test]
        fn velocity_is_linear(lat in -89.0f64..89.0, lon in -180.0f64..180.0, track in 0.0f64..360.0,
                              s1 in 0.0f64..300.0, s2 in 0.0f64..300.0, v1 in -100.0f64..100.0, v2 in -100.0f64..100.0) {
            let p = pos(lat, lon, 0.0);
            let f = |s: f64, v: f64| kinematics_to_ecef_velocity(&p, &GroundKinematics::new(s, track, v).unwrap());
            let sum = f(s1 + s2, v1 + v2);
            prop_assert!(close(sum, f(s1, v1) + f(s2, v2), 1e-9));
        }

        #[test]
        fn elevation_invariant_under_axial_rotation(lat in -80.0f64..80.0, lon in -180.0f64..180.0,
                                                   slon in -180.0f64..180.0, slat in -3.0f64..3.0, rot in -3.0f64..3.0) {
            let obs = pos(lat, lon, 0.0);
            let sat = geodetic_to_ecef(&pos(slat, slon, 35_786_000.0));
            let e0 = elevation_angle(&obs, sat).unwrap();
            let rotated_obs = pos(lat, lon + rot.to_degrees(), 0.0);
            let e1 = elevation_angle(&rotated_obs, sat.rotate_z(rot)).unwrap();
            prop_assert!((e0 - e1).abs() < 1e-9);
        }
    }
}
