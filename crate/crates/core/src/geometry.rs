//! Constellation propagation, visibility, receiver-local directions and
//! array steering vectors.
//!
//! The Earth is a non-rotating sphere of radius [`EARTH_RADIUS`]; satellites
//! move on unperturbed circular orbits.

use std::f64::consts::{FRAC_PI_2, PI, TAU};

use nalgebra::{DVector, Matrix3, Vector3};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::constants::{EARTH_RADIUS, L1_FREQUENCY, L1_WAVELENGTH, SPEED_OF_LIGHT};
use crate::{Error, Result};

/// Position or velocity in Earth-centered Earth-fixed coordinates (m, m/s).
pub type EcefVector = Vector3<f64>;

const NOMINAL_ALMANAC: &str = include_str!("../data/nominal_24slot.json");

/// Orbital elements of one satellite on a circular orbit.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AlmanacEntry {
    pub prn: u8,
    pub raan_rad: f64,
    pub inclination_rad: f64,
    pub arg_lat_epoch_rad: f64,
    pub radius_m: f64,
    pub rate_rad_s: f64,
}

impl AlmanacEntry {
    /// Position and velocity at `t` seconds after the almanac epoch.
    pub fn state_at(&self, t: f64) -> (EcefVector, EcefVector) {
        let u = self.arg_lat_epoch_rad + self.rate_rad_s * t;
        let (su, cu) = u.sin_cos();
        let (so, co) = self.raan_rad.sin_cos();
        let (si, ci) = self.inclination_rad.sin_cos();
        let r = self.radius_m;
        let pos = Vector3::new(co * cu - so * su * ci, so * cu + co * su * ci, su * si) * r;
        let vel = Vector3::new(-co * su - so * cu * ci, -so * su + co * cu * ci, cu * si)
            * (r * self.rate_rad_s);
        (pos, vel)
    }

    /// Orbital period, s.
    pub fn period(&self) -> f64 {
        TAU / self.rate_rad_s
    }
}

/// Almanac of satellite trajectories.
#[derive(Debug, Clone, PartialEq)]
pub struct SatelliteAlmanac {
    entries: Vec<AlmanacEntry>,
}

impl SatelliteAlmanac {
    pub fn new(entries: Vec<AlmanacEntry>) -> Result<Self> {
        let mut seen = [false; 33];
        for e in &entries {
            if !(1..=32).contains(&e.prn) {
                return Err(Error::InvalidAlmanac(format!("PRN {} out of 1..=32", e.prn)));
            }
            if seen[e.prn as usize] {
                return Err(Error::InvalidAlmanac(format!("duplicate PRN {}", e.prn)));
            }
            seen[e.prn as usize] = true;
            if !(e.radius_m > 0.0) || !(e.rate_rad_s > 0.0) {
                return Err(Error::InvalidAlmanac(format!(
                    "PRN {}: radius and angular rate must be positive",
                    e.prn
                )));
            }
            let finite = [e.raan_rad, e.inclination_rad, e.arg_lat_epoch_rad, e.radius_m, e.rate_rad_s]
                .iter()
                .all(|v| v.is_finite());
            if !finite {
                return Err(Error::InvalidAlmanac(format!("PRN {}: non-finite element", e.prn)));
            }
        }
        Ok(Self { entries })
    }

    /// Parse the JSON almanac file format (array of [`AlmanacEntry`] objects).
    pub fn from_json(text: &str) -> Result<Self> {
        let entries: Vec<AlmanacEntry> =
            serde_json::from_str(text).map_err(|e| Error::InvalidAlmanac(e.to_string()))?;
        Self::new(entries)
    }

    /// The bundled 24-slot nominal GPS constellation.
    pub fn nominal() -> Self {
        Self::from_json(NOMINAL_ALMANAC).expect("bundled almanac is valid")
    }

    pub fn entries(&self) -> &[AlmanacEntry] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn entry(&self, prn: u8) -> Option<&AlmanacEntry> {
        self.entries.iter().find(|e| e.prn == prn)
    }
}

/// Propagated satellite state.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SatelliteState {
    pub prn: u8,
    pub position: EcefVector,
    pub velocity: EcefVector,
}

/// Propagates every almanac entry to time `t` (s after epoch).
pub fn propagate(almanac: &SatelliteAlmanac, t: f64) -> Vec<SatelliteState> {
    almanac
        .entries()
        .iter()
        .map(|e| {
            let (position, velocity) = e.state_at(t);
            SatelliteState { prn: e.prn, position, velocity }
        })
        .collect()
}

/// True iff `sat` lies strictly above the local horizon plane at `o`.
pub fn visible(o: &EcefVector, sat: &EcefVector) -> bool {
    (sat - o).dot(o) > 0.0
}

/// Elevation/azimuth of a direction in the receiver-local frame.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LocalDirection {
    /// Elevation in [0, pi/2], rad.
    pub elevation: f64,
    /// Azimuth in [-pi, pi), rad.
    pub azimuth: f64,
}

impl LocalDirection {
    pub fn new(elevation: f64, azimuth: f64) -> Self {
        Self { elevation, azimuth }
    }

    /// `v(theta, phi) = [cos t cos p, cos t sin p, sin t]`.
    pub fn unit_vector(&self) -> Vector3<f64> {
        let (st, ct) = self.elevation.sin_cos();
        let (sp, cp) = self.azimuth.sin_cos();
        Vector3::new(ct * cp, ct * sp, st)
    }

    /// Inverse of [`unit_vector`](Self::unit_vector) for upper-hemisphere
    /// vectors. The azimuth is reported as 0 at the zenith.
    pub fn from_unit(v: &Vector3<f64>) -> Result<Self> {
        let n = v.norm();
        let u = v / n;
        if u.z < 0.0 {
            return Err(Error::BelowHorizon);
        }
        let elevation = u.z.clamp(-1.0, 1.0).asin();
        let horizontal = (u.x * u.x + u.y * u.y).sqrt();
        let azimuth = if horizontal < 1e-12 { 0.0 } else { wrap_azimuth(u.y.atan2(u.x)) };
        Ok(Self { elevation, azimuth })
    }
}

/// Maps an angle into [-pi, pi).
pub fn wrap_azimuth(phi: f64) -> f64 {
    let w = (phi + PI).rem_euclid(TAU) - PI;
    if w >= PI {
        w - TAU
    } else {
        w
    }
}

/// Ground truth of the receiver: position, orientation and clock offset.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReceiverTruth {
    pub position: EcefVector,
    /// Rotation from the array-local frame into ECEF.
    pub orientation: Matrix3<f64>,
    /// Receiver clock offset, s.
    pub clock_offset: f64,
}

impl ReceiverTruth {
    /// Receiver on the surface below `up` (any non-zero vector), with the
    /// array lying flat and rotated by `yaw` about the local vertical.
    pub fn on_surface(up: &Vector3<f64>, yaw: f64, clock_offset: f64) -> Self {
        let up = up.normalize();
        let position = up * EARTH_RADIUS;
        Self { position, orientation: enu_frame(&up) * yaw_rotation(yaw), clock_offset }
    }
}

/// Columns are the local east, north and up unit vectors at `up`.
pub fn enu_frame(up: &Vector3<f64>) -> Matrix3<f64> {
    let up = up.normalize();
    let z = Vector3::z();
    let cross = z.cross(&up);
    let east = if cross.norm() < 1e-12 { Vector3::y() } else { cross.normalize() };
    let north = up.cross(&east);
    Matrix3::from_columns(&[east, north, up])
}

fn yaw_rotation(yaw: f64) -> Matrix3<f64> {
    let (s, c) = yaw.sin_cos();
    Matrix3::new(c, -s, 0.0, s, c, 0.0, 0.0, 0.0, 1.0)
}

/// Direction of `sat` as seen in the array-local frame of a receiver at `o`
/// with orientation `q`.
pub fn local_direction(o: &EcefVector, q: &Matrix3<f64>, sat: &EcefVector) -> Result<LocalDirection> {
    let los = (sat - o).normalize();
    LocalDirection::from_unit(&(q.transpose() * los))
}

/// Antenna positions in the array-local frame and the carrier wavelength.
#[derive(Debug, Clone, PartialEq)]
pub struct ArrayGeometry {
    positions: Vec<Vector3<f64>>,
    wavelength: f64,
}

impl ArrayGeometry {
    pub fn new(positions: Vec<Vector3<f64>>, wavelength: f64) -> Result<Self> {
        if positions.len() < 2 {
            return Err(Error::InvalidGeometry("need at least two antennas".into()));
        }
        if !(wavelength > 0.0) {
            return Err(Error::InvalidGeometry("wavelength must be positive".into()));
        }
        for (i, p) in positions.iter().enumerate() {
            if positions[..i].iter().any(|q| (p - q).norm() < 1e-12) {
                return Err(Error::InvalidGeometry(format!("antenna {i} duplicates another")));
            }
        }
        Ok(Self { positions, wavelength })
    }

    /// `antennas` elements on a circle in the xy-plane with neighbouring
    /// antennas half a wavelength apart.
    pub fn half_wavelength_ring(antennas: usize) -> Result<Self> {
        if antennas < 2 {
            return Err(Error::InvalidGeometry("need at least two antennas".into()));
        }
        let spacing = L1_WAVELENGTH / 2.0;
        let radius = if antennas == 2 {
            spacing / 2.0
        } else {
            spacing / (2.0 * (PI / antennas as f64).sin())
        };
        let positions = (0..antennas)
            .map(|b| {
                let ang = TAU * b as f64 / antennas as f64;
                Vector3::new(radius * ang.cos(), radius * ang.sin(), 0.0)
            })
            .collect();
        Self::new(positions, L1_WAVELENGTH)
    }

    pub fn antennas(&self) -> usize {
        self.positions.len()
    }

    pub fn positions(&self) -> &[Vector3<f64>] {
        &self.positions
    }

    pub fn wavelength(&self) -> f64 {
        self.wavelength
    }
}

/// `a_b = exp(-i 2 pi p_b^T v / lambda)`.
pub fn steering_vector(geom: &ArrayGeometry, dir: &LocalDirection) -> DVector<Complex64> {
    steering_for_unit(geom, &dir.unit_vector())
}

/// Steering vector for an arbitrary local unit vector.
pub fn steering_for_unit(geom: &ArrayGeometry, v: &Vector3<f64>) -> DVector<Complex64> {
    let k = -TAU / geom.wavelength;
    DVector::from_iterator(
        geom.antennas(),
        geom.positions.iter().map(|p| Complex64::from_polar(1.0, k * p.dot(v))),
    )
}

/// Geometric range, signal delay and Doppler of one satellite.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RangeDelayDoppler {
    /// ||sat - o||, m.
    pub range: f64,
    /// range / c + receiver clock offset, s.
    pub delay: f64,
    /// Carrier Doppler at L1, Hz.
    pub doppler: f64,
}

pub fn range_delay_doppler(
    o: &EcefVector,
    clock_offset: f64,
    sat_pos: &EcefVector,
    sat_vel: &EcefVector,
) -> RangeDelayDoppler {
    let los = sat_pos - o;
    let range = los.norm();
    let radial_velocity = sat_vel.dot(&los) / range;
    RangeDelayDoppler {
        range,
        delay: range / SPEED_OF_LIGHT + clock_offset,
        doppler: -radial_velocity / SPEED_OF_LIGHT * L1_FREQUENCY,
    }
}

/// Elevation above the local horizon of `sat` at `o` (rad, may be negative).
pub fn elevation(o: &EcefVector, sat: &EcefVector) -> f64 {
    let los = (sat - o).normalize();
    los.dot(&o.normalize()).clamp(-1.0, 1.0).asin().min(FRAC_PI_2)
}
