//! Cartesian and spherical primitives.
//!
//! Zenith is measured from +z (0 points straight up) and azimuth from +x
//! toward +y. All angles are radians; degrees appear only at I/O edges.

use std::f64::consts::{PI, TAU};
use std::ops::{Add, AddAssign, Div, Mul, Neg, Sub};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Vec3 {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl Vec3 {
    pub const ZERO: Vec3 = Vec3::new(0.0, 0.0, 0.0);

    pub const fn new(x: f64, y: f64, z: f64) -> Self {
        Self { x, y, z }
    }

    pub fn dot(self, other: Vec3) -> f64 {
        self.x * other.x + self.y * other.y + self.z * other.z
    }

    pub fn norm_squared(self) -> f64 {
        self.dot(self)
    }

    pub fn norm(self) -> f64 {
        self.norm_squared().sqrt()
    }

    pub fn distance(self, other: Vec3) -> f64 {
        (self - other).norm()
    }

    /// Horizontal (x-y plane) distance.
    pub fn distance_2d(self, other: Vec3) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }

    /// Unit vector along `self`, or an error for the zero vector.
    pub fn normalized(self) -> Result<Vec3> {
        let n = self.norm();
        if n == 0.0 || !n.is_finite() {
            return Err(Error::DegenerateDirection);
        }
        Ok(self / n)
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite() && self.z.is_finite()
    }

    pub fn to_array(self) -> [f64; 3] {
        [self.x, self.y, self.z]
    }
}

impl From<[f64; 3]> for Vec3 {
    fn from(v: [f64; 3]) -> Self {
        Vec3::new(v[0], v[1], v[2])
    }
}

impl Add for Vec3 {
    type Output = Vec3;
    fn add(self, o: Vec3) -> Vec3 {
        Vec3::new(self.x + o.x, self.y + o.y, self.z + o.z)
    }
}

impl AddAssign for Vec3 {
    fn add_assign(&mut self, o: Vec3) {
        *self = *self + o;
    }
}

impl Sub for Vec3 {
    type Output = Vec3;
    fn sub(self, o: Vec3) -> Vec3 {
        Vec3::new(self.x - o.x, self.y - o.y, self.z - o.z)
    }
}

impl Mul<f64> for Vec3 {
    type Output = Vec3;
    fn mul(self, s: f64) -> Vec3 {
        Vec3::new(self.x * s, self.y * s, self.z * s)
    }
}

impl Div<f64> for Vec3 {
    type Output = Vec3;
    fn div(self, s: f64) -> Vec3 {
        Vec3::new(self.x / s, self.y / s, self.z / s)
    }
}

impl Neg for Vec3 {
    type Output = Vec3;
    fn neg(self) -> Vec3 {
        Vec3::new(-self.x, -self.y, -self.z)
    }
}

/// A direction in spherical coordinates.
///
/// Construction through [`SphericalAngles::new`] wraps azimuth into
/// `[0, 2π)` and clamps zenith into `[0, π]`.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct SphericalAngles {
    pub azimuth: f64,
    pub zenith: f64,
}

impl SphericalAngles {
    pub fn new(azimuth: f64, zenith: f64) -> Self {
        Self {
            azimuth: wrap_two_pi(azimuth),
            zenith: zenith.clamp(0.0, PI),
        }
    }

    pub fn from_degrees(azimuth_deg: f64, zenith_deg: f64) -> Self {
        Self::new(azimuth_deg.to_radians(), zenith_deg.to_radians())
    }

    /// Adds angular offsets and renormalizes.
    pub fn offset(self, d_azimuth: f64, d_zenith: f64) -> Self {
        Self::new(self.azimuth + d_azimuth, self.zenith + d_zenith)
    }
}

/// Wraps an angle into `[0, 2π)`.
pub fn wrap_two_pi(a: f64) -> f64 {
    let w = a.rem_euclid(TAU);
    // rem_euclid can round up to exactly TAU for tiny negative inputs
    if w >= TAU {
        0.0
    } else {
        w
    }
}

/// Wraps an angle into `(-π, π]`.
pub fn wrap_pi(a: f64) -> f64 {
    let w = wrap_two_pi(a);
    if w > PI {
        w - TAU
    } else {
        w
    }
}

/// Unit vector `(cos φ sin θ, sin φ sin θ, cos θ)` for azimuth φ and zenith θ.
pub fn direction_vector(angles: SphericalAngles) -> Vec3 {
    let (sin_az, cos_az) = angles.azimuth.sin_cos();
    let (sin_zen, cos_zen) = angles.zenith.sin_cos();
    Vec3::new(cos_az * sin_zen, sin_az * sin_zen, cos_zen)
}

/// Inverse of [`direction_vector`] for any nonzero vector.
pub fn angles_from_vector(v: Vec3) -> Result<SphericalAngles> {
    let u = v.normalized()?;
    let zenith = u.z.clamp(-1.0, 1.0).acos();
    let azimuth = u.y.atan2(u.x);
    Ok(SphericalAngles::new(azimuth, zenith))
}

/// Great-circle angle between two directions, in radians.
pub fn angle_between(a: Vec3, b: Vec3) -> f64 {
    let cross = Vec3::new(
        a.y * b.z - a.z * b.y,
        a.z * b.x - a.x * b.z,
        a.x * b.y - a.y * b.x,
    );
    cross.norm().atan2(a.dot(b))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::FRAC_PI_2;
    use std::f64::consts::FRAC_PI_4;

    fn close(a: Vec3, b: Vec3, tol: f64) -> bool {
        (a.x - b.x).abs() <= tol && (a.y - b.y).abs() <= tol && (a.z - b.z).abs() <= tol
    }

    #[test]
    fn axis_aligned_directions() {
        let x = direction_vector(SphericalAngles::new(0.0, FRAC_PI_2));
        assert!(close(x, Vec3::new(1.0, 0.0, 0.0), 1e-15));
        let y = direction_vector(SphericalAngles::new(FRAC_PI_2, FRAC_PI_2));
        assert!(close(y, Vec3::new(0.0, 1.0, 0.0), 1e-15));
    }

    #[test]
    fn diagonal_direction() {
        let v = direction_vector(SphericalAngles::new(FRAC_PI_4, FRAC_PI_4));
        assert!(close(
            v,
            Vec3::new(0.5, 0.5, std::f64::consts::FRAC_1_SQRT_2),
            1e-12
        ));
        assert!((v.norm() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn angles_of_axes() {
        let up = angles_from_vector(Vec3::new(0.0, 0.0, 1.0)).unwrap();
        assert_eq!((up.azimuth, up.zenith), (0.0, 0.0));
        let back = angles_from_vector(Vec3::new(-1.0, 0.0, 0.0)).unwrap();
        assert!((back.azimuth - PI).abs() < 1e-15);
        assert!((back.zenith - FRAC_PI_2).abs() < 1e-15);
    }

    #[test]
    fn diagonal_round_trip() {
        let a = angles_from_vector(Vec3::new(0.5, 0.5, std::f64::consts::FRAC_1_SQRT_2)).unwrap();
        assert!((a.azimuth - FRAC_PI_4).abs() < 1e-5);
        assert!((a.zenith - FRAC_PI_4).abs() < 1e-5);
    }

    #[test]
    fn zero_vector_is_rejected() {
        assert!(matches!(
            angles_from_vector(Vec3::ZERO),
            Err(Error::DegenerateDirection)
        ));
    }

    #[test]
    fn normalization_of_constructor() {
        let a = SphericalAngles::new(-FRAC_PI_2, 4.0);
        assert!((a.azimuth - 3.0 * FRAC_PI_2).abs() < 1e-15);
        assert_eq!(a.zenith, PI);
        assert_eq!(wrap_two_pi(-1e-300), 0.0);
        assert!((wrap_pi(3.0 * FRAC_PI_2) + FRAC_PI_2).abs() < 1e-15);
        assert_eq!(wrap_pi(PI), PI);
    }

    #[test]
    fn great_circle_angle() {
        let a = Vec3::new(1.0, 0.0, 0.0);
        let b = Vec3::new(0.0, 1.0, 0.0);
        assert!((angle_between(a, b) - FRAC_PI_2).abs() < 1e-15);
        assert!(angle_between(a, a).abs() < 1e-15);
    }
}
