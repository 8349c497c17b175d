//! Complex path coefficients for communication and sensing paths, Doppler,
//! pathloss and RCS.
//!
//! A path coefficient is the polarimetric bilinear form
//! `F_rxᵀ · M · F_tx` times the element phase terms at both ends and the
//! Doppler rotation. `M` is `diag(1, −1)` for direct (LOS) paths and the
//! random-phase XPR matrix for scattered paths.

mod assemble;
pub mod pathloss;
pub mod rcs;

use std::f64::consts::{PI, TAU};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{angles_from_vector, direction_vector, wrap_pi, SphericalAngles, Vec3};
use crate::SPEED_OF_LIGHT;

pub use assemble::{
    assemble_link, ChannelRealization, CommTap, LinkAssembly, LinkId, RealizationMetadata,
    SensingTap, SensingTarget, Stage,
};
pub use pathloss::{
    freespace_pathloss_db, radar_equation_pathloss_db, sensing_pathloss, PathlossModel,
};
pub use rcs::{sample_rcs, DbsmRange, RcsClass, RcsModel};

/// Element field pattern returning `(F_θ, F_φ)` per direction.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "type")]
pub enum FieldPattern {
    /// `(1, 0)` in every direction.
    #[default]
    Isotropic,
    /// Direction-independent components.
    Fixed { theta: f64, phi: f64 },
    /// TR 38.901 single-element sector pattern (8 dBi, 65° beamwidth)
    /// with boresight at the given azimuth in the horizontal plane and a
    /// polarization slant angle, both radians.
    Sector { boresight_azimuth: f64, slant: f64 },
}

impl FieldPattern {
    pub fn field(&self, dir: SphericalAngles) -> (f64, f64) {
        match *self {
            FieldPattern::Isotropic => (1.0, 0.0),
            FieldPattern::Fixed { theta, phi } => (theta, phi),
            FieldPattern::Sector {
                boresight_azimuth,
                slant,
            } => {
                let zen_deg = dir.zenith.to_degrees();
                let az_deg = wrap_pi(dir.azimuth - boresight_azimuth).to_degrees();
                let vertical = -(12.0 * ((zen_deg - 90.0) / 65.0).powi(2)).min(30.0);
                let horizontal = -(12.0 * (az_deg / 65.0).powi(2)).min(30.0);
                let gain_db = 8.0 - (-(vertical + horizontal)).min(30.0);
                let amp = 10f64.powf(gain_db / 20.0);
                (amp * slant.cos(), amp * slant.sin())
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct AntennaElement {
    /// Position relative to the array reference point, meters.
    pub offset: Vec3,
    pub pattern: FieldPattern,
}

impl AntennaElement {
    pub fn isotropic_at(offset: Vec3) -> Self {
        Self {
            offset,
            pattern: FieldPattern::Isotropic,
        }
    }
}

/// Polarization coupling of a path.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Polarization {
    /// `diag(1, −1)`.
    Direct,
    /// `[[e^{jΦθθ}, √(1/κ)e^{jΦθφ}], [√(1/κ)e^{jΦφθ}, e^{jΦφφ}]]`.
    Scattered { xpr: f64, phases: [f64; 4] },
}

impl Polarization {
    fn bilinear(&self, rx: (f64, f64), tx: (f64, f64)) -> Result<Complex64> {
        match *self {
            Polarization::Direct => Ok(Complex64::new(rx.0 * tx.0 - rx.1 * tx.1, 0.0)),
            Polarization::Scattered { xpr, phases } => {
                if !(xpr > 0.0) {
                    return Err(Error::invalid(format!("XPR must be positive, got {xpr}")));
                }
                let cross = (1.0 / xpr).sqrt();
                let e = |p: f64| Complex64::from_polar(1.0, p);
                let m00 = e(phases[0]);
                let m01 = e(phases[1]) * cross;
                let m10 = e(phases[2]) * cross;
                let m11 = e(phases[3]);
                Ok(rx.0 * (m00 * tx.0 + m01 * tx.1) + rx.1 * (m10 * tx.0 + m11 * tx.1))
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PathCoefficient {
    pub value: Complex64,
    /// Seconds.
    pub delay: f64,
    /// Hz.
    pub doppler: f64,
}

/// Direction pair of one path, as seen from each end.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PathDirections {
    /// Leaving the transmitter.
    pub departure: SphericalAngles,
    /// Arriving at the receiver (pointing from the receiver outward).
    pub arrival: SphericalAngles,
}

/// Evaluates `F_rxᵀ M F_tx · e^{j2π r̂_txᵀd_tx/λ} · e^{j2π r̂_rxᵀd_rx/λ} · e^{j2πνt}`.
pub fn path_value(
    rx: &AntennaElement,
    tx: &AntennaElement,
    dirs: PathDirections,
    pol: Polarization,
    doppler: f64,
    t: f64,
    wavelength: f64,
) -> Result<Complex64> {
    let r_tx = direction_vector(dirs.departure);
    let r_rx = direction_vector(dirs.arrival);
    let pol_term = pol.bilinear(
        rx.pattern.field(dirs.arrival),
        tx.pattern.field(dirs.departure),
    )?;
    let phase = TAU * (r_tx.dot(tx.offset) + r_rx.dot(rx.offset)) / wavelength + TAU * doppler * t;
    Ok(pol_term * Complex64::from_polar(1.0, phase))
}

/// Direction pair and leg lengths of an echo off a point target.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EchoGeometry {
    pub directions: PathDirections,
    pub d_tx: f64,
    pub d_sx: f64,
}

impl EchoGeometry {
    pub fn new(tx: Vec3, sx: Vec3, target: Vec3) -> Result<Self> {
        let to_target = target - tx;
        let from_sx = target - sx;
        let (d_tx, d_sx) = (to_target.norm(), from_sx.norm());
        if !(d_tx > 0.0) {
            return Err(Error::ZeroLengthLeg("transmitter to target"));
        }
        if !(d_sx > 0.0) {
            return Err(Error::ZeroLengthLeg("target to sensing receiver"));
        }
        Ok(Self {
            directions: PathDirections {
                departure: angles_from_vector(to_target)?,
                arrival: angles_from_vector(from_sx)?,
            },
            d_tx,
            d_sx,
        })
    }

    pub fn delay(&self) -> f64 {
        (self.d_tx + self.d_sx) / SPEED_OF_LIGHT
    }
}

/// Two-way Doppler `(r̂_tx + r̂_sx)ᵀv̄ / λ` of a moving target.
pub fn sensing_doppler(dirs: PathDirections, velocity: Vec3, wavelength: f64) -> f64 {
    (direction_vector(dirs.departure) + direction_vector(dirs.arrival)).dot(velocity) / wavelength
}

/// Receive-side Doppler `r̂_rxᵀv̄ / λ` of a moving terminal.
pub fn terminal_doppler(arrival: SphericalAngles, velocity: Vec3, wavelength: f64) -> f64 {
    direction_vector(arrival).dot(velocity) / wavelength
}

/// Direct echo off a target: TX element `s`, sensing element `u`.
pub fn los_sensing_coefficient(
    u: &AntennaElement,
    s: &AntennaElement,
    echo: &EchoGeometry,
    velocity: Vec3,
    t: f64,
    wavelength: f64,
) -> Result<PathCoefficient> {
    let doppler = sensing_doppler(echo.directions, velocity, wavelength);
    let value = path_value(
        u,
        s,
        echo.directions,
        Polarization::Direct,
        doppler,
        t,
        wavelength,
    )?;
    Ok(PathCoefficient {
        value,
        delay: echo.delay(),
        doppler,
    })
}

/// One scattered ray of a sensing cluster.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RayPath {
    pub directions: PathDirections,
    pub xpr: f64,
    pub phases: [f64; 4],
    pub delay: f64,
}

pub fn nlos_sensing_coefficient(
    u: &AntennaElement,
    s: &AntennaElement,
    ray: &RayPath,
    velocity: Vec3,
    t: f64,
    wavelength: f64,
) -> Result<PathCoefficient> {
    let doppler = sensing_doppler(ray.directions, velocity, wavelength);
    let value = path_value(
        u,
        s,
        ray.directions,
        Polarization::Scattered {
            xpr: ray.xpr,
            phases: ray.phases,
        },
        doppler,
        t,
        wavelength,
    )?;
    Ok(PathCoefficient {
        value,
        delay: ray.delay,
        doppler,
    })
}

/// A communication path: the direct ray or one scattered ray.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum CommPath {
    Direct {
        directions: PathDirections,
        delay: f64,
    },
    Scattered(RayPath),
}

/// Communication analog of the sensing coefficients with RX in place of SX.
/// Doppler follows the terminal velocity on the receive side.
pub fn comm_channel_coefficient(
    rx: &AntennaElement,
    tx: &AntennaElement,
    path: &CommPath,
    ut_velocity: Vec3,
    t: f64,
    wavelength: f64,
) -> Result<PathCoefficient> {
    let (dirs, pol, delay) = match *path {
        CommPath::Direct { directions, delay } => (directions, Polarization::Direct, delay),
        CommPath::Scattered(ray) => (
            ray.directions,
            Polarization::Scattered {
                xpr: ray.xpr,
                phases: ray.phases,
            },
            ray.delay,
        ),
    };
    let doppler = terminal_doppler(dirs.arrival, ut_velocity, wavelength);
    let value = path_value(rx, tx, dirs, pol, doppler, t, wavelength)?;
    Ok(PathCoefficient {
        value,
        delay,
        doppler,
    })
}

/// Half-wavelength uniform linear array along y.
pub fn half_wavelength_ula(n: usize, wavelength: f64) -> Vec<Vec3> {
    (0..n)
        .map(|i| Vec3::new(0.0, i as f64 * wavelength / 2.0, 0.0))
        .collect()
}

/// Uniform rectangular array in the y-z plane with the given spacing.
pub fn uniform_rectangular_array(rows: usize, cols: usize, spacing: f64) -> Vec<Vec3> {
    (0..rows)
        .flat_map(|r| {
            (0..cols).map(move |c| Vec3::new(0.0, c as f64 * spacing, r as f64 * spacing))
        })
        .collect()
}

/// Phase (radians, in `(−π, π]`) of a complex value.
pub fn phase_of(v: Complex64) -> f64 {
    let p = v.arg();
    if p <= -PI {
        p + TAU
    } else {
        p
    }
}
