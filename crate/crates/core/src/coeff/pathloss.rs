//! Communication pathloss models and the bistatic radar-equation pathloss.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scenario::{PropagationCondition, ScenarioKind};
use crate::SPEED_OF_LIGHT;

/// Free-space pathloss `20·log10(4πd/λ)` in dB.
pub fn freespace_pathloss_db(d: f64, wavelength: f64) -> Result<f64> {
    if !(d > 0.0) {
        return Err(Error::invalid(format!(
            "distance must be positive, got {d}"
        )));
    }
    if !(wavelength > 0.0) {
        return Err(Error::invalid("wavelength must be positive"));
    }
    Ok(20.0 * (4.0 * PI * d / wavelength).log10())
}

/// Sensing pathloss composed from two one-way legs:
/// `PL(d₁) + PL(d₂) − σ + 10·log10(λ²/4π)`.
pub fn sensing_pathloss<F>(
    d1: f64,
    d2: f64,
    rcs_dbsm: f64,
    wavelength: f64,
    leg_pathloss: F,
) -> Result<f64>
where
    F: Fn(f64) -> Result<f64>,
{
    if !(d1 > 0.0 && d2 > 0.0) {
        return Err(Error::invalid(format!(
            "sensing legs must be positive, got {d1} and {d2}"
        )));
    }
    Ok(leg_pathloss(d1)? + leg_pathloss(d2)? - rcs_dbsm + aperture_term_db(wavelength))
}

/// `10·log10(λ²/4π)`, the effective-aperture term of the radar equation.
pub fn aperture_term_db(wavelength: f64) -> f64 {
    10.0 * (wavelength * wavelength / (4.0 * PI)).log10()
}

/// Bistatic radar equation evaluated directly in linear form:
/// `64π³·d₁²·d₂² / (λ²·σ)`, returned in dB.
pub fn radar_equation_pathloss_db(d1: f64, d2: f64, rcs_dbsm: f64, wavelength: f64) -> Result<f64> {
    if !(d1 > 0.0 && d2 > 0.0) {
        return Err(Error::invalid("sensing legs must be positive"));
    }
    let sigma = 10f64.powf(rcs_dbsm / 10.0);
    let linear = 64.0 * PI.powi(3) * d1 * d1 * d2 * d2 / (wavelength * wavelength * sigma);
    Ok(10.0 * linear.log10())
}

/// One-way pathloss model applied to communication links and sensing legs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PathlossModel {
    #[default]
    FreeSpace,
    /// TR 38.901 UMi street canyon / UMa / RMa models, floored at free space.
    ThreeGpp,
}

/// End points of one propagation leg.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Leg {
    pub d2d: f64,
    pub d3d: f64,
    /// Height of the higher end (BS side), meters.
    pub h_bs: f64,
    /// Height of the lower end (UT or target side), meters.
    pub h_ut: f64,
}

impl PathlossModel {
    pub fn pathloss_db(
        self,
        leg: &Leg,
        kind: ScenarioKind,
        cond: PropagationCondition,
        carrier_frequency: f64,
    ) -> Result<f64> {
        let wavelength = SPEED_OF_LIGHT / carrier_frequency;
        let fs = freespace_pathloss_db(leg.d3d, wavelength)?;
        match self {
            PathlossModel::FreeSpace => Ok(fs),
            PathlossModel::ThreeGpp => {
                Ok(three_gpp_pathloss_db(kind, cond, leg, carrier_frequency).max(fs))
            }
        }
    }
}

/// TR 38.901 Table 7.4.1-1 pathloss (dB) without shadow fading.
pub fn three_gpp_pathloss_db(
    kind: ScenarioKind,
    cond: PropagationCondition,
    leg: &Leg,
    carrier_frequency: f64,
) -> f64 {
    let fc_ghz = carrier_frequency / 1e9;
    let d3 = leg.d3d.max(1.0);
    let d2 = leg.d2d.max(1.0);
    let (h_bs, h_ut) = (leg.h_bs.max(1.5), leg.h_ut.max(1.0));
    match kind {
        ScenarioKind::UMi => {
            let d_bp =
                4.0 * (h_bs - 1.0) * (h_ut - 1.0).max(0.01) * carrier_frequency / SPEED_OF_LIGHT;
            let los = if d2 <= d_bp {
                32.4 + 21.0 * d3.log10() + 20.0 * fc_ghz.log10()
            } else {
                32.4 + 40.0 * d3.log10() + 20.0 * fc_ghz.log10()
                    - 9.5 * (d_bp * d_bp + (h_bs - h_ut).powi(2)).log10()
            };
            match cond {
                PropagationCondition::Los => los,
                PropagationCondition::Nlos => {
                    let nlos =
                        35.3 * d3.log10() + 22.4 + 21.3 * fc_ghz.log10() - 0.3 * (h_ut - 1.5);
                    los.max(nlos)
                }
            }
        }
        ScenarioKind::UMa => {
            let d_bp =
                4.0 * (h_bs - 1.0) * (h_ut - 1.0).max(0.01) * carrier_frequency / SPEED_OF_LIGHT;
            let los = if d2 <= d_bp {
                28.0 + 22.0 * d3.log10() + 20.0 * fc_ghz.log10()
            } else {
                28.0 + 40.0 * d3.log10() + 20.0 * fc_ghz.log10()
                    - 9.0 * (d_bp * d_bp + (h_bs - h_ut).powi(2)).log10()
            };
            match cond {
                PropagationCondition::Los => los,
                PropagationCondition::Nlos => {
                    let nlos =
                        13.54 + 39.08 * d3.log10() + 20.0 * fc_ghz.log10() - 0.6 * (h_ut - 1.5);
                    los.max(nlos)
                }
            }
        }
        ScenarioKind::RMa => {
            // default street width and building height
            let (w, h) = (20.0_f64, 5.0_f64);
            let pl1 = |d: f64| {
                20.0 * (40.0 * PI * d * fc_ghz / 3.0).log10()
                    + (0.03 * h.powf(1.72)).min(10.0) * d.log10()
                    - (0.044 * h.powf(1.72)).min(14.77)
                    + 0.002 * h.log10() * d
            };
            let d_bp = 2.0 * PI * h_bs * h_ut * carrier_frequency / SPEED_OF_LIGHT;
            let los = if d2 <= d_bp {
                pl1(d3)
            } else {
                pl1(d_bp) + 40.0 * (d3 / d_bp).log10()
            };
            match cond {
                PropagationCondition::Los => los,
                PropagationCondition::Nlos => {
                    let nlos = 161.04 - 7.1 * w.log10() + 7.5 * h.log10()
                        - (24.37 - 3.7 * (h / h_bs).powi(2)) * h_bs.log10()
                        + (43.42 - 3.1 * h_bs.log10()) * (d3.log10() - 3.0)
                        + 20.0 * fc_ghz.log10()
                        - (3.2 * (11.75 * h_ut).log10().powi(2) - 4.97);
                    los.max(nlos)
                }
            }
        }
    }
}
