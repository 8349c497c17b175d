//! Radar cross section classes and sampling.

use std::fmt;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RcsClass {
    Pedestrian,
    Vehicle,
    Environment,
}

impl fmt::Display for RcsClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            RcsClass::Pedestrian => "pedestrian",
            RcsClass::Vehicle => "vehicle",
            RcsClass::Environment => "environment",
        })
    }
}

/// Closed dBsm interval.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DbsmRange {
    pub min: f64,
    pub max: f64,
}

impl DbsmRange {
    pub fn contains(&self, v: f64) -> bool {
        (self.min..=self.max).contains(&v)
    }
}

/// Class mixture and per-class uniform RCS ranges.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RcsModel {
    pub vehicle_weight: f64,
    pub pedestrian_weight: f64,
    pub environment_weight: f64,
    pub pedestrian: DbsmRange,
    pub vehicle: DbsmRange,
    pub environment: DbsmRange,
}

impl Default for RcsModel {
    fn default() -> Self {
        Self {
            vehicle_weight: 0.30,
            pedestrian_weight: 0.20,
            environment_weight: 0.50,
            pedestrian: DbsmRange {
                min: -20.0,
                max: 0.0,
            },
            vehicle: DbsmRange {
                min: -5.0,
                max: 25.0,
            },
            environment: DbsmRange {
                min: -50.0,
                max: 50.0,
            },
        }
    }
}

impl RcsModel {
    pub fn validate(&self) -> Result<()> {
        let w = [
            self.vehicle_weight,
            self.pedestrian_weight,
            self.environment_weight,
        ];
        if w.iter().any(|&x| !(x >= 0.0)) || (w.iter().sum::<f64>() - 1.0).abs() > 1e-9 {
            return Err(Error::invalid(
                "RCS class weights must be non-negative and sum to 1",
            ));
        }
        for r in [self.pedestrian, self.vehicle, self.environment] {
            if !(r.min <= r.max) || !r.min.is_finite() || !r.max.is_finite() {
                return Err(Error::invalid("RCS ranges must be finite with min <= max"));
            }
        }
        Ok(())
    }

    pub fn range(&self, class: RcsClass) -> DbsmRange {
        match class {
            RcsClass::Pedestrian => self.pedestrian,
            RcsClass::Vehicle => self.vehicle,
            RcsClass::Environment => self.environment,
        }
    }

    /// Draws a class from the vehicle/pedestrian/environment mixture.
    pub fn sample_class<R: Rng + ?Sized>(&self, rng: &mut R) -> RcsClass {
        let u: f64 = rng.random();
        if u < self.vehicle_weight {
            RcsClass::Vehicle
        } else if u < self.vehicle_weight + self.pedestrian_weight {
            RcsClass::Pedestrian
        } else {
            RcsClass::Environment
        }
    }

    /// Uniform dBsm value within the class range.
    pub fn sample_value<R: Rng + ?Sized>(&self, class: RcsClass, rng: &mut R) -> f64 {
        let r = self.range(class);
        if r.min == r.max {
            return r.min;
        }
        r.min + (r.max - r.min) * rng.random::<f64>()
    }

    /// Of two classes, the one whose range reaches higher.
    pub fn stronger(&self, a: RcsClass, b: RcsClass) -> RcsClass {
        if self.range(b).max > self.range(a).max {
            b
        } else {
            a
        }
    }
}

/// Draws an RCS value, picking the class from the mixture unless fixed.
pub fn sample_rcs<R: Rng + ?Sized>(
    model: &RcsModel,
    class: Option<RcsClass>,
    rng: &mut R,
) -> (RcsClass, f64) {
    let class = class.unwrap_or_else(|| model.sample_class(rng));
    (class, model.sample_value(class, rng))
}
