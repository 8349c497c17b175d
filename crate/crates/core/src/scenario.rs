//! Scenario catalogs: LOS probability, cluster-count tables and the
//! large-scale parameter (LSP) table for the UMi, UMa and RMa scenarios.
//!
//! The LSP rows are the TR 38.901 Table 7.5-6 values evaluated at 28 GHz.
//! Distance-dependent zenith spread of departure is evaluated once at a
//! 2D reference distance of 50 m (UMi) or 100 m (UMa, RMa). Every row can
//! be overridden from the run configuration.

use std::fmt;

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::Vec3;

/// Number of rays inside every cluster.
pub const RAYS_PER_CLUSTER: usize = 20;

/// Default ratio between sensing and communication cluster counts.
pub const DEFAULT_SENSING_RATIO: f64 = 1.32;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ScenarioKind {
    UMi,
    UMa,
    RMa,
}

impl fmt::Display for ScenarioKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            ScenarioKind::UMi => "UMi",
            ScenarioKind::UMa => "UMa",
            ScenarioKind::RMa => "RMa",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    pub kind: ScenarioKind,
    pub carrier_frequency: f64,
    pub bandwidth: f64,
}

impl Scenario {
    pub fn new(kind: ScenarioKind, carrier_frequency: f64, bandwidth: f64) -> Result<Self> {
        if !(carrier_frequency > 0.0 && carrier_frequency.is_finite()) {
            return Err(Error::invalid(format!(
                "carrier frequency must be positive, got {carrier_frequency}"
            )));
        }
        if !(bandwidth > 0.0 && bandwidth <= carrier_frequency) {
            return Err(Error::invalid(format!(
                "bandwidth must lie in (0, carrier frequency], got {bandwidth}"
            )));
        }
        Ok(Self {
            kind,
            carrier_frequency,
            bandwidth,
        })
    }

    pub fn wavelength(&self) -> f64 {
        crate::SPEED_OF_LIGHT / self.carrier_frequency
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum PropagationCondition {
    #[serde(rename = "LOS")]
    Los,
    #[serde(rename = "NLOS")]
    Nlos,
}

impl PropagationCondition {
    pub fn is_los(self) -> bool {
        self == PropagationCondition::Los
    }
}

impl fmt::Display for PropagationCondition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(if self.is_los() { "LOS" } else { "NLOS" })
    }
}

/// Condition of a TX → target → SX echo path.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum SensingCondition {
    LosSensing,
    NlosSensing,
}

/// Echo path is LOS only when both legs are LOS.
pub fn sensing_condition(
    tx_to_target: PropagationCondition,
    target_to_sx: PropagationCondition,
) -> SensingCondition {
    if tx_to_target.is_los() && target_to_sx.is_los() {
        SensingCondition::LosSensing
    } else {
        SensingCondition::NlosSensing
    }
}

/// LOS probability for a 2D distance `d2d` (m) and terminal height `h_ut` (m).
///
/// `h_ut` only matters for UMa.
pub fn los_probability(kind: ScenarioKind, d2d: f64, h_ut: f64) -> f64 {
    match kind {
        ScenarioKind::UMi => {
            if d2d <= 18.0 {
                1.0
            } else {
                18.0 / d2d + (-d2d / 36.0).exp() * (1.0 - 18.0 / d2d)
            }
        }
        ScenarioKind::UMa => {
            if d2d <= 18.0 {
                return 1.0;
            }
            let c = if h_ut <= 13.0 {
                0.0
            } else {
                ((h_ut - 13.0) / 10.0).powf(1.5)
            };
            (18.0 / d2d + (-d2d / 63.0).exp() * (1.0 - 18.0 / d2d))
                * (1.0 + c * 1.25 * (d2d / 100.0).powi(3) * (-d2d / 150.0).exp())
        }
        ScenarioKind::RMa => {
            if d2d <= 10.0 {
                1.0
            } else {
                (-(d2d - 10.0) / 1000.0).exp()
            }
        }
    }
}

/// Bernoulli draw of the link state with the scenario LOS probability.
pub fn assign_propagation_condition<R: Rng + ?Sized>(
    kind: ScenarioKind,
    d2d: f64,
    h_ut: f64,
    rng: &mut R,
) -> PropagationCondition {
    let p = los_probability(kind, d2d.max(0.0), h_ut);
    if rng.random::<f64>() < p {
        PropagationCondition::Los
    } else {
        PropagationCondition::Nlos
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ClusterKind {
    Communication,
    Sensing,
}

/// Communication cluster count (TR 38.901) or the derived sensing count.
///
/// Sensing counts are `ceil(ratio · communication)`. A `1e-9` guard keeps
/// products that are exact integers from rounding up on float noise.
pub fn cluster_count(
    kind: ScenarioKind,
    cond: PropagationCondition,
    cluster_kind: ClusterKind,
    sensing_ratio: f64,
) -> usize {
    let comm = match (kind, cond) {
        (ScenarioKind::UMi, PropagationCondition::Los) => 12,
        (ScenarioKind::UMi, PropagationCondition::Nlos) => 19,
        (ScenarioKind::UMa, PropagationCondition::Los) => 12,
        (ScenarioKind::UMa, PropagationCondition::Nlos) => 20,
        (ScenarioKind::RMa, PropagationCondition::Los) => 11,
        (ScenarioKind::RMa, PropagationCondition::Nlos) => 10,
    };
    match cluster_kind {
        ClusterKind::Communication => comm,
        ClusterKind::Sensing => ((sensing_ratio * comm as f64) - 1e-9).ceil().max(1.0) as usize,
    }
}

/// Per-link large-scale parameters. Spreads are in seconds (DS) and degrees.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LspSet {
    pub delay_spread: f64,
    pub asa: f64,
    pub asd: f64,
    pub zsa: f64,
    pub zsd: f64,
    pub shadow_fading_db: f64,
    /// Ricean K-factor; `None` for NLOS links.
    pub k_factor_db: Option<f64>,
}

/// One row of the LSP table. `lg_*` values are log10 of seconds or degrees.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LspParams {
    pub lg_ds_mu: f64,
    pub lg_ds_sigma: f64,
    pub lg_asd_mu: f64,
    pub lg_asd_sigma: f64,
    pub lg_asa_mu: f64,
    pub lg_asa_sigma: f64,
    pub lg_zsa_mu: f64,
    pub lg_zsa_sigma: f64,
    pub lg_zsd_mu: f64,
    pub lg_zsd_sigma: f64,
    pub sf_sigma_db: f64,
    pub k_mu_db: Option<f64>,
    pub k_sigma_db: f64,
    pub delay_scaling: f64,
    pub xpr_mu_db: f64,
    pub xpr_sigma_db: f64,
    pub cluster_asd_deg: f64,
    pub cluster_asa_deg: f64,
    pub cluster_zsa_deg: f64,
    pub cluster_shadowing_db: f64,
}

impl LspParams {
    /// Median delay spread, seconds.
    pub fn median_delay_spread(&self) -> f64 {
        10f64.powf(self.lg_ds_mu)
    }

    /// Intra-cluster zenith spread of departure, degrees.
    pub fn cluster_zsd_deg(&self) -> f64 {
        0.375 * 10f64.powf(self.lg_zsd_mu)
    }

    /// Built-in row for a scenario and link condition.
    pub fn builtin(kind: ScenarioKind, cond: PropagationCondition) -> Self {
        use PropagationCondition::*;
        use ScenarioKind::*;
        match (kind, cond) {
            (UMi, Los) => LspParams {
                lg_ds_mu: -7.490_98,
                lg_ds_sigma: 0.38,
                lg_asd_mu: 1.136_88,
                lg_asd_sigma: 0.41,
                lg_asa_mu: 1.613_01,
                lg_asa_sigma: 0.300_47,
                lg_zsa_mu: 0.583_76,
                lg_zsa_sigma: 0.281_50,
                lg_zsd_mu: 0.175,
                lg_zsd_sigma: 0.35,
                sf_sigma_db: 4.0,
                k_mu_db: Some(9.0),
                k_sigma_db: 5.0,
                delay_scaling: 3.0,
                xpr_mu_db: 9.0,
                xpr_sigma_db: 3.0,
                cluster_asd_deg: 3.0,
                cluster_asa_deg: 17.0,
                cluster_zsa_deg: 7.0,
                cluster_shadowing_db: 3.0,
            },
            (UMi, Nlos) => LspParams {
                lg_ds_mu: -7.180_98,
                lg_ds_sigma: 0.513_98,
                lg_asd_mu: 1.193_65,
                lg_asd_sigma: 0.490_86,
                lg_asa_mu: 1.693_01,
                lg_asa_sigma: 0.373_12,
                lg_zsa_mu: 0.861_50,
                lg_zsa_sigma: 0.307_63,
                lg_zsd_mu: 0.045,
                lg_zsd_sigma: 0.35,
                sf_sigma_db: 7.82,
                k_mu_db: None,
                k_sigma_db: 0.0,
                delay_scaling: 2.1,
                xpr_mu_db: 8.0,
                xpr_sigma_db: 3.0,
                cluster_asd_deg: 10.0,
                cluster_asa_deg: 22.0,
                cluster_zsa_deg: 7.0,
                cluster_shadowing_db: 3.0,
            },
            (UMa, Los) => LspParams {
                lg_ds_mu: -7.094_36,
                lg_ds_sigma: 0.66,
                lg_asd_mu: 1.221_21,
                lg_asd_sigma: 0.28,
                lg_asa_mu: 1.81,
                lg_asa_sigma: 0.20,
                lg_zsa_mu: 0.95,
                lg_zsa_sigma: 0.16,
                lg_zsd_mu: 0.54,
                lg_zsd_sigma: 0.40,
                sf_sigma_db: 4.0,
                k_mu_db: Some(9.0),
                k_sigma_db: 3.5,
                delay_scaling: 2.5,
                xpr_mu_db: 8.0,
                xpr_sigma_db: 4.0,
                cluster_asd_deg: 5.0,
                cluster_asa_deg: 11.0,
                cluster_zsa_deg: 7.0,
                cluster_shadowing_db: 3.0,
            },
            (UMa, Nlos) => LspParams {
                lg_ds_mu: -6.575_22,
                lg_ds_sigma: 0.39,
                lg_asd_mu: 1.334_44,
                lg_asd_sigma: 0.28,
                lg_asa_mu: 1.689_27,
                lg_asa_sigma: 0.11,
                lg_zsa_mu: 1.043_70,
                lg_zsa_sigma: 0.16,
                lg_zsd_mu: 0.69,
                lg_zsd_sigma: 0.49,
                sf_sigma_db: 6.0,
                k_mu_db: None,
                k_sigma_db: 0.0,
                delay_scaling: 2.3,
                xpr_mu_db: 7.0,
                xpr_sigma_db: 3.0,
                cluster_asd_deg: 1.6296,
                cluster_asa_deg: 15.0,
                cluster_zsa_deg: 7.0,
                cluster_shadowing_db: 3.0,
            },
            (RMa, Los) => LspParams {
                lg_ds_mu: -7.49,
                lg_ds_sigma: 0.55,
                lg_asd_mu: 0.90,
                lg_asd_sigma: 0.38,
                lg_asa_mu: 1.52,
                lg_asa_sigma: 0.24,
                lg_zsa_mu: 0.47,
                lg_zsa_sigma: 0.40,
                lg_zsd_mu: 0.20,
                lg_zsd_sigma: 0.34,
                sf_sigma_db: 4.0,
                k_mu_db: Some(7.0),
                k_sigma_db: 4.0,
                delay_scaling: 3.8,
                xpr_mu_db: 12.0,
                xpr_sigma_db: 4.0,
                cluster_asd_deg: 2.0,
                cluster_asa_deg: 3.0,
                cluster_zsa_deg: 3.0,
                cluster_shadowing_db: 3.0,
            },
            (RMa, Nlos) => LspParams {
                lg_ds_mu: -7.43,
                lg_ds_sigma: 0.48,
                lg_asd_mu: 0.95,
                lg_asd_sigma: 0.45,
                lg_asa_mu: 1.52,
                lg_asa_sigma: 0.13,
                lg_zsa_mu: 0.58,
                lg_zsa_sigma: 0.37,
                lg_zsd_mu: 0.26,
                lg_zsd_sigma: 0.30,
                sf_sigma_db: 8.0,
                k_mu_db: None,
                k_sigma_db: 0.0,
                delay_scaling: 1.7,
                xpr_mu_db: 7.0,
                xpr_sigma_db: 3.0,
                cluster_asd_deg: 2.0,
                cluster_asa_deg: 3.0,
                cluster_zsa_deg: 3.0,
                cluster_shadowing_db: 3.0,
            },
        }
    }

    /// Draws one LSP set. Spreads are log-normal around the row medians;
    /// azimuth spreads are capped at 104° and zenith spreads at 52°.
    pub fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> LspSet {
        let mut lognormal = |mu: f64, sigma: f64| {
            let z: f64 = StandardNormal.sample(rng);
            10f64.powf(mu + sigma * z)
        };
        let delay_spread = lognormal(self.lg_ds_mu, self.lg_ds_sigma);
        let asd = lognormal(self.lg_asd_mu, self.lg_asd_sigma).min(104.0);
        let asa = lognormal(self.lg_asa_mu, self.lg_asa_sigma).min(104.0);
        let zsa = lognormal(self.lg_zsa_mu, self.lg_zsa_sigma).min(52.0);
        let zsd = lognormal(self.lg_zsd_mu, self.lg_zsd_sigma).min(52.0);
        let z_sf: f64 = StandardNormal.sample(rng);
        let k_factor_db = self.k_mu_db.map(|mu| {
            let z: f64 = StandardNormal.sample(rng);
            mu + self.k_sigma_db * z
        });
        LspSet {
            delay_spread,
            asa,
            asd,
            zsa,
            zsd,
            shadow_fading_db: self.sf_sigma_db * z_sf,
            k_factor_db,
        }
    }
}

/// Editable LSP catalog, one row per scenario × condition.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LspTable {
    rows: Vec<(ScenarioKind, PropagationCondition, LspParams)>,
}

impl Default for LspTable {
    fn default() -> Self {
        let mut rows = Vec::with_capacity(6);
        for kind in [ScenarioKind::UMi, ScenarioKind::UMa, ScenarioKind::RMa] {
            for cond in [PropagationCondition::Los, PropagationCondition::Nlos] {
                rows.push((kind, cond, LspParams::builtin(kind, cond)));
            }
        }
        Self { rows }
    }
}

impl LspTable {
    pub fn params(&self, kind: ScenarioKind, cond: PropagationCondition) -> &LspParams {
        self.rows
            .iter()
            .find(|(k, c, _)| *k == kind && *c == cond)
            .map(|(_, _, p)| p)
            .expect("LSP table holds every scenario/condition row")
    }

    pub fn params_mut(&mut self, kind: ScenarioKind, cond: PropagationCondition) -> &mut LspParams {
        self.rows
            .iter_mut()
            .find(|(k, c, _)| *k == kind && *c == cond)
            .map(|(_, _, p)| p)
            .expect("LSP table holds every scenario/condition row")
    }
}

/// Draws the link LSPs from the table row of `kind`/`cond`.
pub fn default_lsps<R: Rng + ?Sized>(
    table: &LspTable,
    kind: ScenarioKind,
    cond: PropagationCondition,
    rng: &mut R,
) -> LspSet {
    table.params(kind, cond).draw(rng)
}

/// Base station or user terminal antenna layout.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArrayLayout {
    /// Element offsets from the array reference point, meters.
    pub offsets: Vec<Vec3>,
}

impl Default for ArrayLayout {
    fn default() -> Self {
        Self {
            offsets: vec![Vec3::ZERO],
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BaseStation {
    pub position: Vec3,
    pub array: ArrayLayout,
}

#[derive(Debug, Clone, PartialEq)]
pub struct UserTerminal {
    pub position: Vec3,
    pub velocity: Vec3,
    pub array: ArrayLayout,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct NetworkLayout {
    pub bs_list: Vec<BaseStation>,
    pub ut_list: Vec<UserTerminal>,
}

impl NetworkLayout {
    pub fn validate(&self) -> Result<()> {
        for (i, bs) in self.bs_list.iter().enumerate() {
            if !(bs.position.z > 0.0) || !bs.position.is_finite() {
                return Err(Error::invalid(format!("BS {i} height must be positive")));
            }
        }
        for (i, ut) in self.ut_list.iter().enumerate() {
            if !(ut.position.z > 0.0) || !ut.position.is_finite() {
                return Err(Error::invalid(format!("UT {i} height must be positive")));
            }
            if !ut.velocity.is_finite() {
                return Err(Error::invalid(format!("UT {i} velocity must be finite")));
            }
            for (j, bs) in self.bs_list.iter().enumerate() {
                if bs.position == ut.position {
                    return Err(Error::invalid(format!("BS {j} and UT {i} are co-located")));
                }
            }
        }
        Ok(())
    }

    /// Every BS–UT pair, BS-major.
    pub fn links(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        let n_ut = self.ut_list.len();
        (0..self.bs_list.len()).flat_map(move |b| (0..n_ut).map(move |u| (b, u)))
    }
}
