//! Run configuration: TOML schema, defaults, validation and presets.
//!
//! The grammar is documented in `configs/README.md`. Only `[scenario]` and
//! the layout are required; every model constant has a default.

use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::analytics::KpmConfig;
use crate::coeff::RcsClass;
use crate::coeff::{PathlossModel, RcsModel};
use crate::error::{Error, Result};
use crate::geometry::Vec3;
use crate::mapping::{
    MappingConfig, MappingMode, DEFAULT_MAX_RETRIES, DEFAULT_MIN_SCATTERER_DISTANCE,
};
use crate::scenario::{
    ArrayLayout, BaseStation, LspParams, LspTable, NetworkLayout, PropagationCondition, Scenario,
    ScenarioKind, UserTerminal, DEFAULT_SENSING_RATIO,
};
use crate::sensing::{EvolutionModel, NewbornDistribution, PerceptionPoint, SensingConfig};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioBlock {
    pub kind: ScenarioKind,
    /// Hz.
    pub carrier_frequency: f64,
    /// Hz.
    pub bandwidth: f64,
}

/// A BS or UT entry. Positions are ground-plane `[x, y]` in meters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NodeEntry {
    pub position: [f64; 2],
    pub height: f64,
    #[serde(default)]
    pub velocity: [f64; 3],
    /// Element offsets in meters; a single element at the origin if omitted.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub elements: Option<Vec<[f64; 3]>>,
}

impl NodeEntry {
    pub fn at(x: f64, y: f64, height: f64) -> Self {
        Self {
            position: [x, y],
            height,
            velocity: [0.0; 3],
            elements: None,
        }
    }

    fn array(&self) -> ArrayLayout {
        match &self.elements {
            Some(e) => ArrayLayout {
                offsets: e.iter().map(|&o| Vec3::from(o)).collect(),
            },
            None => ArrayLayout::default(),
        }
    }

    fn point(&self) -> Vec3 {
        Vec3::new(self.position[0], self.position[1], self.height)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LayoutBlock {
    #[serde(default)]
    pub bs: Vec<NodeEntry>,
    #[serde(default)]
    pub ut: Vec<NodeEntry>,
}

/// Replaces selected fields of one built-in LSP table row.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LspOverride {
    pub kind: ScenarioKind,
    pub condition: PropagationCondition,
    pub lg_ds_mu: Option<f64>,
    pub lg_ds_sigma: Option<f64>,
    pub lg_asd_mu: Option<f64>,
    pub lg_asd_sigma: Option<f64>,
    pub lg_asa_mu: Option<f64>,
    pub lg_asa_sigma: Option<f64>,
    pub lg_zsa_mu: Option<f64>,
    pub lg_zsa_sigma: Option<f64>,
    pub lg_zsd_mu: Option<f64>,
    pub lg_zsd_sigma: Option<f64>,
    pub sf_sigma_db: Option<f64>,
    pub k_mu_db: Option<f64>,
    pub k_sigma_db: Option<f64>,
    pub delay_scaling: Option<f64>,
    pub xpr_mu_db: Option<f64>,
    pub xpr_sigma_db: Option<f64>,
    pub cluster_asd_deg: Option<f64>,
    pub cluster_asa_deg: Option<f64>,
    pub cluster_zsa_deg: Option<f64>,
    pub cluster_shadowing_db: Option<f64>,
}

impl LspOverride {
    fn apply(&self, p: &mut LspParams) {
        macro_rules! set {
            ($($f:ident),*) => { $( if let Some(v) = self.$f { p.$f = v; } )* };
        }
        set!(
            lg_ds_mu,
            lg_ds_sigma,
            lg_asd_mu,
            lg_asd_sigma,
            lg_asa_mu,
            lg_asa_sigma,
            lg_zsa_mu,
            lg_zsa_sigma,
            lg_zsd_mu,
            lg_zsd_sigma,
            sf_sigma_db,
            k_sigma_db,
            delay_scaling,
            xpr_mu_db,
            xpr_sigma_db,
            cluster_asd_deg,
            cluster_asa_deg,
            cluster_zsa_deg,
            cluster_shadowing_db
        );
        if let Some(k) = self.k_mu_db {
            p.k_mu_db = Some(k);
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ModelBlock {
    pub sensing_ratio: f64,
    /// Minimum scatterer distance from TX and RX, meters.
    pub d_min: f64,
    /// Extra path length added before mapping; `2·d_min` if omitted.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub extra_path_length: Option<f64>,
    pub max_retries: usize,
    pub mapping_mode: MappingMode,
    /// Global sensing-cluster cap; the largest per-link sensing count if omitted.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub global_cap: Option<usize>,
    /// Forces every link's condition instead of drawing it.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub condition: Option<PropagationCondition>,
    pub pathloss: PathlossModel,
    pub tx_power_dbm: f64,
    pub perception_point: PerceptionPoint,
    pub ut_rcs_class: RcsClass,
    pub evolution: EvolutionModel,
    pub newborn: NewbornDistribution,
    pub rcs: RcsModel,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub lsp: Vec<LspOverride>,
}

impl Default for ModelBlock {
    fn default() -> Self {
        Self {
            sensing_ratio: DEFAULT_SENSING_RATIO,
            d_min: DEFAULT_MIN_SCATTERER_DISTANCE,
            extra_path_length: None,
            max_retries: DEFAULT_MAX_RETRIES,
            mapping_mode: MappingMode::PerCluster,
            global_cap: None,
            condition: None,
            pathloss: PathlossModel::FreeSpace,
            tx_power_dbm: 28.0,
            perception_point: PerceptionPoint::Fbs,
            ut_rcs_class: RcsClass::Pedestrian,
            evolution: EvolutionModel::default(),
            newborn: NewbornDistribution::default(),
            rcs: RcsModel::default(),
            lsp: Vec::new(),
        }
    }
}

impl ModelBlock {
    pub fn sensing(&self) -> SensingConfig {
        SensingConfig {
            evolution: self.evolution,
            newborn: self.newborn,
            perception_point: self.perception_point,
            ut_rcs_class: self.ut_rcs_class,
        }
    }

    pub fn mapping(&self) -> MappingConfig {
        MappingConfig {
            max_retries: self.max_retries,
            mode: self.mapping_mode,
            extra_path_length: self.extra_path_length.unwrap_or(2.0 * self.d_min),
        }
    }

    pub fn lsp_table(&self) -> LspTable {
        let mut table = LspTable::default();
        for o in &self.lsp {
            o.apply(table.params_mut(o.kind, o.condition));
        }
        table
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Output {
    Clusters,
    Cir,
    Stats,
    Cdf,
}

impl Output {
    pub const ALL: [Output; 4] = [Output::Clusters, Output::Cir, Output::Stats, Output::Cdf];

    pub fn file_name(self) -> &'static str {
        match self {
            Output::Clusters => "clusters.csv",
            Output::Cir => "cir.csv",
            Output::Stats => "stats.csv",
            Output::Cdf => "cdf.csv",
        }
    }
}

impl std::str::FromStr for Output {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "clusters" => Ok(Output::Clusters),
            "cir" => Ok(Output::Cir),
            "stats" => Ok(Output::Stats),
            "cdf" => Ok(Output::Cdf),
            other => Err(Error::Config(format!(
                "unknown output `{other}` (expected clusters, cir, stats or cdf)"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunBlock {
    pub seed: u64,
    pub drops: u32,
    /// Evaluation time of the coefficients, seconds.
    pub time: f64,
    pub emit: Vec<Output>,
}

impl Default for RunBlock {
    fn default() -> Self {
        Self {
            seed: 0,
            drops: 1,
            time: 0.0,
            emit: Output::ALL.to_vec(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ValidationBlock {
    pub drops: u32,
    /// Plausibility band for the 90th-percentile RMS delay spread, seconds.
    pub ds_p90_band: [f64; 2],
}

impl Default for ValidationBlock {
    fn default() -> Self {
        Self {
            drops: 500,
            ds_p90_band: [10e-9, 500e-9],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub scenario: ScenarioBlock,
    pub layout: LayoutBlock,
    #[serde(default)]
    pub model: ModelBlock,
    #[serde(default)]
    pub run: RunBlock,
    #[serde(default)]
    pub analysis: KpmConfig,
    #[serde(default)]
    pub validation: ValidationBlock,
}

fn positive(name: &str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Error::Config(format!("{name} must be positive, got {v}")))
    }
}

fn as_config(e: Error) -> Error {
    match e {
        Error::InvalidInput(m) => Error::Config(m),
        other => other,
    }
}

impl RunConfig {
    /// Single-link measurement-validation preset: UMi at 28 GHz, TX at
    /// `[0, 0]` (5 m), RX at `[8, 8]` (1.5 m).
    pub fn validation_preset() -> Self {
        Self {
            scenario: ScenarioBlock {
                kind: ScenarioKind::UMi,
                carrier_frequency: 28e9,
                bandwidth: 1e9,
            },
            layout: LayoutBlock {
                bs: vec![NodeEntry::at(0.0, 0.0, 5.0)],
                ut: vec![NodeEntry::at(8.0, 8.0, 1.5)],
            },
            model: ModelBlock::default(),
            run: RunBlock::default(),
            analysis: KpmConfig::default(),
            validation: ValidationBlock::default(),
        }
    }

    /// Two-BS, three-UT layout with static terminals.
    pub fn multi_link_preset(kind: ScenarioKind) -> Self {
        let mut c = Self::validation_preset();
        c.scenario.kind = kind;
        c.layout = LayoutBlock {
            bs: vec![
                NodeEntry::at(100.0, 100.0, 20.0),
                NodeEntry::at(150.0, 150.0, 35.0),
            ],
            ut: vec![
                NodeEntry::at(50.0, 50.0, 1.5),
                NodeEntry::at(20.0, 180.0, 3.5),
                NodeEntry::at(170.0, 30.0, 1.0),
            ],
        };
        c
    }

    pub fn validate(&self) -> Result<()> {
        positive(
            "scenario.carrier_frequency",
            self.scenario.carrier_frequency,
        )?;
        positive("scenario.bandwidth", self.scenario.bandwidth)?;
        for (what, list) in [("bs", &self.layout.bs), ("ut", &self.layout.ut)] {
            for (i, n) in list.iter().enumerate() {
                positive(&format!("layout.{what}[{i}].height"), n.height)?;
                if !n.position.iter().chain(&n.velocity).all(|v| v.is_finite()) {
                    return Err(Error::Config(format!(
                        "layout.{what}[{i}] has non-finite values"
                    )));
                }
                if n.elements.as_ref().is_some_and(|e| e.is_empty()) {
                    return Err(Error::Config(format!(
                        "layout.{what}[{i}].elements is empty"
                    )));
                }
            }
        }
        if self.layout.bs.is_empty() {
            return Err(Error::Config("layout needs at least one bs entry".into()));
        }
        let m = &self.model;
        if !(m.sensing_ratio >= 1.0 && m.sensing_ratio.is_finite()) {
            return Err(Error::Config(format!(
                "model.sensing_ratio must be >= 1, got {}",
                m.sensing_ratio
            )));
        }
        positive("model.d_min", m.d_min)?;
        if let Some(e) = m.extra_path_length {
            if !(e >= 0.0 && e.is_finite()) {
                return Err(Error::Config(
                    "model.extra_path_length must be non-negative".into(),
                ));
            }
        }
        if m.global_cap == Some(0) {
            return Err(Error::Config("model.global_cap must be at least 1".into()));
        }
        if !m.tx_power_dbm.is_finite() {
            return Err(Error::Config("model.tx_power_dbm must be finite".into()));
        }
        m.evolution.validate().map_err(as_config)?;
        m.newborn.validate().map_err(as_config)?;
        m.rcs.validate().map_err(as_config)?;
        if self.run.drops == 0 {
            return Err(Error::Config("run.drops must be at least 1".into()));
        }
        if !(self.run.time.is_finite()) {
            return Err(Error::Config("run.time must be finite".into()));
        }
        let [lo, hi] = self.validation.ds_p90_band;
        if !(lo >= 0.0 && lo < hi) {
            return Err(Error::Config(
                "validation.ds_p90_band must satisfy 0 <= lo < hi".into(),
            ));
        }
        if self.analysis.n_init == 0 || self.analysis.max_iter == 0 {
            return Err(Error::Config(
                "analysis.n_init and max_iter must be positive".into(),
            ));
        }
        self.network().validate().map_err(as_config)?;
        Ok(())
    }

    pub fn scenario(&self) -> Result<Scenario> {
        Scenario::new(
            self.scenario.kind,
            self.scenario.carrier_frequency,
            self.scenario.bandwidth,
        )
        .map_err(as_config)
    }

    pub fn network(&self) -> NetworkLayout {
        NetworkLayout {
            bs_list: self
                .layout
                .bs
                .iter()
                .map(|n| BaseStation {
                    position: n.point(),
                    array: n.array(),
                })
                .collect(),
            ut_list: self
                .layout
                .ut
                .iter()
                .map(|n| UserTerminal {
                    position: n.point(),
                    velocity: Vec3::from(n.velocity),
                    array: n.array(),
                })
                .collect(),
        }
    }

    /// Canonical TOML form with all defaults filled in.
    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    /// First 16 hex digits of the SHA-256 of the canonical TOML.
    pub fn hash(&self) -> Result<String> {
        let digest = Sha256::digest(self.to_toml()?.as_bytes());
        Ok(digest.iter().take(8).map(|b| format!("{b:02x}")).collect())
    }
}

/// Parses and validates a configuration from TOML text.
pub fn parse_config(text: &str) -> Result<RunConfig> {
    let config: RunConfig = toml::from_str(text).map_err(|e| {
        let msg = e.message().to_string();
        match unknown_key(&msg) {
            Some(key) => Error::UnknownKey(key),
            None => Error::Config(e.to_string()),
        }
    })?;
    config.validate()?;
    Ok(config)
}

pub fn load_config(path: &Path) -> Result<RunConfig> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_config(&text)
}

fn unknown_key(msg: &str) -> Option<String> {
    let rest = msg.strip_prefix("unknown field `")?;
    Some(rest[..rest.find('`')?].to_string())
}
