//! Per-link spread statistics and the preset plausibility suite.

use serde::{Deserialize, Serialize};

use crate::analytics::{empirical_cdf, quantile, rms_spread};
use crate::coeff::{
    freespace_pathloss_db, radar_equation_pathloss_db, sensing_pathloss, ChannelRealization,
};
use crate::config::RunConfig;
use crate::error::Result;
use crate::pipeline::run_simulation;
use crate::scenario::{cluster_count, ClusterKind, PropagationCondition, ScenarioKind};
use crate::sensing::EvolutionModel;

/// RMS spreads of a link's communication taps, power-weighted at element
/// pair 0. Azimuth is circular; zenith is linear on `[0, π]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinkStats {
    pub rms_ds: f64,
    pub rms_asa: f64,
    pub rms_zsa: f64,
}

impl LinkStats {
    pub fn from_realization(r: &ChannelRealization) -> Result<Self> {
        let p: Vec<f64> = r.comm_taps.iter().map(|t| t.values[0].norm_sqr()).collect();
        let tau: Vec<f64> = r.comm_taps.iter().map(|t| t.delay).collect();
        let az: Vec<f64> = r.comm_taps.iter().map(|t| t.arrival.azimuth).collect();
        let zen: Vec<f64> = r.comm_taps.iter().map(|t| t.arrival.zenith).collect();
        Ok(Self {
            rms_ds: rms_spread(&tau, &p, false)?,
            rms_asa: rms_spread(&az, &p, true)?,
            rms_zsa: rms_spread(&zen, &p, false)?,
        })
    }
}

pub const METRICS: [&str; 3] = ["rms_ds_s", "rms_asa_rad", "rms_zsa_rad"];

/// `(metric, value, probability)` rows over all links.
pub fn stats_cdf(stats: &[LinkStats]) -> Result<Vec<(&'static str, f64, f64)>> {
    let mut rows = Vec::new();
    let columns: [fn(&LinkStats) -> f64; 3] = [|s| s.rms_ds, |s| s.rms_asa, |s| s.rms_zsa];
    for (name, f) in METRICS.into_iter().zip(columns) {
        let values: Vec<f64> = stats.iter().map(f).collect();
        rows.extend(
            empirical_cdf(&values)?
                .into_iter()
                .map(|(v, p)| (name, v, p)),
        );
    }
    Ok(rows)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

impl Check {
    fn new(name: &str, passed: bool, detail: String) -> Self {
        Self {
            name: name.to_string(),
            passed,
            detail,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ValidationReport {
    pub checks: Vec<Check>,
    pub stats: Vec<LinkStats>,
}

impl ValidationReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }
}

fn model_constant_checks() -> Result<Vec<Check>> {
    let m = EvolutionModel::default();
    let evo = m.probability(0.3) == 1.0
        && (m.probability(1.0) - 0.2928).abs() < 1e-4
        && m.probability(m.knee) == 1.0
        && m.exponential(m.knee) - 1.0 <= 0.0065;

    let kinds = [ScenarioKind::UMi, ScenarioKind::UMa, ScenarioKind::RMa];
    let conds = [PropagationCondition::Los, PropagationCondition::Nlos];
    let counts: Vec<usize> = kinds
        .iter()
        .flat_map(|&k| conds.map(|c| cluster_count(k, c, ClusterKind::Sensing, 1.32)))
        .collect();

    let lambda = crate::SPEED_OF_LIGHT / 28e9;
    let composed = sensing_pathloss(1.0, 1.0, 0.0, lambda, |d| freespace_pathloss_db(d, lambda))?;
    let direct = radar_equation_pathloss_db(1.0, 1.0, 0.0, lambda)?;

    Ok(vec![
        Check::new(
            "evolution_constants",
            evo,
            format!("p(1.0) = {:.6}", m.probability(1.0)),
        ),
        Check::new(
            "sensing_cluster_counts",
            counts == [16, 26, 16, 27, 15, 14],
            format!("{counts:?}"),
        ),
        Check::new(
            "radar_spot_check",
            (composed - 72.38).abs() < 0.01 && (direct - composed).abs() < 0.01,
            format!("{composed:.4} dB"),
        ),
    ])
}

/// Runs `drops` drops of `config` twice and checks spread plausibility,
/// CDF monotonicity, the delay-spread band and determinism.
pub fn validate_preset(config: &RunConfig, drops: u32) -> Result<ValidationReport> {
    let mut cfg = config.clone();
    cfg.run.drops = drops;
    let first = run_simulation(&cfg)?;
    let second = run_simulation(&cfg)?;
    let stats = first
        .realizations
        .iter()
        .map(LinkStats::from_realization)
        .collect::<Result<Vec<_>>>()?;

    let mut checks = model_constant_checks()?;
    checks.push(Check::new(
        "link_count",
        !stats.is_empty(),
        format!("{} links", stats.len()),
    ));
    if stats.is_empty() {
        return Ok(ValidationReport { checks, stats });
    }

    let bad = stats
        .iter()
        .filter(|s| {
            ![s.rms_ds, s.rms_asa, s.rms_zsa]
                .iter()
                .all(|v| v.is_finite() && *v > 0.0)
        })
        .count();
    checks.push(Check::new(
        "spreads_finite_positive",
        bad == 0,
        format!("{bad} of {} links degenerate", stats.len()),
    ));

    let cdf = stats_cdf(&stats)?;
    let monotone = METRICS.iter().all(|m| {
        let rows: Vec<_> = cdf.iter().filter(|r| r.0 == *m).collect();
        rows.windows(2).all(|w| w[0].1 < w[1].1 && w[0].2 <= w[1].2)
            && rows.last().is_some_and(|r| (r.2 - 1.0).abs() < 1e-12)
    });
    checks.push(Check::new("cdf_monotone", monotone, String::new()));

    let ds: Vec<f64> = stats.iter().map(|s| s.rms_ds).collect();
    let p90 = quantile(&ds, 0.9)?;
    let [lo, hi] = cfg.validation.ds_p90_band;
    checks.push(Check::new(
        "ds_p90_band",
        (lo..=hi).contains(&p90),
        format!(
            "p90 = {:.2} ns, band [{:.0}, {:.0}] ns",
            p90 * 1e9,
            lo * 1e9,
            hi * 1e9
        ),
    ));

    let same = first.realizations.len() == second.realizations.len()
        && first
            .realizations
            .iter()
            .zip(&second.realizations)
            .all(|(a, b)| a.comm_taps == b.comm_taps && a.sensing_taps == b.sensing_taps);
    checks.push(Check::new("deterministic", same, String::new()));

    Ok(ValidationReport { checks, stats })
}
