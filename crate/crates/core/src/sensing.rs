//! Sensing-cluster assignment.
//!
//! Communication clusters become *shared* sensing clusters with an
//! evolution probability that decays with normalized perception distance.
//! *Newborn* clusters are spawned from fresh communication-style clusters,
//! their number set by a truncated-Gaussian proportion of the sensing
//! budget. On LOS links the terminal itself is a target. After all links
//! are assigned, nearby clusters are merged agglomeratively until the
//! global count fits the cap.

use rand::Rng;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

use crate::coeff::{RcsClass, RcsModel};
use crate::comm::{generate_clusters, CommCluster, LosDirections, Ray};
use crate::error::{Error, Result};
use crate::geometry::{SphericalAngles, Vec3};
use crate::mapping::{map_cluster, MappedCluster, MappingConfig, MappingContext};
use crate::scenario::{LspParams, LspSet, PropagationCondition};

/// Piecewise-exponential evolution probability
/// `p(r̄) = 1` for `r̄ ≤ knee`, else `min(1, a·e^{−b·r̄})`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EvolutionModel {
    pub a: f64,
    pub b: f64,
    pub knee: f64,
}

impl Default for EvolutionModel {
    fn default() -> Self {
        Self {
            a: 2.664,
            b: 2.208,
            knee: 0.441,
        }
    }
}

impl EvolutionModel {
    pub fn validate(&self) -> Result<()> {
        if !(self.a > 0.0 && self.b > 0.0 && self.knee > 0.0) {
            return Err(Error::invalid(
                "evolution constants a, b and knee must be positive",
            ));
        }
        Ok(())
    }

    /// Unclamped exponential branch.
    pub fn exponential(&self, r_bar: f64) -> f64 {
        self.a * (-self.b * r_bar).exp()
    }

    /// Probability at a normalized distance.
    pub fn probability(&self, r_bar: f64) -> f64 {
        if r_bar <= self.knee {
            1.0
        } else {
            self.exponential(r_bar).min(1.0)
        }
    }
}

/// Evolution probability for perception distance `r`, propagation length
/// `length` and TX–RX distance `d`, with `r̄ = (r/d)·(length/d)`.
pub fn evolution_probability(r: f64, length: f64, d: f64, model: &EvolutionModel) -> Result<f64> {
    if !(d > 0.0) {
        return Err(Error::invalid("TX-RX distance must be positive"));
    }
    if !(r >= 0.0) || !(length >= 0.0) {
        return Err(Error::invalid(
            "perception distance and path length must be non-negative",
        ));
    }
    Ok(model.probability((r / d) * (length / d)))
}

/// Truncated Gaussian distribution of the newborn-cluster proportion.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct NewbornDistribution {
    pub mean: f64,
    pub variance: f64,
    pub lower: f64,
    pub upper: f64,
}

impl Default for NewbornDistribution {
    fn default() -> Self {
        Self {
            mean: 0.578,
            variance: 0.021,
            lower: 0.0,
            upper: 1.0,
        }
    }
}

impl NewbornDistribution {
    pub fn validate(&self) -> Result<()> {
        if !(self.variance > 0.0) {
            return Err(Error::invalid("newborn variance must be positive"));
        }
        if !(self.lower < self.upper && (self.lower..=self.upper).contains(&self.mean)) {
            return Err(Error::invalid(
                "newborn mean must lie inside the truncation range",
            ));
        }
        Ok(())
    }
}

/// Inverse-CDF sample from the truncated Gaussian.
pub fn draw_newborn_proportion<R: Rng + ?Sized>(dist: &NewbornDistribution, rng: &mut R) -> f64 {
    let normal = Normal::new(dist.mean, dist.variance.sqrt()).expect("validated distribution");
    let lo = normal.cdf(dist.lower);
    let hi = normal.cdf(dist.upper);
    let u = lo + (hi - lo) * rng.random::<f64>();
    normal.inverse_cdf(u).clamp(dist.lower, dist.upper)
}

/// `round(proportion · budget)`.
pub fn newborn_count(budget: usize, proportion: f64) -> usize {
    (proportion * budget as f64).round() as usize
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SensingKind {
    Shared,
    Newborn,
    UtTarget,
}

impl std::fmt::Display for SensingKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            SensingKind::Shared => "shared",
            SensingKind::Newborn => "newborn",
            SensingKind::UtTarget => "ut_target",
        })
    }
}

/// Scatterer point used as the perception position of a mapped cluster.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PerceptionPoint {
    #[default]
    Fbs,
    Lbs,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SensingCluster {
    pub kind: SensingKind,
    /// Global coordinates, meters.
    pub position: Vec3,
    /// Sample points for the inter-cluster linkage.
    pub points: Vec<Vec3>,
    /// Links through which the cluster was generated, sorted.
    pub source_links: Vec<usize>,
    pub rcs_class: RcsClass,
    /// Weight used for centroids and budget trimming.
    pub power: f64,
    /// Communication excess delay of the originating cluster, seconds.
    pub delay: f64,
    pub rays: Vec<Ray>,
    /// Velocity of the target, m/s.
    pub velocity: Vec3,
}

impl SensingCluster {
    fn from_mapped(
        m: &MappedCluster,
        kind: SensingKind,
        link: usize,
        point: PerceptionPoint,
        rcs_class: RcsClass,
    ) -> Self {
        let position = match point {
            PerceptionPoint::Fbs => m.fbs_global(),
            PerceptionPoint::Lbs => m.lbs_global(),
        };
        Self {
            kind,
            position,
            points: m.points_global(),
            source_links: vec![link],
            rcs_class,
            power: m.base.power,
            delay: m.base.delay,
            rays: m.base.rays.clone(),
            velocity: Vec3::ZERO,
        }
    }
}

/// Per-link context needed for assigning sensing clusters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SensingLink {
    pub index: usize,
    pub tx: Vec3,
    pub rx: Vec3,
    /// Sensing receiver; co-located with `tx` for monostatic sensing.
    pub sx: Vec3,
    pub condition: PropagationCondition,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SensingConfig {
    pub evolution: EvolutionModel,
    pub newborn: NewbornDistribution,
    pub perception_point: PerceptionPoint,
    pub ut_rcs_class: RcsClass,
}

impl Default for SensingConfig {
    fn default() -> Self {
        Self {
            evolution: EvolutionModel::default(),
            newborn: NewbornDistribution::default(),
            perception_point: PerceptionPoint::Fbs,
            ut_rcs_class: RcsClass::Pedestrian,
        }
    }
}

/// Keeps each mapped communication cluster as a shared sensing cluster with
/// its evolution probability.
pub fn assign_shared_clusters<R: Rng + ?Sized>(
    mapped: &[MappedCluster],
    link: &SensingLink,
    config: &SensingConfig,
    rcs: &RcsModel,
    rng: &mut R,
) -> Result<Vec<SensingCluster>> {
    let d = link.tx.distance(link.rx);
    let mut shared = Vec::new();
    for m in mapped {
        let point = match config.perception_point {
            PerceptionPoint::Fbs => m.fbs_global(),
            PerceptionPoint::Lbs => m.lbs_global(),
        };
        let r = point.distance(link.sx);
        let p = evolution_probability(r, m.path_length(), d, &config.evolution)?;
        // always consume one draw per cluster so streams stay aligned
        let u: f64 = rng.random();
        let class = rcs.sample_class(rng);
        if u < p {
            shared.push(SensingCluster::from_mapped(
                m,
                SensingKind::Shared,
                link.index,
                config.perception_point,
                class,
            ));
        }
    }
    Ok(shared)
}

/// What newborn clusters are generated from: the link's LSPs, the mapping
/// context and the direct-path directions.
#[derive(Debug, Clone, Copy)]
pub struct NewbornSource<'a> {
    pub lsp: &'a LspSet,
    pub params: &'a LspParams,
    pub los: LosDirections,
    pub mapping: &'a MappingContext,
    pub mapping_config: &'a MappingConfig,
}

/// Generates `n` newborn clusters through the communication generator and
/// the spatial mapper.
pub fn generate_newborn<R: Rng + ?Sized>(
    n: usize,
    link: &SensingLink,
    source: &NewbornSource<'_>,
    config: &SensingConfig,
    rcs: &RcsModel,
    rng: &mut R,
) -> Result<Vec<SensingCluster>> {
    if n == 0 {
        return Ok(Vec::new());
    }
    let clusters: Vec<CommCluster> =
        generate_clusters(source.lsp, source.params, n, source.los, rng)?;
    let mut out = Vec::with_capacity(n);
    for c in &clusters {
        let class = rcs.sample_class(rng);
        if let Some(m) = map_cluster(c, source.mapping, source.mapping_config, rng)? {
            out.push(SensingCluster::from_mapped(
                &m,
                SensingKind::Newborn,
                link.index,
                config.perception_point,
                class,
            ));
        }
    }
    Ok(out)
}

/// The terminal as a point target with a single direct ray.
pub fn ut_target(link: &SensingLink, velocity: Vec3, class: RcsClass) -> SensingCluster {
    SensingCluster {
        kind: SensingKind::UtTarget,
        position: link.rx,
        points: vec![link.rx],
        source_links: vec![link.index],
        rcs_class: class,
        power: 1.0,
        delay: 0.0,
        rays: vec![Ray {
            arrival_offset: Default::default(),
            departure_offset: Default::default(),
            xpr: 1.0,
            phases: [0.0; 4],
        }],
        velocity,
    }
}

/// Assembles a link's sensing set from its shared clusters.
///
/// `round(proportion · budget)` newborn clusters are requested. When shared
/// plus newborn exceeds the budget, the weakest shared clusters are dropped
/// from the sensing set. The terminal is appended on LOS links.
#[allow(clippy::too_many_arguments)]
pub fn build_sensing_set<R: Rng + ?Sized>(
    link: &SensingLink,
    mut shared: Vec<SensingCluster>,
    budget: usize,
    proportion: f64,
    source: &NewbornSource<'_>,
    ut_velocity: Vec3,
    config: &SensingConfig,
    rcs: &RcsModel,
    rng: &mut R,
) -> Result<Vec<SensingCluster>> {
    let n_new = newborn_count(budget, proportion).min(budget);
    let keep = budget - n_new;
    if shared.len() > keep {
        // stable: equal powers keep their original order
        let mut order: Vec<usize> = (0..shared.len()).collect();
        order.sort_by(|&i, &j| shared[j].power.total_cmp(&shared[i].power));
        let mut retained = vec![false; shared.len()];
        for &i in order.iter().take(keep) {
            retained[i] = true;
        }
        let mut idx = 0;
        shared.retain(|_| {
            let r = retained[idx];
            idx += 1;
            r
        });
    }
    let mut set = shared;
    set.extend(generate_newborn(n_new, link, source, config, rcs, rng)?);
    if link.condition.is_los() {
        set.push(ut_target(link, ut_velocity, config.ut_rcs_class));
    }
    Ok(set)
}

/// Mean squared Euclidean distance over all cross pairs of two point sets.
pub fn pair_similarity(r: &[Vec3], s: &[Vec3]) -> Result<f64> {
    if r.is_empty() || s.is_empty() {
        return Err(Error::EmptyInput("cluster point set"));
    }
    let total: f64 = r
        .iter()
        .map(|a| s.iter().map(|b| (*a - *b).norm_squared()).sum::<f64>())
        .sum();
    Ok(total / (r.len() * s.len()) as f64)
}

/// Result of a global mergence pass.
#[derive(Debug, Clone, PartialEq)]
pub struct MergeOutcome {
    pub clusters: Vec<SensingCluster>,
    /// Linkage of every merge performed, in order.
    pub merge_linkages: Vec<f64>,
}

impl MergeOutcome {
    pub fn last_linkage(&self) -> Option<f64> {
        self.merge_linkages.last().copied()
    }
}

fn merge_pair(a: SensingCluster, b: SensingCluster, rcs: &RcsModel) -> SensingCluster {
    let total = a.power + b.power;
    let position = if total > 0.0 {
        (a.position * a.power + b.position * b.power) / total
    } else {
        (a.position + b.position) / 2.0
    };
    let kind = if a.kind == SensingKind::UtTarget || b.kind == SensingKind::UtTarget {
        SensingKind::UtTarget
    } else if a.kind == SensingKind::Shared || b.kind == SensingKind::Shared {
        SensingKind::Shared
    } else {
        SensingKind::Newborn
    };
    let rcs_class = rcs.stronger(a.rcs_class, b.rcs_class);
    let mut source_links = a.source_links.clone();
    source_links.extend_from_slice(&b.source_links);
    source_links.sort_unstable();
    source_links.dedup();
    let (strong, weak) = if b.power > a.power { (b, a) } else { (a, b) };
    let mut points = strong.points;
    points.extend(weak.points);
    SensingCluster {
        kind,
        position,
        points,
        source_links,
        rcs_class,
        power: total,
        delay: strong.delay,
        rays: strong.rays,
        velocity: strong.velocity,
    }
}

/// Agglomerative mergence with the mean-squared-distance linkage.
///
/// Repeatedly merges the closest pair (lowest index pair on ties) until at
/// most `cap` clusters remain. Linkages of merged groups are updated
/// exactly from the point counts, since the mean over the union of pairs
/// is the count-weighted mean of the parts.
pub fn merge_global_scatterers(
    clusters: Vec<SensingCluster>,
    cap: usize,
    rcs: &RcsModel,
) -> Result<MergeOutcome> {
    if cap == 0 {
        return Err(Error::invalid("global cluster cap must be at least 1"));
    }
    if clusters.len() <= cap {
        return Ok(MergeOutcome {
            clusters,
            merge_linkages: Vec::new(),
        });
    }
    let n = clusters.len();
    let mut linkage = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in (i + 1)..n {
            let l = pair_similarity(&clusters[i].points, &clusters[j].points)?;
            linkage[i][j] = l;
            linkage[j][i] = l;
        }
    }
    let mut slots: Vec<Option<SensingCluster>> = clusters.into_iter().map(Some).collect();
    let mut alive: Vec<usize> = (0..n).collect();
    let mut merge_linkages = Vec::with_capacity(n - cap);

    while alive.len() > cap {
        let mut best = (f64::INFINITY, 0, 0);
        for (ai, &i) in alive.iter().enumerate() {
            for &j in &alive[ai + 1..] {
                if linkage[i][j] < best.0 {
                    best = (linkage[i][j], i, j);
                }
            }
        }
        let (l, i, j) = best;
        let a = slots[i].take().expect("alive slot");
        let b = slots[j].take().expect("alive slot");
        let (na, nb) = (a.points.len() as f64, b.points.len() as f64);
        for &k in &alive {
            if k != i && k != j {
                let updated = (na * linkage[i][k] + nb * linkage[j][k]) / (na + nb);
                linkage[i][k] = updated;
                linkage[k][i] = updated;
            }
        }
        slots[i] = Some(merge_pair(a, b, rcs));
        alive.retain(|&k| k != j);
        merge_linkages.push(l);
    }

    Ok(MergeOutcome {
        clusters: alive.into_iter().filter_map(|k| slots[k].take()).collect(),
        merge_linkages,
    })
}

/// Angles of the ray grid around a sensing cluster's echo path.
pub fn ray_directions(
    cluster: &SensingCluster,
    ray: &Ray,
    departure: SphericalAngles,
    arrival: SphericalAngles,
) -> (SphericalAngles, SphericalAngles) {
    let _ = cluster;
    (
        departure.offset(ray.departure_offset.azimuth, ray.departure_offset.zenith),
        arrival.offset(ray.arrival_offset.azimuth, ray.arrival_offset.zenith),
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::seeded;

    fn point_cluster(p: Vec3, power: f64, link: usize) -> SensingCluster {
        SensingCluster {
            kind: SensingKind::Shared,
            position: p,
            points: vec![p],
            source_links: vec![link],
            rcs_class: RcsClass::Environment,
            power,
            delay: 0.0,
            rays: Vec::new(),
            velocity: Vec3::ZERO,
        }
    }

    #[test]
    fn evolution_examples() {
        let m = EvolutionModel::default();
        assert_eq!(m.probability(0.3), 1.0);
        assert!((m.probability(1.0) - 0.2928).abs() < 1e-4);
        assert_eq!(m.probability(0.441), 1.0);
        let overshoot = m.exponential(0.441);
        assert!((overshoot - 1.00612).abs() < 1e-5);
        assert!(overshoot - 1.0 <= 0.0065);
        // r̄ = (r/d)(L/d) = (5/10)(20/10) = 1
        let p = evolution_probability(5.0, 20.0, 10.0, &m).unwrap();
        assert!((p - m.exponential(1.0)).abs() < 1e-15);
        assert!(evolution_probability(1.0, 1.0, 0.0, &m).is_err());
    }

    #[test]
    fn evolution_far_sensor_vanishes() {
        let m = EvolutionModel::default();
        let p = evolution_probability(1e6, 100.0, 50.0, &m).unwrap();
        assert!(p < 1e-12);
    }

    #[test]
    fn newborn_samples_stay_in_support() {
        let dist = NewbornDistribution::default();
        let mut rng = seeded(5);
        for _ in 0..20_000 {
            let x = draw_newborn_proportion(&dist, &mut rng);
            assert!((0.0..=1.0).contains(&x));
        }
    }

    #[test]
    fn newborn_count_rounding() {
        assert_eq!(newborn_count(16, 0.578), 9);
        assert_eq!(newborn_count(16, 0.0), 0);
        assert_eq!(newborn_count(26, 1.0), 26);
    }

    #[test]
    fn similarity_examples() {
        let o = Vec3::ZERO;
        assert_eq!(pair_similarity(&[o], &[o]).unwrap(), 0.0);
        let r = [Vec3::new(0.0, 0.0, 0.0), Vec3::new(2.0, 0.0, 0.0)];
        let s = [Vec3::new(1.0, 1.0, 0.0)];
        assert_eq!(pair_similarity(&r, &s).unwrap(), 2.0);
        assert_eq!(pair_similarity(&s, &r).unwrap(), 2.0);
        assert!(pair_similarity(&[], &s).is_err());
    }

    #[test]
    fn merge_identical_positions() {
        let p = Vec3::new(3.0, 4.0, 5.0);
        let out = merge_global_scatterers(
            vec![point_cluster(p, 1.0, 0), point_cluster(p, 2.0, 1)],
            1,
            &RcsModel::default(),
        )
        .unwrap();
        assert_eq!(out.clusters.len(), 1);
        assert!((out.clusters[0].position - p).norm() < 1e-12);
        assert_eq!(out.clusters[0].source_links, vec![0, 1]);
    }

    #[test]
    fn merge_nearest_pair_first() {
        let cs = vec![
            point_cluster(Vec3::new(0.0, 0.0, 0.0), 1.0, 0),
            point_cluster(Vec3::new(0.1, 0.0, 0.0), 3.0, 0),
            point_cluster(Vec3::new(100.0, 0.0, 0.0), 1.0, 1),
        ];
        let out = merge_global_scatterers(cs, 2, &RcsModel::default()).unwrap();
        assert_eq!(out.clusters.len(), 2);
        assert!((out.clusters[0].position.x - 0.075).abs() < 1e-12);
        assert_eq!(out.clusters[1].position.x, 100.0);
        assert!((out.last_linkage().unwrap() - 0.01).abs() < 1e-12);
    }

    #[test]
    fn merge_noop_under_cap() {
        let cs = vec![point_cluster(Vec3::ZERO, 1.0, 0)];
        let out = merge_global_scatterers(cs.clone(), 3, &RcsModel::default()).unwrap();
        assert_eq!(out.clusters, cs);
        assert!(out.merge_linkages.is_empty());
    }

    #[test]
    fn merged_class_takes_higher_range() {
        let mut a = point_cluster(Vec3::ZERO, 1.0, 0);
        a.rcs_class = RcsClass::Pedestrian;
        let mut b = point_cluster(Vec3::new(1.0, 0.0, 0.0), 1.0, 0);
        b.rcs_class = RcsClass::Vehicle;
        let out = merge_global_scatterers(vec![a, b], 1, &RcsModel::default()).unwrap();
        assert_eq!(out.clusters[0].rcs_class, RcsClass::Vehicle);
    }

    #[test]
    fn shared_rate_at_unit_normalized_distance() {
        // tx at origin, rx at distance 10, FBS placed so r = 5 and d_l = 20
        let m = EvolutionModel::default();
        let mut rng = seeded(17);
        let n = 20_000;
        let hits = (0..n)
            .filter(|_| rng.random::<f64>() < evolution_probability(5.0, 20.0, 10.0, &m).unwrap())
            .count();
        let rate = hits as f64 / n as f64;
        assert!((rate - 0.2928).abs() < 0.015, "{rate}");
    }
}
