//! Communication cluster and ray generation.
//!
//! Follows the TR 38.901 fast-fading procedure: exponential delays,
//! exponential power law with per-cluster shadowing, inverse-Gaussian
//! azimuth / inverse-Laplacian zenith mapping, 20 rays per cluster on a
//! fixed offset grid, random ray coupling, and per-ray XPR and phases.
//! Sub-cluster delay splitting is not modeled.

use std::f64::consts::TAU;

use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::{Distribution, Normal, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::SphericalAngles;
use crate::scenario::{LspParams, LspSet, RAYS_PER_CLUSTER};

/// Normalized intra-cluster ray offsets (TR 38.901 Table 7.5-3).
pub const RAY_OFFSETS: [f64; RAYS_PER_CLUSTER] = [
    0.0447, -0.0447, 0.1413, -0.1413, 0.2492, -0.2492, 0.3715, -0.3715, 0.5129, -0.5129, 0.6797,
    -0.6797, 0.8844, -0.8844, 1.1481, -1.1481, 1.5195, -1.5195, 2.1551, -2.1551,
];

/// Signed angular offset in radians. Unlike [`SphericalAngles`] this is not
/// wrapped, since it is added to a cluster mean.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct AngleOffset {
    pub azimuth: f64,
    pub zenith: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Ray {
    pub arrival_offset: AngleOffset,
    pub departure_offset: AngleOffset,
    /// Cross-polarization power ratio, linear.
    pub xpr: f64,
    /// Initial phases θθ, θφ, φθ, φφ in `[0, 2π)`.
    pub phases: [f64; 4],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CommCluster {
    /// Excess delay over the earliest cluster, seconds.
    pub delay: f64,
    /// Fraction of the link's scattered power.
    pub power: f64,
    pub arrival: SphericalAngles,
    pub departure: SphericalAngles,
    pub rays: Vec<Ray>,
}

impl CommCluster {
    pub fn ray_power(&self) -> f64 {
        self.power / self.rays.len().max(1) as f64
    }

    pub fn ray_arrival(&self, ray: &Ray) -> SphericalAngles {
        self.arrival
            .offset(ray.arrival_offset.azimuth, ray.arrival_offset.zenith)
    }

    pub fn ray_departure(&self, ray: &Ray) -> SphericalAngles {
        self.departure
            .offset(ray.departure_offset.azimuth, ray.departure_offset.zenith)
    }
}

/// Un-normalized exponential delays `-r_τ · DS · ln U`.
pub fn draw_raw_delays<R: Rng + ?Sized>(ds: f64, r_tau: f64, n: usize, rng: &mut R) -> Vec<f64> {
    (0..n)
        .map(|_| {
            // open interval so ln never sees 0
            let u: f64 = 1.0 - rng.random::<f64>();
            -r_tau * ds * u.ln()
        })
        .collect()
}

/// Sorted cluster delays with the first one at exactly zero.
pub fn generate_cluster_delays<R: Rng + ?Sized>(
    ds: f64,
    r_tau: f64,
    n: usize,
    rng: &mut R,
) -> Result<Vec<f64>> {
    if !(ds > 0.0) {
        return Err(Error::invalid(format!(
            "delay spread must be positive, got {ds}"
        )));
    }
    if !(r_tau > 1.0) {
        return Err(Error::invalid(format!(
            "delay scaling must exceed 1, got {r_tau}"
        )));
    }
    if n == 0 {
        return Err(Error::invalid("cluster count must be at least 1"));
    }
    let mut delays = draw_raw_delays(ds, r_tau, n, rng);
    delays.sort_by(f64::total_cmp);
    let first = delays[0];
    for d in &mut delays {
        *d -= first;
    }
    Ok(delays)
}

/// Normalized cluster powers for given per-cluster shadowing terms (dB).
pub fn cluster_powers(delays: &[f64], ds: f64, r_tau: f64, shadow_db: &[f64]) -> Result<Vec<f64>> {
    if delays.is_empty() {
        return Err(Error::EmptyInput("cluster delays"));
    }
    if delays.len() != shadow_db.len() {
        return Err(Error::invalid("one shadowing term per cluster is required"));
    }
    if !(ds > 0.0) || !(r_tau > 1.0) {
        return Err(Error::invalid(
            "delay spread must be positive and delay scaling above 1",
        ));
    }
    let raw: Vec<f64> = delays
        .iter()
        .zip(shadow_db)
        .map(|(&tau, &z)| (-tau * (r_tau - 1.0) / (r_tau * ds)).exp() * 10f64.powf(-z / 10.0))
        .collect();
    let total: f64 = raw.iter().sum();
    Ok(raw.into_iter().map(|p| p / total).collect())
}

/// Normalized cluster powers with shadowing drawn from `N(0, ζ²)`.
pub fn generate_cluster_powers<R: Rng + ?Sized>(
    delays: &[f64],
    ds: f64,
    r_tau: f64,
    shadow_std_db: f64,
    rng: &mut R,
) -> Result<Vec<f64>> {
    let shadow: Vec<f64> = (0..delays.len())
        .map(|_| {
            let z: f64 = StandardNormal.sample(rng);
            shadow_std_db * z
        })
        .collect();
    cluster_powers(delays, ds, r_tau, &shadow)
}

/// Link-level angular spreads, degrees.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AngularSpreads {
    pub asa: f64,
    pub asd: f64,
    pub zsa: f64,
    pub zsd: f64,
}

impl From<&LspSet> for AngularSpreads {
    fn from(l: &LspSet) -> Self {
        Self {
            asa: l.asa,
            asd: l.asd,
            zsa: l.zsa,
            zsd: l.zsd,
        }
    }
}

/// Direct-path departure (at TX) and arrival (at RX) directions.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LosDirections {
    pub departure: SphericalAngles,
    pub arrival: SphericalAngles,
}

const AZIMUTH_SCALING: [(f64, f64); 12] = [
    (4.0, 0.779),
    (5.0, 0.860),
    (8.0, 1.018),
    (10.0, 1.090),
    (11.0, 1.123),
    (12.0, 1.146),
    (14.0, 1.190),
    (15.0, 1.211),
    (16.0, 1.226),
    (19.0, 1.273),
    (20.0, 1.289),
    (25.0, 1.358),
];

const ZENITH_SCALING: [(f64, f64); 8] = [
    (8.0, 0.889),
    (10.0, 0.957),
    (11.0, 1.031),
    (12.0, 1.104),
    (15.0, 1.1088),
    (19.0, 1.184),
    (20.0, 1.178),
    (25.0, 1.282),
];

fn interpolate(table: &[(f64, f64)], x: f64) -> f64 {
    let (first, last) = (table[0], table[table.len() - 1]);
    if x <= first.0 {
        return first.1;
    }
    if x >= last.0 {
        return last.1;
    }
    let i = table
        .iter()
        .position(|&(k, _)| k >= x)
        .unwrap_or(table.len() - 1);
    let (x0, y0) = table[i - 1];
    let (x1, y1) = table[i];
    y0 + (y1 - y0) * (x - x0) / (x1 - x0)
}

fn azimuth_scaling(n: usize, k_db: Option<f64>) -> f64 {
    let base = interpolate(&AZIMUTH_SCALING, n as f64);
    match k_db {
        Some(k) => base * (1.1035 - 0.028 * k - 0.002 * k * k + 0.0001 * k * k * k),
        None => base,
    }
}

fn zenith_scaling(n: usize, k_db: Option<f64>) -> f64 {
    let base = interpolate(&ZENITH_SCALING, n as f64);
    match k_db {
        Some(k) => base * (1.3086 + 0.0339 * k - 0.0077 * k * k + 0.0002 * k * k * k),
        None => base,
    }
}

/// Mean arrival and departure angles of each cluster.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClusterAngles {
    pub arrival: SphericalAngles,
    pub departure: SphericalAngles,
}

/// Draws per-cluster mean angles around the direct-path directions.
///
/// With `k_factor_db` set (LOS link) the strongest cluster is pinned to the
/// direct-path direction and the scaling factors include the K correction.
pub fn generate_cluster_angles<R: Rng + ?Sized>(
    powers: &[f64],
    spreads: AngularSpreads,
    los: LosDirections,
    k_factor_db: Option<f64>,
    rng: &mut R,
) -> Vec<ClusterAngles> {
    let n = powers.len();
    if n == 0 {
        return Vec::new();
    }
    let max_p = powers.iter().copied().fold(f64::MIN_POSITIVE, f64::max);
    let strongest = powers
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.total_cmp(b.1))
        .map(|(i, _)| i)
        .unwrap_or(0);
    let c_az = azimuth_scaling(n, k_factor_db);
    let c_zen = zenith_scaling(n, k_factor_db);

    // All four angle sets share the same draw pattern: base offset from the
    // power ratio, random sign, and a Gaussian jitter of spread/7.
    let mut draw_set = |spread_deg: f64, azimuth: bool| -> Vec<f64> {
        let jitter = Normal::new(0.0, spread_deg / 7.0).expect("finite spread");
        let mut offsets: Vec<f64> = powers
            .iter()
            .map(|&p| {
                let ratio = (p / max_p).clamp(f64::MIN_POSITIVE, 1.0);
                let base = if azimuth {
                    2.0 * (spread_deg / 1.4) * (-ratio.ln()).sqrt() / c_az
                } else {
                    -spread_deg * ratio.ln() / c_zen
                };
                let sign = if rng.random::<bool>() { 1.0 } else { -1.0 };
                sign * base + jitter.sample(rng)
            })
            .collect();
        if k_factor_db.is_some() {
            let pin = offsets[strongest];
            for o in &mut offsets {
                *o -= pin;
            }
        }
        offsets.into_iter().map(f64::to_radians).collect()
    };

    let aoa = draw_set(spreads.asa, true);
    let aod = draw_set(spreads.asd, true);
    let zoa = draw_set(spreads.zsa, false);
    let zod = draw_set(spreads.zsd, false);

    (0..n)
        .map(|i| ClusterAngles {
            arrival: los.arrival.offset(aoa[i], zoa[i]),
            departure: los.departure.offset(aod[i], zod[i]),
        })
        .collect()
}

/// Intra-cluster spreads used to place the 20 rays, degrees.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RaySpreads {
    pub asa: f64,
    pub asd: f64,
    pub zsa: f64,
    pub zsd: f64,
}

impl From<&LspParams> for RaySpreads {
    fn from(p: &LspParams) -> Self {
        Self {
            asa: p.cluster_asa_deg,
            asd: p.cluster_asd_deg,
            zsa: p.cluster_zsa_deg,
            zsd: p.cluster_zsd_deg(),
        }
    }
}

/// Uncoupled rays on the fixed offset grid, unit XPR and zero phases.
pub fn ray_grid(spreads: RaySpreads) -> Vec<Ray> {
    RAY_OFFSETS
        .iter()
        .map(|&a| Ray {
            arrival_offset: AngleOffset {
                azimuth: (spreads.asa * a).to_radians(),
                zenith: (spreads.zsa * a).to_radians(),
            },
            departure_offset: AngleOffset {
                azimuth: (spreads.asd * a).to_radians(),
                zenith: (spreads.zsd * a).to_radians(),
            },
            xpr: 1.0,
            phases: [0.0; 4],
        })
        .collect()
}

/// Randomly couples the ray offsets and draws XPR and initial phases.
///
/// Zenith-of-arrival, azimuth-of-departure and zenith-of-departure offsets
/// are each shuffled independently against the azimuth-of-arrival order.
pub fn couple_rays_and_xpr<R: Rng + ?Sized>(
    mut cluster: CommCluster,
    xpr_mu_db: f64,
    xpr_sigma_db: f64,
    rng: &mut R,
) -> CommCluster {
    let n = cluster.rays.len();
    let mut shuffled = |get: fn(&Ray) -> f64| -> Vec<f64> {
        let mut v: Vec<f64> = cluster.rays.iter().map(get).collect();
        v.shuffle(rng);
        v
    };
    let zoa = shuffled(|r| r.arrival_offset.zenith);
    let aod = shuffled(|r| r.departure_offset.azimuth);
    let zod = shuffled(|r| r.departure_offset.zenith);
    for m in 0..n {
        let ray = &mut cluster.rays[m];
        ray.arrival_offset.zenith = zoa[m];
        ray.departure_offset.azimuth = aod[m];
        ray.departure_offset.zenith = zod[m];
        let x: f64 = StandardNormal.sample(rng);
        ray.xpr = 10f64.powf((xpr_mu_db + xpr_sigma_db * x) / 10.0);
        for phase in &mut ray.phases {
            *phase = rng.random::<f64>() * TAU;
        }
    }
    cluster
}

/// Runs the full small-scale procedure for `n` clusters of one link.
pub fn generate_clusters<R: Rng + ?Sized>(
    lsp: &LspSet,
    params: &LspParams,
    n: usize,
    los: LosDirections,
    rng: &mut R,
) -> Result<Vec<CommCluster>> {
    let delays = generate_cluster_delays(lsp.delay_spread, params.delay_scaling, n, rng)?;
    let powers = generate_cluster_powers(
        &delays,
        lsp.delay_spread,
        params.delay_scaling,
        params.cluster_shadowing_db,
        rng,
    )?;
    let angles = generate_cluster_angles(&powers, lsp.into(), los, lsp.k_factor_db, rng);
    let grid = ray_grid(params.into());
    Ok(delays
        .into_iter()
        .zip(powers)
        .zip(angles)
        .map(|((delay, power), ang)| {
            let cluster = CommCluster {
                delay,
                power,
                arrival: ang.arrival,
                departure: ang.departure,
                rays: grid.clone(),
            };
            couple_rays_and_xpr(cluster, params.xpr_mu_db, params.xpr_sigma_db, rng)
        })
        .collect())
}
