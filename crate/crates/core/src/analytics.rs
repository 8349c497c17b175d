//! Multipath-component clustering and cluster statistics.
//!
//! K-Power-Means runs in a feature space where each sample is
//! `[√w_τ·τ/σ_τ, √w_a·û]`, with `û` the unit arrival direction. Squared
//! Euclidean distance there is the weighted sum of normalized delay
//! distance and squared chord distance between directions, so Lloyd
//! iterations with power-weighted means never increase the objective.

use std::f64::consts::TAU;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{direction_vector, SphericalAngles};

/// One multipath component.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MpcSample {
    pub delay: f64,
    pub power: f64,
    pub azimuth: f64,
    pub zenith: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct KpmConfig {
    pub delay_weight: f64,
    pub angle_weight: f64,
    pub n_init: usize,
    pub max_iter: usize,
}

impl Default for KpmConfig {
    fn default() -> Self {
        Self {
            delay_weight: 1.0,
            angle_weight: 1.0,
            n_init: 10,
            max_iter: 100,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClusteringResult {
    pub k: usize,
    /// 0-based cluster label per sample.
    pub labels: Vec<usize>,
    pub centers: Vec<Vec<f64>>,
    /// Power-weighted sum of squared distances to the assigned centers.
    pub objective: f64,
    pub iterations: usize,
}

/// Maps samples into the clustering feature space.
pub fn embed(samples: &[MpcSample], config: &KpmConfig) -> Vec<Vec<f64>> {
    let n = samples.len().max(1) as f64;
    let mean = samples.iter().map(|s| s.delay).sum::<f64>() / n;
    let var = samples
        .iter()
        .map(|s| (s.delay - mean).powi(2))
        .sum::<f64>()
        / n;
    let scale = if var > 0.0 { var.sqrt() } else { 1.0 };
    let (wt, wa) = (config.delay_weight.sqrt(), config.angle_weight.sqrt());
    samples
        .iter()
        .map(|s| {
            let u = direction_vector(SphericalAngles::new(s.azimuth, s.zenith));
            vec![wt * s.delay / scale, wa * u.x, wa * u.y, wa * u.z]
        })
        .collect()
}

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum()
}

fn l1_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).sum()
}

fn validate_samples(samples: &[MpcSample], k: usize) -> Result<()> {
    if samples.is_empty() {
        return Err(Error::EmptyInput("MPC samples"));
    }
    if k == 0 || k > samples.len() {
        return Err(Error::invalid(format!(
            "k must lie in [1, {}], got {k}",
            samples.len()
        )));
    }
    for (i, s) in samples.iter().enumerate() {
        if !(s.power >= 0.0)
            || !s.delay.is_finite()
            || !s.azimuth.is_finite()
            || !s.zenith.is_finite()
        {
            return Err(Error::invalid(format!(
                "MPC sample {i} is not finite or has negative power"
            )));
        }
    }
    if samples.iter().all(|s| s.power == 0.0) {
        return Err(Error::invalid("all MPC powers are zero"));
    }
    Ok(())
}

fn assign(x: &[Vec<f64>], centers: &[Vec<f64>]) -> Vec<usize> {
    x.iter()
        .map(|p| {
            let mut best = (f64::INFINITY, 0);
            for (j, c) in centers.iter().enumerate() {
                let d = sq_dist(p, c);
                if d < best.0 {
                    best = (d, j);
                }
            }
            best.1
        })
        .collect()
}

fn objective(x: &[Vec<f64>], w: &[f64], centers: &[Vec<f64>], labels: &[usize]) -> f64 {
    x.iter()
        .zip(w)
        .zip(labels)
        .map(|((p, &wi), &l)| wi * sq_dist(p, &centers[l]))
        .sum()
}

/// Lloyd iterations from the given centers. Empty clusters are reseeded
/// with the sample farthest from its current center.
pub fn kpm_from_centers(
    x: &[Vec<f64>],
    weights: &[f64],
    mut centers: Vec<Vec<f64>>,
    max_iter: usize,
) -> ClusteringResult {
    let k = centers.len();
    let dim = x.first().map_or(0, |p| p.len());
    let mut labels = assign(x, &centers);
    let mut iterations = 0;
    for _ in 0..max_iter {
        iterations += 1;
        let mut sums = vec![vec![0.0; dim]; k];
        let mut mass = vec![0.0; k];
        for ((p, &w), &l) in x.iter().zip(weights).zip(&labels) {
            mass[l] += w;
            for (s, v) in sums[l].iter_mut().zip(p) {
                *s += w * v;
            }
        }
        for j in 0..k {
            if mass[j] > 0.0 {
                centers[j] = sums[j].iter().map(|s| s / mass[j]).collect();
            } else {
                let far = (0..x.len())
                    .max_by(|&a, &b| {
                        sq_dist(&x[a], &centers[labels[a]])
                            .total_cmp(&sq_dist(&x[b], &centers[labels[b]]))
                    })
                    .unwrap_or(0);
                centers[j] = x[far].clone();
            }
        }
        let next = assign(x, &centers);
        if next == labels {
            break;
        }
        labels = next;
    }
    let objective = objective(x, weights, &centers, &labels);
    ClusteringResult {
        k,
        labels,
        centers,
        objective,
        iterations,
    }
}

/// Power-weighted k-means++ seeding.
fn kpp_init<R: Rng + ?Sized>(x: &[Vec<f64>], w: &[f64], k: usize, rng: &mut R) -> Vec<Vec<f64>> {
    let pick = |probs: &[f64], rng: &mut R| -> usize {
        let total: f64 = probs.iter().sum();
        if !(total > 0.0) {
            return rng.random_range(0..probs.len());
        }
        let mut u = rng.random::<f64>() * total;
        for (i, &p) in probs.iter().enumerate() {
            if u < p {
                return i;
            }
            u -= p;
        }
        probs.len() - 1
    };
    let mut centers = vec![x[pick(w, rng)].clone()];
    let mut d2: Vec<f64> = x.iter().map(|p| sq_dist(p, &centers[0])).collect();
    while centers.len() < k {
        let probs: Vec<f64> = d2.iter().zip(w).map(|(d, wi)| d * wi).collect();
        let c = x[pick(&probs, rng)].clone();
        for (d, p) in d2.iter_mut().zip(x) {
            *d = d.min(sq_dist(p, &c));
        }
        centers.push(c);
    }
    centers
}

/// K-Power-Means with `n_init` k-means++ restarts; returns the best run.
pub fn k_power_means<R: Rng + ?Sized>(
    samples: &[MpcSample],
    k: usize,
    config: &KpmConfig,
    rng: &mut R,
) -> Result<ClusteringResult> {
    validate_samples(samples, k)?;
    let x = embed(samples, config);
    let w: Vec<f64> = samples.iter().map(|s| s.power).collect();
    let mut best: Option<ClusteringResult> = None;
    for _ in 0..config.n_init.max(1) {
        let init = kpp_init(&x, &w, k, rng);
        let run = kpm_from_centers(&x, &w, init, config.max_iter);
        if best.as_ref().is_none_or(|b| run.objective < b.objective) {
            best = Some(run);
        }
    }
    Ok(best.expect("at least one restart"))
}

fn group_stats(x: &[Vec<f64>], labels: &[usize], k: usize) -> (Vec<Vec<f64>>, Vec<usize>) {
    let dim = x.first().map_or(0, |p| p.len());
    let mut c = vec![vec![0.0; dim]; k];
    let mut n = vec![0usize; k];
    for (p, &l) in x.iter().zip(labels) {
        n[l] += 1;
        for (s, v) in c[l].iter_mut().zip(p) {
            *s += v;
        }
    }
    for (ci, &ni) in c.iter_mut().zip(&n) {
        if ni > 0 {
            ci.iter_mut().for_each(|v| *v /= ni as f64);
        }
    }
    (c, n)
}

/// Calinski–Harabasz index; `+∞` when all samples sit on their centroids,
/// NaN-free `0` contributions for single-cluster input are reported as an
/// error since the index is undefined there.
pub fn calinski_harabasz(x: &[Vec<f64>], labels: &[usize]) -> Result<f64> {
    let n = x.len();
    let k = labels.iter().max().map_or(0, |m| m + 1);
    if k < 2 || n <= k {
        return Err(Error::invalid("Calinski-Harabasz needs 2 <= K < N"));
    }
    let (c, counts) = group_stats(x, labels, k);
    let dim = x[0].len();
    let mut mean = vec![0.0; dim];
    for p in x {
        mean.iter_mut().zip(p).for_each(|(m, v)| *m += v / n as f64);
    }
    let between: f64 = c
        .iter()
        .zip(&counts)
        .map(|(ci, &ni)| ni as f64 * sq_dist(ci, &mean))
        .sum();
    let within: f64 = x.iter().zip(labels).map(|(p, &l)| sq_dist(p, &c[l])).sum();
    if within == 0.0 {
        return Ok(f64::INFINITY);
    }
    Ok((between / (k - 1) as f64) / (within / (n - k) as f64))
}

/// Davies–Bouldin index with L1 scatter and centroid separation.
/// `+∞` if two centroids coincide.
pub fn davies_bouldin(x: &[Vec<f64>], labels: &[usize]) -> Result<f64> {
    let k = labels.iter().max().map_or(0, |m| m + 1);
    if k < 2 {
        return Err(Error::invalid("Davies-Bouldin needs at least two clusters"));
    }
    let (c, counts) = group_stats(x, labels, k);
    let mut scatter = vec![0.0; k];
    for (p, &l) in x.iter().zip(labels) {
        scatter[l] += l1_dist(p, &c[l]);
    }
    for (s, &n) in scatter.iter_mut().zip(&counts) {
        if n > 0 {
            *s /= n as f64;
        }
    }
    let live: Vec<usize> = (0..k).filter(|&j| counts[j] > 0).collect();
    let mut total = 0.0;
    for &i in &live {
        let mut worst = 0.0f64;
        for &j in &live {
            if i == j {
                continue;
            }
            let sep = l1_dist(&c[i], &c[j]);
            let r = if sep == 0.0 {
                f64::INFINITY
            } else {
                (scatter[i] + scatter[j]) / sep
            };
            worst = worst.max(r);
        }
        total += worst;
    }
    Ok(total / live.len() as f64)
}

/// Index values for one candidate K.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IndexPoint {
    pub k: usize,
    pub ch: f64,
    pub db: f64,
}

/// `CI(K) = DB̄/DB(K) + CH(K)/CH̄`, the bars being means over the candidate
/// range. Returns per-K scores and the best K (smallest on ties).
pub fn combined_indicator(points: &[IndexPoint]) -> Result<(Vec<f64>, usize)> {
    if points.is_empty() {
        return Err(Error::EmptyInput("candidate K values"));
    }
    let finite_mean = |f: &dyn Fn(&IndexPoint) -> f64| {
        let v: Vec<f64> = points.iter().map(f).filter(|x| x.is_finite()).collect();
        if v.is_empty() {
            1.0
        } else {
            v.iter().sum::<f64>() / v.len() as f64
        }
    };
    let db_bar = finite_mean(&|p| p.db);
    let ch_bar = finite_mean(&|p| p.ch);
    let scores: Vec<f64> = points
        .iter()
        .map(|p| {
            let a = if p.db > 0.0 {
                db_bar / p.db
            } else {
                f64::INFINITY
            };
            let b = if ch_bar != 0.0 { p.ch / ch_bar } else { 0.0 };
            a + b
        })
        .collect();
    let mut best = 0;
    for (i, &s) in scores.iter().enumerate() {
        let better = s > scores[best] || (s == scores[best] && points[i].k < points[best].k);
        if better {
            best = i;
        }
    }
    Ok((scores, points[best].k))
}

/// Clusters for every K in `k_range` and scores each with CH, DB and CI.
#[derive(Debug, Clone)]
pub struct KSweep {
    pub points: Vec<IndexPoint>,
    pub scores: Vec<f64>,
    pub best_k: usize,
    pub best: ClusteringResult,
}

pub fn sweep_k<R: Rng + ?Sized>(
    samples: &[MpcSample],
    k_range: std::ops::RangeInclusive<usize>,
    config: &KpmConfig,
    rng: &mut R,
) -> Result<KSweep> {
    let lo = (*k_range.start()).max(2);
    let hi = (*k_range.end()).min(samples.len().saturating_sub(1));
    if lo > hi {
        return Err(Error::invalid(format!(
            "K range {}..={} is empty for {} samples",
            k_range.start(),
            k_range.end(),
            samples.len()
        )));
    }
    let x = embed(samples, config);
    let mut points = Vec::new();
    let mut runs = Vec::new();
    for k in lo..=hi {
        let run = k_power_means(samples, k, config, rng)?;
        points.push(IndexPoint {
            k,
            ch: calinski_harabasz(&x, &run.labels).unwrap_or(f64::NAN),
            db: davies_bouldin(&x, &run.labels).unwrap_or(f64::NAN),
        });
        runs.push(run);
    }
    let (scores, best_k) = combined_indicator(&points)?;
    let best = runs.swap_remove(best_k - lo);
    Ok(KSweep {
        points,
        scores,
        best_k,
        best,
    })
}

/// Power-weighted RMS spread. Angles (`circular = true`) are measured as
/// wrapped deviations from the circular mean.
pub fn rms_spread(values: &[f64], powers: &[f64], circular: bool) -> Result<f64> {
    if values.is_empty() || values.len() != powers.len() {
        return Err(Error::invalid(
            "values and powers must be non-empty and of equal length",
        ));
    }
    let total: f64 = powers.iter().sum();
    if !(total > 0.0) {
        return Err(Error::invalid("total power must be positive"));
    }
    if circular {
        let (s, c) = values
            .iter()
            .zip(powers)
            .fold((0.0, 0.0), |(s, c), (&v, &p)| {
                (s + p * v.sin(), c + p * v.cos())
            });
        let mean = s.atan2(c);
        let var = values
            .iter()
            .zip(powers)
            .map(|(&v, &p)| p * crate::geometry::wrap_pi(v - mean).powi(2))
            .sum::<f64>()
            / total;
        Ok(var.sqrt())
    } else {
        let mean = values.iter().zip(powers).map(|(v, p)| v * p).sum::<f64>() / total;
        let var = values
            .iter()
            .zip(powers)
            .map(|(v, p)| p * (v - mean).powi(2))
            .sum::<f64>()
            / total;
        Ok(var.max(0.0).sqrt())
    }
}

/// Empirical CDF as `(value, P[X ≤ value])`, one point per distinct value.
pub fn empirical_cdf(values: &[f64]) -> Result<Vec<(f64, f64)>> {
    if values.is_empty() {
        return Err(Error::EmptyInput("CDF values"));
    }
    if values.iter().any(|v| v.is_nan()) {
        return Err(Error::invalid("CDF values must not be NaN"));
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len() as f64;
    let mut out: Vec<(f64, f64)> = Vec::new();
    for (i, &x) in v.iter().enumerate() {
        let p = (i + 1) as f64 / n;
        match out.last_mut() {
            Some(last) if last.0 == x => last.1 = p,
            _ => out.push((x, p)),
        }
    }
    Ok(out)
}

/// Linear-interpolated quantile of unsorted data, `q ∈ [0, 1]`.
pub fn quantile(values: &[f64], q: f64) -> Result<f64> {
    if values.is_empty() {
        return Err(Error::EmptyInput("quantile values"));
    }
    if !(0.0..=1.0).contains(&q) {
        return Err(Error::invalid("quantile must lie in [0, 1]"));
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let pos = q * (v.len() - 1) as f64;
    let i = pos.floor() as usize;
    let j = (i + 1).min(v.len() - 1);
    Ok(v[i] + (v[j] - v[i]) * (pos - i as f64))
}

/// Wraps an angle difference into the azimuth range, for plotting helpers.
pub fn unwrap_azimuth(a: f64) -> f64 {
    a.rem_euclid(TAU)
}
