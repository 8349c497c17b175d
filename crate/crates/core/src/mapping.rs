//! Spatial mapping of clusters onto first- and last-bounce scatterers.
//!
//! Coordinates are in a TX-origin frame; `r = tx − rx` points from the
//! receiver to the transmitter, so the receiver sits at `−r`.
//!
//! For a path of total length `d_l`, the first-bounce scatterer (FBS) lies
//! on the departure ray at a drawn distance `|b|`, and the last-bounce
//! scatterer (LBS) on the arrival ray at the distance `|a|` that closes the
//! FBS–LBS–RX triangle with the remaining length. Paths too short for two
//! bounces collapse to one scatterer on the delay ellipsoid.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::comm::CommCluster;
use crate::error::{Error, Result};
use crate::geometry::{direction_vector, SphericalAngles, Vec3};
use crate::SPEED_OF_LIGHT;

/// Default minimum TX/RX-to-scatterer distance, meters.
pub const DEFAULT_MIN_SCATTERER_DISTANCE: f64 = 1.0;

/// Default number of `|b|` redraws before the single-bounce fallback.
pub const DEFAULT_MAX_RETRIES: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MappingContext {
    pub tx: Vec3,
    pub rx: Vec3,
    /// `tx − rx`.
    pub r: Vec3,
    pub d_min: f64,
}

impl MappingContext {
    pub fn new(tx: Vec3, rx: Vec3, d_min: f64) -> Result<Self> {
        let r = tx - rx;
        let dist = r.norm();
        if !(dist > 0.0) {
            return Err(Error::invalid("TX and RX must not coincide"));
        }
        if !(d_min > 0.0 && d_min < dist / 2.0) {
            return Err(Error::invalid(format!(
                "d_min must lie in (0, {:.3}) for a {dist:.3} m link, got {d_min}",
                dist / 2.0
            )));
        }
        Ok(Self { tx, rx, r, d_min })
    }

    pub fn distance(&self) -> f64 {
        self.r.norm()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MappingMode {
    /// One scatterer pair per cluster from the cluster-mean angles.
    #[default]
    PerCluster,
    /// Additionally map every ray to its own first-bounce scatterer.
    PerRay,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MappingConfig {
    pub max_retries: usize,
    pub mode: MappingMode,
    /// Extra path length added to every cluster before mapping, meters.
    ///
    /// Cluster delays start at zero, which would put the first cluster on
    /// the direct TX–RX segment. An extra length of `2·d_min` keeps every
    /// fallback scatterer at least `d_min` from both ends.
    pub extra_path_length: f64,
}

impl Default for MappingConfig {
    fn default() -> Self {
        Self {
            max_retries: DEFAULT_MAX_RETRIES,
            mode: MappingMode::PerCluster,
            extra_path_length: 0.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MappedCluster {
    pub base: CommCluster,
    /// Frame origin (TX position) in global coordinates.
    pub origin: Vec3,
    pub fbs: Vec3,
    pub lbs: Vec3,
    pub len_b: f64,
    pub len_c: f64,
    pub len_a: f64,
    pub single_bounce: bool,
    /// Per-ray first-bounce scatterers (TX frame); empty in per-cluster mode.
    pub ray_scatterers: Vec<Vec3>,
}

impl MappedCluster {
    pub fn path_length(&self) -> f64 {
        self.len_b + self.len_c + self.len_a
    }

    pub fn fbs_global(&self) -> Vec3 {
        self.origin + self.fbs
    }

    pub fn lbs_global(&self) -> Vec3 {
        self.origin + self.lbs
    }

    /// Scatterer sample points in global coordinates.
    pub fn points_global(&self) -> Vec<Vec3> {
        if self.ray_scatterers.is_empty() {
            vec![self.fbs_global()]
        } else {
            self.ray_scatterers
                .iter()
                .map(|&p| self.origin + p)
                .collect()
        }
    }
}

/// `d_l = τ·c + |r|`.
pub fn total_path_length(tau: f64, ctx: &MappingContext) -> f64 {
    tau * SPEED_OF_LIGHT + ctx.distance()
}

/// Scatterer geometry of one path in the TX frame.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BounceGeometry {
    pub fbs: Vec3,
    pub lbs: Vec3,
    pub len_b: f64,
    pub len_c: f64,
    pub len_a: f64,
    pub single_bounce: bool,
}

/// Outcome of the two-bounce construction for one `|b|`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TwoBounce {
    Feasible(BounceGeometry),
    /// `|a|` fell below `d_min`; carries the computed `|a|`.
    TooShort(f64),
    /// Non-positive cosine-theorem denominator.
    Infeasible,
}

/// Two-bounce construction for a fixed `|b|`.
///
/// `d' = d_l − |b|`, `d = r + b̂|b|` (RX → FBS), and
/// `|a| = (d'² − |d|²) / (2(d' − dᵀâ))`.
pub fn two_bounce(
    d_l: f64,
    b_hat: Vec3,
    a_hat: Vec3,
    b_len: f64,
    ctx: &MappingContext,
) -> TwoBounce {
    let d_rem = d_l - b_len;
    let d_vec = ctx.r + b_hat * b_len;
    let denom = 2.0 * (d_rem - d_vec.dot(a_hat));
    if !(denom > 0.0) {
        return TwoBounce::Infeasible;
    }
    let a_len = (d_rem * d_rem - d_vec.norm_squared()) / denom;
    if !(a_len >= ctx.d_min) {
        return TwoBounce::TooShort(a_len);
    }
    let fbs = b_hat * b_len;
    let lbs = -ctx.r + a_hat * a_len;
    TwoBounce::Feasible(BounceGeometry {
        fbs,
        lbs,
        len_b: b_len,
        len_c: (lbs - fbs).norm(),
        len_a: a_len,
        single_bounce: false,
    })
}

/// Single scatterer on the departure ray at the delay-ellipsoid crossing,
/// `t = (d_l² − |r|²) / (2(d_l + b̂ᵀr))`.
pub fn single_bounce(d_l: f64, b_hat: Vec3, ctx: &MappingContext) -> Result<BounceGeometry> {
    let r_len = ctx.distance();
    let denom = 2.0 * (d_l + b_hat.dot(ctx.r));
    if !(denom > 0.0) || d_l < r_len {
        return Err(Error::InconsistentDelay {
            path_length: d_l,
            direct: r_len,
        });
    }
    let t = (d_l * d_l - r_len * r_len) / denom;
    let s = b_hat * t;
    Ok(BounceGeometry {
        fbs: s,
        lbs: s,
        len_b: t,
        len_c: 0.0,
        len_a: (s + ctx.r).norm(),
        single_bounce: true,
    })
}

/// Maps one departure/arrival direction pair at path length `d_l`.
pub fn map_path<R: Rng + ?Sized>(
    d_l: f64,
    departure: SphericalAngles,
    arrival: SphericalAngles,
    ctx: &MappingContext,
    max_retries: usize,
    rng: &mut R,
) -> Result<BounceGeometry> {
    let b_hat = direction_vector(departure);
    let a_hat = direction_vector(arrival);
    let upper = d_l / 2.0;
    if upper > ctx.d_min {
        for _ in 0..=max_retries {
            let b_len = rng.random_range(ctx.d_min..upper);
            match two_bounce(d_l, b_hat, a_hat, b_len, ctx) {
                TwoBounce::Feasible(g) => return Ok(g),
                TwoBounce::TooShort(_) => break,
                TwoBounce::Infeasible => continue,
            }
        }
    }
    single_bounce(d_l, b_hat, ctx)
}

/// Maps a communication cluster to scatterer coordinates.
///
/// Returns `Ok(None)` for a path with no excess length (the direct path),
/// and an error when the path is shorter than the TX–RX distance.
pub fn map_cluster<R: Rng + ?Sized>(
    cluster: &CommCluster,
    ctx: &MappingContext,
    config: &MappingConfig,
    rng: &mut R,
) -> Result<Option<MappedCluster>> {
    let r_len = ctx.distance();
    let d_l = total_path_length(cluster.delay, ctx) + config.extra_path_length;
    if d_l < r_len * (1.0 - 1e-12) {
        return Err(Error::InconsistentDelay {
            path_length: d_l,
            direct: r_len,
        });
    }
    if d_l - r_len <= r_len * 1e-12 {
        return Ok(None);
    }
    let g = map_path(
        d_l,
        cluster.departure,
        cluster.arrival,
        ctx,
        config.max_retries,
        rng,
    )?;
    let ray_scatterers = match config.mode {
        MappingMode::PerCluster => Vec::new(),
        MappingMode::PerRay => cluster
            .rays
            .iter()
            .map(|ray| {
                map_path(
                    d_l,
                    cluster.ray_departure(ray),
                    cluster.ray_arrival(ray),
                    ctx,
                    config.max_retries,
                    rng,
                )
                .map(|rg| rg.fbs)
            })
            .collect::<Result<_>>()?,
    };
    Ok(Some(MappedCluster {
        base: cluster.clone(),
        origin: ctx.tx,
        fbs: g.fbs,
        lbs: g.lbs,
        len_b: g.len_b,
        len_c: g.len_c,
        len_a: g.len_a,
        single_bounce: g.single_bounce,
        ray_scatterers,
    }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::angles_from_vector;
    use crate::rng::seeded;
    use std::f64::consts::FRAC_PI_2;

    fn worked_ctx() -> MappingContext {
        MappingContext::new(Vec3::ZERO, Vec3::new(6.0, 0.0, 0.0), 1.0).unwrap()
    }

    #[test]
    fn path_length_examples() {
        let ctx10 = MappingContext::new(Vec3::ZERO, Vec3::new(10.0, 0.0, 0.0), 1.0).unwrap();
        assert_eq!(total_path_length(0.0, &ctx10), 10.0);
        let ctx6 = worked_ctx();
        assert!((total_path_length(13.342e-9, &ctx6) - 10.0).abs() < 1e-3);
        assert!((total_path_length(4.0 / SPEED_OF_LIGHT, &ctx6) - 10.0).abs() < 1e-6);
        assert!((total_path_length(33.356e-9, &ctx10) - 20.0).abs() < 1e-3);
        assert!((total_path_length(10.0 / SPEED_OF_LIGHT, &ctx10) - 20.0).abs() < 1e-6);
    }

    #[test]
    fn worked_two_bounce_example() {
        let ctx = worked_ctx();
        let g = match two_bounce(
            10.0,
            Vec3::new(0.0, 1.0, 0.0),
            Vec3::new(-1.0, 0.0, 0.0),
            3.0,
            &ctx,
        ) {
            TwoBounce::Feasible(g) => g,
            other => panic!("unexpected {other:?}"),
        };
        assert_eq!(g.len_a, 2.0);
        assert_eq!(g.fbs, Vec3::new(0.0, 3.0, 0.0));
        assert_eq!(g.lbs, Vec3::new(4.0, 0.0, 0.0));
        assert_eq!(g.len_c, 5.0);
        assert_eq!(g.len_b + g.len_c + g.len_a, 10.0);
    }

    #[test]
    fn worked_single_bounce_example() {
        let ctx = worked_ctx();
        let g = single_bounce(10.0, Vec3::new(0.0, 1.0, 0.0), &ctx).unwrap();
        assert!((g.len_b - 3.2).abs() < 1e-12);
        assert!((g.fbs - Vec3::new(0.0, 3.2, 0.0)).norm() < 1e-12);
        assert_eq!(g.fbs, g.lbs);
        assert_eq!(g.len_c, 0.0);
        assert!((g.len_a - 6.8).abs() < 1e-12);
        assert!((g.len_b + g.len_a - 10.0).abs() < 1e-12);
    }

    #[test]
    fn degenerate_triangle_triggers_fallback() {
        let ctx = worked_ctx();
        let b_hat = Vec3::new(0.0, 1.0, 0.0);
        let d_l = 3.0 + 45f64.sqrt();
        match two_bounce(d_l, b_hat, Vec3::new(-1.0, 0.0, 0.0), 3.0, &ctx) {
            TwoBounce::TooShort(a) => assert!(a.abs() < 1e-12),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn direct_path_is_not_mapped() {
        let ctx = worked_ctx();
        let cluster = CommCluster {
            delay: 0.0,
            power: 1.0,
            arrival: SphericalAngles::new(std::f64::consts::PI, FRAC_PI_2),
            departure: SphericalAngles::new(0.0, FRAC_PI_2),
            rays: Vec::new(),
        };
        let m = map_cluster(&cluster, &ctx, &MappingConfig::default(), &mut seeded(1)).unwrap();
        assert!(m.is_none());
    }

    #[test]
    fn short_path_is_rejected() {
        let ctx = worked_ctx();
        assert!(matches!(
            single_bounce(5.0, Vec3::new(0.0, 1.0, 0.0), &ctx),
            Err(Error::InconsistentDelay { .. })
        ));
        let cluster = CommCluster {
            delay: -1e-8,
            power: 1.0,
            arrival: SphericalAngles::default(),
            departure: SphericalAngles::default(),
            rays: Vec::new(),
        };
        assert!(map_cluster(&cluster, &ctx, &MappingConfig::default(), &mut seeded(1)).is_err());
    }

    #[test]
    fn context_validation() {
        assert!(MappingContext::new(Vec3::ZERO, Vec3::ZERO, 1.0).is_err());
        assert!(MappingContext::new(Vec3::ZERO, Vec3::new(1.5, 0.0, 0.0), 1.0).is_err());
    }

    #[test]
    fn random_mappings_conserve_length_and_angles() {
        let mut rng = seeded(99);
        let ctx =
            MappingContext::new(Vec3::new(0.0, 0.0, 5.0), Vec3::new(8.0, 8.0, 1.5), 1.0).unwrap();
        let mut two_bounce_seen = 0;
        for _ in 0..5_000 {
            let dep = SphericalAngles::new(
                rng.random_range(0.0..std::f64::consts::TAU),
                rng.random_range(0.1..3.0),
            );
            let arr = SphericalAngles::new(
                rng.random_range(0.0..std::f64::consts::TAU),
                rng.random_range(0.1..3.0),
            );
            let d_l = ctx.distance() + rng.random_range(0.5..200.0);
            let g = map_path(d_l, dep, arr, &ctx, DEFAULT_MAX_RETRIES, &mut rng).unwrap();
            let sum = g.len_b + g.len_c + g.len_a;
            assert!((sum / d_l - 1.0).abs() < 1e-9, "{sum} vs {d_l}");
            assert!(g.len_a >= 0.0);
            if !g.single_bounce {
                two_bounce_seen += 1;
                assert!(g.len_b >= ctx.d_min && g.len_a >= ctx.d_min);
                let d = angles_from_vector(g.fbs).unwrap();
                let a = angles_from_vector(g.lbs + ctx.r).unwrap();
                assert!(crate::geometry::wrap_pi(d.azimuth - dep.azimuth).abs() < 1e-9);
                assert!((d.zenith - dep.zenith).abs() < 1e-9);
                assert!(crate::geometry::wrap_pi(a.azimuth - arr.azimuth).abs() < 1e-9);
                assert!((a.zenith - arr.zenith).abs() < 1e-9);
            }
        }
        assert!(two_bounce_seen > 100);
    }

    #[test]
    fn per_ray_mode_maps_every_ray() {
        use crate::comm::{ray_grid, RaySpreads};
        let ctx = worked_ctx();
        let cluster = CommCluster {
            delay: 30e-9,
            power: 1.0,
            arrival: SphericalAngles::new(2.0, 1.4),
            departure: SphericalAngles::new(1.0, 1.6),
            rays: ray_grid(RaySpreads {
                asa: 10.0,
                asd: 5.0,
                zsa: 5.0,
                zsd: 2.0,
            }),
        };
        let cfg = MappingConfig {
            mode: MappingMode::PerRay,
            ..MappingConfig::default()
        };
        let m = map_cluster(&cluster, &ctx, &cfg, &mut seeded(3))
            .unwrap()
            .unwrap();
        assert_eq!(m.ray_scatterers.len(), 20);
        assert_eq!(m.points_global().len(), 20);
    }
}
