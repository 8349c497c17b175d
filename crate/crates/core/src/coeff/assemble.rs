//! Per-link assembly of communication and sensing taps.

use std::fmt;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::pathloss::{aperture_term_db, Leg, PathlossModel};
use super::{
    comm_channel_coefficient, nlos_sensing_coefficient, path_value, sensing_doppler,
    AntennaElement, CommPath, EchoGeometry, PathDirections, Polarization, RayPath,
};
use crate::error::{Error, Result};
use crate::geometry::{angles_from_vector, SphericalAngles, Vec3};
use crate::mapping::MappedCluster;
use crate::scenario::{
    sensing_condition, BaseStation, LspSet, PropagationCondition, Scenario, SensingCondition,
    UserTerminal,
};
use crate::sensing::SensingCluster;
use crate::SPEED_OF_LIGHT;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct LinkId {
    pub drop: u32,
    pub bs: usize,
    pub ut: usize,
}

impl fmt::Display for LinkId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "d{}_b{}_u{}", self.drop, self.bs, self.ut)
    }
}

/// Pipeline stages, recorded in order of completion.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Stage {
    Scenario,
    Communication,
    Mapping,
    Sensing,
    Mergence,
    Coefficients,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CommTap {
    /// `None` for the direct path.
    pub cluster: Option<usize>,
    pub ray: usize,
    /// Absolute propagation delay, seconds.
    pub delay: f64,
    pub doppler: f64,
    /// Arrival direction at the receiver.
    pub arrival: SphericalAngles,
    /// One value per (rx element, tx element) pair, rx-major.
    pub values: Vec<Complex64>,
    pub pathloss_db: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SensingTap {
    /// Index into the link's sensing targets.
    pub target: usize,
    pub ray: usize,
    pub delay: f64,
    pub doppler: f64,
    /// Arrival direction at the sensing receiver.
    pub arrival: SphericalAngles,
    /// One value per (sensing element, tx element) pair.
    pub values: Vec<Complex64>,
    pub pathloss_db: f64,
    pub rcs_dbsm: f64,
}

/// A merged sensing cluster as seen by one link.
#[derive(Debug, Clone, PartialEq)]
pub struct SensingTarget {
    /// Index of the cluster in the drop's global list.
    pub global_id: usize,
    pub cluster: SensingCluster,
    /// One RCS value per ray, dBsm.
    pub ray_rcs_dbsm: Vec<f64>,
    /// Propagation conditions of the transmit and receive legs.
    pub legs: (PropagationCondition, PropagationCondition),
}

impl SensingTarget {
    pub fn condition(&self) -> SensingCondition {
        sensing_condition(self.legs.0, self.legs.1)
    }
}

/// Everything needed to build the taps of one link.
#[derive(Debug, Clone)]
pub struct LinkAssembly<'a> {
    pub id: LinkId,
    pub scenario: &'a Scenario,
    pub bs: &'a BaseStation,
    pub ut: &'a UserTerminal,
    pub condition: PropagationCondition,
    pub lsp: LspSet,
    pub mapped: Vec<MappedCluster>,
    pub targets: Vec<SensingTarget>,
    pub pathloss: PathlossModel,
    pub tx_power_dbm: f64,
    /// Evaluation time, seconds.
    pub time: f64,
    /// Targets closer than this to the sensing receiver are skipped.
    pub d_min: f64,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct RealizationMetadata {
    pub seed: u64,
    pub config_hash: String,
    pub stages: Vec<Stage>,
}

#[derive(Debug, Clone)]
pub struct ChannelRealization {
    pub link_id: LinkId,
    pub condition: PropagationCondition,
    pub lsp: LspSet,
    pub tx_power_dbm: f64,
    pub mapped: Vec<MappedCluster>,
    pub targets: Vec<SensingTarget>,
    pub comm_taps: Vec<CommTap>,
    pub sensing_taps: Vec<SensingTap>,
    pub metadata: RealizationMetadata,
}

fn total_power(values: impl Iterator<Item = Complex64>) -> f64 {
    values.map(|v| v.norm_sqr()).sum()
}

impl ChannelRealization {
    /// Received sensing power at element pair 0, dBm.
    pub fn sensing_power_dbm(&self) -> f64 {
        self.tx_power_dbm
            + 10.0 * total_power(self.sensing_taps.iter().map(|t| t.values[0])).log10()
    }

    /// Received communication power at element pair 0, dBm.
    pub fn comm_power_dbm(&self) -> f64 {
        self.tx_power_dbm + 10.0 * total_power(self.comm_taps.iter().map(|t| t.values[0])).log10()
    }
}

fn elements(offsets: &[Vec3]) -> Vec<AntennaElement> {
    offsets
        .iter()
        .map(|&o| AntennaElement::isotropic_at(o))
        .collect()
}

fn leg(a: Vec3, b: Vec3) -> Leg {
    Leg {
        d2d: a.distance_2d(b),
        d3d: a.distance(b),
        h_bs: a.z.max(b.z),
        h_ut: a.z.min(b.z),
    }
}

fn sort_by_delay<T>(taps: &mut [T], delay: impl Fn(&T) -> f64) {
    taps.sort_by(|a, b| delay(a).total_cmp(&delay(b)));
}

/// Coefficient and Doppler of one receive/transmit element pair.
type PairFn<'a> = dyn Fn(&AntennaElement, &AntennaElement) -> Result<(Complex64, f64)> + 'a;

/// Builds the communication and (monostatic) sensing taps of one link.
///
/// Communication taps share the link pathloss plus shadow fading. On LOS
/// links the direct tap carries `K/(K+1)` of the power and the clusters the
/// rest; ray powers split each cluster evenly. Every sensing ray gets its
/// own radar-equation pathloss from the ray's RCS.
pub fn assemble_link(input: LinkAssembly<'_>) -> Result<ChannelRealization> {
    let wavelength = input.scenario.wavelength();
    let fc = input.scenario.carrier_frequency;
    let kind = input.scenario.kind;
    let tx = input.bs.position;
    let rx = input.ut.position;
    let tx_el = elements(&input.bs.array.offsets);
    let rx_el = elements(&input.ut.array.offsets);
    let t = input.time;
    let v_ut = input.ut.velocity;

    let comm_pl = input
        .pathloss
        .pathloss_db(&leg(tx, rx), kind, input.condition, fc)?
        + input.lsp.shadow_fading_db;
    let comm_amp = 10f64.powf(-comm_pl / 20.0);
    let k_lin = match (input.condition, input.lsp.k_factor_db) {
        (PropagationCondition::Los, Some(k)) => 10f64.powf(k / 10.0),
        _ => 0.0,
    };

    let pairs = |f: &PairFn| -> Result<(Vec<Complex64>, f64)> {
        let mut values = Vec::with_capacity(rx_el.len() * tx_el.len());
        let mut doppler = 0.0;
        for r in &rx_el {
            for s in &tx_el {
                let (v, nu) = f(r, s)?;
                values.push(v);
                doppler = nu;
            }
        }
        Ok((values, doppler))
    };

    let mut comm_taps = Vec::new();
    if k_lin > 0.0 {
        let directions = PathDirections {
            departure: angles_from_vector(rx - tx)?,
            arrival: angles_from_vector(tx - rx)?,
        };
        let path = CommPath::Direct {
            directions,
            delay: tx.distance(rx) / SPEED_OF_LIGHT,
        };
        let scale = comm_amp * (k_lin / (k_lin + 1.0)).sqrt();
        let (values, doppler) = pairs(&|r, s| {
            let h = comm_channel_coefficient(r, s, &path, v_ut, t, wavelength)?;
            Ok((h.value * scale, h.doppler))
        })?;
        comm_taps.push(CommTap {
            cluster: None,
            ray: 0,
            delay: tx.distance(rx) / SPEED_OF_LIGHT,
            doppler,
            arrival: directions.arrival,
            values,
            pathloss_db: comm_pl,
        });
    }
    let scatter_share = 1.0 / (k_lin + 1.0);
    for (ci, m) in input.mapped.iter().enumerate() {
        let c = &m.base;
        let delay = m.path_length() / SPEED_OF_LIGHT;
        let scale = comm_amp * (c.ray_power() * scatter_share).sqrt();
        for (ri, ray) in c.rays.iter().enumerate() {
            let directions = PathDirections {
                departure: c.ray_departure(ray),
                arrival: c.ray_arrival(ray),
            };
            let path = CommPath::Scattered(RayPath {
                directions,
                xpr: ray.xpr,
                phases: ray.phases,
                delay,
            });
            let (values, doppler) = pairs(&|r, s| {
                let h = comm_channel_coefficient(r, s, &path, v_ut, t, wavelength)?;
                Ok((h.value * scale, h.doppler))
            })?;
            comm_taps.push(CommTap {
                cluster: Some(ci),
                ray: ri,
                delay,
                doppler,
                arrival: directions.arrival,
                values,
                pathloss_db: comm_pl,
            });
        }
    }
    sort_by_delay(&mut comm_taps, |t| t.delay);

    // monostatic: the sensing receiver shares the transmitter's array
    let sx = tx;
    let sx_el = &tx_el;
    let mut sensing_taps = Vec::new();
    for (ti, target) in input.targets.iter().enumerate() {
        let c = &target.cluster;
        if c.position.distance(tx) < input.d_min || c.position.distance(sx) < input.d_min {
            continue;
        }
        if target.ray_rcs_dbsm.len() != c.rays.len() {
            return Err(Error::invalid(format!(
                "target {ti} has {} rays but {} RCS values",
                c.rays.len(),
                target.ray_rcs_dbsm.len()
            )));
        }
        let echo = EchoGeometry::new(tx, sx, c.position)?;
        let leg_tx = input
            .pathloss
            .pathloss_db(&leg(tx, c.position), kind, target.legs.0, fc)?;
        let leg_sx = input
            .pathloss
            .pathloss_db(&leg(sx, c.position), kind, target.legs.1, fc)?;
        let los = target.condition() == SensingCondition::LosSensing;
        let ray_share = (1.0 / c.rays.len().max(1) as f64).sqrt();
        for (ri, (ray, &rcs)) in c.rays.iter().zip(&target.ray_rcs_dbsm).enumerate() {
            let pl = leg_tx + leg_sx - rcs + aperture_term_db(wavelength);
            let scale = ray_share * 10f64.powf(-pl / 20.0);
            let directions = PathDirections {
                departure: echo
                    .directions
                    .departure
                    .offset(ray.departure_offset.azimuth, ray.departure_offset.zenith),
                arrival: echo
                    .directions
                    .arrival
                    .offset(ray.arrival_offset.azimuth, ray.arrival_offset.zenith),
            };
            let mut values = Vec::with_capacity(sx_el.len() * tx_el.len());
            let mut doppler = 0.0;
            for u in sx_el {
                for s in &tx_el {
                    let (v, nu) = if los {
                        let nu = sensing_doppler(directions, c.velocity, wavelength);
                        let v =
                            path_value(u, s, directions, Polarization::Direct, nu, t, wavelength)?;
                        (v, nu)
                    } else {
                        let h = nlos_sensing_coefficient(
                            u,
                            s,
                            &RayPath {
                                directions,
                                xpr: ray.xpr,
                                phases: ray.phases,
                                delay: echo.delay(),
                            },
                            c.velocity,
                            t,
                            wavelength,
                        )?;
                        (h.value, h.doppler)
                    };
                    values.push(v * scale);
                    doppler = nu;
                }
            }
            sensing_taps.push(SensingTap {
                target: ti,
                ray: ri,
                delay: echo.delay(),
                doppler,
                arrival: directions.arrival,
                values,
                pathloss_db: pl,
                rcs_dbsm: rcs,
            });
        }
    }
    sort_by_delay(&mut sensing_taps, |t| t.delay);

    Ok(ChannelRealization {
        link_id: input.id,
        condition: input.condition,
        lsp: input.lsp,
        tx_power_dbm: input.tx_power_dbm,
        mapped: input.mapped,
        targets: input.targets,
        comm_taps,
        sensing_taps,
        metadata: RealizationMetadata::default(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coeff::{freespace_pathloss_db, RcsClass};
    use crate::comm::Ray;
    use crate::scenario::{ArrayLayout, ScenarioKind};
    use crate::sensing::{SensingCluster, SensingKind};

    fn scenario() -> Scenario {
        Scenario::new(ScenarioKind::UMi, 28e9, 1e9).unwrap()
    }

    fn bs() -> BaseStation {
        BaseStation {
            position: Vec3::new(0.0, 0.0, 5.0),
            array: ArrayLayout::default(),
        }
    }

    fn ut() -> UserTerminal {
        UserTerminal {
            position: Vec3::new(8.0, 8.0, 1.5),
            velocity: Vec3::ZERO,
            array: ArrayLayout::default(),
        }
    }

    fn lsp() -> LspSet {
        LspSet {
            delay_spread: 50e-9,
            asa: 30.0,
            asd: 10.0,
            zsa: 10.0,
            zsd: 5.0,
            shadow_fading_db: 0.0,
            k_factor_db: Some(9.0),
        }
    }

    fn point_target(p: Vec3) -> SensingTarget {
        SensingTarget {
            global_id: 0,
            cluster: SensingCluster {
                kind: SensingKind::UtTarget,
                position: p,
                points: vec![p],
                source_links: vec![0],
                rcs_class: RcsClass::Pedestrian,
                power: 1.0,
                delay: 0.0,
                rays: vec![Ray {
                    arrival_offset: Default::default(),
                    departure_offset: Default::default(),
                    xpr: 1.0,
                    phases: [0.0; 4],
                }],
                velocity: Vec3::ZERO,
            },
            ray_rcs_dbsm: vec![-7.0],
            legs: (PropagationCondition::Los, PropagationCondition::Los),
        }
    }

    fn assembly<'a>(s: &'a Scenario, b: &'a BaseStation, u: &'a UserTerminal) -> LinkAssembly<'a> {
        LinkAssembly {
            id: LinkId {
                drop: 0,
                bs: 0,
                ut: 0,
            },
            scenario: s,
            bs: b,
            ut: u,
            condition: PropagationCondition::Los,
            lsp: lsp(),
            mapped: Vec::new(),
            targets: Vec::new(),
            pathloss: PathlossModel::FreeSpace,
            tx_power_dbm: 28.0,
            time: 0.0,
            d_min: 1.0,
        }
    }

    #[test]
    fn link_id_format() {
        assert_eq!(
            LinkId {
                drop: 0,
                bs: 1,
                ut: 2
            }
            .to_string(),
            "d0_b1_u2"
        );
    }

    #[test]
    fn without_targets_only_comm_taps() {
        let (s, b, u) = (scenario(), bs(), ut());
        let r = assemble_link(assembly(&s, &b, &u)).unwrap();
        assert!(r.sensing_taps.is_empty());
        assert_eq!(r.comm_taps.len(), 1);
        // with no clusters the direct tap carries K/(K+1) of the link budget
        let pl = freespace_pathloss_db(b.position.distance(u.position), s.wavelength()).unwrap();
        let k = 10f64.powf(0.9);
        let expected = 28.0 - pl + 10.0 * (k / (k + 1.0)).log10();
        assert!((r.comm_power_dbm() - expected).abs() < 1e-9);
    }

    #[test]
    fn single_target_received_power() {
        let (s, b, u) = (scenario(), bs(), ut());
        let p = Vec3::new(20.0, -5.0, 1.0);
        let mut a = assembly(&s, &b, &u);
        a.targets = vec![point_target(p)];
        let r = assemble_link(a).unwrap();
        assert_eq!(r.sensing_taps.len(), 1);
        let d = b.position.distance(p);
        let l = s.wavelength();
        let pl_sen = 2.0 * freespace_pathloss_db(d, l).unwrap() + 7.0 + aperture_term_db(l);
        assert!((r.sensing_power_dbm() - (28.0 - pl_sen)).abs() < 1e-9);
        assert!((r.sensing_taps[0].delay - 2.0 * d / SPEED_OF_LIGHT).abs() < 1e-18);
    }

    #[test]
    fn close_targets_are_skipped() {
        let (s, b, u) = (scenario(), bs(), ut());
        let mut a = assembly(&s, &b, &u);
        a.targets = vec![point_target(b.position + Vec3::new(0.5, 0.0, 0.0))];
        assert!(assemble_link(a).unwrap().sensing_taps.is_empty());
    }

    #[test]
    fn rcs_count_mismatch_is_an_error() {
        let (s, b, u) = (scenario(), bs(), ut());
        let mut a = assembly(&s, &b, &u);
        let mut t = point_target(Vec3::new(20.0, 0.0, 1.0));
        t.ray_rcs_dbsm.clear();
        a.targets = vec![t];
        assert!(assemble_link(a).is_err());
    }

    #[test]
    fn values_cover_every_element_pair() {
        let (s, mut b, mut u) = (scenario(), bs(), ut());
        b.array.offsets = vec![Vec3::ZERO, Vec3::new(0.0, 0.005, 0.0)];
        u.array.offsets = vec![
            Vec3::ZERO,
            Vec3::new(0.0, 0.005, 0.0),
            Vec3::new(0.0, 0.01, 0.0),
        ];
        let mut a = assembly(&s, &b, &u);
        a.targets = vec![point_target(Vec3::new(20.0, 0.0, 1.0))];
        let r = assemble_link(a).unwrap();
        assert_eq!(r.comm_taps[0].values.len(), 6);
        // monostatic: the sensing receiver uses the BS array on both ends
        assert_eq!(r.sensing_taps[0].values.len(), 4);
    }
}
