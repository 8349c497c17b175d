//! End-to-end orchestration of drops and links.
//!
//! Per drop: every link draws its condition and LSPs, generates and maps
//! communication clusters and assigns its sensing set (in parallel, each on
//! its own random substream). Global mergence then runs once over all
//! links as a barrier, per-ray RCS values are drawn from the drop's global
//! stream, and finally each link assembles its taps.

use rayon::prelude::*;

use crate::coeff::{
    assemble_link, ChannelRealization, LinkAssembly, LinkId, RealizationMetadata, SensingTarget,
    Stage,
};
use crate::comm::{generate_clusters, LosDirections};
use crate::config::RunConfig;
use crate::error::{Error, Result};
use crate::geometry::angles_from_vector;
use crate::mapping::{map_cluster, MappingContext};
use crate::rng::{global_substream, substream, SimRng};
use crate::scenario::{
    assign_propagation_condition, cluster_count, ClusterKind, LspSet, NetworkLayout,
    PropagationCondition, Scenario,
};
use crate::sensing::{
    assign_shared_clusters, build_sensing_set, draw_newborn_proportion, merge_global_scatterers,
    NewbornSource, SensingCluster, SensingKind, SensingLink,
};

/// Result of one drop's global stage.
#[derive(Debug, Clone)]
pub struct DropSummary {
    pub drop: u32,
    pub cap: usize,
    /// Sensing clusters before mergence, over all links.
    pub assigned: usize,
    pub merged: Vec<SensingCluster>,
    pub merge_linkages: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct SimulationOutput {
    pub seed: u64,
    pub config_hash: String,
    /// Drop-major, then BS-major link order.
    pub realizations: Vec<ChannelRealization>,
    pub drops: Vec<DropSummary>,
}

/// Per-link state carried across the mergence barrier.
struct LinkState {
    id: LinkId,
    index: usize,
    condition: PropagationCondition,
    lsp: LspSet,
    mapped: Vec<crate::mapping::MappedCluster>,
    sensing: Vec<SensingCluster>,
    budget: usize,
    rng: SimRng,
    stages: Vec<Stage>,
}

struct Context<'a> {
    config: &'a RunConfig,
    scenario: Scenario,
    network: NetworkLayout,
    links: Vec<(usize, usize)>,
    seed: u64,
    hash: String,
}

fn annotate(drop: u32, link: usize) -> impl Fn(Error) -> Error {
    move |e| Error::Link {
        drop: drop as usize,
        link,
        source: Box::new(e),
    }
}

impl Context<'_> {
    fn assign_link(&self, drop: u32, index: usize) -> Result<LinkState> {
        let (b, u) = self.links[index];
        let model = &self.config.model;
        let kind = self.scenario.kind;
        let tx = self.network.bs_list[b].position;
        let ut = &self.network.ut_list[u];
        let rx = ut.position;
        let mut rng = substream(self.seed, drop, index as u32);
        let mut stages = Vec::with_capacity(6);

        let condition = match model.condition {
            Some(c) => c,
            None => assign_propagation_condition(kind, tx.distance_2d(rx), rx.z, &mut rng),
        };
        let table = model.lsp_table();
        let params = table.params(kind, condition);
        let mut lsp = params.draw(&mut rng);
        if !condition.is_los() {
            lsp.k_factor_db = None;
        }
        stages.push(Stage::Scenario);

        let n_comm = cluster_count(
            kind,
            condition,
            ClusterKind::Communication,
            model.sensing_ratio,
        );
        let budget = cluster_count(kind, condition, ClusterKind::Sensing, model.sensing_ratio);
        let los = LosDirections {
            departure: angles_from_vector(rx - tx)?,
            arrival: angles_from_vector(tx - rx)?,
        };
        let clusters = generate_clusters(&lsp, params, n_comm, los, &mut rng)?;
        stages.push(Stage::Communication);

        let ctx = MappingContext::new(tx, rx, model.d_min)?;
        let mapping = model.mapping();
        let mut mapped = Vec::with_capacity(clusters.len());
        for c in &clusters {
            if let Some(m) = map_cluster(c, &ctx, &mapping, &mut rng)? {
                mapped.push(m);
            }
        }
        stages.push(Stage::Mapping);

        let sensing_cfg = model.sensing();
        let link = SensingLink {
            index,
            tx,
            rx,
            sx: tx,
            condition,
        };
        let shared = assign_shared_clusters(&mapped, &link, &sensing_cfg, &model.rcs, &mut rng)?;
        let proportion = draw_newborn_proportion(&model.newborn, &mut rng);
        let source = NewbornSource {
            lsp: &lsp,
            params,
            los,
            mapping: &ctx,
            mapping_config: &mapping,
        };
        let sensing = build_sensing_set(
            &link,
            shared,
            budget,
            proportion,
            &source,
            ut.velocity,
            &sensing_cfg,
            &model.rcs,
            &mut rng,
        )?;
        stages.push(Stage::Sensing);

        Ok(LinkState {
            id: LinkId { drop, bs: b, ut: u },
            index,
            condition,
            lsp,
            mapped,
            sensing,
            budget,
            rng,
            stages,
        })
    }

    fn finish_link(
        &self,
        mut state: LinkState,
        merged: &[(SensingCluster, Vec<f64>)],
    ) -> Result<ChannelRealization> {
        let model = &self.config.model;
        let kind = self.scenario.kind;
        let (b, u) = self.links[state.index];
        let bs = &self.network.bs_list[b];
        let tx = bs.position;
        let same_bs = |l: &usize| self.links[*l].0 == b;
        let mut targets = Vec::new();
        for (gid, (cluster, rcs)) in merged.iter().enumerate() {
            if !cluster.source_links.iter().any(same_bs) {
                continue;
            }
            let legs = if cluster.kind == SensingKind::UtTarget {
                (PropagationCondition::Los, PropagationCondition::Los)
            } else {
                let p = cluster.position;
                let h = p.z.max(1.0);
                let d2d = tx.distance_2d(p);
                (
                    assign_propagation_condition(kind, d2d, h, &mut state.rng),
                    assign_propagation_condition(kind, d2d, h, &mut state.rng),
                )
            };
            targets.push(SensingTarget {
                global_id: gid,
                cluster: cluster.clone(),
                ray_rcs_dbsm: rcs.clone(),
                legs,
            });
        }
        let mut realization = assemble_link(LinkAssembly {
            id: state.id,
            scenario: &self.scenario,
            bs,
            ut: &self.network.ut_list[u],
            condition: state.condition,
            lsp: state.lsp,
            mapped: state.mapped,
            targets,
            pathloss: model.pathloss,
            tx_power_dbm: model.tx_power_dbm,
            time: self.config.run.time,
            d_min: model.d_min,
        })?;
        state.stages.push(Stage::Coefficients);
        realization.metadata = RealizationMetadata {
            seed: self.seed,
            config_hash: self.hash.clone(),
            stages: state.stages,
        };
        Ok(realization)
    }

    fn run_drop(&self, drop: u32) -> Result<(Vec<ChannelRealization>, DropSummary)> {
        let states: Vec<LinkState> = (0..self.links.len())
            .into_par_iter()
            .map(|i| self.assign_link(drop, i).map_err(annotate(drop, i)))
            .collect::<Result<_>>()?;

        // barrier: mergence sees every link's sensing set
        let cap = self
            .config
            .model
            .global_cap
            .unwrap_or_else(|| states.iter().map(|s| s.budget).max().unwrap_or(1));
        let mut all = Vec::new();
        let mut states = states;
        for s in &mut states {
            all.append(&mut s.sensing);
        }
        let assigned = all.len();
        let outcome = merge_global_scatterers(all, cap, &self.config.model.rcs)?;
        let mut global = global_substream(self.seed, drop);
        let rcs = &self.config.model.rcs;
        let merged: Vec<(SensingCluster, Vec<f64>)> = outcome
            .clusters
            .iter()
            .map(|c| {
                let values = c
                    .rays
                    .iter()
                    .map(|_| rcs.sample_value(c.rcs_class, &mut global))
                    .collect();
                (c.clone(), values)
            })
            .collect();
        for s in &mut states {
            s.stages.push(Stage::Mergence);
        }

        let realizations = states
            .into_par_iter()
            .map(|s| {
                let idx = s.index;
                self.finish_link(s, &merged).map_err(annotate(drop, idx))
            })
            .collect::<Result<Vec<_>>>()?;
        Ok((
            realizations,
            DropSummary {
                drop,
                cap,
                assigned,
                merged: outcome.clusters,
                merge_linkages: outcome.merge_linkages,
            },
        ))
    }
}

/// Runs every drop of the configuration on the current rayon pool.
pub fn run_simulation(config: &RunConfig) -> Result<SimulationOutput> {
    config.validate()?;
    let network = config.network();
    let ctx = Context {
        config,
        scenario: config.scenario()?,
        links: network.links().collect(),
        network,
        seed: config.run.seed,
        hash: config.hash()?,
    };
    let per_drop: Vec<(Vec<ChannelRealization>, DropSummary)> = (0..config.run.drops)
        .into_par_iter()
        .map(|d| ctx.run_drop(d))
        .collect::<Result<_>>()?;
    let mut realizations = Vec::new();
    let mut drops = Vec::with_capacity(per_drop.len());
    for (r, s) in per_drop {
        realizations.extend(r);
        drops.push(s);
    }
    Ok(SimulationOutput {
        seed: ctx.seed,
        config_hash: ctx.hash,
        realizations,
        drops,
    })
}

/// Runs on a dedicated pool with `threads` workers; results do not depend
/// on the thread count.
pub fn run_simulation_with_threads(config: &RunConfig, threads: usize) -> Result<SimulationOutput> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads.max(1))
        .build()
        .map_err(|e| Error::invalid(format!("cannot build thread pool: {e}")))?;
    pool.install(|| run_simulation(config))
}
