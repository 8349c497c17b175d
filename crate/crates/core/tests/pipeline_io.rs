use std::path::Path;

use isac_chansim::analytics::rms_spread;
use isac_chansim::config::{Output, RunConfig};
use isac_chansim::export::{export, read_mpc_csv, read_provenance};
use isac_chansim::pipeline::{run_simulation, run_simulation_with_threads};
use isac_chansim::scenario::{PropagationCondition, ScenarioKind};
use isac_chansim::sensing::{EvolutionModel, NewbornDistribution, SensingKind};
use isac_chansim::SPEED_OF_LIGHT;

fn multi(seed: u64, drops: u32) -> RunConfig {
    let mut c = RunConfig::multi_link_preset(ScenarioKind::UMi);
    c.run.seed = seed;
    c.run.drops = drops;
    c
}

fn read(dir: &Path, o: Output) -> Vec<u8> {
    std::fs::read(dir.join(o.file_name())).unwrap()
}

#[test]
fn outputs_are_byte_identical_across_thread_counts() {
    let cfg = multi(5, 3);
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    export(
        &run_simulation_with_threads(&cfg, 1).unwrap(),
        &Output::ALL,
        a.path(),
    )
    .unwrap();
    export(
        &run_simulation_with_threads(&cfg, 8).unwrap(),
        &Output::ALL,
        b.path(),
    )
    .unwrap();
    for o in Output::ALL {
        assert_eq!(read(a.path(), o), read(b.path(), o), "{o:?} differs");
    }
}

#[test]
fn every_file_carries_provenance() {
    let cfg = multi(9, 1);
    let out = run_simulation(&cfg).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let written = export(&out, &Output::ALL, dir.path()).unwrap();
    assert_eq!(written.len(), Output::ALL.len());
    let hash = cfg.hash().unwrap();
    assert_eq!(hash.len(), 16);
    for p in written {
        let prov = read_provenance(&p).unwrap().expect("provenance line");
        assert_eq!(prov.config_hash, hash);
        assert_eq!(prov.seed, 9);
    }
}

#[test]
fn config_hash_tracks_content() {
    let a = multi(1, 1);
    let mut b = a.clone();
    assert_eq!(a.hash().unwrap(), b.hash().unwrap());
    b.model.d_min = 2.0;
    assert_ne!(a.hash().unwrap(), b.hash().unwrap());
}

#[test]
fn exported_clusters_reproduce_in_memory_spreads() {
    let out = run_simulation(&multi(21, 2)).unwrap();
    let dir = tempfile::tempdir().unwrap();
    export(&out, &[Output::Clusters], dir.path()).unwrap();
    let rows = read_mpc_csv(&dir.path().join("clusters.csv")).unwrap();
    for r in &out.realizations {
        let id = r.link_id.to_string();
        let link_rows: Vec<_> = rows.iter().filter(|x| x.link_id == id).collect();
        assert_eq!(link_rows.len(), r.mapped.len() + r.targets.len());
        let comm = &link_rows[..r.mapped.len()];
        let tau: Vec<f64> = r
            .mapped
            .iter()
            .map(|m| m.path_length() / SPEED_OF_LIGHT)
            .collect();
        let p: Vec<f64> = r.mapped.iter().map(|m| m.base.power).collect();
        let az: Vec<f64> = r.mapped.iter().map(|m| m.base.arrival.azimuth).collect();
        let read_tau: Vec<f64> = comm.iter().map(|x| x.sample.delay).collect();
        let read_p: Vec<f64> = comm.iter().map(|x| x.sample.power).collect();
        let read_az: Vec<f64> = comm.iter().map(|x| x.sample.azimuth).collect();
        assert_eq!(tau, read_tau);
        assert_eq!(p, read_p);
        if !p.is_empty() {
            assert_eq!(
                rms_spread(&tau, &p, false).unwrap(),
                rms_spread(&read_tau, &read_p, false).unwrap()
            );
            assert_eq!(
                rms_spread(&az, &p, true).unwrap(),
                rms_spread(&read_az, &read_p, true).unwrap()
            );
        }
    }
}

#[test]
fn isolated_los_link_sees_only_the_terminal() {
    let mut cfg = RunConfig::validation_preset();
    cfg.model.condition = Some(PropagationCondition::Los);
    // shared clusters practically never survive, no newborn clusters
    cfg.model.evolution = EvolutionModel {
        a: 1e-12,
        b: 1.0,
        knee: 1e-12,
    };
    cfg.model.newborn = NewbornDistribution {
        mean: 0.0,
        variance: 1e-6,
        lower: 0.0,
        upper: 0.01,
    };
    let out = run_simulation(&cfg).unwrap();
    let r = &out.realizations[0];
    assert!(!r.comm_taps.is_empty());
    assert_eq!(r.targets.len(), 1);
    assert_eq!(r.targets[0].cluster.kind, SensingKind::UtTarget);
    assert_eq!(r.sensing_taps.len(), 1);
    // the echo arrives after the direct path: 2·|r|/c vs |r|/c
    let d = r
        .comm_taps
        .iter()
        .map(|t| t.delay)
        .fold(f64::INFINITY, f64::min);
    assert!((r.sensing_taps[0].delay - 2.0 * d).abs() < 1e-15);
}

#[test]
fn exported_cdf_is_monotone() {
    let out = run_simulation(&multi(3, 4)).unwrap();
    let dir = tempfile::tempdir().unwrap();
    export(&out, &[Output::Cdf], dir.path()).unwrap();
    let mut reader = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .from_path(dir.path().join("cdf.csv"))
        .unwrap();
    let mut by_metric: std::collections::BTreeMap<String, Vec<(f64, f64)>> = Default::default();
    for rec in reader.records() {
        let rec = rec.unwrap();
        by_metric
            .entry(rec[0].to_string())
            .or_default()
            .push((rec[1].parse().unwrap(), rec[2].parse().unwrap()));
    }
    assert_eq!(by_metric.len(), 3);
    for rows in by_metric.values() {
        assert!(rows.windows(2).all(|w| w[0].0 < w[1].0 && w[0].1 < w[1].1));
        assert!((rows.last().unwrap().1 - 1.0).abs() < 1e-12);
    }
}

#[test]
fn empty_layout_exports_only_geometry_files() {
    let mut cfg = RunConfig::validation_preset();
    cfg.layout.ut.clear();
    let out = run_simulation(&cfg).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let written = export(&out, &Output::ALL, dir.path()).unwrap();
    assert_eq!(written.len(), 2);
}
