use isac_chansim::analytics::rms_spread;
use isac_chansim::comm::{generate_clusters, LosDirections};
use isac_chansim::geometry::SphericalAngles;
use isac_chansim::rng::seeded;
use isac_chansim::scenario::{
    cluster_count, ClusterKind, LspParams, LspSet, PropagationCondition, ScenarioKind,
    RAYS_PER_CLUSTER,
};

fn los() -> LosDirections {
    LosDirections {
        departure: SphericalAngles::new(0.7, 1.5),
        arrival: SphericalAngles::new(3.84, 1.64),
    }
}

fn lsp(params: &LspParams, asa: f64, k: Option<f64>) -> LspSet {
    LspSet {
        delay_spread: params.median_delay_spread(),
        asa,
        asd: 10.0,
        zsa: 10.0,
        zsd: 5.0,
        shadow_fading_db: 0.0,
        k_factor_db: k,
    }
}

#[test]
fn nlos_cluster_azimuth_spread_tracks_asa() {
    for (kind, asa) in [
        (ScenarioKind::UMi, 30.0),
        (ScenarioKind::UMa, 40.0),
        (ScenarioKind::RMa, 20.0),
    ] {
        let cond = PropagationCondition::Nlos;
        let params = LspParams::builtin(kind, cond);
        let n = cluster_count(kind, cond, ClusterKind::Communication, 1.32);
        let set = lsp(&params, asa, None);
        let mut rng = seeded(21);
        let trials = 10_000;
        let mut total = 0.0;
        for _ in 0..trials {
            let clusters = generate_clusters(&set, &params, n, los(), &mut rng).unwrap();
            let az: Vec<f64> = clusters.iter().map(|c| c.arrival.azimuth).collect();
            let p: Vec<f64> = clusters.iter().map(|c| c.power).collect();
            total += rms_spread(&az, &p, true).unwrap().to_degrees();
        }
        let mean = total / trials as f64;
        assert!(
            (mean / asa - 1.0).abs() < 0.10,
            "{kind}: {mean:.2} vs {asa}"
        );
    }
}

#[test]
fn every_realization_is_normalized_from_zero() {
    let mut rng = seeded(5);
    for kind in [ScenarioKind::UMi, ScenarioKind::UMa, ScenarioKind::RMa] {
        for cond in [PropagationCondition::Los, PropagationCondition::Nlos] {
            let params = LspParams::builtin(kind, cond);
            let n = cluster_count(kind, cond, ClusterKind::Communication, 1.32);
            for _ in 0..500 {
                let set = params.draw(&mut rng);
                let k = if cond.is_los() { set.k_factor_db } else { None };
                let clusters = generate_clusters(
                    &LspSet {
                        k_factor_db: k,
                        ..set
                    },
                    &params,
                    n,
                    los(),
                    &mut rng,
                )
                .unwrap();
                assert_eq!(clusters.len(), n);
                let sum: f64 = clusters.iter().map(|c| c.power).sum();
                assert!((sum - 1.0).abs() < 1e-9);
                let min = clusters
                    .iter()
                    .map(|c| c.delay)
                    .fold(f64::INFINITY, f64::min);
                assert_eq!(min, 0.0);
                assert!(clusters.iter().all(|c| c.rays.len() == RAYS_PER_CLUSTER));
            }
        }
    }
}

#[test]
fn same_seed_same_clusters() {
    let params = LspParams::builtin(ScenarioKind::UMa, PropagationCondition::Los);
    let set = lsp(&params, 35.0, Some(9.0));
    let a = generate_clusters(&set, &params, 12, los(), &mut seeded(8)).unwrap();
    let b = generate_clusters(&set, &params, 12, los(), &mut seeded(8)).unwrap();
    assert_eq!(a, b);
}
