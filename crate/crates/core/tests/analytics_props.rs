use isac_chansim::analytics::{
    calinski_harabasz, davies_bouldin, embed, k_power_means, kpm_from_centers, rms_spread,
    KpmConfig, MpcSample,
};
use isac_chansim::rng::seeded;
use proptest::prelude::*;
use rand::Rng;

/// Direct double-loop Calinski–Harabasz.
fn ch_oracle(x: &[Vec<f64>], labels: &[usize], k: usize) -> f64 {
    let n = x.len();
    let dim = x[0].len();
    let mut overall = vec![0.0; dim];
    for p in x {
        for d in 0..dim {
            overall[d] += p[d];
        }
    }
    for v in &mut overall {
        *v /= n as f64;
    }
    let (mut between, mut within) = (0.0, 0.0);
    for c in 0..k {
        let members: Vec<&Vec<f64>> = (0..n).filter(|&i| labels[i] == c).map(|i| &x[i]).collect();
        let mut centroid = vec![0.0; dim];
        for p in &members {
            for d in 0..dim {
                centroid[d] += p[d] / members.len() as f64;
            }
        }
        for d in 0..dim {
            between += members.len() as f64 * (centroid[d] - overall[d]).powi(2);
        }
        for p in &members {
            for d in 0..dim {
                within += (p[d] - centroid[d]).powi(2);
            }
        }
    }
    (between / (k - 1) as f64) / (within / (n - k) as f64)
}

/// Direct double-loop Davies–Bouldin with L1 scatter and separation.
fn db_oracle(x: &[Vec<f64>], labels: &[usize], k: usize) -> f64 {
    let dim = x[0].len();
    let mut centroids = vec![vec![0.0; dim]; k];
    let mut counts = vec![0.0; k];
    for (p, &l) in x.iter().zip(labels) {
        counts[l] += 1.0;
        for d in 0..dim {
            centroids[l][d] += p[d];
        }
    }
    for (centroid, n) in centroids.iter_mut().zip(&counts) {
        for v in centroid.iter_mut() {
            *v /= n;
        }
    }
    let mut s = vec![0.0; k];
    for (p, &l) in x.iter().zip(labels) {
        s[l] += (0..dim)
            .map(|d| (p[d] - centroids[l][d]).abs())
            .sum::<f64>()
            / counts[l];
    }
    let mut total = 0.0;
    for i in 0..k {
        let mut worst: f64 = 0.0;
        for j in 0..k {
            if i != j {
                let m: f64 = (0..dim)
                    .map(|d| (centroids[i][d] - centroids[j][d]).abs())
                    .sum();
                worst = worst.max((s[i] + s[j]) / m);
            }
        }
        total += worst;
    }
    total / k as f64
}

fn random_dataset(seed: u64) -> (Vec<Vec<f64>>, Vec<usize>, usize) {
    let mut rng = seeded(seed);
    let k = rng.random_range(2..=5);
    let n = rng.random_range(k + 1..=30);
    let dim = rng.random_range(1..=4);
    let x: Vec<Vec<f64>> = (0..n)
        .map(|_| (0..dim).map(|_| rng.random_range(-10.0..10.0)).collect())
        .collect();
    // every cluster non-empty
    let mut labels: Vec<usize> = (0..n)
        .map(|i| if i < k { i } else { rng.random_range(0..k) })
        .collect();
    labels.rotate_left(rng.random_range(0..n));
    (x, labels, k)
}

#[test]
fn indices_match_brute_force() {
    for seed in 0..50 {
        let (x, labels, k) = random_dataset(seed);
        let ch = calinski_harabasz(&x, &labels).unwrap();
        let db = davies_bouldin(&x, &labels).unwrap();
        let (cho, dbo) = (ch_oracle(&x, &labels, k), db_oracle(&x, &labels, k));
        assert!((ch / cho - 1.0).abs() < 1e-9, "seed {seed}: {ch} vs {cho}");
        assert!((db / dbo - 1.0).abs() < 1e-9, "seed {seed}: {db} vs {dbo}");
    }
}

#[test]
fn hand_examples() {
    let x = vec![vec![0.0], vec![0.1], vec![10.0], vec![10.1]];
    let labels = [0, 0, 1, 1];
    assert!((calinski_harabasz(&x, &labels).unwrap() - 20000.0).abs() < 1e-6);
    assert!((davies_bouldin(&x, &labels).unwrap() - 0.01).abs() < 1e-12);
}

#[test]
fn objective_non_increasing_from_any_start() {
    let mut rng = seeded(77);
    for _ in 0..20 {
        let samples: Vec<MpcSample> = (0..60)
            .map(|_| MpcSample {
                delay: rng.random_range(0.0..300e-9),
                power: rng.random_range(0.01..1.0),
                azimuth: rng.random_range(0.0..std::f64::consts::TAU),
                zenith: rng.random_range(0.3..2.8),
            })
            .collect();
        let x = embed(&samples, &KpmConfig::default());
        let w: Vec<f64> = samples.iter().map(|s| s.power).collect();
        let mut centers: Vec<Vec<f64>> = (0..5).map(|i| x[i * 7].clone()).collect();
        let mut prev = f64::INFINITY;
        for _ in 0..15 {
            let r = kpm_from_centers(&x, &w, centers, 1);
            assert!(r.objective <= prev * (1.0 + 1e-12) + 1e-15);
            prev = r.objective;
            centers = r.centers;
        }
        let best = k_power_means(&samples, 5, &KpmConfig::default(), &mut rng).unwrap();
        assert!(best.objective <= prev * (1.0 + 1e-9));
    }
}

proptest! {
    #[test]
    fn spreads_invariant_under_shift_and_rotation(
        values in prop::collection::vec((0.0f64..std::f64::consts::TAU, 0.01f64..1.0), 1..40),
        shift in -1e-6f64..1e-6,
        rot in -10.0f64..10.0,
    ) {
        let v: Vec<f64> = values.iter().map(|x| x.0).collect();
        let p: Vec<f64> = values.iter().map(|x| x.1).collect();
        let tau: Vec<f64> = v.iter().map(|x| x * 1e-7).collect();
        let shifted: Vec<f64> = tau.iter().map(|t| t + shift).collect();
        let a = rms_spread(&tau, &p, false).unwrap();
        let b = rms_spread(&shifted, &p, false).unwrap();
        prop_assert!((a - b).abs() < 1e-12);
        let rotated: Vec<f64> = v.iter().map(|x| x + rot).collect();
        let c = rms_spread(&v, &p, true).unwrap();
        let d = rms_spread(&rotated, &p, true).unwrap();
        prop_assert!((c - d).abs() < 1e-9);
    }
}
