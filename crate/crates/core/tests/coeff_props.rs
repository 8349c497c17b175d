use std::f64::consts::PI;

use isac_chansim::coeff::pathloss::aperture_term_db;
use isac_chansim::coeff::{
    freespace_pathloss_db, los_sensing_coefficient, radar_equation_pathloss_db, sensing_pathloss,
    AntennaElement, EchoGeometry,
};
use isac_chansim::geometry::Vec3;
use isac_chansim::SPEED_OF_LIGHT;
use proptest::prelude::*;

const LAMBDA: f64 = SPEED_OF_LIGHT / 28e9;

fn point() -> impl Strategy<Value = Vec3> {
    (-200.0f64..200.0, -200.0f64..200.0, -20.0f64..40.0)
        .prop_map(|(x, y, z)| Vec3::new(x, y, z))
        .prop_filter("away from origin", |p| p.norm() > 0.5)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(2_000))]

    #[test]
    fn composed_and_direct_radar_pathloss_agree(
        d1 in 0.5f64..2000.0, d2 in 0.5f64..2000.0, rcs in -50.0f64..50.0,
    ) {
        let fs = |d| freespace_pathloss_db(d, LAMBDA);
        let a = sensing_pathloss(d1, d2, rcs, LAMBDA, fs).unwrap();
        let b = radar_equation_pathloss_db(d1, d2, rcs, LAMBDA).unwrap();
        prop_assert!((a - b).abs() < 0.01);
        let swapped = sensing_pathloss(d2, d1, rcs, LAMBDA, fs).unwrap();
        prop_assert!((a - swapped).abs() < 1e-9);
    }

    #[test]
    fn static_isotropic_echo_has_unit_modulus(target in point(), t in 0.0f64..1.0) {
        let iso = AntennaElement::default();
        let echo = EchoGeometry::new(Vec3::ZERO, Vec3::ZERO, target).unwrap();
        let h = los_sensing_coefficient(&iso, &iso, &echo, Vec3::ZERO, t, LAMBDA).unwrap();
        prop_assert!((h.value.norm() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn receding_monostatic_doppler(target in point(), speed in 0.1f64..40.0) {
        let iso = AntennaElement::default();
        let echo = EchoGeometry::new(Vec3::ZERO, Vec3::ZERO, target).unwrap();
        let v = target.normalized().unwrap() * speed;
        let h = los_sensing_coefficient(&iso, &iso, &echo, v, 0.0, LAMBDA).unwrap();
        prop_assert!(h.doppler > 0.0);
        prop_assert!((h.doppler / (2.0 * speed / LAMBDA) - 1.0).abs() < 1e-9);
    }
}

#[test]
fn aperture_term_at_28ghz() {
    assert!(
        (aperture_term_db(LAMBDA) - 10.0 * (LAMBDA * LAMBDA / (4.0 * PI)).log10()).abs() < 1e-15
    );
    assert!((aperture_term_db(LAMBDA) + 50.40).abs() < 0.005);
}
