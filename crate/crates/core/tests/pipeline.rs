mod common;

use common::{max_rel_err, random_noiseless, rng};
use gyrocal::{calibrate, calibrate_detailed, simulate_session, CalibrationSession, Error, ScenarioConfig, Vec3};

#[test]
fn zero_noise_recovers_scale_and_bias() {
    let mut r = rng(11);
    for case in 0..50 {
        let cfg = random_noiseless(&mut r);
        let sim = simulate_session(&cfg).unwrap();
        let res = calibrate(&sim.session, None).unwrap();
        let truth = cfg.true_gyro;
        assert!(
            max_rel_err(res.gyro.scale, truth.scale) < 1e-9,
            "case {case}: {:?}",
            res.gyro.scale
        );
        // true-domain bias is K ⊙ b_measured... expressed as the rate seen at rest
        assert!(
            (res.gyro.bias - truth.bias).max_abs() < 1e-9,
            "case {case}: {:?}",
            res.gyro.bias
        );
        assert!((res.angle_axis_gravity - cfg.tilt_deg).abs() < 1e-6, "case {case}");
        assert!(res.residual_rms < 1e-9);
    }
}

#[test]
fn measurement_scale_equivariance() {
    let mut r = rng(12);
    for _ in 0..20 {
        let cfg = random_noiseless(&mut r);
        let sim = simulate_session(&cfg).unwrap();
        let base = calibrate(&sim.session, None).unwrap();
        for c in [0.5, 2.0, 1.0 / 3.0, 7.25] {
            let scaled = calibrate(&sim.session.with_gyro_scaled(c), None).unwrap();
            assert!(max_rel_err(scaled.gyro.scale, base.gyro.scale / c) < 1e-9);
            assert!((scaled.gyro.bias - base.gyro.bias).max_abs() < 1e-9);
        }
    }
}

#[test]
fn pose_subset_independence() {
    let mut r = rng(13);
    for _ in 0..20 {
        let mut cfg = random_noiseless(&mut r);
        cfg.n_poses = 6;
        let sim = simulate_session(&cfg).unwrap();
        let full = calibrate(&sim.session, None).unwrap();
        for drop in [vec![0], vec![1, 4], vec![0, 2, 5]] {
            let session = CalibrationSession {
                static_poses: sim
                    .session
                    .static_poses
                    .iter()
                    .enumerate()
                    .filter(|(i, _)| !drop.contains(i))
                    .map(|(_, p)| p.clone())
                    .collect(),
                ..sim.session.clone()
            };
            let sub = calibrate(&session, None).unwrap();
            assert!(max_rel_err(sub.gyro.scale, full.gyro.scale) < 1e-9, "dropping {drop:?}");
        }
    }
}

#[test]
fn calibrated_dot_products_are_constant() {
    let mut r = rng(14);
    for _ in 0..20 {
        let cfg = random_noiseless(&mut r);
        let sim = simulate_session(&cfg).unwrap();
        let cal = calibrate_detailed(&sim.session, None).unwrap();
        let after = cal.dot_after();
        let expected = cfg.speed * cfg.tilt_deg.to_radians().cos();
        for d in &after {
            assert!((d.abs() - expected).abs() < 1e-9 * cfg.speed, "{d} vs {expected}");
        }
        let before = cal.dot_before();
        let spread = before.iter().cloned().fold(f64::MIN, f64::max) - before.iter().cloned().fold(f64::MAX, f64::min);
        assert!(spread > 0.0);
    }
}

#[test]
fn reference_scenario_with_noise_is_close() {
    let cfg = ScenarioConfig {
        seed: 5,
        ..ScenarioConfig::reference()
    };
    let sim = simulate_session(&cfg).unwrap();
    let res = calibrate(&sim.session, None).unwrap();
    assert!(
        max_rel_err(res.gyro.scale, cfg.true_gyro.scale) < 0.01,
        "{:?}",
        res.gyro.scale
    );
}

fn geometry_case(tilt_deg: f64) -> Result<gyrocal::CalibrationResult, Error> {
    let cfg = ScenarioConfig {
        tilt_deg,
        ..ScenarioConfig::reference()
    };
    calibrate(&simulate_session(&cfg).unwrap().session, None)
}

#[test]
fn degenerate_geometry_is_rejected() {
    for tilt in [0.0, 2.0, 4.9, 85.1, 88.0, 90.0] {
        match geometry_case(tilt) {
            Err(e) => assert!(matches!(e, Error::GeometryDegenerate { .. }), "tilt {tilt}: {e}"),
            Ok(r) => panic!("tilt {tilt} produced {:?}", r.gyro.scale),
        }
    }
    for tilt in [20.0, 45.0, 70.0] {
        geometry_case(tilt).unwrap();
    }
}

#[test]
fn reversed_motor_keeps_positive_scale() {
    let cfg = ScenarioConfig {
        axis: -ScenarioConfig::reference().axis,
        ..ScenarioConfig::reference().noiseless()
    };
    let res = calibrate(&simulate_session(&cfg).unwrap().session, None).unwrap();
    assert!(max_rel_err(res.gyro.scale, cfg.true_gyro.scale) < 1e-9);
}

#[test]
fn too_few_poses() {
    let sim = simulate_session(&ScenarioConfig::reference().noiseless()).unwrap();
    let mut s = sim.session.clone();
    s.static_poses.truncate(2);
    assert!(matches!(
        calibrate(&s, None),
        Err(Error::TooFewPoses { required: 3, got: 2 })
    ));
    let _ = Vec3::ZERO;
}

proptest::proptest! {
    #![proptest_config(proptest::prelude::ProptestConfig::with_cases(64))]
    #[test]
    fn noiseless_consistency(seed in proptest::prelude::any::<u64>()) {
        let cfg = random_noiseless(&mut rng(seed));
        let res = calibrate(&simulate_session(&cfg).unwrap().session, None).unwrap();
        proptest::prop_assert!(max_rel_err(res.gyro.scale, cfg.true_gyro.scale) < 1e-9);
    }
}
