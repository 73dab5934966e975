use gyrocal::{monte_carlo, noise_grid, GyroModel, RedrawPolicy, ScenarioConfig, Vec3};

fn fixed_k() -> ScenarioConfig {
    ScenarioConfig {
        true_gyro: GyroModel {
            scale: Vec3::new(1.05, 0.95, 1.1),
            bias: Vec3::new(0.4, -0.7, 1.2),
        },
        ..ScenarioConfig::reference()
    }
}

#[test]
fn monte_carlo_is_deterministic() {
    let base = ScenarioConfig {
        seed: 77,
        ..ScenarioConfig::reference()
    };
    let a = monte_carlo(&base, 5, RedrawPolicy::Models).unwrap();
    let b = monte_carlo(&base, 5, RedrawPolicy::Models).unwrap();
    assert_eq!(a, b);
    assert_eq!(serde_json::to_string(&a).unwrap(), serde_json::to_string(&b).unwrap());
}

#[test]
fn single_noiseless_run() {
    let s = monte_carlo(&ScenarioConfig::reference().noiseless(), 1, RedrawPolicy::Models).unwrap();
    assert_eq!(s.failures, 0);
    assert!(s.median_abs_error.max_abs() <= 1e-9);
}

#[test]
fn calibration_concentrates_dot_products() {
    let s = monte_carlo(&ScenarioConfig::reference(), 100, RedrawPolicy::Models).unwrap();
    assert_eq!(s.failures, 0);
    assert!(s.median_abs_error.max_abs() < 0.01);
    assert!(s.dot_after.unwrap().iqr() < s.dot_before.unwrap().iqr());
}

#[test]
fn scale_error_shrinks_with_speed() {
    let cells = noise_grid(&fixed_k(), &[30.0], &[5.0, 50.0, 100.0, 200.0], 200).unwrap();
    let mse: Vec<f64> = cells.iter().map(|c| c.mse.x).collect();
    let std: Vec<f64> = cells.iter().map(|c| c.std.x).collect();
    assert!(std[3] < std[0], "{std:?}");
    assert!(mse[3] < mse[0], "{mse:?}");
}

#[test]
fn scale_error_grows_with_noise() {
    let base = ScenarioConfig {
        speed: 50.0,
        ..fixed_k()
    };
    let cells = noise_grid(&base, &[1.0, 10.0, 30.0], &[50.0], 200).unwrap();
    let mse: Vec<f64> = cells.iter().map(|c| c.mse.x).collect();
    assert!(mse.windows(2).all(|w| w[0] < w[1]), "{mse:?}");
}
