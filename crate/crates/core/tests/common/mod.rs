#![allow(dead_code)]

use gyrocal::{GyroModel, ScenarioConfig, Vec3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Body-frame axis with every component at least 0.3 in magnitude before normalization.
pub fn random_axis(rng: &mut impl Rng) -> Vec3 {
    let c = |rng: &mut dyn rand::RngCore| {
        let m: f64 = rng.random_range(0.3..=1.0);
        if rng.random::<bool>() {
            m
        } else {
            -m
        }
    };
    Vec3::new(c(rng), c(rng), c(rng)).normalized().unwrap()
}

/// Zero-noise scenario with scale U(0.9, 1.1), bias U(-3, 3), axis-gravity
/// angle 15..75 deg, speed 5..200 deg/s and 4..8 poses.
pub fn random_noiseless(rng: &mut impl Rng) -> ScenarioConfig {
    ScenarioConfig {
        true_gyro: GyroModel {
            scale: Vec3::new(
                rng.random_range(0.9..=1.1),
                rng.random_range(0.9..=1.1),
                rng.random_range(0.9..=1.1),
            ),
            bias: Vec3::new(
                rng.random_range(-3.0..=3.0),
                rng.random_range(-3.0..=3.0),
                rng.random_range(-3.0..=3.0),
            ),
        },
        axis: random_axis(rng),
        tilt_deg: rng.random_range(15.0..75.0),
        speed: rng.random_range(5.0..=200.0),
        n_poses: rng.random_range(4..=8),
        samples_per_segment: 100,
        rotation_samples: 400,
        seed: rng.random(),
        ..ScenarioConfig::default()
    }
    .noiseless()
}

pub fn max_rel_err(est: Vec3, truth: Vec3) -> f64 {
    (est - truth).hadamard_div(truth).max_abs()
}

/// `(XᵀX)⁻¹ Xᵀ l` with the 3×3 inverse written out by cofactors.
pub fn normal_equation_solve(rows: &[Vec3], rhs: &[f64]) -> Vec3 {
    let mut n = [[0.0; 3]; 3];
    let mut v = [0.0; 3];
    for (r, &l) in rows.iter().zip(rhs) {
        for i in 0..3 {
            v[i] += r[i] * l;
            for j in 0..3 {
                n[i][j] += r[i] * r[j];
            }
        }
    }
    let c = |i: usize, j: usize| {
        let (r0, r1) = ((i + 1) % 3, (i + 2) % 3);
        let (c0, c1) = ((j + 1) % 3, (j + 2) % 3);
        n[r0][c0] * n[r1][c1] - n[r0][c1] * n[r1][c0]
    };
    let det = n[0][0] * c(0, 0) + n[0][1] * c(0, 1) + n[0][2] * c(0, 2);
    let mut x = [0.0; 3];
    for (i, xi) in x.iter_mut().enumerate() {
        // inverse is the transposed cofactor matrix over det
        *xi = (0..3).map(|j| c(j, i) * v[j]).sum::<f64>() / det;
    }
    x.into()
}
