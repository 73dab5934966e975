mod common;

use common::{normal_equation_solve, rng};
use gyrocal::linalg::{condition_number, normal_matrix};
use gyrocal::{solve_ls, DesignMatrix, Error, Vec3};
use rand::Rng;

#[test]
fn qr_matches_normal_equations() {
    let mut r = rng(31);
    let mut checked = 0;
    while checked < 1000 {
        let n = r.random_range(3..=12);
        let rows: Vec<Vec3> = (0..n)
            .map(|_| {
                Vec3::new(
                    r.random_range(-1.0..1.0),
                    r.random_range(-1.0..1.0),
                    r.random_range(-1.0..1.0),
                )
            })
            .collect();
        let rhs: Vec<f64> = (0..n).map(|_| r.random_range(-2.0..2.0)).collect();
        let dense: Vec<Vec<f64>> = rows.iter().map(|v| v.to_array().to_vec()).collect();
        if condition_number(&normal_matrix(&dense)) > 1e4 {
            continue;
        }
        let qr = solve_ls(&DesignMatrix {
            rows: rows.clone(),
            rhs: rhs.clone(),
        })
        .unwrap()
        .beta;
        let oracle = normal_equation_solve(&rows, &rhs);
        assert!((qr - oracle).norm() <= 1e-8 * oracle.norm(), "{qr:?} vs {oracle:?}");
        checked += 1;
    }
}

#[test]
fn exactly_determined_system_is_solved_exactly() {
    let rows = vec![
        Vec3::new(2.0, 0.0, 0.0),
        Vec3::new(0.0, 4.0, 0.0),
        Vec3::new(0.0, 0.0, 0.5),
    ];
    let s = solve_ls(&DesignMatrix {
        rows,
        rhs: vec![1.0; 3],
    })
    .unwrap();
    assert_eq!(s.beta, Vec3::new(0.5, 0.25, 2.0));
    assert!(s.residual_rms < 1e-15);
}

#[test]
fn rank_deficient_system_is_singular() {
    let rows = vec![
        Vec3::new(1.0, 2.0, 0.0),
        Vec3::new(2.0, 4.0, 0.0),
        Vec3::new(0.5, 1.0, 0.0),
    ];
    assert!(matches!(
        solve_ls(&DesignMatrix {
            rows,
            rhs: vec![1.0; 3]
        }),
        Err(Error::SingularSystem { .. })
    ));
}
