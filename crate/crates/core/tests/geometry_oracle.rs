//! Nearest-point solver checked against the multistart descent oracle.

mod common;

use common::oracle_boundary_distance;
use pmlab::geometry::{boundary_distance, make_ellipsoid, EllipsoidSpec};
use pmlab::numerics::SeededRng;

fn basis_columns(e: &EllipsoidSpec) -> Vec<Vec<f64>> {
    (0..e.intrinsic_dim).map(|j| e.basis.col(j)).collect()
}

#[test]
fn oracle_reproduces_closed_form_cases() {
    // Sphere of radius 2 in a 2-dim subspace, point at radius 3.5.
    let e = make_ellipsoid(5, 2, 2.0, 2.0, 1).unwrap();
    let mut p = e.center.clone();
    for (i, pi) in p.iter_mut().enumerate() {
        *pi += 3.5 * e.basis.get(i, 0);
    }
    let oracle = oracle_boundary_distance(&p, &e.center, &basis_columns(&e), &e.radii, 6, 2);
    assert!((oracle - 1.5).abs() < 1e-8, "oracle {oracle}");

    // Interior on-axis point of the (2, 1) ellipse: closed form sqrt(11/12).
    let cols = vec![vec![1.0, 0.0], vec![0.0, 1.0]];
    let oracle =
        oracle_boundary_distance(&[0.5, 0.0], &[0.0, 0.0], &cols, &[2.0, 1.0], 6, 3);
    assert!((oracle - (11.0f64 / 12.0).sqrt()).abs() < 1e-8, "oracle {oracle}");
}

#[test]
fn solver_matches_oracle_on_random_instances() {
    // Mixed interior/exterior instances across radius regimes.
    let mut rng = SeededRng::new(2025);
    let ranges = [(0.2, 1.5), (0.5, 3.0), (6.0, 30.0)];
    let mut worst = 0.0f64;
    for case in 0..60 {
        let ambient = 5 + rng.index(46); // up to 50
        let d = 1 + rng.index(ambient.min(20));
        let (lo, hi) = ranges[case % ranges.len()];
        let e = make_ellipsoid(ambient, d, lo, hi, 9000 + case as u64).unwrap();
        let mut p = rng.uniform_cube_point(ambient);
        if case % 4 == 0 {
            // Push some points far outside the cube to force exterior cases.
            for v in p.iter_mut() {
                *v = *v * 6.0 - 2.5;
            }
        }
        let fast = boundary_distance(&p, &e).unwrap();
        let oracle =
            oracle_boundary_distance(&p, &e.center, &basis_columns(&e), &e.radii, 8, case as u64);
        worst = worst.max((fast - oracle).abs());
        assert!(
            (fast - oracle).abs() <= 1e-5,
            "case {case}: solver {fast} vs oracle {oracle} (D={ambient}, d={d})"
        );
    }
    println!("worst |solver - oracle| over 60 instances: {worst:.2e}");
}
