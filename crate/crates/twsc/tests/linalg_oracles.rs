//! Oracle-backed checks for the linear-algebra kernels: the Jacobi SVD
//! reference, fast-vs-naive Sylvester agreement, and the proximal-operator
//! properties.

mod common;

use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;
use rand::Rng;
use twsc::linalg::{
    check_unique_solution, economy_svd, soft_threshold, solve_sylvester_fast,
    solve_sylvester_naive, sylvester_residual, SylvesterProblem,
};

#[test]
fn economy_svd_matches_jacobi_oracle_on_seeded_matrix() {
    let mut rng = common::rng(42);
    let y = common::random_matrix(6, 4, -5.0, 5.0, &mut rng);
    let f = economy_svd(&y).unwrap();

    // Reconstruction residual.
    let rec = &f.d * DMatrix::from_diagonal(&f.s) * f.v.transpose();
    let resid = (&rec - &y).norm() / y.norm().max(1.0);
    assert!(resid <= 1e-8, "reconstruction residual {resid}");

    // Orthonormal columns.
    let gram = f.d.transpose() * &f.d;
    let dev = (&gram - DMatrix::<f64>::identity(4, 4))
        .iter()
        .fold(0.0f64, |m, v| m.max(v.abs()));
    assert!(dev <= 1e-10, "D^T D deviation {dev}");

    // Singular values match the independent Jacobi oracle.
    let (_, s_oracle, _) = common::jacobi_svd(&y);
    for i in 0..4 {
        let rel = (f.s[i] - s_oracle[i]).abs() / s_oracle[i].max(1.0);
        assert!(rel <= 1e-8, "sigma[{i}]: {} vs oracle {}", f.s[i], s_oracle[i]);
    }
}

#[test]
fn fast_matches_naive_across_seeded_sizes() {
    let mut rng = common::rng(1234);
    for &r in &[5usize, 10, 20] {
        for &m in &[5usize, 20, 50] {
            let g = common::random_matrix(r, r, -1.0, 1.0, &mut rng);
            let a = &g * g.transpose() + DMatrix::identity(r, r) * 1e-8;
            let b = DVector::from_fn(m, |_, _| rng.gen_range(0.05..4.0));
            let e = common::random_matrix(r, m, -10.0, 10.0, &mut rng);
            let prob = SylvesterProblem::new(a, b, e).unwrap();

            let naive = solve_sylvester_naive(&prob).unwrap();
            let fast = solve_sylvester_fast(&prob).unwrap();
            let dev = (&fast - &naive).norm() / naive.norm().max(1.0);
            assert!(dev <= 1e-8, "r={r} m={m}: deviation {dev}");
            assert!(sylvester_residual(&prob, &fast) <= 1e-7);
            assert!(sylvester_residual(&prob, &naive) <= 1e-7);
        }
    }
}

proptest! {
    #[test]
    fn soft_threshold_is_nonexpansive(
        x in proptest::collection::vec(-100.0f64..100.0, 1..40),
        y in proptest::collection::vec(-100.0f64..100.0, 1..40),
        lambda in 0.0f64..10.0,
    ) {
        let n = x.len().min(y.len());
        let xm = DMatrix::from_vec(n, 1, x[..n].to_vec());
        let ym = DMatrix::from_vec(n, 1, y[..n].to_vec());
        let sx = soft_threshold(&xm, lambda).unwrap();
        let sy = soft_threshold(&ym, lambda).unwrap();
        for i in 0..n {
            // 1e-12 slack absorbs the one rounding step in (|x| - lambda).
            prop_assert!((sx[(i, 0)] - sy[(i, 0)]).abs() <= (xm[(i, 0)] - ym[(i, 0)]).abs() + 1e-12);
        }
    }

    #[test]
    fn gram_plus_positive_diagonal_is_always_solvable(
        seed in 0u64..10_000,
        r in 1usize..8,
        m in 1usize..8,
    ) {
        let mut rng = common::rng(seed);
        let g = common::random_matrix(r, r, -2.0, 2.0, &mut rng);
        let a = &g * g.transpose();
        let b = DVector::from_fn(m, |_, _| rng.gen_range(1e-6..10.0));
        prop_assert!(check_unique_solution(&a, &b).unwrap());
    }
}
