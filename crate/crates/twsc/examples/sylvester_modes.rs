//! The two Sylvester solvers side by side: agreement at oracle-checkable
//! sizes, then fast-path timing at production sizes where the dense
//! Kronecker route is excluded by its guard.
//!
//! Run: cargo run --release --example sylvester_modes

use std::time::Instant;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use twsc::linalg::{
    solve_sylvester_fast, solve_sylvester_naive, sylvester_residual, SylvesterProblem,
};

fn random_problem(
    r: usize,
    m: usize,
    rng: &mut rand_chacha::ChaCha12Rng,
) -> SylvesterProblem {
    let g = DMatrix::from_fn(r, r, |_, _| rng.gen_range(-1.0..1.0));
    let a = &g * g.transpose() + DMatrix::identity(r, r) * 1e-6;
    let b = DVector::from_fn(m, |_, _| rng.gen_range(0.05..4.0));
    let e = DMatrix::from_fn(r, m, |_, _| rng.gen_range(-10.0..10.0));
    SylvesterProblem::new(a, b, e).expect("valid problem")
}

fn main() {
    let mut rng = rand_chacha::ChaCha12Rng::seed_from_u64(11);

    println!("agreement against the dense Kronecker solve:");
    for (r, m) in [(5usize, 8usize), (12, 20), (25, 40)] {
        let prob = random_problem(r, m, &mut rng);
        let naive = solve_sylvester_naive(&prob).expect("naive");
        let fast = solve_sylvester_fast(&prob).expect("fast");
        let dev = (&fast - &naive).norm() / naive.norm().max(1.0);
        println!(
            "  r={r:2} M={m:2}: relative deviation {dev:.2e}, residual {:.2e}",
            sylvester_residual(&prob, &fast)
        );
    }

    println!("fast path at production sizes (dense route guarded out):");
    for m in [70usize, 140, 280] {
        let r = 147;
        let prob = random_problem(r, m, &mut rng);
        assert!(solve_sylvester_naive(&prob).is_err(), "guard should trip");
        let t = Instant::now();
        let c = solve_sylvester_fast(&prob).expect("fast");
        let elapsed = t.elapsed().as_secs_f64() * 1e3;
        println!(
            "  r={r} M={m:3}: {elapsed:6.2} ms, residual {:.2e}, |C| {:.2}",
            sylvester_residual(&prob, &c),
            c.norm()
        );
    }
}
