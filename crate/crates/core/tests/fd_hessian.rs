use hfnewton::fd_hessian::{fd_hessian, fd_step_size, H_MIN};
use hfnewton::linalg::DenseMatrix;
use hfnewton::objectives::{
    estimate_assumption_a_constant, make_logsumexp, standard_normal_vector, HessianSource, Objective, Quadratic,
};
use nalgebra::DMatrix;
use proptest::prelude::*;

fn to_na(a: &DenseMatrix<f64>) -> DMatrix<f64> {
    DMatrix::from_fn(a.nrows(), a.ncols(), |i, j| a[(i, j)])
}

fn spectral_norm_sym(m: &DMatrix<f64>) -> f64 {
    m.clone().symmetric_eigen().eigenvalues.iter().fold(0.0, |acc: f64, v| acc.max(v.abs()))
}

/// Largest curvature ratio over pairs `(x, x + r·d)` with `d` a random unit
/// vector or a signed coordinate axis, at several radii.
fn empirical_constant<P: Objective<f64>>(p: &P, points: &[Vec<f64>], seed: u64) -> f64 {
    let mut best = 0.0f64;
    for (k, x) in points.iter().enumerate() {
        let n = x.len();
        let d = standard_normal_vector::<f64>(n, seed + k as u64);
        let dn = d.iter().map(|v| v * v).sum::<f64>().sqrt();
        let mut dirs: Vec<Vec<f64>> = vec![d.iter().map(|v| v / dn).collect()];
        for i in 0..n {
            for sign in [1.0, -1.0] {
                let mut e = vec![0.0; n];
                e[i] = sign;
                dirs.push(e);
            }
        }
        for dir in &dirs {
            for r in [1e-3, 1e-1] {
                let y: Vec<f64> = x.iter().zip(dir).map(|(a, b)| a + r * b).collect();
                best = best.max(estimate_assumption_a_constant(p, x, &y, HessianSource::Analytic).unwrap());
            }
        }
    }
    best
}

#[test]
fn forward_difference_error_stays_within_curvature_bound() {
    let (n, m) = (20, 100);
    let f = make_logsumexp::<f64>(n, m, 0.1, 21).unwrap();
    let points: Vec<Vec<f64>> = (0..20).map(|k| standard_normal_vector(n, 100 + k)).collect();
    let h_hat = 1.5 * empirical_constant(&f, &points, 500);
    for x in &points {
        let g = f.gradient(x).unwrap();
        let exact = to_na(&f.hessian(x).unwrap());
        for h in [1e-2, 1e-4, 1e-6] {
            let b = to_na(&fd_hessian(&f, x, &g, h).unwrap().b);
            let err = spectral_norm_sym(&(b - &exact));
            let bound = (n as f64).sqrt() * h_hat * h;
            assert!(err <= bound, "h={h}: error {err:e} exceeds {bound:e}");
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn quadratics_are_reproduced_exactly(
        diag in prop::collection::vec(0.1f64..10.0, 2..8),
        off in -1.0f64..1.0,
        h in 1e-4f64..1e-1,
    ) {
        let n = diag.len();
        let q = DenseMatrix::from_fn(n, n, |i, j| if i == j { diag[i] } else { off / n as f64 });
        let f = Quadratic::new(q.clone(), vec![0.5; n]).unwrap();
        let x: Vec<f64> = (0..n).map(|i| i as f64 - 1.5).collect();
        let g = f.gradient(&x).unwrap();
        let b = fd_hessian(&f, &x, &g, h).unwrap().b;
        let err = (to_na(&b) - to_na(&q)).norm() / to_na(&q).norm();
        prop_assert!(err <= 1e-10, "relative error {err:e}");
        prop_assert_eq!(b.asymmetry(), 0.0);
    }

    #[test]
    fn step_size_never_drops_below_floor(
        kappa in 1e-8f64..1.0,
        g in 0.0f64..1e3,
        alpha in 0.05f64..=1.0,
        n in 1usize..500,
        sigma in 1e-8f64..1e8,
    ) {
        let h = fd_step_size(kappa, g, alpha, n, sigma).unwrap();
        let raw = kappa * g.powf(alpha).sqrt() / (4.0 * (n as f64).sqrt() * sigma);
        prop_assert!(h >= H_MIN);
        prop_assert!(h == raw.max(H_MIN));
    }
}

#[test]
fn one_hessian_costs_n_gradients() {
    let f = make_logsumexp::<f64>(7, 30, 0.2, 2).unwrap();
    let x = standard_normal_vector::<f64>(7, 3);
    let g = f.gradient(&x).unwrap();
    let before = f.counters().snapshot();
    let out = fd_hessian(&f, &x, &g, 1e-5).unwrap();
    let after = f.counters().snapshot();
    assert_eq!(after.gradients - before.gradients, 7);
    assert_eq!(out.gradient_evals, 7);
    assert_eq!(after.values, before.values);
}
