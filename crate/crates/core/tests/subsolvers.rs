use hfnewton::linalg::DenseMatrix;
use hfnewton::objectives::standard_normal_vector;
use hfnewton::subsolvers::{
    cubic_stop_holds, default_cg_cap, solve_cubic_gd, solve_regularized_cg, solve_regularized_cg_observed,
    solve_regularized_direct, CubicModel, StepExit,
};
use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;

/// `QᵀQ / n` for a seeded normal `Q`: symmetric positive semidefinite.
fn random_psd(n: usize, seed: u64) -> DenseMatrix<f64> {
    let q = standard_normal_vector::<f64>(n * n, seed);
    DenseMatrix::from_fn(n, n, |i, j| (0..n).map(|k| q[k * n + i] * q[k * n + j]).sum::<f64>() / n as f64)
}

fn to_na(a: &DenseMatrix<f64>) -> DMatrix<f64> {
    DMatrix::from_fn(a.nrows(), a.ncols(), |i, j| a[(i, j)])
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

fn quad_model(b: &DenseMatrix<f64>, lambda: f64, g: &[f64], s: &[f64]) -> f64 {
    let bs = b.matvec(s);
    let gs: f64 = g.iter().zip(s).map(|(a, b)| a * b).sum();
    let sbs: f64 = s.iter().zip(&bs).map(|(a, b)| a * b).sum();
    gs + 0.5 * sbs + 0.5 * lambda * s.iter().map(|v| v * v).sum::<f64>()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(50))]

    #[test]
    fn exact_cg_matches_direct_solve(n in 1usize..=100, seed in any::<u64>(), lambda in 1e-2f64..10.0) {
        let b = random_psd(n, seed);
        let g = standard_normal_vector::<f64>(n, seed.wrapping_add(1));
        let direct = solve_regularized_direct(&b, lambda, &g).unwrap();
        let cg = solve_regularized_cg(&b, lambda, &g, 0.0, default_cg_cap(n)).unwrap();
        prop_assert!(cg.exit.usable(), "exit {:?}", cg.exit);
        let diff: Vec<f64> = cg.s.iter().zip(&direct.s).map(|(a, b)| a - b).collect();
        prop_assert!(norm(&diff) <= 1e-8 * norm(&direct.s).max(1.0), "gap {:e}", norm(&diff));

        // Independent oracle: nalgebra's LU on the shifted system.
        let shifted = to_na(&b) + DMatrix::identity(n, n) * lambda;
        let s_na = shifted.lu().solve(&(-DVector::from_column_slice(&g))).unwrap();
        let gap = (DVector::from_column_slice(&direct.s) - &s_na).norm();
        prop_assert!(gap <= 1e-8 * s_na.norm().max(1.0));
    }

    #[test]
    fn satisfied_cg_exits_pass_recomputation(
        n in 2usize..60,
        seed in any::<u64>(),
        lambda in 1e-3f64..5.0,
        theta in 0.0f64..0.9,
    ) {
        let b = random_psd(n, seed);
        let g = standard_normal_vector::<f64>(n, seed ^ 0xABCD);
        let out = solve_regularized_cg(&b, lambda, &g, theta, default_cg_cap(n)).unwrap();
        let r = to_na(&b) * DVector::from_column_slice(&out.s) + DVector::from_column_slice(&out.s) * lambda
            + DVector::from_column_slice(&g);
        prop_assert!((r.norm() - out.residual_norm).abs() <= 1e-10 * r.norm().max(1.0));
        if out.satisfied {
            prop_assert!(r.norm() <= theta * norm(&g).min(norm(&out.s)));
        }
        if out.exit == StepExit::Criterion {
            prop_assert!(out.satisfied);
        }
    }

    #[test]
    fn cg_never_increases_the_quadratic_model(n in 2usize..60, seed in any::<u64>(), lambda in 1e-3f64..5.0) {
        let b = random_psd(n, seed);
        let g = standard_normal_vector::<f64>(n, seed ^ 0x5151);
        let mut values = vec![0.0];
        solve_regularized_cg_observed(&b, lambda, &g, 0.0, default_cg_cap(n), |s| {
            values.push(quad_model(&b, lambda, &g, s));
        })
        .unwrap();
        for w in values.windows(2) {
            prop_assert!(w[1] <= w[0] + 1e-12 * w[0].abs().max(1.0), "model rose from {} to {}", w[0], w[1]);
        }
    }

    #[test]
    fn cubic_descent_is_monotone_and_honest(n in 2usize..30, seed in any::<u64>(), m in 1e-3f64..10.0) {
        let b = random_psd(n, seed);
        let g = standard_normal_vector::<f64>(n, seed ^ 0x7777);
        let model = CubicModel { f_xt: 1.0, g: &g, b: &b, m_coeff: m };
        let x_t = vec![0.0; n];
        let out = solve_cubic_gd(&model, &x_t, 0.5, 5000);
        prop_assert!(out.monotone);
        if out.satisfied {
            prop_assert!(cubic_stop_holds(&model, &out.y, 0.5));
            prop_assert!(out.model_value <= 1.0);
        }
    }
}

#[test]
fn non_positive_curvature_is_reported() {
    let b = DenseMatrix::diagonal(&[-2.0f64, 1.0]);
    let out = solve_regularized_cg(&b, 0.5, &[1.0, 0.0], 0.1, 10).unwrap();
    assert_eq!(out.exit, StepExit::NonPositiveCurvature);
    assert!(!out.exit.usable());
    assert!(solve_regularized_direct(&b, 0.5, &[1.0, 0.0]).is_err());
}
