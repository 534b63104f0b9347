//! Forward finite-difference Hessian approximations.

use rayon::prelude::*;

use crate::linalg::{DenseMatrix, LinalgError};
use crate::objectives::{EvalError, Objective};
use crate::scalar::Scalar;

/// Smallest step [`fd_step_size`] will return.
pub const H_MIN: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq)]
pub struct FdHessianResult<T> {
    /// Symmetrized forward-difference matrix.
    pub b: DenseMatrix<T>,
    pub h: T,
    /// Gradient evaluations charged on top of the one at `x`.
    pub gradient_evals: usize,
}

/// Matrix whose column `i` is `(∇f(x + h·eᵢ) − ∇f(x)) / h`.
///
/// Columns are evaluated in parallel. Each column divides by the perturbation
/// actually realized in floating point, which equals `h` up to rounding.
pub fn forward_diff_matrix<T: Scalar, P: Objective<T> + ?Sized>(
    problem: &P,
    x: &[T],
    grad_at_x: &[T],
    h: T,
) -> Result<DenseMatrix<T>, EvalError> {
    problem.check_dim(x)?;
    problem.check_dim(grad_at_x)?;
    if !(h > T::zero()) || !h.is_finite() {
        return Err(EvalError::Invalid(format!("finite-difference step must be positive, got {h}")));
    }
    let n = x.len();
    let columns: Vec<Vec<T>> = (0..n)
        .into_par_iter()
        .map(|i| {
            let mut xp = x.to_vec();
            xp[i] += h;
            let step = xp[i] - x[i];
            let gp = problem.gradient(&xp)?;
            Ok(gp.iter().zip(grad_at_x).map(|(&a, &b)| (a - b) / step).collect())
        })
        .collect::<Result<_, EvalError>>()?;
    Ok(DenseMatrix::from_fn(n, n, |r, c| columns[c][r]))
}

/// `½(A + Aᵀ)`
pub fn symmetrize<T: Scalar>(a: &DenseMatrix<T>) -> Result<DenseMatrix<T>, LinalgError> {
    if !a.is_square() {
        return Err(LinalgError::NotSquare { rows: a.nrows(), cols: a.ncols() });
    }
    let half = T::of(0.5);
    Ok(DenseMatrix::from_fn(a.nrows(), a.ncols(), |i, j| half * (a[(i, j)] + a[(j, i)])))
}

/// `κ_B·√(‖g‖^α) / (4√n·σ')`, never below [`H_MIN`].
pub fn fd_step_size<T: Scalar>(kappa_b: T, grad_norm: T, alpha: T, n: usize, sigma_scaled: T) -> Result<T, EvalError> {
    if !(kappa_b > T::zero()) {
        return Err(EvalError::Invalid(format!("kappa_B must be positive for finite differences, got {kappa_b}")));
    }
    if !(sigma_scaled > T::zero()) || n == 0 || !(grad_norm >= T::zero()) {
        return Err(EvalError::Invalid(format!(
            "invalid step-size inputs: sigma'={sigma_scaled}, n={n}, grad_norm={grad_norm}"
        )));
    }
    let h = kappa_b * grad_norm.powf(alpha).sqrt() / (T::of(4.0) * T::of_usize(n).sqrt() * sigma_scaled);
    Ok(h.max(T::of(H_MIN)))
}

/// Forward differences followed by symmetrization.
pub fn fd_hessian<T: Scalar, P: Objective<T> + ?Sized>(
    problem: &P,
    x: &[T],
    grad_at_x: &[T],
    h: T,
) -> Result<FdHessianResult<T>, EvalError> {
    let a = forward_diff_matrix(problem, x, grad_at_x, h)?;
    let b = symmetrize(&a).map_err(|e| EvalError::Invalid(e.to_string()))?;
    Ok(FdHessianResult { b, h, gradient_evals: x.len() })
}
