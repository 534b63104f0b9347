//! Inner solvers: the regularized Newton system `(B + λI)s = −g`, exactly or by
//! conjugate gradients, and the cubic model minimized by gradient descent.

use serde::{Deserialize, Serialize};

use crate::linalg::{self, Cholesky, DenseMatrix, LinalgError};
use crate::scalar::Scalar;

/// Cubic-model gradient descent iteration cap.
pub const CUBIC_GD_MAX_INNER: usize = 5000;

/// Relative residual at which conjugate gradients stops regardless of `θ`.
pub const CG_RESIDUAL_FLOOR: f64 = 1e-12;

/// Default conjugate-gradient cap for an `n`-dimensional system.
pub fn default_cg_cap(n: usize) -> usize {
    10 * n.max(1)
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum SubproblemError {
    #[error("regularization must be positive, got {0}")]
    NonPositiveLambda(f64),
    #[error("inexactness parameter must lie in [0, 1), got {0}")]
    InvalidTheta(f64),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
}

/// Why a regularized solve returned.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StepExit {
    /// Cholesky solve.
    Direct,
    /// `‖(B+λI)s + g‖ ≤ θ·min{‖g‖, ‖s‖}` holds.
    Criterion,
    /// Residual fell below `1e-12·max(1, ‖g‖)` first.
    ResidualFloor,
    IterationCap,
    NonPositiveCurvature,
}

impl StepExit {
    /// Whether the step may be handed to the acceptance tests.
    pub fn usable(self) -> bool {
        matches!(self, Self::Direct | Self::Criterion | Self::ResidualFloor)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RegularizedStepResult<T> {
    pub s: Vec<T>,
    /// `‖(B+λI)s + g‖`, recomputed from `s`.
    pub residual_norm: T,
    pub inner_iters: usize,
    /// The inexactness criterion holds for the returned `s`.
    pub satisfied: bool,
    pub exit: StepExit,
}

/// `(B + λI)s + g` computed directly from `s`.
pub fn regularized_residual<T: Scalar>(b: &DenseMatrix<T>, lambda: T, g: &[T], s: &[T]) -> Vec<T> {
    let mut r = b.matvec(s);
    for ((ri, &si), &gi) in r.iter_mut().zip(s).zip(g) {
        *ri += lambda * si + gi;
    }
    r
}

/// `‖(B+λI)s + g‖ ≤ θ·min{‖g‖, ‖s‖}` evaluated from scratch.
pub fn inexact_criterion_holds<T: Scalar>(b: &DenseMatrix<T>, lambda: T, g: &[T], s: &[T], theta: T) -> bool {
    let r = linalg::norm(&regularized_residual(b, lambda, g, s));
    r <= theta * linalg::norm(g).min(linalg::norm(s))
}

fn check_inputs<T: Scalar>(b: &DenseMatrix<T>, lambda: T, g: &[T]) -> Result<(), SubproblemError> {
    if !b.is_square() {
        return Err(LinalgError::NotSquare { rows: b.nrows(), cols: b.ncols() }.into());
    }
    if b.nrows() != g.len() {
        return Err(LinalgError::DimensionMismatch { expected: b.nrows(), found: g.len() }.into());
    }
    if !(lambda > T::zero()) {
        return Err(SubproblemError::NonPositiveLambda(lambda.to_f64_lossy()));
    }
    Ok(())
}

/// Solves `(B + λI)s = −g` by Cholesky factorization.
pub fn solve_regularized_direct<T: Scalar>(
    b: &DenseMatrix<T>,
    lambda: T,
    g: &[T],
) -> Result<RegularizedStepResult<T>, SubproblemError> {
    check_inputs(b, lambda, g)?;
    let chol = Cholesky::factor(&b.shifted(lambda)?)?;
    let s = chol.solve(&linalg::scale(-T::one(), g));
    let residual_norm = linalg::norm(&regularized_residual(b, lambda, g, &s));
    Ok(RegularizedStepResult { s, residual_norm, inner_iters: 0, satisfied: true, exit: StepExit::Direct })
}

/// Conjugate gradients on `(B + λI)s = −g` from `s₀ = 0`, stopping as soon as
/// the inexactness criterion holds.
pub fn solve_regularized_cg<T: Scalar>(
    b: &DenseMatrix<T>,
    lambda: T,
    g: &[T],
    theta: T,
    max_inner: usize,
) -> Result<RegularizedStepResult<T>, SubproblemError> {
    solve_regularized_cg_observed(b, lambda, g, theta, max_inner, |_| {})
}

/// [`solve_regularized_cg`] that hands every iterate to `observe`.
///
/// A criterion hit signalled by the recurrence residual is confirmed against
/// the residual recomputed from `s`; if they disagree, CG restarts from the
/// current iterate with the true residual.
pub fn solve_regularized_cg_observed<T: Scalar>(
    b: &DenseMatrix<T>,
    lambda: T,
    g: &[T],
    theta: T,
    max_inner: usize,
    mut observe: impl FnMut(&[T]),
) -> Result<RegularizedStepResult<T>, SubproblemError> {
    check_inputs(b, lambda, g)?;
    if !(theta >= T::zero() && theta < T::one()) {
        return Err(SubproblemError::InvalidTheta(theta.to_f64_lossy()));
    }
    let n = g.len();
    let g_norm = linalg::norm(g);
    let floor = T::of(CG_RESIDUAL_FLOOR) * g_norm.max(T::one());
    let mut s = vec![T::zero(); n];
    let mut r = g.to_vec();
    let mut p = linalg::scale(-T::one(), &r);
    let mut rr = linalg::dot(&r, &r);

    let finish = |s: Vec<T>, iters: usize, exit: StepExit| {
        let true_r = regularized_residual(b, lambda, g, &s);
        let residual_norm = linalg::norm(&true_r);
        let satisfied = residual_norm <= theta * g_norm.min(linalg::norm(&s));
        RegularizedStepResult { s, residual_norm, inner_iters: iters, satisfied, exit }
    };

    if g_norm == T::zero() {
        return Ok(finish(s, 0, StepExit::ResidualFloor));
    }

    for iter in 1..=max_inner {
        let mut ap = b.matvec(&p);
        linalg::axpy(lambda, &p, &mut ap);
        let curvature = linalg::dot(&p, &ap);
        if !(curvature > T::zero()) || !curvature.is_finite() {
            return Ok(finish(s, iter - 1, StepExit::NonPositiveCurvature));
        }
        let step = rr / curvature;
        linalg::axpy(step, &p, &mut s);
        linalg::axpy(step, &ap, &mut r);
        observe(&s);
        let rr_new = linalg::dot(&r, &r);
        let res = rr_new.sqrt();
        if res <= theta * g_norm.min(linalg::norm(&s)) || res <= floor {
            r = regularized_residual(b, lambda, g, &s);
            let true_res = linalg::norm(&r);
            if true_res <= theta * g_norm.min(linalg::norm(&s)) {
                return Ok(finish(s, iter, StepExit::Criterion));
            }
            if true_res <= floor {
                return Ok(finish(s, iter, StepExit::ResidualFloor));
            }
            rr = linalg::dot(&r, &r);
            p = linalg::scale(-T::one(), &r);
            continue;
        }
        let beta = rr_new / rr;
        for (pi, &ri) in p.iter_mut().zip(&r) {
            *pi = beta * *pi - ri;
        }
        rr = rr_new;
    }
    Ok(finish(s, max_inner, StepExit::IterationCap))
}

/// `M(y) = f(x_t) + ⟨g, y−x_t⟩ + ½⟨B(y−x_t), y−x_t⟩ + (M/6)‖y−x_t‖³`
#[derive(Debug, Clone)]
pub struct CubicModel<'a, T> {
    pub f_xt: T,
    pub g: &'a [T],
    pub b: &'a DenseMatrix<T>,
    pub m_coeff: T,
}

impl<T: Scalar> CubicModel<'_, T> {
    /// Model value at displacement `s = y − x_t`.
    pub fn value(&self, s: &[T]) -> T {
        let sn = linalg::norm(s);
        self.f_xt
            + linalg::dot(self.g, s)
            + T::of(0.5) * linalg::dot(&self.b.matvec(s), s)
            + self.m_coeff / T::of(6.0) * sn * sn * sn
    }

    /// `g + Bs + (M/2)‖s‖s`
    pub fn gradient(&self, s: &[T]) -> Vec<T> {
        let half_m_sn = T::of(0.5) * self.m_coeff * linalg::norm(s);
        let mut d = self.b.matvec(s);
        for ((di, &gi), &si) in d.iter_mut().zip(self.g).zip(s) {
            *di += gi + half_m_sn * si;
        }
        d
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CubicGdResult<T> {
    pub y: Vec<T>,
    pub model_value: T,
    pub model_grad_norm: T,
    pub iters: usize,
    /// Both stopping conditions hold at `y`.
    pub satisfied: bool,
    /// `M` never increased along the iterates.
    pub monotone: bool,
}

/// Whether `y = x_t + s` passes both cubic inner stopping tests.
pub fn cubic_stop_holds<T: Scalar>(model: &CubicModel<'_, T>, s: &[T], theta_bar: T) -> bool {
    let sn = linalg::norm(s);
    let gm = linalg::norm(&model.gradient(s));
    model.value(s) <= model.f_xt && gm <= theta_bar * (sn * sn).min(linalg::norm(model.g))
}

/// Gradient descent on the cubic model from `y₀ = x_t − g` with step
/// `1 / (‖B‖_F + M‖y − x_t‖)`.
pub fn solve_cubic_gd<T: Scalar>(
    model: &CubicModel<'_, T>,
    x_t: &[T],
    theta_bar: T,
    max_inner: usize,
) -> CubicGdResult<T> {
    let b_fro = model.b.frobenius_norm();
    let g_norm = linalg::norm(model.g);
    let mut s = linalg::scale(-T::one(), model.g);
    let mut value = model.value(&s);
    let mut grad = model.gradient(&s);
    let mut monotone = true;
    let mut iters = 0;
    let slack = T::of(64.0) * T::epsilon();
    let result = |s: &[T], value: T, grad: &[T], iters, satisfied, monotone| CubicGdResult {
        y: linalg::add(x_t, s),
        model_value: value,
        model_grad_norm: linalg::norm(grad),
        iters,
        satisfied,
        monotone,
    };
    loop {
        if !value.is_finite() || !linalg::all_finite(&grad) {
            return result(&s, value, &grad, iters, false, monotone);
        }
        let sn = linalg::norm(&s);
        if value <= model.f_xt && linalg::norm(&grad) <= theta_bar * (sn * sn).min(g_norm) {
            return result(&s, value, &grad, iters, true, monotone);
        }
        if iters == max_inner {
            return result(&s, value, &grad, iters, false, monotone);
        }
        let denom = b_fro + model.m_coeff * sn;
        if !(denom > T::zero()) {
            return result(&s, value, &grad, iters, false, monotone);
        }
        linalg::axpy(-T::one() / denom, &grad, &mut s);
        iters += 1;
        let next = model.value(&s);
        if next > value + slack * value.abs().max(T::one()) {
            monotone = false;
        }
        value = next;
        grad = model.gradient(&s);
    }
}
