//! Smooth convex objectives: the evaluation contract, benchmark families and
//! data ingestion.
//!
//! Every objective carries its own [`EvalCounters`], so oracle cost can be
//! reported next to iteration counts. The counted entry points ([`Objective::value`],
//! [`Objective::gradient`], [`Objective::hessian`], [`Objective::evaluate`]) also
//! validate dimensions and reject non-finite output; implementors only provide
//! the raw `compute_*` methods.

mod instance;
mod libsvm;
mod logistic;
mod logsumexp;

use std::sync::atomic::{AtomicU64, Ordering};

use serde::{Deserialize, Serialize};

use crate::fd_hessian;
use crate::linalg::{self, DenseMatrix};
use crate::scalar::Scalar;

pub use instance::{make_logistic, make_logsumexp, standard_normal_vector, Instance, InstanceSpec};
pub use libsvm::{parse_libsvm, read_libsvm_file, write_libsvm, LibsvmData, LibsvmError};
pub use logistic::LogisticRegression;
pub use logsumexp::LogSumExp;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum EvalError {
    #[error("point has length {found}, objective dimension is {expected}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("objective has no analytic Hessian")]
    HessianUnavailable,
    #[error("non-finite {what} at evaluation point")]
    NonFinite { what: &'static str },
    #[error("points coincide; the ratio is undefined")]
    CoincidentPoints,
    #[error("invalid objective: {0}")]
    Invalid(String),
}

/// Highest derivative order requested from [`Objective::evaluate`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Order {
    Value = 0,
    Gradient = 1,
    Hessian = 2,
}

impl TryFrom<u8> for Order {
    type Error = u8;

    fn try_from(v: u8) -> Result<Self, u8> {
        match v {
            0 => Ok(Order::Value),
            1 => Ok(Order::Gradient),
            2 => Ok(Order::Hessian),
            other => Err(other),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Evaluation<T> {
    pub value: T,
    pub gradient: Option<Vec<T>>,
    pub hessian: Option<DenseMatrix<T>>,
}

/// Snapshot of the oracle counters.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct EvalCounts {
    pub values: u64,
    pub gradients: u64,
    pub hessians: u64,
}

/// Thread-safe oracle call counters.
#[derive(Debug, Default)]
pub struct EvalCounters {
    values: AtomicU64,
    gradients: AtomicU64,
    hessians: AtomicU64,
}

impl EvalCounters {
    pub fn snapshot(&self) -> EvalCounts {
        EvalCounts {
            values: self.values.load(Ordering::Relaxed),
            gradients: self.gradients.load(Ordering::Relaxed),
            hessians: self.hessians.load(Ordering::Relaxed),
        }
    }

    pub fn reset(&self) {
        self.values.store(0, Ordering::Relaxed);
        self.gradients.store(0, Ordering::Relaxed);
        self.hessians.store(0, Ordering::Relaxed);
    }

    fn bump(&self, order: Order) {
        let c = match order {
            Order::Value => &self.values,
            Order::Gradient => &self.gradients,
            Order::Hessian => &self.hessians,
        };
        c.fetch_add(1, Ordering::Relaxed);
    }
}

impl Clone for EvalCounters {
    fn clone(&self) -> Self {
        let s = self.snapshot();
        Self {
            values: AtomicU64::new(s.values),
            gradients: AtomicU64::new(s.gradients),
            hessians: AtomicU64::new(s.hessians),
        }
    }
}

/// A smooth objective `f: ℝⁿ → ℝ`.
///
/// Evaluation must be a pure function of `x`; the counters are the only
/// mutable state, so finite-difference columns may be evaluated in parallel.
pub trait Objective<T: Scalar>: Sync {
    fn dim(&self) -> usize;

    fn counters(&self) -> &EvalCounters;

    fn compute_value(&self, x: &[T]) -> T;

    fn compute_gradient(&self, x: &[T]) -> Vec<T>;

    fn has_analytic_hessian(&self) -> bool {
        false
    }

    fn compute_hessian(&self, _x: &[T]) -> Option<DenseMatrix<T>> {
        None
    }

    fn value(&self, x: &[T]) -> Result<T, EvalError> {
        self.check_dim(x)?;
        self.counters().bump(Order::Value);
        let v = self.compute_value(x);
        if v.is_finite() {
            Ok(v)
        } else {
            Err(EvalError::NonFinite { what: "value" })
        }
    }

    fn gradient(&self, x: &[T]) -> Result<Vec<T>, EvalError> {
        self.check_dim(x)?;
        self.counters().bump(Order::Gradient);
        let g = self.compute_gradient(x);
        if linalg::all_finite(&g) {
            Ok(g)
        } else {
            Err(EvalError::NonFinite { what: "gradient" })
        }
    }

    fn hessian(&self, x: &[T]) -> Result<DenseMatrix<T>, EvalError> {
        self.check_dim(x)?;
        if !self.has_analytic_hessian() {
            return Err(EvalError::HessianUnavailable);
        }
        self.counters().bump(Order::Hessian);
        let h = self.compute_hessian(x).ok_or(EvalError::HessianUnavailable)?;
        if h.all_finite() {
            Ok(h)
        } else {
            Err(EvalError::NonFinite { what: "Hessian" })
        }
    }

    /// Value plus every derivative up to `order`.
    fn evaluate(&self, x: &[T], order: Order) -> Result<Evaluation<T>, EvalError> {
        self.check_dim(x)?;
        if order == Order::Hessian && !self.has_analytic_hessian() {
            return Err(EvalError::HessianUnavailable);
        }
        let value = self.value(x)?;
        let gradient = if order >= Order::Gradient { Some(self.gradient(x)?) } else { None };
        let hessian = if order == Order::Hessian { Some(self.hessian(x)?) } else { None };
        Ok(Evaluation { value, gradient, hessian })
    }

    fn check_dim(&self, x: &[T]) -> Result<(), EvalError> {
        if x.len() != self.dim() {
            return Err(EvalError::DimensionMismatch { expected: self.dim(), found: x.len() });
        }
        Ok(())
    }
}

impl<T: Scalar, P: Objective<T> + ?Sized> Objective<T> for &P {
    fn dim(&self) -> usize {
        (**self).dim()
    }
    fn counters(&self) -> &EvalCounters {
        (**self).counters()
    }
    fn compute_value(&self, x: &[T]) -> T {
        (**self).compute_value(x)
    }
    fn compute_gradient(&self, x: &[T]) -> Vec<T> {
        (**self).compute_gradient(x)
    }
    fn has_analytic_hessian(&self) -> bool {
        (**self).has_analytic_hessian()
    }
    fn compute_hessian(&self, x: &[T]) -> Option<DenseMatrix<T>> {
        (**self).compute_hessian(x)
    }
}

/// `f(x) = ½ xᵀQx + cᵀx`
#[derive(Debug, Clone)]
pub struct Quadratic<T> {
    q: DenseMatrix<T>,
    c: Vec<T>,
    counters: EvalCounters,
}

impl<T: Scalar> Quadratic<T> {
    pub fn new(q: DenseMatrix<T>, c: Vec<T>) -> Result<Self, EvalError> {
        if !q.is_square() || q.nrows() != c.len() {
            return Err(EvalError::Invalid(format!("Q is {}x{} but c has length {}", q.nrows(), q.ncols(), c.len())));
        }
        Ok(Self { q, c, counters: EvalCounters::default() })
    }

    pub fn diagonal(diag: &[T]) -> Self {
        Self { q: DenseMatrix::diagonal(diag), c: vec![T::zero(); diag.len()], counters: EvalCounters::default() }
    }

    pub fn matrix(&self) -> &DenseMatrix<T> {
        &self.q
    }
}

impl<T: Scalar> Objective<T> for Quadratic<T> {
    fn dim(&self) -> usize {
        self.c.len()
    }
    fn counters(&self) -> &EvalCounters {
        &self.counters
    }
    fn compute_value(&self, x: &[T]) -> T {
        T::of(0.5) * linalg::dot(x, &self.q.matvec(x)) + linalg::dot(&self.c, x)
    }
    fn compute_gradient(&self, x: &[T]) -> Vec<T> {
        linalg::add(&self.q.matvec(x), &self.c)
    }
    fn has_analytic_hessian(&self) -> bool {
        true
    }
    fn compute_hessian(&self, _x: &[T]) -> Option<DenseMatrix<T>> {
        Some(self.q.clone())
    }
}

type ValueFn<T> = Box<dyn Fn(&[T]) -> T + Send + Sync>;
type GradientFn<T> = Box<dyn Fn(&[T]) -> Vec<T> + Send + Sync>;
type HessianFn<T> = Box<dyn Fn(&[T]) -> DenseMatrix<T> + Send + Sync>;

/// Objective assembled from closures; handy for one-off test functions.
pub struct ClosureObjective<T> {
    dim: usize,
    value: ValueFn<T>,
    gradient: GradientFn<T>,
    hessian: Option<HessianFn<T>>,
    counters: EvalCounters,
}

impl<T: Scalar> ClosureObjective<T> {
    pub fn new(
        dim: usize,
        value: impl Fn(&[T]) -> T + Send + Sync + 'static,
        gradient: impl Fn(&[T]) -> Vec<T> + Send + Sync + 'static,
    ) -> Self {
        Self {
            dim,
            value: Box::new(value),
            gradient: Box::new(gradient),
            hessian: None,
            counters: EvalCounters::default(),
        }
    }

    pub fn with_hessian(mut self, hessian: impl Fn(&[T]) -> DenseMatrix<T> + Send + Sync + 'static) -> Self {
        self.hessian = Some(Box::new(hessian));
        self
    }
}

impl<T: Scalar> Objective<T> for ClosureObjective<T> {
    fn dim(&self) -> usize {
        self.dim
    }
    fn counters(&self) -> &EvalCounters {
        &self.counters
    }
    fn compute_value(&self, x: &[T]) -> T {
        (self.value)(x)
    }
    fn compute_gradient(&self, x: &[T]) -> Vec<T> {
        (self.gradient)(x)
    }
    fn has_analytic_hessian(&self) -> bool {
        self.hessian.is_some()
    }
    fn compute_hessian(&self, x: &[T]) -> Option<DenseMatrix<T>> {
        self.hessian.as_ref().map(|h| h(x))
    }
}

/// Where the second-order term of an Assumption-A ratio comes from.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum HessianSource<T> {
    Analytic,
    /// Symmetrized forward differences with the given step.
    FiniteDifference {
        h: T,
    },
}

/// `‖∇f(y) − ∇f(x) − M(y − x)‖ / ‖y − x‖²` for a given curvature matrix `M`.
pub fn assumption_a_ratio<T: Scalar, P: Objective<T> + ?Sized>(
    problem: &P,
    x: &[T],
    y: &[T],
    hess_at_x: &DenseMatrix<T>,
) -> Result<T, EvalError> {
    let d = linalg::sub(y, x);
    let dn = linalg::norm(&d);
    if dn == T::zero() {
        return Err(EvalError::CoincidentPoints);
    }
    let gx = problem.gradient(x)?;
    let gy = problem.gradient(y)?;
    let hd = hess_at_x.matvec(&d);
    let r: Vec<T> = gy.iter().zip(&gx).zip(&hd).map(|((&a, &b), &c)| a - b - c).collect();
    Ok(linalg::norm(&r) / (dn * dn))
}

/// Empirical Lipschitz-type constant of the Hessian along the segment `x → y`.
pub fn estimate_assumption_a_constant<T: Scalar, P: Objective<T> + ?Sized>(
    problem: &P,
    x: &[T],
    y: &[T],
    source: HessianSource<T>,
) -> Result<T, EvalError> {
    problem.check_dim(x)?;
    problem.check_dim(y)?;
    if x == y {
        return Err(EvalError::CoincidentPoints);
    }
    let hess = match source {
        HessianSource::Analytic => problem.hessian(x)?,
        HessianSource::FiniteDifference { h } => {
            let gx = problem.gradient(x)?;
            fd_hessian::fd_hessian(problem, x, &gx, h)?.b
        }
    };
    assumption_a_ratio(problem, x, y, &hess)
}

/// Right-hand side of the cubic upper bound
/// `f(x) + ⟨∇f(x), d⟩ + ½⟨∇²f(x)d, d⟩ + (H/3)‖d‖³` with `d = y − x`.
pub fn cubic_upper_bound<T: Scalar, P: Objective<T> + ?Sized>(
    problem: &P,
    x: &[T],
    y: &[T],
    hess_at_x: &DenseMatrix<T>,
    h_const: T,
) -> Result<T, EvalError> {
    let d = linalg::sub(y, x);
    let fx = problem.value(x)?;
    let gx = problem.gradient(x)?;
    let dn = linalg::norm(&d);
    Ok(fx
        + linalg::dot(&gx, &d)
        + T::of(0.5) * linalg::dot(&hess_at_x.matvec(&d), &d)
        + h_const / T::of(3.0) * dn * dn * dn)
}
