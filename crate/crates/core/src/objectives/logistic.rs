use super::{EvalCounters, EvalError, Objective};
use crate::linalg::{self, DenseMatrix, DesignMatrix};
use crate::scalar::Scalar;

/// ℓ2-regularized binary logistic regression,
/// `f(x) = (1/m) Σᵢ [log(1 + exp(aᵢᵀx)) − bᵢ aᵢᵀx] + (ℓ/2)‖x‖²` with `bᵢ ∈ {0, 1}`.
#[derive(Debug, Clone)]
pub struct LogisticRegression<T> {
    a: DesignMatrix<T>,
    b: Vec<T>,
    ell: T,
    counters: EvalCounters,
}

/// `log(1 + eᵗ)` without overflow.
fn softplus<T: Scalar>(t: T) -> T {
    t.max(T::zero()) + (-t.abs()).exp().ln_1p()
}

fn sigmoid<T: Scalar>(t: T) -> T {
    if t >= T::zero() {
        T::one() / (T::one() + (-t).exp())
    } else {
        let e = t.exp();
        e / (T::one() + e)
    }
}

impl<T: Scalar> LogisticRegression<T> {
    pub fn new(a: DesignMatrix<T>, b: Vec<T>, ell: T) -> Result<Self, EvalError> {
        if a.nrows() != b.len() || a.nrows() == 0 || a.ncols() == 0 {
            return Err(EvalError::Invalid(format!(
                "A is {}x{}, labels have length {}",
                a.nrows(),
                a.ncols(),
                b.len()
            )));
        }
        if b.iter().any(|&bi| bi != T::zero() && bi != T::one()) {
            return Err(EvalError::Invalid("labels must be 0 or 1".into()));
        }
        if !(ell >= T::zero()) {
            return Err(EvalError::Invalid(format!("ell must be nonnegative, got {ell}")));
        }
        Ok(Self { a, b, ell, counters: EvalCounters::default() })
    }

    pub fn design(&self) -> &DesignMatrix<T> {
        &self.a
    }

    pub fn labels(&self) -> &[T] {
        &self.b
    }

    pub fn ell(&self) -> T {
        self.ell
    }

    pub fn n_samples(&self) -> usize {
        self.b.len()
    }
}

impl<T: Scalar> Objective<T> for LogisticRegression<T> {
    fn dim(&self) -> usize {
        self.a.ncols()
    }

    fn counters(&self) -> &EvalCounters {
        &self.counters
    }

    fn compute_value(&self, x: &[T]) -> T {
        let t = self.a.matvec(x);
        let loss: T = t.iter().zip(&self.b).map(|(&ti, &bi)| softplus(ti) - bi * ti).sum();
        loss / T::of_usize(self.n_samples()) + T::of(0.5) * self.ell * linalg::dot(x, x)
    }

    fn compute_gradient(&self, x: &[T]) -> Vec<T> {
        let inv_m = T::one() / T::of_usize(self.n_samples());
        let residual: Vec<T> =
            self.a.matvec(x).into_iter().zip(&self.b).map(|(ti, &bi)| (sigmoid(ti) - bi) * inv_m).collect();
        let mut g = self.a.tr_matvec(&residual);
        linalg::axpy(self.ell, x, &mut g);
        g
    }

    fn has_analytic_hessian(&self) -> bool {
        true
    }

    fn compute_hessian(&self, x: &[T]) -> Option<DenseMatrix<T>> {
        let inv_m = T::one() / T::of_usize(self.n_samples());
        let w: Vec<T> = self
            .a
            .matvec(x)
            .into_iter()
            .map(|ti| {
                let s = sigmoid(ti);
                s * (T::one() - s) * inv_m
            })
            .collect();
        let mut h = self.a.weighted_gram(&w);
        for i in 0..h.nrows() {
            h[(i, i)] += self.ell;
        }
        Some(h)
    }
}
