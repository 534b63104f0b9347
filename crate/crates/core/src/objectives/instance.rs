use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::{EvalCounters, EvalError, LogSumExp, LogisticRegression, Objective};
use crate::linalg::{DenseMatrix, DesignMatrix};
use crate::scalar::Scalar;

/// Seeded vector with i.i.d. standard normal entries.
pub fn standard_normal_vector<T: Scalar>(n: usize, seed: u64) -> Vec<T> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n).map(|_| T::of(rng.sample::<f64, _>(StandardNormal))).collect()
}

fn normal_matrix<T: Scalar>(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> DenseMatrix<T> {
    DenseMatrix::from_fn(rows, cols, |_, _| T::of(rng.sample::<f64, _>(StandardNormal)))
}

/// Log-sum-exp instance with i.i.d. standard normal `A` (m×n) and `b`.
pub fn make_logsumexp<T: Scalar>(n: usize, m: usize, beta: f64, seed: u64) -> Result<LogSumExp<T>, EvalError> {
    if n == 0 || m == 0 {
        return Err(EvalError::Invalid(format!("n and m must be positive, got n={n}, m={m}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let a = normal_matrix(&mut rng, m, n);
    let b = (0..m).map(|_| T::of(rng.sample::<f64, _>(StandardNormal))).collect();
    LogSumExp::new(a, b, T::of(beta))
}

/// Synthetic logistic regression: standard normal features, labels drawn
/// from the logistic model around a planted normal weight vector of norm ≈ 2.
pub fn make_logistic<T: Scalar>(n: usize, m: usize, ell: f64, seed: u64) -> Result<LogisticRegression<T>, EvalError> {
    if n == 0 || m == 0 {
        return Err(EvalError::Invalid(format!("n and m must be positive, got n={n}, m={m}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let a: DenseMatrix<f64> = normal_matrix(&mut rng, m, n);
    let planted: Vec<f64> = (0..n).map(|_| 2.0 * rng.sample::<f64, _>(StandardNormal) / (n as f64).sqrt()).collect();
    let labels = a
        .matvec(&planted)
        .into_iter()
        .map(|t| {
            let p = 1.0 / (1.0 + (-t).exp());
            if rng.random::<f64>() < p {
                T::one()
            } else {
                T::zero()
            }
        })
        .collect();
    let a = DenseMatrix::from_fn(m, n, |i, j| T::of(a[(i, j)]));
    LogisticRegression::new(DesignMatrix::Dense(a), labels, T::of(ell))
}

/// Serializable recipe that regenerates a synthetic instance exactly.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum InstanceSpec {
    Logsumexp { n: usize, m: usize, beta: f64, seed: u64 },
    Logistic { n: usize, m: usize, ell: f64, seed: u64 },
}

impl InstanceSpec {
    pub fn build<T: Scalar>(&self) -> Result<Instance<T>, EvalError> {
        match *self {
            Self::Logsumexp { n, m, beta, seed } => make_logsumexp(n, m, beta, seed).map(Instance::LogSumExp),
            Self::Logistic { n, m, ell, seed } => make_logistic(n, m, ell, seed).map(Instance::Logistic),
        }
    }
}

/// Either benchmark family behind one type.
#[derive(Debug, Clone)]
pub enum Instance<T> {
    LogSumExp(LogSumExp<T>),
    Logistic(LogisticRegression<T>),
}

impl<T: Scalar> Instance<T> {
    fn inner(&self) -> &dyn Objective<T> {
        match self {
            Self::LogSumExp(f) => f,
            Self::Logistic(f) => f,
        }
    }
}

impl<T: Scalar> Objective<T> for Instance<T> {
    fn dim(&self) -> usize {
        self.inner().dim()
    }
    fn counters(&self) -> &EvalCounters {
        self.inner().counters()
    }
    fn compute_value(&self, x: &[T]) -> T {
        self.inner().compute_value(x)
    }
    fn compute_gradient(&self, x: &[T]) -> Vec<T> {
        self.inner().compute_gradient(x)
    }
    fn has_analytic_hessian(&self) -> bool {
        true
    }
    fn compute_hessian(&self, x: &[T]) -> Option<DenseMatrix<T>> {
        self.inner().compute_hessian(x)
    }
}
