use super::{EvalCounters, EvalError, Objective};
use crate::linalg::DenseMatrix;
use crate::scalar::Scalar;

/// Smoothed maximum `f(x) = β log Σᵢ exp((aᵢᵀx − bᵢ)/β)`.
///
/// Evaluated with the usual max shift, so small β and large ‖x‖ stay finite.
#[derive(Debug, Clone)]
pub struct LogSumExp<T> {
    a: DenseMatrix<T>,
    b: Vec<T>,
    beta: T,
    counters: EvalCounters,
}

impl<T: Scalar> LogSumExp<T> {
    pub fn new(a: DenseMatrix<T>, b: Vec<T>, beta: T) -> Result<Self, EvalError> {
        if a.nrows() != b.len() || a.nrows() == 0 || a.ncols() == 0 {
            return Err(EvalError::Invalid(format!("A is {}x{}, b has length {}", a.nrows(), a.ncols(), b.len())));
        }
        if !(beta > T::zero()) {
            return Err(EvalError::Invalid(format!("beta must be positive, got {beta}")));
        }
        Ok(Self { a, b, beta, counters: EvalCounters::default() })
    }

    pub fn matrix(&self) -> &DenseMatrix<T> {
        &self.a
    }

    pub fn offsets(&self) -> &[T] {
        &self.b
    }

    pub fn beta(&self) -> T {
        self.beta
    }

    pub fn n_terms(&self) -> usize {
        self.b.len()
    }

    /// `Ax − b`
    pub fn affine_terms(&self, x: &[T]) -> Vec<T> {
        self.a.matvec(x).into_iter().zip(&self.b).map(|(ax, &bi)| ax - bi).collect()
    }

    /// `maxᵢ(aᵢᵀx − bᵢ)` and `maxᵢ(aᵢᵀx − bᵢ) + β log m`, which bracket `f(x)`.
    pub fn smooth_max_bounds(&self, x: &[T]) -> (T, T) {
        let lo = self.affine_terms(x).into_iter().fold(T::neg_infinity(), T::max);
        (lo, lo + self.beta * T::of_usize(self.n_terms()).ln())
    }

    /// Softmax weights `p`, so that `∇f = Aᵀp`.
    pub fn softmax_weights(&self, x: &[T]) -> Vec<T> {
        let (z, zmax) = self.scaled_terms(x);
        let mut p: Vec<T> = z.iter().map(|&zi| (zi - zmax).exp()).collect();
        let total: T = p.iter().copied().sum();
        for pi in &mut p {
            *pi /= total;
        }
        p
    }

    fn scaled_terms(&self, x: &[T]) -> (Vec<T>, T) {
        let z: Vec<T> = self.affine_terms(x).into_iter().map(|t| t / self.beta).collect();
        let zmax = z.iter().copied().fold(T::neg_infinity(), T::max);
        (z, zmax)
    }
}

impl<T: Scalar> Objective<T> for LogSumExp<T> {
    fn dim(&self) -> usize {
        self.a.ncols()
    }

    fn counters(&self) -> &EvalCounters {
        &self.counters
    }

    fn compute_value(&self, x: &[T]) -> T {
        let (z, zmax) = self.scaled_terms(x);
        let total: T = z.iter().map(|&zi| (zi - zmax).exp()).sum();
        self.beta * (zmax + total.ln())
    }

    fn compute_gradient(&self, x: &[T]) -> Vec<T> {
        self.a.tr_matvec(&self.softmax_weights(x))
    }

    fn has_analytic_hessian(&self) -> bool {
        true
    }

    /// `(1/β)(Aᵀ diag(p) A − (Aᵀp)(Aᵀp)ᵀ)`
    fn compute_hessian(&self, x: &[T]) -> Option<DenseMatrix<T>> {
        let p = self.softmax_weights(x);
        let ap = self.a.tr_matvec(&p);
        let gram = self.a.weighted_gram(&p);
        let inv_beta = T::one() / self.beta;
        let n = ap.len();
        Some(DenseMatrix::from_fn(n, n, |i, j| inv_beta * (gram[(i, j)] - ap[i] * ap[j])))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::objectives::make_logsumexp;

    #[test]
    fn identity_at_origin_is_log_two() {
        let f = LogSumExp::new(DenseMatrix::identity(2), vec![0.0, 0.0], 1.0).unwrap();
        assert!((f.value(&[0.0, 0.0]).unwrap() - 2f64.ln()).abs() < 1e-15);
        assert_eq!(f.gradient(&[0.0, 0.0]).unwrap(), vec![0.5, 0.5]);
    }

    #[test]
    fn origin_with_zero_offsets_is_beta_log_m() {
        let inst = make_logsumexp::<f64>(4, 7, 0.3, 11).unwrap();
        let f = LogSumExp::new(inst.matrix().clone(), vec![0.0; 7], 0.3).unwrap();
        assert!((f.value(&[0.0; 4]).unwrap() - 0.3 * 7f64.ln()).abs() < 1e-14);
    }

    #[test]
    fn single_term_is_affine() {
        let f = LogSumExp::new(DenseMatrix::from_rows(&[vec![2.5]]).unwrap(), vec![0.75], 1.0).unwrap();
        for x in [-3.0f64, 0.0, 1.2, 40.0] {
            assert!((f.value(&[x]).unwrap() - (2.5 * x - 0.75)).abs() < 1e-12);
        }
    }

    #[test]
    fn stays_finite_for_large_points_and_small_beta() {
        let f = make_logsumexp::<f64>(5, 30, 0.01, 3).unwrap();
        let x = [1e3 / 5f64.sqrt(); 5];
        assert!(f.value(&x).unwrap().is_finite());
        assert!(f.gradient(&x).unwrap().iter().all(|g| g.is_finite()));
    }

    #[test]
    fn gradient_is_pulled_back_probability_vector() {
        let f = make_logsumexp::<f64>(3, 9, 0.2, 5).unwrap();
        let x = [0.3, -0.2, 1.1];
        let p = f.softmax_weights(&x);
        assert!(p.iter().all(|&pi| pi >= 0.0));
        assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-14);
        let g = f.gradient(&x).unwrap();
        let atp = f.matrix().tr_matvec(&p);
        for (a, b) in g.iter().zip(&atp) {
            assert!((a - b).abs() < 1e-15);
        }
    }

    #[test]
    fn rejects_nonpositive_beta() {
        assert!(LogSumExp::new(DenseMatrix::identity(2), vec![0.0, 0.0], 0.0).is_err());
    }
}
