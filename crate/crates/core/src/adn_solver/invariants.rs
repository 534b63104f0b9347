//! Checks that every accepted step of a trace honours the acceptance tests,
//! the scale bounds and the summed gradient ledger.

use super::sigma_hat_terms;
use crate::linalg;
use crate::objectives::{EvalError, Objective};
use crate::scalar::Scalar;
use crate::trace::IterateTrace;

/// A failed inequality `lhs ≤ rhs` at outer iteration `k`.
#[derive(Debug, Clone, PartialEq)]
pub struct Violation {
    pub k: usize,
    pub what: &'static str,
    pub lhs: f64,
    pub rhs: f64,
}

impl std::fmt::Display for Violation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "k={}: {} violated ({:e} > {:e})", self.k, self.what, self.lhs, self.rhs)
    }
}

/// Absolute tolerance `1e-12·max(1, |f|)` used for every comparison.
pub fn slack(f: f64) -> f64 {
    1e-12 * f.abs().max(1.0)
}

fn check(out: &mut Vec<Violation>, k: usize, what: &'static str, lhs: f64, rhs: f64, tol: f64) {
    if !(lhs <= rhs + tol) {
        out.push(Violation { k, what, lhs, rhs });
    }
}

/// Both acceptance inequalities from the recorded values alone.
pub fn check_acceptance_rows<T: Scalar>(trace: &IterateTrace<T>) -> Vec<Violation> {
    let mut out = Vec::new();
    for w in trace.rows.windows(2) {
        let (cur, next) = (&w[0], &w[1]);
        let (Some(lambda), Some(s)) = (cur.lambda, cur.snorm) else { continue };
        let (lambda, s) = (lambda.to_f64_lossy(), s.to_f64_lossy());
        let f = cur.f.to_f64_lossy();
        let tol = slack(f);
        check(&mut out, cur.k, "sufficient decrease", next.f.to_f64_lossy(), f - 0.5 * lambda * s * s, tol);
        check(&mut out, cur.k, "gradient control", next.gnorm.to_f64_lossy(), 2.0 * lambda * s, tol);
    }
    out
}

/// Both acceptance inequalities with `f`, `∇f` and `‖s‖` re-evaluated from the
/// stored iterates; `λ` comes from the trace.
pub fn check_acceptance_recomputed<T: Scalar, P: Objective<T> + ?Sized>(
    problem: &P,
    trace: &IterateTrace<T>,
    iterates: &[Vec<T>],
) -> Result<Vec<Violation>, EvalError> {
    let mut out = Vec::new();
    for (row, pair) in trace.rows.iter().zip(iterates.windows(2)) {
        let Some(lambda) = row.lambda else { continue };
        let lambda = lambda.to_f64_lossy();
        let f0 = problem.value(&pair[0])?.to_f64_lossy();
        let f1 = problem.value(&pair[1])?.to_f64_lossy();
        let g1 = linalg::norm(&problem.gradient(&pair[1])?).to_f64_lossy();
        let s = linalg::norm(&linalg::sub(&pair[1], &pair[0])).to_f64_lossy();
        let tol = slack(f0);
        check(&mut out, row.k, "sufficient decrease", f1, f0 - 0.5 * lambda * s * s, tol);
        check(&mut out, row.k, "gradient control", g1, 2.0 * lambda * s, tol);
    }
    Ok(out)
}

/// `σ₁ ≤ σ_k` on every row.
pub fn check_sigma_lower<T: Scalar>(trace: &IterateTrace<T>, sigma1: T) -> Vec<Violation> {
    let s1 = sigma1.to_f64_lossy();
    let mut out = Vec::new();
    for r in &trace.rows {
        check(&mut out, r.k, "sigma lower bound", s1, r.sigma_k.to_f64_lossy(), 0.0);
    }
    out
}

/// `2·max{4κ_B², σ̂₁(M), σ̂₂(M)} + σ₁`, with `M` a bound on the gradient norms
/// and `h_const` the curvature constant.
pub fn sigma_upper_bound<T: Scalar>(h_const: T, grad_bound: T, kappa_b: T, zeta: T, alpha: T, sigma1: T) -> T {
    let (a, b, c) = sigma_hat_terms(h_const, grad_bound, kappa_b, zeta, alpha);
    T::of(2.0) * a.max(b).max(c) + sigma1
}

/// `σ_k ≤ bound` on every row.
pub fn check_sigma_upper<T: Scalar>(trace: &IterateTrace<T>, bound: T) -> Vec<Violation> {
    let b = bound.to_f64_lossy();
    let mut out = Vec::new();
    for r in &trace.rows {
        check(&mut out, r.k, "sigma upper bound", r.sigma_k.to_f64_lossy(), b, 0.0);
    }
    out
}

/// Two sides of `Σ_k ‖∇f(x_{k+1})‖²/(4λ_k) ≤ f(x₁) − f(x_T)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GradientLedger {
    pub weighted_sum: f64,
    pub total_decrease: f64,
}

impl GradientLedger {
    pub fn holds(&self) -> bool {
        self.weighted_sum <= self.total_decrease + slack(self.total_decrease)
    }
}

pub fn gradient_ledger<T: Scalar>(trace: &IterateTrace<T>) -> GradientLedger {
    let weighted_sum = trace
        .rows
        .windows(2)
        .filter_map(|w| {
            let lambda = w[0].lambda?.to_f64_lossy();
            let g = w[1].gnorm.to_f64_lossy();
            Some(g * g / (4.0 * lambda))
        })
        .sum();
    let total_decrease = match (trace.rows.first(), trace.rows.last()) {
        (Some(a), Some(b)) => a.f.to_f64_lossy() - b.f.to_f64_lossy(),
        _ => 0.0,
    };
    GradientLedger { weighted_sum, total_decrease }
}

/// Structural checks: consecutive `k`, every row but the last carries a step,
/// nondecreasing counters, nonincreasing `f`.
pub fn check_trace_schema<T: Scalar>(trace: &IterateTrace<T>) -> Vec<String> {
    let mut out = Vec::new();
    let rows = &trace.rows;
    if rows.is_empty() {
        out.push("trace has no rows".to_string());
        return out;
    }
    for (idx, r) in rows.iter().enumerate() {
        if r.k != idx + 1 {
            out.push(format!("row {idx} has k={}", r.k));
        }
        let has_step = r.lambda.is_some() && r.snorm.is_some() && r.i_k.is_some();
        let any_step = r.lambda.is_some() || r.snorm.is_some() || r.i_k.is_some();
        if has_step != any_step {
            out.push(format!("k={}: step columns partially filled", r.k));
        }
        if idx + 1 < rows.len() && !has_step {
            out.push(format!("k={}: non-final row without a step", r.k));
        }
        if !r.f.is_finite() || !r.gnorm.is_finite() {
            out.push(format!("k={}: non-finite value or gradient norm", r.k));
        }
    }
    for w in rows.windows(2) {
        if w[1].nk < w[0].nk || w[1].f_evals < w[0].f_evals || w[1].g_evals < w[0].g_evals {
            out.push(format!("k={}: counters decreased", w[1].k));
        }
        if w[1].f > w[0].f {
            out.push(format!("k={}: f increased", w[1].k));
        }
    }
    out
}
