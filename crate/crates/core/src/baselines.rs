//! Comparison methods sharing the trace schema of [`crate::adn_solver`]:
//! an adaptive regularized Newton method with exact Hessians (AdaN) and an
//! adaptive cubic Newton method with finite-difference Hessians (CNM-FD).
//!
//! Neither is a line-by-line port of its original description. AdaN halves
//! its regularization estimate after an accepted step and doubles it after a
//! rejected one, accepting on `f(x⁺) ≤ f(x) − (λ/2)‖s‖²`. CNM-FD accepts when
//! the cubic model overestimates `f` at the trial point and divides the
//! accepted scale by `γ`, never dropping below `σ₁`.

use serde::{Deserialize, Serialize};

use crate::adn_solver::{scaled_sigma, ConfigError, SolverError, MAX_TRIALS};
use crate::fd_hessian::{fd_hessian, fd_step_size};
use crate::linalg;
use crate::objectives::{EvalError, Objective};
use crate::scalar::Scalar;
use crate::subsolvers::{solve_cubic_gd, solve_regularized_direct, CubicModel, CUBIC_GD_MAX_INNER};
use crate::trace::{IterateTrace, RunStatus, SolverRun, TraceClock, TraceRow};

fn default_max_trials() -> u32 {
    MAX_TRIALS
}

fn default_cubic_cap() -> usize {
    CUBIC_GD_MAX_INNER
}

fn invalid<T: Scalar>(field: &'static str, reason: &'static str, v: T) -> ConfigError {
    ConfigError::Invalid { field, reason, value: v.to_f64_lossy() }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdaNConfig<T> {
    /// Initial regularization estimate.
    pub h0: T,
    pub eps: T,
    pub max_outer: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_max_trials")]
    pub max_trials: u32,
    #[serde(default)]
    pub record_iterates: bool,
}

impl<T: Scalar> AdaNConfig<T> {
    pub fn new(h0: T, eps: T, max_outer: usize) -> Self {
        Self { h0, eps, max_outer, seed: 0, max_trials: MAX_TRIALS, record_iterates: false }
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if !(self.h0 > T::zero() && self.h0.is_finite()) {
            return Err(invalid("h0", "must be positive", self.h0));
        }
        if !(self.eps > T::zero()) {
            return Err(invalid("eps", "must be positive", self.eps));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CnmFdConfig<T> {
    pub sigma1: T,
    /// Divisor applied to the accepted scale.
    pub gamma: T,
    /// Inner stopping tolerance of the cubic-model descent.
    pub theta_bar: T,
    pub eps: T,
    pub max_outer: usize,
    /// Finite-difference step rule parameters, shared with the main solver.
    pub kappa_b: T,
    pub alpha: T,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_max_trials")]
    pub max_trials: u32,
    #[serde(default = "default_cubic_cap")]
    pub max_inner: usize,
    #[serde(default)]
    pub record_iterates: bool,
}

impl<T: Scalar> CnmFdConfig<T> {
    /// `κ_B = 1e-4`, `α = 1`, 60 trials and 5000 inner steps.
    pub fn new(sigma1: T, gamma: T, theta_bar: T, eps: T, max_outer: usize) -> Self {
        Self {
            sigma1,
            gamma,
            theta_bar,
            eps,
            max_outer,
            kappa_b: T::of(1e-4),
            alpha: T::one(),
            seed: 0,
            max_trials: MAX_TRIALS,
            max_inner: CUBIC_GD_MAX_INNER,
            record_iterates: false,
        }
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if !(self.sigma1 > T::zero() && self.sigma1.is_finite()) {
            return Err(invalid("sigma1", "must be positive", self.sigma1));
        }
        if !(self.gamma > T::one()) {
            return Err(invalid("gamma", "must exceed 1", self.gamma));
        }
        if !(self.theta_bar > T::zero()) {
            return Err(invalid("theta_bar", "must be positive", self.theta_bar));
        }
        if !(self.kappa_b > T::zero()) {
            return Err(invalid("kappa_b", "must be positive", self.kappa_b));
        }
        if !(self.alpha > T::zero() && self.alpha <= T::one()) {
            return Err(invalid("alpha", "must lie in (0, 1]", self.alpha));
        }
        if !(self.eps > T::zero()) {
            return Err(invalid("eps", "must be positive", self.eps));
        }
        Ok(())
    }
}

/// Loop state common to both baselines.
struct Driver<'p, T, P: ?Sized> {
    problem: &'p P,
    clock: TraceClock,
    trace: IterateTrace<T>,
    iterates: Vec<Vec<T>>,
    record: bool,
    nk: usize,
}

impl<'p, T: Scalar, P: Objective<T> + ?Sized> Driver<'p, T, P> {
    fn new(problem: &'p P, record: bool) -> Self {
        Self {
            problem,
            clock: TraceClock::start(problem.counters().snapshot()),
            trace: IterateTrace::default(),
            iterates: Vec::new(),
            record,
            nk: 0,
        }
    }

    fn push(&mut self, sigma: T, f: T, gnorm: T, step: Option<(u32, T, T)>) {
        let used = self.clock.since(self.problem.counters().snapshot());
        self.trace.rows.push(TraceRow {
            k: self.trace.rows.len() + 1,
            i_k: step.map(|s| s.0),
            sigma_k: sigma,
            lambda: step.map(|s| s.1),
            f,
            gnorm,
            snorm: step.map(|s| s.2),
            nk: self.nk,
            f_evals: used.values,
            g_evals: used.gradients,
            cg_iters: 0,
            time_ms: self.clock.elapsed_ms(),
        });
    }

    fn finish(self, x_star: Vec<T>, status: RunStatus) -> SolverRun<T> {
        let evals = self.clock.since(self.problem.counters().snapshot());
        SolverRun { x_star, trace: self.trace, status, iterates: self.iterates, evals }
    }
}

fn value_if_finite<T: Scalar, P: Objective<T> + ?Sized>(problem: &P, x: &[T]) -> Result<Option<T>, EvalError> {
    match problem.value(x) {
        Ok(v) => Ok(Some(v)),
        Err(EvalError::NonFinite { .. }) => Ok(None),
        Err(e) => Err(e),
    }
}

/// Regularized Newton steps `(∇²f + √(H‖g‖)I)s = −g` with an adaptive `H`.
pub fn run_adan<T: Scalar, P: Objective<T> + ?Sized>(
    problem: &P,
    x1: &[T],
    config: &AdaNConfig<T>,
) -> Result<SolverRun<T>, SolverError> {
    config.validate()?;
    problem.check_dim(x1)?;
    if !problem.has_analytic_hessian() {
        return Err(EvalError::HessianUnavailable.into());
    }
    let mut d = Driver::new(problem, config.record_iterates);
    let mut x = x1.to_vec();
    let mut f = problem.value(&x)?;
    let mut g = problem.gradient(&x)?;
    let mut h_est = config.h0;
    let status = loop {
        if d.record {
            d.iterates.push(x.clone());
        }
        let g_norm = linalg::norm(&g);
        if g_norm < config.eps {
            d.push(h_est, f, g_norm, None);
            break RunStatus::Converged;
        }
        if d.trace.rows.len() >= config.max_outer {
            d.push(h_est, f, g_norm, None);
            break RunStatus::MaxOuter;
        }
        let hess = problem.hessian(&x)?;
        let h_start = h_est;
        let mut accepted = None;
        for j in 0..=config.max_trials {
            d.nk += 1;
            let lambda = (h_est * g_norm).sqrt();
            if let Ok(step) = solve_regularized_direct(&hess, lambda, &g) {
                let sn = linalg::norm(&step.s);
                let xp = linalg::add(&x, &step.s);
                if let Some(fp) = value_if_finite(problem, &xp)? {
                    if fp <= f - T::of(0.5) * lambda * sn * sn {
                        accepted = Some((j, lambda, sn, xp, fp));
                        break;
                    }
                }
            }
            h_est *= T::of(2.0);
        }
        let Some((j, lambda, sn, xp, fp)) = accepted else {
            d.push(h_start, f, g_norm, None);
            break RunStatus::Stalled;
        };
        let gp = match problem.gradient(&xp) {
            Ok(gp) => gp,
            Err(EvalError::NonFinite { .. }) => {
                d.push(h_start, f, g_norm, None);
                break RunStatus::Stalled;
            }
            Err(e) => return Err(e.into()),
        };
        d.push(h_start, f, g_norm, Some((j, lambda, sn)));
        h_est /= T::of(2.0);
        x = xp;
        f = fp;
        g = gp;
    };
    Ok(d.finish(x, status))
}

/// Cubic-regularized Newton steps on forward-difference Hessians, each model
/// minimized approximately by gradient descent.
///
/// The trace reports `λ = (2ⁱσ/2)‖s‖`, the regularization the cubic term
/// contributes to the model gradient at the accepted step.
pub fn run_cnm_fd<T: Scalar, P: Objective<T> + ?Sized>(
    problem: &P,
    x1: &[T],
    config: &CnmFdConfig<T>,
) -> Result<SolverRun<T>, SolverError> {
    config.validate()?;
    problem.check_dim(x1)?;
    let n = x1.len();
    let mut d = Driver::new(problem, config.record_iterates);
    let mut x = x1.to_vec();
    let mut f = problem.value(&x)?;
    let mut g = problem.gradient(&x)?;
    let mut sigma = config.sigma1;
    let status = loop {
        if d.record {
            d.iterates.push(x.clone());
        }
        let g_norm = linalg::norm(&g);
        if g_norm < config.eps {
            d.push(sigma, f, g_norm, None);
            break RunStatus::Converged;
        }
        if d.trace.rows.len() >= config.max_outer {
            d.push(sigma, f, g_norm, None);
            break RunStatus::MaxOuter;
        }
        let mut accepted = None;
        for i in 0..=config.max_trials {
            d.nk += 1;
            let m_coeff = scaled_sigma(sigma, i);
            let h = fd_step_size(config.kappa_b, g_norm, config.alpha, n, m_coeff)?;
            let b = match fd_hessian(problem, &x, &g, h) {
                Ok(fd) => fd.b,
                Err(EvalError::NonFinite { .. }) => continue,
                Err(e) => return Err(e.into()),
            };
            let model = CubicModel { f_xt: f, g: &g, b: &b, m_coeff };
            let gd = solve_cubic_gd(&model, &x, config.theta_bar, config.max_inner);
            if !gd.satisfied {
                continue;
            }
            if let Some(fp) = value_if_finite(problem, &gd.y)? {
                if fp <= gd.model_value {
                    accepted = Some((i, m_coeff, gd.y, fp));
                    break;
                }
            }
        }
        let Some((i, m_coeff, xp, fp)) = accepted else {
            d.push(sigma, f, g_norm, None);
            break RunStatus::Stalled;
        };
        let gp = match problem.gradient(&xp) {
            Ok(gp) => gp,
            Err(EvalError::NonFinite { .. }) => {
                d.push(sigma, f, g_norm, None);
                break RunStatus::Stalled;
            }
            Err(e) => return Err(e.into()),
        };
        let sn = linalg::norm(&linalg::sub(&xp, &x));
        d.push(sigma, f, g_norm, Some((i, T::of(0.5) * m_coeff * sn, sn)));
        sigma = (m_coeff / config.gamma).max(config.sigma1);
        x = xp;
        f = fp;
        g = gp;
    };
    Ok(d.finish(x, status))
}
