//! Adaptive regularized Newton iteration with finite-difference or exact
//! Hessians and exact or inexact (conjugate-gradient) subproblem solves.
//!
//! Each outer iteration tries the scales `2ⁱσ_k` for increasing `i`, builds
//! `λ` and the curvature matrix for that scale, solves `(B + λI)s = −g`, and
//! accepts the first step with
//! `f(x + s) ≤ f(x) − (λ/2)‖s‖²` and `‖∇f(x + s)‖ ≤ 2λ‖s‖`.
//! The next scale is `σ_{k+1} = 2^{i_k − 1}σ_k`.

pub mod analysis;
pub mod invariants;

use serde::{Deserialize, Serialize};

use crate::fd_hessian::{fd_hessian, fd_step_size};
use crate::linalg::{self, DenseMatrix};
use crate::objectives::{estimate_assumption_a_constant, standard_normal_vector, EvalError, HessianSource, Objective};
use crate::scalar::Scalar;
use crate::subsolvers::{default_cg_cap, solve_regularized_cg, solve_regularized_direct, StepExit};
use crate::trace::{IterateTrace, RunStatus, SolverRun, TraceClock, TraceRow};

/// Floor applied to the curvature-constant estimate.
pub const H0_FLOOR: f64 = 1e-12;
/// Floor applied to the initial scale.
pub const SIGMA1_FLOOR: f64 = 1e-8;
/// Default largest trial index per outer iteration.
pub const MAX_TRIALS: u32 = 60;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HessianMode {
    #[default]
    FiniteDifference,
    Analytic,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SubproblemMode {
    Direct,
    #[default]
    Cg,
}

/// Where the inner trial index starts each outer iteration.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TrialStart {
    /// Smallest `i ≥ 0` with `2ⁱσ_k ≥ 2σ₁`, so `σ_k` never drops below `σ₁`.
    #[default]
    Sigma1Floor,
    /// `i = 0`; `σ_k` may halve without bound.
    Zero,
}

fn default_max_trials() -> u32 {
    MAX_TRIALS
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig<T> {
    pub sigma1: T,
    pub alpha: T,
    /// Inexactness of the subproblem solve; also enters `λ`.
    pub theta: T,
    pub zeta: T,
    pub kappa_b: T,
    /// Stop once `‖∇f(x_k)‖ < eps`.
    pub eps: T,
    pub max_outer: usize,
    #[serde(default)]
    pub hessian_mode: HessianMode,
    #[serde(default)]
    pub subproblem_mode: SubproblemMode,
    /// Lower bound on `λ / (2(1 + θ))`; zero reproduces the plain rule.
    #[serde(default)]
    pub mu_floor: T,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_max_trials")]
    pub max_trials: u32,
    #[serde(default)]
    pub trial_start: TrialStart,
    /// Conjugate-gradient cap, `10·n` when unset.
    #[serde(default)]
    pub cg_max_inner: Option<usize>,
    /// Keep every iterate in [`SolverRun::iterates`].
    #[serde(default)]
    pub record_iterates: bool,
}

impl<T: Scalar> SolverConfig<T> {
    /// `α = 1`, `ζ = 3`, `θ = 1e-8`, `ε = 1e-6`, at most 1000 outer
    /// iterations, and `κ_B = 1e-4` in finite-difference mode (0 otherwise).
    pub fn new(sigma1: T, hessian_mode: HessianMode, subproblem_mode: SubproblemMode) -> Self {
        Self {
            sigma1,
            alpha: T::one(),
            theta: T::of(1e-8),
            zeta: T::of(3.0),
            kappa_b: match hessian_mode {
                HessianMode::FiniteDifference => T::of(1e-4),
                HessianMode::Analytic => T::zero(),
            },
            eps: T::of(1e-6),
            max_outer: 1000,
            hessian_mode,
            subproblem_mode,
            mu_floor: T::zero(),
            seed: 0,
            max_trials: MAX_TRIALS,
            trial_start: TrialStart::Sigma1Floor,
            cg_max_inner: None,
            record_iterates: false,
        }
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let bad = |field: &'static str, reason: &'static str, v: T| ConfigError::Invalid {
            field,
            reason,
            value: v.to_f64_lossy(),
        };
        if !(self.sigma1 > T::zero() && self.sigma1.is_finite()) {
            return Err(bad("sigma1", "must be positive", self.sigma1));
        }
        if !(self.alpha > T::zero() && self.alpha <= T::one()) {
            return Err(bad("alpha", "must lie in (0, 1]", self.alpha));
        }
        if !(self.theta >= T::zero() && self.theta < T::one()) {
            return Err(bad("theta", "must lie in [0, 1)", self.theta));
        }
        if !(self.zeta > T::of(2.0)) {
            return Err(bad("zeta", "must exceed 2", self.zeta));
        }
        if !(self.kappa_b >= T::zero()) {
            return Err(bad("kappa_b", "must be nonnegative", self.kappa_b));
        }
        if self.hessian_mode == HessianMode::FiniteDifference && self.kappa_b == T::zero() {
            return Err(bad("kappa_b", "must be positive with finite-difference Hessians", self.kappa_b));
        }
        if !(self.eps > T::zero()) {
            return Err(bad("eps", "must be positive", self.eps));
        }
        if !(self.mu_floor >= T::zero()) {
            return Err(bad("mu_floor", "must be nonnegative", self.mu_floor));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ConfigError {
    #[error("{field} {reason}, got {value}")]
    Invalid { field: &'static str, reason: &'static str, value: f64 },
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum SolverError {
    #[error("invalid configuration: {0}")]
    Config(#[from] ConfigError),
    #[error("objective evaluation failed: {0}")]
    Eval(#[from] EvalError),
}

/// `max{[2(1+θ)]^{α/2}·√(σ'·‖g‖^α), ζθ, 2(1+θ)μ}`
pub fn lambda_value<T: Scalar>(sigma_scaled: T, grad_norm: T, alpha: T, theta: T, zeta: T, mu_floor: T) -> T {
    let two_one_theta = T::of(2.0) * (T::one() + theta);
    let main = two_one_theta.powf(alpha / T::of(2.0)) * (sigma_scaled * grad_norm.powf(alpha)).sqrt();
    main.max(zeta * theta).max(two_one_theta * mu_floor)
}

/// Smallest `i ≥ 0` with `2ⁱσ_k ≥ 2σ₁`.
pub fn initial_trial_index<T: Scalar>(sigma_k: T, sigma1: T) -> u32 {
    let target = T::of(2.0) * sigma1;
    let mut scaled = sigma_k;
    let mut i = 0;
    while scaled < target && i < 2048 {
        scaled *= T::of(2.0);
        i += 1;
    }
    i
}

/// `2ⁱ·σ`
pub fn scaled_sigma<T: Scalar>(sigma: T, i: u32) -> T {
    sigma * T::of(2f64.powi(i as i32))
}

/// Current outer iterate with its value and gradient.
#[derive(Debug, Clone, Copy)]
pub struct Iterate<'a, T> {
    pub x: &'a [T],
    pub f: T,
    pub g: &'a [T],
}

/// Why a trial step was turned down.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Rejection {
    /// Factorization failure, negative curvature or CG cap.
    Subproblem,
    NonFinite,
    InsufficientDecrease,
    GradientControl,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrialOutcome<T> {
    pub accepted: bool,
    pub lambda: T,
    /// Finite-difference step, if one was used.
    pub h: Option<T>,
    pub step_norm: T,
    pub x_plus: Option<Vec<T>>,
    pub f_plus: Option<T>,
    /// `∇f(x⁺)`, computed only once the decrease test has passed.
    pub grad_plus: Option<Vec<T>>,
    pub cg_iters: usize,
    pub exit: Option<StepExit>,
    pub rejection: Option<Rejection>,
}

impl<T: Scalar> TrialOutcome<T> {
    fn rejected(lambda: T, h: Option<T>, why: Rejection) -> Self {
        Self {
            accepted: false,
            lambda,
            h,
            step_norm: T::zero(),
            x_plus: None,
            f_plus: None,
            grad_plus: None,
            cg_iters: 0,
            exit: None,
            rejection: Some(why),
        }
    }
}

/// Turns a non-finite evaluation into `None` and passes other errors on.
fn finite_or_none<V>(r: Result<V, EvalError>) -> Result<Option<V>, EvalError> {
    match r {
        Ok(v) => Ok(Some(v)),
        Err(EvalError::NonFinite { .. }) => Ok(None),
        Err(e) => Err(e),
    }
}

/// One trial at scale `2ⁱσ_k`.
///
/// In analytic mode `hessian` should carry `∇²f(x_k)`, which is the same for
/// every trial of an outer iteration; it is evaluated here when absent.
pub fn inner_trial<T: Scalar, P: Objective<T> + ?Sized>(
    problem: &P,
    at: &Iterate<'_, T>,
    sigma_k: T,
    i: u32,
    config: &SolverConfig<T>,
    hessian: Option<&DenseMatrix<T>>,
) -> Result<TrialOutcome<T>, EvalError> {
    let n = at.x.len();
    let sigma_scaled = scaled_sigma(sigma_k, i);
    let g_norm = linalg::norm(at.g);
    let lambda = lambda_value(sigma_scaled, g_norm, config.alpha, config.theta, config.zeta, config.mu_floor);

    let owned;
    let (b, h) = match config.hessian_mode {
        HessianMode::Analytic => match hessian {
            Some(b) => (b, None),
            None => {
                owned = problem.hessian(at.x)?;
                (&owned, None)
            }
        },
        HessianMode::FiniteDifference => {
            let h = fd_step_size(config.kappa_b, g_norm, config.alpha, n, sigma_scaled)?;
            match finite_or_none(fd_hessian(problem, at.x, at.g, h))? {
                Some(fd) => {
                    owned = fd.b;
                    (&owned, Some(h))
                }
                None => return Ok(TrialOutcome::rejected(lambda, Some(h), Rejection::NonFinite)),
            }
        }
    };

    let solved = match config.subproblem_mode {
        SubproblemMode::Direct => solve_regularized_direct(b, lambda, at.g),
        SubproblemMode::Cg => {
            let cap = config.cg_max_inner.unwrap_or_else(|| default_cg_cap(n));
            solve_regularized_cg(b, lambda, at.g, config.theta, cap)
        }
    };
    let step = match solved {
        Ok(step) if step.exit.usable() && linalg::all_finite(&step.s) => step,
        Ok(step) => {
            let mut out = TrialOutcome::rejected(lambda, h, Rejection::Subproblem);
            out.cg_iters = step.inner_iters;
            out.exit = Some(step.exit);
            return Ok(out);
        }
        Err(_) => return Ok(TrialOutcome::rejected(lambda, h, Rejection::Subproblem)),
    };

    let step_norm = linalg::norm(&step.s);
    let x_plus = linalg::add(at.x, &step.s);
    let mut out = TrialOutcome {
        accepted: false,
        lambda,
        h,
        step_norm,
        x_plus: None,
        f_plus: None,
        grad_plus: None,
        cg_iters: step.inner_iters,
        exit: Some(step.exit),
        rejection: None,
    };
    let Some(f_plus) = finite_or_none(problem.value(&x_plus))? else {
        out.rejection = Some(Rejection::NonFinite);
        return Ok(out);
    };
    out.f_plus = Some(f_plus);
    if !(f_plus <= at.f - T::of(0.5) * lambda * step_norm * step_norm) {
        out.rejection = Some(Rejection::InsufficientDecrease);
        out.x_plus = Some(x_plus);
        return Ok(out);
    }
    let Some(grad_plus) = finite_or_none(problem.gradient(&x_plus))? else {
        out.rejection = Some(Rejection::NonFinite);
        return Ok(out);
    };
    out.accepted = linalg::norm(&grad_plus) <= T::of(2.0) * lambda * step_norm;
    if !out.accepted {
        out.rejection = Some(Rejection::GradientControl);
    }
    out.x_plus = Some(x_plus);
    out.grad_plus = Some(grad_plus);
    Ok(out)
}

/// Runs the method from `x1` until `‖∇f‖ < ε`, the outer cap, or a stall.
pub fn run<T: Scalar, P: Objective<T> + ?Sized>(
    problem: &P,
    x1: &[T],
    config: &SolverConfig<T>,
) -> Result<SolverRun<T>, SolverError> {
    config.validate()?;
    problem.check_dim(x1)?;
    if config.hessian_mode == HessianMode::Analytic && !problem.has_analytic_hessian() {
        return Err(EvalError::HessianUnavailable.into());
    }
    let clock = TraceClock::start(problem.counters().snapshot());
    let mut x = x1.to_vec();
    let mut f = problem.value(&x)?;
    let mut g = problem.gradient(&x)?;
    let mut sigma = config.sigma1;
    let mut trace = IterateTrace::default();
    let mut iterates = Vec::new();
    let mut nk = 0usize;
    let mut cg_total = 0usize;

    let status = 'outer: loop {
        let k = trace.rows.len() + 1;
        if config.record_iterates {
            iterates.push(x.clone());
        }
        let g_norm = linalg::norm(&g);
        let mut row = TraceRow {
            k,
            i_k: None,
            sigma_k: sigma,
            lambda: None,
            f,
            gnorm: g_norm,
            snorm: None,
            nk,
            f_evals: 0,
            g_evals: 0,
            cg_iters: cg_total,
            time_ms: 0.0,
        };
        let stamp = |row: &mut TraceRow<T>, nk: usize, cg: usize| {
            let used = clock.since(problem.counters().snapshot());
            row.nk = nk;
            row.cg_iters = cg;
            row.f_evals = used.values;
            row.g_evals = used.gradients;
            row.time_ms = clock.elapsed_ms();
        };
        if g_norm < config.eps {
            stamp(&mut row, nk, cg_total);
            trace.rows.push(row);
            break RunStatus::Converged;
        }
        if k > config.max_outer {
            stamp(&mut row, nk, cg_total);
            trace.rows.push(row);
            break RunStatus::MaxOuter;
        }

        let hessian = match config.hessian_mode {
            HessianMode::Analytic => Some(problem.hessian(&x)?),
            HessianMode::FiniteDifference => None,
        };
        let at = Iterate { x: &x, f, g: &g };
        let mut i = match config.trial_start {
            TrialStart::Sigma1Floor => initial_trial_index(sigma, config.sigma1),
            TrialStart::Zero => 0,
        };
        let accepted = loop {
            if i > config.max_trials {
                break None;
            }
            nk += 1;
            let trial = inner_trial(problem, &at, sigma, i, config, hessian.as_ref())?;
            cg_total += trial.cg_iters;
            if trial.accepted {
                break Some(trial);
            }
            i += 1;
        };
        let Some(trial) = accepted else {
            stamp(&mut row, nk, cg_total);
            trace.rows.push(row);
            break 'outer RunStatus::Stalled;
        };
        row.i_k = Some(i);
        row.lambda = Some(trial.lambda);
        row.snorm = Some(trial.step_norm);
        stamp(&mut row, nk, cg_total);
        trace.rows.push(row);

        sigma = if i == 0 { sigma / T::of(2.0) } else { scaled_sigma(sigma, i - 1) };
        x = trial.x_plus.expect("accepted trial carries x⁺");
        f = trial.f_plus.expect("accepted trial carries f(x⁺)");
        g = trial.grad_plus.expect("accepted trial carries ∇f(x⁺)");
    };

    Ok(SolverRun { x_star: x, trace, status, iterates, evals: clock.since(problem.counters().snapshot()) })
}

/// `‖∇f(x₁) − ∇f(x₀) − ∇²f(x₀)(x₁ − x₀)‖ / ‖x₁ − x₀‖²`, floored at `1e-12`.
///
/// In finite-difference mode the Hessian at `x₀` is replaced by forward
/// differences with step `fd_step_size(κ_B, ‖∇f(x₀)‖, α, n, 1)`.
pub fn estimate_h0<T: Scalar, P: Objective<T> + ?Sized>(
    problem: &P,
    x0: &[T],
    x1: &[T],
    hessian_mode: HessianMode,
    kappa_b: T,
    alpha: T,
) -> Result<T, EvalError> {
    let source = match hessian_mode {
        HessianMode::Analytic => HessianSource::Analytic,
        HessianMode::FiniteDifference => {
            let g0 = problem.gradient(x0)?;
            HessianSource::FiniteDifference { h: fd_step_size(kappa_b, linalg::norm(&g0), alpha, x0.len(), T::one())? }
        }
    };
    Ok(estimate_assumption_a_constant(problem, x0, x1, source)?.max(T::of(H0_FLOOR)))
}

/// `(4κ_B², σ̂₁, σ̂₂)`, the three candidates for the initial scale.
pub fn sigma_hat_terms<T: Scalar>(h0: T, g: T, kappa_b: T, zeta: T, alpha: T) -> (T, T, T) {
    let one = T::one();
    let two = T::of(2.0);
    let four = T::of(4.0);
    let g_pow = g.powf(one - alpha);
    let k2 = kappa_b * kappa_b;
    let first = zeta / (two * (zeta - one)) * (kappa_b + (k2 + four * (zeta - one) / zeta * h0 * g_pow).sqrt());
    let second =
        (kappa_b + (k2 + four * h0 / T::of(3.0) * g_pow * (T::of(0.5) - one / zeta)).sqrt()) / (one - two / zeta);
    (four * k2, first * first, second * second)
}

/// Largest of [`sigma_hat_terms`], floored at `1e-8`.
pub fn sigma1_init<T: Scalar>(h0: T, g: T, kappa_b: T, zeta: T, alpha: T) -> T {
    let (a, b, c) = sigma_hat_terms(h0, g, kappa_b, zeta, alpha);
    a.max(b).max(c).max(T::of(SIGMA1_FLOOR))
}

/// Seeded standard normal starting pair `(x₀, x₁)`.
pub fn default_start_points<T: Scalar>(n: usize, seed: u64) -> (Vec<T>, Vec<T>) {
    let both: Vec<T> = standard_normal_vector(2 * n, seed);
    (both[..n].to_vec(), both[n..].to_vec())
}

/// `σ₁` from the curvature estimate between `x₀` and `x₁`, with `g = ‖∇f(x₁)‖`.
pub fn auto_sigma1<T: Scalar, P: Objective<T> + ?Sized>(
    problem: &P,
    x0: &[T],
    x1: &[T],
    hessian_mode: HessianMode,
    kappa_b: T,
    alpha: T,
    zeta: T,
) -> Result<T, EvalError> {
    let h0 = estimate_h0(problem, x0, x1, hessian_mode, kappa_b, alpha)?;
    let g1 = linalg::norm(&problem.gradient(x1)?);
    Ok(sigma1_init(h0, g1, kappa_b, zeta, alpha))
}
