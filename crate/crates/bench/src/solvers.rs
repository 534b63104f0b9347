//! The six named solver configurations and the parameter sets they run with.

use std::fmt;
use std::str::FromStr;

use hfnewton::adn_solver::{self, estimate_h0, HessianMode, SolverConfig, SolverError, SubproblemMode, TrialStart};
use hfnewton::baselines::{run_adan, run_cnm_fd, AdaNConfig, CnmFdConfig};
use hfnewton::linalg;
use hfnewton::objectives::Objective;
use hfnewton::trace::SolverRun;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SolverName {
    AdnFd,
    AdnFdInex,
    AdnH,
    AdnHInex,
    Adan,
    CnmFd,
}

impl SolverName {
    pub const ALL: [SolverName; 6] =
        [Self::CnmFd, Self::AdnFd, Self::AdnFdInex, Self::Adan, Self::AdnH, Self::AdnHInex];
    /// Methods that only use gradients.
    pub const FD_SET: [SolverName; 3] = [Self::AdnFd, Self::CnmFd, Self::AdnFdInex];
    /// Methods that use exact Hessians.
    pub const EXACT_SET: [SolverName; 3] = [Self::Adan, Self::AdnH, Self::AdnHInex];

    pub fn as_str(self) -> &'static str {
        match self {
            Self::AdnFd => "adn-fd",
            Self::AdnFdInex => "adn-fd-inex",
            Self::AdnH => "adn-h",
            Self::AdnHInex => "adn-h-inex",
            Self::Adan => "adan",
            Self::CnmFd => "cnm-fd",
        }
    }

    pub fn uses_finite_differences(self) -> bool {
        matches!(self, Self::AdnFd | Self::AdnFdInex | Self::CnmFd)
    }

    /// Hessian and subproblem modes of the main-method variants; `None` for baselines.
    pub fn adn_modes(self) -> Option<(HessianMode, SubproblemMode)> {
        match self {
            Self::AdnFd => Some((HessianMode::FiniteDifference, SubproblemMode::Direct)),
            Self::AdnFdInex => Some((HessianMode::FiniteDifference, SubproblemMode::Cg)),
            Self::AdnH => Some((HessianMode::Analytic, SubproblemMode::Direct)),
            Self::AdnHInex => Some((HessianMode::Analytic, SubproblemMode::Cg)),
            Self::Adan | Self::CnmFd => None,
        }
    }
}

impl fmt::Display for SolverName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("unknown solver `{0}`; expected one of adn-fd, adn-fd-inex, adn-h, adn-h-inex, adan, cnm-fd")]
pub struct UnknownSolver(pub String);

impl FromStr for SolverName {
    type Err = UnknownSolver;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::ALL.into_iter().find(|n| n.as_str() == s).ok_or_else(|| UnknownSolver(s.to_string()))
    }
}

/// Scalars shared by every solver on one problem family.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MethodParams {
    pub alpha: f64,
    pub zeta: f64,
    pub theta: f64,
    pub eps: f64,
    pub max_outer: usize,
    /// `κ_B` for finite-difference Hessians.
    pub kappa_b: f64,
    /// CNM-FD starts from `σ₁ = H₀ / cnm_sigma_divisor`.
    pub cnm_sigma_divisor: f64,
    pub cnm_gamma: f64,
    pub cnm_theta_bar: f64,
    /// The presets start every trial loop at `i = 0`.
    #[serde(default)]
    pub trial_start: TrialStart,
    #[serde(default)]
    pub record_iterates: bool,
}

impl MethodParams {
    /// Log-sum-exp family: `α = 0.95`, `ζ = 2.01`, `θ = ε`.
    pub fn logsumexp(eps: f64, max_outer: usize) -> Self {
        Self {
            alpha: 0.95,
            zeta: 2.01,
            theta: eps,
            eps,
            max_outer,
            kappa_b: 1e-4,
            cnm_sigma_divisor: 2.0,
            cnm_gamma: 3.37,
            cnm_theta_bar: 2.23,
            trial_start: TrialStart::Zero,
            record_iterates: false,
        }
    }

    /// Logistic regression on mushrooms: `α = 1`, `ζ = 3`, `θ = ε = 1e-11`.
    pub fn mushrooms() -> Self {
        Self {
            alpha: 1.0,
            zeta: 3.0,
            theta: 1e-11,
            eps: 1e-11,
            max_outer: 1000,
            kappa_b: 1e-4,
            cnm_sigma_divisor: 1e4,
            cnm_gamma: 4.5,
            cnm_theta_bar: 2.7,
            trial_start: TrialStart::Zero,
            record_iterates: false,
        }
    }

    /// Logistic regression on w8a: `α = 1`, `ζ = 3`, `θ = 1e-8`, `ε = 1e-6`.
    pub fn w8a() -> Self {
        Self { theta: 1e-8, eps: 1e-6, cnm_theta_bar: 0.1, ..Self::mushrooms() }
    }

    /// Configuration of one of the four main-method variants.
    pub fn adn_config(
        &self,
        sigma1: f64,
        hessian_mode: HessianMode,
        subproblem_mode: SubproblemMode,
    ) -> SolverConfig<f64> {
        let mut c = SolverConfig::new(sigma1, hessian_mode, subproblem_mode);
        c.alpha = self.alpha;
        c.zeta = self.zeta;
        c.theta = self.theta;
        c.eps = self.eps;
        c.max_outer = self.max_outer;
        c.kappa_b = match hessian_mode {
            HessianMode::FiniteDifference => self.kappa_b,
            HessianMode::Analytic => 0.0,
        };
        c.trial_start = self.trial_start;
        c.record_iterates = self.record_iterates;
        c
    }
}

/// Runs `name` from `x1`, estimating the curvature constant between `x0` and
/// `x1` to initialize its scale.
pub fn run_solver<P: Objective<f64> + ?Sized>(
    name: SolverName,
    problem: &P,
    x0: &[f64],
    x1: &[f64],
    params: &MethodParams,
) -> Result<SolverRun<f64>, SolverError> {
    let h0_mode = if name.uses_finite_differences() { HessianMode::FiniteDifference } else { HessianMode::Analytic };
    match name.adn_modes() {
        Some((hm, sm)) => {
            let kappa = if hm == HessianMode::FiniteDifference { params.kappa_b } else { 0.0 };
            let h0 = estimate_h0(problem, x0, x1, hm, params.kappa_b, params.alpha)?;
            let g1 = linalg::norm(&problem.gradient(x1)?);
            let sigma1 = adn_solver::sigma1_init(h0, g1, kappa, params.zeta, params.alpha);
            adn_solver::run(problem, x1, &params.adn_config(sigma1, hm, sm))
        }
        None => {
            let h0 = estimate_h0(problem, x0, x1, h0_mode, params.kappa_b, params.alpha)?;
            if name == SolverName::Adan {
                let mut c = AdaNConfig::new(h0, params.eps, params.max_outer);
                c.record_iterates = params.record_iterates;
                run_adan(problem, x1, &c)
            } else {
                let mut c = CnmFdConfig::new(
                    h0 / params.cnm_sigma_divisor,
                    params.cnm_gamma,
                    params.cnm_theta_bar,
                    params.eps,
                    params.max_outer,
                );
                c.kappa_b = params.kappa_b;
                c.alpha = params.alpha;
                c.record_iterates = params.record_iterates;
                run_cnm_fd(problem, x1, &c)
            }
        }
    }
}

/// Configuration read from a JSON file whose shape depends on the solver.
#[derive(Debug, Clone, PartialEq)]
pub enum ExplicitConfig {
    Adn(SolverConfig<f64>),
    Adan(AdaNConfig<f64>),
    CnmFd(CnmFdConfig<f64>),
}

impl ExplicitConfig {
    /// Parses `text` as the configuration type of `name`. For the four main
    /// variants the Hessian and subproblem modes are taken from the name.
    pub fn parse(name: SolverName, text: &str) -> Result<Self, serde_json::Error> {
        Ok(match name.adn_modes() {
            Some((hm, sm)) => {
                let mut c: SolverConfig<f64> = serde_json::from_str(text)?;
                c.hessian_mode = hm;
                c.subproblem_mode = sm;
                Self::Adn(c)
            }
            None if name == SolverName::Adan => Self::Adan(serde_json::from_str(text)?),
            None => Self::CnmFd(serde_json::from_str(text)?),
        })
    }

    pub fn run<P: Objective<f64> + ?Sized>(&self, problem: &P, x1: &[f64]) -> Result<SolverRun<f64>, SolverError> {
        match self {
            Self::Adn(c) => adn_solver::run(problem, x1, c),
            Self::Adan(c) => run_adan(problem, x1, c),
            Self::CnmFd(c) => run_cnm_fd(problem, x1, c),
        }
    }
}
