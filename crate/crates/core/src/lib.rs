//! Adaptive regularized Newton methods with finite-difference Hessians.
//!
//! Everything numeric is generic over [`Scalar`] (`f32` or `f64`); the aliases
//! below fix the scalar to `f64`.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod adn_solver;
pub mod baselines;
pub mod fd_hessian;
pub mod linalg;
pub mod objectives;
pub mod scalar;
pub mod subsolvers;
pub mod trace;

pub use scalar::Scalar;

pub type Matrix = linalg::DenseMatrix<f64>;
pub type SparseMatrix = linalg::CsrMatrix<f64>;
pub type Config = adn_solver::SolverConfig<f64>;
pub type AdaNConfig = baselines::AdaNConfig<f64>;
pub type CnmFdConfig = baselines::CnmFdConfig<f64>;
pub type Run = trace::SolverRun<f64>;
pub type Trace = trace::IterateTrace<f64>;
pub type StepResult = subsolvers::RegularizedStepResult<f64>;
pub type FdHessian = fd_hessian::FdHessianResult<f64>;
pub type LogSumExp = objectives::LogSumExp<f64>;
pub type Logistic = objectives::LogisticRegression<f64>;
pub type Instance = objectives::Instance<f64>;
