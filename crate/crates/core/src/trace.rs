//! Per-iteration traces shared by every solver, with CSV and summary output.

use std::io::{self, Write};
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::objectives::EvalCounts;
use crate::scalar::Scalar;

pub const CSV_HEADER: &str = "k,i_k,sigma_k,lambda,f,gnorm,snorm,Nk,f_evals,g_evals,cg_iters,time_ms";

/// One outer iteration: the state at `x_k` and, unless this is the last row,
/// the step accepted from it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceRow<T> {
    pub k: usize,
    /// Accepted trial index.
    pub i_k: Option<u32>,
    pub sigma_k: T,
    pub lambda: Option<T>,
    pub f: T,
    pub gnorm: T,
    pub snorm: Option<T>,
    /// Cumulative inner trials, including this iteration's.
    pub nk: usize,
    pub f_evals: u64,
    pub g_evals: u64,
    pub cg_iters: usize,
    pub time_ms: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RunStatus {
    Converged,
    MaxOuter,
    Stalled,
}

impl std::fmt::Display for RunStatus {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Self::Converged => "converged",
            Self::MaxOuter => "max_outer",
            Self::Stalled => "stalled",
        })
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct IterateTrace<T> {
    pub rows: Vec<TraceRow<T>>,
}

fn opt<V: std::fmt::Display>(v: &Option<V>) -> String {
    v.as_ref().map(|v| v.to_string()).unwrap_or_default()
}

impl<T: Scalar> IterateTrace<T> {
    /// Accepted steps, one fewer than the rows of a finished run.
    pub fn outer_iterations(&self) -> usize {
        self.rows.iter().filter(|r| r.snorm.is_some()).count()
    }

    pub fn total_trials(&self) -> usize {
        self.rows.last().map_or(0, |r| r.nk)
    }

    pub fn last(&self) -> Option<&TraceRow<T>> {
        self.rows.last()
    }

    pub fn write_csv<W: Write>(&self, out: W) -> io::Result<()> {
        self.write_csv_impl(out, true)
    }

    /// CSV with the timing column blanked, for byte-level rerun comparisons.
    pub fn write_csv_untimed<W: Write>(&self, out: W) -> io::Result<()> {
        self.write_csv_impl(out, false)
    }

    fn write_csv_impl<W: Write>(&self, mut out: W, timed: bool) -> io::Result<()> {
        writeln!(out, "{CSV_HEADER}")?;
        for r in &self.rows {
            let time = if timed { format!("{:.3}", r.time_ms) } else { String::new() };
            writeln!(
                out,
                "{},{},{:e},{},{:e},{:e},{},{},{},{},{},{}",
                r.k,
                opt(&r.i_k),
                r.sigma_k,
                r.lambda.map(|v| format!("{v:e}")).unwrap_or_default(),
                r.f,
                r.gnorm,
                r.snorm.map(|v| format!("{v:e}")).unwrap_or_default(),
                r.nk,
                r.f_evals,
                r.g_evals,
                r.cg_iters,
                time
            )?;
        }
        Ok(())
    }
}

/// Everything a solver run returns.
#[derive(Debug, Clone)]
pub struct SolverRun<T> {
    pub x_star: Vec<T>,
    pub trace: IterateTrace<T>,
    pub status: RunStatus,
    /// `x_1, x_2, …` when iterate recording is on, otherwise empty.
    pub iterates: Vec<Vec<T>>,
    /// Oracle calls made during the run.
    pub evals: EvalCounts,
}

/// Final figures of a run, serialized as the summary JSON.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub status: RunStatus,
    pub outer_iterations: usize,
    pub total_trials: usize,
    pub final_value: f64,
    pub final_grad_norm: f64,
    pub f_evals: u64,
    pub g_evals: u64,
    pub h_evals: u64,
    pub cg_iters: usize,
    pub time_ms: f64,
}

impl<T: Scalar> SolverRun<T> {
    pub fn summary(&self) -> RunSummary {
        let last = self.trace.last();
        RunSummary {
            status: self.status,
            outer_iterations: self.trace.outer_iterations(),
            total_trials: self.trace.total_trials(),
            final_value: last.map_or(f64::NAN, |r| r.f.to_f64_lossy()),
            final_grad_norm: last.map_or(f64::NAN, |r| r.gnorm.to_f64_lossy()),
            f_evals: self.evals.values,
            g_evals: self.evals.gradients,
            h_evals: self.evals.hessians,
            cg_iters: last.map_or(0, |r| r.cg_iters),
            time_ms: last.map_or(0.0, |r| r.time_ms),
        }
    }

    pub fn final_grad_norm(&self) -> T {
        self.trace.last().map_or(T::nan(), |r| r.gnorm)
    }
}

/// Clock plus counter baseline for filling in trace rows.
#[derive(Debug)]
pub(crate) struct TraceClock {
    start: Instant,
    base: EvalCounts,
}

impl TraceClock {
    pub(crate) fn start(base: EvalCounts) -> Self {
        Self { start: Instant::now(), base }
    }

    pub(crate) fn elapsed_ms(&self) -> f64 {
        self.start.elapsed().as_secs_f64() * 1e3
    }

    pub(crate) fn since(&self, now: EvalCounts) -> EvalCounts {
        EvalCounts {
            values: now.values - self.base.values,
            gradients: now.gradients - self.base.gradients,
            hessians: now.hessians - self.base.hessians,
        }
    }
}
