//! The two benchmark drivers: a β sweep over random log-sum-exp instances
//! summarized by performance profiles, and the six-solver table on a LIBSVM
//! logistic-regression dataset.

use std::fs;
use std::io::{self, Write};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::{Path, PathBuf};
use std::time::Instant;

use hfnewton::adn_solver::{default_start_points, TrialStart};
use hfnewton::objectives::{make_logsumexp, Objective};
use hfnewton::trace::{RunStatus, RunSummary, SolverRun};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::problem::{load_libsvm_logistic, DataError};
use crate::profile::{
    performance_profile, taus_grid, write_times_tsv, ProfileError, ProfileTable, TimesFile, FAILURE_TIME,
};
use crate::solvers::{run_solver, MethodParams, SolverName};
use crate::svg::{line_chart, YScale};

#[derive(Debug, thiserror::Error)]
pub enum ExperimentError {
    #[error("cannot write {path}: {source}")]
    Io { path: PathBuf, source: io::Error },
    #[error(transparent)]
    Data(#[from] DataError),
    #[error(transparent)]
    Profile(#[from] ProfileError),
    #[error("cannot start worker pool: {0}")]
    Pool(String),
}

fn write_file(path: &Path, body: impl FnOnce(&mut Vec<u8>) -> io::Result<()>) -> Result<(), ExperimentError> {
    let mut buf = Vec::new();
    body(&mut buf)
        .and_then(|_| {
            if let Some(dir) = path.parent() {
                fs::create_dir_all(dir)?;
            }
            fs::write(path, &buf)
        })
        .map_err(|source| ExperimentError::Io { path: path.to_path_buf(), source })
}

/// Result of one (problem, solver) run; `run` is `None` when the solver
/// returned an error or panicked.
#[derive(Debug, Clone)]
pub struct CellOutcome {
    pub problem: String,
    pub solver: SolverName,
    pub time_s: f64,
    pub run: Option<SolverRun<f64>>,
    pub error: Option<String>,
}

impl CellOutcome {
    pub fn converged(&self) -> bool {
        self.run.as_ref().is_some_and(|r| r.status == RunStatus::Converged)
    }

    /// Wall time for a converged run, the failure sentinel otherwise.
    pub fn profile_time(&self) -> f64 {
        if self.converged() {
            self.time_s.max(1e-9)
        } else {
            FAILURE_TIME
        }
    }

    pub fn summary(&self) -> Option<RunSummary> {
        self.run.as_ref().map(SolverRun::summary)
    }
}

/// Runs one solver, converting errors and panics into a failed cell.
pub fn run_cell<P: Objective<f64> + ?Sized>(
    problem_id: &str,
    solver: SolverName,
    problem: &P,
    x0: &[f64],
    x1: &[f64],
    params: &MethodParams,
) -> CellOutcome {
    let start = Instant::now();
    let result = catch_unwind(AssertUnwindSafe(|| run_solver(solver, problem, x0, x1, params)));
    let time_s = start.elapsed().as_secs_f64();
    let (run, error) = match result {
        Ok(Ok(run)) => (Some(run), None),
        Ok(Err(e)) => (None, Some(e.to_string())),
        Err(panic) => {
            let msg = panic
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| panic.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "solver panicked".to_string());
            (None, Some(msg))
        }
    };
    CellOutcome { problem: problem_id.to_string(), solver, time_s, run, error }
}

fn persist_cell(dir: &Path, cell: &CellOutcome) -> Result<(), ExperimentError> {
    let stem = format!("{}_{}", cell.problem, cell.solver);
    if let Some(run) = &cell.run {
        write_file(&dir.join(format!("{stem}.csv")), |b| run.trace.write_csv(b))?;
    }
    #[derive(Serialize)]
    struct Record<'a> {
        problem: &'a str,
        solver: SolverName,
        time_s: f64,
        summary: Option<RunSummary>,
        error: Option<&'a str>,
    }
    let record = Record {
        problem: &cell.problem,
        solver: cell.solver,
        time_s: cell.time_s,
        summary: cell.summary(),
        error: cell.error.as_deref(),
    };
    write_file(&dir.join(format!("{stem}.json")), |b| {
        serde_json::to_writer_pretty(&mut *b, &record).map_err(io::Error::other)?;
        writeln!(b)
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Exp1Options {
    pub sizes: Vec<(usize, usize)>,
    pub solvers: Vec<SolverName>,
    pub betas: Vec<f64>,
    pub eps: f64,
    pub max_outer: usize,
    pub seed: u64,
    pub jobs: usize,
    pub out_dir: Option<PathBuf>,
    pub trial_start: TrialStart,
}

#[derive(Debug, Clone)]
pub struct Exp1Panel {
    pub n: usize,
    pub m: usize,
    pub table: ProfileTable,
    pub cells: Vec<CellOutcome>,
}

/// Seed of the instance for size index `s` and β index `b`.
pub fn instance_seed(seed: u64, s: usize, b: usize) -> u64 {
    seed.wrapping_mul(1_000_003).wrapping_add((s as u64) << 20).wrapping_add(b as u64)
}

/// Sweeps every β for every size; each (β, solver) cell gets a fresh instance so
/// oracle counts stay per run when cells execute concurrently.
pub fn run_experiment_1(opts: &Exp1Options) -> Result<Vec<Exp1Panel>, ExperimentError> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(opts.jobs.max(1))
        .build()
        .map_err(|e| ExperimentError::Pool(e.to_string()))?;
    let params = MethodParams { trial_start: opts.trial_start, ..MethodParams::logsumexp(opts.eps, opts.max_outer) };
    let mut panels = Vec::new();
    for (s_idx, &(n, m)) in opts.sizes.iter().enumerate() {
        let jobs: Vec<(usize, f64, SolverName)> = opts
            .betas
            .iter()
            .enumerate()
            .flat_map(|(b_idx, &beta)| opts.solvers.iter().map(move |&solver| (b_idx, beta, solver)))
            .collect();
        let cells: Vec<CellOutcome> = pool.install(|| {
            jobs.par_iter()
                .map(|&(b_idx, beta, solver)| {
                    let seed = instance_seed(opts.seed, s_idx, b_idx);
                    let id = format!("beta{b_idx:02}");
                    match make_logsumexp::<f64>(n, m, beta, seed) {
                        Ok(problem) => {
                            let (x0, x1) = default_start_points(n, seed ^ 0x5EED);
                            run_cell(&id, solver, &problem, &x0, &x1, &params)
                        }
                        Err(e) => {
                            CellOutcome { problem: id, solver, time_s: 0.0, run: None, error: Some(e.to_string()) }
                        }
                    }
                })
                .collect()
        });
        let n_s = opts.solvers.len();
        let problems: Vec<String> = (0..opts.betas.len()).map(|b| format!("beta{b:02}")).collect();
        let times: Vec<Vec<f64>> =
            cells.chunks(n_s).map(|row| row.iter().map(CellOutcome::profile_time).collect()).collect();
        let solvers: Vec<String> = opts.solvers.iter().map(|s| s.to_string()).collect();
        let table = performance_profile(solvers.clone(), problems.clone(), times.clone(), &taus_grid())?;
        if let Some(out) = &opts.out_dir {
            let dir = out.join(format!("exp1_{n}x{m}"));
            for cell in &cells {
                persist_cell(&dir.join("runs"), cell)?;
            }
            write_file(&dir.join("times.tsv"), |b| write_times_tsv(&TimesFile { solvers, problems, times }, b))?;
            write_file(&dir.join("profile.tsv"), |b| table.write_tsv(b))?;
            let svg = line_chart(
                &format!("Performance profile, n={n}, m={m}"),
                "tau",
                "P(tau)",
                &table.series(),
                YScale::Linear,
            );
            write_file(&dir.join("profile.svg"), |b| b.write_all(svg.as_bytes()))?;
        }
        panels.push(Exp1Panel { n, m, table, cells });
    }
    Ok(panels)
}

/// Named LIBSVM datasets with their parameter sets.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Dataset {
    Mushrooms,
    W8a,
}

impl Dataset {
    pub const ALL: [Dataset; 2] = [Self::Mushrooms, Self::W8a];

    pub fn name(self) -> &'static str {
        match self {
            Self::Mushrooms => "mushrooms",
            Self::W8a => "w8a",
        }
    }

    pub fn params(self) -> MethodParams {
        match self {
            Self::Mushrooms => MethodParams::mushrooms(),
            Self::W8a => MethodParams::w8a(),
        }
    }

    /// File name in the LIBSVM binary-classification collection.
    pub fn canonical_file(self) -> &'static str {
        self.name()
    }

    pub fn parse(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|d| d.name() == s)
    }
}

/// Base URL of the LIBSVM binary-classification collection.
pub const LIBSVM_BINARY_URL: &str = "https://www.csie.ntu.edu.tw/~cjlin/libsvmtools/datasets/binary";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Exp2Row {
    pub solver: SolverName,
    pub status: Option<RunStatus>,
    pub cpu_time_s: f64,
    pub global_iterations: usize,
    pub total_iterations: usize,
    pub final_grad_norm: f64,
}

#[derive(Debug, Clone)]
pub struct Exp2Options {
    pub dataset: Dataset,
    pub data_path: PathBuf,
    pub out_dir: Option<PathBuf>,
    /// ℓ2 weight of the logistic loss.
    pub ell: f64,
    pub seed: u64,
    pub solvers: Vec<SolverName>,
    pub params: MethodParams,
}

impl Exp2Options {
    /// `ℓ = 1e-10`, all six solvers, the dataset's own parameters.
    pub fn new(dataset: Dataset, data_path: PathBuf) -> Self {
        Self {
            dataset,
            data_path,
            out_dir: None,
            ell: 1e-10,
            seed: 0,
            solvers: SolverName::ALL.to_vec(),
            params: dataset.params(),
        }
    }
}

/// Runs every solver from the same seeded start and tabulates the results.
pub fn run_experiment_2(opts: &Exp2Options) -> Result<(Vec<Exp2Row>, Vec<CellOutcome>), ExperimentError> {
    let problem = load_libsvm_logistic(&opts.data_path, opts.ell)?;
    let n = problem.dim();
    let (x0, x1) = default_start_points(n, opts.seed);
    let cells: Vec<CellOutcome> =
        opts.solvers.iter().map(|&s| run_cell(opts.dataset.name(), s, &problem, &x0, &x1, &opts.params)).collect();
    let rows: Vec<Exp2Row> = cells
        .iter()
        .map(|c| {
            let s = c.summary();
            Exp2Row {
                solver: c.solver,
                status: s.as_ref().map(|s| s.status),
                cpu_time_s: c.time_s,
                global_iterations: s.as_ref().map_or(0, |s| s.outer_iterations),
                total_iterations: s.as_ref().map_or(0, |s| s.total_trials),
                final_grad_norm: s.as_ref().map_or(f64::NAN, |s| s.final_grad_norm),
            }
        })
        .collect();
    if let Some(out) = &opts.out_dir {
        let dir = out.join(format!("exp2_{}", opts.dataset.name()));
        for cell in &cells {
            persist_cell(&dir.join("runs"), cell)?;
        }
        write_file(&dir.join("table.tsv"), |b| write_exp2_table(&rows, b))?;
        let series: Vec<(String, Vec<(f64, f64)>)> = cells
            .iter()
            .filter_map(|c| {
                let run = c.run.as_ref()?;
                Some((c.solver.to_string(), run.trace.rows.iter().map(|r| (r.k as f64, r.gnorm)).collect()))
            })
            .collect();
        let svg = line_chart(
            &format!("Gradient norm, {}", opts.dataset.name()),
            "iteration",
            "||grad f||",
            &series,
            YScale::Log10,
        );
        write_file(&dir.join("gradnorm.svg"), |b| b.write_all(svg.as_bytes()))?;
    }
    Ok((rows, cells))
}

pub fn write_exp2_table<W: Write>(rows: &[Exp2Row], mut out: W) -> io::Result<()> {
    writeln!(out, "solver\tstatus\tcpu_time_s\tglobal_iterations\ttotal_iterations\tfinal_grad_norm")?;
    for r in rows {
        let status = r.status.map_or_else(|| "error".to_string(), |s| s.to_string());
        writeln!(
            out,
            "{}\t{}\t{:.3}\t{}\t{}\t{:.3e}",
            r.solver, status, r.cpu_time_s, r.global_iterations, r.total_iterations, r.final_grad_norm
        )?;
    }
    Ok(())
}
