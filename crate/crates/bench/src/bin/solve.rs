use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use hfnewton::adn_solver::default_start_points;
use hfnewton::trace::RunStatus;
use hfnewton_bench::problem::ProblemSpec;
use hfnewton_bench::solvers::{run_solver, ExplicitConfig, MethodParams, SolverName};

/// Runs one solver on one problem and reports the trace and summary.
#[derive(Parser)]
#[command(name = "solve")]
struct Cli {
    /// JSON problem description.
    #[arg(long)]
    problem: PathBuf,
    #[arg(long)]
    solver: SolverName,
    /// JSON solver configuration; without it the scale is estimated from two random points.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Seed of the random starting points.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 1e-6)]
    eps: f64,
    #[arg(long, default_value_t = 1000)]
    max_outer: usize,
    /// Write `trace.csv` and `summary.json` here instead of printing the summary.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    match run(&cli) {
        Ok(RunStatus::Stalled) => ExitCode::from(3),
        Ok(_) => ExitCode::SUCCESS,
        Err((code, msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(code)
        }
    }
}

fn run(cli: &Cli) -> Result<RunStatus, (u8, String)> {
    let spec = ProblemSpec::from_json_file(&cli.problem).map_err(|e| (2, e.to_string()))?;
    let problem = spec.build().map_err(|e| (2, e.to_string()))?;
    let (x0, x1) = default_start_points::<f64>(problem.dim(), cli.seed);
    let run = match &cli.config {
        Some(path) => {
            let text = std::fs::read_to_string(path).map_err(|e| (2, format!("{}: {e}", path.display())))?;
            let config =
                ExplicitConfig::parse(cli.solver, &text).map_err(|e| (1, format!("{}: {e}", path.display())))?;
            config.run(problem.as_ref(), &x1)
        }
        None => {
            let params = MethodParams { theta: cli.eps, ..MethodParams::logsumexp(cli.eps, cli.max_outer) };
            run_solver(cli.solver, problem.as_ref(), &x0, &x1, &params)
        }
    };
    let run = run.map_err(|e| match e {
        hfnewton::adn_solver::SolverError::Config(_) => (1, e.to_string()),
        _ => (2, e.to_string()),
    })?;
    let summary = run.summary();
    let json = serde_json::to_string_pretty(&summary).map_err(|e| (2, e.to_string()))?;
    match &cli.out {
        Some(dir) => {
            let write = |name: &str, bytes: Vec<u8>| {
                let path = dir.join(name);
                std::fs::write(&path, bytes).map_err(|e| (2, format!("{}: {e}", path.display())))
            };
            std::fs::create_dir_all(dir).map_err(|e| (2, format!("{}: {e}", dir.display())))?;
            let mut csv = Vec::new();
            run.trace.write_csv(&mut csv).map_err(|e| (2, e.to_string()))?;
            write("trace.csv", csv)?;
            write("summary.json", format!("{json}\n").into_bytes())?;
        }
        None => println!("{json}"),
    }
    Ok(summary.status)
}
