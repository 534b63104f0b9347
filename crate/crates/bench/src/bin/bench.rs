use std::fs::File;
use std::io::{self, BufReader};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use hfnewton::adn_solver::TrialStart;
use hfnewton_bench::experiments::{
    run_experiment_1, run_experiment_2, write_exp2_table, Dataset, Exp1Options, Exp2Options, ExperimentError,
    LIBSVM_BINARY_URL,
};
use hfnewton_bench::problem::DataError;
use hfnewton_bench::profile::{betas_grid, performance_profile, read_times_tsv, subsample, taus_grid};
use hfnewton_bench::solvers::SolverName;
use hfnewton_bench::svg::{line_chart, YScale};

const FULL_SIZES: [(usize, usize); 3] = [(100, 1000), (200, 2000), (300, 3000)];

#[derive(Parser)]
#[command(name = "bench", about = "Benchmark grids, dataset tables and performance profiles")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum SolverSet {
    Fd,
    Exact,
    All,
}

#[derive(Clone, Copy, ValueEnum)]
enum TrialStartArg {
    /// Start at i = 0 every outer iteration.
    Zero,
    /// Start at the smallest i with 2^i σ_k ≥ 2σ₁.
    Sigma1Floor,
}

impl From<TrialStartArg> for TrialStart {
    fn from(a: TrialStartArg) -> Self {
        match a {
            TrialStartArg::Zero => TrialStart::Zero,
            TrialStartArg::Sigma1Floor => TrialStart::Sigma1Floor,
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// β sweep over random log-sum-exp instances, summarized by performance profiles.
    Exp1 {
        /// Comma-separated `NxM` sizes.
        #[arg(long, value_delimiter = ',', value_parser = parse_size, default_value = "50x500")]
        sizes: Vec<(usize, usize)>,
        #[arg(long, value_enum, default_value = "fd")]
        solvers: SolverSet,
        /// Number of β values taken evenly from the 50-point grid.
        #[arg(long, default_value_t = 10)]
        betas: usize,
        #[arg(long, default_value_t = 1e-6)]
        eps: f64,
        #[arg(long, default_value_t = 500)]
        max_outer: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Three panel sizes, all 50 β values and 4000 outer iterations.
        #[arg(long)]
        full_scale: bool,
        #[arg(long, default_value_t = 1)]
        jobs: usize,
        #[arg(long, value_enum, default_value = "zero")]
        trial_start: TrialStartArg,
    },
    /// All six solvers on a LIBSVM logistic-regression dataset.
    Exp2 {
        #[arg(long, value_parser = parse_dataset)]
        dataset: Dataset,
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, value_enum, default_value = "zero")]
        trial_start: TrialStartArg,
    },
    /// Performance profile of a `problem<TAB>solver…` timing table.
    Profile {
        #[arg(long)]
        times: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Print where the LIBSVM datasets come from.
    Datasets,
}

fn parse_size(s: &str) -> Result<(usize, usize), String> {
    let (n, m) = s.split_once('x').ok_or_else(|| format!("expected NxM, got `{s}`"))?;
    let n = n.parse::<usize>().map_err(|e| e.to_string())?;
    let m = m.parse::<usize>().map_err(|e| e.to_string())?;
    if n == 0 || m == 0 {
        return Err("sizes must be positive".into());
    }
    Ok((n, m))
}

fn parse_dataset(s: &str) -> Result<Dataset, String> {
    Dataset::parse(s).ok_or_else(|| format!("unknown dataset `{s}`; expected mushrooms or w8a"))
}

enum Failure {
    Data(String),
}

impl From<ExperimentError> for Failure {
    fn from(e: ExperimentError) -> Self {
        Failure::Data(e.to_string())
    }
}

impl From<DataError> for Failure {
    fn from(e: DataError) -> Self {
        Failure::Data(e.to_string())
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Data(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}

fn run(command: Command) -> Result<(), Failure> {
    match command {
        Command::Exp1 { sizes, solvers, betas, eps, max_outer, seed, out, full_scale, jobs, trial_start } => {
            let solvers = match solvers {
                SolverSet::Fd => SolverName::FD_SET.to_vec(),
                SolverSet::Exact => SolverName::EXACT_SET.to_vec(),
                SolverSet::All => SolverName::ALL.to_vec(),
            };
            let grid = betas_grid();
            let opts = if full_scale {
                Exp1Options {
                    sizes: FULL_SIZES.to_vec(),
                    solvers,
                    betas: grid,
                    eps: 1e-6,
                    max_outer: 4000,
                    seed,
                    jobs,
                    out_dir: out,
                    trial_start: trial_start.into(),
                }
            } else {
                Exp1Options {
                    sizes,
                    solvers,
                    betas: subsample(&grid, betas),
                    eps,
                    max_outer,
                    seed,
                    jobs,
                    out_dir: out,
                    trial_start: trial_start.into(),
                }
            };
            for panel in run_experiment_1(&opts)? {
                println!("n={} m={}: fraction of problems solved within tau", panel.n, panel.m);
                println!("{:<14}{:>8}{:>8}{:>8}", "solver", "tau=1", "tau=2", "tau=5");
                for (s, name) in panel.table.solvers.iter().enumerate() {
                    println!(
                        "{:<14}{:>8.2}{:>8.2}{:>8.2}",
                        name,
                        panel.table.fraction_within(s, 1.0),
                        panel.table.fraction_within(s, 2.0),
                        panel.table.fraction_within(s, 5.0)
                    );
                }
            }
        }
        Command::Exp2 { dataset, data, out, seed, trial_start } => {
            let mut opts = Exp2Options::new(dataset, data);
            opts.out_dir = out;
            opts.seed = seed;
            opts.params.trial_start = trial_start.into();
            let (rows, _) = run_experiment_2(&opts)?;
            write_exp2_table(&rows, io::stdout().lock()).map_err(|e| Failure::Data(e.to_string()))?;
        }
        Command::Profile { times, out } => {
            let file = File::open(&times).map_err(|e| Failure::Data(format!("{}: {e}", times.display())))?;
            let t =
                read_times_tsv(BufReader::new(file)).map_err(|e| Failure::Data(format!("{}: {e}", times.display())))?;
            let table = performance_profile(t.solvers, t.problems, t.times, &taus_grid())
                .map_err(|e| Failure::Data(format!("{}: {e}", times.display())))?;
            std::fs::create_dir_all(&out).map_err(|e| Failure::Data(format!("{}: {e}", out.display())))?;
            let tsv = out.join("profile.tsv");
            let mut buf = Vec::new();
            table.write_tsv(&mut buf).map_err(|e| Failure::Data(e.to_string()))?;
            std::fs::write(&tsv, buf).map_err(|e| Failure::Data(format!("{}: {e}", tsv.display())))?;
            let svg = line_chart("Performance profile", "tau", "P(tau)", &table.series(), YScale::Linear);
            let svg_path = out.join("profile.svg");
            std::fs::write(&svg_path, svg).map_err(|e| Failure::Data(format!("{}: {e}", svg_path.display())))?;
            println!("wrote {} and {}", tsv.display(), svg_path.display());
        }
        Command::Datasets => {
            for d in Dataset::ALL {
                println!("{}\t{LIBSVM_BINARY_URL}/{}", d.name(), d.canonical_file());
            }
        }
    }
    Ok(())
}
