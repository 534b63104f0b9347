//! End-to-end acceptance checks. Prints one `PASS`/`FAIL` line per criterion
//! and exits non-zero if any criterion fails.

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use hfnewton::adn_solver::analysis::{
    decay_bound, decay_sequence, global_rate_exponent, local_rate_constant, local_rate_ratio, max_sigma,
    suboptimality_slope,
};
use hfnewton::adn_solver::invariants::{check_acceptance_recomputed, check_sigma_lower, gradient_ledger, slack};
use hfnewton::adn_solver::{
    auto_sigma1, default_start_points, run, HessianMode, SolverConfig, SubproblemMode, TrialStart,
};
use hfnewton::fd_hessian::fd_hessian;
use hfnewton::linalg::DenseMatrix;
use hfnewton::objectives::{
    estimate_assumption_a_constant, make_logistic, make_logsumexp, standard_normal_vector, HessianSource, Objective,
    Quadratic,
};
use hfnewton::subsolvers::{default_cg_cap, solve_regularized_cg, solve_regularized_direct};
use hfnewton::trace::{IterateTrace, RunStatus, RunSummary};
use hfnewton_bench::experiments::{run_experiment_1, run_experiment_2, Dataset, Exp1Options, Exp2Options};
use hfnewton_bench::profile::{betas_grid, performance_profile, subsample, taus_grid, FAILURE_TIME};
use hfnewton_bench::solvers::{run_solver, MethodParams, SolverName};
use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<String, String>;

const VARIANTS: [(HessianMode, SubproblemMode); 4] = [
    (HessianMode::FiniteDifference, SubproblemMode::Direct),
    (HessianMode::FiniteDifference, SubproblemMode::Cg),
    (HessianMode::Analytic, SubproblemMode::Direct),
    (HessianMode::Analytic, SubproblemMode::Cg),
];

/// Traces of the main method collected along the way for the ledger check.
#[derive(Default)]
struct Traces(Vec<(String, IterateTrace<f64>)>);

fn to_na(a: &DenseMatrix<f64>) -> DMatrix<f64> {
    DMatrix::from_fn(a.nrows(), a.ncols(), |i, j| a[(i, j)])
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn battery() -> Vec<(String, Box<dyn Objective<f64>>)> {
    let mut out: Vec<(String, Box<dyn Objective<f64>>)> = vec![
        ("quadratic-diag".into(), Box::new(Quadratic::diagonal(&[1.0, 10.0, 100.0]))),
        ("quadratic-dense".into(), {
            let q = DenseMatrix::from_fn(5, 5, |i, j| if i == j { 3.0 + i as f64 } else { 0.4 });
            Box::new(Quadratic::new(q, vec![1.0, -1.0, 0.5, 0.0, 2.0]).unwrap())
        }),
    ];
    for (k, (n, beta)) in [(10, 0.5), (25, 0.1), (40, 0.05), (50, 0.2)].into_iter().enumerate() {
        out.push((format!("logsumexp-{n}"), Box::new(make_logsumexp::<f64>(n, 4 * n, beta, 140 + k as u64).unwrap())));
    }
    for (k, (n, m)) in [(5, 50), (10, 100), (15, 150), (20, 200)].into_iter().enumerate() {
        out.push((format!("logistic-{n}x{m}"), Box::new(make_logistic::<f64>(n, m, 1e-3, 160 + k as u64).unwrap())));
    }
    out
}

fn core_config(
    p: &dyn Objective<f64>,
    hm: HessianMode,
    sm: SubproblemMode,
    seed: u64,
) -> (SolverConfig<f64>, Vec<f64>) {
    let (x0, x1) = default_start_points::<f64>(p.dim(), seed);
    let kappa = if hm == HessianMode::FiniteDifference { 1e-4 } else { 0.0 };
    let sigma1 = auto_sigma1(p, &x0, &x1, hm, kappa, 1.0, 3.0).unwrap();
    let mut c = SolverConfig::new(sigma1, hm, sm);
    c.eps = 1e-8;
    c.theta = 1e-3;
    c.max_outer = 500;
    c.record_iterates = true;
    (c, x1)
}

fn criterion_1(traces: &mut Traces) -> Outcome {
    let mut accepted = 0;
    let mut runs = 0;
    for (name, p) in battery() {
        for (hm, sm) in VARIANTS {
            let (c, x1) = core_config(p.as_ref(), hm, sm, 7);
            let r = run(p.as_ref(), &x1, &c).map_err(|e| format!("{name} {hm:?}/{sm:?}: {e}"))?;
            let v = check_acceptance_recomputed(p.as_ref(), &r.trace, &r.iterates).map_err(|e| e.to_string())?;
            ensure(v.is_empty(), || format!("{name} {hm:?}/{sm:?}: {}", v[0]))?;
            let v = check_sigma_lower(&r.trace, c.sigma1);
            ensure(v.is_empty(), || format!("{name} {hm:?}/{sm:?}: {}", v[0]))?;
            accepted += r.trace.outer_iterations();
            runs += 1;
            traces.0.push((format!("{name} {hm:?}/{sm:?}"), r.trace));
        }
    }
    Ok(format!("{runs} runs, {accepted} accepted steps, no violations"))
}

/// Largest ratio estimate over `(x, x + r·d)` for random unit and signed coordinate directions.
fn empirical_constant(p: &dyn Objective<f64>, points: &[Vec<f64>], seed: u64) -> f64 {
    let mut best = 0.0f64;
    for (k, x) in points.iter().enumerate() {
        let n = x.len();
        let d = standard_normal_vector::<f64>(n, seed + k as u64);
        let dn = norm(&d);
        let mut dirs: Vec<Vec<f64>> = vec![d.iter().map(|v| v / dn).collect()];
        for i in 0..n {
            for sign in [1.0, -1.0] {
                let mut e = vec![0.0; n];
                e[i] = sign;
                dirs.push(e);
            }
        }
        for dir in &dirs {
            for r in [1e-3, 1e-1] {
                let y: Vec<f64> = x.iter().zip(dir).map(|(a, b)| a + r * b).collect();
                best = best.max(estimate_assumption_a_constant(p, x, &y, HessianSource::Analytic).unwrap());
            }
        }
    }
    best
}

fn criterion_2() -> Outcome {
    let (n, m) = (20, 100);
    let f = make_logsumexp::<f64>(n, m, 0.1, 2024).unwrap();
    let points: Vec<Vec<f64>> = (0..20).map(|k| standard_normal_vector(n, 3000 + k)).collect();
    let h_hat = 1.5 * empirical_constant(&f, &points, 4000);
    let mut worst = 0.0f64;
    for x in &points {
        let g = f.gradient(x).unwrap();
        let exact = to_na(&f.hessian(x).unwrap());
        for h in [1e-2, 1e-4, 1e-6] {
            let b = to_na(&fd_hessian(&f, x, &g, h).unwrap().b);
            let err = (b - &exact).symmetric_eigen().eigenvalues.amax();
            let bound = (n as f64).sqrt() * h_hat * h;
            worst = worst.max(err / bound);
            ensure(err <= bound, || format!("h={h:e}: error {err:e} exceeds {bound:e}"))?;
        }
    }
    let mut quad_err = 0.0f64;
    for seed in 0..10u64 {
        let k = 2 + seed as usize;
        let diag = standard_normal_vector::<f64>(k, seed);
        let q = DenseMatrix::from_fn(k, k, |i, j| if i == j { 1.0 + diag[i].abs() * 5.0 } else { 0.3 / k as f64 });
        let f = Quadratic::new(q.clone(), vec![0.5; k]).unwrap();
        let x = standard_normal_vector::<f64>(k, seed + 100);
        let g = f.gradient(&x).unwrap();
        for h in [1e-1, 1e-2, 1e-3, 1e-4] {
            let b = to_na(&fd_hessian(&f, &x, &g, h).unwrap().b);
            quad_err = quad_err.max((b - to_na(&q)).norm() / to_na(&q).norm());
        }
    }
    ensure(quad_err <= 1e-10, || format!("quadratic relative error {quad_err:e}"))?;
    Ok(format!("worst error/bound {worst:.3}, quadratic error {quad_err:.1e}"))
}

fn criterion_3() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(33);
    let mut worst = 0.0f64;
    let mut satisfied = 0;
    for case in 0..50u64 {
        let n = rng.random_range(1..=100usize);
        let lambda = 10f64.powf(rng.random_range(-2.0..1.0));
        let q = standard_normal_vector::<f64>(n * n, 500 + case);
        let b = DenseMatrix::from_fn(n, n, |i, j| (0..n).map(|k| q[k * n + i] * q[k * n + j]).sum::<f64>() / n as f64);
        let g = standard_normal_vector::<f64>(n, 900 + case);
        let direct = solve_regularized_direct(&b, lambda, &g).map_err(|e| e.to_string())?;
        let cg = solve_regularized_cg(&b, lambda, &g, 0.0, default_cg_cap(n)).map_err(|e| e.to_string())?;
        let gap: f64 = norm(&cg.s.iter().zip(&direct.s).map(|(a, b)| a - b).collect::<Vec<_>>());
        let rel = gap / norm(&direct.s).max(1.0);
        worst = worst.max(rel);
        ensure(rel <= 1e-8, || format!("case {case} (n={n}): relative gap {rel:e}"))?;

        let theta = rng.random_range(0.0..0.9);
        let out = solve_regularized_cg(&b, lambda, &g, theta, default_cg_cap(n)).map_err(|e| e.to_string())?;
        if out.satisfied {
            satisfied += 1;
            let r: Vec<f64> =
                (0..n).map(|i| (0..n).map(|j| b[(i, j)] * out.s[j]).sum::<f64>() + lambda * out.s[i] + g[i]).collect();
            let rhs = theta * norm(&g).min(norm(&out.s));
            ensure(norm(&r) <= rhs, || format!("case {case}: satisfied exit has residual {:e} > {rhs:e}", norm(&r)))?;
        }
    }
    Ok(format!("worst relative gap {worst:.1e}, {satisfied} satisfied inexact exits rechecked"))
}

fn mushrooms_path() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../data/mushrooms")
}

fn criterion_4(traces: &mut Traces) -> Outcome {
    let path = mushrooms_path();
    ensure(path.exists(), || format!("dataset missing at {}", path.display()))?;
    let mut opts = Exp2Options::new(Dataset::Mushrooms, path.clone());
    opts.solvers = vec![SolverName::AdnH, SolverName::AdnHInex, SolverName::AdnFdInex];
    let (rows, cells) = run_experiment_2(&opts).map_err(|e| e.to_string())?;
    let mut parts = Vec::new();
    let mut failures = Vec::new();
    for row in &rows {
        let nk_band = if row.solver == SolverName::AdnFdInex { (20, 60) } else { (21, 63) };
        let ok = row.status == Some(RunStatus::Converged)
            && row.final_grad_norm < 1e-11
            && (16..=48).contains(&row.global_iterations)
            && (nk_band.0..=nk_band.1).contains(&row.total_iterations);
        let part = format!(
            "{} k={} Nk={} |g|={:.2e} {:.1}s",
            row.solver, row.global_iterations, row.total_iterations, row.final_grad_norm, row.cpu_time_s
        );
        if !ok {
            failures.push(part.clone());
        }
        parts.push(part);
    }
    for cell in cells {
        if let Some(r) = cell.run {
            traces.0.push((format!("mushrooms {}", cell.solver), r.trace));
        }
    }

    // The unfloored trial start is what the presets use; report the floored rule alongside.
    let mut floor = Exp2Options::new(Dataset::Mushrooms, path);
    floor.solvers = vec![SolverName::AdnH];
    floor.params.trial_start = TrialStart::Sigma1Floor;
    if let Ok((rows, _)) = run_experiment_2(&floor) {
        let r = &rows[0];
        parts.push(format!(
            "(info: {} with floored trial indices ends {} at k={} with |g|={:.2e})",
            r.solver,
            r.status.map_or("in error".to_string(), |s| s.to_string()),
            r.global_iterations,
            r.final_grad_norm
        ));
    }
    if failures.is_empty() {
        Ok(parts.join("; "))
    } else {
        Err(format!("outside bands: {}", failures.join("; ")))
    }
}

fn criterion_5(traces: &mut Traces) -> Outcome {
    let (n, m, beta) = (50, 500, 0.05);
    let f = make_logsumexp::<f64>(n, m, beta, 55).unwrap();
    let (x0, x1) = default_start_points::<f64>(n, 56);
    let mut params = MethodParams { trial_start: TrialStart::Sigma1Floor, ..MethodParams::logsumexp(1e-6, 4000) };
    let r = run_solver(SolverName::AdnFdInex, &f, &x0, &x1, &params).map_err(|e| e.to_string())?;
    ensure(r.status == RunStatus::Converged, || format!("run ended {}", r.status))?;
    params.eps = 1e-12;
    params.theta = 1e-12;
    let mut f_star = r.trace.rows.last().unwrap().f;
    for solver in [SolverName::AdnH, SolverName::AdnFdInex] {
        let tight = run_solver(solver, &f, &x0, &x1, &params).map_err(|e| e.to_string())?;
        f_star = tight.trace.rows.iter().map(|row| row.f).fold(f_star, f64::min);
    }
    // The final iterate of the reference run may coincide with f*; drop exact zeros.
    let rows: Vec<_> = r.trace.rows.iter().filter(|row| row.f - f_star > 0.0).cloned().collect();
    let trimmed = IterateTrace { rows };
    let slope = suboptimality_slope(&trimmed, f_star).ok_or("too few points for a slope")?;
    let limit = global_rate_exponent(0.95) + 0.5;
    traces.0.push(("logsumexp 50x500 AdN-FD_inex".into(), r.trace));
    ensure(slope <= limit, || format!("slope {slope:.3} above {limit:.3}"))?;
    Ok(format!("slope {slope:.3} <= {limit:.3} over {} iterations", trimmed.rows.len()))
}

fn criterion_6(traces: &mut Traces) -> Outcome {
    let (n, m, ell) = (20, 200, 1e-2);
    let f = make_logistic::<f64>(n, m, ell, 66).unwrap();
    let (x0, x1) = default_start_points::<f64>(n, 67);
    let sigma1 = auto_sigma1(&f, &x0, &x1, HessianMode::Analytic, 0.0, 1.0, 3.0).unwrap();
    let mut c = SolverConfig::new(sigma1, HessianMode::Analytic, SubproblemMode::Direct);
    c.eps = 1e-10;
    c.theta = 1e-10;
    let r = run(&f, &x1, &c).map_err(|e| e.to_string())?;
    ensure(r.status == RunStatus::Converged, || format!("run ended {}", r.status))?;
    let hess = to_na(&f.hessian(&r.x_star).unwrap());
    let mu = hess.symmetric_eigen().eigenvalues.min();
    let sigma_max = max_sigma(&r.trace);
    let c_loc = local_rate_constant(sigma_max, mu);
    let gnorms: Vec<f64> = r.trace.rows.iter().map(|row| row.gnorm).collect();
    let ratio = local_rate_ratio(&gnorms, c_loc, c.alpha, 5).ok_or("too few iterations")?;
    traces.0.push(("logistic 20x200 AdN-H".into(), r.trace));
    ensure(ratio <= 1.0, || format!("worst ratio {ratio:.3} with C={c_loc:.3e}"))?;
    Ok(format!("worst ratio {ratio:.3e} over the last 5 steps, C={c_loc:.3e}, mu={mu:.3e}"))
}

fn criterion_7(traces: &Traces) -> Outcome {
    ensure(!traces.0.is_empty(), || "no traces collected".into())?;
    let mut tightest = 0.0f64;
    for (name, t) in &traces.0 {
        let l = gradient_ledger(t);
        ensure(l.holds(), || format!("{name}: sum {:e} > decrease {:e}", l.weighted_sum, l.total_decrease))?;
        if l.total_decrease > slack(l.total_decrease) {
            tightest = tightest.max(l.weighted_sum / l.total_decrease);
        }
    }
    Ok(format!("{} traces, largest sum/decrease {tightest:.3}", traces.0.len()))
}

fn criterion_8(traces: &mut Traces) -> Outcome {
    let names = || vec!["A".to_string(), "B".to_string()];
    let problems = || vec!["p1".to_string(), "p2".to_string()];
    let t = performance_profile(names(), problems(), vec![vec![1.0, 2.0], vec![2.0, 1.0]], &[1.0, 2.0])
        .map_err(|e| e.to_string())?;
    ensure(t.ratios == vec![vec![1.0, 2.0], vec![2.0, 1.0]], || format!("ratios {:?}", t.ratios))?;
    ensure(t.curves == vec![vec![0.5, 1.0], vec![0.5, 1.0]], || format!("curves {:?}", t.curves))?;
    let failed = performance_profile(names(), problems(), vec![vec![1.0, FAILURE_TIME], vec![1.0, 2.0]], &taus_grid())
        .map_err(|e| e.to_string())?;
    ensure(failed.curves[1].iter().all(|&v| v < 1.0), || "failed solver reaches 1".into())?;
    let single = performance_profile(vec!["A".into()], problems(), vec![vec![3.0], vec![0.5]], &taus_grid())
        .map_err(|e| e.to_string())?;
    ensure(single.curves[0].iter().all(|&v| v == 1.0), || "single solver curve below 1".into())?;

    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let mut cells_checked = 0;
    for (set, solvers) in [("fd", SolverName::FD_SET.to_vec()), ("exact", SolverName::EXACT_SET.to_vec())] {
        let opts = Exp1Options {
            sizes: vec![(20, 100)],
            solvers,
            betas: subsample(&betas_grid(), 5),
            eps: 1e-6,
            max_outer: 500,
            seed: 8,
            jobs: 4,
            out_dir: Some(dir.path().join(set)),
            trial_start: TrialStart::Zero,
        };
        let panels = run_experiment_1(&opts).map_err(|e| e.to_string())?;
        for panel in panels {
            let v = panel.table.check_invariants();
            ensure(v.is_empty(), || format!("{set}: {}", v[0]))?;
            let runs = dir.path().join(set).join("exp1_20x100").join("runs");
            for cell in panel.cells {
                let stem = format!("{}_{}", cell.problem, cell.solver);
                let json = std::fs::read_to_string(runs.join(format!("{stem}.json"))).map_err(|e| e.to_string())?;
                let record: serde_json::Value = serde_json::from_str(&json).map_err(|e| e.to_string())?;
                let Some(run) = cell.run else { continue };
                let csv = std::fs::read_to_string(runs.join(format!("{stem}.csv"))).map_err(|e| e.to_string())?;
                let last = csv.lines().last().ok_or("empty trace")?;
                let nk_col = hfnewton::trace::CSV_HEADER.split(',').position(|c| c == "Nk").unwrap();
                let nk: usize = last.split(',').nth(nk_col).and_then(|v| v.parse().ok()).ok_or("bad Nk column")?;
                let summary: RunSummary =
                    serde_json::from_value(record["summary"].clone()).map_err(|e| format!("{stem}: {e}"))?;
                ensure(summary.total_trials == nk, || {
                    format!("{stem}: summary Nk {} vs trace {nk}", summary.total_trials)
                })?;
                cells_checked += 1;
                if cell.solver.adn_modes().is_some() {
                    traces.0.push((format!("smoke {} {}", cell.problem, cell.solver), run.trace));
                }
            }
        }
    }
    Ok(format!("worked example exact, invariants hold, {cells_checked} persisted runs consistent"))
}

fn criterion_9() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    let len = 10_001;
    let mut worst = 0.0f64;
    for case in 0..100 {
        let a = rng.random_range(0.01..=1.0);
        let c = 10f64.powf(rng.random_range(-3.0..2.0));
        let e = 2.0 / (2.0 - a);
        // Keeps `C·α₀^{(2−a)/2} < 1`, so every term stays positive.
        let alpha0 = rng.random_range(0.01..0.99) * (1.0 / c).powf(e);
        let seq = decay_sequence(alpha0, c, a, len);
        for (t, &v) in seq.iter().enumerate() {
            ensure(v > 0.0, || format!("case {case}: term {t} not positive"))?;
            let bound = decay_bound(c, a, t);
            worst = worst.max(v / bound);
            ensure(v <= bound, || format!("case {case} (a={a:.3}, C={c:.3e}): t={t} {v:e} > {bound:e}"))?;
        }
    }
    Ok(format!("100 sequences of {len} terms, largest term/bound {worst:.3}"))
}

fn main() -> ExitCode {
    let mut traces = Traces::default();
    let mut lines: Vec<(u32, bool, String)> = Vec::new();
    let mut report = |id: u32, title: &str, f: &mut dyn FnMut() -> Outcome| {
        let start = Instant::now();
        let outcome = catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|_| Err("panicked".into()));
        let secs = start.elapsed().as_secs_f64();
        let (ok, detail) = match outcome {
            Ok(d) => (true, d),
            Err(d) => (false, d),
        };
        let tag = if ok { "PASS" } else { "FAIL" };
        lines.push((id, ok, format!("criterion {id} {tag}  {title} ({secs:.1}s): {detail}")));
    };
    report(1, "acceptance inequalities and scale floor", &mut || criterion_1(&mut traces));
    report(2, "finite-difference Hessian error bound", &mut criterion_2);
    report(3, "CG and direct subproblem solves agree", &mut criterion_3);
    report(4, "mushrooms iteration counts", &mut || criterion_4(&mut traces));
    report(5, "global rate slope on log-sum-exp", &mut || criterion_5(&mut traces));
    report(6, "local superlinear rate on logistic regression", &mut || criterion_6(&mut traces));
    report(8, "performance profile machinery", &mut || criterion_8(&mut traces));
    report(7, "gradient ledger on collected traces", &mut || criterion_7(&traces));
    report(9, "sequence decay bound", &mut criterion_9);
    lines.sort_by_key(|l| l.0);
    for (_, _, line) in &lines {
        println!("{line}");
    }
    if lines.iter().all(|l| l.1) {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
