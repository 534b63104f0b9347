//! Dolan–Moré performance profiles.

use std::io::{self, BufRead, Write};

use serde::{Deserialize, Serialize};

/// Time recorded for a run that did not reach the stopping tolerance.
pub const FAILURE_TIME: f64 = 1e5;

fn linspace(lo: f64, hi: f64, len: usize) -> Vec<f64> {
    (0..len).map(|e| lo + e as f64 * (hi - lo) / (len - 1) as f64).collect()
}

/// 50 evenly spaced smoothing parameters from 0.01 to 0.5.
pub fn betas_grid() -> Vec<f64> {
    linspace(0.01, 0.5, 50)
}

/// 50 evenly spaced ratios from 1 to 5.
pub fn taus_grid() -> Vec<f64> {
    linspace(1.0, 5.0, 50)
}

/// `count` entries of `grid` spread evenly from first to last.
pub fn subsample(grid: &[f64], count: usize) -> Vec<f64> {
    match count {
        0 => Vec::new(),
        1 => vec![grid[0]],
        c if c >= grid.len() => grid.to_vec(),
        c => (0..c).map(|j| grid[(j * (grid.len() - 1) + (c - 1) / 2) / (c - 1)]).collect(),
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ProfileError {
    #[error("timing matrix is empty")]
    Empty,
    #[error("row {row} has {found} entries, expected {expected}")]
    Ragged { row: usize, expected: usize, found: usize },
    #[error("time at row {row}, column {col} is {value}; times must be positive")]
    NonPositive { row: usize, col: usize, value: f64 },
    #[error("line {line}: {reason}")]
    Parse { line: usize, reason: String },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProfileTable {
    pub solvers: Vec<String>,
    pub problems: Vec<String>,
    /// `times[p][s]`, seconds.
    pub times: Vec<Vec<f64>>,
    /// `times[p][s] / min_s times[p][s]`.
    pub ratios: Vec<Vec<f64>>,
    pub taus: Vec<f64>,
    /// `curves[s][j]`: fraction of problems with ratio at most `taus[j]`.
    pub curves: Vec<Vec<f64>>,
}

pub fn performance_profile(
    solvers: Vec<String>,
    problems: Vec<String>,
    times: Vec<Vec<f64>>,
    taus: &[f64],
) -> Result<ProfileTable, ProfileError> {
    let n_s = solvers.len();
    if times.is_empty() || n_s == 0 {
        return Err(ProfileError::Empty);
    }
    for (row, t) in times.iter().enumerate() {
        if t.len() != n_s {
            return Err(ProfileError::Ragged { row, expected: n_s, found: t.len() });
        }
        if let Some((col, &value)) = t.iter().enumerate().find(|(_, &v)| !(v > 0.0)) {
            return Err(ProfileError::NonPositive { row, col, value });
        }
    }
    let ratios: Vec<Vec<f64>> = times
        .iter()
        .map(|t| {
            let best = t.iter().copied().fold(f64::INFINITY, f64::min);
            t.iter().map(|&v| v / best).collect()
        })
        .collect();
    let mut table = ProfileTable { solvers, problems, times, ratios, taus: taus.to_vec(), curves: Vec::new() };
    table.curves = (0..n_s).map(|s| taus.iter().map(|&tau| table.fraction_within(s, tau)).collect()).collect();
    Ok(table)
}

impl ProfileTable {
    /// `#{p : r_{p,s} ≤ τ} / n_p`
    pub fn fraction_within(&self, solver: usize, tau: f64) -> f64 {
        let hits = self.ratios.iter().filter(|r| r[solver] <= tau).count();
        hits as f64 / self.ratios.len() as f64
    }

    /// Ratios at least 1 with a 1 in every row, curves nondecreasing in `[0, 1]`.
    pub fn check_invariants(&self) -> Vec<String> {
        let mut out = Vec::new();
        for (p, r) in self.ratios.iter().enumerate() {
            if r.iter().any(|&v| !(v >= 1.0)) {
                out.push(format!("problem {p}: ratio below 1"));
            }
            if !r.contains(&1.0) {
                out.push(format!("problem {p}: no solver attains ratio 1"));
            }
        }
        for (s, c) in self.curves.iter().enumerate() {
            if c.iter().any(|&v| !(0.0..=1.0).contains(&v)) {
                out.push(format!("solver {s}: curve leaves [0, 1]"));
            }
            if c.windows(2).any(|w| w[1] < w[0]) {
                out.push(format!("solver {s}: curve decreases"));
            }
        }
        out
    }

    /// `tau<TAB>P_solver1<TAB>...`, one line per grid point.
    pub fn write_tsv<W: Write>(&self, mut out: W) -> io::Result<()> {
        write!(out, "tau")?;
        for s in &self.solvers {
            write!(out, "\t{s}")?;
        }
        writeln!(out)?;
        for (j, tau) in self.taus.iter().enumerate() {
            write!(out, "{tau:.6}")?;
            for c in &self.curves {
                write!(out, "\t{:.6}", c[j])?;
            }
            writeln!(out)?;
        }
        Ok(())
    }

    /// Curves as chart series.
    pub fn series(&self) -> Vec<(String, Vec<(f64, f64)>)> {
        self.solvers
            .iter()
            .zip(&self.curves)
            .map(|(s, c)| (s.clone(), self.taus.iter().copied().zip(c.iter().copied()).collect()))
            .collect()
    }
}

/// Timing matrix in the `problem<TAB>solver…` layout used by [`write_times_tsv`].
#[derive(Debug, Clone, PartialEq)]
pub struct TimesFile {
    pub solvers: Vec<String>,
    pub problems: Vec<String>,
    pub times: Vec<Vec<f64>>,
}

pub fn write_times_tsv<W: Write>(t: &TimesFile, mut out: W) -> io::Result<()> {
    writeln!(out, "problem\t{}", t.solvers.join("\t"))?;
    for (p, row) in t.problems.iter().zip(&t.times) {
        write!(out, "{p}")?;
        for v in row {
            write!(out, "\t{v:e}")?;
        }
        writeln!(out)?;
    }
    Ok(())
}

pub fn read_times_tsv<R: BufRead>(source: R) -> Result<TimesFile, ProfileError> {
    let mut lines = source.lines().enumerate();
    let header = match lines.next() {
        Some((_, line)) => line.map_err(|e| ProfileError::Parse { line: 1, reason: e.to_string() })?,
        None => return Err(ProfileError::Empty),
    };
    let solvers: Vec<String> = header.split('\t').skip(1).map(str::to_string).collect();
    let mut problems = Vec::new();
    let mut times = Vec::new();
    for (idx, line) in lines {
        let line = line.map_err(|e| ProfileError::Parse { line: idx + 1, reason: e.to_string() })?;
        if line.trim().is_empty() {
            continue;
        }
        let mut cells = line.split('\t');
        problems.push(cells.next().unwrap_or_default().to_string());
        let row = cells
            .map(|c| c.trim().parse::<f64>())
            .collect::<Result<Vec<f64>, _>>()
            .map_err(|e| ProfileError::Parse { line: idx + 1, reason: e.to_string() })?;
        times.push(row);
    }
    Ok(TimesFile { solvers, problems, times })
}
