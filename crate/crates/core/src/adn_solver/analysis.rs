//! Empirical convergence-rate checks on finished runs.

use crate::scalar::Scalar;
use crate::trace::IterateTrace;

/// Least-squares slope of `ln y` against `ln x` over the points with `x, y > 0`.
pub fn loglog_slope(points: &[(f64, f64)]) -> Option<f64> {
    let pts: Vec<(f64, f64)> =
        points.iter().filter(|(x, y)| *x > 0.0 && *y > 0.0).map(|(x, y)| (x.ln(), y.ln())).collect();
    if pts.len() < 2 {
        return None;
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    (sxx > 0.0).then(|| sxy / sxx)
}

/// `−2/(2 − α)`, the exponent of the global sublinear rate in `k`.
pub fn global_rate_exponent(alpha: f64) -> f64 {
    -2.0 / (2.0 - alpha)
}

/// Slope of `ln(f(x_k) − f*)` against `ln k` over the rows of `trace`.
pub fn suboptimality_slope<T: Scalar>(trace: &IterateTrace<T>, f_star: f64) -> Option<f64> {
    let pts: Vec<(f64, f64)> = trace.rows.iter().map(|r| (r.k as f64, r.f.to_f64_lossy() - f_star)).collect();
    loglog_slope(&pts)
}

/// `α_{t+1} = α_t − C·α_t^{(4−a)/2}` for `len` terms starting at `alpha0`.
pub fn decay_sequence(alpha0: f64, c: f64, a: f64, len: usize) -> Vec<f64> {
    let p = (4.0 - a) / 2.0;
    let mut out = Vec::with_capacity(len);
    let mut v = alpha0;
    for _ in 0..len {
        out.push(v);
        v -= c * v.powf(p);
    }
    out
}

/// `(2/C)^{2/(2−a)}·(t+1)^{−2/(2−a)}`
pub fn decay_bound(c: f64, a: f64, t: usize) -> f64 {
    let e = 2.0 / (2.0 - a);
    (2.0 / c).powf(e) * ((t + 1) as f64).powf(-e)
}

/// `2√(2σ_max)/μ`
pub fn local_rate_constant(sigma_max: f64, mu: f64) -> f64 {
    2.0 * (2.0 * sigma_max).sqrt() / mu
}

/// Checks `‖g_{k+1}‖ ≤ C·‖g_k‖^{(α+2)/2}` over the last `last` transitions of
/// `gnorms`; returns the worst ratio of left to right side.
pub fn local_rate_ratio(gnorms: &[f64], c: f64, alpha: f64, last: usize) -> Option<f64> {
    if gnorms.len() < 2 {
        return None;
    }
    let p = (alpha + 2.0) / 2.0;
    let start = gnorms.len().saturating_sub(last + 1);
    gnorms[start..].windows(2).map(|w| w[1] / (c * w[0].powf(p))).reduce(f64::max)
}

/// Largest `σ_k` recorded in `trace`.
pub fn max_sigma<T: Scalar>(trace: &IterateTrace<T>) -> f64 {
    trace.rows.iter().map(|r| r.sigma_k.to_f64_lossy()).fold(0.0, f64::max)
}
