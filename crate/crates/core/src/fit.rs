//! Decay-curve fitting: `A e^{−Γm} + B` by Levenberg–Marquardt, the initial
//! rate and local log-log slopes.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::linalg::{Lu, Matrix};

/// Result of fitting `P₀(m) = A e^{−Γm} + B`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExponentialFit {
    pub a: f64,
    pub b: f64,
    pub gamma: f64,
    /// Covariance of `(A, B, Γ)`, scaled by the reduced χ².
    pub covariance: [[f64; 3]; 3],
    /// Unweighted root-mean-square residual.
    pub rms_residual: f64,
    pub iterations: usize,
}

impl ExponentialFit {
    pub fn gamma_stderr(&self) -> f64 {
        self.covariance[2][2].max(0.0).sqrt()
    }

    pub fn eval(&self, m: f64) -> f64 {
        self.a * (-self.gamma * m).exp() + self.b
    }
}

pub const MAX_ITERATIONS: usize = 200;
pub const CONVERGENCE: f64 = 1e-10;

fn check_inputs(x: &[f64], y: &[f64], min: usize) -> Result<()> {
    if x.len() != y.len() {
        return invalid(format!("{} lengths but {} values", x.len(), y.len()));
    }
    if x.len() < min {
        return invalid(format!("need at least {min} points, got {}", x.len()));
    }
    if x.iter().chain(y).any(|v| !v.is_finite()) {
        return invalid("non-finite input");
    }
    Ok(())
}

/// Straight-line least squares `y ≈ c₀ + c₁x`.
fn linear_fit(x: &[f64], y: &[f64]) -> (f64, f64) {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
    let slope = if sxx > 0.0 { sxy / sxx } else { 0.0 };
    (my - slope * mx, slope)
}

/// Starting point from a log-linear fit of `y − B₀`, with `B₀` just below
/// the smallest value (or ½ when all values sit above it).
fn initial_guess(x: &[f64], y: &[f64]) -> [f64; 3] {
    let ymin = y.iter().copied().fold(f64::INFINITY, f64::min);
    let ymax = y.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let span = (ymax - ymin).max(1e-12);
    let b0 = if ymin > 0.5 { 0.5 } else { ymin - 0.05 * span };
    let ly: Vec<f64> = y.iter().map(|v| (v - b0).max(1e-3 * span).ln()).collect();
    let (c0, c1) = linear_fit(x, &ly);
    [c0.exp(), b0, (-c1).max(1e-12)]
}

/// Levenberg–Marquardt fit of `A e^{−Γm} + B`. `stderr`, when given, weights
/// the residuals by `1/σ²`; zero or missing entries count as unit weight.
pub fn fit_exponential(lengths: &[f64], p0: &[f64], stderr: Option<&[f64]>) -> Result<ExponentialFit> {
    check_inputs(lengths, p0, 4)?;
    let n = lengths.len();
    let w: Vec<f64> = match stderr {
        Some(s) if s.len() == n && s.iter().all(|&v| v > 0.0) => s.iter().map(|v| 1.0 / (v * v)).collect(),
        Some(s) if s.len() != n => return invalid("stderr has the wrong length"),
        _ => vec![1.0; n],
    };
    let model = |p: &[f64; 3], m: f64| p[0] * (-p[2] * m).exp() + p[1];
    let chi2 = |p: &[f64; 3]| -> f64 {
        lengths.iter().zip(p0).zip(&w).map(|((m, y), wi)| wi * (y - model(p, *m)).powi(2)).sum()
    };
    let normal = |p: &[f64; 3]| -> ([[f64; 3]; 3], [f64; 3]) {
        let mut jtj = [[0.0; 3]; 3];
        let mut jtr = [0.0; 3];
        for ((m, y), wi) in lengths.iter().zip(p0).zip(&w) {
            let e = (-p[2] * m).exp();
            let j = [e, 1.0, -p[0] * m * e];
            let r = y - model(p, *m);
            for a in 0..3 {
                jtr[a] += wi * j[a] * r;
                for b in 0..3 {
                    jtj[a][b] += wi * j[a] * j[b];
                }
            }
        }
        (jtj, jtr)
    };

    let mut p = initial_guess(lengths, p0);
    let mut c = chi2(&p);
    let mut lambda = 1e-3;
    let mut iterations = 0;
    let mut converged = false;
    while iterations < MAX_ITERATIONS {
        iterations += 1;
        let (jtj, jtr) = normal(&p);
        let a = Matrix::from_fn(3, |i, j| jtj[i][j] * if i == j { 1.0 + lambda } else { 1.0 });
        let step = match Lu::factor(a) {
            Ok(lu) => lu.solve(&jtr),
            Err(_) => {
                lambda *= 10.0;
                continue;
            }
        };
        let trial = [p[0] + step[0], p[1] + step[1], p[2] + step[2]];
        let ct = chi2(&trial);
        if ct.is_finite() && ct <= c {
            let rel_step = (0..3).map(|k| step[k].abs() / (p[k].abs() + 1e-12)).fold(0.0, f64::max);
            let rel_chi = (c - ct) / c.max(f64::MIN_POSITIVE);
            p = trial;
            c = ct;
            lambda = (lambda / 10.0).max(1e-12);
            if rel_step < CONVERGENCE || rel_chi < CONVERGENCE {
                converged = true;
                break;
            }
        } else {
            lambda *= 10.0;
            if lambda > 1e16 {
                // no downhill direction left: at a minimum to working precision
                converged = true;
                break;
            }
        }
    }
    if !converged {
        return Err(Error::Numerical(format!("exponential fit did not converge in {MAX_ITERATIONS} iterations")));
    }
    let (jtj, _) = normal(&p);
    let dof = n.saturating_sub(3).max(1) as f64;
    let scale = c / dof;
    let cov = Lu::factor(Matrix::from_fn(3, |i, j| jtj[i][j]))
        .map(|lu| lu.inverse())
        .map_err(|_| Error::Numerical("singular normal matrix in exponential fit".into()))?;
    let mut covariance = [[0.0; 3]; 3];
    for (i, row) in covariance.iter_mut().enumerate() {
        for (j, v) in row.iter_mut().enumerate() {
            *v = scale * cov[(i, j)];
        }
    }
    let rms_residual =
        (lengths.iter().zip(p0).map(|(m, y)| (y - model(&p, *m)).powi(2)).sum::<f64>() / n as f64).sqrt();
    Ok(ExponentialFit { a: p[0], b: p[1], gamma: p[2], covariance, rms_residual, iterations })
}

/// Indices of the tail window: the largest `fraction` of the lengths, at
/// least four points.
pub fn tail_window(n: usize, fraction: f64) -> std::ops::Range<usize> {
    let k = ((n as f64 * fraction).ceil() as usize).max(4).min(n);
    n - k..n
}

pub const DEFAULT_TAIL_FRACTION: f64 = 0.4;

/// [`fit_exponential`] on the tail window.
pub fn fit_tail(lengths: &[f64], p0: &[f64], stderr: Option<&[f64]>, fraction: f64) -> Result<ExponentialFit> {
    check_inputs(lengths, p0, 4)?;
    let r = tail_window(lengths.len(), fraction);
    fit_exponential(&lengths[r.clone()], &p0[r.clone()], stderr.map(|s| &s[r]))
}

/// `Γ₀ = −ln((P₀(m₂) − ½)/(P₀(m₁) − ½))/(m₂ − m₁)` from the first two points.
pub fn initial_rate(lengths: &[f64], p0: &[f64]) -> Result<f64> {
    check_inputs(lengths, p0, 2)?;
    let (a, b) = (p0[0] - 0.5, p0[1] - 0.5);
    if a <= 0.0 || b <= 0.0 {
        return Err(Error::Numerical("survival probability at the floor; initial rate undefined".into()));
    }
    Ok(-(b / a).ln() / (lengths[1] - lengths[0]))
}

/// Local slopes of `ln(P₀ − floor)` against `ln m`, by centered differences
/// at interior points and one-sided differences at the ends.
pub fn loglog_slope(lengths: &[f64], p0: &[f64], floor: f64) -> Result<Vec<(f64, f64)>> {
    check_inputs(lengths, p0, 2)?;
    if lengths.iter().any(|&m| m <= 0.0) || p0.iter().any(|&p| p <= floor) {
        return invalid("log-log slope needs m > 0 and P₀ above the floor");
    }
    let lx: Vec<f64> = lengths.iter().map(|m| m.ln()).collect();
    let ly: Vec<f64> = p0.iter().map(|p| (p - floor).ln()).collect();
    let n = lx.len();
    Ok((0..n)
        .map(|i| {
            let (lo, hi) = (i.saturating_sub(1), (i + 1).min(n - 1));
            (lengths[i], (ly[hi] - ly[lo]) / (lx[hi] - lx[lo]))
        })
        .collect())
}

/// Least-squares slope of `ln(P₀ − floor)` against `ln m` over `[lo, hi]`.
pub fn window_slope(lengths: &[f64], p0: &[f64], floor: f64, lo: f64, hi: f64) -> Result<f64> {
    check_inputs(lengths, p0, 2)?;
    let (x, y): (Vec<f64>, Vec<f64>) = lengths
        .iter()
        .zip(p0)
        .filter(|(m, _)| **m >= lo && **m <= hi)
        .map(|(m, p)| (m.ln(), (p - floor).ln()))
        .unzip();
    if x.len() < 2 || y.iter().any(|v| !v.is_finite()) {
        return invalid(format!("window [{lo}, {hi}] holds fewer than two usable points"));
    }
    Ok(linear_fit(&x, &y).1)
}
