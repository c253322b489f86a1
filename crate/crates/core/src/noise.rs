//! Classical Gaussian noise on `σ_z`: autocorrelations, the γ₀ normalization,
//! trajectory samplers and the coarse-grained covariance matrix.

use std::sync::Arc;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::linalg::Matrix;
use crate::quadrature::adaptive;
use crate::special::{ci, cin};

/// Stationary noise model. Amplitudes are in `1/t_g`, times in `t_g`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum NoiseModel {
    /// `S(Δ) = σ² e^{−|Δ|/τ_c}`.
    Ou { sigma: f64, tau_c: f64 },
    /// `S(Δ) = γ δ(Δ)`.
    White { gamma: f64 },
    /// `S(Δ) = σ²`.
    Quasistatic { sigma: f64 },
    /// `S(Δ) = 2λ² (Ci(ω_h|Δ|) − Ci(ω_l|Δ|))`, a `1/ω` spectrum on `[ω_l, ω_h]`.
    OneOverF { lambda: f64, omega_low: f64, omega_high: f64 },
}

/// Noise model family without parameters.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NoiseKind {
    Ou,
    White,
    Quasistatic,
    OneOverF,
}

/// `(e^{−x} − 1 + x)/x²`, which tends to ½ as `x → 0`.
pub(crate) fn phi2(x: f64) -> f64 {
    if x < 1e-2 {
        // alternating series Σ (−x)^k / (k+2)!
        let mut term = 0.5;
        let mut sum = 0.0;
        for k in 0..12 {
            sum += term;
            term *= -x / (k as f64 + 3.0);
        }
        sum
    } else {
        (x + (-x).exp_m1()) / (x * x)
    }
}

impl NoiseModel {
    pub fn zero() -> Self {
        NoiseModel::Quasistatic { sigma: 0.0 }
    }

    pub fn kind(&self) -> NoiseKind {
        match self {
            NoiseModel::Ou { .. } => NoiseKind::Ou,
            NoiseModel::White { .. } => NoiseKind::White,
            NoiseModel::Quasistatic { .. } => NoiseKind::Quasistatic,
            NoiseModel::OneOverF { .. } => NoiseKind::OneOverF,
        }
    }

    /// OU noise with `σ` fixed by [`calibrate_sigma_for_gamma0`].
    pub fn ou_from_gamma0(tau_c: f64, gamma0: f64) -> Result<Self> {
        Ok(NoiseModel::Ou { sigma: calibrate_sigma_for_gamma0(NoiseKind::Ou, tau_c, gamma0)?, tau_c })
    }

    pub fn validate(&self) -> Result<()> {
        let ok = |x: f64| x.is_finite() && x >= 0.0;
        match *self {
            NoiseModel::Ou { sigma, tau_c } => {
                if !ok(sigma) || !(tau_c.is_finite() && tau_c > 0.0) {
                    return invalid(format!("OU needs σ ≥ 0 and τ_c > 0, got σ={sigma}, τ_c={tau_c}"));
                }
            }
            NoiseModel::White { gamma } => {
                if !ok(gamma) {
                    return invalid(format!("white noise needs γ ≥ 0, got {gamma}"));
                }
            }
            NoiseModel::Quasistatic { sigma } => {
                if !ok(sigma) {
                    return invalid(format!("quasistatic noise needs σ ≥ 0, got {sigma}"));
                }
            }
            NoiseModel::OneOverF { lambda, omega_low, omega_high } => {
                if !ok(lambda) || !(omega_low > 0.0 && omega_low < omega_high && omega_high.is_finite()) {
                    return invalid(format!(
                        "1/f noise needs λ ≥ 0 and 0 < ω_l < ω_h, got λ={lambda}, ω_l={omega_low}, ω_h={omega_high}"
                    ));
                }
            }
        }
        Ok(())
    }

    /// True when the noise vanishes identically.
    pub fn is_zero(&self) -> bool {
        match *self {
            NoiseModel::Ou { sigma, .. } | NoiseModel::Quasistatic { sigma } => sigma == 0.0,
            NoiseModel::White { gamma } => gamma == 0.0,
            NoiseModel::OneOverF { lambda, .. } => lambda == 0.0,
        }
    }

    /// `S(Δ)`. White noise has no pointwise value at `Δ = 0`; use
    /// [`NoiseModel::white_weight`].
    pub fn autocorrelation(&self, delta: f64) -> Result<f64> {
        let d = delta.abs();
        match *self {
            NoiseModel::Ou { sigma, tau_c } => Ok(sigma * sigma * (-d / tau_c).exp()),
            NoiseModel::Quasistatic { sigma } => Ok(sigma * sigma),
            NoiseModel::White { .. } => {
                if d == 0.0 {
                    invalid("white noise is a δ-function at zero lag; use white_weight()")
                } else {
                    Ok(0.0)
                }
            }
            NoiseModel::OneOverF { lambda, omega_low, omega_high } => {
                let l2 = 2.0 * lambda * lambda;
                // Ci(ω_h d) − Ci(ω_l d) = ln(ω_h/ω_l) − Cin(ω_h d) + Cin(ω_l d)
                Ok(l2 * ((omega_high / omega_low).ln() - cin(omega_high * d) + cin(omega_low * d)))
            }
        }
    }

    /// Weight `γ` of the δ-function for white noise.
    pub fn white_weight(&self) -> Option<f64> {
        match *self {
            NoiseModel::White { gamma } => Some(gamma),
            _ => None,
        }
    }

    /// `S(0)`, infinite for nonzero white noise.
    pub fn variance(&self) -> f64 {
        match *self {
            NoiseModel::White { gamma } => {
                if gamma == 0.0 {
                    0.0
                } else {
                    f64::INFINITY
                }
            }
            _ => self.autocorrelation(0.0).unwrap(),
        }
    }

    /// `G(t) = ∫₀^{|t|} (|t| − u) S(u) du`, so that
    /// `∫₀^a∫₀^b S(t₁ − t₂) = G(a) + G(b) − G(a − b)` style identities hold.
    /// White noise returns `γ|t|/2`.
    pub fn second_antiderivative(&self, t: f64) -> f64 {
        let t = t.abs();
        match *self {
            NoiseModel::Ou { sigma, tau_c } => sigma * sigma * t * t * phi2(t / tau_c),
            NoiseModel::Quasistatic { sigma } => 0.5 * sigma * sigma * t * t,
            NoiseModel::White { gamma } => 0.5 * gamma * t,
            NoiseModel::OneOverF { lambda, omega_low, omega_high } => {
                if t == 0.0 {
                    return 0.0;
                }
                2.0 * lambda * lambda * (ci_second_antiderivative(omega_high, t) - ci_second_antiderivative(omega_low, t))
            }
        }
    }

    /// `∫₀^t S(u) du` for `t ≥ 0`; white noise returns `γ/2` for `t > 0`.
    pub fn first_antiderivative(&self, t: f64) -> f64 {
        let t = t.max(0.0);
        match *self {
            NoiseModel::Ou { sigma, tau_c } => -sigma * sigma * tau_c * (-t / tau_c).exp_m1(),
            NoiseModel::Quasistatic { sigma } => sigma * sigma * t,
            NoiseModel::White { gamma } => {
                if t > 0.0 {
                    0.5 * gamma
                } else {
                    0.0
                }
            }
            NoiseModel::OneOverF { lambda, omega_low, omega_high } => {
                if t == 0.0 {
                    return 0.0;
                }
                2.0 * lambda * lambda * (ci_antiderivative(omega_high, t) - ci_antiderivative(omega_low, t))
            }
        }
    }

    /// `γ₀ = ∫₀¹dt₁∫₀^{t₁}dt₂ S(t₁ − t₂)`, the phase variance per gate divided by 2.
    pub fn gamma0(&self) -> f64 {
        self.second_antiderivative(1.0)
    }
}

/// `∫₀^t Ci(a u) du = t Ci(at) − sin(at)/a`.
fn ci_antiderivative(a: f64, t: f64) -> f64 {
    t * ci(a * t) - (a * t).sin() / a
}

/// `∫₀^t (t − u) Ci(a u) du = (t²/2)Ci(at) − t sin(at)/(2a) − (1 − cos at)/(2a²)`.
fn ci_second_antiderivative(a: f64, t: f64) -> f64 {
    let x = a * t;
    let one_minus_cos = 2.0 * (0.5 * x).sin().powi(2);
    0.5 * t * t * ci(x) - t * x.sin() / (2.0 * a) - one_minus_cos / (2.0 * a * a)
}

/// `σ` such that the phase variance `γ₀ = ∫₀¹∫₀^{t₁} S` takes the requested
/// value. OU: `γ₀ = σ²(τ_c − τ_c²(1 − e^{−1/τ_c}))`; quasistatic: `γ₀ = σ²/2`.
pub fn calibrate_sigma_for_gamma0(kind: NoiseKind, tau_c: f64, gamma0: f64) -> Result<f64> {
    if !(gamma0 > 0.0 && gamma0.is_finite()) {
        return invalid(format!("γ₀ must be positive, got {gamma0}"));
    }
    match kind {
        NoiseKind::Ou => {
            if !(tau_c > 0.0 && tau_c.is_finite()) {
                return invalid(format!("τ_c must be positive, got {tau_c}"));
            }
            Ok((gamma0 / phi2(1.0 / tau_c)).sqrt())
        }
        NoiseKind::Quasistatic => Ok((2.0 * gamma0).sqrt()),
        NoiseKind::White | NoiseKind::OneOverF => {
            invalid(format!("{kind:?} noise is not parameterized by σ; use white_rate_for_gamma0 or set λ directly"))
        }
    }
}

/// White-noise rate with phase variance `γ₀` per gate: `γ = 2γ₀`.
pub fn white_rate_for_gamma0(gamma0: f64) -> f64 {
    2.0 * gamma0
}

/// Covariance of the per-gate phases `θ_i = ∫_{i}^{i+1} η dt`.
#[derive(Clone, Debug, PartialEq)]
pub struct CovarianceMatrix {
    pub matrix: Matrix,
}

impl CovarianceMatrix {
    pub fn dim(&self) -> usize {
        self.matrix.dim()
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.matrix[(i, j)]
    }

    pub fn is_toeplitz(&self, tol: f64) -> bool {
        let n = self.dim();
        (1..n).all(|i| (1..n).all(|j| (self.get(i, j) - self.get(i - 1, j - 1)).abs() <= tol))
    }
}

/// First row of the stationary covariance, `Σ_{0k}`, `k = 0..m`.
pub fn coarse_covariance_row(model: &NoiseModel, m: usize) -> Result<Vec<f64>> {
    model.validate()?;
    let mut row = Vec::with_capacity(m);
    match *model {
        NoiseModel::Ou { sigma, tau_c } => {
            let s2 = sigma * sigma;
            let q = -(-1.0 / tau_c).exp_m1();
            for k in 0..m {
                row.push(if k == 0 {
                    2.0 * s2 * phi2(1.0 / tau_c)
                } else {
                    s2 * tau_c * tau_c * q * q * (-((k - 1) as f64) / tau_c).exp()
                });
            }
        }
        _ => {
            // Σ_{0k} = G(k+1) − 2G(k) + G(k−1) with G the even second antiderivative of S
            for k in 0..m {
                let k = k as f64;
                let g = |t: f64| model.second_antiderivative(t);
                row.push(g(k + 1.0) - 2.0 * g(k) + g(k - 1.0));
            }
        }
    }
    Ok(row)
}

/// `Σ_{ij} = ∫_i^{i+1}∫_j^{j+1} S(t₁ − t₂)` for `i, j < m`, from closed forms.
pub fn coarse_covariance(model: &NoiseModel, m: usize) -> Result<CovarianceMatrix> {
    if m == 0 {
        return invalid("coarse covariance needs m ≥ 1");
    }
    let row = coarse_covariance_row(model, m)?;
    Ok(CovarianceMatrix { matrix: Matrix::from_fn(m, |i, j| row[i.abs_diff(j)]) })
}

/// Brute-force `Σ` by nested adaptive quadrature of `S` over each pair of
/// cells. Intended as an independent check of [`coarse_covariance`].
pub fn coarse_covariance_quadrature(model: &NoiseModel, m: usize, rel_tol: f64) -> Result<CovarianceMatrix> {
    if model.white_weight().is_some() {
        return invalid("white noise has no pointwise autocorrelation to integrate");
    }
    let mut out = Matrix::zeros(m);
    for i in 0..m {
        for j in 0..=i {
            let (a, b) = (i as f64, j as f64);
            let outer = |t1: f64| -> f64 {
                adaptive(|t2| model.autocorrelation(t1 - t2).unwrap(), b, b + 1.0, &[t1], rel_tol, 1e-300)
                    .map(|r| r.value)
                    .unwrap_or(f64::NAN)
            };
            let v = adaptive(outer, a, a + 1.0, &[], rel_tol, 1e-300)?.value;
            if !v.is_finite() {
                return Err(Error::Numerical(format!("covariance quadrature failed at ({i}, {j})")));
            }
            out[(i, j)] = v;
            out[(j, i)] = v;
        }
    }
    Ok(CovarianceMatrix { matrix: out })
}

/// Time-averaged normalized variance of `η(τ) − θ` within one gate,
/// `1 − Σ₀₀/S(0)`. Zero for quasistatic noise, 1 for white noise.
pub fn coarse_grain_validity(model: &NoiseModel) -> Result<f64> {
    model.validate()?;
    match *model {
        NoiseModel::White { .. } => Ok(1.0),
        NoiseModel::Quasistatic { .. } => Ok(0.0),
        NoiseModel::Ou { tau_c, .. } => Ok(1.0 - 2.0 * phi2(1.0 / tau_c)),
        NoiseModel::OneOverF { .. } => {
            let s0 = model.variance();
            if s0 == 0.0 {
                return Ok(0.0);
            }
            Ok(1.0 - 2.0 * model.second_antiderivative(1.0) / s0)
        }
    }
}

/// One sampled noise realization on a uniform grid.
#[derive(Clone, Debug, PartialEq)]
pub struct NoiseTrajectory {
    pub values: Vec<f64>,
    pub dt: f64,
    pub seed: u64,
}

/// How grid values represent the continuous process.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Sampling {
    /// `η(t_k)`.
    Point,
    /// `(1/Δt)∫ η` over the cell centred on `t_k`. Identical to `Point` for
    /// OU and quasistatic noise; white noise is always cell-averaged.
    CellAverage,
}

#[derive(Clone, Debug)]
struct Spectral {
    // per component: coefficient pair, current phasor, step rotation, cell factor
    a: Vec<f64>,
    b: Vec<f64>,
    c: Vec<f64>,
    s: Vec<f64>,
    rc: Vec<f64>,
    rs: Vec<f64>,
    weight: Vec<f64>,
}

#[derive(Clone, Debug)]
enum GeneratorState {
    Ou { decay: f64, kick: f64, sigma: f64, eta: f64, started: bool },
    Constant { value: f64 },
    White { scale: f64 },
    Spectral(Box<Spectral>),
}

/// Streaming sampler for one trajectory at a time on a grid of step `dt`.
///
/// OU uses the exact update `η ← η e^{−Δt/τ_c} + σ√(1 − e^{−2Δt/τ_c}) ξ`
/// with a stationary start. 1/f noise is a sum of `bins` sinusoids, one per
/// log-spaced frequency bin between `ω_l` and `ω_h`, with Gaussian cosine and
/// sine coefficients of variance `2λ² Δ(ln ω)` and a frequency drawn
/// uniformly in `ln ω` within its bin, so the ensemble covariance is exactly
/// `S(Δ)`.
#[derive(Clone, Debug)]
pub struct NoiseGenerator {
    model: NoiseModel,
    dt: f64,
    sampling: Sampling,
    bins: usize,
    state: GeneratorState,
}

pub const DEFAULT_SPECTRAL_BINS: usize = 512;

impl NoiseGenerator {
    pub fn new(model: &NoiseModel, dt: f64, sampling: Sampling, bins: usize) -> Result<Self> {
        model.validate()?;
        if !(dt > 0.0 && dt.is_finite()) {
            return invalid(format!("time step must be positive, got {dt}"));
        }
        if bins == 0 {
            return invalid("spectral synthesis needs at least one bin");
        }
        let state = match *model {
            NoiseModel::Ou { sigma, tau_c } => {
                let decay = (-dt / tau_c).exp();
                let kick = sigma * (-(-2.0 * dt / tau_c).exp_m1()).sqrt();
                GeneratorState::Ou { decay, kick, sigma, eta: 0.0, started: false }
            }
            NoiseModel::Quasistatic { .. } => GeneratorState::Constant { value: 0.0 },
            NoiseModel::White { gamma } => GeneratorState::White { scale: (gamma / dt).sqrt() },
            NoiseModel::OneOverF { .. } => GeneratorState::Spectral(Box::new(Spectral {
                a: vec![0.0; bins],
                b: vec![0.0; bins],
                c: vec![0.0; bins],
                s: vec![0.0; bins],
                rc: vec![0.0; bins],
                rs: vec![0.0; bins],
                weight: vec![0.0; bins],
            })),
        };
        Ok(NoiseGenerator { model: *model, dt, sampling, bins, state })
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    /// Draws a fresh realization. The first value returned by
    /// [`NoiseGenerator::next`] belongs to the cell `[0, Δt]` (midpoint `Δt/2`).
    pub fn reset<R: Rng + ?Sized>(&mut self, rng: &mut R) {
        let dt = self.dt;
        match (&mut self.state, self.model) {
            (GeneratorState::Ou { eta, started, .. }, _) => {
                *eta = 0.0;
                *started = false;
                let _ = rng;
            }
            (GeneratorState::Constant { value }, NoiseModel::Quasistatic { sigma }) => {
                let z: f64 = rng.sample(StandardNormal);
                *value = sigma * z;
            }
            (GeneratorState::White { .. }, _) => {}
            (GeneratorState::Spectral(sp), NoiseModel::OneOverF { lambda, omega_low, omega_high }) => {
                let (u0, u1) = (omega_low.ln(), omega_high.ln());
                let du = (u1 - u0) / self.bins as f64;
                let sd = lambda * (2.0 * du).sqrt();
                for k in 0..self.bins {
                    let jitter: f64 = rng.random();
                    let omega = (u0 + (k as f64 + jitter) * du).exp();
                    let za: f64 = rng.sample(StandardNormal);
                    let zb: f64 = rng.sample(StandardNormal);
                    sp.a[k] = sd * za;
                    sp.b[k] = sd * zb;
                    let (s, c) = (0.5 * omega * dt).sin_cos();
                    // phasor at the first cell midpoint Δt/2
                    sp.c[k] = c;
                    sp.s[k] = s;
                    let (rs, rc) = (omega * dt).sin_cos();
                    sp.rc[k] = rc;
                    sp.rs[k] = rs;
                    let x = 0.5 * omega * dt;
                    sp.weight[k] = match self.sampling {
                        Sampling::Point => 1.0,
                        Sampling::CellAverage => {
                            if x < 1e-8 {
                                1.0
                            } else {
                                x.sin() / x
                            }
                        }
                    };
                }
            }
            _ => unreachable!("generator state does not match its model"),
        }
    }

    /// Next grid value.
    #[inline]
    pub fn next<R: Rng + ?Sized>(&mut self, rng: &mut R) -> f64 {
        match &mut self.state {
            GeneratorState::Ou { decay, kick, sigma, eta, started } => {
                let z: f64 = rng.sample(StandardNormal);
                if *started {
                    *eta = *eta * *decay + *kick * z;
                } else {
                    *eta = *sigma * z;
                    *started = true;
                }
                *eta
            }
            GeneratorState::Constant { value } => *value,
            GeneratorState::White { scale } => {
                let z: f64 = rng.sample(StandardNormal);
                *scale * z
            }
            GeneratorState::Spectral(sp) => {
                let mut v = 0.0;
                for k in 0..sp.a.len() {
                    let (c, s) = (sp.c[k], sp.s[k]);
                    v += sp.weight[k] * (sp.a[k] * c + sp.b[k] * s);
                    sp.c[k] = c * sp.rc[k] - s * sp.rs[k];
                    sp.s[k] = s * sp.rc[k] + c * sp.rs[k];
                }
                v
            }
        }
    }
}

/// Covariance of the cell averages `(1/Δt)∫ η` over cells `k` apart:
/// `[G((k+1)Δt) − 2G(kΔt) + G((k−1)Δt)]/Δt²`.
pub fn cell_average_covariance(model: &NoiseModel, dt: f64, k: usize) -> f64 {
    let g = |j: f64| model.second_antiderivative(j * dt);
    let k = k as f64;
    (g(k + 1.0) - 2.0 * g(k) + g(k - 1.0)) / (dt * dt)
}

/// Exact Gaussian sampler for `n` consecutive cell averages, by embedding
/// their Toeplitz covariance in a circulant matrix diagonalized with one FFT.
///
/// When the plain embedding is not positive semidefinite, lags beyond `n`
/// are tapered linearly to zero and the embedding grown up to `8n`. Any
/// negative eigenvalues left are set to zero and the discarded weight is
/// reported by [`CirculantSampler::clipped_fraction`].
pub struct CirculantSampler {
    n: usize,
    dt: f64,
    amplitude: Vec<f64>,
    fft: Arc<dyn Fft<f64>>,
    clipped: f64,
}

impl std::fmt::Debug for CirculantSampler {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("CirculantSampler")
            .field("n", &self.n)
            .field("dt", &self.dt)
            .field("size", &self.amplitude.len())
            .field("clipped", &self.clipped)
            .finish()
    }
}

impl CirculantSampler {
    pub fn new(model: &NoiseModel, dt: f64, n: usize) -> Result<Self> {
        model.validate()?;
        if !(dt > 0.0 && dt.is_finite()) || n == 0 {
            return invalid(format!("need a positive step and at least one cell, got dt = {dt}, n = {n}"));
        }
        let mut planner = FftPlanner::new();
        let last = (8 * n).next_power_of_two();
        let mut size = (2 * n).next_power_of_two();
        loop {
            for taper in [false, true] {
                let cov: Vec<f64> = (0..=size / 2)
                    .map(|k| {
                        let c = cell_average_covariance(model, dt, k);
                        if taper && k >= n {
                            c * (1.0 - (k - n + 1) as f64 / (size / 2 - n + 1) as f64)
                        } else {
                            c
                        }
                    })
                    .collect();
                let mut row: Vec<Complex64> =
                    (0..size).map(|k| Complex64::new(cov[k.min(size - k)], 0.0)).collect();
                let fft = planner.plan_fft_forward(size);
                fft.process(&mut row);
                let eig: Vec<f64> = row.iter().map(|z| z.re).collect();
                let top = eig.iter().fold(0.0f64, |a, &b| a.max(b.abs()));
                let negative: f64 = eig.iter().filter(|&&x| x < 0.0).map(|x| -x).sum();
                if negative <= 1e-12 * top * size as f64 || (taper && size >= last) {
                    let total: f64 = eig.iter().map(|x| x.abs()).sum();
                    let clipped = if total > 0.0 { negative / total } else { 0.0 };
                    let amplitude = eig.iter().map(|&x| (x.max(0.0) / size as f64).sqrt()).collect();
                    return Ok(CirculantSampler { n, dt, amplitude, fft, clipped });
                }
            }
            size *= 2;
        }
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn clipped_fraction(&self) -> f64 {
        self.clipped
    }

    /// Replaces `out` with one realization.
    pub fn sample_into<R: Rng + ?Sized>(&self, rng: &mut R, out: &mut Vec<f64>, scratch: &mut Vec<Complex64>) {
        scratch.clear();
        scratch.extend(self.amplitude.iter().map(|&a| {
            let (x, y): (f64, f64) = (rng.sample(StandardNormal), rng.sample(StandardNormal));
            Complex64::new(a * x, a * y)
        }));
        self.fft.process(scratch);
        out.clear();
        out.extend(scratch[..self.n].iter().map(|z| z.re));
    }
}

/// Samples `duration/dt` grid values of one realization, seeded by `seed`.
///
/// Values are taken at the cell midpoints `(k + ½)Δt` (point values for
/// OU, quasistatic and 1/f noise; cell averages for white noise).
pub fn sample_trajectory(model: &NoiseModel, duration: f64, dt: f64, seed: u64) -> Result<NoiseTrajectory> {
    sample_trajectory_with(model, duration, dt, seed, Sampling::Point, DEFAULT_SPECTRAL_BINS)
}

pub fn sample_trajectory_with(
    model: &NoiseModel,
    duration: f64,
    dt: f64,
    seed: u64,
    sampling: Sampling,
    bins: usize,
) -> Result<NoiseTrajectory> {
    if !(dt > 0.0) {
        return invalid(format!("time step must be positive, got {dt}"));
    }
    let steps = (duration / dt).round();
    if !(duration >= 0.0) || (steps * dt - duration).abs() > 1e-9 * duration.max(1.0) {
        return invalid(format!("duration {duration} is not a multiple of the step {dt}"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut generator = NoiseGenerator::new(model, dt, sampling, bins)?;
    generator.reset(&mut rng);
    let values = (0..steps as usize).map(|_| generator.next(&mut rng)).collect();
    Ok(NoiseTrajectory { values, dt, seed })
}
