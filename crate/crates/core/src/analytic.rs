//! Closed-form and semi-analytic survival curves: the second-order PLME,
//! the Markovian and quasistatic limits, and the coarse-grained determinant.


use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{invalid, Error, Result};
use crate::gates::{f_coefficients, GateImplementation, GateKind};
use crate::linalg::{Lu, Matrix};
use crate::noise::{coarse_covariance_row, coarse_grain_validity, NoiseModel};
use crate::quadrature::{adaptive, panels, Chebyshev};

/// How a curve was produced.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Plme2,
    Coarse,
    CoarseRenormalized,
    MarkovExact,
    QuasistaticExact,
    MonteCarlo,
}

impl Method {
    pub fn name(&self) -> &'static str {
        match self {
            Method::Plme2 => "plme2",
            Method::Coarse => "coarse",
            Method::CoarseRenormalized => "coarse_renormalized",
            Method::MarkovExact => "markov_exact",
            Method::QuasistaticExact => "quasistatic_exact",
            Method::MonteCarlo => "montecarlo",
        }
    }
}

impl std::fmt::Display for Method {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// Survival probability `P₀(m)` at a set of sequence lengths.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DecayCurve {
    pub lengths: Vec<usize>,
    pub p0: Vec<f64>,
    /// Zero for analytic methods.
    pub stderr: Vec<f64>,
    pub method: Method,
    pub config_digest: String,
}

impl DecayCurve {
    pub fn analytic(lengths: &[usize], p0: Vec<f64>, method: Method, config_digest: String) -> Self {
        DecayCurve { lengths: lengths.to_vec(), stderr: vec![0.0; p0.len()], p0, method, config_digest }
    }

    pub fn len(&self) -> usize {
        self.lengths.len()
    }

    pub fn is_empty(&self) -> bool {
        self.lengths.is_empty()
    }

    /// Largest `|P₀ − other.P₀|` over the shared lengths.
    pub fn max_abs_diff(&self, other: &DecayCurve) -> f64 {
        self.lengths
            .iter()
            .zip(&self.p0)
            .filter_map(|(m, p)| other.lengths.iter().position(|x| x == m).map(|j| (p - other.p0[j]).abs()))
            .fold(0.0, f64::max)
    }

    /// Checks the floor `P₀ ∈ [½ − 1e-9, 1 + 1e-9]` and, for analytic curves,
    /// monotone decay.
    pub fn check_invariants(&self) -> Result<()> {
        if self.p0.len() != self.lengths.len() || self.stderr.len() != self.lengths.len() {
            return Err(Error::Internal("curve arrays have different lengths".into()));
        }
        for (m, p) in self.lengths.iter().zip(&self.p0) {
            if !(*p >= 0.5 - 1e-9 && *p <= 1.0 + 1e-9) {
                return Err(Error::Numerical(format!("P0({m}) = {p} is outside [1/2, 1]")));
            }
        }
        if self.method != Method::MonteCarlo {
            for w in self.p0.windows(2) {
                if w[1] > w[0] + 1e-12 {
                    return Err(Error::Numerical(format!("analytic curve increases: {} -> {}", w[0], w[1])));
                }
            }
        }
        Ok(())
    }
}

/// Per-gate exponents and the two fidelity estimates built from them.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RateSummary {
    pub epsilon: f64,
    pub epsilon_prime: f64,
    /// `(e^{−4ε′} + 1)/2`, the one-gate survival probability.
    pub agf: f64,
    /// `(e^{−4ε} + 1)/2`, what an RB fit of the decay would report.
    pub agf_rb_estimate: f64,
}

/// Hex SHA-256 of the JSON encoding of `value`.
pub fn config_digest<T: Serialize + ?Sized>(value: &T) -> String {
    let json = serde_json::to_vec(value).expect("serializable configuration");
    Sha256::digest(&json).iter().map(|b| format!("{b:02x}")).collect()
}

#[derive(Serialize)]
struct CurveKey<'a> {
    method: Method,
    model: Option<&'a NoiseModel>,
    implementation: Option<GateKind>,
    lengths: &'a [usize],
}

fn digest_for(method: Method, model: Option<&NoiseModel>, kind: Option<GateKind>, lengths: &[usize]) -> String {
    config_digest(&CurveKey { method, model, implementation: kind, lengths })
}

/// Lengths must be ascending, distinct and at least 1.
pub fn validate_lengths(lengths: &[usize]) -> Result<()> {
    if lengths.is_empty() {
        return invalid("at least one sequence length is required");
    }
    if lengths[0] < 1 {
        return invalid("sequence lengths start at m = 1");
    }
    if lengths.windows(2).any(|w| w[1] <= w[0]) {
        return invalid("sequence lengths must be strictly ascending");
    }
    Ok(())
}

const CHEBYSHEV_NODES: usize = 24;

/// `∫_a^b S(t − t′) g(t′) dt′` with `g` smooth on `[a, b]`.
fn kernel_piece(model: &NoiseModel, t: f64, a: f64, b: f64, g: impl FnMut(f64) -> f64) -> Result<f64> {
    if b <= a {
        return Ok(0.0);
    }
    let interp = Chebyshev::fit(a, b, CHEBYSHEV_NODES, g);
    // geometric breakpoints resolve a kernel much narrower than the piece
    let mut breaks = Vec::new();
    if let Some(width) = correlation_scale(model) {
        let mut d = width;
        while d < t - a {
            breaks.push(t - d);
            d *= 2.0;
        }
    }
    let scale = model.variance() * (b - a);
    if let NoiseModel::OneOverF { .. } = model {
        // Integrating by parts twice against the closed-form antiderivatives
        // of S leaves G(t − x)p″(x), which no longer oscillates at ω_h.
        let d1 = interp.derivative();
        let d2 = d1.derivative();
        let edge = |x: f64| -model.first_antiderivative(t - x) * interp.eval(x) - model.second_antiderivative(t - x) * d1.eval(x);
        let rest = adaptive(|x| model.second_antiderivative(t - x) * d2.eval(x), a, b, &breaks, 1e-11, 1e-15 * scale)?;
        return Ok(edge(b) - edge(a) + rest.value);
    }
    let s = |x: f64| model.autocorrelation(t - x).expect("pointwise autocorrelation");
    Ok(adaptive(|x| s(x) * interp.eval(x), a, b, &breaks, 1e-11, 1e-15 * scale)?.value)
}

/// Time scale on which `S` varies near zero lag.
fn correlation_scale(model: &NoiseModel) -> Option<f64> {
    match *model {
        NoiseModel::Ou { tau_c, .. } => Some(tau_c),
        NoiseModel::OneOverF { omega_high, .. } => Some(1.0 / omega_high),
        _ => None,
    }
}

/// Noise-averaged PLME rate `Γ̄(t) = (1/3)∫_{max(0, n−1)}^{t} S(t − t′) f(t, t′) dt′`
/// with `n = ⌊t⌋`. For white noise the δ-function sits on the endpoint and
/// contributes half its weight, `γ f(t, t)/6 = γ/3`.
pub fn plme_rate(model: &NoiseModel, imp: &GateImplementation, t: f64) -> Result<f64> {
    model.validate()?;
    if !(t >= 0.0 && t.is_finite()) {
        return invalid(format!("time must be non-negative, got {t}"));
    }
    if model.is_zero() {
        return Ok(0.0);
    }
    let n = t.floor();
    let tau = t - n;
    let at = imp.overlap_at(tau);
    if let Some(gamma) = model.white_weight() {
        return Ok(gamma * at.same(tau) / 6.0);
    }
    let kinks = imp.kinks();
    let mut total = 0.0;
    if n >= 1.0 {
        let prev = n - 1.0;
        let breaks: Vec<f64> = kinks.iter().map(|k| prev + k).collect();
        for (a, b) in panels(prev, n, &breaks) {
            total += kernel_piece(model, t, a, b, |x| at.adjacent(x - prev))?;
        }
    }
    if tau > 0.0 {
        let breaks: Vec<f64> = kinks.iter().map(|k| n + k).collect();
        for (a, b) in panels(n, t, &breaks) {
            total += kernel_piece(model, t, a, b, |x| at.same(x - n))?;
        }
    }
    Ok(total / 3.0)
}

fn integrate_rate(model: &NoiseModel, imp: &GateImplementation, start: f64) -> Result<f64> {
    if let Some(gamma) = model.white_weight() {
        // constant in t; no quadrature needed
        return Ok(gamma * imp.f_same_gate(0.5, 0.5) / 6.0);
    }
    let mut breaks: Vec<f64> = imp.kinks().iter().map(|k| start + k).collect();
    if let Some(width) = correlation_scale(model) {
        // Γ̄ relaxes over one correlation time after each gate start and kink
        let origins: Vec<f64> = std::iter::once(start).chain(breaks.iter().copied()).collect();
        for o in origins {
            let mut d = width;
            while d < 1.0 {
                breaks.push(o + d);
                d *= 2.0;
            }
        }
    }
    let mut failure = None;
    let value = adaptive(
        |t| match plme_rate(model, imp, t) {
            Ok(v) => v,
            Err(e) => {
                failure.get_or_insert(e);
                f64::NAN
            }
        },
        start,
        start + 1.0,
        &breaks,
        1e-10,
        // Γ̄ can change sign (1/f with large ω_l), so ε may be far below the
        // per-gate phase variance γ₀ that sets the size of the integrand
        1e-10 * model.gamma0(),
    );
    if let Some(e) = failure {
        return Err(e);
    }
    Ok(value?.value)
}

/// `(ε, ε′)`: integrals of `Γ̄` over the second gate `[1, 2]` (periodic from
/// then on) and over the first gate `[0, 1]`.
pub fn plme_epsilons(model: &NoiseModel, imp: &GateImplementation) -> Result<(f64, f64)> {
    model.validate()?;
    if model.is_zero() {
        return Ok((0.0, 0.0));
    }
    Ok((integrate_rate(model, imp, 1.0)?, integrate_rate(model, imp, 0.0)?))
}

/// `P₀(m) = ½ + ½ e^{−4ε′} e^{−4ε(m−1)}`.
pub fn plme_curve(model: &NoiseModel, imp: &GateImplementation, lengths: &[usize]) -> Result<DecayCurve> {
    validate_lengths(lengths)?;
    let (eps, eps1) = plme_epsilons(model, imp)?;
    Ok(plme_curve_from_epsilons(eps, eps1, lengths, digest_for(Method::Plme2, Some(model), Some(imp.kind()), lengths)))
}

pub fn plme_curve_from_epsilons(eps: f64, eps_prime: f64, lengths: &[usize], digest: String) -> DecayCurve {
    let p0 = lengths.iter().map(|&m| 0.5 + 0.5 * (-4.0 * eps_prime - 4.0 * eps * (m as f64 - 1.0)).exp()).collect();
    DecayCurve::analytic(lengths, p0, Method::Plme2, digest)
}

/// `P₀(m) = ½ + ½ e^{−4γm/3}`.
pub fn markov_exact_curve(gamma: f64, lengths: &[usize]) -> Result<DecayCurve> {
    if !(gamma >= 0.0 && gamma.is_finite()) {
        return invalid(format!("γ must be non-negative, got {gamma}"));
    }
    validate_lengths(lengths)?;
    let p0 = lengths.iter().map(|&m| 0.5 + 0.5 * (-4.0 * gamma * m as f64 / 3.0).exp()).collect();
    let model = NoiseModel::White { gamma };
    Ok(DecayCurve::analytic(lengths, p0, Method::MarkovExact, digest_for(Method::MarkovExact, Some(&model), None, lengths)))
}

/// `P₀(m) = ½ + ½ (1 + (8/3)σ²(m F_curr + (m−1) F_prev))^{−1/2}`.
pub fn quasistatic_exact_curve(sigma: f64, imp: &GateImplementation, lengths: &[usize]) -> Result<DecayCurve> {
    if !(sigma >= 0.0 && sigma.is_finite()) {
        return invalid(format!("σ must be non-negative, got {sigma}"));
    }
    validate_lengths(lengths)?;
    let f = f_coefficients(imp.kind());
    let s2 = sigma * sigma;
    let p0 = lengths
        .iter()
        .map(|&m| {
            let m = m as f64;
            0.5 + 0.5 / (1.0 + 8.0 / 3.0 * s2 * (m * f.f_curr + (m - 1.0) * f.f_prev)).sqrt()
        })
        .collect();
    let model = NoiseModel::Quasistatic { sigma };
    Ok(DecayCurve::analytic(
        lengths,
        p0,
        Method::QuasistaticExact,
        digest_for(Method::QuasistaticExact, Some(&model), Some(imp.kind()), lengths),
    ))
}

/// Which quadratic form couples the coarse-grained phases.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CoarseForm {
    /// `F_curr` on the diagonal, `F_prev/2` on the first off-diagonals.
    Tridiagonal,
    /// `diag(F_curr, F_curr + F_prev, …)`.
    Renormalized,
}

/// The `m × m` matrix `F` of the coarse-grained quadratic form.
pub fn coarse_f_matrix(f_curr: f64, f_prev: f64, m: usize, form: CoarseForm) -> Matrix {
    Matrix::from_fn(m, |i, j| match form {
        CoarseForm::Tridiagonal if i == j => f_curr,
        CoarseForm::Tridiagonal if i.abs_diff(j) == 1 => 0.5 * f_prev,
        CoarseForm::Renormalized if i == j && i == 0 => f_curr,
        CoarseForm::Renormalized if i == j => f_curr + f_prev,
        _ => 0.0,
    })
}

/// `ln det(𝟙 + (8/3) Σ F)`; errors if the determinant is not positive.
pub fn coarse_log_det(sigma: &Matrix, f: &Matrix) -> Result<f64> {
    let n = sigma.dim();
    let sf = sigma.mul(f);
    let a = Matrix::from_fn(n, |i, j| (if i == j { 1.0 } else { 0.0 }) + 8.0 / 3.0 * sf[(i, j)]);
    let (sign, log) = Lu::factor(a)?.log_det();
    if sign <= 0.0 {
        return Err(Error::Numerical(format!("det(1 + (8/3)ΣF) is not positive for m = {n}")));
    }
    Ok(log)
}

/// `ln det(𝟙 + (8/3) Σ_m F_m)` for every `m = 1..=m_max`, where `Σ` is the
/// Toeplitz matrix with first row `row` (at least `m_max + 1` entries) and
/// `F` is symmetric tridiagonal with diagonal `diag(i)` and off-diagonal `off`.
///
/// With the Cholesky factor `F = LLᵀ` (lower bidiagonal, the same for every
/// prefix) the determinant equals `det(𝟙 + c LᵀΣL)`. Growing `m` by one only
/// changes the last row and column of that matrix, so a Cholesky factor of the
/// untruncated leading block is extended step by step and each `m` costs one
/// pair of triangular solves.
pub fn coarse_log_dets(row: &[f64], diag: impl Fn(usize) -> f64, off: f64, m_max: usize) -> Result<Vec<f64>> {
    if row.len() < m_max + 1 {
        return Err(Error::Internal("covariance row is too short".into()));
    }
    let c = 8.0 / 3.0;
    let sigma = |a: usize, b: usize| row[a.abs_diff(b)];
    // bidiagonal Cholesky factor of F
    let mut ld = Vec::with_capacity(m_max + 1);
    let mut ls = Vec::with_capacity(m_max + 1);
    for i in 0..=m_max {
        let d2 = if i == 0 { diag(0) } else { diag(i) - ls[i - 1] * ls[i - 1] };
        if !(d2 > 0.0) {
            return Err(Error::Numerical(format!("F is not positive definite at index {i}")));
        }
        let d = f64::sqrt(d2);
        ld.push(d);
        ls.push(off / d);
    }
    // (ΣL)_{a,j} with the column either complete or cut at the last index
    let col_full = |a: usize, j: usize| sigma(a, j) * ld[j] + sigma(a, j + 1) * ls[j];
    let col_cut = |a: usize, j: usize| sigma(a, j) * ld[j];

    let mut chol: Vec<Vec<f64>> = Vec::with_capacity(m_max);
    let mut log_prefix = 0.0;
    let mut out = Vec::with_capacity(m_max);
    let mut u_cut = Vec::with_capacity(m_max);
    let mut u_full = Vec::with_capacity(m_max);
    for k in 0..m_max {
        u_cut.clear();
        u_full.clear();
        for i in 0..k {
            u_cut.push(c * (ld[i] * col_cut(i, k) + ls[i] * col_cut(i + 1, k)));
            u_full.push(c * (ld[i] * col_full(i, k) + ls[i] * col_full(i + 1, k)));
        }
        let beta_cut = 1.0 + c * ld[k] * col_cut(k, k);
        let beta_full = 1.0 + c * (ld[k] * col_full(k, k) + ls[k] * col_full(k + 1, k));
        // forward substitution with both right-hand sides
        for i in 0..k {
            let r = &chol[i];
            let (mut a, mut b) = (u_cut[i], u_full[i]);
            for j in 0..i {
                a -= r[j] * u_cut[j];
                b -= r[j] * u_full[j];
            }
            u_cut[i] = a / r[i];
            u_full[i] = b / r[i];
        }
        let schur_cut = beta_cut - u_cut.iter().map(|y| y * y).sum::<f64>();
        let schur_full = beta_full - u_full.iter().map(|y| y * y).sum::<f64>();
        if !(schur_cut > 0.0 && schur_full > 0.0) {
            return Err(Error::Numerical(format!("det(1 + (8/3)ΣF) is not positive for m = {}", k + 1)));
        }
        out.push(log_prefix + schur_cut.ln());
        log_prefix += schur_full.ln();
        let mut new_row = u_full.clone();
        new_row.push(schur_full.sqrt());
        chol.push(new_row);
    }
    Ok(out)
}

fn coarse_curve_with(
    model: &NoiseModel,
    imp: &GateImplementation,
    lengths: &[usize],
    f_curr: f64,
    f_prev: f64,
    form: CoarseForm,
) -> Result<DecayCurve> {
    validate_lengths(lengths)?;
    if model.white_weight().is_some() && !model.is_zero() {
        return invalid("the coarse-grained formula needs a finite S(0); white noise has none");
    }
    let m_max = *lengths.last().unwrap();
    let row = coarse_covariance_row(model, m_max + 1)?;
    let log_dets = match form {
        CoarseForm::Tridiagonal => coarse_log_dets(&row, |_| f_curr, 0.5 * f_prev, m_max)?,
        CoarseForm::Renormalized => {
            coarse_log_dets(&row, |i| if i == 0 { f_curr } else { f_curr + f_prev }, 0.0, m_max)?
        }
    };
    let p0 = lengths.iter().map(|&m| 0.5 + 0.5 * (-0.5 * log_dets[m - 1]).exp()).collect();
    let method = match form {
        CoarseForm::Tridiagonal => Method::Coarse,
        CoarseForm::Renormalized => Method::CoarseRenormalized,
    };
    Ok(DecayCurve::analytic(lengths, p0, method, digest_for(method, Some(model), Some(imp.kind()), lengths)))
}

/// `P₀(m) = ½ + ½ det(𝟙 + (8/3)ΣF)^{−1/2}` with the tridiagonal `F`.
pub fn coarse_curve(model: &NoiseModel, imp: &GateImplementation, lengths: &[usize]) -> Result<DecayCurve> {
    let f = f_coefficients(imp.kind());
    coarse_curve_with(model, imp, lengths, f.f_curr, f.f_prev, CoarseForm::Tridiagonal)
}

/// As [`coarse_curve`] with the diagonal, renormalized `F`.
pub fn coarse_curve_renormalized(model: &NoiseModel, imp: &GateImplementation, lengths: &[usize]) -> Result<DecayCurve> {
    let f = f_coefficients(imp.kind());
    coarse_curve_with(model, imp, lengths, f.f_curr, f.f_prev, CoarseForm::Renormalized)
}

/// [`coarse_curve`] with caller-supplied F coefficients.
pub fn coarse_curve_with_f(
    model: &NoiseModel,
    imp: &GateImplementation,
    lengths: &[usize],
    f_curr: f64,
    f_prev: f64,
) -> Result<DecayCurve> {
    coarse_curve_with(model, imp, lengths, f_curr, f_prev, CoarseForm::Tridiagonal)
}

pub fn agf_summary(model: &NoiseModel, imp: &GateImplementation) -> Result<RateSummary> {
    let (epsilon, epsilon_prime) = plme_epsilons(model, imp)?;
    Ok(RateSummary {
        epsilon,
        epsilon_prime,
        agf: 0.5 * ((-4.0 * epsilon_prime).exp() + 1.0),
        agf_rb_estimate: 0.5 * ((-4.0 * epsilon).exp() + 1.0),
    })
}

/// Weak-noise size of the PLME expansion parameter: the integrated
/// correlation `∫₀^{τ} S(u) du` over one correlation time. OU gives `σ²τ_c`,
/// white noise `γ/2`, quasistatic noise `∞` (unless zero); for 1/f noise the
/// correlation time is taken as `1/ω_l`.
pub fn weak_noise_metric(model: &NoiseModel) -> f64 {
    if model.is_zero() {
        return 0.0;
    }
    match *model {
        NoiseModel::Ou { sigma, tau_c } => sigma * sigma * tau_c,
        NoiseModel::White { gamma } => 0.5 * gamma,
        NoiseModel::Quasistatic { .. } => f64::INFINITY,
        NoiseModel::OneOverF { omega_low, .. } => model.first_antiderivative(1.0 / omega_low),
    }
}

/// Thresholds for [`select_method`].
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MethodThresholds {
    /// Coarse graining is trusted below this value of the validity metric.
    pub coarse_validity: f64,
    /// The PLME is trusted below this value of [`weak_noise_metric`].
    pub weak_noise: f64,
}

impl Default for MethodThresholds {
    fn default() -> Self {
        MethodThresholds { coarse_validity: 0.05, weak_noise: 0.01 }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MethodSelection {
    pub method: Method,
    pub coarse_validity: f64,
    pub weak_noise: f64,
    /// Set when neither regime criterion holds.
    pub warning: bool,
}

/// Picks the PLME when the noise is weak, else the coarse-grained formula
/// when the noise is slow; with neither, the smaller relative violation wins
/// and the warning flag is raised.
pub fn select_method(model: &NoiseModel, thresholds: &MethodThresholds) -> Result<MethodSelection> {
    let validity = coarse_grain_validity(model)?;
    let weak = weak_noise_metric(model);
    let plme_ok = weak < thresholds.weak_noise;
    let coarse_ok = validity < thresholds.coarse_validity;
    let (method, warning) = match (plme_ok, coarse_ok) {
        (true, _) => (Method::Plme2, false),
        (false, true) => (Method::Coarse, false),
        (false, false) => {
            if weak / thresholds.weak_noise <= validity / thresholds.coarse_validity {
                (Method::Plme2, true)
            } else {
                (Method::Coarse, true)
            }
        }
    };
    Ok(MethodSelection { method, coarse_validity: validity, weak_noise: weak, warning })
}

/// The curve from whichever method [`select_method`] picks.
pub fn auto_curve(
    model: &NoiseModel,
    imp: &GateImplementation,
    lengths: &[usize],
    thresholds: &MethodThresholds,
) -> Result<(DecayCurve, MethodSelection)> {
    let sel = select_method(model, thresholds)?;
    let curve = match sel.method {
        Method::Coarse => coarse_curve(model, imp, lengths)?,
        _ => plme_curve(model, imp, lengths)?,
    };
    Ok((curve, sel))
}

/// `ε` and `ε′` for OU noise at one correlation time, together with the
/// white-noise value `ε_ref = 2γ₀/3` at the same `γ₀`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EpsilonPoint {
    pub tau_c: f64,
    pub epsilon: f64,
    pub epsilon_prime: f64,
    pub epsilon_ref: f64,
}

/// `ε` in the `τ_c → 0` limit at fixed `γ₀`: white noise with `γ = 2γ₀`.
pub fn epsilon_reference(imp: &GateImplementation, gamma0: f64) -> Result<f64> {
    Ok(plme_epsilons(&NoiseModel::White { gamma: crate::noise::white_rate_for_gamma0(gamma0) }, imp)?.0)
}

/// `ε(τ_c)` and `ε′(τ_c)` for OU noise calibrated to a fixed `γ₀`.
pub fn epsilon_sweep(imp: &GateImplementation, gamma0: f64, tau_cs: &[f64]) -> Result<Vec<EpsilonPoint>> {
    let epsilon_ref = epsilon_reference(imp, gamma0)?;
    tau_cs
        .iter()
        .map(|&tau_c| {
            let model = NoiseModel::ou_from_gamma0(tau_c, gamma0)?;
            let (epsilon, epsilon_prime) = plme_epsilons(&model, imp)?;
            Ok(EpsilonPoint { tau_c, epsilon, epsilon_prime, epsilon_ref })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gates::gate_implementation;
    use crate::noise::calibrate_sigma_for_gamma0;
    use crate::quadrature::GaussRule;
    use crate::noise::NoiseKind;

    fn imp(kind: GateKind) -> &'static GateImplementation {
        gate_implementation(kind)
    }

    #[test]
    fn white_rate_is_a_third_of_gamma() {
        let m = NoiseModel::White { gamma: 0.3 };
        for kind in GateKind::ALL {
            for t in [0.0, 0.2, 0.5, 1.0, 1.7, 3.25] {
                assert!((plme_rate(&m, imp(kind), t).unwrap() - 0.1).abs() < 1e-14);
            }
            let (e, e1) = plme_epsilons(&m, imp(kind)).unwrap();
            assert!((e - 0.1).abs() < 1e-14 && (e1 - 0.1).abs() < 1e-14);
        }
    }

    #[test]
    fn zero_noise_gives_flat_curves() {
        let z = NoiseModel::Ou { sigma: 0.0, tau_c: 1.0 };
        assert_eq!(plme_rate(&z, imp(GateKind::Zsx), 1.3).unwrap(), 0.0);
        assert_eq!(plme_epsilons(&z, imp(GateKind::U3)).unwrap(), (0.0, 0.0));
        let c = plme_curve(&z, imp(GateKind::Zsx), &[1, 5, 50]).unwrap();
        assert!(c.p0.iter().all(|&p| p == 1.0));
        let c = coarse_curve(&z, imp(GateKind::Zsx), &[1, 5, 50]).unwrap();
        assert!(c.p0.iter().all(|&p| p == 1.0));
        let s = agf_summary(&z, imp(GateKind::U3)).unwrap();
        assert_eq!((s.agf, s.agf_rb_estimate), (1.0, 1.0));
        let c = markov_exact_curve(0.0, &[1, 2]).unwrap();
        assert!(c.p0.iter().all(|&p| p == 1.0));
    }

    #[test]
    fn markov_example() {
        let c = markov_exact_curve(0.75, &[1]).unwrap();
        assert!((c.p0[0] - (0.5 + 0.5 * (-1.0f64).exp())).abs() < 1e-15);
        assert!((c.p0[0] - 0.6839).abs() < 1e-4);
        let c = markov_exact_curve(0.75, &[400]).unwrap();
        assert!((c.p0[0] - 0.5).abs() < 1e-100);
    }

    #[test]
    fn quasistatic_examples() {
        let sigma = (3.0f64 / 8.0).sqrt();
        let c = quasistatic_exact_curve(sigma, imp(GateKind::Instant), &[1]).unwrap();
        assert!((c.p0[0] - (0.5 + 0.5 / 2f64.sqrt())).abs() < 1e-12);
        // power-law tail: (P₀ − ½)√m tends to a constant
        let c = quasistatic_exact_curve(0.1, imp(GateKind::Zsx), &[100_000, 400_000]).unwrap();
        let ratio = (c.p0[0] - 0.5) / (c.p0[1] - 0.5);
        assert!((ratio - 2.0).abs() < 2e-3);
    }

    #[test]
    fn coarse_matches_quasistatic_closed_form() {
        let lengths: Vec<usize> = (1..=256).collect();
        for kind in GateKind::ALL {
            for sigma in [0.05, 0.3] {
                let a = coarse_curve(&NoiseModel::Quasistatic { sigma }, imp(kind), &lengths).unwrap();
                let b = quasistatic_exact_curve(sigma, imp(kind), &lengths).unwrap();
                for (x, y) in a.p0.iter().zip(&b.p0) {
                    assert!(((x - y) / y).abs() < 1e-10, "{kind}: {x} vs {y}");
                }
                let r = coarse_curve_renormalized(&NoiseModel::Quasistatic { sigma }, imp(kind), &lengths).unwrap();
                assert!(r.max_abs_diff(&a) < 1e-12);
            }
        }
    }

    #[test]
    fn incremental_determinants_match_lu() {
        use crate::noise::coarse_covariance;
        for model in [
            NoiseModel::Ou { sigma: 0.3, tau_c: 4.0 },
            NoiseModel::Quasistatic { sigma: 0.4 },
            NoiseModel::OneOverF { lambda: 0.15, omega_low: 1e-3, omega_high: 1e4 },
        ] {
            for (fc, fp) in [(0.6079, 0.2026), (0.7495, 0.5964), (1.0, 0.0)] {
                let m_max = 40;
                let row = crate::noise::coarse_covariance_row(&model, m_max + 1).unwrap();
                let tri = coarse_log_dets(&row, |_| fc, 0.5 * fp, m_max).unwrap();
                let ren = coarse_log_dets(&row, |i| if i == 0 { fc } else { fc + fp }, 0.0, m_max).unwrap();
                for m in [1, 2, 3, 7, 20, 40] {
                    let sigma = coarse_covariance(&model, m).unwrap().matrix;
                    for (form, got) in [(CoarseForm::Tridiagonal, tri[m - 1]), (CoarseForm::Renormalized, ren[m - 1])] {
                        let lu = coarse_log_det(&sigma, &coarse_f_matrix(fc, fp, m, form)).unwrap();
                        assert!((got - lu).abs() < 1e-11 * lu.abs().max(1.0), "{model:?} m={m}: {got} vs {lu}");
                    }
                }
            }
        }
    }

    #[test]
    fn coarse_single_gate_is_scalar() {
        let m = NoiseModel::Ou { sigma: 0.2, tau_c: 5.0 };
        let c = coarse_curve(&m, imp(GateKind::U3), &[1]).unwrap();
        let s00 = crate::noise::coarse_covariance(&m, 1).unwrap().get(0, 0);
        let f = f_coefficients(GateKind::U3).f_curr;
        assert!((c.p0[0] - (0.5 + 0.5 / (1.0 + 8.0 / 3.0 * s00 * f).sqrt())).abs() < 1e-15);
    }

    #[test]
    fn instant_renormalized_is_identical() {
        let m = NoiseModel::Ou { sigma: 0.05, tau_c: 20.0 };
        let l = [1, 3, 10, 40];
        let a = coarse_curve(&m, imp(GateKind::Instant), &l).unwrap();
        let b = coarse_curve_renormalized(&m, imp(GateKind::Instant), &l).unwrap();
        assert_eq!(a.p0, b.p0);
    }

    #[test]
    fn renormalized_is_close_for_long_correlations() {
        let m = NoiseModel::Ou { sigma: 0.05, tau_c: 100.0 };
        let l: Vec<usize> = (1..=200).collect();
        let a = coarse_curve(&m, imp(GateKind::Zsx), &l).unwrap();
        let b = coarse_curve_renormalized(&m, imp(GateKind::Zsx), &l).unwrap();
        assert!(a.max_abs_diff(&b) < 1e-3);
    }

    #[test]
    fn plme_rate_is_periodic_after_first_gate() {
        let m = NoiseModel::Ou { sigma: 0.1, tau_c: 0.5 };
        let z = imp(GateKind::Zsx);
        for k in 0..=20 {
            let t = 1.0 + k as f64 / 20.0 * 0.999;
            let a = plme_rate(&m, z, t).unwrap();
            let b = plme_rate(&m, z, t + 1.0).unwrap();
            assert!((a - b).abs() < 1e-8 * a.abs().max(1e-300), "t={t}: {a} vs {b}");
        }
    }

    #[test]
    fn plme_rate_matches_direct_quadrature() {
        // independent route: adaptive quadrature straight on the overlap function
        for (model, kind) in [
            (NoiseModel::Ou { sigma: 0.1, tau_c: 0.5 }, GateKind::Zsx),
            (NoiseModel::Ou { sigma: 0.1, tau_c: 0.02 }, GateKind::U3),
            (NoiseModel::OneOverF { lambda: 0.15, omega_low: 0.5, omega_high: 40.0 }, GateKind::Zsx),
            (NoiseModel::Quasistatic { sigma: 0.2 }, GateKind::U3),
        ] {
            let g = imp(kind);
            for t in [0.3f64, 0.75, 1.2, 1.8, 2.6] {
                let lower = (t.floor() - 1.0).max(0.0);
                let mut breaks = vec![t.floor()];
                for k in g.kinks() {
                    breaks.push(t.floor() + k);
                    breaks.push(t.floor() - 1.0 + k);
                }
                let direct = adaptive(
                    |x| model.autocorrelation(t - x).unwrap() * g.overlap(t, x),
                    lower,
                    t,
                    &breaks,
                    1e-12,
                    1e-300,
                )
                .unwrap()
                .value
                    / 3.0;
                let got = plme_rate(&model, g, t).unwrap();
                assert!(((got - direct) / direct).abs() < 1e-9, "{model:?} {kind} t={t}: {got} vs {direct}");
            }
        }
    }

    #[test]
    fn one_over_f_at_high_cutoff_matches_brute_force() {
        // brute force: breakpoints every few periods of the ω_h oscillation
        let g = imp(GateKind::U3);
        for (wl, wh) in [(0.3, 2000.0), (200.0, 2000.0)] {
            let model = NoiseModel::OneOverF { lambda: 0.15, omega_low: wl, omega_high: wh };
            for t in [0.6f64, 1.4] {
                let lower = (t.floor() - 1.0).max(0.0);
                let n = ((t - lower) * 200.0) as usize;
                let mut breaks: Vec<f64> = (1..n).map(|k| t - k as f64 / 200.0).collect();
                breaks.extend([1.0, t - 1e-4, t - 1e-3]);
                breaks.extend(g.kinks().iter().flat_map(|k| [t.floor() + k, t.floor() - 1.0 + k]));
                breaks.sort_by(f64::total_cmp);
                let rule = GaussRule::new(40);
                let direct: f64 = panels(lower, t, &breaks)
                    .into_iter()
                    .map(|(a, b)| rule.integrate(a, b, |x| model.autocorrelation(t - x).unwrap() * g.overlap(t, x)))
                    .sum::<f64>()
                    / 3.0;
                let got = plme_rate(&model, g, t).unwrap();
                assert!(((got - direct) / direct).abs() < 1e-9, "ω_l={wl} t={t}: {got} vs {direct}");
            }
        }
    }

    #[test]
    fn short_correlation_limit_is_markovian() {
        for kind in GateKind::ALL {
            let g = imp(kind);
            let eref = epsilon_reference(g, 2.5e-3).unwrap();
            for tau_c in [1e-3, 1e-4, 1e-5] {
                let m = NoiseModel::ou_from_gamma0(tau_c, 2.5e-3).unwrap();
                let (e, e1) = plme_epsilons(&m, g).unwrap();
                assert!((e / eref - 1.0).abs() < 3.0 * tau_c, "{kind} τ_c={tau_c}: {}", e / eref);
                assert!((e1 / eref - 1.0).abs() < 3.0 * tau_c, "{kind} τ_c={tau_c}: {}", e1 / eref);
            }
        }
    }

    #[test]
    fn instant_epsilon_does_not_depend_on_correlation_time() {
        // f is 2 inside a gate and 0 across gates, so ε = ε′ = (2/3)γ₀ exactly
        let g = imp(GateKind::Instant);
        for tau_c in [0.05, 0.1, 1.0, 10.0] {
            let m = NoiseModel::ou_from_gamma0(tau_c, 2.5e-3).unwrap();
            let (e, e1) = plme_epsilons(&m, g).unwrap();
            assert!((e / (2.0 / 3.0 * 2.5e-3) - 1.0).abs() < 1e-9);
            assert!((e1 / (2.0 / 3.0 * 2.5e-3) - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn instant_quasistatic_limit_has_equal_epsilons() {
        let m = NoiseModel::Ou { sigma: 0.05, tau_c: 1e6 };
        let (e, e1) = plme_epsilons(&m, imp(GateKind::Instant)).unwrap();
        assert!(((e - e1) / e).abs() < 1e-5);
        // and both are σ²F_curr/3
        assert!(((e1 - 0.05f64.powi(2) / 3.0) / e1).abs() < 1e-5);
    }

    #[test]
    fn quasistatic_epsilons_use_f_coefficients() {
        let s = 0.07;
        let m = NoiseModel::Quasistatic { sigma: s };
        for kind in GateKind::ALL {
            let f = f_coefficients(kind);
            let (e, e1) = plme_epsilons(&m, imp(kind)).unwrap();
            assert!((e1 - s * s * f.f_curr / 3.0).abs() < 1e-10 * e1);
            assert!((e - s * s * (f.f_curr + f.f_prev) / 3.0).abs() < 1e-10 * e);
        }
    }

    #[test]
    fn agf_gap_for_correlated_noise() {
        let m = NoiseModel::Ou { sigma: 0.05, tau_c: 0.5 };
        let s = agf_summary(&m, imp(GateKind::Zsx)).unwrap();
        assert!((s.epsilon - s.epsilon_prime).abs() > 1e-6);
        assert!(s.agf != s.agf_rb_estimate);
        let w = agf_summary(&NoiseModel::White { gamma: 0.01 }, imp(GateKind::Zsx)).unwrap();
        assert_eq!(w.agf, w.agf_rb_estimate);
    }

    #[test]
    fn plme_one_gate_point_is_agf() {
        let m = NoiseModel::Ou { sigma: 0.05, tau_c: 2.0 };
        let c = plme_curve(&m, imp(GateKind::U3), &[1, 2]).unwrap();
        let s = agf_summary(&m, imp(GateKind::U3)).unwrap();
        assert!((c.p0[0] - s.agf).abs() < 1e-15);
    }

    #[test]
    fn method_selection_examples() {
        let t = MethodThresholds::default();
        let sel = select_method(&NoiseModel::Ou { sigma: 0.05, tau_c: 0.1 }, &t).unwrap();
        assert_eq!(sel.method, Method::Plme2);
        let sigma = calibrate_sigma_for_gamma0(NoiseKind::Ou, 1000.0, 2.5e-3).unwrap();
        let sel = select_method(&NoiseModel::Ou { sigma, tau_c: 1000.0 }, &t).unwrap();
        assert_eq!(sel.method, Method::Coarse);
        assert!(!sel.warning);
        let sel = select_method(&NoiseModel::Quasistatic { sigma: 0.1 }, &t).unwrap();
        assert_eq!(sel.method, Method::Coarse);
        let sel = select_method(&NoiseModel::Ou { sigma: 1.0, tau_c: 1.0 }, &t).unwrap();
        assert!(sel.warning);
    }

    #[test]
    fn length_validation() {
        assert!(validate_lengths(&[]).is_err());
        assert!(validate_lengths(&[0, 1]).is_err());
        assert!(validate_lengths(&[3, 2]).is_err());
        assert!(validate_lengths(&[1, 2, 10]).is_ok());
        assert!(coarse_curve(&NoiseModel::White { gamma: 0.1 }, imp(GateKind::Zsx), &[1]).is_err());
    }

    #[test]
    fn digests_are_stable_and_distinct() {
        let a = plme_curve(&NoiseModel::White { gamma: 0.1 }, imp(GateKind::Zsx), &[1, 2]).unwrap();
        let b = plme_curve(&NoiseModel::White { gamma: 0.1 }, imp(GateKind::Zsx), &[1, 2]).unwrap();
        let c = plme_curve(&NoiseModel::White { gamma: 0.1 }, imp(GateKind::U3), &[1, 2]).unwrap();
        assert_eq!(a.config_digest, b.config_digest);
        assert_ne!(a.config_digest, c.config_digest);
        assert_eq!(a.config_digest.len(), 64);
    }
}
