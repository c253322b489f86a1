//! Invariant suite: cheap identities that must hold for any correct build.
//!
//! [`ValidationHooks`] inject known faults so the suite itself can be tested.

use num_complex::Complex64 as C64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::Serialize;

use crate::analytic::{coarse_curve_with_f, markov_exact_curve, plme_curve, quasistatic_exact_curve};
use crate::clifford::{clifford_group, second_moment_coefficients, twirl_first_moment, twirl_second_moment_apply};
use crate::cumulant::{factorization_residual, second_cumulant_structure, split_factorization_gap};
use crate::gates::{f_coefficients, gate_implementation, GateKind};
use crate::montecarlo::{run_with, McConfig, RunOptions, SeedScheme};
use crate::noise::NoiseModel;
use crate::pauli::Mat2;
use crate::Result;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CheckResult {
    pub name: String,
    pub passed: bool,
    /// Worst observed deviation.
    pub value: f64,
    pub tolerance: f64,
    pub detail: String,
}

impl CheckResult {
    fn below(name: &str, value: f64, tolerance: f64, detail: impl Into<String>) -> Self {
        CheckResult { name: name.into(), passed: value <= tolerance, value, tolerance, detail: detail.into() }
    }
}

/// Fault injection for the suite's own tests.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct ValidationHooks {
    /// Replaces `(F_curr, F_prev)` in the coarse-determinant path only.
    pub f_override: Option<(f64, f64)>,
    pub seed_scheme: SeedScheme,
}

pub fn random_operator<R: Rng + ?Sized>(rng: &mut R) -> Mat2 {
    let mut c = || C64::new(rng.sample(StandardNormal), rng.sample(StandardNormal));
    Mat2([[c(), c()], [c(), c()]])
}

pub fn random_hermitian<R: Rng + ?Sized>(rng: &mut R) -> Mat2 {
    let a = random_operator(rng);
    (a + a.adjoint()).scale(C64::new(0.5, 0.0))
}

fn check_group() -> CheckResult {
    let g = clifford_group();
    let mut bad = 0usize;
    for a in 0..g.len() {
        if g.mul(a, g.inverse(a)) != 0 {
            bad += 1;
        }
        for b in 0..g.len() {
            let prod = *g.element(a).matrix() * *g.element(b).matrix();
            let expect = g.element(g.mul(a, b)).matrix();
            let phase = (expect.adjoint() * prod).trace() / 2.0;
            if ((prod - expect.scale(phase)).max_abs()) > 1e-12 || (phase.norm() - 1.0).abs() > 1e-12 {
                bad += 1;
            }
        }
    }
    CheckResult::below("clifford closure and inverses", bad as f64, 0.0, format!("{} elements", g.len()))
}

/// `(1/24)Σ g†Og = tr(O)/2 · 𝟙` on `pairs` random operators.
pub fn check_first_moment(pairs: usize, seed: u64) -> CheckResult {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let worst = (0..pairs)
        .map(|_| {
            let o = random_operator(&mut rng);
            let expect = Mat2::identity().scale(o.trace() / 2.0);
            (twirl_first_moment(&o) - expect).max_abs()
        })
        .fold(0.0, f64::max);
    CheckResult::below("twirl first moment", worst, 1e-12, format!("{pairs} random operators"))
}

/// `(1/24)Σ g†O₁g ρ g†O₂g = aρ + b tr(ρ)𝟙` on `pairs` random triples.
pub fn check_second_moment(pairs: usize, seed: u64) -> CheckResult {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let worst = (0..pairs)
        .map(|_| {
            let (o1, o2, rho) = (random_operator(&mut rng), random_operator(&mut rng), random_operator(&mut rng));
            let (a, b) = second_moment_coefficients(&o1, &o2);
            let expect = rho.scale(a) + Mat2::identity().scale(b * rho.trace());
            (twirl_second_moment_apply(&o1, &o2, &rho) - expect).max_abs()
        })
        .fold(0.0, f64::max);
    CheckResult::below("twirl second moment", worst, 1e-12, format!("{pairs} random operator triples"))
}

/// Dissipator coefficient of the second moment equals `f(t₂, t₁)/3`, with no
/// remainder, at `pairs` random time pairs per implementation.
pub fn check_second_cumulant(pairs: usize, seed: u64) -> Result<CheckResult> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst = 0.0f64;
    for kind in GateKind::ALL {
        let imp = gate_implementation(kind);
        for _ in 0..pairs {
            let t1: f64 = rng.random_range(0.0..2.0);
            let t2: f64 = t1 + rng.random_range(0.0..2.0);
            let (c, rest) = second_cumulant_structure(t2, t1, imp)?;
            worst = worst.max((c - imp.overlap(t2, t1) / 3.0).abs()).max(rest);
        }
    }
    Ok(CheckResult::below("second cumulant is f/3 times the dissipator sum", worst, 1e-10, format!("{pairs} pairs per implementation")))
}

/// Third moments factorize across a full idle gate; a split four-time moment
/// does not factorize across adjacent gates.
pub fn check_factorization() -> Result<Vec<CheckResult>> {
    let mut worst = 0.0f64;
    for kind in GateKind::ALL {
        let imp = gate_implementation(kind);
        for &(t3, t2, t1) in &[(2.3, 0.6, 0.2), (3.7, 1.4, 1.1), (2.9, 0.8, 0.5)] {
            worst = worst.max(factorization_residual(t3, t2, t1, imp)?);
        }
    }
    let control = split_factorization_gap(&[0.3, 0.6, 1.2, 1.5], 2, gate_implementation(GateKind::U3))?;
    Ok(vec![
        CheckResult::below("factorization across a full gate", worst, 1e-12, "3 time triples per implementation"),
        CheckResult {
            name: "factorization control (adjacent gates)".into(),
            passed: control > 1e-3,
            value: control,
            tolerance: 1e-3,
            detail: "gap must exceed the tolerance".into(),
        },
    ])
}

/// PLME for white noise against `½ + ½e^{−4γm/3}`.
pub fn check_markov() -> Result<CheckResult> {
    let lengths: Vec<usize> = (1..=1000).collect();
    let mut worst = 0.0f64;
    for gamma in [1e-3, 1e-2, 1e-1] {
        let model = NoiseModel::White { gamma };
        for kind in GateKind::ALL {
            let p = plme_curve(&model, gate_implementation(kind), &lengths)?;
            worst = worst.max(p.max_abs_diff(&markov_exact_curve(gamma, &lengths)?));
        }
    }
    Ok(CheckResult::below("white-noise PLME equals the Markov closed form", worst, 1e-12, "m ≤ 1000, γ ∈ {1e-3, 1e-2, 1e-1}"))
}

/// Coarse determinant with constant noise against the quasistatic closed form.
pub fn check_quasistatic(hooks: &ValidationHooks) -> Result<CheckResult> {
    let lengths: Vec<usize> = (1..=256).collect();
    let mut worst = 0.0f64;
    for sigma in [0.01, 0.05, 0.2] {
        let model = NoiseModel::Quasistatic { sigma };
        for kind in GateKind::ALL {
            let imp = gate_implementation(kind);
            let f = f_coefficients(kind);
            let (fc, fp) = hooks.f_override.unwrap_or((f.f_curr, f.f_prev));
            let coarse = coarse_curve_with_f(&model, imp, &lengths, fc, fp)?;
            let exact = quasistatic_exact_curve(sigma, imp, &lengths)?;
            for (a, b) in coarse.p0.iter().zip(&exact.p0) {
                worst = worst.max((a - b).abs() / b.abs());
            }
        }
    }
    Ok(CheckResult::below("coarse determinant equals the quasistatic closed form", worst, 1e-10, "m ≤ 256, relative"))
}

/// A small Monte Carlo run repeated on 1 and 3 workers must agree bit for bit.
pub fn check_determinism(hooks: &ValidationHooks) -> Result<CheckResult> {
    let model = NoiseModel::Ou { sigma: 0.05, tau_c: 2.0 };
    let mut config = McConfig::desk(model, GateKind::Zsx, vec![1, 3, 8]);
    config.n_sequences = 48;
    config.n_noise_per_sequence = 2;
    config.substeps_per_gate = 16;
    let run = |workers| run_with(&config, &RunOptions { workers: Some(workers), seed_scheme: hooks.seed_scheme });
    let (a, b) = (run(1)?, run(3)?);
    let differing = a
        .curve
        .p0
        .iter()
        .zip(&b.curve.p0)
        .chain(a.curve.stderr.iter().zip(&b.curve.stderr))
        .filter(|(x, y)| x.to_bits() != y.to_bits())
        .count();
    Ok(CheckResult::below("Monte Carlo independent of worker count", differing as f64, 0.0, "values differing bitwise, 1 vs 3 workers"))
}

/// Runs every check. Errors inside a check become failed rows.
pub fn run_suite(hooks: &ValidationHooks) -> Vec<CheckResult> {
    let failed = |name: &str, e: crate::Error| CheckResult {
        name: name.into(),
        passed: false,
        value: f64::NAN,
        tolerance: 0.0,
        detail: e.to_string(),
    };
    let mut out = vec![check_group(), check_first_moment(100, 1), check_second_moment(100, 2)];
    out.push(check_second_cumulant(20, 3).unwrap_or_else(|e| failed("second cumulant", e)));
    match check_factorization() {
        Ok(rows) => out.extend(rows),
        Err(e) => out.push(failed("factorization", e)),
    }
    out.push(check_markov().unwrap_or_else(|e| failed("markov", e)));
    out.push(check_quasistatic(hooks).unwrap_or_else(|e| failed("quasistatic", e)));
    out.push(check_determinism(hooks).unwrap_or_else(|e| failed("determinism", e)));
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn find<'a>(rows: &'a [CheckResult], prefix: &str) -> &'a CheckResult {
        rows.iter().find(|r| r.name.starts_with(prefix)).unwrap()
    }

    #[test]
    fn clean_build_passes() {
        let rows = run_suite(&ValidationHooks::default());
        for r in &rows {
            assert!(r.passed, "{r:?}");
        }
    }

    #[test]
    fn corrupted_f_breaks_quasistatic_check() {
        let f = f_coefficients(GateKind::Zsx);
        let hooks = ValidationHooks { f_override: Some((f.f_curr * 1.01, f.f_prev)), ..Default::default() };
        assert!(!check_quasistatic(&hooks).unwrap().passed);
        let rows = run_suite(&hooks);
        assert!(!find(&rows, "coarse determinant").passed);
        assert!(find(&rows, "white-noise").passed);
    }

    #[test]
    fn thread_dependent_seeds_break_determinism_check() {
        let hooks = ValidationHooks { seed_scheme: SeedScheme::ThreadDependent, ..Default::default() };
        let r = check_determinism(&hooks).unwrap();
        assert!(!r.passed && r.value > 0.0);
    }
}
