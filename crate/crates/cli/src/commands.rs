use std::path::PathBuf;

use rbsim_core::analytic::{
    auto_curve, coarse_curve, epsilon_sweep, markov_exact_curve, plme_curve, quasistatic_exact_curve, select_method,
    DecayCurve, MethodSelection, MethodThresholds,
};
use rbsim_core::fit::{fit_exponential, fit_tail, initial_rate, loglog_slope, tail_window, ExponentialFit};
use rbsim_core::gates::{compute_f, f_coefficients, gate_implementation, GateKind};
use rbsim_core::montecarlo::{run as run_mc, step_size_audit, McConfig, McResult};
use rbsim_core::noise::NoiseModel;
use rbsim_core::validation::{run_suite, ValidationHooks};
use serde_json::{json, Value};

use crate::config::{Experiment, MethodChoice};
use crate::output::{read_curve_csv, Cell, Sink, Table};
use crate::{CliError, EffectiveConfig};

pub const DEFAULT_OUT_DIR: &str = "rbsim-out";
pub const FIGURE1_GAMMA0: f64 = 2.5e-3;
pub const FIGURE2_GAMMA0: f64 = 6.125e-4;
pub const SM_SIGMA: f64 = 0.05;
pub const SM_TAU_CS: [f64; 4] = [0.5, 2.0, 30.0, 100.0];
pub const ONE_OVER_F_LAMBDA: f64 = 0.15;
pub const ONE_OVER_F_OMEGA_HIGH: f64 = 1e4;
pub const SM_OMEGA_LOWS: [f64; 2] = [1e-3, 3.0];
/// Agreement flagged as exact in the smoke panel: unitarity round-off only.
pub const EXACT_TOL: f64 = 1e-12;
pub const MC_LENGTHS: [usize; 13] = [1, 2, 3, 4, 6, 8, 11, 16, 23, 32, 45, 64, 100];

pub fn dispatch(cfg: &EffectiveConfig) -> Result<Vec<PathBuf>, CliError> {
    match cfg.experiment {
        Experiment::Validate => return validate(cfg),
        Experiment::Curve => curve(cfg, &mut sink(cfg)?),
        Experiment::Fcoef => fcoef(cfg, &mut sink(cfg)?),
        Experiment::Fit => fit(cfg, &mut sink(cfg)?),
        Experiment::Compare => compare(cfg, &mut sink(cfg)?),
        Experiment::Figure1 => figure1(cfg, &mut sink(cfg)?),
        Experiment::Figure2 => figure2(cfg, &mut sink(cfg)?),
        Experiment::SmValidation => sm_validation(cfg, &mut sink(cfg)?),
        Experiment::OneOverF => one_over_f(cfg, &mut sink(cfg)?),
    }
}

fn sink(cfg: &EffectiveConfig) -> Result<Sink, CliError> {
    let dir = cfg.run.output_path.clone().unwrap_or_else(|| PathBuf::from(DEFAULT_OUT_DIR));
    Sink::new(dir, cfg.digest())
}

fn thresholds(cfg: &EffectiveConfig) -> MethodThresholds {
    cfg.run.thresholds.unwrap_or_default()
}

fn as_f64(lengths: &[usize]) -> Vec<f64> {
    lengths.iter().map(|&m| m as f64).collect()
}

fn json_of<T: serde::Serialize>(v: &T) -> Value {
    serde_json::to_value(v).unwrap_or(Value::Null)
}

/// Columns `m, t_over_tg, p0, stderr, method`.
pub fn curve_table(curve: &DecayCurve) -> Table {
    let mut t = Table::new(&["m", "t_over_tg", "p0", "stderr", "method"]);
    for i in 0..curve.len() {
        let m = curve.lengths[i];
        t.push(vec![m.into(), (m as f64).into(), curve.p0[i].into(), curve.stderr[i].into(), curve.method.name().into()]);
    }
    t
}

fn mc_summary(result: &McResult, config: &McConfig) -> Value {
    json!({
        "mc_config": config,
        "max_unitarity_error": result.max_unitarity_error,
        "warnings": result.warnings,
        "convergence_ratios": result.convergence_ratios(),
    })
}

fn fit_summary(curve: &DecayCurve, tail_fraction: f64) -> Value {
    let x = as_f64(&curve.lengths);
    let stderr = curve.stderr.iter().any(|&s| s > 0.0).then_some(curve.stderr.as_slice());
    let window = tail_window(x.len(), tail_fraction);
    let tail = fit_tail(&x, &curve.p0, stderr, tail_fraction);
    let head = if x.len() >= 2 { initial_rate(&x, &curve.p0).ok() } else { None };
    json!({
        "tail_fraction": tail_fraction,
        "window": [x.get(window.start), x.get(window.end.saturating_sub(1))],
        "tail_fit": tail.as_ref().ok(),
        "tail_fit_error": tail.as_ref().err().map(|e| e.to_string()),
        "gamma_inf": tail.as_ref().ok().map(|f| f.gamma),
        "gamma_inf_stderr": tail.as_ref().ok().map(|f| f.gamma_stderr()),
        "gamma_initial": head,
    })
}

/// The curve requested by `method`, with a JSON summary of how it was made.
fn compute_curve(cfg: &EffectiveConfig, lengths: &[usize]) -> Result<(DecayCurve, Value), CliError> {
    let model = cfg.run.noise_required()?;
    let kind = cfg.run.implementation();
    let imp = gate_implementation(kind);
    Ok(match cfg.run.method {
        MethodChoice::Auto => {
            let (c, sel) = auto_curve(&model, imp, lengths, &thresholds(cfg))?;
            (c, json!({ "selection": sel }))
        }
        MethodChoice::Plme => (plme_curve(&model, imp, lengths)?, json!({})),
        MethodChoice::Coarse => (coarse_curve(&model, imp, lengths)?, json!({})),
        MethodChoice::Markov => match model {
            NoiseModel::White { gamma } => (markov_exact_curve(gamma, lengths)?, json!({})),
            _ => return Err(CliError::Config("method `markov` needs white noise".into())),
        },
        MethodChoice::Quasistatic => match model {
            NoiseModel::Quasistatic { sigma } => (quasistatic_exact_curve(sigma, imp, lengths)?, json!({})),
            _ => return Err(CliError::Config("method `quasistatic` needs quasistatic noise".into())),
        },
        MethodChoice::Mc => {
            let config = cfg.run.mc_config(model, kind, lengths.to_vec(), cfg.full_scale)?;
            let result = run_mc(&config)?;
            let audit = step_size_audit(&config)?;
            let mut summary = mc_summary(&result, &config);
            summary["step_size_audit"] = json_of(&audit);
            (result.curve, summary)
        }
    })
}

fn curve(cfg: &EffectiveConfig, sink: &mut Sink) -> Result<Vec<PathBuf>, CliError> {
    let lengths = cfg.run.lengths_or(|| (1..=100).collect())?;
    let (curve, mut extra) = compute_curve(cfg, &lengths)?;
    sink.csv("curve.csv", &curve_table(&curve))?;
    extra["method"] = json!(curve.method);
    extra["curve_digest"] = json!(curve.config_digest);
    extra["f_coefficients"] = f_json(cfg.run.implementation());
    if let Some(f) = &cfg.run.fit {
        extra["fit"] = fit_summary(&curve, f.tail_fraction);
    }
    sink.sidecar("curve.json", "curve", &cfg, extra)?;
    Ok(sink.written.clone())
}

fn f_json(kind: GateKind) -> Value {
    let f = f_coefficients(kind);
    json!({
        "implementation": kind,
        "f_curr": f.f_curr,
        "f_prev": f.f_prev,
        "quad_points": f.quad_points,
        "quadrature_error_estimate": f.quadrature_error_estimate,
    })
}

fn fcoef(cfg: &EffectiveConfig, sink: &mut Sink) -> Result<Vec<PathBuf>, CliError> {
    let kinds: Vec<GateKind> = match cfg.run.implementation {
        Some(k) => vec![k],
        None => GateKind::ALL.to_vec(),
    };
    let q = cfg.run.quad_points.unwrap_or(32);
    let mut t = Table::new(&["implementation", "f_curr", "f_prev", "quad_points", "richardson_estimate", "converged"]);
    for k in kinds {
        let f = compute_f(gate_implementation(k), q)?;
        t.push(vec![
            k.name().into(),
            f.f_curr.into(),
            f.f_prev.into(),
            q.into(),
            f.quadrature_error_estimate.into(),
            f.converged.into(),
        ]);
    }
    sink.csv("fcoef.csv", &t)?;
    sink.sidecar("fcoef.json", "fcoef", &cfg, json!({}))?;
    Ok(sink.written.clone())
}

fn fit(cfg: &EffectiveConfig, sink: &mut Sink) -> Result<Vec<PathBuf>, CliError> {
    let (x, p0, stderr, source) = match &cfg.run.input {
        Some(path) => {
            let (x, p, s) = read_curve_csv(path)?;
            (x, p, s, json!({ "input": path }))
        }
        None => {
            let lengths = cfg.run.lengths_or(|| (1..=100).collect())?;
            let (c, extra) = compute_curve(cfg, &lengths)?;
            let s = c.stderr.iter().any(|&v| v > 0.0).then(|| c.stderr.clone());
            (as_f64(&c.lengths), c.p0, s, extra)
        }
    };
    let fraction = cfg.run.fit.as_ref().map_or(rbsim_core::fit::DEFAULT_TAIL_FRACTION, |f| f.tail_fraction);
    let window = tail_window(x.len(), fraction);
    let tail: ExponentialFit = fit_tail(&x, &p0, stderr.as_deref(), fraction)?;
    let head = initial_rate(&x, &p0).ok();
    let mut t = Table::new(&["quantity", "value"]);
    let rows: [(&str, Cell); 9] = [
        ("A", tail.a.into()),
        ("B", tail.b.into()),
        ("gamma_inf", tail.gamma.into()),
        ("gamma_inf_stderr", tail.gamma_stderr().into()),
        ("gamma_initial", head.into()),
        ("rms_residual", tail.rms_residual.into()),
        ("window_min", x[window.start].into()),
        ("window_max", x[window.end - 1].into()),
        ("iterations", tail.iterations.into()),
    ];
    for (k, v) in rows {
        t.push(vec![k.into(), v]);
    }
    sink.csv("fit.csv", &t)?;
    let mut s = Table::new(&["m", "loglog_slope"]);
    if let Ok(slopes) = loglog_slope(&x, &p0, 0.5) {
        for (m, v) in slopes {
            s.push(vec![m.into(), v.into()]);
        }
    }
    sink.csv("slopes.csv", &s)?;
    sink.sidecar("fit.json", "fit", &cfg, json!({ "source": source, "tail_fit": tail }))?;
    Ok(sink.written.clone())
}

fn z_score(p: f64, s: f64, reference: f64) -> Option<f64> {
    (s > 0.0).then(|| (p - reference) / s)
}

fn max_abs(values: impl Iterator<Item = Option<f64>>) -> Option<f64> {
    values.flatten().map(f64::abs).fold(None, |a, b| Some(a.map_or(b, |a: f64| a.max(b))))
}

fn compare(cfg: &EffectiveConfig, sink: &mut Sink) -> Result<Vec<PathBuf>, CliError> {
    let model = cfg.run.noise_required()?;
    let kind = cfg.run.implementation();
    let imp = gate_implementation(kind);
    let lengths = cfg.run.lengths_or(|| MC_LENGTHS.to_vec())?;
    let plme = plme_curve(&model, imp, &lengths)?;
    let coarse = coarse_curve(&model, imp, &lengths)?;
    let selection = select_method(&model, &thresholds(cfg))?;
    let with_mc = cfg.run.method == MethodChoice::Mc || cfg.run.mc.is_some();
    let mut extra = json!({ "selection": selection, "f_coefficients": f_json(kind) });
    let mc = if with_mc {
        let config = cfg.run.mc_config(model, kind, lengths.clone(), cfg.full_scale)?;
        let r = run_mc(&config)?;
        extra["mc"] = mc_summary(&r, &config);
        Some(r.curve)
    } else {
        None
    };
    let mut t = Table::new(&["m", "t_over_tg", "plme", "coarse", "mc", "mc_stderr", "z_plme", "z_coarse"]);
    let mut zp = Vec::new();
    let mut zc = Vec::new();
    for (i, &m) in lengths.iter().enumerate() {
        let (p, s) = mc.as_ref().map_or((None, None), |c| (Some(c.p0[i]), Some(c.stderr[i])));
        let z1 = p.zip(s).and_then(|(p, s)| z_score(p, s, plme.p0[i]));
        let z2 = p.zip(s).and_then(|(p, s)| z_score(p, s, coarse.p0[i]));
        zp.push(z1);
        zc.push(z2);
        t.push(vec![m.into(), (m as f64).into(), plme.p0[i].into(), coarse.p0[i].into(), p.into(), s.into(), z1.into(), z2.into()]);
    }
    extra["max_abs_z_plme"] = json!(max_abs(zp.into_iter()));
    extra["max_abs_z_coarse"] = json!(max_abs(zc.into_iter()));
    sink.csv("compare.csv", &t)?;
    sink.sidecar("compare.json", "compare", &cfg, extra)?;
    Ok(sink.written.clone())
}

fn validate(cfg: &EffectiveConfig) -> Result<Vec<PathBuf>, CliError> {
    let rows = run_suite(&ValidationHooks::default());
    println!("{:<6} {:<55} {:>10} {:>10}", "status", "check", "value", "tolerance");
    for r in &rows {
        println!(
            "{:<6} {:<55} {:>10.2e} {:>10.1e}",
            if r.passed { "PASS" } else { "FAIL" },
            r.name,
            r.value,
            r.tolerance
        );
    }
    let mut written = Vec::new();
    if cfg.run.output_path.is_some() {
        let mut s = sink(cfg)?;
        let mut t = Table::new(&["check", "passed", "value", "tolerance", "detail"]);
        for r in &rows {
            t.push(vec![r.name.clone().into(), r.passed.into(), r.value.into(), r.tolerance.into(), r.detail.clone().into()]);
        }
        s.csv("validate.csv", &t)?;
        written = s.written;
    }
    let failed: Vec<&str> = rows.iter().filter(|r| !r.passed).map(|r| r.name.as_str()).collect();
    if failed.is_empty() {
        Ok(written)
    } else {
        Err(CliError::Validation(failed.join(", ")))
    }
}

/// `n` log-spaced points on `[lo, hi]`.
pub fn log_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    let (a, b) = (lo.ln(), hi.ln());
    (0..n).map(|i| (a + (b - a) * i as f64 / (n - 1) as f64).exp()).collect()
}

fn figure1(cfg: &EffectiveConfig, sink: &mut Sink) -> Result<Vec<PathBuf>, CliError> {
    let gamma0 = cfg.run.gamma0.unwrap_or(FIGURE1_GAMMA0);
    let taus = cfg.run.tau_cs.clone().unwrap_or_else(|| log_grid(0.03, 30.0, 19));
    let kinds: Vec<GateKind> = cfg.run.implementation.map_or(GateKind::ALL.to_vec(), |k| vec![k]);
    let mut t = Table::new(&[
        "implementation",
        "tau_c",
        "epsilon_over_ref",
        "epsilon_prime_over_ref",
        "epsilon",
        "epsilon_prime",
        "epsilon_ref",
    ]);
    for k in kinds {
        for p in epsilon_sweep(gate_implementation(k), gamma0, &taus)? {
            t.push(vec![
                k.name().into(),
                p.tau_c.into(),
                (p.epsilon / p.epsilon_ref).into(),
                (p.epsilon_prime / p.epsilon_ref).into(),
                p.epsilon.into(),
                p.epsilon_prime.into(),
                p.epsilon_ref.into(),
            ]);
        }
    }
    sink.csv("figure1.csv", &t)?;
    let extra = json!({
        "gamma0": gamma0,
        "normalization": "epsilon_ref is epsilon for white noise with the same gamma0, the tau_c -> 0 limit; it equals 2*gamma0/3",
    });
    sink.sidecar("figure1.json", "figure1", &cfg, extra)?;
    Ok(sink.written.clone())
}

fn figure2(cfg: &EffectiveConfig, sink: &mut Sink) -> Result<Vec<PathBuf>, CliError> {
    let gamma0 = cfg.run.gamma0.unwrap_or(FIGURE2_GAMMA0);
    let taus = cfg.run.tau_cs.clone().unwrap_or_else(|| vec![10.0, 30.0, 100.0, 300.0]);
    let kind = cfg.run.implementation();
    let imp = gate_implementation(kind);
    let max_tau = taus.iter().copied().fold(0.0, f64::max);
    let lengths = cfg.run.lengths_or(|| (1..=(6.0 * max_tau).ceil() as usize).collect())?;
    let fraction = cfg.run.fit.as_ref().map_or(rbsim_core::fit::DEFAULT_TAIL_FRACTION, |f| f.tail_fraction);
    let x = as_f64(&lengths);
    let window = tail_window(x.len(), fraction);
    let mut curves = Table::new(&["tau_c", "m", "t_over_tg", "p0"]);
    let mut rates = Table::new(&[
        "tau_c",
        "gamma_inf",
        "gamma_inf_stderr",
        "gamma_initial",
        "a",
        "b",
        "rms_residual",
        "window_min",
        "window_max",
    ]);
    for &tau_c in &taus {
        let model = NoiseModel::ou_from_gamma0(tau_c, gamma0)?;
        let c = coarse_curve(&model, imp, &lengths)?;
        for (m, p) in lengths.iter().zip(&c.p0) {
            curves.push(vec![tau_c.into(), (*m).into(), (*m as f64).into(), (*p).into()]);
        }
        let f = fit_exponential(&x[window.clone()], &c.p0[window.clone()], None)?;
        rates.push(vec![
            tau_c.into(),
            f.gamma.into(),
            f.gamma_stderr().into(),
            initial_rate(&x, &c.p0).ok().into(),
            f.a.into(),
            f.b.into(),
            f.rms_residual.into(),
            x[window.start].into(),
            x[window.end - 1].into(),
        ]);
    }
    sink.csv("figure2_curves.csv", &curves)?;
    sink.csv("figure2_rates.csv", &rates)?;
    sink.sidecar("figure2.json", "figure2", &cfg, json!({ "gamma0": gamma0, "implementation": kind, "tail_fraction": fraction }))?;
    Ok(sink.written.clone())
}

struct Panel {
    name: String,
    model: NoiseModel,
    perfect_first_gate: bool,
}

/// Sequence counts at which the running mean is reported.
fn convergence_points(n: usize) -> Vec<usize> {
    let mut v: Vec<usize> = (0..)
        .map(|k| [1, 2, 5][k % 3] * 10usize.pow((k / 3) as u32))
        .take_while(|&c| c < n)
        .collect();
    v.push(n);
    v
}

fn sm_validation(cfg: &EffectiveConfig, sink: &mut Sink) -> Result<Vec<PathBuf>, CliError> {
    let kind = cfg.run.implementation();
    let imp = gate_implementation(kind);
    let sigma = cfg.run.sigma.unwrap_or(SM_SIGMA);
    let taus = cfg.run.tau_cs.clone().unwrap_or_else(|| SM_TAU_CS.to_vec());
    let omegas = cfg.run.omega_lows.clone().unwrap_or_else(|| SM_OMEGA_LOWS.to_vec());
    let lambda = cfg.run.lambda.unwrap_or(ONE_OVER_F_LAMBDA);
    let omega_high = cfg.run.omega_high.unwrap_or(ONE_OVER_F_OMEGA_HIGH);
    let lengths = cfg.run.lengths_or(|| MC_LENGTHS.to_vec())?;

    let mut panels = vec![Panel { name: "zero_noise".into(), model: NoiseModel::zero(), perfect_first_gate: true }];
    for &tau_c in &taus {
        panels.push(Panel { name: format!("ou_tau_{tau_c}"), model: NoiseModel::Ou { sigma, tau_c }, perfect_first_gate: true });
    }
    let pair_tau = taus[0];
    panels.push(Panel {
        name: format!("ou_tau_{pair_tau}_pulsed_first_gate"),
        model: NoiseModel::Ou { sigma, tau_c: pair_tau },
        perfect_first_gate: false,
    });
    for &omega_low in &omegas {
        panels.push(Panel {
            name: format!("one_over_f_wl_{omega_low}"),
            model: NoiseModel::OneOverF { lambda, omega_low, omega_high },
            perfect_first_gate: true,
        });
    }

    let mut rows = Table::new(&["panel", "m", "mc", "mc_stderr", "plme", "coarse", "z_plme", "z_coarse"]);
    let mut summary = Table::new(&["panel", "max_abs_z_plme", "max_abs_z_coarse", "closer", "exact_agreement"]);
    let mut conv = Table::new(&["panel", "m", "sequences", "partial_mean"]);
    let mut fits = Table::new(&["perfect_first_gate", "gamma", "gamma_stderr"]);
    let mut meta = Vec::new();
    for panel in &panels {
        let mut config = cfg.run.mc_config(panel.model, kind, lengths.clone(), cfg.full_scale)?;
        config.perfect_first_gate = panel.perfect_first_gate;
        let r = run_mc(&config)?;
        let plme = plme_curve(&panel.model, imp, &lengths)?;
        let coarse = coarse_curve(&panel.model, imp, &lengths)?;
        let (mut zp, mut zc) = (Vec::new(), Vec::new());
        for (i, &m) in lengths.iter().enumerate() {
            let (p, s) = (r.curve.p0[i], r.curve.stderr[i]);
            let (z1, z2) = (z_score(p, s, plme.p0[i]), z_score(p, s, coarse.p0[i]));
            zp.push(z1);
            zc.push(z2);
            rows.push(vec![panel.name.clone().into(), m.into(), p.into(), s.into(), plme.p0[i].into(), coarse.p0[i].into(), z1.into(), z2.into()]);
        }
        let exact = r.curve.max_abs_diff(&plme) <= EXACT_TOL && r.curve.max_abs_diff(&coarse) <= EXACT_TOL;
        let (a, b) = (max_abs(zp.into_iter()), max_abs(zc.into_iter()));
        let closer = match (a, b) {
            (Some(a), Some(b)) if a < b => "plme",
            (Some(_), Some(_)) => "coarse",
            _ => "",
        };
        summary.push(vec![panel.name.clone().into(), a.into(), b.into(), closer.into(), exact.into()]);
        for (i, &m) in lengths.iter().enumerate() {
            for n in convergence_points(r.partial_averages[i].len()) {
                conv.push(vec![panel.name.clone().into(), m.into(), n.into(), r.partial_averages[i][n - 1].into()]);
            }
        }
        if matches!(panel.model, NoiseModel::Ou { tau_c, .. } if tau_c == pair_tau) {
            let f = fit_exponential(&as_f64(&lengths), &r.curve.p0, Some(&r.curve.stderr)).ok();
            fits.push(vec![
                panel.perfect_first_gate.into(),
                f.map(|f| f.gamma).into(),
                f.map(|f| f.gamma_stderr()).into(),
            ]);
        }
        meta.push(json!({ "panel": panel.name, "model": panel.model, "mc": mc_summary(&r, &config) }));
    }
    sink.csv("sm_panels.csv", &rows)?;
    sink.csv("sm_summary.csv", &summary)?;
    sink.csv("sm_convergence.csv", &conv)?;
    sink.csv("sm_first_gate.csv", &fits)?;
    sink.sidecar("sm_validation.json", "sm_validation", &cfg, json!({ "panels": meta }))?;
    Ok(sink.written.clone())
}

fn one_over_f(cfg: &EffectiveConfig, sink: &mut Sink) -> Result<Vec<PathBuf>, CliError> {
    let kind = cfg.run.implementation();
    let imp = gate_implementation(kind);
    let omegas = cfg.run.omega_lows.clone().unwrap_or_else(|| vec![1e-3, 1e-2, 0.1, 1.0, 3.0]);
    let lambda = cfg.run.lambda.unwrap_or(ONE_OVER_F_LAMBDA);
    let omega_high = cfg.run.omega_high.unwrap_or(ONE_OVER_F_OMEGA_HIGH);
    let lengths = cfg.run.lengths_or(|| vec![1, 2, 3, 4, 6, 8, 11, 16, 22, 32, 45, 64])?;
    let with_mc = cfg.run.method == MethodChoice::Mc || cfg.run.mc.is_some();
    let mut t = Table::new(&["omega_low", "m", "t_over_tg", "plme", "coarse", "mc", "mc_stderr"]);
    let mut sel_table = Table::new(&["omega_low", "selected", "coarse_validity", "weak_noise", "warning"]);
    let mut meta = Vec::new();
    for &omega_low in &omegas {
        let model = NoiseModel::OneOverF { lambda, omega_low, omega_high };
        let plme = plme_curve(&model, imp, &lengths)?;
        let coarse = coarse_curve(&model, imp, &lengths)?;
        let sel: MethodSelection = select_method(&model, &thresholds(cfg))?;
        sel_table.push(vec![
            omega_low.into(),
            sel.method.name().into(),
            sel.coarse_validity.into(),
            sel.weak_noise.into(),
            sel.warning.into(),
        ]);
        let mc = if with_mc {
            let config = cfg.run.mc_config(model, kind, lengths.clone(), cfg.full_scale)?;
            let r = run_mc(&config)?;
            meta.push(json!({ "omega_low": omega_low, "mc": mc_summary(&r, &config) }));
            Some(r.curve)
        } else {
            None
        };
        for (i, &m) in lengths.iter().enumerate() {
            let (p, s) = mc.as_ref().map_or((None, None), |c| (Some(c.p0[i]), Some(c.stderr[i])));
            t.push(vec![omega_low.into(), m.into(), (m as f64).into(), plme.p0[i].into(), coarse.p0[i].into(), p.into(), s.into()]);
        }
    }
    sink.csv("one_over_f.csv", &t)?;
    sink.csv("one_over_f_selection.csv", &sel_table)?;
    sink.sidecar(
        "one_over_f.json",
        "one_over_f",
        &cfg,
        json!({ "lambda": lambda, "omega_high": omega_high, "mc_runs": meta }),
    )?;
    Ok(sink.written.clone())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn log_grid_endpoints() {
        let g = log_grid(0.03, 30.0, 19);
        assert_eq!(g.len(), 19);
        assert!((g[0] - 0.03).abs() < 1e-15 && (g[18] - 30.0).abs() < 1e-12);
        assert!((g[6] - 0.3).abs() < 1e-12);
    }

    #[test]
    fn convergence_points_are_increasing_and_end_at_n() {
        assert_eq!(convergence_points(2000), vec![1, 2, 5, 10, 20, 50, 100, 200, 500, 1000, 2000]);
        assert_eq!(convergence_points(1), vec![1]);
    }
}
