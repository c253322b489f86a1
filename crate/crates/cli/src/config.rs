//! JSON run configuration. Unknown keys are rejected and every field is
//! checked before any computation starts.

use std::path::{Path, PathBuf};

use rbsim_core::analytic::{validate_lengths, MethodThresholds};
use rbsim_core::gates::GateKind;
use rbsim_core::montecarlo::{McConfig, Recovery};
use rbsim_core::noise::NoiseModel;
use serde::{Deserialize, Serialize};

use crate::CliError;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Experiment {
    Curve,
    Fcoef,
    Fit,
    Compare,
    Validate,
    Figure1,
    Figure2,
    SmValidation,
    OneOverF,
}

impl Experiment {
    pub fn name(&self) -> &'static str {
        match self {
            Experiment::Curve => "curve",
            Experiment::Fcoef => "fcoef",
            Experiment::Fit => "fit",
            Experiment::Compare => "compare",
            Experiment::Validate => "validate",
            Experiment::Figure1 => "figure1",
            Experiment::Figure2 => "figure2",
            Experiment::SmValidation => "sm_validation",
            Experiment::OneOverF => "one_over_f",
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MethodChoice {
    #[default]
    Auto,
    Plme,
    Coarse,
    Mc,
    Markov,
    Quasistatic,
}

/// Either an explicit list or an inclusive range.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum LengthSpec {
    List(Vec<usize>),
    Range(LengthRange),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LengthRange {
    pub start: usize,
    pub stop: usize,
    #[serde(default = "one")]
    pub step: usize,
}

fn one() -> usize {
    1
}

impl LengthSpec {
    pub fn expand(&self) -> Result<Vec<usize>, CliError> {
        let v = match self {
            LengthSpec::List(v) => v.clone(),
            LengthSpec::Range(r) => {
                if r.step == 0 {
                    return Err(CliError::Config("length range step must be positive".into()));
                }
                (r.start..=r.stop).step_by(r.step).collect()
            }
        };
        validate_lengths(&v).map_err(|e| CliError::Config(e.to_string()))?;
        Ok(v)
    }
}

/// Overrides applied on top of [`McConfig::desk`].
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct McOverrides {
    pub n_sequences: Option<usize>,
    pub n_noise_per_sequence: Option<usize>,
    pub substeps_per_gate: Option<usize>,
    pub perfect_first_gate: Option<bool>,
    pub recovery: Option<Recovery>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FitRequest {
    /// Fraction of the largest lengths used for the tail fit.
    #[serde(default = "default_tail_fraction")]
    pub tail_fraction: f64,
}

fn default_tail_fraction() -> f64 {
    rbsim_core::fit::DEFAULT_TAIL_FRACTION
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    /// Must match the subcommand when given.
    pub experiment: Option<Experiment>,
    pub noise: Option<NoiseModel>,
    pub implementation: Option<GateKind>,
    pub lengths: Option<LengthSpec>,
    #[serde(default)]
    pub method: MethodChoice,
    pub mc: Option<McOverrides>,
    pub output_path: Option<PathBuf>,
    pub seed: Option<u64>,
    pub fit: Option<FitRequest>,
    pub thresholds: Option<MethodThresholds>,
    /// F quadrature points per panel (`fcoef`).
    pub quad_points: Option<usize>,
    /// Curve CSV to fit instead of computing one (`fit`).
    pub input: Option<PathBuf>,
    /// Correlation-time grid (`figure1`, `figure2`, `sm_validation`).
    pub tau_cs: Option<Vec<f64>>,
    pub gamma0: Option<f64>,
    /// OU amplitude for `sm_validation`.
    pub sigma: Option<f64>,
    /// 1/f low cutoffs (`one_over_f`, `sm_validation`).
    pub omega_lows: Option<Vec<f64>>,
    pub lambda: Option<f64>,
    pub omega_high: Option<f64>,
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self, CliError> {
        let config: RunConfig = serde_json::from_str(text).map_err(|e| CliError::Config(format!("config: {e}")))?;
        config.check()?;
        Ok(config)
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    fn check(&self) -> Result<(), CliError> {
        let bad = |msg: String| Err(CliError::Config(msg));
        if let Some(model) = &self.noise {
            model.validate().map_err(|e| CliError::Config(e.to_string()))?;
        }
        if let Some(l) = &self.lengths {
            l.expand()?;
        }
        if let Some(f) = &self.fit {
            if !(f.tail_fraction > 0.0 && f.tail_fraction <= 1.0) {
                return bad(format!("fit.tail_fraction must lie in (0, 1], got {}", f.tail_fraction));
            }
        }
        for (name, grid) in [("tau_cs", &self.tau_cs), ("omega_lows", &self.omega_lows)] {
            if let Some(g) = grid {
                if g.is_empty() || g.iter().any(|x| !(x.is_finite() && *x > 0.0)) {
                    return bad(format!("{name} must be a non-empty list of positive numbers"));
                }
            }
        }
        for (name, v) in [("gamma0", self.gamma0), ("sigma", self.sigma), ("lambda", self.lambda), ("omega_high", self.omega_high)] {
            if let Some(x) = v {
                if !(x.is_finite() && x > 0.0) {
                    return bad(format!("{name} must be positive, got {x}"));
                }
            }
        }
        if let Some(q) = self.quad_points {
            if q < 8 {
                return bad(format!("quad_points must be at least 8, got {q}"));
            }
        }
        Ok(())
    }

    pub fn implementation(&self) -> GateKind {
        self.implementation.unwrap_or(GateKind::Zsx)
    }

    pub fn noise_required(&self) -> Result<NoiseModel, CliError> {
        self.noise.ok_or_else(|| CliError::Config("this experiment needs a `noise` model".into()))
    }

    pub fn lengths_or(&self, default: impl FnOnce() -> Vec<usize>) -> Result<Vec<usize>, CliError> {
        match &self.lengths {
            Some(l) => l.expand(),
            None => Ok(default()),
        }
    }

    /// Desk-scale Monte Carlo settings with this config's overrides.
    pub fn mc_config(&self, model: NoiseModel, kind: GateKind, lengths: Vec<usize>, full_scale: bool) -> Result<McConfig, CliError> {
        let mut c = McConfig::desk(model, kind, lengths);
        if full_scale {
            c = c.full_scale();
        }
        if let Some(o) = &self.mc {
            c.n_sequences = o.n_sequences.unwrap_or(c.n_sequences);
            c.n_noise_per_sequence = o.n_noise_per_sequence.unwrap_or(c.n_noise_per_sequence);
            c.substeps_per_gate = o.substeps_per_gate.unwrap_or(c.substeps_per_gate);
            c.perfect_first_gate = o.perfect_first_gate.unwrap_or(c.perfect_first_gate);
            c.recovery = o.recovery.unwrap_or(c.recovery);
        }
        if let Some(seed) = self.seed {
            c.master_seed = seed;
        }
        c.validate().map_err(|e| CliError::Config(e.to_string()))?;
        Ok(c)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unknown_keys_are_rejected() {
        assert!(RunConfig::from_json(r#"{"noise": {"kind": "white", "gamma": 0.01}, "colour": 3}"#).is_err());
        assert!(RunConfig::from_json(r#"{"mc": {"n_sequences": 10, "threads": 2}}"#).is_err());
    }

    #[test]
    fn lengths_accept_lists_and_ranges() {
        let c = RunConfig::from_json(r#"{"lengths": {"start": 2, "stop": 10, "step": 4}}"#).unwrap();
        assert_eq!(c.lengths.unwrap().expand().unwrap(), vec![2, 6, 10]);
        let c = RunConfig::from_json(r#"{"lengths": [1, 5, 9]}"#).unwrap();
        assert_eq!(c.lengths.unwrap().expand().unwrap(), vec![1, 5, 9]);
        assert!(RunConfig::from_json(r#"{"lengths": [3, 2]}"#).is_err());
        assert!(RunConfig::from_json(r#"{"lengths": {"start": 0, "stop": 3}}"#).is_err());
    }

    #[test]
    fn invalid_noise_is_a_config_error() {
        let e = RunConfig::from_json(r#"{"noise": {"kind": "ou", "sigma": -1, "tau_c": 1}}"#).unwrap_err();
        assert_eq!(e.exit_code(), 2);
    }

    #[test]
    fn mc_overrides_apply() {
        let c = RunConfig::from_json(r#"{"mc": {"n_sequences": 12, "perfect_first_gate": false}, "seed": 9}"#).unwrap();
        let mc = c.mc_config(NoiseModel::zero(), GateKind::U3, vec![1, 2], false).unwrap();
        assert_eq!((mc.n_sequences, mc.n_noise_per_sequence, mc.perfect_first_gate, mc.master_seed), (12, 20, false, 9));
        let full = c.mc_config(NoiseModel::zero(), GateKind::U3, vec![1], true).unwrap();
        assert_eq!((full.n_sequences, full.n_noise_per_sequence), (12, 100));
    }
}
