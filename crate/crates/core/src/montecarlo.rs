//! Brute-force survival probabilities: random Clifford sequences with an
//! inversion gate, driven by the pulse programs of a gate implementation plus
//! a sampled noise trajectory `η(t)σ_z`.
//!
//! A sequence of length `m` draws `β₀ … β_m` uniformly. With a perfect first
//! gate `β₀` acts instantly at `t = 0` and `β₁ … β_m` are pulsed over
//! `[0, m]`; otherwise all `m + 1` gates are pulsed. The inversion
//! `(g_{β_m} ⋯ g_{β₀})⁻¹` is then applied instantly and without noise, so the
//! survival probability is that of the interaction-picture propagator.
//! [`Recovery::Pulsed`] instead replaces `β_m` by the inversion of
//! `β₀ … β_{m−1}` and pulses it like any other gate.
//!
//! Every `(length, sequence, realization)` triple gets its own RNG, seeded by
//! a counter-based hash of the master seed and the indices, so results do not
//! depend on scheduling.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::analytic::{config_digest, validate_lengths, DecayCurve, Method};
use crate::clifford::{clifford_group, CliffordGroup, GROUP_ORDER};
use crate::error::{invalid, Error, Result};
use crate::gates::{gate_implementation, GateKind, ProgramOp};
use crate::noise::{CirculantSampler, NoiseGenerator, NoiseKind, NoiseModel, Sampling, DEFAULT_SPECTRAL_BINS};
use crate::pauli::Su2;

pub const MIN_SUBSTEPS: usize = 8;
pub const DEFAULT_SUBSTEPS: usize = 64;
pub const UNITARITY_TOL: f64 = 1e-10;
pub const AUDIT_FRACTION: f64 = 0.05;

fn default_true() -> bool {
    true
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct McConfig {
    pub n_sequences: usize,
    pub n_noise_per_sequence: usize,
    pub lengths: Vec<usize>,
    pub substeps_per_gate: usize,
    #[serde(default = "default_true")]
    pub perfect_first_gate: bool,
    pub master_seed: u64,
    pub implementation: GateKind,
    pub model: NoiseModel,
    #[serde(default)]
    pub recovery: Recovery,
}

impl McConfig {
    /// 2000 sequences × 20 realizations, 64 substeps per gate.
    pub fn desk(model: NoiseModel, implementation: GateKind, lengths: Vec<usize>) -> Self {
        McConfig {
            n_sequences: 2000,
            n_noise_per_sequence: 20,
            lengths,
            substeps_per_gate: DEFAULT_SUBSTEPS,
            perfect_first_gate: true,
            master_seed: 0x5eed,
            implementation,
            model,
            recovery: Recovery::Ideal,
        }
    }

    /// 20 000 sequences × 100 realizations.
    pub fn full_scale(mut self) -> Self {
        self.n_sequences = 20_000;
        self.n_noise_per_sequence = 100;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_sequences == 0 || self.n_noise_per_sequence == 0 {
            return invalid("need at least one sequence and one noise realization");
        }
        if self.substeps_per_gate < MIN_SUBSTEPS {
            return invalid(format!(
                "substeps_per_gate must be at least {MIN_SUBSTEPS}, got {}",
                self.substeps_per_gate
            ));
        }
        validate_lengths(&self.lengths)?;
        self.model.validate()
    }
}

/// How the inversion gate is applied.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Recovery {
    #[default]
    Ideal,
    /// The last pulsed gate is the inverse of the preceding ones. Its toggling
    /// frame is not twirled, which shifts `P₀` by `O(ε)` at every length.
    Pulsed,
}

/// How per-task seeds are derived.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum SeedScheme {
    #[default]
    CounterHash,
    /// Mixes in the size of the thread pool. Breaks reproducibility across worker
    /// counts; exists to exercise the determinism check.
    ThreadDependent,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct RunOptions {
    /// Size of a dedicated thread pool; `None` uses the global pool.
    pub workers: Option<usize>,
    pub seed_scheme: SeedScheme,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct McResult {
    pub curve: DecayCurve,
    /// `partial_averages[i][n]`: mean over the first `n + 1` sequences at
    /// `lengths[i]`.
    pub partial_averages: Vec<Vec<f64>>,
    pub max_unitarity_error: f64,
    pub warnings: Vec<String>,
}

impl McResult {
    /// Per length, `max |running mean − final mean| / stderr` over the last
    /// quarter of the sequences. Zero where the stderr vanishes and the
    /// running mean is already exact.
    pub fn convergence_ratios(&self) -> Vec<f64> {
        self.partial_averages
            .iter()
            .zip(self.curve.p0.iter().zip(&self.curve.stderr))
            .map(|(run, (&fin, &se))| {
                let start = run.len() - run.len().div_ceil(4);
                let dev = run[start..].iter().map(|x| (x - fin).abs()).fold(0.0, f64::max);
                if dev == 0.0 {
                    0.0
                } else {
                    dev / se
                }
            })
            .collect()
    }
}

const STREAM_SEQUENCE: u64 = 0x5345_5155;
const STREAM_NOISE: u64 = 0x4e4f_4953;

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Counter-based seed for `(stream, length index, sequence, realization)`.
pub fn derive_seed(master: u64, stream: u64, length_index: u64, sequence: u64, realization: u64) -> u64 {
    [stream, length_index, sequence, realization]
        .iter()
        .fold(splitmix64(master), |h, &x| splitmix64(h ^ splitmix64(x)))
}

impl SeedScheme {
    fn seed(&self, master: u64, stream: u64, li: usize, s: usize, r: usize) -> u64 {
        let base = derive_seed(master, stream, li as u64, s as u64, r as u64);
        match self {
            SeedScheme::CounterHash => base,
            SeedScheme::ThreadDependent => {
                splitmix64(base ^ rayon::current_num_threads() as u64)
            }
        }
    }
}

/// Compensated sum, accumulated in call order.
#[derive(Clone, Copy, Debug, Default)]
struct Kahan {
    sum: f64,
    c: f64,
}

impl Kahan {
    fn add(&mut self, x: f64) {
        let y = x - self.c;
        let t = self.sum + y;
        self.c = (t - self.sum) - y;
        self.sum = t;
    }
}

fn kahan_mean(xs: impl IntoIterator<Item = f64>) -> f64 {
    let mut k = Kahan::default();
    let mut n = 0usize;
    for x in xs {
        k.add(x);
        n += 1;
    }
    k.sum / n as f64
}

/// Discretized programs for all 24 Cliffords.
struct Compiled {
    ops: Vec<Vec<ProgramOp>>,
    su2: Vec<Su2>,
    dt: f64,
    substeps: usize,
}

impl Compiled {
    fn new(kind: GateKind, substeps: usize) -> Result<Self> {
        let imp = gate_implementation(kind);
        let group = clifford_group();
        let ops = (0..GROUP_ORDER).map(|g| imp.program(g).discretize(substeps)).collect::<Result<Vec<_>>>()?;
        let su2 = group.elements().iter().map(|u| u.to_su2()).collect();
        Ok(Compiled { ops, su2, dt: 1.0 / substeps as f64, substeps })
    }

    fn noise_steps(&self, m: usize, perfect_first_gate: bool) -> usize {
        self.substeps * if perfect_first_gate { m } else { m + 1 }
    }

    /// Final propagator; `eta` is called once per substep in time order.
    fn propagate(&self, sequence: &Sequence, perfect_first_gate: bool, mut eta: impl FnMut() -> f64) -> Su2 {
        let sequence = &sequence.pulsed[..];
        let mut u = Su2::IDENTITY;
        let pulsed = if perfect_first_gate {
            u = self.su2[sequence[0]];
            &sequence[1..]
        } else {
            sequence
        };
        for &g in pulsed {
            for op in &self.ops[g] {
                match op {
                    ProgramOp::Kick(q) => u = q.mul(&u),
                    ProgramOp::Drive(h) => {
                        let step = Su2::from_generator([h[0], h[1], h[2] + eta()], self.dt);
                        u = step.mul(&u);
                    }
                }
            }
        }
        u
    }

    fn finish(&self, sequence: &Sequence, u: Su2) -> Su2 {
        match sequence.ideal {
            Some(g) => self.su2[g].mul(&u),
            None => u,
        }
    }
}

struct Sequence {
    /// `β₀ … β_m`, the first possibly instantaneous.
    pulsed: Vec<usize>,
    /// Instantaneous noiseless inversion.
    ideal: Option<usize>,
}

fn draw_sequence<R: Rng + ?Sized>(group: &CliffordGroup, m: usize, recovery: Recovery, rng: &mut R) -> Sequence {
    let random = match recovery {
        Recovery::Ideal => m + 1,
        Recovery::Pulsed => m,
    };
    let mut pulsed = Vec::with_capacity(m + 1);
    let mut total = 0usize;
    for k in 0..random {
        let g = CliffordGroup::sample_index(rng);
        total = if k == 0 { g } else { group.mul(g, total) };
        pulsed.push(g);
    }
    match recovery {
        Recovery::Ideal => Sequence { pulsed, ideal: Some(group.inverse(total)) },
        Recovery::Pulsed => {
            pulsed.push(group.inverse(total));
            Sequence { pulsed, ideal: None }
        }
    }
}

/// Noise values for whole trajectories: streamed midpoint values for OU,
/// white and quasistatic noise, and exact cell averages by circulant
/// embedding for 1/f noise (one sampler per sequence length).
struct NoiseSource {
    generator: NoiseGenerator,
    blocks: Vec<Option<CirculantSampler>>,
}

#[derive(Clone)]
struct Scratch {
    generator: NoiseGenerator,
    values: Vec<f64>,
    fft: Vec<Complex64>,
}

impl NoiseSource {
    fn new(model: &NoiseModel, dt: f64, steps: &[usize]) -> Result<Self> {
        let generator = NoiseGenerator::new(model, dt, Sampling::CellAverage, DEFAULT_SPECTRAL_BINS)?;
        let blocks = if model.kind() == NoiseKind::OneOverF {
            steps.iter().map(|&n| CirculantSampler::new(model, dt, n).map(Some)).collect::<Result<_>>()?
        } else {
            steps.iter().map(|_| None).collect()
        };
        Ok(NoiseSource { generator, blocks })
    }

    fn scratch(&self) -> Scratch {
        Scratch { generator: self.generator.clone(), values: Vec::new(), fft: Vec::new() }
    }

    fn max_clipped(&self) -> f64 {
        self.blocks.iter().flatten().map(|b| b.clipped_fraction()).fold(0.0, f64::max)
    }

    fn fill<R: Rng + ?Sized>(&self, li: usize, steps: usize, scratch: &mut Scratch, rng: &mut R) {
        match &self.blocks[li] {
            Some(block) => block.sample_into(rng, &mut scratch.values, &mut scratch.fft),
            None => {
                scratch.generator.reset(rng);
                scratch.values.clear();
                for _ in 0..steps {
                    let x = scratch.generator.next(rng);
                    scratch.values.push(x);
                }
            }
        }
    }
}

fn clipping_warning(source: &NoiseSource) -> Option<String> {
    let c = source.max_clipped();
    (c > 1e-6).then(|| format!("circulant embedding discarded a fraction {c:.2e} of the noise spectrum"))
}

struct SequenceOutcome {
    mean: f64,
    unitarity: f64,
}

fn with_pool<T: Send>(workers: Option<usize>, f: impl FnOnce() -> T + Send) -> Result<T> {
    match workers {
        None => Ok(f()),
        Some(0) => invalid("worker count must be positive"),
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build()
                .map_err(|e| Error::Internal(format!("cannot build thread pool: {e}")))?;
            Ok(pool.install(f))
        }
    }
}

pub fn run(config: &McConfig) -> Result<McResult> {
    run_with(config, &RunOptions::default())
}

pub fn run_with(config: &McConfig, options: &RunOptions) -> Result<McResult> {
    config.validate()?;
    let compiled = Compiled::new(config.implementation, config.substeps_per_gate)?;
    let steps: Vec<usize> = config.lengths.iter().map(|&m| compiled.noise_steps(m, config.perfect_first_gate)).collect();
    let source = NoiseSource::new(&config.model, compiled.dt, &steps)?;
    let group = clifford_group();
    let tasks: Vec<(usize, usize)> = (0..config.lengths.len())
        .flat_map(|li| (0..config.n_sequences).map(move |s| (li, s)))
        .collect();
    let scheme = options.seed_scheme;
    let outcomes: Vec<SequenceOutcome> = with_pool(options.workers, || {
        tasks
            .par_iter()
            .map_init(
                || source.scratch(),
                |scratch, &(li, s)| {
                    let m = config.lengths[li];
                    let mut rng = ChaCha8Rng::seed_from_u64(scheme.seed(config.master_seed, STREAM_SEQUENCE, li, s, 0));
                    let seq = draw_sequence(group, m, config.recovery, &mut rng);
                    let mut acc = Kahan::default();
                    let mut unitarity = 0.0f64;
                    for r in 0..config.n_noise_per_sequence {
                        let mut nrng = ChaCha8Rng::seed_from_u64(scheme.seed(config.master_seed, STREAM_NOISE, li, s, r));
                        source.fill(li, steps[li], scratch, &mut nrng);
                        let mut eta = scratch.values.iter();
                        let u = compiled.propagate(&seq, config.perfect_first_gate, || *eta.next().unwrap());
                        let u = compiled.finish(&seq, u);
                        unitarity = unitarity.max((u.norm_sqr() - 1.0).abs());
                        acc.add(u.survival());
                    }
                    SequenceOutcome { mean: acc.sum / config.n_noise_per_sequence as f64, unitarity }
                },
            )
            .collect()
    })?;

    let n = config.n_sequences;
    let mut p0 = Vec::with_capacity(config.lengths.len());
    let mut stderr = Vec::with_capacity(config.lengths.len());
    let mut partial_averages = Vec::with_capacity(config.lengths.len());
    let mut max_unitarity_error = 0.0f64;
    for chunk in outcomes.chunks(n) {
        let means: Vec<f64> = chunk.iter().map(|o| o.mean).collect();
        max_unitarity_error = chunk.iter().map(|o| o.unitarity).fold(max_unitarity_error, f64::max);
        let mean = kahan_mean(means.iter().copied());
        let se = if n > 1 {
            let var = kahan_mean(means.iter().map(|x| (x - mean) * (x - mean))) * n as f64 / (n - 1) as f64;
            (var / n as f64).sqrt()
        } else {
            0.0
        };
        let mut running = Vec::with_capacity(n);
        let mut k = Kahan::default();
        for (i, x) in means.iter().enumerate() {
            k.add(*x);
            running.push(k.sum / (i + 1) as f64);
        }
        p0.push(mean);
        stderr.push(se);
        partial_averages.push(running);
    }
    if max_unitarity_error > UNITARITY_TOL {
        return Err(Error::Numerical(format!(
            "propagator lost unitarity: |U†U − 1| reached {max_unitarity_error:.3e}"
        )));
    }
    let curve = DecayCurve {
        lengths: config.lengths.clone(),
        p0,
        stderr,
        method: Method::MonteCarlo,
        config_digest: config_digest(config),
    };
    let mut result = McResult { curve, partial_averages, max_unitarity_error, warnings: Vec::new() };
    result.warnings.extend(clipping_warning(&source));
    for (m, ratio) in config.lengths.iter().zip(result.convergence_ratios()) {
        if ratio >= 2.0 {
            result
                .warnings
                .push(format!("m = {m}: running mean strays {ratio:.2} standard errors over the last quarter"));
        }
    }
    Ok(result)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AuditRow {
    pub m: usize,
    /// Mean of `P₀(2N substeps) − P₀(N substeps)` on shared noise.
    pub delta: f64,
    pub delta_stderr: f64,
    /// Standard error of a full run at this length, estimated from the
    /// subsample's spread.
    pub mc_stderr: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AuditReport {
    pub substeps: usize,
    pub sequences: usize,
    pub rows: Vec<AuditRow>,
    pub max_abs_delta: f64,
    pub passed: bool,
}

/// Reruns the first 5% of the sequences with doubled substeps. The coarse
/// noise is the pairwise average of the fine noise, so the difference
/// isolates the discretization error.
pub fn step_size_audit(config: &McConfig) -> Result<AuditReport> {
    step_size_audit_with(config, &RunOptions::default())
}

pub fn step_size_audit_with(config: &McConfig, options: &RunOptions) -> Result<AuditReport> {
    config.validate()?;
    let coarse = Compiled::new(config.implementation, config.substeps_per_gate)?;
    let fine = Compiled::new(config.implementation, 2 * config.substeps_per_gate)?;
    let steps: Vec<usize> = config.lengths.iter().map(|&m| fine.noise_steps(m, config.perfect_first_gate)).collect();
    let source = NoiseSource::new(&config.model, fine.dt, &steps)?;
    let group = clifford_group();
    let sequences = ((config.n_sequences as f64 * AUDIT_FRACTION).ceil() as usize).clamp(1, config.n_sequences);
    let tasks: Vec<(usize, usize)> =
        (0..config.lengths.len()).flat_map(|li| (0..sequences).map(move |s| (li, s))).collect();
    let scheme = options.seed_scheme;
    // per sequence: (mean fine − coarse, mean coarse)
    let outcomes: Vec<(f64, f64)> = with_pool(options.workers, || {
        tasks
            .par_iter()
            .map_init(
                || source.scratch(),
                |scratch, &(li, s)| {
                    let m = config.lengths[li];
                    let mut rng = ChaCha8Rng::seed_from_u64(scheme.seed(config.master_seed, STREAM_SEQUENCE, li, s, 0));
                    let seq = draw_sequence(group, m, config.recovery, &mut rng);
                    let (mut d, mut p) = (Kahan::default(), Kahan::default());
                    for r in 0..config.n_noise_per_sequence {
                        let mut nrng = ChaCha8Rng::seed_from_u64(scheme.seed(config.master_seed, STREAM_NOISE, li, s, r));
                        source.fill(li, steps[li], scratch, &mut nrng);
                        let buf = &scratch.values;
                        let mut it = buf.iter();
                        let uf = fine.propagate(&seq, config.perfect_first_gate, || *it.next().unwrap());
                        let mut pairs = buf.chunks_exact(2);
                        let uc = coarse.propagate(&seq, config.perfect_first_gate, || {
                            let c = pairs.next().unwrap();
                            0.5 * (c[0] + c[1])
                        });
                        let (uf, uc) = (fine.finish(&seq, uf), coarse.finish(&seq, uc));
                        d.add(uf.survival() - uc.survival());
                        p.add(uc.survival());
                    }
                    let k = config.n_noise_per_sequence as f64;
                    (d.sum / k, p.sum / k)
                },
            )
            .collect()
    })?;
    let spread = |xs: &[f64]| -> f64 {
        if xs.len() < 2 {
            return 0.0;
        }
        let mu = kahan_mean(xs.iter().copied());
        (kahan_mean(xs.iter().map(|x| (x - mu) * (x - mu))) * xs.len() as f64 / (xs.len() - 1) as f64).sqrt()
    };
    let mut rows = Vec::with_capacity(config.lengths.len());
    for (li, chunk) in outcomes.chunks(sequences).enumerate() {
        let deltas: Vec<f64> = chunk.iter().map(|x| x.0).collect();
        let probs: Vec<f64> = chunk.iter().map(|x| x.1).collect();
        rows.push(AuditRow {
            m: config.lengths[li],
            delta: kahan_mean(deltas.iter().copied()),
            delta_stderr: spread(&deltas) / (sequences as f64).sqrt(),
            mc_stderr: spread(&probs) / (config.n_sequences as f64).sqrt(),
        });
    }
    let max_abs_delta = rows.iter().map(|r| r.delta.abs()).fold(0.0, f64::max);
    let passed = rows.iter().all(|r| r.delta.abs() <= r.mc_stderr);
    Ok(AuditReport { substeps: config.substeps_per_gate, sequences, rows, max_abs_delta, passed })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analytic::markov_exact_curve;

    fn small(model: NoiseModel, kind: GateKind) -> McConfig {
        McConfig {
            n_sequences: 40,
            n_noise_per_sequence: 4,
            lengths: vec![1, 2, 5, 10],
            substeps_per_gate: 16,
            perfect_first_gate: true,
            master_seed: 7,
            implementation: kind,
            model,
            recovery: Recovery::Ideal,
        }
    }

    #[test]
    fn recovery_gate_inverts_sequence() {
        let group = clifford_group();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for m in [1, 2, 7] {
            for recovery in [Recovery::Ideal, Recovery::Pulsed] {
                let seq = draw_sequence(group, m, recovery, &mut rng);
                assert_eq!(seq.pulsed.len(), m + 1);
                let total = seq
                    .pulsed
                    .iter()
                    .chain(seq.ideal.iter())
                    .fold(None, |acc: Option<usize>, &g| Some(acc.map_or(g, |t| group.mul(g, t))));
                assert_eq!(group.ptm(total.unwrap()).max_abs_diff(&crate::pauli::Superoperator::identity()), 0.0);
            }
        }
    }

    #[test]
    fn zero_noise_survives() {
        for kind in GateKind::ALL {
            for (perfect, recovery) in [(true, Recovery::Ideal), (false, Recovery::Ideal), (true, Recovery::Pulsed)] {
                let mut c = small(NoiseModel::zero(), kind);
                c.perfect_first_gate = perfect;
                c.recovery = recovery;
                let r = run(&c).unwrap();
                for p in &r.curve.p0 {
                    assert!((p - 1.0).abs() < 1e-12, "{kind} {p}");
                }
                assert!(r.max_unitarity_error < 1e-12);
            }
        }
    }

    #[test]
    fn seeds_are_distinct_and_stable() {
        let a = derive_seed(1, STREAM_NOISE, 0, 0, 0);
        assert_eq!(a, derive_seed(1, STREAM_NOISE, 0, 0, 0));
        let others = [
            derive_seed(2, STREAM_NOISE, 0, 0, 0),
            derive_seed(1, STREAM_SEQUENCE, 0, 0, 0),
            derive_seed(1, STREAM_NOISE, 1, 0, 0),
            derive_seed(1, STREAM_NOISE, 0, 1, 0),
            derive_seed(1, STREAM_NOISE, 0, 0, 1),
            derive_seed(1, STREAM_NOISE, 0, 1, 1),
        ];
        assert!(others.iter().all(|&b| b != a));
    }

    #[test]
    fn worker_count_does_not_change_result() {
        let c = small(NoiseModel::Ou { sigma: 0.1, tau_c: 1.0 }, GateKind::Zsx);
        let one = run_with(&c, &RunOptions { workers: Some(1), ..Default::default() }).unwrap();
        let three = run_with(&c, &RunOptions { workers: Some(3), ..Default::default() }).unwrap();
        assert_eq!(one, three);
    }

    #[test]
    fn stderr_and_running_means() {
        let c = small(NoiseModel::Ou { sigma: 0.1, tau_c: 1.0 }, GateKind::U3);
        let r = run(&c).unwrap();
        for (i, run) in r.partial_averages.iter().enumerate() {
            assert_eq!(run.len(), c.n_sequences);
            assert!((run.last().unwrap() - r.curve.p0[i]).abs() < 1e-15);
            assert!(r.curve.stderr[i] > 0.0);
        }
        r.curve.check_invariants().unwrap();
    }

    #[test]
    fn white_noise_tracks_markov_limit() {
        let gamma = 0.01;
        let mut c = small(NoiseModel::White { gamma }, GateKind::Zsx);
        c.n_sequences = 200;
        c.n_noise_per_sequence = 8;
        let r = run(&c).unwrap();
        let exact = markov_exact_curve(gamma, &c.lengths).unwrap();
        for i in 0..c.lengths.len() {
            let z = (r.curve.p0[i] - exact.p0[i]) / r.curve.stderr[i];
            assert!(z.abs() < 4.0, "m={} z={z}", c.lengths[i]);
        }
    }

    #[test]
    fn audit_is_silent_without_noise() {
        let r = step_size_audit(&small(NoiseModel::zero(), GateKind::Zsx)).unwrap();
        assert!(r.max_abs_delta < 1e-12);
    }

    #[test]
    fn rejects_bad_config() {
        let mut c = small(NoiseModel::zero(), GateKind::Zsx);
        c.substeps_per_gate = 4;
        assert!(run(&c).is_err());
        let mut c = small(NoiseModel::zero(), GateKind::Zsx);
        c.n_sequences = 0;
        assert!(run(&c).is_err());
        let mut c = small(NoiseModel::zero(), GateKind::Zsx);
        c.substeps_per_gate = 9;
        assert!(run(&c).is_err());
    }
}
