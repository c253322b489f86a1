//! Sequence averages of products of the toggling-frame Liouvillian
//! `ℒ(t)[ρ] = −i[σ_z(t), ρ]`, with `σ_z(t) = U₀(t)†σ_zU₀(t)` and
//! `U₀(t) = V_{β_{n+1}}(τ) g_{β_n} ··· g_{β_1} g_{β_0}`, `t = n + τ`.
//!
//! Exact averages enumerate only the Clifford indices the times touch: the
//! gate in progress at each time, plus one uniform element standing for each
//! run of complete gates between two touched gates (a product of independent
//! uniform Cliffords is uniform). The common prefix, which contains the
//! zeroth gate, is twirled in closed form: the Clifford group is a unitary
//! 2-design, so the twirl of a PTM `M` is `diag(M₀₀, t, t, t)` with `t` the
//! mean of the other diagonal entries.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::clifford::{clifford_group, CliffordGroup, GROUP_ORDER};
use crate::error::{invalid, Result};
use crate::gates::GateImplementation;
use crate::pauli::{commutator_ptm, dissipator_sum_ptm, Mat2, Superoperator};

/// `ℒ(t, β̄)` for one concrete sequence.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LiouvillianSample {
    pub time: f64,
    pub superop: Superoperator,
}

/// How to average over sequences.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum AveragingMode {
    /// Enumerate every assignment of the touched gates (at most four).
    ExactEnum,
    /// Average `sequences` fully random sequences, zeroth gate included.
    Sampled { sequences: usize, seed: u64 },
}

pub const MAX_ENUMERATED_GATES: usize = 4;

/// Noise-free propagator `U₀(t)` for the sequence `(β₀, β₁, …)`.
pub fn noiseless_propagator(imp: &GateImplementation, sequence: &[usize], t: f64) -> Result<Mat2> {
    if !(t >= 0.0 && t.is_finite()) {
        return invalid(format!("time must be non-negative, got {t}"));
    }
    let n = t.floor() as usize;
    if sequence.len() < n + 2 {
        return invalid(format!("time {t} needs {} gates including the zeroth, got {}", n + 2, sequence.len()));
    }
    let group = clifford_group();
    let mut u = Mat2::identity();
    for &g in &sequence[..=n] {
        u = *group.element(g).matrix() * u;
    }
    Ok(imp.program(sequence[n + 1]).unitary_at(t - n as f64) * u)
}

/// `ℒ(t, β̄)` for the sequence `(β₀, β₁, …)`.
pub fn liouvillian_sample(imp: &GateImplementation, sequence: &[usize], t: f64) -> Result<LiouvillianSample> {
    let u = noiseless_propagator(imp, sequence, t)?;
    let a = u.adjoint() * Mat2::pauli_z() * u;
    Ok(LiouvillianSample { time: t, superop: commutator_ptm(&a) })
}

/// Closed-form Clifford twirl of a PTM.
pub fn twirl_ptm(m: &Superoperator) -> Superoperator {
    let t = (m.ptm[1][1] + m.ptm[2][2] + m.ptm[3][3]) / 3.0;
    Superoperator::diag([m.ptm[0][0], t, t, t])
}

type Block = [[f64; 3]; 3];

fn block_mul(a: &Block, b: &Block) -> Block {
    let mut out = [[0.0; 3]; 3];
    for i in 0..3 {
        for k in 0..3 {
            for j in 0..3 {
                out[i][j] += a[i][k] * b[k][j];
            }
        }
    }
    out
}

/// Block of `ρ ↦ −i[a·σ, ρ]` on the traceless part: `b·σ ↦ 2(a × b)·σ`.
fn commutator_block(a: &[f64; 3]) -> Block {
    [[0.0, -2.0 * a[2], 2.0 * a[1]], [2.0 * a[2], 0.0, -2.0 * a[0]], [-2.0 * a[1], 2.0 * a[0], 0.0]]
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Slot {
    /// The gate in progress during touched gate index `n`.
    Partial,
    /// A run of complete gates collapsed into one uniform element.
    Collapsed,
}

struct Plan {
    slots: Vec<Slot>,
    /// For each time: (index of its partial slot, τ).
    times: Vec<(usize, f64)>,
}

fn plan(times: &[f64]) -> Plan {
    let mut slots = Vec::new();
    let mut out = Vec::with_capacity(times.len());
    let mut last: Option<usize> = None;
    for &t in times {
        let n = t.floor() as usize;
        match last {
            Some(l) if l == n => {}
            Some(l) => {
                if n >= l + 2 {
                    slots.push(Slot::Collapsed);
                }
                slots.push(Slot::Partial);
            }
            None => slots.push(Slot::Partial),
        }
        last = Some(n);
        out.push((slots.len() - 1, t - n as f64));
    }
    Plan { slots, times: out }
}

/// Number of Clifford indices an exact average over `times` enumerates.
pub fn touched_gates(times: &[f64]) -> usize {
    plan(times).slots.len()
}

fn check_times(times: &[f64], strict: bool) -> Result<()> {
    if times.is_empty() {
        return invalid("at least one time is required");
    }
    if times.iter().any(|t| !(t.is_finite() && *t >= 0.0)) {
        return invalid("times must be finite and non-negative");
    }
    let ordered = times.windows(2).all(|w| if strict { w[1] > w[0] } else { w[1] >= w[0] });
    if !ordered {
        return invalid("times must be increasing");
    }
    Ok(())
}

fn enumerate(times: &[f64], imp: &GateImplementation) -> Result<Superoperator> {
    let plan = plan(times);
    let v = plan.slots.len();
    if v > MAX_ENUMERATED_GATES {
        return invalid(format!(
            "{v} touched gates exceed the exact-enumeration limit of {MAX_ENUMERATED_GATES}; use AveragingMode::Sampled"
        ));
    }
    let group = clifford_group();
    let z_tables: Vec<[[f64; 3]; GROUP_ORDER]> = plan.times.iter().map(|&(_, tau)| imp.z_vectors(tau)).collect();
    let rot = |g: usize| -> Block {
        let p = group.ptm(g);
        let mut r = [[0.0; 3]; 3];
        for i in 0..3 {
            for j in 0..3 {
                r[i][j] = p.ptm[i + 1][j + 1];
            }
        }
        r
    };
    let rots: Vec<Block> = (0..GROUP_ORDER).map(rot).collect();

    let total = GROUP_ORDER.pow(v as u32);
    let mut acc = [[0.0; 3]; 3];
    let mut assign = vec![0usize; v];
    // prefix Clifford (relative to the twirled common prefix) entering each slot
    let mut prefix = vec![0usize; v];
    for index in 0..total {
        let mut rem = index;
        for a in assign.iter_mut() {
            *a = rem % GROUP_ORDER;
            rem /= GROUP_ORDER;
        }
        let mut w = 0usize;
        for s in 0..v {
            prefix[s] = w;
            w = group.mul(assign[s], w);
        }
        let mut prod: Option<Block> = None;
        for (j, &(slot, _)) in plan.times.iter().enumerate() {
            // W†(r·σ)W has Bloch vector R_Wᵀ r
            let r = z_tables[j][assign[slot]];
            let rw = &rots[prefix[slot]];
            let a: [f64; 3] = std::array::from_fn(|k| (0..3).map(|i| rw[i][k] * r[i]).sum());
            let l = commutator_block(&a);
            prod = Some(match prod {
                None => l,
                Some(p) => block_mul(&l, &p),
            });
        }
        let p = prod.unwrap();
        for i in 0..3 {
            for k in 0..3 {
                acc[i][k] += p[i][k];
            }
        }
    }
    let mut m = Superoperator::zero();
    for i in 0..3 {
        for k in 0..3 {
            m.ptm[i + 1][k + 1] = acc[i][k] / total as f64;
        }
    }
    Ok(twirl_ptm(&m))
}

/// Mean and per-entry standard error of `ℒ(t_k)···ℒ(t₁)` over random sequences.
pub fn sampled_product(
    times: &[f64],
    imp: &GateImplementation,
    sequences: usize,
    seed: u64,
) -> Result<(Superoperator, Superoperator)> {
    check_times(times, false)?;
    if sequences < 2 {
        return invalid("sampling needs at least two sequences");
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n_gates = times.last().unwrap().floor() as usize + 2;
    let mut seq = vec![0usize; n_gates];
    let mut sum = Superoperator::zero();
    let mut sum2 = Superoperator::zero();
    for _ in 0..sequences {
        seq.iter_mut().for_each(|g| *g = CliffordGroup::sample_index(&mut rng));
        let mut prod = Superoperator::identity();
        for &t in times {
            prod = liouvillian_sample(imp, &seq, t)?.superop * prod;
        }
        sum = sum + prod;
        for i in 0..4 {
            for j in 0..4 {
                sum2.ptm[i][j] += prod.ptm[i][j] * prod.ptm[i][j];
            }
        }
    }
    let n = sequences as f64;
    let mean = sum.scale(1.0 / n);
    let mut se = Superoperator::zero();
    for i in 0..4 {
        for j in 0..4 {
            let var = (sum2.ptm[i][j] / n - mean.ptm[i][j].powi(2)).max(0.0) * n / (n - 1.0);
            se.ptm[i][j] = (var / n).sqrt();
        }
    }
    Ok((mean, se))
}

/// `⟨ℒ(t_k)···ℒ(t₁)⟩_β̄` for strictly increasing times.
pub fn averaged_product(times: &[f64], imp: &GateImplementation, mode: AveragingMode) -> Result<Superoperator> {
    check_times(times, true)?;
    match mode {
        AveragingMode::ExactEnum => enumerate(times, imp),
        AveragingMode::Sampled { sequences, seed } => Ok(sampled_product(times, imp, sequences, seed)?.0),
    }
}

/// `‖⟨ℒ₃ℒ₂ℒ₁⟩ − ⟨ℒ₃⟩⟨ℒ₂ℒ₁⟩‖_F` by exact enumeration, without checking that
/// the factorization is expected to hold.
pub fn factorization_gap(t3: f64, t2: f64, t1: f64, imp: &GateImplementation) -> Result<f64> {
    check_times(&[t1, t2, t3], true)?;
    let joint = enumerate(&[t1, t2, t3], imp)?;
    let split = enumerate(&[t3], imp)? * enumerate(&[t1, t2], imp)?;
    Ok((joint - split).frobenius())
}

/// `‖⟨ℒ(t_k)···ℒ(t₁)⟩ − ⟨ℒ(t_k)···ℒ(t_{s+1})⟩⟨ℒ(t_s)···ℒ(t₁)⟩‖_F` with the
/// split after the first `split` times, by exact enumeration.
pub fn split_factorization_gap(times: &[f64], split: usize, imp: &GateImplementation) -> Result<f64> {
    check_times(times, true)?;
    if split == 0 || split >= times.len() {
        return invalid("the split must leave at least one time on each side");
    }
    let joint = enumerate(times, imp)?;
    let parts = enumerate(&times[split..], imp)? * enumerate(&times[..split], imp)?;
    Ok((joint - parts).frobenius())
}

/// [`factorization_gap`] when `t₃` lies more than one full gate after `t₂`,
/// where the moment is claimed to factorize.
pub fn factorization_residual(t3: f64, t2: f64, t1: f64, imp: &GateImplementation) -> Result<f64> {
    if t3.floor() <= t2.floor() + 1.0 {
        return invalid(format!(
            "t3 = {t3} and t2 = {t2} are not separated by a full gate; the moment does not factorize there"
        ));
    }
    factorization_gap(t3, t2, t1, imp)
}

/// Projection of the exact second moment `⟨ℒ(t₂)ℒ(t₁)⟩` on the dissipator sum
/// `Σ_α D[σ_α]`: returns (coefficient, Frobenius norm of the remainder).
pub fn second_cumulant_structure(t2: f64, t1: f64, imp: &GateImplementation) -> Result<(f64, f64)> {
    check_times(&[t1, t2], false)?;
    let m = enumerate(&[t1, t2], imp)?;
    let d = dissipator_sum_ptm();
    let coefficient = m.dot(&d) / d.dot(&d);
    Ok((coefficient, (m - d.scale(coefficient)).frobenius()))
}
