//! Finite-duration implementations of the Clifford gates and the
//! sequence-averaged overlap `f(t₁, t₂)` of the interaction-picture noise
//! operator.
//!
//! Times are in units of the gate time, so every gate occupies `[0, 1]`.
//! Each gate is a list of constant drives `H = ω n̂·σ` plus instantaneous
//! unitaries ("kicks"). A kick at time `s < 1` acts just after `s`; a kick at
//! `s = 1` acts at the end of the gate, so `V(0) = 𝟙` and `V(1) = g`.

use std::f64::consts::{FRAC_PI_2, PI};
use std::sync::OnceLock;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::clifford::{clifford_group, CliffordGroup, GROUP_ORDER};
use crate::error::{invalid, Error, Result};
use crate::pauli::{rotation, unitary_to_ptm, Mat2, Su2, UnitaryMatrix};
use crate::quadrature::{panels, GaussRule};

/// Which pulse scheme realizes the Clifford gates.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GateKind {
    /// `R_Z(φ+π) √X R_Z(θ+π) √X R_Z(λ)` with two constant-amplitude `√X`
    /// pulses of duration ½ and instantaneous Z rotations.
    Zsx,
    /// One constant drive along the axis of the shortest rotation.
    U3,
    /// The gate acts at `0⁺`, then the qubit idles.
    Instant,
}

impl GateKind {
    pub const ALL: [GateKind; 3] = [GateKind::Zsx, GateKind::U3, GateKind::Instant];

    pub fn name(&self) -> &'static str {
        match self {
            GateKind::Zsx => "zsx",
            GateKind::U3 => "u3",
            GateKind::Instant => "instant",
        }
    }
}

impl std::fmt::Display for GateKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for GateKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "zsx" => Ok(GateKind::Zsx),
            "u3" => Ok(GateKind::U3),
            "instant" => Ok(GateKind::Instant),
            _ => invalid(format!("unknown gate implementation '{s}'")),
        }
    }
}

/// A constant drive `H = omega · axis·σ` on `[start, start + duration]`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Segment {
    pub start: f64,
    pub duration: f64,
    pub axis: [f64; 3],
    pub omega: f64,
}

impl Segment {
    pub fn drive(&self) -> [f64; 3] {
        [self.axis[0] * self.omega, self.axis[1] * self.omega, self.axis[2] * self.omega]
    }
}

/// An instantaneous unitary inserted at `time`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Kick {
    pub time: f64,
    pub unitary: UnitaryMatrix,
}

/// The control program of one Clifford gate.
#[derive(Clone, Debug, PartialEq)]
pub struct GateProgram {
    pub segments: Vec<Segment>,
    pub kicks: Vec<Kick>,
}

/// One step of a discretized program: an instantaneous unitary, or a substep
/// under a constant drive (to which the noise is added).
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum ProgramOp {
    Kick(Su2),
    Drive([f64; 3]),
}

/// Pulse programs for all 24 Cliffords under one scheme.
#[derive(Clone, Debug)]
pub struct GateImplementation {
    kind: GateKind,
    programs: Vec<GateProgram>,
}

fn canonical_angle(a: f64) -> f64 {
    let mut x = a % (2.0 * PI);
    if x <= -PI {
        x += 2.0 * PI;
    } else if x > PI {
        x -= 2.0 * PI;
    }
    x
}

fn rz(a: f64) -> Mat2 {
    rotation([0.0, 0.0, 1.0], a)
}

fn sqrt_x() -> Mat2 {
    rotation([1.0, 0.0, 0.0], FRAC_PI_2)
}

/// `R_Z(φ+π) √X R_Z(θ+π) √X R_Z(λ)`.
pub fn zsx_product(phi: f64, theta: f64, lambda: f64) -> Mat2 {
    rz(phi + PI) * sqrt_x() * rz(theta + PI) * sqrt_x() * rz(lambda)
}

/// Euler angles `(φ, θ, λ)` with `zsx_product(φ, θ, λ) = g` up to phase.
///
/// The angles are read off the matrix of `g` in the `U3(θ, φ, λ)` form. When
/// `θ` is 0 or π only `φ ± λ` is determined and `λ = 0` is chosen. Angles are
/// canonicalized to `(−π, π]`.
pub fn zsx_angles(g: &UnitaryMatrix) -> Result<(f64, f64, f64)> {
    let m = g.matrix().0;
    let theta = 2.0 * m[1][0].norm().atan2(m[0][0].norm());
    let (alpha, phi, lambda);
    if m[0][0].norm() < 1e-9 {
        lambda = 0.0;
        alpha = (-m[0][1]).arg();
        phi = m[1][0].arg() - alpha;
    } else if m[1][0].norm() < 1e-9 {
        lambda = 0.0;
        alpha = m[0][0].arg();
        phi = m[1][1].arg() - alpha;
    } else {
        alpha = m[0][0].arg();
        phi = m[1][0].arg() - alpha;
        lambda = (-m[0][1]).arg() - alpha;
    }
    let (phi, theta, lambda) = (canonical_angle(phi), canonical_angle(theta), canonical_angle(lambda));
    let rebuilt = UnitaryMatrix::new(zsx_product(phi, theta, lambda))?;
    let residual = unitary_to_ptm(&rebuilt).max_abs_diff(&unitary_to_ptm(g));
    if residual > 1e-8 {
        return Err(Error::Internal(format!("ZSX decomposition residual {residual:.3e}")));
    }
    Ok((phi, theta, lambda))
}

/// Axis and angle `a ∈ [0, π]` of the shortest rotation equal to `g` up to
/// phase. For `a = 0` the axis is `ẑ` by convention; for `a = π` the axis is
/// oriented so its first nonzero component is positive.
pub fn shortest_rotation(g: &UnitaryMatrix) -> ([f64; 3], f64) {
    let mut q = g.to_su2();
    if q.w < 0.0 {
        q = Su2 { w: -q.w, v: [-q.v[0], -q.v[1], -q.v[2]] };
    }
    let s = (q.v[0] * q.v[0] + q.v[1] * q.v[1] + q.v[2] * q.v[2]).sqrt();
    if s < 1e-14 {
        return ([0.0, 0.0, 1.0], 0.0);
    }
    let mut axis = [q.v[0] / s, q.v[1] / s, q.v[2] / s];
    let angle = 2.0 * s.atan2(q.w);
    if q.w.abs() < 1e-12 {
        if let Some(first) = axis.iter().copied().find(|x| x.abs() > 1e-12) {
            if first < 0.0 {
                axis = [-axis[0], -axis[1], -axis[2]];
            }
        }
    }
    for x in axis.iter_mut() {
        if x.abs() < 1e-15 {
            *x = 0.0;
        }
    }
    (axis, angle)
}

impl GateProgram {
    fn zsx(g: &UnitaryMatrix) -> Result<GateProgram> {
        let (phi, theta, lambda) = zsx_angles(g)?;
        let x = [1.0, 0.0, 0.0];
        // rotation angle π/2 over a duration ½ ⇒ ω = π/2
        let omega = FRAC_PI_2;
        Ok(GateProgram {
            segments: vec![
                Segment { start: 0.0, duration: 0.5, axis: x, omega },
                Segment { start: 0.5, duration: 0.5, axis: x, omega },
            ],
            kicks: vec![
                Kick { time: 0.0, unitary: UnitaryMatrix::new(rz(lambda))? },
                Kick { time: 0.5, unitary: UnitaryMatrix::new(rz(theta + PI))? },
                Kick { time: 1.0, unitary: UnitaryMatrix::new(rz(phi + PI))? },
            ],
        })
    }

    fn u3(g: &UnitaryMatrix) -> GateProgram {
        let (axis, angle) = shortest_rotation(g);
        GateProgram { segments: vec![Segment { start: 0.0, duration: 1.0, axis, omega: angle / 2.0 }], kicks: Vec::new() }
    }

    fn instant(g: &UnitaryMatrix) -> GateProgram {
        let idle = Segment { start: 0.0, duration: 1.0, axis: [0.0, 0.0, 1.0], omega: 0.0 };
        GateProgram { segments: vec![idle], kicks: vec![Kick { time: 0.0, unitary: *g }] }
    }

    fn kick_active(k: &Kick, tau: f64) -> bool {
        if k.time >= 1.0 {
            tau >= 1.0
        } else {
            tau > k.time
        }
    }

    /// `V(τ)`, composing drives and kicks in time order.
    pub fn unitary_at(&self, tau: f64) -> Mat2 {
        // events are ordered by time; at equal times a kick precedes a drive
        // starting there
        let mut events: Vec<(f64, u8, usize)> = self
            .kicks
            .iter()
            .enumerate()
            .map(|(i, k)| (k.time, 0u8, i))
            .chain(self.segments.iter().enumerate().map(|(i, s)| (s.start, 1u8, i)))
            .collect();
        events.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let mut v = Mat2::identity();
        for (_, kind, i) in events {
            if kind == 0 {
                let k = &self.kicks[i];
                if Self::kick_active(k, tau) {
                    v = *k.unitary.matrix() * v;
                }
            } else {
                let s = &self.segments[i];
                let elapsed = (tau - s.start).clamp(0.0, s.duration);
                if elapsed > 0.0 && s.omega != 0.0 {
                    v = rotation(s.axis, 2.0 * s.omega * elapsed) * v;
                }
            }
        }
        v
    }

    /// Discretizes the program into `substeps` equal substeps. Kicks and
    /// segment boundaries must fall on the substep grid.
    pub fn discretize(&self, substeps: usize) -> Result<Vec<ProgramOp>> {
        let dt = 1.0 / substeps as f64;
        let on_grid = |t: f64| -> Result<usize> {
            let k = (t / dt).round();
            if (t / dt - k).abs() > 1e-9 {
                return invalid(format!("time {t} is not on a grid of {substeps} substeps per gate"));
            }
            Ok(k as usize)
        };
        let mut kicks_at: Vec<Vec<Su2>> = vec![Vec::new(); substeps + 1];
        for k in &self.kicks {
            kicks_at[on_grid(k.time)?].push(k.unitary.to_su2());
        }
        let mut drive = vec![[0.0; 3]; substeps];
        for s in &self.segments {
            let (a, b) = (on_grid(s.start)?, on_grid(s.start + s.duration)?);
            for d in drive.iter_mut().take(b).skip(a) {
                *d = s.drive();
            }
        }
        let mut ops = Vec::with_capacity(substeps + self.kicks.len());
        for j in 0..substeps {
            ops.extend(kicks_at[j].iter().map(|q| ProgramOp::Kick(*q)));
            ops.push(ProgramOp::Drive(drive[j]));
        }
        ops.extend(kicks_at[substeps].iter().map(|q| ProgramOp::Kick(*q)));
        Ok(ops)
    }
}

/// Bloch vector `r` of `V†σ_zV = r·σ`.
fn z_heisenberg(v: &Mat2) -> [f64; 3] {
    (v.adjoint() * Mat2::pauli_z() * *v).pauli_components()
}

fn dot(a: &[f64; 3], b: &[f64; 3]) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

impl GateImplementation {
    pub fn new(kind: GateKind) -> Result<Self> {
        let group = clifford_group();
        let programs = group
            .elements()
            .iter()
            .map(|g| match kind {
                GateKind::Zsx => GateProgram::zsx(g),
                GateKind::U3 => Ok(GateProgram::u3(g)),
                GateKind::Instant => Ok(GateProgram::instant(g)),
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(GateImplementation { kind, programs })
    }

    pub fn kind(&self) -> GateKind {
        self.kind
    }

    pub fn program(&self, clifford_index: usize) -> &GateProgram {
        &self.programs[clifford_index]
    }

    /// Times inside `(0, 1)` where the drive changes abruptly.
    pub fn kinks(&self) -> &'static [f64] {
        match self.kind {
            GateKind::Zsx => &[0.5],
            GateKind::U3 | GateKind::Instant => &[],
        }
    }

    /// `V_i(τ)` for `τ ∈ [0, 1]`.
    pub fn trajectory_unitary(&self, clifford_index: usize, tau: f64) -> Result<UnitaryMatrix> {
        if !(0.0..=1.0).contains(&tau) {
            return invalid(format!("time {tau} outside the gate interval [0, 1]"));
        }
        if clifford_index >= GROUP_ORDER {
            return invalid(format!("Clifford index {clifford_index} out of range"));
        }
        Ok(UnitaryMatrix::new(self.programs[clifford_index].unitary_at(tau))?)
    }

    /// Bloch vectors of `V_g(τ)†σ_zV_g(τ)` for all 24 gates.
    pub fn z_vectors(&self, tau: f64) -> [[f64; 3]; GROUP_ORDER] {
        let mut out = [[0.0; 3]; GROUP_ORDER];
        for (g, r) in out.iter_mut().enumerate() {
            *r = z_heisenberg(&self.programs[g].unitary_at(tau));
        }
        out
    }

    /// Precomputes everything that depends on the later time `τ₁`.
    pub fn overlap_at(&self, tau1: f64) -> OverlapAt<'_> {
        let z1 = self.z_vectors(tau1);
        let mut mean = [0.0; 3];
        for r in &z1 {
            for k in 0..3 {
                mean[k] += r[k] / GROUP_ORDER as f64;
            }
        }
        // g† (a·σ) g = (Rᵀa)·σ with R the rotation block of ptm(g)
        let group = clifford_group();
        let mut twirled = [[0.0; 3]; GROUP_ORDER];
        for (g, t) in twirled.iter_mut().enumerate() {
            let p = group.ptm(g);
            for k in 0..3 {
                t[k] = (0..3).map(|j| p.ptm[j + 1][k + 1] * mean[j]).sum();
            }
        }
        OverlapAt { imp: self, z1, twirled }
    }

    /// `(1/24) Σ_g tr[Z_g(τ₁) Z_g(τ₂)]` for two times in the same gate.
    pub fn f_same_gate(&self, tau1: f64, tau2: f64) -> f64 {
        self.overlap_at(tau1).same(tau2)
    }

    /// `(1/24²) Σ_{g,h} tr[(V_h(τ₁)g)†σ_z(V_h(τ₁)g) · V_g(τ₂)†σ_zV_g(τ₂)]`, with
    /// `τ₁` in the later gate and `τ₂` in the earlier one. Evaluated in the
    /// factored form: the sum over `h` is done first.
    pub fn f_adjacent_gate(&self, tau1: f64, tau2: f64) -> f64 {
        self.overlap_at(tau1).adjacent(tau2)
    }

    /// The adjacent-gate overlap by the literal 576-term double sum.
    pub fn f_adjacent_gate_enumerated(&self, tau1: f64, tau2: f64) -> f64 {
        let group = clifford_group();
        let z = Mat2::pauli_z();
        let mut acc = 0.0;
        for g in 0..GROUP_ORDER {
            let vg2 = self.programs[g].unitary_at(tau2);
            let zg2 = vg2.adjoint() * z * vg2;
            for h in 0..GROUP_ORDER {
                let w = self.programs[h].unitary_at(tau1) * *group.element(g).matrix();
                acc += (w.adjoint() * z * w * zg2).trace().re;
            }
        }
        acc / (GROUP_ORDER * GROUP_ORDER) as f64
    }

    /// `f(t₁, t₂)` for absolute times measured from the end of the zeroth
    /// gate: the gate index is `⌊t⌋`, times two or more gates apart give 0.
    pub fn overlap(&self, t1: f64, t2: f64) -> f64 {
        let (late, early) = if t1 >= t2 { (t1, t2) } else { (t2, t1) };
        let (n1, n2) = (late.floor(), early.floor());
        let (tau1, tau2) = (late - n1, early - n2);
        match (n1 - n2) as i64 {
            0 => self.f_same_gate(tau1, tau2),
            1 => self.f_adjacent_gate(tau1, tau2),
            _ => 0.0,
        }
    }

    /// F coefficients by Gauss–Legendre quadrature, see [`compute_f`].
    pub fn compute_f(&self, quad_points: usize) -> Result<FCoefficients> {
        compute_f(self, quad_points)
    }

    /// Sequence-sampled estimate of `f(t₁, t₂)` straight from the definition:
    /// draws random sequences, builds `U₀(t)` gate by gate and averages
    /// `tr[σ_z(t₁)σ_z(t₂)]`. Returns (mean, standard error).
    pub fn sampled_overlap<R: Rng + ?Sized>(&self, t1: f64, t2: f64, samples: usize, rng: &mut R) -> (f64, f64) {
        let group = clifford_group();
        let n_gates = t1.max(t2).floor() as usize + 1;
        let z = Mat2::pauli_z();
        let propagator = |seq: &[usize], t: f64| -> Mat2 {
            let n = (t.floor() as usize).min(seq.len() - 1);
            let tau = t - n as f64;
            let mut u = Mat2::identity();
            for &g in &seq[..n] {
                u = *group.element(g).matrix() * u;
            }
            self.programs[seq[n]].unitary_at(tau) * u
        };
        let (mut sum, mut sum2) = (0.0, 0.0);
        let mut seq = vec![0usize; n_gates];
        for _ in 0..samples {
            seq.iter_mut().for_each(|g| *g = CliffordGroup::sample_index(rng));
            let u1 = propagator(&seq, t1);
            let u2 = propagator(&seq, t2);
            let x = (u1.adjoint() * z * u1 * u2.adjoint() * z * u2).trace().re;
            sum += x;
            sum2 += x * x;
        }
        let n = samples as f64;
        let mean = sum / n;
        let var = (sum2 / n - mean * mean).max(0.0) * n / (n - 1.0);
        (mean, (var / n).sqrt())
    }
}

/// Shared implementation instances.
pub fn gate_implementation(kind: GateKind) -> &'static GateImplementation {
    static CACHE: OnceLock<[GateImplementation; 3]> = OnceLock::new();
    let all = CACHE.get_or_init(|| {
        GateKind::ALL.map(|k| GateImplementation::new(k).expect("gate implementation construction"))
    });
    &all[GateKind::ALL.iter().position(|k| *k == kind).unwrap()]
}

/// Overlap evaluator with the later time fixed.
pub struct OverlapAt<'a> {
    imp: &'a GateImplementation,
    z1: [[f64; 3]; GROUP_ORDER],
    twirled: [[f64; 3]; GROUP_ORDER],
}

impl OverlapAt<'_> {
    /// Both times in the same gate.
    pub fn same(&self, tau2: f64) -> f64 {
        let z2 = self.imp.z_vectors(tau2);
        let s: f64 = self.z1.iter().zip(&z2).map(|(a, b)| dot(a, b)).sum();
        2.0 * s / GROUP_ORDER as f64
    }

    /// The earlier time in the previous gate.
    pub fn adjacent(&self, tau2: f64) -> f64 {
        let z2 = self.imp.z_vectors(tau2);
        let s: f64 = self.twirled.iter().zip(&z2).map(|(a, b)| dot(a, b)).sum();
        2.0 * s / GROUP_ORDER as f64
    }
}

/// Same-gate and adjacent-gate integrals of the overlap function.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct FCoefficients {
    pub kind: GateKind,
    /// `∫₀¹dt₁∫₀^{t₁}dt₂ f_same(t₁, t₂)`.
    pub f_curr: f64,
    /// `∫₀¹dt₁∫₀¹dt₂ f_adj(t₁, t₂)`.
    pub f_prev: f64,
    pub quad_points: usize,
    /// `max |Q(n) − Q(2n)|` over the two integrals.
    pub quadrature_error_estimate: f64,
    /// Whether the error estimate is below [`FCoefficients::TOLERANCE`].
    pub converged: bool,
    pub f_grid: FGrid,
}

impl FCoefficients {
    pub const TOLERANCE: f64 = 1e-6;
}

/// `f_same` and `f_adj` sampled on the tensor-product quadrature nodes.
#[derive(Clone, Debug, Default, Serialize, Deserialize)]
pub struct FGrid {
    pub nodes: Vec<f64>,
    /// Row-major, `same[i·n + j] = f_same(nodes[i], nodes[j])`.
    pub same: Vec<f64>,
    /// Row-major, `adjacent[i·n + j] = f_adj(nodes[i], nodes[j])`.
    pub adjacent: Vec<f64>,
}

fn integrate_f(imp: &GateImplementation, n: usize) -> (f64, f64, FGrid) {
    let rule = GaussRule::new(n);
    let kinks = imp.kinks();
    let nodes: Vec<(f64, f64)> = panels(0.0, 1.0, kinks)
        .into_iter()
        .flat_map(|(a, b)| rule.mapped(a, b).collect::<Vec<_>>())
        .collect();
    let z_at: Vec<[[f64; 3]; GROUP_ORDER]> = nodes.iter().map(|(x, _)| imp.z_vectors(*x)).collect();

    let mut f_curr = 0.0;
    let mut f_prev = 0.0;
    let mut grid = FGrid { nodes: nodes.iter().map(|p| p.0).collect(), ..Default::default() };
    for &(t1, w1) in &nodes {
        let at = imp.overlap_at(t1);
        // triangle t₂ < t₁: one Gauss panel per smooth piece of [0, t₁]
        let inner: f64 = panels(0.0, t1, kinks)
            .into_iter()
            .map(|(a, b)| rule.integrate(a, b, |t2| at.same(t2)))
            .sum();
        f_curr += w1 * inner;
        for (j, &(_, w2)) in nodes.iter().enumerate() {
            let same: f64 = at.z1.iter().zip(&z_at[j]).map(|(a, b)| dot(a, b)).sum::<f64>() * 2.0 / 24.0;
            let adj: f64 = at.twirled.iter().zip(&z_at[j]).map(|(a, b)| dot(a, b)).sum::<f64>() * 2.0 / 24.0;
            grid.same.push(same);
            grid.adjacent.push(adj);
            f_prev += w1 * w2 * adj;
        }
    }
    (f_curr, f_prev, grid)
}

/// Computes `F_curr` and `F_prev` at `quad_points` and `2·quad_points` nodes
/// per smooth panel and reports the larger difference as the error estimate.
pub fn compute_f(imp: &GateImplementation, quad_points: usize) -> Result<FCoefficients> {
    if quad_points < 8 {
        return invalid(format!("quad_points must be at least 8, got {quad_points}"));
    }
    let (c1, p1, grid) = integrate_f(imp, quad_points);
    let (c2, p2, _) = integrate_f(imp, 2 * quad_points);
    let err = (c1 - c2).abs().max((p1 - p2).abs());
    Ok(FCoefficients {
        kind: imp.kind,
        f_curr: c2,
        f_prev: p2,
        quad_points,
        quadrature_error_estimate: err,
        converged: err < FCoefficients::TOLERANCE,
        f_grid: grid,
    })
}

/// Cached F coefficients at the default resolution of 32 points.
pub fn f_coefficients(kind: GateKind) -> &'static FCoefficients {
    static CACHE: OnceLock<[FCoefficients; 3]> = OnceLock::new();
    let all = CACHE.get_or_init(|| {
        GateKind::ALL.map(|k| compute_f(gate_implementation(k), 32).expect("F coefficient quadrature"))
    });
    &all[GateKind::ALL.iter().position(|k| *k == kind).unwrap()]
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pauli::Superoperator;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn ptm_dist(a: &Mat2, b: &Mat2) -> f64 {
        unitary_to_ptm(&UnitaryMatrix::new(*a).unwrap()).max_abs_diff(&unitary_to_ptm(&UnitaryMatrix::new(*b).unwrap()))
    }

    #[test]
    fn boundary_conditions_hold_for_every_gate() {
        let group = clifford_group();
        for kind in GateKind::ALL {
            let imp = gate_implementation(kind);
            for i in 0..24 {
                let v0 = imp.trajectory_unitary(i, 0.0).unwrap();
                assert!(ptm_dist(v0.matrix(), &Mat2::identity()) < 1e-12);
                let v1 = imp.trajectory_unitary(i, 1.0).unwrap();
                assert!(ptm_dist(v1.matrix(), group.element(i).matrix()) < 1e-10, "{kind} gate {i}");
                let total: f64 = imp.program(i).segments.iter().map(|s| s.duration).sum();
                assert_eq!(total, 1.0);
            }
        }
    }

    #[test]
    fn trajectory_rejects_times_outside_the_gate() {
        let imp = gate_implementation(GateKind::U3);
        assert!(imp.trajectory_unitary(3, -0.1).is_err());
        assert!(imp.trajectory_unitary(3, 1.1).is_err());
        assert!(imp.trajectory_unitary(24, 0.5).is_err());
    }

    #[test]
    fn instant_gate_acts_immediately() {
        let group = clifford_group();
        let imp = gate_implementation(GateKind::Instant);
        for i in 0..24 {
            let v = imp.trajectory_unitary(i, 0.5).unwrap();
            assert!(ptm_dist(v.matrix(), group.element(i).matrix()) < 1e-15);
        }
    }

    #[test]
    fn zsx_angles_reconstruct_all_gates() {
        let group = clifford_group();
        for i in 0..24 {
            let (phi, theta, lambda) = zsx_angles(group.element(i)).unwrap();
            for a in [phi, theta, lambda] {
                assert!(a > -PI && a <= PI);
            }
            let d = ptm_dist(&zsx_product(phi, theta, lambda), group.element(i).matrix());
            assert!(d < 1e-10, "gate {i}: residual {d}");
        }
        let (phi, theta, lambda) = zsx_angles(&UnitaryMatrix::identity()).unwrap();
        let p = unitary_to_ptm(&UnitaryMatrix::new(zsx_product(phi, theta, lambda)).unwrap());
        assert!(p.max_abs_diff(&Superoperator::identity()) < 1e-12);
        let sx = UnitaryMatrix::new(sqrt_x()).unwrap();
        let (phi, theta, lambda) = zsx_angles(&sx).unwrap();
        assert!(ptm_dist(&zsx_product(phi, theta, lambda), &sqrt_x()) < 1e-12);
    }

    #[test]
    fn shortest_rotation_examples() {
        let (axis, angle) = shortest_rotation(&UnitaryMatrix::identity());
        assert_eq!(angle, 0.0);
        assert_eq!(axis, [0.0, 0.0, 1.0]);
        let (axis, angle) = shortest_rotation(&UnitaryMatrix::new(Mat2::pauli_x()).unwrap());
        assert!((angle - PI).abs() < 1e-14);
        assert!((axis[0] - 1.0).abs() < 1e-14 && axis[1].abs() < 1e-14 && axis[2].abs() < 1e-14);
        let (axis, angle) = shortest_rotation(&UnitaryMatrix::new(Mat2::hadamard()).unwrap());
        let s = std::f64::consts::FRAC_1_SQRT_2;
        assert!((angle - PI).abs() < 1e-14);
        assert!((axis[0] - s).abs() < 1e-14 && axis[1].abs() < 1e-14 && (axis[2] - s).abs() < 1e-14);
        // the U3 identity gate idles
        let imp = gate_implementation(GateKind::U3);
        assert!(imp.program(0).segments.iter().all(|s| s.omega == 0.0));
    }

    #[test]
    fn u3_angles_are_shortest() {
        let group = clifford_group();
        for i in 0..24 {
            let (_, angle) = shortest_rotation(group.element(i));
            assert!((0.0..=PI + 1e-12).contains(&angle));
        }
    }

    #[test]
    fn overlap_equal_times_is_two() {
        for kind in GateKind::ALL {
            let imp = gate_implementation(kind);
            for tau in [0.0, 0.13, 0.5, 0.77, 1.0] {
                assert!((imp.f_same_gate(tau, tau) - 2.0).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn instant_overlaps() {
        let imp = gate_implementation(GateKind::Instant);
        for (a, b) in [(0.1, 0.9), (0.5, 0.2), (1.0, 0.3)] {
            assert!((imp.f_same_gate(a, b) - 2.0).abs() < 1e-12);
            assert!(imp.f_adjacent_gate(a, b).abs() < 1e-12);
            assert!(imp.f_adjacent_gate_enumerated(a, b).abs() < 1e-12);
        }
    }

    #[test]
    fn adjacent_boundary_is_two_and_consistent() {
        for kind in GateKind::ALL {
            let imp = gate_implementation(kind);
            assert!((imp.f_adjacent_gate(0.0, 1.0) - 2.0).abs() < 1e-12);
            for tau2 in [0.0, 0.3, 0.5, 0.8, 1.0] {
                let a = imp.f_adjacent_gate(0.0, tau2);
                let b = imp.f_same_gate(1.0, tau2);
                assert!((a - b).abs() < 1e-12, "{kind} τ₂={tau2}: {a} vs {b}");
            }
        }
    }

    #[test]
    fn factored_adjacent_matches_enumeration() {
        for kind in GateKind::ALL {
            let imp = gate_implementation(kind);
            for (a, b) in [(0.5, 0.5), (0.2, 0.9), (0.75, 0.1)] {
                let x = imp.f_adjacent_gate(a, b);
                let y = imp.f_adjacent_gate_enumerated(a, b);
                assert!((x - y).abs() < 1e-12, "{kind}: {x} vs {y}");
            }
        }
    }

    #[test]
    fn overlap_dispatch() {
        let imp = gate_implementation(GateKind::Zsx);
        assert_eq!(imp.overlap(2.3, 0.2), 0.0);
        assert!((imp.overlap(1.3, 0.2) - imp.f_adjacent_gate(0.3, 0.2)).abs() < 1e-15);
        assert!((imp.overlap(0.2, 1.3) - imp.f_adjacent_gate(0.3, 0.2)).abs() < 1e-15);
        assert!((imp.overlap(1.7, 1.2) - imp.f_same_gate(0.7, 0.2)).abs() < 1e-14);
    }

    #[test]
    fn instant_f_coefficients() {
        let f = compute_f(gate_implementation(GateKind::Instant), 16).unwrap();
        assert!((f.f_curr - 1.0).abs() < 1e-12);
        assert!(f.f_prev.abs() < 1e-12);
    }

    #[test]
    fn zsx_sampled_oracle_quarter_gate() {
        let imp = gate_implementation(GateKind::Zsx);
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let (mean, se) = imp.sampled_overlap(0.25, 0.0, 100_000, &mut rng);
        let exact = imp.f_same_gate(0.25, 0.0);
        assert!((mean - exact).abs() < 3.0 * se, "{mean} ± {se} vs {exact}");
        let (mean, se) = imp.sampled_overlap(1.5, 0.5, 100_000, &mut rng);
        let exact = imp.f_adjacent_gate(0.5, 0.5);
        assert!((mean - exact).abs() < 3.0 * se, "{mean} ± {se} vs {exact}");
    }

    #[test]
    fn discretized_program_reproduces_the_gate() {
        let group = clifford_group();
        for kind in GateKind::ALL {
            let imp = gate_implementation(kind);
            for i in 0..24 {
                let ops = imp.program(i).discretize(16).unwrap();
                let mut q = Su2::IDENTITY;
                for op in ops {
                    q = match op {
                        ProgramOp::Kick(k) => k.mul(&q),
                        ProgramOp::Drive(h) => Su2::from_generator(h, 1.0 / 16.0).mul(&q),
                    };
                }
                assert!(ptm_dist(&q.to_mat2(), group.element(i).matrix()) < 1e-12);
            }
        }
        assert!(gate_implementation(GateKind::Zsx).program(5).discretize(9).is_err());
    }
}
