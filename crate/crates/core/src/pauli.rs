//! Qubit operators, Pauli-transfer matrices and the depolarizing generators.
//!
//! The PTM basis is `(I, X, Y, Z)/√2`, so a channel `E` has entries
//! `M[i][j] = tr(P_i E(P_j))` with normalized `P_i`. Unitary channels are
//! orthogonal matrices in this basis.

use std::ops::{Add, Mul, Sub};

use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};

pub type C64 = Complex64;

const ZERO: C64 = C64::new(0.0, 0.0);
const ONE: C64 = C64::new(1.0, 0.0);
const I: C64 = C64::new(0.0, 1.0);

/// A plain 2×2 complex matrix, row-major.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Mat2(pub [[C64; 2]; 2]);

impl Mat2 {
    pub const fn new(a: C64, b: C64, c: C64, d: C64) -> Self {
        Mat2([[a, b], [c, d]])
    }

    pub const fn identity() -> Self {
        Mat2::new(ONE, ZERO, ZERO, ONE)
    }

    pub const fn zero() -> Self {
        Mat2::new(ZERO, ZERO, ZERO, ZERO)
    }

    pub const fn pauli_x() -> Self {
        Mat2::new(ZERO, ONE, ONE, ZERO)
    }

    pub const fn pauli_y() -> Self {
        Mat2::new(ZERO, C64::new(0.0, -1.0), I, ZERO)
    }

    pub const fn pauli_z() -> Self {
        Mat2::new(ONE, ZERO, ZERO, C64::new(-1.0, 0.0))
    }

    /// `n·σ` for a real 3-vector `n`.
    pub fn pauli_vector(n: [f64; 3]) -> Self {
        Mat2::new(
            C64::new(n[2], 0.0),
            C64::new(n[0], -n[1]),
            C64::new(n[0], n[1]),
            C64::new(-n[2], 0.0),
        )
    }

    pub fn hadamard() -> Self {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        Mat2::new(C64::new(s, 0.0), C64::new(s, 0.0), C64::new(s, 0.0), C64::new(-s, 0.0))
    }

    /// The phase gate `diag(1, i)`.
    pub fn phase_s() -> Self {
        Mat2::new(ONE, ZERO, ZERO, I)
    }

    pub fn adjoint(&self) -> Self {
        let m = &self.0;
        Mat2::new(m[0][0].conj(), m[1][0].conj(), m[0][1].conj(), m[1][1].conj())
    }

    pub fn trace(&self) -> C64 {
        self.0[0][0] + self.0[1][1]
    }

    pub fn det(&self) -> C64 {
        self.0[0][0] * self.0[1][1] - self.0[0][1] * self.0[1][0]
    }

    pub fn scale(&self, s: C64) -> Self {
        let m = &self.0;
        Mat2::new(m[0][0] * s, m[0][1] * s, m[1][0] * s, m[1][1] * s)
    }

    /// Largest entry modulus.
    pub fn max_abs(&self) -> f64 {
        self.0.iter().flatten().map(|z| z.norm()).fold(0.0, f64::max)
    }

    /// `‖U†U − 𝟙‖_max`.
    pub fn unitarity_residual(&self) -> f64 {
        (self.adjoint() * *self - Mat2::identity()).max_abs()
    }

    /// Bloch components `tr(Aσ_k)/2` for k = x, y, z. Real when `A` is Hermitian.
    pub fn pauli_components(&self) -> [f64; 3] {
        [
            (Mat2::pauli_x() * *self).trace().re / 2.0,
            (Mat2::pauli_y() * *self).trace().re / 2.0,
            (Mat2::pauli_z() * *self).trace().re / 2.0,
        ]
    }
}

impl Mul for Mat2 {
    type Output = Mat2;
    fn mul(self, rhs: Mat2) -> Mat2 {
        let a = &self.0;
        let b = &rhs.0;
        Mat2::new(
            a[0][0] * b[0][0] + a[0][1] * b[1][0],
            a[0][0] * b[0][1] + a[0][1] * b[1][1],
            a[1][0] * b[0][0] + a[1][1] * b[1][0],
            a[1][0] * b[0][1] + a[1][1] * b[1][1],
        )
    }
}

impl Add for Mat2 {
    type Output = Mat2;
    fn add(self, rhs: Mat2) -> Mat2 {
        let a = &self.0;
        let b = &rhs.0;
        Mat2::new(a[0][0] + b[0][0], a[0][1] + b[0][1], a[1][0] + b[1][0], a[1][1] + b[1][1])
    }
}

impl Sub for Mat2 {
    type Output = Mat2;
    fn sub(self, rhs: Mat2) -> Mat2 {
        self + rhs.scale(C64::new(-1.0, 0.0))
    }
}

/// The four Pauli matrices `I, X, Y, Z` (not normalized).
pub fn paulis() -> [Mat2; 4] {
    [Mat2::identity(), Mat2::pauli_x(), Mat2::pauli_y(), Mat2::pauli_z()]
}

/// `exp(−i (θ/2) n̂·σ)` for a unit axis `n̂`.
pub fn rotation(axis: [f64; 3], angle: f64) -> Mat2 {
    let (s, c) = (angle / 2.0).sin_cos();
    Mat2::identity().scale(C64::new(c, 0.0)) - Mat2::pauli_vector(axis).scale(C64::new(0.0, s))
}

/// A 2×2 unitary. Construction checks `U†U = 𝟙` to 1e-8.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct UnitaryMatrix(Mat2);

impl UnitaryMatrix {
    pub const UNITARITY_TOL: f64 = 1e-8;

    pub fn new(m: Mat2) -> Result<Self> {
        let r = m.unitarity_residual();
        if !(r <= Self::UNITARITY_TOL) {
            return invalid(format!("matrix is not unitary (residual {r:.3e})"));
        }
        Ok(UnitaryMatrix(m))
    }

    pub fn identity() -> Self {
        UnitaryMatrix(Mat2::identity())
    }

    pub fn rotation(axis: [f64; 3], angle: f64) -> Self {
        UnitaryMatrix(rotation(axis, angle))
    }

    pub fn matrix(&self) -> &Mat2 {
        &self.0
    }

    pub fn adjoint(&self) -> Self {
        UnitaryMatrix(self.0.adjoint())
    }

    /// Global phase chosen so the largest-modulus entry is real and positive.
    pub fn phase_normalized(&self) -> Self {
        let mut best = self.0 .0[0][0];
        for z in self.0 .0.iter().flatten() {
            if z.norm() > best.norm() + 1e-12 {
                best = *z;
            }
        }
        let phase = best.conj() / best.norm();
        UnitaryMatrix(self.0.scale(phase))
    }

    /// The SU(2) representative, up to the sign ambiguity.
    pub fn to_su2(&self) -> Su2 {
        let d = self.0.det().sqrt();
        let m = self.0.scale(d.inv());
        // m = w − i v·σ  ⇒  w = tr(m)/2, v_k = i·tr(mσ_k)/2
        let w = m.trace().re / 2.0;
        let v = [
            ((Mat2::pauli_x() * m).trace() * I).re / 2.0,
            ((Mat2::pauli_y() * m).trace() * I).re / 2.0,
            ((Mat2::pauli_z() * m).trace() * I).re / 2.0,
        ];
        Su2 { w, v }.normalized()
    }
}

impl Mul for UnitaryMatrix {
    type Output = UnitaryMatrix;
    fn mul(self, rhs: UnitaryMatrix) -> UnitaryMatrix {
        UnitaryMatrix(self.0 * rhs.0)
    }
}

/// Haar-random unitary from a normalized Gaussian quaternion times a random phase.
pub fn haar_unitary<R: Rng + ?Sized>(rng: &mut R) -> UnitaryMatrix {
    let mut q = [0.0f64; 4];
    for x in q.iter_mut() {
        *x = rng.sample(StandardNormal);
    }
    let n = q.iter().map(|x| x * x).sum::<f64>().sqrt();
    let su = Su2 { w: q[0] / n, v: [q[1] / n, q[2] / n, q[3] / n] };
    let phase = C64::from_polar(1.0, rng.random_range(0.0..std::f64::consts::TAU));
    UnitaryMatrix(su.to_mat2().scale(phase))
}

/// Unit quaternion `w𝟙 − i v·σ`, used in the Monte Carlo hot loop.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Su2 {
    pub w: f64,
    pub v: [f64; 3],
}

impl Su2 {
    pub const IDENTITY: Su2 = Su2 { w: 1.0, v: [0.0; 3] };

    /// `exp(−i h·σ dt)`.
    #[inline]
    pub fn from_generator(h: [f64; 3], dt: f64) -> Su2 {
        let n = (h[0] * h[0] + h[1] * h[1] + h[2] * h[2]).sqrt();
        if n == 0.0 {
            return Su2::IDENTITY;
        }
        let (s, c) = (n * dt).sin_cos();
        let k = s / n;
        Su2 { w: c, v: [h[0] * k, h[1] * k, h[2] * k] }
    }

    #[inline]
    pub fn mul(&self, o: &Su2) -> Su2 {
        let (a, b) = (&self.v, &o.v);
        Su2 {
            w: self.w * o.w - (a[0] * b[0] + a[1] * b[1] + a[2] * b[2]),
            v: [
                self.w * b[0] + o.w * a[0] + (a[1] * b[2] - a[2] * b[1]),
                self.w * b[1] + o.w * a[1] + (a[2] * b[0] - a[0] * b[2]),
                self.w * b[2] + o.w * a[2] + (a[0] * b[1] - a[1] * b[0]),
            ],
        }
    }

    pub fn adjoint(&self) -> Su2 {
        Su2 { w: self.w, v: [-self.v[0], -self.v[1], -self.v[2]] }
    }

    pub fn norm_sqr(&self) -> f64 {
        self.w * self.w + self.v.iter().map(|x| x * x).sum::<f64>()
    }

    pub fn normalized(&self) -> Su2 {
        let n = self.norm_sqr().sqrt();
        Su2 { w: self.w / n, v: [self.v[0] / n, self.v[1] / n, self.v[2] / n] }
    }

    /// `|⟨0|U|0⟩|²`.
    #[inline]
    pub fn survival(&self) -> f64 {
        self.w * self.w + self.v[2] * self.v[2]
    }

    pub fn to_mat2(&self) -> Mat2 {
        Mat2::identity().scale(C64::new(self.w, 0.0)) - Mat2::pauli_vector(self.v).scale(I)
    }
}

/// A linear map on qubit operators, stored as its 4×4 real PTM.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Superoperator {
    pub ptm: [[f64; 4]; 4],
}

impl Superoperator {
    pub fn identity() -> Self {
        Self::diag([1.0; 4])
    }

    pub fn zero() -> Self {
        Superoperator { ptm: [[0.0; 4]; 4] }
    }

    pub fn diag(d: [f64; 4]) -> Self {
        let mut ptm = [[0.0; 4]; 4];
        for i in 0..4 {
            ptm[i][i] = d[i];
        }
        Superoperator { ptm }
    }

    /// PTM of an arbitrary Hermiticity-preserving linear map.
    pub fn from_map(f: impl Fn(&Mat2) -> Mat2) -> Self {
        let p = paulis();
        let mut ptm = [[0.0; 4]; 4];
        for j in 0..4 {
            let image = f(&p[j]);
            for i in 0..4 {
                ptm[i][j] = (p[i] * image).trace().re / 2.0;
            }
        }
        Superoperator { ptm }
    }

    pub fn transpose(&self) -> Self {
        let mut ptm = [[0.0; 4]; 4];
        for i in 0..4 {
            for j in 0..4 {
                ptm[i][j] = self.ptm[j][i];
            }
        }
        Superoperator { ptm }
    }

    pub fn scale(&self, s: f64) -> Self {
        let mut out = *self;
        out.ptm.iter_mut().flatten().for_each(|x| *x *= s);
        out
    }

    pub fn frobenius(&self) -> f64 {
        self.ptm.iter().flatten().map(|x| x * x).sum::<f64>().sqrt()
    }

    /// Frobenius inner product `tr(AᵀB)`.
    pub fn dot(&self, o: &Superoperator) -> f64 {
        let mut s = 0.0;
        for i in 0..4 {
            for j in 0..4 {
                s += self.ptm[i][j] * o.ptm[i][j];
            }
        }
        s
    }

    pub fn max_abs_diff(&self, o: &Superoperator) -> f64 {
        let mut d: f64 = 0.0;
        for i in 0..4 {
            for j in 0..4 {
                d = d.max((self.ptm[i][j] - o.ptm[i][j]).abs());
            }
        }
        d
    }

    /// Applies the map to an operator.
    pub fn apply(&self, a: &Mat2) -> Mat2 {
        let p = paulis();
        let coords: Vec<C64> = p.iter().map(|pi| (*pi * *a).trace() / 2.0).collect();
        let mut out = Mat2::zero();
        for i in 0..4 {
            let mut c = ZERO;
            for j in 0..4 {
                c += coords[j] * self.ptm[i][j];
            }
            out = out + p[i].scale(c);
        }
        out
    }

    /// Matrix exponential by scaling and squaring of a Taylor series.
    pub fn exp(&self) -> Superoperator {
        let norm = self.ptm.iter().flatten().map(|x| x.abs()).sum::<f64>();
        let squarings = if norm > 0.5 { (norm / 0.5).log2().ceil() as u32 } else { 0 };
        let a = self.scale(0.5f64.powi(squarings as i32));
        let mut term = Superoperator::identity();
        let mut sum = Superoperator::identity();
        for k in 1..=20 {
            term = (term * a).scale(1.0 / k as f64);
            sum = sum + term;
        }
        for _ in 0..squarings {
            sum = sum * sum;
        }
        sum
    }
}

impl Mul for Superoperator {
    type Output = Superoperator;
    fn mul(self, rhs: Superoperator) -> Superoperator {
        let mut ptm = [[0.0; 4]; 4];
        for i in 0..4 {
            for k in 0..4 {
                let a = self.ptm[i][k];
                if a == 0.0 {
                    continue;
                }
                for j in 0..4 {
                    ptm[i][j] += a * rhs.ptm[k][j];
                }
            }
        }
        Superoperator { ptm }
    }
}

impl Add for Superoperator {
    type Output = Superoperator;
    fn add(self, rhs: Superoperator) -> Superoperator {
        let mut out = self;
        for i in 0..4 {
            for j in 0..4 {
                out.ptm[i][j] += rhs.ptm[i][j];
            }
        }
        out
    }
}

impl Sub for Superoperator {
    type Output = Superoperator;
    fn sub(self, rhs: Superoperator) -> Superoperator {
        self + rhs.scale(-1.0)
    }
}

/// A qubit density matrix.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DensityMatrix(Mat2);

impl DensityMatrix {
    pub fn new(m: Mat2) -> Result<Self> {
        let herm = (m - m.adjoint()).max_abs();
        if herm > 1e-12 {
            return invalid(format!("density matrix not Hermitian (residual {herm:.3e})"));
        }
        let tr = m.trace();
        if (tr - ONE).norm() > 1e-12 {
            return invalid(format!("density matrix trace {tr} ≠ 1"));
        }
        let r = m.pauli_components();
        let len = (r[0] * r[0] + r[1] * r[1] + r[2] * r[2]).sqrt();
        // eigenvalues are (1 ± |r|)/2 with r the Bloch vector 2·components
        if (1.0 - 2.0 * len) / 2.0 < -1e-10 {
            return invalid("density matrix has a negative eigenvalue");
        }
        Ok(DensityMatrix(m))
    }

    pub fn ground() -> Self {
        DensityMatrix(Mat2::new(ONE, ZERO, ZERO, ZERO))
    }

    pub fn from_bloch(r: [f64; 3]) -> Result<Self> {
        let m = (Mat2::identity() + Mat2::pauli_vector(r)).scale(C64::new(0.5, 0.0));
        DensityMatrix::new(m)
    }

    pub fn matrix(&self) -> &Mat2 {
        &self.0
    }

    pub fn bloch(&self) -> [f64; 3] {
        let c = self.0.pauli_components();
        [2.0 * c[0], 2.0 * c[1], 2.0 * c[2]]
    }

    /// Coordinates in the normalized Pauli basis.
    pub fn to_vec(&self) -> [f64; 4] {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let p = paulis();
        let mut v = [0.0; 4];
        for i in 0..4 {
            v[i] = (p[i] * self.0).trace().re * s;
        }
        v
    }
}

/// PTM of `ρ ↦ UρU†`.
pub fn unitary_to_ptm(u: &UnitaryMatrix) -> Superoperator {
    let m = *u.matrix();
    let ma = m.adjoint();
    Superoperator::from_map(|p| m * *p * ma)
}

/// PTM of `ρ ↦ UρU†` for an unchecked matrix; errors if `U` is not unitary.
pub fn try_unitary_to_ptm(m: &Mat2) -> Result<Superoperator> {
    Ok(unitary_to_ptm(&UnitaryMatrix::new(*m)?))
}

/// Depolarizing channel `exp(c·Σ_α D[σ_α])` written in terms of its strength
/// `Λ = (1 − e^{−4c})/4`.
pub fn depolarizing_superoperator(lambda: f64) -> Result<Superoperator> {
    if !(0.0..=0.25).contains(&lambda) {
        return invalid(format!("depolarizing strength {lambda} outside [0, 1/4]"));
    }
    let c = 1.0 - 4.0 * lambda;
    Ok(Superoperator::diag([1.0, c, c, c]))
}

/// PTM of the Lindblad dissipator `D[L]ρ = LρL† − ½{L†L, ρ}`.
pub fn dissipator_ptm(l: &Mat2) -> Superoperator {
    let la = l.adjoint();
    let lal = la * *l;
    let half = C64::new(0.5, 0.0);
    Superoperator::from_map(|p| *l * *p * la - (lal * *p + *p * lal).scale(half))
}

/// PTM of `Σ_{α∈{x,y,z}} D[σ_α]`, which is `diag(0, −4, −4, −4)`.
pub fn dissipator_sum_ptm() -> Superoperator {
    dissipator_ptm(&Mat2::pauli_x()) + dissipator_ptm(&Mat2::pauli_y()) + dissipator_ptm(&Mat2::pauli_z())
}

/// PTM of `ρ ↦ −i[H, ρ]`.
pub fn commutator_ptm(h: &Mat2) -> Superoperator {
    let mi = C64::new(0.0, -1.0);
    Superoperator::from_map(|p| (*h * *p - *p * *h).scale(mi))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn assert_ptm_close(a: &Superoperator, b: &Superoperator, tol: f64) {
        let d = a.max_abs_diff(b);
        assert!(d <= tol, "PTMs differ by {d:.3e}\n{a:?}\n{b:?}");
    }

    #[test]
    fn identity_ptm() {
        assert_ptm_close(&unitary_to_ptm(&UnitaryMatrix::identity()), &Superoperator::identity(), 1e-15);
    }

    #[test]
    fn pauli_x_ptm_flips_y_and_z() {
        let x = UnitaryMatrix::new(Mat2::pauli_x()).unwrap();
        assert_ptm_close(&unitary_to_ptm(&x), &Superoperator::diag([1.0, 1.0, -1.0, -1.0]), 1e-15);
    }

    #[test]
    fn hadamard_swaps_x_z_and_negates_y() {
        let h = UnitaryMatrix::new(Mat2::hadamard()).unwrap();
        let mut expected = Superoperator::zero();
        expected.ptm[0][0] = 1.0;
        expected.ptm[1][3] = 1.0;
        expected.ptm[3][1] = 1.0;
        expected.ptm[2][2] = -1.0;
        assert_ptm_close(&unitary_to_ptm(&h), &expected, 1e-15);
    }

    #[test]
    fn non_unitary_is_rejected() {
        let m = Mat2::identity().scale(C64::new(1.0 + 1e-6, 0.0));
        assert!(try_unitary_to_ptm(&m).is_err());
        let m = Mat2::identity().scale(C64::new(1.0 + 1e-10, 0.0));
        assert!(try_unitary_to_ptm(&m).is_ok());
    }

    #[test]
    fn ptm_matches_conjugation_on_states() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..20 {
            let u = haar_unitary(&mut rng);
            let rho = DensityMatrix::from_bloch([0.3, -0.5, 0.6]).unwrap();
            let out = DensityMatrix::new({
                let m = *u.matrix();
                m * *rho.matrix() * m.adjoint()
            });
            let out = out.unwrap().to_vec();
            let v = rho.to_vec();
            let p = unitary_to_ptm(&u);
            for i in 0..4 {
                let mv: f64 = (0..4).map(|j| p.ptm[i][j] * v[j]).sum();
                assert!((mv - out[i]).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn depolarizing_values() {
        assert_ptm_close(&depolarizing_superoperator(0.0).unwrap(), &Superoperator::identity(), 0.0);
        assert_ptm_close(
            &depolarizing_superoperator(0.25).unwrap(),
            &Superoperator::diag([1.0, 0.0, 0.0, 0.0]),
            0.0,
        );
        assert_ptm_close(
            &depolarizing_superoperator(0.1).unwrap(),
            &Superoperator::diag([1.0, 0.6, 0.6, 0.6]),
            1e-15,
        );
        assert!(depolarizing_superoperator(-0.01).is_err());
        assert!(depolarizing_superoperator(0.26).is_err());
    }

    #[test]
    fn dissipator_sum_is_minus_four_on_traceless_part() {
        let d = dissipator_sum_ptm();
        assert_ptm_close(&d, &Superoperator::diag([0.0, -4.0, -4.0, -4.0]), 1e-15);
        let half_id = Mat2::identity().scale(C64::new(0.5, 0.0));
        assert!(d.apply(&half_id).max_abs() < 1e-15);
        let x = Mat2::pauli_x();
        assert!((d.apply(&x) - x.scale(C64::new(-4.0, 0.0))).max_abs() < 1e-15);
    }

    #[test]
    fn exponentiated_dissipator_is_depolarizing() {
        let t = 0.25 * 2f64.ln();
        let e = dissipator_sum_ptm().scale(t).exp();
        assert_ptm_close(&e, &Superoperator::diag([1.0, 0.5, 0.5, 0.5]), 1e-12);
        for c in [0.0, 0.01, 0.1, 1.0] {
            let e = dissipator_sum_ptm().scale(c).exp();
            let lambda = (1.0 - (-4.0 * c).exp()) / 4.0;
            assert_ptm_close(&e, &depolarizing_superoperator(lambda).unwrap(), 1e-12);
        }
    }

    #[test]
    fn su2_roundtrip_and_survival() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for _ in 0..20 {
            let u = haar_unitary(&mut rng);
            let q = u.to_su2();
            let back = UnitaryMatrix::new(q.to_mat2()).unwrap();
            assert_ptm_close(&unitary_to_ptm(&u), &unitary_to_ptm(&back), 1e-12);
            let amp = u.matrix().0[0][0].norm_sqr();
            assert!((q.survival() - amp).abs() < 1e-12);
        }
    }

    #[test]
    fn su2_product_matches_matrix_product() {
        let a = Su2::from_generator([0.3, -0.2, 0.9], 0.7);
        let b = Su2::from_generator([-1.0, 0.4, 0.1], 0.3);
        let prod = a.mul(&b).to_mat2();
        assert!((prod - a.to_mat2() * b.to_mat2()).max_abs() < 1e-15);
        let r = rotation([0.0, 0.0, 1.0], 0.8);
        assert!((Su2::from_generator([0.0, 0.0, 1.0], 0.4).to_mat2() - r).max_abs() < 1e-15);
    }
}
