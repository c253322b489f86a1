//! The 24-element single-qubit Clifford group and its twirl identities.

use std::sync::OnceLock;

use rand::Rng;

use crate::error::{Error, Result};
use crate::pauli::{unitary_to_ptm, Mat2, Superoperator, UnitaryMatrix, C64};

pub const GROUP_ORDER: usize = 24;

/// Canonically ordered Clifford group with multiplication and inverse tables.
#[derive(Clone, Debug)]
pub struct CliffordGroup {
    elements: Vec<UnitaryMatrix>,
    ptms: Vec<Superoperator>,
    mult_table: Vec<[usize; GROUP_ORDER]>,
    inverse_table: [usize; GROUP_ORDER],
}

fn ptm_key(p: &Superoperator) -> Vec<i64> {
    p.ptm.iter().flatten().map(|x| (x * 1e6).round() as i64).collect()
}

/// Generates the group from `{H, S}` by breadth-first closure and orders it by
/// the descending lexicographic order of the rounded PTM entries, which puts
/// the identity first.
pub fn build_group() -> Result<CliffordGroup> {
    let gens = [UnitaryMatrix::new(Mat2::hadamard())?, UnitaryMatrix::new(Mat2::phase_s())?];
    let mut found: Vec<(UnitaryMatrix, Superoperator)> =
        vec![(UnitaryMatrix::identity(), Superoperator::identity())];
    let mut frontier = 0;
    while frontier < found.len() {
        let g = found[frontier].0;
        frontier += 1;
        for h in &gens {
            let prod = g * *h;
            let p = unitary_to_ptm(&prod);
            if found.iter().all(|(_, q)| q.max_abs_diff(&p) > 1e-6) {
                found.push((prod, p));
            }
        }
        if found.len() > GROUP_ORDER {
            break;
        }
    }
    if found.len() != GROUP_ORDER {
        return Err(Error::Internal(format!("closure produced {} elements", found.len())));
    }
    found.sort_by(|a, b| ptm_key(&b.1).cmp(&ptm_key(&a.1)));

    let elements: Vec<UnitaryMatrix> = found.iter().map(|(u, _)| u.phase_normalized()).collect();
    let ptms: Vec<Superoperator> = found.iter().map(|(_, p)| *p).collect();
    let lookup = |p: &Superoperator| -> Result<usize> {
        ptms.iter()
            .position(|q| q.max_abs_diff(p) < 1e-6)
            .ok_or_else(|| Error::Internal("product left the group".into()))
    };
    let mut mult_table = vec![[0usize; GROUP_ORDER]; GROUP_ORDER];
    for a in 0..GROUP_ORDER {
        for b in 0..GROUP_ORDER {
            mult_table[a][b] = lookup(&(ptms[a] * ptms[b]))?;
        }
    }
    let mut inverse_table = [0usize; GROUP_ORDER];
    for a in 0..GROUP_ORDER {
        inverse_table[a] = mult_table[a]
            .iter()
            .position(|&c| c == 0)
            .ok_or_else(|| Error::Internal(format!("element {a} has no inverse")))?;
    }
    Ok(CliffordGroup { elements, ptms, mult_table, inverse_table })
}

/// Shared instance, built on first use.
pub fn clifford_group() -> &'static CliffordGroup {
    static GROUP: OnceLock<CliffordGroup> = OnceLock::new();
    GROUP.get_or_init(|| build_group().expect("Clifford group construction"))
}

impl CliffordGroup {
    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    pub fn elements(&self) -> &[UnitaryMatrix] {
        &self.elements
    }

    pub fn element(&self, i: usize) -> &UnitaryMatrix {
        &self.elements[i]
    }

    pub fn ptm(&self, i: usize) -> &Superoperator {
        &self.ptms[i]
    }

    /// Index of `g_a · g_b`.
    pub fn mul(&self, a: usize, b: usize) -> usize {
        self.mult_table[a][b]
    }

    pub fn inverse(&self, a: usize) -> usize {
        self.inverse_table[a]
    }

    pub fn mult_table(&self) -> &[[usize; GROUP_ORDER]] {
        &self.mult_table
    }

    /// Index of the element equal to `u` up to global phase.
    pub fn index_of(&self, u: &UnitaryMatrix) -> Option<usize> {
        let p = unitary_to_ptm(u);
        self.ptms.iter().position(|q| q.max_abs_diff(&p) < 1e-6)
    }

    /// Uniform draw in `[0, 24)`.
    pub fn sample_index<R: Rng + ?Sized>(rng: &mut R) -> usize {
        rng.random_range(0..GROUP_ORDER)
    }

    /// `(1/24) Σ_g ptm(g)ᵀ A ptm(g)`, the superoperator twirl.
    pub fn twirl_superoperator(&self, a: &Superoperator) -> Superoperator {
        let mut acc = Superoperator::zero();
        for p in &self.ptms {
            acc = acc + p.transpose() * *a * *p;
        }
        acc.scale(1.0 / GROUP_ORDER as f64)
    }
}

/// `(1/24) Σ_g g†Og` by explicit summation.
pub fn twirl_first_moment(o: &Mat2) -> Mat2 {
    let mut acc = Mat2::zero();
    for g in clifford_group().elements() {
        let m = g.matrix();
        acc = acc + m.adjoint() * *o * *m;
    }
    acc.scale(C64::new(1.0 / GROUP_ORDER as f64, 0.0))
}

/// `(1/24) Σ_g g†O₁g ρ g†O₂g` by explicit summation, applied to one operator.
pub fn twirl_second_moment_apply(o1: &Mat2, o2: &Mat2, rho: &Mat2) -> Mat2 {
    let mut acc = Mat2::zero();
    for g in clifford_group().elements() {
        let m = g.matrix();
        let ma = m.adjoint();
        acc = acc + ma * *o1 * *m * *rho * ma * *o2 * *m;
    }
    acc.scale(C64::new(1.0 / GROUP_ORDER as f64, 0.0))
}

/// The channel `ρ ↦ (1/24) Σ_g g†O₁g ρ g†O₂g` as a PTM, by explicit summation.
///
/// The PTM is real only when the channel preserves Hermiticity, which holds
/// for Hermitian `O₁`, `O₂`. Use [`twirl_second_moment_apply`] otherwise.
pub fn twirl_second_moment(o1: &Mat2, o2: &Mat2) -> Superoperator {
    Superoperator::from_map(|p| twirl_second_moment_apply(o1, o2, p))
}

/// Closed-form coefficients `(a, b)` with
/// `(1/24) Σ_g g†O₁g ρ g†O₂g = a ρ + b tr(ρ) 𝟙`.
pub fn second_moment_coefficients(o1: &Mat2, o2: &Mat2) -> (C64, C64) {
    let t12 = (*o1 * *o2).trace();
    let t1t2 = o1.trace() * o2.trace();
    ((-4.0 * t12 + 8.0 * t1t2) / 24.0, (8.0 * t12 - 4.0 * t1t2) / 24.0)
}

/// PTM of `ρ ↦ aρ + b tr(ρ)𝟙` for real `a`, `b`.
pub fn affine_depolarizing_ptm(a: f64, b: f64) -> Superoperator {
    Superoperator::diag([a + 2.0 * b, a, a, a])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pauli::haar_unitary;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn group_has_24_distinct_elements() {
        let g = build_group().unwrap();
        assert_eq!(g.len(), 24);
        for a in 0..24 {
            for b in 0..a {
                assert!(g.ptm(a).max_abs_diff(g.ptm(b)) > 1e-6);
            }
        }
    }

    #[test]
    fn identity_is_first() {
        let g = clifford_group();
        assert!(g.ptm(0).max_abs_diff(&Superoperator::identity()) < 1e-12);
        assert!((*g.element(0).matrix() - Mat2::identity()).max_abs() < 1e-12);
    }

    #[test]
    fn multiplication_table_is_latin_square() {
        let g = clifford_group();
        for a in 0..24 {
            let mut row: Vec<usize> = g.mult_table()[a].to_vec();
            let mut col: Vec<usize> = (0..24).map(|b| g.mul(b, a)).collect();
            row.sort();
            col.sort();
            assert_eq!(row, (0..24).collect::<Vec<_>>());
            assert_eq!(col, (0..24).collect::<Vec<_>>());
        }
    }

    #[test]
    fn closure_and_inverse_at_the_matrix_level() {
        let g = clifford_group();
        for a in 0..24 {
            for b in 0..24 {
                let prod = *g.element(a) * *g.element(b);
                assert_eq!(g.index_of(&prod), Some(g.mul(a, b)));
            }
            let inv = *g.element(a) * *g.element(g.inverse(a));
            assert_eq!(g.index_of(&inv), Some(0));
        }
    }

    #[test]
    fn ordering_is_deterministic() {
        let a = build_group().unwrap();
        let b = build_group().unwrap();
        for i in 0..24 {
            assert_eq!(a.element(i), b.element(i));
        }
    }

    #[test]
    fn first_moment_examples() {
        let z = twirl_first_moment(&Mat2::pauli_z());
        assert!(z.max_abs() < 1e-15);
        let id = twirl_first_moment(&Mat2::identity());
        assert!((id - Mat2::identity()).max_abs() < 1e-15);
        let o = Mat2::identity() + Mat2::pauli_x().scale(C64::new(3.0, 0.0));
        assert!((twirl_first_moment(&o) - Mat2::identity()).max_abs() < 1e-14);
    }

    #[test]
    fn second_moment_examples() {
        let zz = twirl_second_moment(&Mat2::pauli_z(), &Mat2::pauli_z());
        // −ρ/3 + (2/3) tr(ρ) 𝟙
        let expected = affine_depolarizing_ptm(-1.0 / 3.0, 2.0 / 3.0);
        assert!(zz.max_abs_diff(&expected) < 1e-14);
        assert!(expected.max_abs_diff(&Superoperator::diag([1.0, -1.0 / 3.0, -1.0 / 3.0, -1.0 / 3.0])) < 1e-15);

        let ii = twirl_second_moment(&Mat2::identity(), &Mat2::identity());
        assert!(ii.max_abs_diff(&Superoperator::identity()) < 1e-14);

        let xy = twirl_second_moment(&Mat2::pauli_x(), &Mat2::pauli_y());
        let (a, b) = second_moment_coefficients(&Mat2::pauli_x(), &Mat2::pauli_y());
        assert!(a.norm() < 1e-15 && b.norm() < 1e-15);
        assert!(xy.frobenius() < 1e-14);
    }

    #[test]
    fn twirl_commutes_with_group() {
        let g = clifford_group();
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        for _ in 0..5 {
            let mut a = Superoperator::zero();
            for x in a.ptm.iter_mut().flatten() {
                *x = rng.random_range(-1.0..1.0);
            }
            let t = g.twirl_superoperator(&a);
            for h in 0..24 {
                let lhs = t * *g.ptm(h);
                let rhs = *g.ptm(h) * t;
                assert!(lhs.max_abs_diff(&rhs) < 1e-10);
            }
        }
    }

    #[test]
    fn second_moment_of_sigma_z_exponentiates_to_depolarizing() {
        let zz = twirl_second_moment(&Mat2::pauli_z(), &Mat2::pauli_z());
        // subtract the trace-preserving identity part to get a generator
        let generator = (zz - Superoperator::identity()).scale(0.1);
        let e = generator.exp();
        let c = e.ptm[1][1];
        assert!(e.max_abs_diff(&Superoperator::diag([1.0, c, c, c])) < 1e-14);
        assert!(c > 0.0 && c < 1.0);
    }

    #[test]
    fn conjugating_random_operators_stays_in_the_group_span() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let u = haar_unitary(&mut rng);
        let o = *u.matrix() * Mat2::pauli_x() * u.matrix().adjoint();
        let t = twirl_first_moment(&o);
        assert!(t.max_abs() < 1e-14);
    }
}
