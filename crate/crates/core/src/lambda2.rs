//! Two-vectors of an oriented Euclidean 4-space.
//!
//! A [`Bivector`] stores its six components `a_ij` (i<j) in the wedge basis
//! `E_i ∧ E_j` of some oriented orthonormal frame, in the order
//! 12, 13, 14, 23, 24, 34. The metric carries a factor one half:
//! `<E_1∧E_2, E_1∧E_2> = 1/2`, so `E_1∧E_2 ± E_3∧E_4` has unit length.

use std::ops::{Add, AddAssign, Mul, Neg, Sub};

use nalgebra::{Matrix3, Matrix4, Matrix6, Vector3, Vector4, Vector6};

use crate::error::{GeomError, Result};

/// Index pairs of the wedge basis, in storage order.
pub const PAIRS: [(usize, usize); 6] = [(0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3)];

#[derive(Clone, Copy, Debug, PartialEq, Default)]
pub struct Bivector {
    pub comp: [f64; 6],
}

impl Bivector {
    pub const fn new(comp: [f64; 6]) -> Self {
        Bivector { comp }
    }

    pub const fn zero() -> Self {
        Bivector { comp: [0.0; 6] }
    }

    /// `E_i ∧ E_j` for frame indices `i != j` (zero-based).
    pub fn basis(i: usize, j: usize) -> Self {
        let e = |k: usize| Vector4::from_fn(|r, _| if r == k { 1.0 } else { 0.0 });
        Bivector::wedge(&e(i), &e(j))
    }

    pub fn wedge(x: &Vector4<f64>, y: &Vector4<f64>) -> Self {
        let mut comp = [0.0; 6];
        for (n, &(i, j)) in PAIRS.iter().enumerate() {
            comp[n] = x[i] * y[j] - x[j] * y[i];
        }
        Bivector { comp }
    }

    /// Antisymmetric matrix `A` with `A[i][j] = a_ij`.
    pub fn matrix(&self) -> Matrix4<f64> {
        let mut m = Matrix4::zeros();
        for (n, &(i, j)) in PAIRS.iter().enumerate() {
            m[(i, j)] = self.comp[n];
            m[(j, i)] = -self.comp[n];
        }
        m
    }

    /// Bivector of the antisymmetric part of `m`, read as `a_ij = m[i][j]`.
    pub fn from_matrix(m: &Matrix4<f64>) -> Self {
        let mut comp = [0.0; 6];
        for (n, &(i, j)) in PAIRS.iter().enumerate() {
            comp[n] = 0.5 * (m[(i, j)] - m[(j, i)]);
        }
        Bivector { comp }
    }

    pub fn inner(&self, other: &Bivector) -> f64 {
        0.5 * self.comp.iter().zip(&other.comp).map(|(a, b)| a * b).sum::<f64>()
    }

    pub fn norm(&self) -> f64 {
        self.inner(self).sqrt()
    }

    pub fn hodge(&self) -> Self {
        let a = &self.comp;
        Bivector::new([a[5], -a[4], a[3], a[2], -a[1], a[0]])
    }

    pub fn plus_part(&self) -> Self {
        (*self + self.hodge()) * 0.5
    }

    pub fn minus_part(&self) -> Self {
        (*self - self.hodge()) * 0.5
    }

    /// Coordinates in the orthonormal basis `s_1^-, s_2^-, s_3^-`.
    pub fn minus_coords(&self) -> Vector3<f64> {
        Vector3::from_fn(|i, _| self.inner(&s_minus(i)))
    }

    pub fn plus_coords(&self) -> Vector3<f64> {
        Vector3::from_fn(|i, _| self.inner(&s_plus(i)))
    }

    pub fn from_minus(v: &Vector3<f64>) -> Self {
        s_minus(0) * v[0] + s_minus(1) * v[1] + s_minus(2) * v[2]
    }

    pub fn from_plus(v: &Vector3<f64>) -> Self {
        s_plus(0) * v[0] + s_plus(1) * v[1] + s_plus(2) * v[2]
    }

    /// Coordinates in the ordered basis `(s_1^+, s_2^+, s_3^+, s_1^-, s_2^-, s_3^-)`.
    pub fn s_coords(&self) -> Vector6<f64> {
        let p = self.plus_coords();
        let m = self.minus_coords();
        Vector6::new(p[0], p[1], p[2], m[0], m[1], m[2])
    }

    pub fn from_s_coords(v: &Vector6<f64>) -> Self {
        Bivector::from_plus(&Vector3::new(v[0], v[1], v[2]))
            + Bivector::from_minus(&Vector3::new(v[3], v[4], v[5]))
    }

    /// Distance from the anti-self-dual subspace, `|*a + a|`.
    pub fn asd_defect(&self) -> f64 {
        (*self + self.hodge()).norm()
    }

    pub fn ensure_asd(&self, tol: f64) -> Result<()> {
        let d = self.asd_defect();
        if d > tol * (1.0 + self.norm()) {
            Err(GeomError::NotAsd(d))
        } else {
            Ok(())
        }
    }

    /// Re-expresses the bivector in the frame `F_a = Σ_b E_b q[b][a]`.
    pub fn in_rotated_frame(&self, q: &Matrix4<f64>) -> Self {
        Bivector::from_matrix(&(q.transpose() * self.matrix() * q))
    }

    pub fn max_abs(&self) -> f64 {
        self.comp.iter().fold(0.0, |m, v| m.max(v.abs()))
    }
}

impl Add for Bivector {
    type Output = Bivector;
    fn add(self, rhs: Bivector) -> Bivector {
        let mut comp = self.comp;
        for (c, r) in comp.iter_mut().zip(rhs.comp) {
            *c += r;
        }
        Bivector { comp }
    }
}

impl AddAssign for Bivector {
    fn add_assign(&mut self, rhs: Bivector) {
        *self = *self + rhs;
    }
}

impl Sub for Bivector {
    type Output = Bivector;
    fn sub(self, rhs: Bivector) -> Bivector {
        self + rhs * -1.0
    }
}

impl Neg for Bivector {
    type Output = Bivector;
    fn neg(self) -> Bivector {
        self * -1.0
    }
}

impl Mul<f64> for Bivector {
    type Output = Bivector;
    fn mul(self, s: f64) -> Bivector {
        Bivector {
            comp: self.comp.map(|c| c * s),
        }
    }
}

/// `s_{i+1}^+` for `i = 0, 1, 2`.
pub fn s_plus(i: usize) -> Bivector {
    match i {
        0 => Bivector::new([1.0, 0.0, 0.0, 0.0, 0.0, 1.0]),
        1 => Bivector::new([0.0, 1.0, 0.0, 0.0, -1.0, 0.0]),
        2 => Bivector::new([0.0, 0.0, 1.0, 1.0, 0.0, 0.0]),
        _ => panic!("s-basis index {i} out of range"),
    }
}

/// `s_{i+1}^-` for `i = 0, 1, 2`.
pub fn s_minus(i: usize) -> Bivector {
    match i {
        0 => Bivector::new([1.0, 0.0, 0.0, 0.0, 0.0, -1.0]),
        1 => Bivector::new([0.0, 1.0, 0.0, 0.0, 1.0, 0.0]),
        2 => Bivector::new([0.0, 0.0, 1.0, -1.0, 0.0, 0.0]),
        _ => panic!("s-basis index {i} out of range"),
    }
}

/// The ordered basis `(s_1^+, s_2^+, s_3^+, s_1^-, s_2^-, s_3^-)`.
pub fn s_basis() -> [Bivector; 6] {
    [s_plus(0), s_plus(1), s_plus(2), s_minus(0), s_minus(1), s_minus(2)]
}

/// The skew endomorphism `K_a` with `g(K_a X, Y) = 2 g(a, X∧Y)`, as a
/// matrix acting on frame components.
pub fn k_endo(a: &Bivector) -> Matrix4<f64> {
    a.matrix().transpose()
}

/// The 2-vector `φ^∧` of an endomorphism, `2 g(φ^∧, X∧Y) = g(φX, Y)` on
/// its skew part.
pub fn endo_to_bivector(phi: &Matrix4<f64>) -> Bivector {
    Bivector::from_matrix(&phi.transpose())
}

/// Vector cross product on the oriented 3-space of anti-self-dual 2-vectors.
pub fn cross_minus(a: &Bivector, b: &Bivector) -> Result<Bivector> {
    a.ensure_asd(1e-9)?;
    b.ensure_asd(1e-9)?;
    Ok(cross_minus_unchecked(a, b))
}

/// Cross product of the anti-self-dual parts of `a` and `b`.
pub fn cross_minus_unchecked(a: &Bivector, b: &Bivector) -> Bivector {
    Bivector::from_minus(&a.minus_coords().cross(&b.minus_coords()))
}

/// The isometric image of bivectors in skew endomorphisms uses
/// `G(A, B) = -tr(A B) / 4`.
pub fn endo_inner(a: &Matrix4<f64>, b: &Matrix4<f64>) -> f64 {
    -0.25 * (a * b).trace()
}

/// A linear operator on 2-vectors as a 6×6 matrix in the ordered s-basis.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CurvOp {
    pub mat: Matrix6<f64>,
}

impl CurvOp {
    pub fn apply(&self, a: &Bivector) -> Bivector {
        Bivector::from_s_coords(&(self.mat * a.s_coords()))
    }

    /// Operator from a matrix-level map `A ↦ f(A)` on antisymmetric matrices.
    pub fn from_map(f: impl Fn(&Bivector) -> Bivector) -> Self {
        let basis = s_basis();
        let mut mat = Matrix6::zeros();
        for (col, b) in basis.iter().enumerate() {
            let img = f(b).s_coords();
            mat.set_column(col, &img);
        }
        CurvOp { mat }
    }

    pub fn plus_block(&self) -> Matrix3<f64> {
        self.mat.fixed_view::<3, 3>(0, 0).into_owned()
    }

    pub fn minus_block(&self) -> Matrix3<f64> {
        self.mat.fixed_view::<3, 3>(3, 3).into_owned()
    }

    /// Block sending the minus half to the plus half.
    pub fn minus_to_plus(&self) -> Matrix3<f64> {
        self.mat.fixed_view::<3, 3>(0, 3).into_owned()
    }

    pub fn asymmetry(&self) -> f64 {
        (self.mat - self.mat.transpose()).amax()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn e(i: usize) -> Vector4<f64> {
        Vector4::from_fn(|r, _| if r == i { 1.0 } else { 0.0 })
    }

    #[test]
    fn wedge_metric_has_half_factor() {
        let a = Bivector::basis(0, 1);
        assert_eq!(a.inner(&a), 0.5);
        assert_eq!(s_plus(0).inner(&s_plus(0)), 1.0);
        assert_eq!(s_plus(0).inner(&s_minus(1)), 0.0);
        assert_eq!(Bivector::wedge(&e(0), &e(1)), -Bivector::wedge(&e(1), &e(0)));
    }

    #[test]
    fn s_basis_is_orthonormal_and_star_eigen() {
        let b = s_basis();
        for i in 0..6 {
            for j in 0..6 {
                let want = if i == j { 1.0 } else { 0.0 };
                assert_eq!(b[i].inner(&b[j]), want);
            }
        }
        for i in 0..3 {
            assert_eq!(s_plus(i).hodge(), s_plus(i));
            assert_eq!(s_minus(i).hodge(), -s_minus(i));
        }
        assert_eq!(s_minus(0), Bivector::basis(0, 1) - Bivector::basis(2, 3));
    }

    #[test]
    fn cyclic_relabel_permutes_s_basis() {
        // F = (E1, E3, E4, E2)
        let mut q = Matrix4::<f64>::zeros();
        q[(0, 0)] = 1.0;
        q[(2, 1)] = 1.0;
        q[(3, 2)] = 1.0;
        q[(1, 3)] = 1.0;
        assert!((q.determinant() - 1.0).abs() < 1e-15);
        // s-basis of F, written in E components, is the F-basis rotated back.
        let back = |b: Bivector| b.in_rotated_frame(&q.transpose());
        assert_eq!(back(s_minus(0)), s_minus(1));
        assert_eq!(back(s_minus(1)), s_minus(2));
        assert_eq!(back(s_minus(2)), s_minus(0));
        assert_eq!(back(s_plus(0)), s_plus(1));
        assert_eq!(back(s_plus(1)), s_plus(2));
        assert_eq!(back(s_plus(2)), s_plus(0));
    }

    #[test]
    fn k_of_s1_minus() {
        let k = k_endo(&s_minus(0));
        assert_eq!(k * e(0), e(1));
        assert_eq!(k * e(1), -e(0));
        assert_eq!(k * e(2), -e(3));
        assert_eq!(k * e(3), e(2));
        assert_eq!(k * k, -Matrix4::identity());
        assert_eq!(k_endo(&Bivector::zero()), Matrix4::zeros());
    }

    #[test]
    fn cross_table() {
        let c = |i, j| cross_minus(&s_minus(i), &s_minus(j)).unwrap();
        assert_eq!(c(0, 1), s_minus(2));
        assert_eq!(c(1, 2), s_minus(0));
        assert_eq!(c(2, 0), s_minus(1));
        assert_eq!(c(0, 0), Bivector::zero());
        let prod = k_endo(&s_minus(0)) * k_endo(&s_minus(1));
        assert_eq!(prod, -k_endo(&s_minus(2)));
        assert!(matches!(
            cross_minus(&s_plus(0), &s_minus(1)),
            Err(GeomError::NotAsd(_))
        ));
    }

    fn biv() -> impl Strategy<Value = Bivector> {
        prop::array::uniform6(-2.0f64..2.0).prop_map(Bivector::new)
    }

    fn asd() -> impl Strategy<Value = Bivector> {
        prop::array::uniform3(-2.0f64..2.0)
            .prop_map(|v| Bivector::from_minus(&Vector3::from(v)))
    }

    proptest! {
        #[test]
        fn hodge_is_an_involution(a in biv()) {
            let h = a.hodge().hodge();
            prop_assert_eq!(h, a);
            let p = a.plus_part();
            let m = a.minus_part();
            prop_assert!((p.plus_part() - p).max_abs() < 1e-14);
            prop_assert!(p.inner(&m).abs() < 1e-13);
            prop_assert!((p + m - a).max_abs() < 1e-14);
        }

        #[test]
        fn k_products_follow_cross(a in asd(), b in asd()) {
            let lhs = k_endo(&a) * k_endo(&b);
            let rhs = -Matrix4::identity() * a.inner(&b) - k_endo(&cross_minus(&a, &b).unwrap());
            prop_assert!((lhs - rhs).amax() < 1e-10);
        }

        #[test]
        fn endo_isometry(a in biv(), b in biv()) {
            let g = endo_inner(&k_endo(&a), &k_endo(&b));
            prop_assert!((g - a.inner(&b)).abs() < 1e-10);
        }

        #[test]
        fn k_round_trip(a in biv(), x in prop::array::uniform4(-1.0f64..1.0), y in prop::array::uniform4(-1.0f64..1.0)) {
            let k = k_endo(&a);
            prop_assert!((k + k.transpose()).amax() < 1e-15);
            prop_assert!((endo_to_bivector(&k) - a).max_abs() < 1e-15);
            let (x, y) = (Vector4::from(x), Vector4::from(y));
            let lhs = (k * x).dot(&y);
            let rhs = 2.0 * a.inner(&Bivector::wedge(&x, &y));
            prop_assert!((lhs - rhs).abs() < 1e-12);
        }

        #[test]
        fn s_coords_round_trip(a in biv()) {
            let back = Bivector::from_s_coords(&a.s_coords());
            prop_assert!((back - a).max_abs() < 1e-14);
        }
    }
}
