//! Closed-form geometry of the negative twistor space `Z` of an oriented
//! Riemannian 4-manifold with the metrics `h_t = π*g + t·(fibre metric)`.
//!
//! All quantities at a [`TwistorPoint`] are written in an adapted frame
//! (`E_2 = K_σ E_1`, `E_4 = -K_σ E_3`), in which `σ = s_1^-` and the
//! vertical space is spanned by `s_2^-, s_3^-`.
//!
//! Conventions: the curvature endomorphism of a 2-vector is
//! `R(a) = ½ K_{ℛ(a)}`, i.e. `g(R(a)X, Y) = g(ℛ(a), X∧Y)`, which makes
//! `R(X∧Y) = R(X,Y)`. The curvature of the twistor space is evaluated as
//! `h_t(R_Z(A,B)C, D)` with the same sign convention as the base.

use std::str::FromStr;

use nalgebra::{Matrix4, Vector4};
use serde::Serialize;

use crate::decomp::curv_op;
use crate::error::{GeomError, Result};
use crate::lambda2::{cross_minus_unchecked, endo_to_bivector, k_endo, s_minus, Bivector, CurvOp, PAIRS};
use crate::riemann::{FrameCurvature, PointGeometry};

pub fn unit(i: usize) -> Vector4<f64> {
    Vector4::from_fn(|r, _| if r == i { 1.0 } else { 0.0 })
}

/// A tangent vector of `Z`: horizontal lift of `hor` plus the vertical
/// 2-vector `ver` (orthogonal to `σ` inside the anti-self-dual half).
#[derive(Clone, Copy, Debug, PartialEq, Default)]
pub struct TwistorTangent {
    pub hor: Vector4<f64>,
    pub ver: Bivector,
}

impl TwistorTangent {
    pub fn new(hor: Vector4<f64>, ver: Bivector) -> Self {
        TwistorTangent { hor, ver }
    }

    pub fn horizontal(hor: Vector4<f64>) -> Self {
        TwistorTangent { hor, ver: Bivector::zero() }
    }

    pub fn vertical(ver: Bivector) -> Self {
        TwistorTangent { hor: Vector4::zeros(), ver }
    }

    pub fn scale(&self, c: f64) -> Self {
        TwistorTangent { hor: self.hor * c, ver: self.ver * c }
    }

    pub fn add(&self, other: &Self) -> Self {
        TwistorTangent { hor: self.hor + other.hor, ver: self.ver + other.ver }
    }

    pub fn is_zero(&self) -> bool {
        self.hor.iter().all(|v| *v == 0.0) && self.ver.comp.iter().all(|v| *v == 0.0)
    }
}

/// A finite sum of decomposable 2-vectors `c · P∧Q` on `T_σZ`.
#[derive(Clone, Debug, Default)]
pub struct TwistorBivector {
    pub terms: Vec<(f64, TwistorTangent, TwistorTangent)>,
}

impl TwistorBivector {
    /// `h_t(ξ, B∧C)` with the factor-one-half metric on 2-vectors.
    pub fn pair(&self, tp: &TwistorPoint, b: &TwistorTangent, c: &TwistorTangent, t: f64) -> f64 {
        let h = |x: &TwistorTangent, y: &TwistorTangent| tp.ht(x, y, t);
        self.terms
            .iter()
            .map(|(k, p, q)| k * 0.5 * (h(p, b) * h(q, c) - h(p, c) * h(q, b)))
            .sum()
    }

    pub fn max_coefficient(&self) -> f64 {
        self.terms.iter().fold(0.0, |m, (c, _, _)| m.max(c.abs()))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum RzKind {
    Hhhh,
    Hhhv,
    Hvhv,
    Hhvv,
    Hvvv,
    Vvvv,
}

impl RzKind {
    pub const ALL: [RzKind; 6] = [RzKind::Hhhh, RzKind::Hhhv, RzKind::Hvhv, RzKind::Hhvv, RzKind::Hvvv, RzKind::Vvvv];

    pub fn name(&self) -> &'static str {
        match self {
            RzKind::Hhhh => "hhhh",
            RzKind::Hhhv => "hhhv",
            RzKind::Hvhv => "hvhv",
            RzKind::Hhvv => "hhvv",
            RzKind::Hvvv => "hvvv",
            RzKind::Vvvv => "vvvv",
        }
    }

    /// Which of the four slots are vertical.
    pub fn vertical_slots(&self) -> [bool; 4] {
        match self {
            RzKind::Hhhh => [false, false, false, false],
            RzKind::Hhhv => [false, false, false, true],
            RzKind::Hvhv => [false, true, false, true],
            RzKind::Hhvv => [false, false, true, true],
            RzKind::Hvvv => [false, true, true, true],
            RzKind::Vvvv => [true, true, true, true],
        }
    }
}

impl FromStr for RzKind {
    type Err = GeomError;
    fn from_str(s: &str) -> Result<Self> {
        RzKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| GeomError::BadKind(s.to_string()))
    }
}

/// A point `σ` of the twistor space with curvature data in an adapted frame.
#[derive(Clone, Debug)]
pub struct TwistorPoint {
    pub fc: FrameCurvature,
    /// Adapted frame in components of the frame the point was built from.
    pub rotation: Matrix4<f64>,
    ro: CurvOp,
}

fn check_structure(k: u8) -> Result<f64> {
    match k {
        1 => Ok(-1.0),
        2 => Ok(1.0),
        _ => Err(GeomError::BadParameter(format!("structure index must be 1 or 2, got {k}"))),
    }
}

fn check_t(t: f64) -> Result<()> {
    if t > 0.0 && t.is_finite() {
        Ok(())
    } else {
        Err(GeomError::BadParameter(format!("t must be positive, got {t}")))
    }
}

impl TwistorPoint {
    /// `sigma` is a unit anti-self-dual 2-vector written in the frame of
    /// `pg`. The adapted frame starts from the first frame vector.
    pub fn new(pg: &PointGeometry, sigma: &Bivector) -> Result<Self> {
        Self::from_frame_curvature(&pg.curvature, sigma, None)
    }

    /// Adapted frame whose first and third vectors start from the hints
    /// (frame components).
    pub fn with_hints(pg: &PointGeometry, sigma: &Bivector, e1: &Vector4<f64>, e3: &Vector4<f64>) -> Result<Self> {
        Self::from_frame_curvature(&pg.curvature, sigma, Some((*e1, *e3)))
    }

    pub fn from_frame_curvature(
        fc: &FrameCurvature,
        sigma: &Bivector,
        hints: Option<(Vector4<f64>, Vector4<f64>)>,
    ) -> Result<Self> {
        sigma.ensure_asd(1e-9)?;
        let n = sigma.norm();
        if (n - 1.0).abs() > 1e-9 {
            return Err(GeomError::NotUnitSection(n));
        }
        let k = k_endo(sigma);
        let candidates: Vec<Vector4<f64>> = match hints {
            Some((a, b)) => vec![a, b, unit(0), unit(1), unit(2), unit(3)],
            None => (0..4).map(unit).collect(),
        };
        let mut e1 = None;
        for c in &candidates {
            if c.norm() > 1e-6 {
                e1 = Some(c.normalize());
                break;
            }
        }
        let e1 = e1.ok_or_else(|| GeomError::Numeric("no usable first frame vector".into()))?;
        let e2 = k * e1;
        let mut e3 = None;
        for c in candidates.iter().skip(1) {
            let v = c - e1 * e1.dot(c) - e2 * e2.dot(c);
            if v.norm() > 1e-6 {
                e3 = Some(v.normalize());
                break;
            }
        }
        let e3 = e3.ok_or_else(|| GeomError::Numeric("no usable third frame vector".into()))?;
        let e4 = -(k * e3);
        let q = Matrix4::from_columns(&[e1, e2, e3, e4]);
        let det = q.determinant();
        if (det - 1.0).abs() > 1e-9 {
            return Err(GeomError::Convention(format!("adapted frame has determinant {det}")));
        }
        let adapted = sigma.in_rotated_frame(&q);
        if (adapted - s_minus(0)).max_abs() > 1e-9 {
            return Err(GeomError::Convention("adapted frame does not carry σ to s1-".into()));
        }
        let fc = fc.rotate(&q);
        let ro = curv_op(&fc);
        Ok(TwistorPoint { fc, rotation: q, ro })
    }

    pub fn sigma(&self) -> Bivector {
        s_minus(0)
    }

    pub fn curv_op(&self) -> &CurvOp {
        &self.ro
    }

    /// `ℛ(a)`.
    pub fn rcal(&self, a: &Bivector) -> Bivector {
        self.ro.apply(a)
    }

    /// The endomorphism `R(a) = ½ K_{ℛ(a)}`.
    pub fn r_endo(&self, a: &Bivector) -> Matrix4<f64> {
        k_endo(&self.rcal(a)) * 0.5
    }

    /// `R(X,Y)` as an endomorphism of the tangent space.
    pub fn r_xy_endo(&self, x: &Vector4<f64>, y: &Vector4<f64>) -> Matrix4<f64> {
        self.r_endo(&Bivector::wedge(x, y))
    }

    pub fn k_sigma(&self) -> Matrix4<f64> {
        k_endo(&self.sigma())
    }

    /// `σ × V`.
    pub fn cross_sigma(&self, v: &Bivector) -> Bivector {
        cross_minus_unchecked(&self.sigma(), v)
    }

    /// `g((∇_Z ℛ)(a), b)`.
    pub fn nabla_rcal(&self, z: &Vector4<f64>, a: &Bivector, b: &Bivector) -> f64 {
        let mut acc = 0.0;
        for e in 0..4 {
            if z[e] == 0.0 {
                continue;
            }
            for (n, &(i, j)) in PAIRS.iter().enumerate() {
                if a.comp[n] == 0.0 {
                    continue;
                }
                for (m, &(k, l)) in PAIRS.iter().enumerate() {
                    acc += z[e] * a.comp[n] * b.comp[m] * self.fc.nabla_r[e][i][j][k][l];
                }
            }
        }
        acc
    }

    /// The vertical basis `s_2^-/√t, s_3^-/√t`, orthonormal for `h_t`.
    pub fn vertical_basis(&self, t: f64) -> [Bivector; 2] {
        let c = 1.0 / t.sqrt();
        [s_minus(1) * c, s_minus(2) * c]
    }

    /// `h_t`-orthonormal basis: four horizontal lifts, then two vertical.
    pub fn ht_basis(&self, t: f64) -> [TwistorTangent; 6] {
        let v = self.vertical_basis(t);
        [
            TwistorTangent::horizontal(unit(0)),
            TwistorTangent::horizontal(unit(1)),
            TwistorTangent::horizontal(unit(2)),
            TwistorTangent::horizontal(unit(3)),
            TwistorTangent::vertical(v[0]),
            TwistorTangent::vertical(v[1]),
        ]
    }

    fn ht(&self, a: &TwistorTangent, b: &TwistorTangent, t: f64) -> f64 {
        a.hor.dot(&b.hor) + t * a.ver.inner(&b.ver)
    }

    pub fn ht_inner(&self, a: &TwistorTangent, b: &TwistorTangent, t: f64) -> Result<f64> {
        check_t(t)?;
        Ok(self.ht(a, b, t))
    }

    /// Checks that the vertical part is tangent to the fibre.
    pub fn ensure_tangent(&self, a: &TwistorTangent) -> Result<()> {
        a.ver.ensure_asd(1e-9)?;
        let along = a.ver.inner(&self.sigma()).abs();
        if along > 1e-10 * (1.0 + a.ver.norm()) {
            return Err(GeomError::BadParameter(format!(
                "vertical part has component {along:e} along σ"
            )));
        }
        Ok(())
    }

    /// `𝒥_k`: `K_σ` on horizontal lifts and `(-1)^k σ×V` on vertical vectors.
    pub fn j_apply(&self, k: u8, a: &TwistorTangent) -> Result<TwistorTangent> {
        let sign = check_structure(k)?;
        Ok(TwistorTangent {
            hor: self.k_sigma() * a.hor,
            ver: self.cross_sigma(&a.ver) * sign,
        })
    }

    /// `R(X,Y)σ = σ × ℛ(X∧Y)_-`, an element of the vertical space.
    pub fn vertical_curvature(&self, x: &Vector4<f64>, y: &Vector4<f64>) -> Bivector {
        self.cross_sigma(&self.rcal(&Bivector::wedge(x, y)))
    }

    /// Vertical part of `D_{X^h} Y^h`: `½ R(X,Y)σ`.
    pub fn d_hh_vertical(&self, x: &Vector4<f64>, y: &Vector4<f64>) -> Bivector {
        self.vertical_curvature(x, y) * 0.5
    }

    /// `D_V X^h`, horizontal: `(t/2) R(σ×V) X`.
    pub fn d_vh(&self, v: &Bivector, x: &Vector4<f64>, t: f64) -> Vector4<f64> {
        self.r_endo(&self.cross_sigma(v)) * x * (0.5 * t)
    }

    /// Connection of `h_t` on a pair of tangents: the vertical part of
    /// `D_{X^h}Y^h` plus `D_V X^h` (the terms not depending on how the
    /// arguments are extended to fields).
    pub fn d_connection(&self, a: &TwistorTangent, b: &TwistorTangent, t: f64) -> Result<TwistorTangent> {
        check_t(t)?;
        Ok(TwistorTangent {
            hor: self.d_vh(&a.ver, &b.hor, t),
            ver: self.d_hh_vertical(&a.hor, &b.hor),
        })
    }

    /// `h_t(R_Z(A,B)C, D)` for pure arguments of the given kind; vertical
    /// slots read `.ver`, horizontal slots read `.hor`.
    pub fn rz_component(
        &self,
        kind: RzKind,
        a: &TwistorTangent,
        b: &TwistorTangent,
        c: &TwistorTangent,
        d: &TwistorTangent,
        t: f64,
    ) -> Result<f64> {
        check_t(t)?;
        Ok(match kind {
            RzKind::Hhhh => self.rz_hhhh(&a.hor, &b.hor, &c.hor, &d.hor, t),
            RzKind::Hhhv => self.rz_hhhv(&a.hor, &b.hor, &c.hor, &d.ver, t),
            RzKind::Hvhv => self.rz_hvhv(&a.hor, &b.ver, &c.hor, &d.ver, t),
            RzKind::Hhvv => self.rz_hhvv(&a.hor, &b.hor, &c.ver, &d.ver, t),
            RzKind::Hvvv => 0.0,
            RzKind::Vvvv => self.rz_vvvv(&a.ver, &b.ver, &c.ver, &d.ver, t),
        })
    }

    pub fn rz_hhhh(&self, x: &Vector4<f64>, y: &Vector4<f64>, z: &Vector4<f64>, w: &Vector4<f64>, t: f64) -> f64 {
        let rs = |a: &Vector4<f64>, b: &Vector4<f64>| self.vertical_curvature(a, b);
        self.fc.r4(x, y, z, w)
            - (0.25 * t)
                * (2.0 * rs(x, y).inner(&rs(z, w)) - rs(x, w).inner(&rs(y, z)) + rs(x, z).inner(&rs(y, w)))
    }

    pub fn rz_hhhv(&self, x: &Vector4<f64>, y: &Vector4<f64>, z: &Vector4<f64>, u: &Bivector, t: f64) -> f64 {
        -0.5 * t * self.nabla_rcal(z, &Bivector::wedge(x, y), &self.cross_sigma(u))
    }

    pub fn rz_hvhv(&self, x: &Vector4<f64>, u: &Bivector, y: &Vector4<f64>, v: &Bivector, t: f64) -> f64 {
        let rv = self.r_endo(&self.cross_sigma(v)) * x;
        let ru = self.r_endo(&self.cross_sigma(u)) * y;
        0.25 * t * t * rv.dot(&ru)
            + 0.5 * t * self.rcal(&self.sigma()).inner(&Bivector::wedge(x, y)) * self.cross_sigma(v).inner(u)
    }

    pub fn rz_hhvv(&self, x: &Vector4<f64>, y: &Vector4<f64>, u: &Bivector, v: &Bivector, t: f64) -> f64 {
        let rv = self.r_endo(&self.cross_sigma(v));
        let ru = self.r_endo(&self.cross_sigma(u));
        0.25 * t * t * ((rv * x).dot(&(ru * y)) - (ru * x).dot(&(rv * y)))
            + t * self.rcal(&self.sigma()).inner(&Bivector::wedge(x, y)) * self.cross_sigma(v).inner(u)
    }

    /// Curvature of the round fibre of radius `√t`.
    pub fn rz_vvvv(&self, u: &Bivector, v: &Bivector, w: &Bivector, z: &Bivector, t: f64) -> f64 {
        t * (u.inner(w) * v.inner(z) - u.inner(z) * v.inner(w))
    }

    /// `h_t(R_Z(A,B)C, D)` for arbitrary tangents, by expanding each slot
    /// into its horizontal and vertical parts and using the curvature
    /// symmetries to reduce every combination to one of the kinds.
    pub fn rz_full(&self, a: &TwistorTangent, b: &TwistorTangent, c: &TwistorTangent, d: &TwistorTangent, t: f64) -> f64 {
        let h = |x: &TwistorTangent| x.hor;
        let v = |x: &TwistorTangent| x.ver;
        let mut acc = 0.0;
        // no vertical slot
        acc += self.rz_hhhh(&h(a), &h(b), &h(c), &h(d), t);
        // one vertical slot
        acc += self.rz_hhhv(&h(a), &h(b), &h(c), &v(d), t);
        acc -= self.rz_hhhv(&h(a), &h(b), &h(d), &v(c), t);
        acc += self.rz_hhhv(&h(c), &h(d), &h(a), &v(b), t);
        acc -= self.rz_hhhv(&h(c), &h(d), &h(b), &v(a), t);
        // two vertical slots
        acc += self.rz_hhvv(&h(a), &h(b), &v(c), &v(d), t);
        acc += self.rz_hhvv(&h(c), &h(d), &v(a), &v(b), t);
        acc += self.rz_hvhv(&h(a), &v(b), &h(c), &v(d), t);
        acc -= self.rz_hvhv(&h(a), &v(b), &h(d), &v(c), t);
        acc -= self.rz_hvhv(&h(b), &v(a), &h(c), &v(d), t);
        acc += self.rz_hvhv(&h(b), &v(a), &h(d), &v(c), t);
        // three vertical slots vanish; four give the fibre curvature
        acc += self.rz_vvvv(&v(a), &v(b), &v(c), &v(d), t);
        acc
    }

    /// `h_t(R_Z(E,F)E,F)` from the closed formula in terms of the base.
    pub fn sec_curvature(&self, e: &TwistorTangent, f: &TwistorTangent, t: f64) -> Result<f64> {
        check_t(t)?;
        let (x, y, v, w) = (e.hor, f.hor, e.ver, f.ver);
        let xy = Bivector::wedge(&x, &y);
        let sv = self.cross_sigma(&v);
        let sw = self.cross_sigma(&w);
        let rsv = self.r_endo(&sv);
        let rsw = self.r_endo(&sw);
        let mixed = rsw * x + rsv * y;
        let rxy_sigma = self.vertical_curvature(&x, &y);
        Ok(self.fc.r4(&x, &y, &x, &y) - t * self.nabla_rcal(&x, &xy, &sw) + t * self.nabla_rcal(&y, &xy, &sv)
            - 3.0 * t * self.rcal(&self.sigma()).inner(&xy) * sv.inner(&w)
            - t * t * (rsv * x).dot(&(rsw * y))
            + 0.25 * t * t * mixed.norm_squared()
            - 0.75 * t * rxy_sigma.inner(&rxy_sigma)
            + t * (v.inner(&v) * w.inner(&w) - v.inner(&w).powi(2)))
    }

    fn d_omega_hhv(&self, sign: f64, x: &Vector4<f64>, y: &Vector4<f64>, v: &Bivector, t: f64) -> f64 {
        let k = self.k_sigma();
        0.5 * t
            * (sign * self.rcal(v).inner(&Bivector::wedge(x, y))
                - self.rcal(&self.cross_sigma(v)).inner(&Bivector::wedge(x, &(k * y))))
    }

    fn d_omega_vhh(&self, v: &Bivector, x: &Vector4<f64>, y: &Vector4<f64>, t: f64) -> f64 {
        let k = self.k_sigma();
        let a = Bivector::wedge(x, &(k * y)) + Bivector::wedge(&(k * x), y);
        0.5 * t * self.rcal(&self.cross_sigma(v)).inner(&a) + 2.0 * v.inner(&Bivector::wedge(x, y))
    }

    /// `(D_A Ω_{k,t})(B, C)` with `Ω_{k,t}(A,B) = h_t(𝒥_k A, B)`.
    pub fn d_omega(&self, k: u8, t: f64, a: &TwistorTangent, b: &TwistorTangent, c: &TwistorTangent) -> Result<f64> {
        let sign = check_structure(k)?;
        check_t(t)?;
        Ok(self.d_omega_hhv(sign, &a.hor, &b.hor, &c.ver, t) - self.d_omega_hhv(sign, &a.hor, &c.hor, &b.ver, t)
            + self.d_omega_vhh(&a.ver, &b.hor, &c.hor, t))
    }

    /// The 2-vector `(𝒥_k ∘ D_A 𝒥_k)^∧` as a sum of decomposable terms in
    /// the adapted frame.
    ///
    /// For horizontal `A = X^h` the coefficient carries `-t/2`; this is the
    /// value forced by `2h_t(ξ, B∧C) = -(D_AΩ)(B, 𝒥_k C)`.
    pub fn jdj_wedge(&self, k: u8, a: &TwistorTangent, t: f64) -> Result<TwistorBivector> {
        let sign = check_structure(k)?;
        check_t(t)?;
        let ks = self.k_sigma();
        let mut terms = Vec::new();
        let x = a.hor;
        if x.iter().any(|v| *v != 0.0) {
            for vl in self.vertical_basis(t) {
                let rsv = self.rcal(&self.cross_sigma(&vl));
                let rv = self.rcal(&vl);
                for i in 0..4 {
                    let ei = unit(i);
                    let c = -0.5
                        * t
                        * (rsv.inner(&Bivector::wedge(&x, &ei)) + sign * rv.inner(&Bivector::wedge(&x, &(ks * ei))));
                    if c != 0.0 {
                        terms.push((c, TwistorTangent::horizontal(ei), TwistorTangent::vertical(vl)));
                    }
                }
            }
        }
        let u = a.ver;
        if u.comp.iter().any(|v| *v != 0.0) {
            let rsu = self.rcal(&self.cross_sigma(&u));
            for i in 0..4 {
                for j in (i + 1)..4 {
                    let (ei, ej) = (unit(i), unit(j));
                    let anti = Bivector::wedge(&ei, &ej) - Bivector::wedge(&(ks * ei), &(ks * ej));
                    let c = 0.5 * t * rsu.inner(&anti) - 2.0 * u.inner(&Bivector::wedge(&ei, &(ks * ej)));
                    if c != 0.0 {
                        terms.push((c, TwistorTangent::horizontal(ei), TwistorTangent::horizontal(ej)));
                    }
                }
            }
        }
        Ok(TwistorBivector { terms })
    }

    /// Residual of `G(R(X,Y)a, b) = ½ g(R([a,b]^∧)X, Y)` for skew
    /// endomorphisms `K_a`, `K_b`, with `G(A,B) = -tr(AB)/4`.
    pub fn commutator_identity_residual(&self, x: &Vector4<f64>, y: &Vector4<f64>, a: &Bivector, b: &Bivector) -> f64 {
        let rxy = self.r_xy_endo(x, y);
        let (ka, kb) = (k_endo(a), k_endo(b));
        let lhs = crate::lambda2::endo_inner(&(rxy * ka - ka * rxy), &kb);
        let comm = endo_to_bivector(&(ka * kb - kb * ka));
        let rhs = 0.5 * y.dot(&(self.r_endo(&comm) * x));
        lhs - rhs
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog;
    use crate::lambda2::{s_minus, s_plus};
    use nalgebra::Vector3;
    use proptest::prelude::*;

    fn point(name: &str, p: [f64; 4], sigma: Vector3<f64>) -> TwistorPoint {
        let spec = catalog::get_metric(name).unwrap().spec;
        let pg = PointGeometry::new(&spec, &p).unwrap();
        TwistorPoint::new(&pg, &Bivector::from_minus(&sigma.normalize())).unwrap()
    }

    fn s4_origin() -> TwistorPoint {
        point("s4", [0.0; 4], Vector3::new(1.0, 0.0, 0.0))
    }

    #[test]
    fn ht_inner_values() {
        let tp = s4_origin();
        let e1 = TwistorTangent::horizontal(unit(0));
        let v = TwistorTangent::vertical(s_minus(1));
        assert_eq!(tp.ht_inner(&e1, &e1, 3.0).unwrap(), 1.0);
        assert_eq!(tp.ht_inner(&v, &v, 2.0).unwrap(), 2.0);
        assert_eq!(tp.ht_inner(&e1, &v, 2.0).unwrap(), 0.0);
        assert!(matches!(tp.ht_inner(&e1, &e1, 0.0), Err(GeomError::BadParameter(_))));
    }

    #[test]
    fn structures_on_basis() {
        let tp = s4_origin();
        let e1 = TwistorTangent::horizontal(unit(0));
        assert_eq!(tp.j_apply(1, &e1).unwrap().hor, unit(1));
        let v = TwistorTangent::vertical(s_minus(1));
        assert_eq!(tp.j_apply(1, &v).unwrap().ver, -s_minus(2));
        assert_eq!(tp.j_apply(2, &v).unwrap().ver, s_minus(2));
        assert!(tp.j_apply(3, &v).is_err());
    }

    #[test]
    fn adapted_frame_identities() {
        let tp = point("cp2", [0.3, -0.2, 0.5, 0.1], Vector3::new(0.3, -0.8, 0.5));
        let q = tp.rotation;
        assert!((q.transpose() * q - Matrix4::identity()).amax() < 1e-12);
        let sigma_old = Bivector::from_minus(&Vector3::new(0.3, -0.8, 0.5).normalize());
        let k = k_endo(&sigma_old);
        assert!((k * q.column(0) - q.column(1)).amax() < 1e-12);
        assert!((k * q.column(2) + q.column(3)).amax() < 1e-12);
    }

    #[test]
    fn sphere_connection_terms() {
        let tp = s4_origin();
        // ℛ = 2 Id, R(a) = K_a: D_V E_1^h = (t/2) K_{s_3^-} E_1 = (t/2) E_4
        let d = tp.d_vh(&s_minus(1), &unit(0), 1.0);
        assert!((d - unit(3) * 0.5).amax() < 1e-12, "{d}");
        // (E_1∧E_3)_- = s_2^-/2, so R(E_1,E_3)σ = s_1^- × s_2^- = s_3^-
        let vc = tp.vertical_curvature(&unit(0), &unit(2));
        assert!((vc - s_minus(2)).max_abs() < 1e-12, "{vc:?}");
    }

    #[test]
    fn sphere_hvhv_example() {
        let tp = s4_origin();
        for t in [0.5, 1.0, 2.0] {
            let v = tp.rz_hvhv(&unit(0), &s_minus(1), &unit(1), &s_minus(2), t);
            assert!((v - (t * t / 4.0 - t / 2.0)).abs() < 1e-12, "t={t}: {v}");
        }
    }

    #[test]
    fn flat_kinds_and_vertical_sectional() {
        let tp = point("flat", [0.1, 0.2, 0.3, 0.4], Vector3::new(0.2, 0.4, -0.1));
        let a = TwistorTangent::new(Vector4::new(0.3, 0.1, -0.4, 0.2), s_minus(1) * 0.7 + s_minus(2) * 0.2);
        let b = TwistorTangent::new(Vector4::new(-0.1, 0.5, 0.2, 0.3), s_minus(1) * -0.3 + s_minus(2) * 0.9);
        for kind in [RzKind::Hhhh, RzKind::Hhhv, RzKind::Hvhv, RzKind::Hhvv, RzKind::Hvvv] {
            assert_eq!(tp.rz_component(kind, &a, &b, &a, &b, 1.3).unwrap(), 0.0);
        }
        let u = TwistorTangent::vertical(s_minus(1));
        let w = TwistorTangent::vertical(s_minus(2));
        assert!((tp.sec_curvature(&u, &w, 1.7).unwrap() - 1.7).abs() < 1e-14);
        assert_eq!(tp.sec_curvature(&a, &a, 1.0).unwrap(), 0.0);
        assert!("hxhv".parse::<RzKind>().is_err());
    }

    #[test]
    fn d_omega_examples() {
        let tp = point("flat", [0.0; 4], Vector3::new(1.0, 0.0, 0.0));
        let v = TwistorTangent::vertical(s_minus(1));
        let (x, y) = (TwistorTangent::horizontal(unit(0)), TwistorTangent::horizontal(unit(2)));
        assert!((tp.d_omega(1, 1.0, &v, &x, &y).unwrap() - 1.0).abs() < 1e-14);
        let tp = s4_origin();
        let h = |i| TwistorTangent::horizontal(unit(i));
        assert_eq!(tp.d_omega(1, 0.5, &h(0), &h(1), &h(2)).unwrap(), 0.0);
        for t in [0.5, 1.0, 2.0] {
            for i in 0..4 {
                for j in 0..4 {
                    let got = tp.d_omega(1, t, &v, &h(i), &h(j)).unwrap();
                    let want = (2.0 - 2.0 * t) * s_minus(1).inner(&Bivector::wedge(&unit(i), &unit(j)));
                    assert!((got - want).abs() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn jdj_on_flat() {
        let tp = point("flat", [0.0; 4], Vector3::new(0.0, 1.0, 1.0));
        let x = TwistorTangent::horizontal(Vector4::new(0.3, 0.2, -0.1, 0.5));
        assert_eq!(tp.jdj_wedge(1, &x, 1.0).unwrap().max_coefficient(), 0.0);
        let u = TwistorTangent::vertical(s_minus(2));
        let xi = tp.jdj_wedge(2, &u, 1.0).unwrap();
        assert!(xi.max_coefficient() > 0.5);
        let ks = tp.k_sigma();
        for (c, p, q) in &xi.terms {
            let (i, j) = (p.hor.iamax(), q.hor.iamax());
            let want = -2.0 * s_minus(2).inner(&Bivector::wedge(&unit(i), &(ks * unit(j))));
            assert!((c - want).abs() < 1e-14);
        }
    }

    fn tangent(tp: &TwistorPoint, h: [f64; 4], v: [f64; 2]) -> TwistorTangent {
        let _ = tp;
        TwistorTangent::new(Vector4::from(h), s_minus(1) * v[0] + s_minus(2) * v[1])
    }

    fn name_strategy() -> impl Strategy<Value = &'static str> {
        prop::sample::select(vec!["s4", "h4", "cp2", "r_x_s3", "s2_x_s2", "conformal_flat_exp"])
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]

        #[test]
        fn structures_are_orthogonal_complex(name in name_strategy(), sig in prop::array::uniform3(-1.0f64..1.0),
            h in prop::array::uniform4(-1.0f64..1.0), v in prop::array::uniform2(-1.0f64..1.0),
            h2 in prop::array::uniform4(-1.0f64..1.0), v2 in prop::array::uniform2(-1.0f64..1.0)) {
            prop_assume!(Vector3::from(sig).norm() > 0.2);
            let tp = point(name, [0.1, -0.2, 0.15, 0.3], Vector3::from(sig));
            let a = tangent(&tp, h, v);
            let b = tangent(&tp, h2, v2);
            for k in [1u8, 2] {
                let ja = tp.j_apply(k, &a).unwrap();
                let jja = tp.j_apply(k, &ja).unwrap();
                prop_assert!((jja.hor + a.hor).amax() < 1e-10);
                prop_assert!((jja.ver + a.ver).max_abs() < 1e-10);
                let jb = tp.j_apply(k, &b).unwrap();
                for t in [0.5, 1.0, 2.0] {
                    let lhs = tp.ht_inner(&ja, &jb, t).unwrap();
                    let rhs = tp.ht_inner(&a, &b, t).unwrap();
                    prop_assert!((lhs - rhs).abs() < 1e-10);
                }
            }
        }

        #[test]
        fn vertical_curvature_pairing(name in name_strategy(), sig in prop::array::uniform3(-1.0f64..1.0),
            x in prop::array::uniform4(-1.0f64..1.0), y in prop::array::uniform4(-1.0f64..1.0),
            v in prop::array::uniform2(-1.0f64..1.0), t in 0.3f64..3.0) {
            prop_assume!(Vector3::from(sig).norm() > 0.2);
            let tp = point(name, [0.2, 0.1, -0.3, 0.05], Vector3::from(sig));
            let (x, y) = (Vector4::from(x), Vector4::from(y));
            let vv = s_minus(1) * v[0] + s_minus(2) * v[1];
            let lhs = t * tp.vertical_curvature(&x, &y).inner(&vv);
            let jv = endo_to_bivector(&(tp.k_sigma() * k_endo(&vv)));
            let rhs = t * y.dot(&(tp.r_endo(&jv) * x));
            prop_assert!((lhs - rhs).abs() < 1e-8 * (1.0 + lhs.abs()));
            // (J∘V)^∧ = -σ×V
            prop_assert!((jv + tp.cross_sigma(&vv)).max_abs() < 1e-12);
            // the commutator identity against random b
            let b = Bivector::new([v[0], x[1], y[2], v[1], x[3], y[0]]);
            prop_assert!(tp.commutator_identity_residual(&x, &y, &tp.sigma(), &b).abs() < 1e-9);
        }

        #[test]
        fn rz_full_is_a_curvature_tensor(name in name_strategy(), sig in prop::array::uniform3(-1.0f64..1.0),
            ws in prop::array::uniform24(-1.0f64..1.0), t in 0.3f64..3.0) {
            prop_assume!(Vector3::from(sig).norm() > 0.2);
            let tp = point(name, [0.25, -0.1, 0.05, 0.2], Vector3::from(sig));
            let mk = |o: usize| tangent(&tp, [ws[o], ws[o + 1], ws[o + 2], ws[o + 3]], [ws[o + 4], ws[o + 5]]);
            let (a, b, c, d) = (mk(0), mk(6), mk(12), mk(18));
            let r = |p: &TwistorTangent, q: &TwistorTangent, u: &TwistorTangent, w: &TwistorTangent| tp.rz_full(p, q, u, w, t);
            let v = r(&a, &b, &c, &d);
            let scale = 1.0 + v.abs();
            prop_assert!((v + r(&b, &a, &c, &d)).abs() < 1e-8 * scale);
            prop_assert!((v + r(&a, &b, &d, &c)).abs() < 1e-8 * scale);
            prop_assert!((v - r(&c, &d, &a, &b)).abs() < 1e-8 * scale);
            prop_assert!((v + r(&b, &c, &a, &d) + r(&c, &a, &b, &d)).abs() < 1e-8 * scale);
            let sec = tp.sec_curvature(&a, &b, t).unwrap();
            prop_assert!((sec - r(&a, &b, &a, &b)).abs() < 1e-9 * (1.0 + sec.abs()));
        }

        #[test]
        fn jdj_pairs_with_d_omega(name in name_strategy(), sig in prop::array::uniform3(-1.0f64..1.0),
            ws in prop::array::uniform18(-1.0f64..1.0), t in 0.3f64..3.0, k in 1u8..3) {
            prop_assume!(Vector3::from(sig).norm() > 0.2);
            let tp = point(name, [-0.1, 0.2, 0.3, 0.1], Vector3::from(sig));
            let mk = |o: usize| tangent(&tp, [ws[o], ws[o + 1], ws[o + 2], ws[o + 3]], [ws[o + 4], ws[o + 5]]);
            let (a, b, c) = (mk(0), mk(6), mk(12));
            let xi = tp.jdj_wedge(k, &a, t).unwrap();
            let lhs = 2.0 * xi.pair(&tp, &b, &c, t);
            let jc = tp.j_apply(k, &c).unwrap();
            let rhs = -tp.d_omega(k, t, &a, &b, &jc).unwrap();
            prop_assert!((lhs - rhs).abs() < 1e-8 * (1.0 + rhs.abs()), "{lhs} vs {rhs}");
            let anti = tp.d_omega(k, t, &a, &b, &c).unwrap() + tp.d_omega(k, t, &a, &c, &b).unwrap();
            prop_assert!(anti.abs() < 1e-12);
        }
    }

    #[test]
    fn plus_half_is_invisible_to_cross() {
        let tp = s4_origin();
        assert_eq!(tp.cross_sigma(&s_plus(1)), Bivector::zero());
    }
}
