//! The curvature operator on 2-vectors and its splitting into scalar,
//! traceless-Ricci and Weyl parts.

use nalgebra::{Matrix3, Matrix4, Matrix6, Vector4};
use serde::Serialize;

use crate::error::{GeomError, Result};
use crate::lambda2::{s_basis, Bivector, CurvOp, PAIRS};
use crate::riemann::{FrameCurvature, RicciData};

/// Default absolute tolerance on operator norms for the Einstein and
/// self-duality flags.
pub const CLASSIFY_TOL: f64 = 1e-7;

#[derive(Clone, Debug, Serialize)]
pub struct CurvDecomp {
    pub s: f64,
    #[serde(skip)]
    pub b_op: Matrix6<f64>,
    #[serde(skip)]
    pub w_plus: Matrix3<f64>,
    #[serde(skip)]
    pub w_minus: Matrix3<f64>,
    pub norm_b: f64,
    pub norm_w_plus: f64,
    pub norm_w_minus: f64,
    pub einstein: bool,
    pub self_dual: bool,
}

/// `g(ℛ(X∧Y), Z∧T) = g(R(X,Y)Z, T)` in the ordered s-basis.
///
/// Expanding `ℛ(E_i∧E_j)` in the wedge basis gives coefficients `2 R_ijkl`
/// because of the factor one half in the metric; working with inner
/// products against the s-basis avoids that bookkeeping.
pub fn curv_op(fc: &FrameCurvature) -> CurvOp {
    let basis = s_basis();
    let mut mat = Matrix6::zeros();
    for (col, sa) in basis.iter().enumerate() {
        for (row, sb) in basis.iter().enumerate() {
            let mut acc = 0.0;
            for (n, &(i, j)) in PAIRS.iter().enumerate() {
                if sa.comp[n] == 0.0 {
                    continue;
                }
                for (m, &(k, l)) in PAIRS.iter().enumerate() {
                    acc += sa.comp[n] * sb.comp[m] * fc.r[i][j][k][l];
                }
            }
            mat[(row, col)] = acc;
        }
    }
    CurvOp { mat }
}

/// `B(X∧Y) = ρX∧Y + X∧ρY - (s/2) X∧Y`, i.e. `A ↦ ρA + Aρ - (s/2)A` on
/// antisymmetric matrices.
pub fn traceless_ricci_op(rho: &Matrix4<f64>, s: f64) -> CurvOp {
    CurvOp::from_map(|a| {
        let m = a.matrix();
        Bivector::from_matrix(&(rho * m + m * rho - m * (0.5 * s)))
    })
}

pub fn decompose(ro: &CurvOp, ric: &RicciData, tol: f64) -> Result<CurvDecomp> {
    let s = ric.s;
    let b = traceless_ricci_op(&ric.rho, s);
    let w = ro.mat - Matrix6::identity() * (s / 6.0) - b.mat;
    let scale = 1.0 + ro.mat.amax();
    let off = w.fixed_view::<3, 3>(0, 3).amax().max(w.fixed_view::<3, 3>(3, 0).amax());
    if off > 1e-7 * scale {
        return Err(GeomError::Convention(format!(
            "Weyl residual mixes the two halves by {off:e}"
        )));
    }
    let w_plus: Matrix3<f64> = w.fixed_view::<3, 3>(0, 0).into_owned();
    let w_minus: Matrix3<f64> = w.fixed_view::<3, 3>(3, 3).into_owned();
    let tr = w_plus.trace().abs().max(w_minus.trace().abs());
    if tr > 1e-7 * scale {
        return Err(GeomError::Convention(format!("Weyl residual has trace {tr:e}")));
    }
    let diag_b = b.mat.fixed_view::<3, 3>(0, 0).amax().max(b.mat.fixed_view::<3, 3>(3, 3).amax());
    if diag_b > 1e-9 * scale {
        return Err(GeomError::Convention(format!(
            "traceless Ricci block preserves a half by {diag_b:e}"
        )));
    }
    let norm_b = b.mat.norm();
    let norm_w_plus = w_plus.norm();
    let norm_w_minus = w_minus.norm();
    Ok(CurvDecomp {
        s,
        b_op: b.mat,
        w_plus,
        w_minus,
        norm_b,
        norm_w_plus,
        norm_w_minus,
        einstein: norm_b < tol,
        self_dual: norm_w_minus < tol,
    })
}

impl CurvDecomp {
    pub fn b(&self) -> CurvOp {
        CurvOp { mat: self.b_op }
    }

    /// `(s/6) Id + B + W_+ + W_-`.
    pub fn reconstruct(&self) -> Matrix6<f64> {
        let mut w = Matrix6::zeros();
        w.fixed_view_mut::<3, 3>(0, 0).copy_from(&self.w_plus);
        w.fixed_view_mut::<3, 3>(3, 3).copy_from(&self.w_minus);
        Matrix6::identity() * (self.s / 6.0) + self.b_op + w
    }
}

fn e(i: usize) -> Vector4<f64> {
    Vector4::from_fn(|r, _| if r == i { 1.0 } else { 0.0 })
}

/// `δB(X) = δρ∧X - Σ_m [E_m∧(∇_{E_m}ρ)X - ½ E_m(s) E_m∧X]`.
pub fn delta_b(fc: &FrameCurvature, x: &Vector4<f64>) -> Bivector {
    let mut out = Bivector::wedge(&fc.delta_rho(), x);
    for m in 0..4 {
        let em = e(m);
        out = out - Bivector::wedge(&em, &(fc.nabla_rho[m] * x)) + Bivector::wedge(&em, x) * (0.5 * fc.ds[m]);
    }
    out
}

/// `(∇_X B)(a)` from `(∇_X B)(Y∧Z) = (∇_Xρ)Y∧Z + Y∧(∇_Xρ)Z - ½X(s) Y∧Z`.
pub fn nabla_b(fc: &FrameCurvature, x: &Vector4<f64>, a: &Bivector) -> Bivector {
    let p = fc.nabla_rho_along(x);
    let m = a.matrix();
    Bivector::from_matrix(&(p * m + m * p - m * (0.5 * fc.ds.dot(x))))
}
