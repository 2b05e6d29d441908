//! Harmonicity defects of the almost complex structures `𝒥_1`, `𝒥_2`.
//!
//! `Tr_k(F)` is the horizontal layer of the tension field of `𝒥_k` viewed
//! as a map into the twistor space of `(Z, h_t)`; harmonicity as a section
//! is governed by `W_-` (and `ds` for `k = 2`).

use nalgebra::{Matrix4, Vector4};
use rayon::prelude::*;
use serde::Serialize;

use crate::decomp::{decompose, delta_b, nabla_b, traceless_ricci_op, CurvDecomp, CLASSIFY_TOL};
use crate::error::{GeomError, Result};
use crate::jet::{Jet3, MetricSpec, Point4};
use crate::lambda2::{cross_minus_unchecked, endo_to_bivector, k_endo, s_plus, Bivector, CurvOp, PAIRS};
use crate::riemann::{frame_field_jets, ricci, PointGeometry, RicciData};
use crate::sampling::SamplePlan;
use crate::twistor::{unit, TwistorPoint, TwistorTangent};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    HarmonicMap,
    HarmonicSectionOnly,
    Neither,
    Inconclusive,
}

impl Verdict {
    pub fn name(&self) -> &'static str {
        match self {
            Verdict::HarmonicMap => "harmonic_map",
            Verdict::HarmonicSectionOnly => "harmonic_section_only",
            Verdict::Neither => "neither",
            Verdict::Inconclusive => "inconclusive",
        }
    }
}

/// Spectrum shape of the Ricci operator.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum EigenPattern {
    Einstein { value: f64 },
    /// Simple eigenvalue `lambda`, triple eigenvalue `mu`.
    TripleSimple { lambda: f64, mu: f64, lambda_zero: bool },
    Other,
}

impl EigenPattern {
    pub fn label(&self) -> String {
        match self {
            EigenPattern::Einstein { .. } => "einstein".into(),
            EigenPattern::TripleSimple { lambda, .. } => format!("triple+simple({lambda:.6})"),
            EigenPattern::Other => "other".into(),
        }
    }
}

/// Classifies ascending eigenvalues; `tol` is relative to the largest one.
pub fn eigen_pattern(eig: &[f64; 4], tol: f64) -> EigenPattern {
    let scale = 1.0 + eig.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let close = |a: f64, b: f64| (a - b).abs() < tol * scale;
    if close(eig[0], eig[3]) {
        return EigenPattern::Einstein { value: eig.iter().sum::<f64>() / 4.0 };
    }
    let (lambda, mu) = if close(eig[0], eig[2]) {
        (eig[3], (eig[0] + eig[1] + eig[2]) / 3.0)
    } else if close(eig[1], eig[3]) {
        (eig[0], (eig[1] + eig[2] + eig[3]) / 3.0)
    } else {
        return EigenPattern::Other;
    };
    EigenPattern::TripleSimple { lambda, mu, lambda_zero: lambda.abs() < tol * scale }
}

pub fn eigen_structure(ric: &RicciData, tol: f64) -> EigenPattern {
    eigen_pattern(&ric.eigenvalues, tol)
}

/// `Tr_k(F)`: trace over an `h_t`-orthonormal basis `A_i` of
/// `h_t(R_Z((𝒥_k∘D_{A_i}𝒥_k)^∧) A_i, F)`.
pub fn tr_k(tp: &TwistorPoint, k: u8, f: &TwistorTangent, t: f64) -> Result<f64> {
    let mut acc = 0.0;
    for a in tp.ht_basis(t) {
        let xi = tp.jdj_wedge(k, &a, t)?;
        for (c, p, q) in &xi.terms {
            acc += c * tp.rz_full(p, q, &a, f, t);
        }
    }
    Ok(acc)
}

fn decomp_at(tp: &TwistorPoint) -> Result<CurvDecomp> {
    decompose(tp.curv_op(), &ricci(&tp.fc), CLASSIFY_TOL)
}

fn require_self_dual(d: &CurvDecomp, tol: f64) -> Result<()> {
    if d.norm_w_minus >= tol {
        Err(GeomError::NotSelfDual(d.norm_w_minus))
    } else {
        Ok(())
    }
}

fn b_op(tp: &TwistorPoint) -> CurvOp {
    traceless_ricci_op(&tp.fc.rho, tp.fc.s)
}

/// Closed form of `Tr_k(U)` for vertical `U` on a self-dual base:
/// `(t/4) g(B(U), B(σ))`.
pub fn tr_k_vertical_closed(tp: &TwistorPoint, k: u8, u: &Bivector, t: f64, tol: f64) -> Result<f64> {
    check_k(k)?;
    require_self_dual(&decomp_at(tp)?, tol)?;
    let b = b_op(tp);
    Ok(0.25 * t * b.apply(u).inner(&b.apply(&tp.sigma())))
}

/// Closed form of `Tr_k(X^h)` on a self-dual base as it is usually quoted:
/// the `X(s)` terms plus the `h_t`-traces over the fibre of the `∇_X B` and
/// `δB` terms. It takes `Σ = 0` and `δB(K_V X) ⊥ V`, which fail in general,
/// so it drifts from [`tr_k`] away from `t = 1`; see [`tr_k_horizontal_exact`].
pub fn tr_k_horizontal_closed(tp: &TwistorPoint, k: u8, x: &Vector4<f64>, t: f64, tol: f64) -> Result<f64> {
    let sign = check_k(k)?;
    require_self_dual(&decomp_at(tp)?, tol)?;
    let fc = &tp.fc;
    let s = fc.s;
    let xs = fc.ds.dot(x);
    let b = b_op(tp);
    let mut trace = 0.0;
    for v in tp.vertical_basis(t) {
        let kvx = k_endo(&v) * x;
        trace += 0.125 * t * nabla_b(fc, x, &v).inner(&b.apply(&v))
            - sign * (t * s / 24.0) * delta_b(fc, &kvx).inner(&v);
    }
    Ok((1.0 + sign) * s * xs / 144.0 + (t * s / 6.0 - 2.0) * xs / 12.0 + trace)
}

/// Horizontal trace as it actually comes out of the curvature of `h_t` on a
/// self-dual metric: `(ts/6 - 2)X(s)/12 + t(1 + (-1)^k) sX(s)/144
/// + (t/8) Σ_l g((∇_X B)(s_l), B(s_l)) + (-1)^{k+1} (t/4) Σ`, with `s_l`
/// the unit vertical 2-vectors and `Σ` the residual sum of [`sigma_sum`].
pub fn tr_k_horizontal_exact(tp: &TwistorPoint, k: u8, x: &Vector4<f64>, t: f64, tol: f64) -> Result<f64> {
    let sign = check_k(k)?;
    if !(t > 0.0 && t.is_finite()) {
        return Err(GeomError::BadParameter(format!("t must be positive, got {t}")));
    }
    require_self_dual(&decomp_at(tp)?, tol)?;
    let fc = &tp.fc;
    let s = fc.s;
    let xs = fc.ds.dot(x);
    let b = b_op(tp);
    let tb: f64 = tp
        .vertical_basis(1.0)
        .iter()
        .map(|v| nabla_b(fc, x, v).inner(&b.apply(v)))
        .sum();
    Ok((t * s / 6.0 - 2.0) * xs / 12.0 + t * (1.0 + sign) * s * xs / 144.0 + t * tb / 8.0
        - sign * t * sigma_sum(tp, x, 1.0) / 4.0)
}

fn check_k(k: u8) -> Result<f64> {
    match k {
        1 => Ok(-1.0),
        2 => Ok(1.0),
        _ => Err(GeomError::BadParameter(format!("structure index must be 1 or 2, got {k}"))),
    }
}

/// The residual sum built from `C_ilj = h_t(R_Z(E_i^h, V_l)E_j^h, X^h)` in
/// the adapted frame of `tp`. Zero on the self-dual catalog metrics, but not
/// on a generic conformally flat metric.
pub fn sigma_sum(tp: &TwistorPoint, x: &Vector4<f64>, t: f64) -> f64 {
    let v = tp.vertical_basis(t);
    let b = b_op(tp);
    let c = |i: usize, l: usize, j: usize| tp.rz_hhhv(&unit(j - 1), x, &unit(i - 1), &v[l], t);
    let mut acc = 0.0;
    for l in 0..2 {
        let bv = b.apply(&v[l]);
        acc += bv.inner(&s_plus(0)) * (c(1, l, 1) + c(2, l, 2) - c(3, l, 3) - c(4, l, 4))
            + bv.inner(&s_plus(1)) * (c(1, l, 4) + c(2, l, 3) + c(3, l, 2) + c(4, l, 1))
            + bv.inner(&s_plus(2)) * (-c(1, l, 3) + c(2, l, 4) - c(3, l, 1) + c(4, l, 2));
    }
    acc
}

/// A section of the twistor bundle given as jets of its 2-vector
/// components in the Gram-Schmidt frame of the metric.
pub type SectionJets<'a> = &'a dyn Fn(&[Jet3; 4]) -> [Jet3; 6];

/// Trace of the second fundamental form of a section `J` viewed as a map
/// into `(Z, h_t)`.
#[derive(Clone, Copy, Debug)]
pub struct SectionDefect {
    /// Vertical part, as a 2-vector in the Gram-Schmidt frame.
    pub vertical: Bivector,
    /// Horizontal part, frame components.
    pub horizontal: Vector4<f64>,
}

impl SectionDefect {
    pub fn norm(&self, t: f64) -> f64 {
        (self.horizontal.norm_squared() + t * self.vertical.inner(&self.vertical)).sqrt()
    }
}

/// Vertical part `𝒱 Trace ∇²J` and horizontal part
/// `t Σ_a R(σ × ∇_{E_a}σ) E_a` of the tension of the section.
pub fn section_defect(section: SectionJets, spec: &MetricSpec, p: &Point4, t: f64) -> Result<SectionDefect> {
    if !(t > 0.0) {
        return Err(GeomError::BadParameter(format!("t must be positive, got {t}")));
    }
    let pg = PointGeometry::new(spec, p)?;
    let (gj, fj) = frame_field_jets(spec, p)?;
    let x = Jet3::seed(p);
    let comps = section(&x);
    let sigma = Bivector::new(std::array::from_fn(|n| comps[n].value));
    let n = sigma.norm();
    if (n - 1.0).abs() > 1e-9 {
        return Err(GeomError::NotUnitSection(n));
    }
    sigma.ensure_asd(1e-9)?;
    // K in the frame, as jets: K_ab = A_ba
    let zero = Jet3::constant(0.0);
    let mut a = [[zero; 4]; 4];
    for (m, &(i, j)) in PAIRS.iter().enumerate() {
        a[i][j] = comps[m];
        a[j][i] = -comps[m];
    }
    // coframe θ^b_j = Σ_k E^k_b g_kj
    let theta: [[Jet3; 4]; 4] = std::array::from_fn(|b| {
        std::array::from_fn(|j| (0..4).fold(zero, |acc, kk| acc + fj[b][kk] * gj[kk][j]))
    });
    // J^i_j = Σ E^i_a K_ab θ^b_j
    let jm: [[Jet3; 4]; 4] = std::array::from_fn(|i| {
        std::array::from_fn(|j| {
            let mut acc = zero;
            for aa in 0..4 {
                for bb in 0..4 {
                    acc = acc + fj[aa][i] * a[bb][aa] * theta[bb][j];
                }
            }
            acc
        })
    });
    let val = Matrix4::from_fn(|i, j| jm[i][j].value);
    let d1 = |c: usize| Matrix4::from_fn(|i, j| jm[i][j].grad[c]);
    let d2 = |b: usize, c: usize| Matrix4::from_fn(|i, j| jm[i][j].hess[b][c]);
    let ch = &pg.christoffel;
    // gam[a] = (Γ^i_{a k})_{ik}, dgam[b][a] = ∂_b of it
    let gam: [Matrix4<f64>; 4] = std::array::from_fn(|aa| Matrix4::from_fn(|i, kk| ch.gamma[i][aa][kk]));
    let dgam = |b: usize, aa: usize| Matrix4::from_fn(|i, kk| ch.dgamma[b][i][aa][kk]);
    let nab: [Matrix4<f64>; 4] = std::array::from_fn(|aa| d1(aa) + gam[aa] * val - val * gam[aa]);
    let ginv = pg.metric.try_inverse().ok_or_else(|| GeomError::Numeric("singular metric".into()))?;
    let mut trace = Matrix4::zeros();
    for b in 0..4 {
        for aa in 0..4 {
            let w = ginv[(aa, b)];
            if w == 0.0 {
                continue;
            }
            // ∂_b(∇_a J)
            let dnab = d2(b, aa) + dgam(b, aa) * val + gam[aa] * d1(b) - d1(b) * gam[aa] - val * dgam(b, aa);
            let mut second = dnab + gam[b] * nab[aa] - nab[aa] * gam[b];
            for c in 0..4 {
                second -= nab[c] * ch.gamma[c][b][aa];
            }
            trace += second * w;
        }
    }
    let vert = (trace + val * trace * val) * 0.5;
    let e = pg.frame.e;
    let cof = pg.frame.coframe;
    let vertical = endo_to_bivector(&(cof * vert * e));
    // ∇_{E_a}σ in the frame
    let fc = &pg.curvature;
    let ro = crate::decomp::curv_op(fc);
    let mut horizontal = Vector4::zeros();
    for aa in 0..4 {
        let along = (0..4).fold(Matrix4::zeros(), |acc, c| acc + nab[c] * e[(c, aa)]);
        let dsig = endo_to_bivector(&(cof * along * e));
        let arg = cross_minus_unchecked(&sigma, &dsig.minus_part());
        horizontal += k_endo(&ro.apply(&arg)) * unit(aa) * (0.5 * t);
    }
    Ok(SectionDefect { vertical, horizontal })
}

/// Constant section with the given anti-self-dual components.
pub fn constant_section(c: Bivector) -> impl Fn(&[Jet3; 4]) -> [Jet3; 6] {
    move |_x| std::array::from_fn(|n| Jet3::constant(c.comp[n]))
}

/// Thresholds separating zero, nonzero and undecided defects.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct Tolerances {
    pub zero_tol: f64,
    pub nonzero_floor: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances { zero_tol: 1e-6, nonzero_floor: 1e-3 }
    }
}

impl Tolerances {
    pub fn validate(&self) -> Result<()> {
        if !(self.zero_tol > 0.0 && self.zero_tol < self.nonzero_floor) {
            return Err(GeomError::BadParameter(format!(
                "need 0 < zero_tol < nonzero_floor, got {} and {}",
                self.zero_tol, self.nonzero_floor
            )));
        }
        Ok(())
    }

    pub fn level(&self, v: f64) -> Level {
        if v < self.zero_tol {
            Level::Zero
        } else if v > self.nonzero_floor {
            Level::Nonzero
        } else {
            Level::Gap
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Level {
    Zero,
    Gap,
    Nonzero,
}

fn verdict_from(section: Level, map: Level) -> Verdict {
    match (section, map) {
        (Level::Nonzero, _) => Verdict::Neither,
        (Level::Gap, _) => Verdict::Inconclusive,
        (Level::Zero, Level::Zero) => Verdict::HarmonicMap,
        (Level::Zero, Level::Nonzero) => Verdict::HarmonicSectionOnly,
        (Level::Zero, Level::Gap) => Verdict::Inconclusive,
    }
}

fn worst(a: Level, b: Level) -> Level {
    match (a, b) {
        (Level::Nonzero, _) | (_, Level::Nonzero) => Level::Nonzero,
        (Level::Gap, _) | (_, Level::Gap) => Level::Gap,
        _ => Level::Zero,
    }
}

/// Verdicts for `k = 1, 2` from the section-level quantities and the
/// maxima of `|Tr_k|`.
pub fn verdicts(w_minus: f64, ds: f64, tr: [f64; 2], tol: &Tolerances) -> [Verdict; 2] {
    let s1 = tol.level(w_minus);
    let s2 = worst(s1, tol.level(ds));
    [verdict_from(s1, tol.level(tr[0])), verdict_from(s2, tol.level(tr[1]))]
}

/// Geometric side of the classification: self-dual and either Einstein or
/// with parallel Ricci tensor of spectrum `(0, μ, μ, μ)`. `None` when a
/// quantity falls between the thresholds.
pub fn geometric_harmonic(w_minus: f64, norm_b: f64, nabla_rho: f64, pattern_zero: bool, tol: &Tolerances) -> Option<bool> {
    let sd = tol.level(w_minus);
    let einstein = tol.level(norm_b);
    let parallel = tol.level(nabla_rho);
    match sd {
        Level::Nonzero => return Some(false),
        Level::Gap => return None,
        Level::Zero => {}
    }
    if einstein == Level::Zero {
        return Some(true);
    }
    if pattern_zero && parallel == Level::Zero {
        return Some(true);
    }
    if einstein == Level::Nonzero && (!pattern_zero || parallel == Level::Nonzero) {
        return Some(false);
    }
    None
}

#[derive(Clone, Debug, Serialize)]
pub struct DefectReport {
    pub metric: String,
    pub point: Point4,
    pub t: f64,
    pub s: f64,
    pub norm_b: f64,
    pub norm_w_minus: f64,
    pub ds_norm: f64,
    pub nabla_rho_norm: f64,
    pub eigenvalues: [f64; 4],
    pub pattern: EigenPattern,
    pub tr1_max: f64,
    pub tr2_max: f64,
    /// Max `|Tr_k - closed form|`; `None` when the base is not self-dual.
    pub closedform_residual: [Option<f64>; 2],
    pub verdicts: [Verdict; 2],
}

#[derive(Clone, Debug, Serialize)]
pub struct Classification {
    pub metric: String,
    pub t: f64,
    pub reports: Vec<DefectReport>,
    pub global_verdict: [Verdict; 2],
    pub geometric: Option<bool>,
    pub theorem_consistency: bool,
}

fn nabla_rho_norm(ric: &RicciData) -> f64 {
    ric.nabla_rho.iter().map(|m| m.norm_squared()).sum::<f64>().sqrt()
}

fn point_report(spec: &MetricSpec, p: &Point4, fiber: &[Bivector], t: f64, tol: &Tolerances) -> Result<DefectReport> {
    let pg = PointGeometry::new(spec, p)?;
    let fc = &pg.curvature;
    let ric = ricci(fc);
    let ro = crate::decomp::curv_op(fc);
    let d = decompose(&ro, &ric, CLASSIFY_TOL)?;
    let self_dual = d.norm_w_minus < tol.zero_tol;
    let mut tr_max = [0.0f64; 2];
    let mut resid: [Option<f64>; 2] = [None, None];
    for sigma in fiber {
        let tp = TwistorPoint::new(&pg, sigma)?;
        for (ki, k) in [1u8, 2].into_iter().enumerate() {
            for (n, f) in tp.ht_basis(t).iter().enumerate() {
                let v = tr_k(&tp, k, f, t)?;
                tr_max[ki] = tr_max[ki].max(v.abs());
                if self_dual {
                    let closed = if n < 4 {
                        tr_k_horizontal_closed(&tp, k, &f.hor, t, tol.zero_tol)?
                    } else {
                        tr_k_vertical_closed(&tp, k, &f.ver, t, tol.zero_tol)?
                    };
                    let r = resid[ki].get_or_insert(0.0);
                    *r = r.max((v - closed).abs());
                }
            }
        }
    }
    let ds_norm = fc.ds.norm();
    Ok(DefectReport {
        metric: spec.name.to_string(),
        point: *p,
        t,
        s: d.s,
        norm_b: d.norm_b,
        norm_w_minus: d.norm_w_minus,
        ds_norm,
        nabla_rho_norm: nabla_rho_norm(&ric),
        eigenvalues: ric.eigenvalues,
        pattern: eigen_structure(&ric, 1e-7),
        tr1_max: tr_max[0],
        tr2_max: tr_max[1],
        closedform_residual: resid,
        verdicts: verdicts(d.norm_w_minus, ds_norm, tr_max, tol),
    })
}

/// Per-point defect reports and global verdicts, without raising on a
/// disagreement with the geometric classification.
pub fn classify_unchecked(spec: &MetricSpec, t: f64, plan: &SamplePlan, tol: &Tolerances) -> Result<Classification> {
    tol.validate()?;
    if !(t > 0.0) {
        return Err(GeomError::BadParameter(format!("t must be positive, got {t}")));
    }
    if plan.is_empty() {
        return Err(GeomError::BadParameter("empty sample plan".into()));
    }
    let reports = plan
        .points
        .par_iter()
        .zip(plan.fibers.par_iter())
        .map(|(p, f)| point_report(spec, p, f, t, tol))
        .collect::<Result<Vec<_>>>()?;
    let max = |f: &dyn Fn(&DefectReport) -> f64| reports.iter().fold(0.0f64, |m, r| m.max(f(r)));
    let w = max(&|r| r.norm_w_minus);
    let ds = max(&|r| r.ds_norm);
    let b = max(&|r| r.norm_b);
    let nr = max(&|r| r.nabla_rho_norm);
    let tr = [max(&|r| r.tr1_max), max(&|r| r.tr2_max)];
    let zero_simple = reports.iter().all(|r| {
        matches!(r.pattern, EigenPattern::TripleSimple { lambda_zero: true, .. } | EigenPattern::Einstein { .. })
    });
    let global_verdict = verdicts(w, ds, tr, tol);
    let geometric = geometric_harmonic(w, b, nr, zero_simple, tol);
    let theorem_consistency = match geometric {
        None => true,
        Some(g) => global_verdict
            .iter()
            .all(|v| *v == Verdict::Inconclusive || (*v == Verdict::HarmonicMap) == g),
    };
    Ok(Classification {
        metric: spec.name.to_string(),
        t,
        reports,
        global_verdict,
        geometric,
        theorem_consistency,
    })
}

/// As [`classify_unchecked`], failing with `TheoremViolation` when the
/// numeric verdicts contradict the geometric classification.
pub fn classify(spec: &MetricSpec, t: f64, plan: &SamplePlan, tol: &Tolerances) -> Result<Classification> {
    let c = classify_unchecked(spec, t, plan, tol)?;
    if !c.theorem_consistency {
        return Err(GeomError::TheoremViolation(format!(
            "{} at t = {}: verdicts {:?} against geometric side {:?}",
            c.metric, t, c.global_verdict, c.geometric
        )));
    }
    Ok(c)
}
