//! Levi-Civita connection, curvature and Ricci data of a 4-metric at a point.
//!
//! Sign convention: `R(X,Y) = ∇_[X,Y] - [∇_X, ∇_Y]`, so that the round sphere
//! has `g(R(X,Y)X, Y) > 0`. Frame components `r[a][b][c][d]` stand for
//! `g(R(E_a,E_b)E_c, E_d)`.

use nalgebra::{Matrix4, SymmetricEigen, Vector4};

use crate::error::{GeomError, Result};
use crate::jet::{eval_metric_jet, invert_jet_matrix, Jet3, MetricMatrix, MetricSpec, Point4, Scalar};

pub type Tensor3 = [[[f64; 4]; 4]; 4];
pub type Tensor4 = [[[[f64; 4]; 4]; 4]; 4];
pub type Tensor5 = [[[[[f64; 4]; 4]; 4]; 4]; 4];

const Z3: Tensor3 = [[[0.0; 4]; 4]; 4];
const Z4: Tensor4 = [[[[0.0; 4]; 4]; 4]; 4];
const Z5: Tensor5 = [[[[[0.0; 4]; 4]; 4]; 4]; 4];

/// Christoffel symbols `gamma[k][i][j] = Γ^k_ij` with their first
/// (`dgamma[m][k][i][j] = ∂_m Γ^k_ij`) and second coordinate derivatives.
#[derive(Clone, Debug)]
pub struct ChristoffelField {
    pub gamma: Tensor3,
    pub dgamma: Tensor4,
    pub d2gamma: Tensor5,
}

/// Coordinate components of the curvature tensor and its covariant
/// derivative, `nabla_r[m][i][j][k][l] = (∇_m R)_ijkl`.
#[derive(Clone, Debug)]
pub struct RiemannAtPoint {
    pub r: Tensor4,
    pub nabla_r: Tensor5,
}

/// An oriented orthonormal frame; `e` holds the frame vectors as columns
/// and `omega[a][b][c] = g(∇_{E_c} E_a, E_b)`.
#[derive(Clone, Debug)]
pub struct OrthoFrame4 {
    pub e: Matrix4<f64>,
    pub coframe: Matrix4<f64>,
    pub omega: Tensor3,
}

/// Curvature data expressed in an orthonormal frame.
#[derive(Clone, Debug)]
pub struct FrameCurvature {
    pub point: Point4,
    /// Frame vectors in coordinates (columns).
    pub frame: Matrix4<f64>,
    pub r: Tensor4,
    /// `nabla_r[e][a][b][c][d] = (∇_{E_e} R)(E_a, E_b, E_c, E_d)`.
    pub nabla_r: Tensor5,
    pub rho: Matrix4<f64>,
    /// `nabla_rho[e] = ∇_{E_e} ρ`.
    pub nabla_rho: [Matrix4<f64>; 4],
    pub s: f64,
    /// `ds[a] = E_a(s)`.
    pub ds: Vector4<f64>,
}

#[derive(Clone, Debug)]
pub struct RicciData {
    pub rho: Matrix4<f64>,
    /// Ascending.
    pub eigenvalues: [f64; 4],
    /// Unit eigenvectors (frame components) matching `eigenvalues`.
    pub eigenvectors: Matrix4<f64>,
    pub s: f64,
    pub ds: Vector4<f64>,
    pub nabla_rho: [Matrix4<f64>; 4],
}

/// Everything the closed-form modules need at one base point.
#[derive(Clone, Debug)]
pub struct PointGeometry {
    pub point: Point4,
    pub metric: Matrix4<f64>,
    pub christoffel: ChristoffelField,
    pub riemann: RiemannAtPoint,
    pub frame: OrthoFrame4,
    pub curvature: FrameCurvature,
}

struct JetPipeline {
    g: MetricMatrix<Jet3>,
    gamma: [[[Jet3; 4]; 4]; 4],
}

fn jet_pipeline(spec: &MetricSpec, p: &Point4) -> Result<JetPipeline> {
    let g = eval_metric_jet(spec, p)?;
    let ginv = invert_jet_matrix(&g);
    let zero = Jet3::constant(0.0);
    // dg[m][i][j] = ∂_m g_ij, exact to order two
    let mut dg = [[[zero; 4]; 4]; 4];
    for (m, dm) in dg.iter_mut().enumerate() {
        for i in 0..4 {
            for j in 0..4 {
                dm[i][j] = g[i][j].partial(m);
            }
        }
    }
    let mut gamma = [[[zero; 4]; 4]; 4];
    for k in 0..4 {
        for i in 0..4 {
            for j in i..4 {
                let mut acc = zero;
                for m in 0..4 {
                    let t = dg[i][m][j] + dg[j][m][i] - dg[m][i][j];
                    acc = acc + ginv[k][m] * t;
                }
                gamma[k][i][j] = acc * 0.5;
                gamma[k][j][i] = gamma[k][i][j];
            }
        }
    }
    Ok(JetPipeline { g, gamma })
}

fn check_finite(values: &[f64], what: &str) -> Result<()> {
    if values.iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(GeomError::Numeric(format!("non-finite {what}")))
    }
}

pub fn christoffel(spec: &MetricSpec, p: &Point4) -> Result<ChristoffelField> {
    let jp = jet_pipeline(spec, p)?;
    let mut out = ChristoffelField {
        gamma: Z3,
        dgamma: Z4,
        d2gamma: Z5,
    };
    for k in 0..4 {
        for i in 0..4 {
            for j in 0..4 {
                let gj = &jp.gamma[k][i][j];
                out.gamma[k][i][j] = gj.value;
                for m in 0..4 {
                    out.dgamma[m][k][i][j] = gj.grad[m];
                    for n in 0..4 {
                        out.d2gamma[m][n][k][i][j] = gj.hess[m][n];
                    }
                }
            }
        }
    }
    check_finite(out.gamma.as_flattened().as_flattened(), "Christoffel symbols")?;
    Ok(out)
}

fn riemann_from_pipeline(jp: &JetPipeline) -> Result<RiemannAtPoint> {
    let zero = Jet3::constant(0.0);
    let gam = &jp.gamma;
    // textbook R^m_kij, valid to order one
    let mut rt = [[[[zero; 4]; 4]; 4]; 4];
    for m in 0..4 {
        for k in 0..4 {
            for i in 0..4 {
                for j in (i + 1)..4 {
                    let mut acc = gam[m][j][k].partial(i) - gam[m][i][k].partial(j);
                    for q in 0..4 {
                        acc = acc + gam[m][i][q] * gam[q][j][k] - gam[m][j][q] * gam[q][i][k];
                    }
                    rt[m][k][i][j] = acc;
                    rt[m][k][j][i] = -acc;
                }
            }
        }
    }
    let mut rj = [[[[zero; 4]; 4]; 4]; 4];
    for i in 0..4 {
        for j in 0..4 {
            for k in 0..4 {
                for l in 0..4 {
                    let mut acc = zero;
                    for m in 0..4 {
                        acc = acc + jp.g[l][m] * rt[m][k][i][j];
                    }
                    rj[i][j][k][l] = -acc;
                }
            }
        }
    }
    let gv = |k: usize, i: usize, j: usize| jp.gamma[k][i][j].value;
    let mut out = RiemannAtPoint { r: Z4, nabla_r: Z5 };
    for i in 0..4 {
        for j in 0..4 {
            for k in 0..4 {
                for l in 0..4 {
                    out.r[i][j][k][l] = rj[i][j][k][l].value;
                    for m in 0..4 {
                        let mut acc = rj[i][j][k][l].grad[m];
                        for q in 0..4 {
                            acc -= gv(q, m, i) * rj[q][j][k][l].value
                                + gv(q, m, j) * rj[i][q][k][l].value
                                + gv(q, m, k) * rj[i][j][q][l].value
                                + gv(q, m, l) * rj[i][j][k][q].value;
                        }
                        out.nabla_r[m][i][j][k][l] = acc;
                    }
                }
            }
        }
    }
    check_finite(out.r.as_flattened().as_flattened().as_flattened(), "curvature")?;
    Ok(out)
}

pub fn riemann(spec: &MetricSpec, p: &Point4) -> Result<RiemannAtPoint> {
    let jp = jet_pipeline(spec, p)?;
    let out = riemann_from_pipeline(&jp)?;
    let scale = 1.0 + tensor_norm4(&out.r);
    let defect = symmetry_defect(&out.r);
    if defect > 1e-9 * scale {
        return Err(GeomError::Numeric(format!(
            "curvature symmetries violated by {defect:e} at {p:?}"
        )));
    }
    Ok(out)
}

/// Covariant derivative of curvature; rejects results that break the second
/// Bianchi identity.
pub fn nabla_riemann(spec: &MetricSpec, p: &Point4) -> Result<Tensor5> {
    let r = riemann(spec, p)?;
    let scale = 1.0 + tensor_norm5(&r.nabla_r);
    let defect = second_bianchi_defect(&r.nabla_r);
    if defect > 1e-8 * scale {
        return Err(GeomError::Numeric(format!(
            "second Bianchi identity violated by {defect:e} at {p:?}"
        )));
    }
    Ok(r.nabla_r)
}

pub fn tensor_norm4(t: &Tensor4) -> f64 {
    t.as_flattened().as_flattened().as_flattened().iter().map(|v| v * v).sum::<f64>().sqrt()
}

pub fn tensor_norm5(t: &Tensor5) -> f64 {
    t.as_flattened().as_flattened().as_flattened().as_flattened().iter().map(|v| v * v).sum::<f64>().sqrt()
}

/// Largest violation of the algebraic curvature symmetries and the first
/// Bianchi identity.
pub fn symmetry_defect(r: &Tensor4) -> f64 {
    let mut worst: f64 = 0.0;
    for i in 0..4 {
        for j in 0..4 {
            for k in 0..4 {
                for l in 0..4 {
                    let v = r[i][j][k][l];
                    worst = worst
                        .max((v + r[j][i][k][l]).abs())
                        .max((v + r[i][j][l][k]).abs())
                        .max((v - r[k][l][i][j]).abs())
                        .max((v + r[j][k][i][l] + r[k][i][j][l]).abs());
                }
            }
        }
    }
    worst
}

/// Largest cyclic sum `∇_m R_ij.. + ∇_i R_jm.. + ∇_j R_mi..`.
pub fn second_bianchi_defect(nr: &Tensor5) -> f64 {
    let mut worst: f64 = 0.0;
    for m in 0..4 {
        for i in 0..4 {
            for j in 0..4 {
                for k in 0..4 {
                    for l in 0..4 {
                        let c = nr[m][i][j][k][l] + nr[i][j][m][k][l] + nr[j][m][i][k][l];
                        worst = worst.max(c.abs());
                    }
                }
            }
        }
    }
    worst
}

fn gram_schmidt_generic<S: Scalar>(g: &MetricMatrix<S>, start: &Matrix4<f64>, flip_last: bool) -> [[S; 4]; 4] {
    let dot = |x: &[S; 4], y: &[S; 4]| {
        let mut acc = S::cst(0.0);
        for i in 0..4 {
            for j in 0..4 {
                acc = acc + g[i][j] * x[i] * y[j];
            }
        }
        acc
    };
    let mut frame: [[S; 4]; 4] = [[S::cst(0.0); 4]; 4];
    for a in 0..4 {
        let mut v: [S; 4] = std::array::from_fn(|i| S::cst(start[(i, a)]));
        for b in 0..a {
            let c = dot(&v, &frame[b]);
            for i in 0..4 {
                v[i] = v[i] - c * frame[b][i];
            }
        }
        let n = dot(&v, &v).sqrt().recip();
        for i in 0..4 {
            v[i] = v[i] * n;
        }
        frame[a] = v;
    }
    if flip_last {
        for i in 0..4 {
            frame[3][i] = -frame[3][i];
        }
    }
    frame
}

/// Gram-Schmidt frame of the metric values `g`, starting from the columns of
/// `start`, with the last vector flipped if the result is negatively
/// oriented relative to the coordinates (or always, when `reverse` is set,
/// relative to the reversed orientation).
pub fn gram_schmidt(g: &Matrix4<f64>, start: &Matrix4<f64>, reverse: bool) -> Result<Matrix4<f64>> {
    let gm: [[f64; 4]; 4] = std::array::from_fn(|i| std::array::from_fn(|j| g[(i, j)]));
    let det = start.determinant();
    if det.abs() < 1e-12 {
        return Err(GeomError::Numeric("degenerate starting basis".into()));
    }
    let flip = (det < 0.0) != reverse;
    let f = gram_schmidt_generic(&gm, start, flip);
    let e = Matrix4::from_fn(|i, a| f[a][i]);
    if !e.iter().all(|v| v.is_finite()) {
        return Err(GeomError::Numeric("degenerate coordinate basis".into()));
    }
    Ok(e)
}

fn frame_jets(jp: &JetPipeline, start: &Matrix4<f64>, reverse: bool) -> Result<[[Jet3; 4]; 4]> {
    let det = start.determinant();
    if det.abs() < 1e-12 {
        return Err(GeomError::Numeric("degenerate starting basis".into()));
    }
    let f = gram_schmidt_generic(&jp.g, start, (det < 0.0) != reverse);
    if !f.iter().flatten().all(|j| j.value.is_finite()) {
        return Err(GeomError::Numeric("degenerate coordinate basis".into()));
    }
    Ok(f)
}

fn ortho_frame_from(jp: &JetPipeline, f: &[[Jet3; 4]; 4]) -> OrthoFrame4 {
    let e = Matrix4::from_fn(|i, a| f[a][i].value);
    let gv = Matrix4::from_fn(|i, j| jp.g[i][j].value);
    let coframe = e.transpose() * gv;
    let mut omega = Z3;
    for a in 0..4 {
        for c in 0..4 {
            // ∇_{E_c} E_a in coordinates
            let mut nab = [0.0; 4];
            for (i, ni) in nab.iter_mut().enumerate() {
                let mut acc = 0.0;
                for m in 0..4 {
                    let mut d = f[a][i].grad[m];
                    for k in 0..4 {
                        d += jp.gamma[i][m][k].value * f[a][k].value;
                    }
                    acc += e[(m, c)] * d;
                }
                *ni = acc;
            }
            for b in 0..4 {
                omega[a][b][c] = (0..4).map(|j| coframe[(b, j)] * nab[j]).sum();
            }
        }
    }
    OrthoFrame4 { e, coframe, omega }
}

/// Gram-Schmidt frame of the coordinate basis, in index order.
pub fn orthonormal_frame(spec: &MetricSpec, p: &Point4) -> Result<OrthoFrame4> {
    orthonormal_frame_from(spec, p, &Matrix4::identity())
}

/// Gram-Schmidt frame of the columns of `start` (coordinate components).
pub fn orthonormal_frame_from(spec: &MetricSpec, p: &Point4, start: &Matrix4<f64>) -> Result<OrthoFrame4> {
    let jp = jet_pipeline(spec, p)?;
    let f = frame_jets(&jp, start, spec.reverse_orientation)?;
    Ok(ortho_frame_from(&jp, &f))
}

impl FrameCurvature {
    /// Expresses coordinate curvature in the frame whose vectors are the
    /// columns of `e`.
    pub fn from_coords(point: Point4, riem: &RiemannAtPoint, e: &Matrix4<f64>) -> Self {
        let r = transform4(&riem.r, e);
        let mut nabla_r = Z5;
        for (m, slot) in nabla_r.iter_mut().enumerate() {
            let mut mixed = Z4;
            for q in 0..4 {
                let c = e[(q, m)];
                if c == 0.0 {
                    continue;
                }
                for i in 0..4 {
                    for j in 0..4 {
                        for k in 0..4 {
                            for l in 0..4 {
                                mixed[i][j][k][l] += c * riem.nabla_r[q][i][j][k][l];
                            }
                        }
                    }
                }
            }
            *slot = transform4(&mixed, e);
        }
        Self::assemble(point, *e, r, nabla_r)
    }

    fn assemble(point: Point4, frame: Matrix4<f64>, r: Tensor4, nabla_r: Tensor5) -> Self {
        let rho = Matrix4::from_fn(|a, b| (0..4).map(|c| r[a][c][b][c]).sum());
        let nabla_rho: [Matrix4<f64>; 4] =
            std::array::from_fn(|e| Matrix4::from_fn(|a, b| (0..4).map(|c| nabla_r[e][a][c][b][c]).sum()));
        let s = rho.trace();
        let ds = Vector4::from_fn(|e, _| nabla_rho[e].trace());
        FrameCurvature {
            point,
            frame,
            r,
            nabla_r,
            rho,
            nabla_rho,
            s,
            ds,
        }
    }

    /// The same data in the frame `F_a = Σ_b E_b q[b][a]`, `q` orthogonal.
    pub fn rotate(&self, q: &Matrix4<f64>) -> Self {
        let r = transform4(&self.r, q);
        let mut nabla_r = Z5;
        for (e, slot) in nabla_r.iter_mut().enumerate() {
            let mut mixed = Z4;
            for f in 0..4 {
                let c = q[(f, e)];
                if c == 0.0 {
                    continue;
                }
                for i in 0..4 {
                    for j in 0..4 {
                        for k in 0..4 {
                            for l in 0..4 {
                                mixed[i][j][k][l] += c * self.nabla_r[f][i][j][k][l];
                            }
                        }
                    }
                }
            }
            *slot = transform4(&mixed, q);
        }
        Self::assemble(self.point, self.frame * q, r, nabla_r)
    }

    /// `g(R(X,Y)Z, T)` for frame-component vectors.
    pub fn r4(&self, x: &Vector4<f64>, y: &Vector4<f64>, z: &Vector4<f64>, t: &Vector4<f64>) -> f64 {
        let mut acc = 0.0;
        for a in 0..4 {
            if x[a] == 0.0 {
                continue;
            }
            for b in 0..4 {
                if y[b] == 0.0 {
                    continue;
                }
                for c in 0..4 {
                    for d in 0..4 {
                        acc += x[a] * y[b] * z[c] * t[d] * self.r[a][b][c][d];
                    }
                }
            }
        }
        acc
    }

    /// `(∇_W R)(X, Y, Z, T)`.
    pub fn nabla_r4(&self, w: &Vector4<f64>, x: &Vector4<f64>, y: &Vector4<f64>, z: &Vector4<f64>, t: &Vector4<f64>) -> f64 {
        let mut acc = 0.0;
        for e in 0..4 {
            if w[e] == 0.0 {
                continue;
            }
            for a in 0..4 {
                for b in 0..4 {
                    for c in 0..4 {
                        for d in 0..4 {
                            acc += w[e] * x[a] * y[b] * z[c] * t[d] * self.nabla_r[e][a][b][c][d];
                        }
                    }
                }
            }
        }
        acc
    }

    /// `(∇_W ρ)` as a frame matrix.
    pub fn nabla_rho_along(&self, w: &Vector4<f64>) -> Matrix4<f64> {
        (0..4).fold(Matrix4::zeros(), |acc, e| acc + self.nabla_rho[e] * w[e])
    }

    /// The vector `δρ = -Σ_m (∇_{E_m} ρ)(E_m)`.
    pub fn delta_rho(&self) -> Vector4<f64> {
        Vector4::from_fn(|b, _| -(0..4).map(|m| self.nabla_rho[m][(b, m)]).sum::<f64>())
    }
}

fn transform4(t: &Tensor4, e: &Matrix4<f64>) -> Tensor4 {
    // contract one slot at a time
    let mut a = Z4;
    for i in 0..4 {
        for j in 0..4 {
            for k in 0..4 {
                for l in 0..4 {
                    a[i][j][k][l] = (0..4).map(|q| t[i][j][k][q] * e[(q, l)]).sum();
                }
            }
        }
    }
    let mut b = Z4;
    for i in 0..4 {
        for j in 0..4 {
            for k in 0..4 {
                for l in 0..4 {
                    b[i][j][k][l] = (0..4).map(|q| a[i][j][q][l] * e[(q, k)]).sum();
                }
            }
        }
    }
    let mut c = Z4;
    for i in 0..4 {
        for j in 0..4 {
            for k in 0..4 {
                for l in 0..4 {
                    c[i][j][k][l] = (0..4).map(|q| b[i][q][k][l] * e[(q, j)]).sum();
                }
            }
        }
    }
    let mut d = Z4;
    for i in 0..4 {
        for j in 0..4 {
            for k in 0..4 {
                for l in 0..4 {
                    d[i][j][k][l] = (0..4).map(|q| c[q][j][k][l] * e[(q, i)]).sum();
                }
            }
        }
    }
    d
}

/// Ricci operator data with ascending eigenvalues.
pub fn ricci(fc: &FrameCurvature) -> RicciData {
    let sym = (fc.rho + fc.rho.transpose()) * 0.5;
    let eig = SymmetricEigen::new(sym);
    let mut idx: Vec<usize> = (0..4).collect();
    // ties: ascending value, then the frame index of the dominant component
    let dominant = |k: usize| eig.eigenvectors.column(k).iamax();
    idx.sort_by(|&a, &b| {
        eig.eigenvalues[a]
            .partial_cmp(&eig.eigenvalues[b])
            .unwrap_or(std::cmp::Ordering::Equal)
            .then(dominant(a).cmp(&dominant(b)))
    });
    let eigenvalues = std::array::from_fn(|k| eig.eigenvalues[idx[k]]);
    let eigenvectors = Matrix4::from_fn(|i, k| eig.eigenvectors[(i, idx[k])]);
    RicciData {
        rho: fc.rho,
        eigenvalues,
        eigenvectors,
        s: fc.s,
        ds: fc.ds,
        nabla_rho: fc.nabla_rho,
    }
}

/// `dr(X,Y,Z) = (∇_Y r)(Z,X) - (∇_Z r)(Y,X)`, frame components.
pub fn dr(fc: &FrameCurvature, x: &Vector4<f64>, y: &Vector4<f64>, z: &Vector4<f64>) -> f64 {
    let a = z.dot(&(fc.nabla_rho_along(y) * x));
    let b = y.dot(&(fc.nabla_rho_along(z) * x));
    a - b
}

/// `dr(X, a) = Σ_{i<j} a_ij dr(X, E_i, E_j)`.
pub fn dr_bivector(fc: &FrameCurvature, x: &Vector4<f64>, a: &crate::lambda2::Bivector) -> f64 {
    let e = |k: usize| Vector4::from_fn(|r, _| if r == k { 1.0 } else { 0.0 });
    crate::lambda2::PAIRS
        .iter()
        .zip(a.comp)
        .map(|(&(i, j), c)| c * dr(fc, x, &e(i), &e(j)))
        .sum()
}

/// Metric and Gram-Schmidt frame as jets at `p`; `frame[a][i]` is the
/// `i`-th coordinate component of `E_a`. Same frame as [`PointGeometry::new`].
pub fn frame_field_jets(spec: &MetricSpec, p: &Point4) -> Result<(MetricMatrix<Jet3>, [[Jet3; 4]; 4])> {
    let jp = jet_pipeline(spec, p)?;
    let f = frame_jets(&jp, &Matrix4::identity(), spec.reverse_orientation)?;
    Ok((jp.g, f))
}

impl PointGeometry {
    pub fn new(spec: &MetricSpec, p: &Point4) -> Result<Self> {
        Self::with_start(spec, p, &Matrix4::identity())
    }

    /// Like [`PointGeometry::new`] but Gram-Schmidt starts from the columns
    /// of `start`.
    pub fn with_start(spec: &MetricSpec, p: &Point4, start: &Matrix4<f64>) -> Result<Self> {
        let jp = jet_pipeline(spec, p)?;
        let riemann = riemann_from_pipeline(&jp)?;
        let scale = 1.0 + tensor_norm4(&riemann.r);
        let defect = symmetry_defect(&riemann.r);
        if defect > 1e-9 * scale {
            return Err(GeomError::Numeric(format!(
                "curvature symmetries violated by {defect:e} at {p:?}"
            )));
        }
        let f = frame_jets(&jp, start, spec.reverse_orientation)?;
        let frame = ortho_frame_from(&jp, &f);
        let curvature = FrameCurvature::from_coords(*p, &riemann, &frame.e);
        let mut christoffel = ChristoffelField {
            gamma: Z3,
            dgamma: Z4,
            d2gamma: Z5,
        };
        for k in 0..4 {
            for i in 0..4 {
                for j in 0..4 {
                    let gj = &jp.gamma[k][i][j];
                    christoffel.gamma[k][i][j] = gj.value;
                    for m in 0..4 {
                        christoffel.dgamma[m][k][i][j] = gj.grad[m];
                        for n in 0..4 {
                            christoffel.d2gamma[m][n][k][i][j] = gj.hess[m][n];
                        }
                    }
                }
            }
        }
        Ok(PointGeometry {
            point: *p,
            metric: Matrix4::from_fn(|i, j| jp.g[i][j].value),
            christoffel,
            riemann,
            frame,
            curvature,
        })
    }

    /// Scalar curvature as a jet, used to cross-check `ds`.
    pub fn scalar_jet(spec: &MetricSpec, p: &Point4) -> Result<Jet3> {
        let jp = jet_pipeline(spec, p)?;
        let ginv = invert_jet_matrix(&jp.g);
        let gam = &jp.gamma;
        let zero = Jet3::constant(0.0);
        // textbook Ricci R_kj = ∂_i Γ^i_jk - ∂_j Γ^i_ik + Γ^i_ip Γ^p_jk - Γ^i_jp Γ^p_ik
        let mut s = zero;
        for k in 0..4 {
            for j in 0..4 {
                let mut ric = zero;
                for i in 0..4 {
                    ric = ric + gam[i][j][k].partial(i) - gam[i][i][k].partial(j);
                    for q in 0..4 {
                        ric = ric + gam[i][i][q] * gam[q][j][k] - gam[i][j][q] * gam[q][i][k];
                    }
                }
                s = s + ginv[k][j] * ric;
            }
        }
        Ok(s)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog;

    fn e(i: usize) -> Vector4<f64> {
        Vector4::from_fn(|r, _| if r == i { 1.0 } else { 0.0 })
    }

    #[test]
    fn flat_has_no_connection() {
        let spec = catalog::get_metric("flat").unwrap().spec;
        let c = christoffel(&spec, &[0.3, -0.2, 0.1, 0.5]).unwrap();
        assert!(c.gamma.as_flattened().as_flattened().iter().all(|v| *v == 0.0));
        let r = riemann(&spec, &[0.3, -0.2, 0.1, 0.5]).unwrap();
        assert_eq!(tensor_norm4(&r.r), 0.0);
        let f = orthonormal_frame(&spec, &[0.0; 4]).unwrap();
        assert_eq!(f.e, Matrix4::identity());
        assert!(f.omega.as_flattened().as_flattened().iter().all(|v| *v == 0.0));
    }

    #[test]
    fn sphere_christoffel_values() {
        let spec = catalog::get_metric("s4").unwrap().spec;
        let c0 = christoffel(&spec, &[0.0; 4]).unwrap();
        assert!(c0.gamma.as_flattened().as_flattened().iter().all(|v| v.abs() < 1e-15));
        let c = christoffel(&spec, &[1.0, 0.0, 0.0, 0.0]).unwrap();
        assert!((c.gamma[0][0][0] + 1.0).abs() < 1e-14);
        let f = orthonormal_frame(&spec, &[0.0; 4]).unwrap();
        assert!((f.e - Matrix4::identity() * 0.5).amax() < 1e-15);
    }

    #[test]
    fn christoffel_is_metric_compatible() {
        let spec = catalog::get_metric("cp2").unwrap().spec;
        let p = [0.3, -0.4, 0.2, 0.7];
        let c = christoffel(&spec, &p).unwrap();
        let g = eval_metric_jet(&spec, &p).unwrap();
        for m in 0..4 {
            for i in 0..4 {
                for j in 0..4 {
                    let mut rhs = 0.0;
                    for k in 0..4 {
                        rhs += c.gamma[k][m][i] * g[k][j].value + c.gamma[k][m][j] * g[i][k].value;
                    }
                    assert!((g[i][j].grad[m] - rhs).abs() < 1e-10);
                }
            }
        }
    }

    #[test]
    fn sphere_curvature_is_unit() {
        let spec = catalog::get_metric("s4").unwrap().spec;
        let pg = PointGeometry::new(&spec, &[0.4, -0.3, 0.8, 0.1]).unwrap();
        let fc = &pg.curvature;
        for a in 0..4 {
            for b in 0..4 {
                let k = fc.r4(&e(a), &e(b), &e(a), &e(b));
                let want = if a == b { 0.0 } else { 1.0 };
                assert!((k - want).abs() < 1e-12, "{a}{b}: {k}");
            }
        }
        assert!(tensor_norm5(&fc.nabla_r) < 1e-11);
        assert!((fc.rho - Matrix4::identity() * 3.0).amax() < 1e-12);
        assert!((fc.s - 12.0).abs() < 1e-12);
    }

    #[test]
    fn product_with_line_has_flat_mixed_planes() {
        let spec = catalog::get_metric("r_x_s3").unwrap().spec;
        let pg = PointGeometry::new(&spec, &[0.2, 0.5, -0.3, 0.4]).unwrap();
        let fc = &pg.curvature;
        let t_dir = pg.frame.e.column(0).into_owned();
        assert!((t_dir - e(0)).amax() < 1e-14);
        for a in 1..4 {
            assert!(fc.r4(&e(0), &e(a), &e(0), &e(a)).abs() < 1e-12);
        }
        let ric = ricci(fc);
        let want = [0.0, 2.0, 2.0, 2.0];
        for k in 0..4 {
            assert!((ric.eigenvalues[k] - want[k]).abs() < 1e-10);
        }
        assert!((ric.s - 6.0).abs() < 1e-10);
    }

    #[test]
    fn conformal_exp_curvature_is_not_parallel() {
        let spec = catalog::get_metric("conformal_flat_exp").unwrap().spec;
        let nr = nabla_riemann(&spec, &[0.1, 0.2, 0.3, -0.2]).unwrap();
        assert!(tensor_norm5(&nr) > 1e-4);
    }

    #[test]
    fn ds_matches_scalar_jet() {
        for name in ["conformal_flat_exp", "cp2", "s2_x_s2"] {
            let spec = catalog::get_metric(name).unwrap().spec;
            let p = [0.21, -0.13, 0.35, 0.08];
            let pg = PointGeometry::new(&spec, &p).unwrap();
            let sj = PointGeometry::scalar_jet(&spec, &p).unwrap();
            assert!((sj.value - pg.curvature.s).abs() < 1e-10);
            let coord_ds = pg.frame.e.transpose() * Vector4::from(sj.grad);
            assert!((coord_ds - pg.curvature.ds).amax() < 1e-9, "{name}");
        }
    }

    #[test]
    fn dr_is_antisymmetric_and_vanishes_for_parallel_ricci() {
        let spec = catalog::get_metric("conformal_flat_exp").unwrap().spec;
        let pg = PointGeometry::new(&spec, &[0.1, 0.0, 0.2, 0.3]).unwrap();
        let x = Vector4::new(0.3, 0.1, -0.2, 0.5);
        let y = Vector4::new(-0.1, 0.4, 0.2, 0.0);
        let z = Vector4::new(0.2, -0.3, 0.1, 0.6);
        let fc = &pg.curvature;
        assert!((dr(fc, &x, &y, &z) + dr(fc, &x, &z, &y)).abs() < 1e-15);
        let spec = catalog::get_metric("r_x_s3").unwrap().spec;
        let pg = PointGeometry::new(&spec, &[0.1, 0.0, 0.2, 0.3]).unwrap();
        assert!(dr(&pg.curvature, &x, &y, &z).abs() < 1e-10);
    }

    #[test]
    fn frame_rotation_keeps_invariants() {
        let spec = catalog::get_metric("cp2").unwrap().spec;
        let p = [0.3, 0.1, -0.2, 0.4];
        let a = PointGeometry::new(&spec, &p).unwrap();
        let start = nalgebra::Rotation3::from_euler_angles(0.3, -0.7, 1.1).into_inner();
        let mut s4 = Matrix4::identity();
        s4.fixed_view_mut::<3, 3>(1, 1).copy_from(&start);
        let b = PointGeometry::with_start(&spec, &p, &s4).unwrap();
        let fa = &a.curvature;
        let fb = &b.curvature;
        assert!((fa.s - fb.s).abs() < 1e-10);
        assert!((fa.rho.norm_squared() - fb.rho.norm_squared()).abs() < 1e-9);
        assert!((tensor_norm4(&fa.r) - tensor_norm4(&fb.r)).abs() < 1e-9);
    }
}
