//! Brute-force Riemannian geometry of `(Z, h_t)` in an explicit
//! six-dimensional chart, by finite differences of metric values only.
//!
//! Chart: `z = (x, u, v)` where `x` are base coordinates and `(u, v)` are
//! stereographic coordinates on the unit sphere of `Λ²_-` written in the
//! `s_i^-` frame of the Gram-Schmidt frame field. The horizontal
//! distribution comes from the connection of `Λ²_-`, itself obtained by
//! differencing the frame field and the metric.
//!
//! Nothing here touches the jet pipeline, so agreement with the closed
//! forms is an independent check.

use std::cell::RefCell;
use std::collections::HashMap;

use nalgebra::{Matrix3, Matrix3x2, Matrix4, Matrix6, Rotation3, Vector3, Vector4, Vector6};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{GeomError, Result};
use crate::jet::{MetricSpec, Point4};
use crate::lambda2::{s_minus, Bivector};
use crate::riemann::{gram_schmidt, PointGeometry};
use crate::sampling::{random_rotation, SamplePlan};
use crate::twistor::{unit, RzKind, TwistorPoint, TwistorTangent};

pub type Point6 = [f64; 6];
pub type Gamma6 = [[[f64; 6]; 6]; 6];
pub type Riemann6 = [[[[f64; 6]; 6]; 6]; 6];

const WEIGHTS4: [f64; 2] = [2.0 / 3.0, -1.0 / 12.0];
const WEIGHTS6: [f64; 3] = [3.0 / 4.0, -3.0 / 20.0, 1.0 / 60.0];
const WEIGHTS8: [f64; 4] = [4.0 / 5.0, -1.0 / 5.0, 4.0 / 105.0, -1.0 / 280.0];

/// Central finite-difference stencil for first derivatives.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct FdScheme {
    pub step: f64,
    pub order: usize,
}

impl Default for FdScheme {
    fn default() -> Self {
        FdScheme { step: 0.02, order: 8 }
    }
}

impl FdScheme {
    pub fn new(step: f64, order: usize) -> Result<Self> {
        if !(step > 0.0 && step.is_finite()) {
            return Err(GeomError::BadParameter(format!("finite-difference step must be positive, got {step}")));
        }
        if ![4, 6, 8].contains(&order) {
            return Err(GeomError::BadParameter(format!("stencil order must be 4, 6 or 8, got {order}")));
        }
        Ok(FdScheme { step, order })
    }

    fn weights(&self) -> &'static [f64] {
        match self.order {
            4 => &WEIGHTS4,
            6 => &WEIGHTS6,
            _ => &WEIGHTS8,
        }
    }

    /// Largest offset of one stencil.
    pub fn half_width(&self) -> f64 {
        self.step * (self.order / 2) as f64
    }

    /// Offset reached by the three nested stencils used for curvature.
    pub fn reach(&self) -> f64 {
        3.0 * self.half_width()
    }

    /// Derivative at `0` of a vector-valued function of one variable.
    pub fn derivative<F>(&self, f: F) -> Result<Vec<f64>>
    where
        F: Fn(f64) -> Result<Vec<f64>>,
    {
        let mut acc: Vec<f64> = Vec::new();
        for (m, w) in self.weights().iter().enumerate() {
            let s = (m + 1) as f64 * self.step;
            let plus = f(s)?;
            let minus = f(-s)?;
            if acc.is_empty() {
                acc = vec![0.0; plus.len()];
            }
            for (a, (p, q)) in acc.iter_mut().zip(plus.iter().zip(&minus)) {
                *a += w * (p - q);
            }
        }
        for a in acc.iter_mut() {
            *a /= self.step;
        }
        Ok(acc)
    }
}

fn flat4(m: &Matrix4<f64>) -> Vec<f64> {
    m.as_slice().to_vec()
}

fn key(x: &Point4) -> [u64; 4] {
    std::array::from_fn(|i| x[i].to_bits())
}

fn shift4(x: &Point4, a: usize, s: f64) -> Point4 {
    let mut y = *x;
    y[a] += s;
    y
}

fn shift6(z: &Point6, dir: &Vector6<f64>, s: f64) -> Point6 {
    std::array::from_fn(|i| z[i] + s * dir[i])
}

fn basis6(i: usize) -> Vector6<f64> {
    Vector6::from_fn(|r, _| if r == i { 1.0 } else { 0.0 })
}

fn stereo(u: f64, v: f64) -> Vector3<f64> {
    let d = 1.0 + u * u + v * v;
    Vector3::new((1.0 - u * u - v * v) / d, 2.0 * u / d, 2.0 * v / d)
}

fn stereo_jacobian(u: f64, v: f64) -> Matrix3x2<f64> {
    let d = 1.0 + u * u + v * v;
    let d2 = d * d;
    Matrix3x2::new(
        -4.0 * u / d2,
        -4.0 * v / d2,
        (2.0 * d - 4.0 * u * u) / d2,
        -4.0 * u * v / d2,
        -4.0 * u * v / d2,
        (2.0 * d - 4.0 * v * v) / d2,
    )
}

fn cross_matrix(y: &Vector3<f64>) -> Matrix3<f64> {
    Matrix3::new(0.0, -y[2], y[1], y[2], 0.0, -y[0], -y[1], y[0], 0.0)
}

/// Stereographic chart of `(Z, h_t)` over a base chart.
pub struct ZChart {
    pub spec: MetricSpec,
    pub t: f64,
    pub scheme: FdScheme,
    /// Starting basis of the Gram-Schmidt frame field.
    pub start: Matrix4<f64>,
    /// Fibre point `y` (in `s^-` coordinates) is `rot · stereo(u, v)`.
    pub fiber_rotation: Matrix3<f64>,
    cache: RefCell<HashMap<[u64; 4], [Matrix3<f64>; 4]>>,
}

impl ZChart {
    pub fn new(spec: &MetricSpec, t: f64, scheme: FdScheme) -> Result<Self> {
        Self::with_frames(spec, t, scheme, Matrix4::identity(), Matrix3::identity())
    }

    pub fn with_frames(
        spec: &MetricSpec,
        t: f64,
        scheme: FdScheme,
        start: Matrix4<f64>,
        fiber_rotation: Matrix3<f64>,
    ) -> Result<Self> {
        if !(t > 0.0 && t.is_finite()) {
            return Err(GeomError::BadParameter(format!("t must be positive, got {t}")));
        }
        if start.determinant().abs() < 1e-12 {
            return Err(GeomError::BadParameter("degenerate starting basis".into()));
        }
        Ok(ZChart {
            spec: *spec,
            t,
            scheme,
            start,
            fiber_rotation,
            cache: RefCell::new(HashMap::new()),
        })
    }

    /// Chart whose fibre coordinates put `sigma` (frame components) at
    /// `(u, v) = (0, 0)`.
    pub fn centered_on(spec: &MetricSpec, t: f64, scheme: FdScheme, sigma: &Bivector) -> Result<Self> {
        let y = sigma.minus_coords().normalize();
        let rot = Rotation3::rotation_between(&Vector3::x(), &y)
            .unwrap_or_else(|| Rotation3::from_axis_angle(&Vector3::z_axis(), std::f64::consts::PI));
        Self::with_frames(spec, t, scheme, Matrix4::identity(), *rot.matrix())
    }

    fn metric(&self, x: &Point4) -> Result<Matrix4<f64>> {
        if !self.spec.contains(x) {
            return Err(GeomError::Stencil(format!("{x:?} is outside the chart of `{}`", self.spec.name)));
        }
        Ok(self.spec.value_matrix(x))
    }

    /// Christoffel symbols of the base from differenced metric values.
    pub fn base_gamma(&self, x: &Point4) -> Result<[Matrix4<f64>; 4]> {
        let g = self.metric(x)?;
        let ginv = g.try_inverse().ok_or_else(|| GeomError::Numeric("singular metric".into()))?;
        let mut dg = [Matrix4::zeros(); 4];
        for (a, d) in dg.iter_mut().enumerate() {
            let v = self.scheme.derivative(|s| Ok(flat4(&self.metric(&shift4(x, a, s))?)))?;
            *d = Matrix4::from_column_slice(&v);
        }
        // gam[k][(i, j)] = Γ^k_ij
        let mut gam = [Matrix4::zeros(); 4];
        for (k, gk) in gam.iter_mut().enumerate() {
            for i in 0..4 {
                for j in 0..4 {
                    let mut acc = 0.0;
                    for m in 0..4 {
                        acc += ginv[(k, m)] * (dg[i][(m, j)] + dg[j][(m, i)] - dg[m][(i, j)]);
                    }
                    gk[(i, j)] = 0.5 * acc;
                }
            }
        }
        Ok(gam)
    }

    pub fn frame(&self, x: &Point4) -> Result<Matrix4<f64>> {
        gram_schmidt(&self.metric(x)?, &self.start, self.spec.reverse_orientation)
    }

    /// Connection matrices of `Λ²_-` in the `s^-` frame field:
    /// `∇_{∂_a} s_j = Σ_i conn[a][(i, j)] s_i`.
    pub fn connection(&self, x: &Point4) -> Result<[Matrix3<f64>; 4]> {
        if let Some(c) = self.cache.borrow().get(&key(x)) {
            return Ok(*c);
        }
        let e = self.frame(x)?;
        let g = self.metric(x)?;
        let coframe = e.transpose() * g;
        let gam = self.base_gamma(x)?;
        let s: [Matrix4<f64>; 3] = std::array::from_fn(|j| s_minus(j).matrix());
        let mut out = [Matrix3::zeros(); 4];
        for (a, ca) in out.iter_mut().enumerate() {
            let de = Matrix4::from_column_slice(&self.scheme.derivative(|h| Ok(flat4(&self.frame(&shift4(x, a, h))?)))?);
            // (Γ_a)_{ik} = Γ^i_{ak}
            let gamma_a = Matrix4::from_fn(|i, k| gam[i][(a, k)]);
            // omega_{cb} = g(∇_a E_b, E_c)
            let omega = coframe * (de + gamma_a * e);
            for j in 0..3 {
                let d = Bivector::from_matrix(&(omega * s[j] - s[j] * omega));
                for i in 0..3 {
                    ca[(i, j)] = d.inner(&s_minus(i));
                }
            }
        }
        self.cache.borrow_mut().insert(key(x), out);
        Ok(out)
    }

    fn split(z: &Point6) -> (Point4, f64, f64) {
        ([z[0], z[1], z[2], z[3]], z[4], z[5])
    }

    /// Fibre point in `s^-` coordinates of the frame at `x`.
    pub fn fiber_point(&self, u: f64, v: f64) -> Vector3<f64> {
        self.fiber_rotation * stereo(u, v)
    }

    pub fn fiber_jacobian(&self, u: f64, v: f64) -> Matrix3x2<f64> {
        self.fiber_rotation * stereo_jacobian(u, v)
    }

    /// Fibre coordinates of a unit `y`.
    pub fn fiber_coords(&self, y: &Vector3<f64>) -> Result<(f64, f64)> {
        let w = self.fiber_rotation.transpose() * y.normalize();
        if w[0] < -0.9 {
            return Err(GeomError::Stencil("fibre point too close to the stereographic pole".into()));
        }
        Ok((w[1] / (1.0 + w[0]), w[2] / (1.0 + w[0])))
    }

    /// Chart point over `x` carrying the unit 2-vector `sigma` (frame components).
    pub fn point(&self, x: &Point4, sigma: &Bivector) -> Result<Point6> {
        let (u, v) = self.fiber_coords(&sigma.minus_coords())?;
        Ok([x[0], x[1], x[2], x[3], u, v])
    }

    pub fn sigma_at(&self, z: &Point6) -> Bivector {
        let (_, u, v) = Self::split(z);
        Bivector::from_minus(&self.fiber_point(u, v))
    }

    fn pieces(&self, z: &Point6) -> Result<(Matrix4<f64>, [Matrix3<f64>; 4], Vector3<f64>, Matrix3x2<f64>)> {
        let (x, u, v) = Self::split(z);
        Ok((self.metric(&x)?, self.connection(&x)?, self.fiber_point(u, v), self.fiber_jacobian(u, v)))
    }

    /// `h_t` in chart components.
    pub fn metric6(&self, z: &Point6) -> Result<Matrix6<f64>> {
        let (g, conn, y, dy) = self.pieces(z)?;
        let mut m = nalgebra::Matrix3x6::zeros();
        for a in 0..4 {
            m.set_column(a, &(conn[a] * y));
        }
        m.set_column(4, &dy.column(0));
        m.set_column(5, &dy.column(1));
        let mut h = m.transpose() * m * self.t;
        for i in 0..4 {
            for j in 0..4 {
                h[(i, j)] += g[(i, j)];
            }
        }
        Ok(h)
    }

    fn pinv(dy: &Matrix3x2<f64>) -> Result<nalgebra::Matrix2x3<f64>> {
        let n = dy.transpose() * dy;
        let inv = n.try_inverse().ok_or_else(|| GeomError::Numeric("degenerate fibre chart".into()))?;
        Ok(inv * dy.transpose())
    }

    /// Horizontal lift of the coordinate vector `xv` at `z`.
    pub fn lift(&self, z: &Point6, xv: &Vector4<f64>) -> Result<Vector6<f64>> {
        let (_, conn, y, dy) = self.pieces(z)?;
        let ay = (0..4).fold(Vector3::zeros(), |acc, a| acc + conn[a] * y * xv[a]);
        let eta = -(Self::pinv(&dy)? * ay);
        Ok(Vector6::new(xv[0], xv[1], xv[2], xv[3], eta[0], eta[1]))
    }

    /// Vertical vector with `s^-` coordinates `w` (tangent to the sphere).
    pub fn vertical(&self, z: &Point6, w: &Vector3<f64>) -> Result<Vector6<f64>> {
        let (_, u, v) = Self::split(z);
        let eta = Self::pinv(&self.fiber_jacobian(u, v))? * w;
        Ok(Vector6::new(0.0, 0.0, 0.0, 0.0, eta[0], eta[1]))
    }

    /// `h_t`-orthogonal splitting of a chart vector into the base vector
    /// (coordinates) and the vertical part (`s^-` coordinates).
    pub fn decompose(&self, z: &Point6, w: &Vector6<f64>) -> Result<(Vector4<f64>, Vector3<f64>)> {
        let xv = Vector4::new(w[0], w[1], w[2], w[3]);
        let rest = w - self.lift(z, &xv)?;
        let (_, u, v) = Self::split(z);
        let vert = self.fiber_jacobian(u, v) * nalgebra::Vector2::new(rest[4], rest[5]);
        Ok((xv, vert))
    }

    /// Chart vector of a tangent given in Gram-Schmidt frame components.
    pub fn tangent_to_chart(&self, z: &Point6, a: &TwistorTangent) -> Result<Vector6<f64>> {
        let (x, _, _) = Self::split(z);
        let e = self.frame(&x)?;
        Ok(self.lift(z, &(e * a.hor))? + self.vertical(z, &a.ver.minus_coords())?)
    }

    /// `𝒥_k` as a chart endomorphism.
    pub fn j_matrix(&self, z: &Point6, k: u8) -> Result<Matrix6<f64>> {
        let sign = match k {
            1 => -1.0,
            2 => 1.0,
            _ => return Err(GeomError::BadParameter(format!("structure index must be 1 or 2, got {k}"))),
        };
        let (x, _, _) = Self::split(z);
        let e = self.frame(&x)?;
        let einv = e.try_inverse().ok_or_else(|| GeomError::Numeric("singular frame".into()))?;
        let sigma = self.sigma_at(z);
        let kc = e * crate::lambda2::k_endo(&sigma) * einv;
        let (_, conn, y, dy) = self.pieces(z)?;
        let pinv = Self::pinv(&dy)?;
        let jv = pinv * cross_matrix(&y) * dy * sign;
        // columns of hm: lifts of coordinate vectors, then fibre directions
        let mut hm = Matrix6::identity();
        for a in 0..4 {
            let eta = -(pinv * (conn[a] * y));
            hm[(4, a)] = eta[0];
            hm[(5, a)] = eta[1];
        }
        let mut block = Matrix6::zeros();
        block.fixed_view_mut::<4, 4>(0, 0).copy_from(&kc);
        block.fixed_view_mut::<2, 2>(4, 4).copy_from(&jv);
        let hinv = hm.try_inverse().ok_or_else(|| GeomError::Numeric("singular lift matrix".into()))?;
        Ok(hm * block * hinv)
    }

    /// `Γ^α_{βγ}` of `h_t`.
    pub fn gamma6(&self, z: &Point6) -> Result<Gamma6> {
        let h = self.metric6(z)?;
        let hinv = h.try_inverse().ok_or_else(|| GeomError::Numeric("singular h_t".into()))?;
        let mut dh = [Matrix6::zeros(); 6];
        for (c, d) in dh.iter_mut().enumerate() {
            let dir = basis6(c);
            let v = self.scheme.derivative(|s| Ok(self.metric6(&shift6(z, &dir, s))?.as_slice().to_vec()))?;
            *d = Matrix6::from_column_slice(&v);
        }
        let mut out = [[[0.0; 6]; 6]; 6];
        for (k, ok) in out.iter_mut().enumerate() {
            for i in 0..6 {
                for j in i..6 {
                    let mut acc = 0.0;
                    for m in 0..6 {
                        acc += hinv[(k, m)] * (dh[i][(m, j)] + dh[j][(m, i)] - dh[m][(i, j)]);
                    }
                    ok[i][j] = 0.5 * acc;
                    ok[j][i] = ok[i][j];
                }
            }
        }
        Ok(out)
    }

    /// `h_t(R(∂_a, ∂_b)∂_c, ∂_d)` with `R(X,Y) = ∇_[X,Y] - [∇_X, ∇_Y]`.
    pub fn riemann6(&self, z: &Point6) -> Result<Riemann6> {
        let h = self.metric6(z)?;
        let gam = self.gamma6(z)?;
        let mut dgam = [[[[0.0; 6]; 6]; 6]; 6];
        for (a, da) in dgam.iter_mut().enumerate() {
            let dir = basis6(a);
            let v = self.scheme.derivative(|s| {
                let g = self.gamma6(&shift6(z, &dir, s))?;
                Ok(g.iter().flatten().flatten().copied().collect())
            })?;
            for m in 0..6 {
                for b in 0..6 {
                    for c in 0..6 {
                        da[m][b][c] = v[m * 36 + b * 6 + c];
                    }
                }
            }
        }
        // up[m][c][a][b] = R^m_{cab}
        let mut out = [[[[0.0; 6]; 6]; 6]; 6];
        let mut up = [[[[0.0; 6]; 6]; 6]; 6];
        for m in 0..6 {
            for c in 0..6 {
                for a in 0..6 {
                    for b in 0..6 {
                        let mut v = dgam[a][m][b][c] - dgam[b][m][a][c];
                        for p in 0..6 {
                            v += gam[m][a][p] * gam[p][b][c] - gam[m][b][p] * gam[p][a][c];
                        }
                        up[m][c][a][b] = v;
                    }
                }
            }
        }
        for a in 0..6 {
            for b in 0..6 {
                for c in 0..6 {
                    for d in 0..6 {
                        out[a][b][c][d] = -(0..6).map(|m| h[(d, m)] * up[m][c][a][b]).sum::<f64>();
                    }
                }
            }
        }
        Ok(out)
    }

    /// `D_A B` for the vector field `field` along the chart vector `a`.
    pub fn covariant_derivative<F>(&self, z: &Point6, a: &Vector6<f64>, field: F) -> Result<Vector6<f64>>
    where
        F: Fn(&Point6) -> Result<Vector6<f64>>,
    {
        let d = self.scheme.derivative(|s| Ok(field(&shift6(z, a, s))?.as_slice().to_vec()))?;
        let b = field(z)?;
        let gam = self.gamma6(z)?;
        Ok(Vector6::from_fn(|k, _| {
            let mut acc = d[k];
            for i in 0..6 {
                for j in 0..6 {
                    acc += gam[k][i][j] * a[i] * b[j];
                }
            }
            acc
        }))
    }

    /// Lie bracket of two chart vector fields.
    pub fn bracket<F, G>(&self, z: &Point6, f: F, g: G) -> Result<Vector6<f64>>
    where
        F: Fn(&Point6) -> Result<Vector6<f64>>,
        G: Fn(&Point6) -> Result<Vector6<f64>>,
    {
        let fa = f(z)?;
        let gb = g(z)?;
        let dg = self.scheme.derivative(|s| Ok(g(&shift6(z, &fa, s))?.as_slice().to_vec()))?;
        let df = self.scheme.derivative(|s| Ok(f(&shift6(z, &gb, s))?.as_slice().to_vec()))?;
        Ok(Vector6::from_fn(|k, _| dg[k] - df[k]))
    }

    /// `∇_{∂_b} 𝒥_k` for each chart direction `b`.
    pub fn nabla_j(&self, z: &Point6, k: u8) -> Result<[Matrix6<f64>; 6]> {
        let j = self.j_matrix(z, k)?;
        let gam = self.gamma6(z)?;
        let mut out = [Matrix6::zeros(); 6];
        for (b, ob) in out.iter_mut().enumerate() {
            let dir = basis6(b);
            let d = Matrix6::from_column_slice(&self.scheme.derivative(|s| {
                Ok(self.j_matrix(&shift6(z, &dir, s), k)?.as_slice().to_vec())
            })?);
            let gb = Matrix6::from_fn(|m, n| gam[m][b][n]);
            *ob = d + gb * j - j * gb;
        }
        Ok(out)
    }

    /// `‖[𝒥_k, ∇*∇𝒥_k]‖` in the `h_t` operator norm, with
    /// `∇*∇ = -Σ h^{ab} ∇²_{ab}`.
    pub fn wood_defect(&self, z: &Point6, k: u8) -> Result<f64> {
        let h = self.metric6(z)?;
        let hinv = h.try_inverse().ok_or_else(|| GeomError::Numeric("singular h_t".into()))?;
        let gam = self.gamma6(z)?;
        let nj = self.nabla_j(z, k)?;
        let j = self.j_matrix(z, k)?;
        let mut lap = Matrix6::zeros();
        for a in 0..6 {
            let dir = basis6(a);
            let d = self.scheme.derivative(|s| {
                let n = self.nabla_j(&shift6(z, &dir, s), k)?;
                Ok(n.iter().flat_map(|m| m.as_slice().to_vec()).collect())
            })?;
            let ga = Matrix6::from_fn(|m, n| gam[m][a][n]);
            for b in 0..6 {
                let w = hinv[(a, b)];
                if w == 0.0 {
                    continue;
                }
                let db = Matrix6::from_column_slice(&d[b * 36..(b + 1) * 36]);
                let mut second = db + ga * nj[b] - nj[b] * ga;
                for c in 0..6 {
                    second -= nj[c] * gam[c][a][b];
                }
                lap -= second * w;
            }
        }
        let comm = j * lap - lap * j;
        h_operator_norm(&h, &comm)
    }
}

/// Operator norm of the endomorphism `m` with respect to the inner product
/// `h`, by power iteration on `LᵀML⁻ᵀ` with `h = LLᵀ`.
pub fn h_operator_norm(h: &Matrix6<f64>, m: &Matrix6<f64>) -> Result<f64> {
    let chol = h.cholesky().ok_or_else(|| GeomError::Numeric("h_t is not positive definite".into()))?;
    let l = chol.l();
    let linv_t = l
        .transpose()
        .try_inverse()
        .ok_or_else(|| GeomError::Numeric("singular Cholesky factor".into()))?;
    let a = l.transpose() * m * linv_t;
    let ata = a.transpose() * a;
    let mut v = Vector6::from_element(1.0).normalize();
    let mut lambda = 0.0;
    for _ in 0..64 {
        let w = ata * v;
        let n = w.norm();
        if n == 0.0 {
            return Ok(0.0);
        }
        lambda = n;
        v = w / n;
    }
    Ok(lambda.sqrt())
}

/// One residual line of the oracle comparison.
#[derive(Clone, Debug, Serialize)]
pub struct ResidualRow {
    pub identity: String,
    /// Max of `|numeric - closed| / (1 + |closed|)`.
    pub max_rel: f64,
    pub max_abs: f64,
    pub count: usize,
}

#[derive(Clone, Debug, Default, Serialize)]
pub struct ResidualReport {
    pub rows: Vec<ResidualRow>,
}

impl ResidualReport {
    fn record(&mut self, identity: &str, numeric: f64, closed: f64) {
        let abs = (numeric - closed).abs();
        let rel = abs / (1.0 + closed.abs());
        match self.rows.iter_mut().find(|r| r.identity == identity) {
            Some(r) => {
                r.max_rel = r.max_rel.max(rel);
                r.max_abs = r.max_abs.max(abs);
                r.count += 1;
            }
            None => self.rows.push(ResidualRow {
                identity: identity.to_string(),
                max_rel: rel,
                max_abs: abs,
                count: 1,
            }),
        }
    }

    pub fn merge(&mut self, other: &ResidualReport) {
        for r in &other.rows {
            match self.rows.iter_mut().find(|s| s.identity == r.identity) {
                Some(s) => {
                    s.max_rel = s.max_rel.max(r.max_rel);
                    s.max_abs = s.max_abs.max(r.max_abs);
                    s.count += r.count;
                }
                None => self.rows.push(r.clone()),
            }
        }
    }

    pub fn max_rel(&self) -> f64 {
        self.rows.iter().fold(0.0, |m, r| m.max(r.max_rel))
    }

    pub fn get(&self, identity: &str) -> Option<&ResidualRow> {
        self.rows.iter().find(|r| r.identity == identity)
    }
}

/// Identities compared by [`verify_closed_forms`].
pub const IDENTITIES: [&str; 13] = [
    "lc_vertical",
    "lc_dvh",
    "rz_hhhh",
    "rz_hhhv",
    "rz_hvhv",
    "rz_hhvv",
    "rz_hvvv",
    "rz_vvvv",
    "sec",
    "lie2",
    "rw",
    "d_omega",
    "tr_k",
];

/// Closed-form side of a sample: the twistor point in its adapted frame,
/// and the map from adapted-frame tangents to chart vectors.
pub struct Sample<'a> {
    pub chart: &'a ZChart,
    pub z: Point6,
    pub tp: TwistorPoint,
    pub pg: PointGeometry,
}

impl<'a> Sample<'a> {
    pub fn new(chart: &'a ZChart, x: &Point4, sigma: &Bivector) -> Result<Self> {
        let pg = PointGeometry::with_start(&chart.spec, x, &chart.start)?;
        let tp = TwistorPoint::new(&pg, sigma)?;
        let z = chart.point(x, sigma)?;
        Ok(Sample { chart, z, tp, pg })
    }

    /// Gram-Schmidt frame components of an adapted-frame tangent.
    pub fn to_frame(&self, a: &TwistorTangent) -> TwistorTangent {
        let q = self.tp.rotation;
        TwistorTangent::new(q * a.hor, a.ver.in_rotated_frame(&q.transpose()))
    }

    pub fn chart_vector(&self, a: &TwistorTangent) -> Result<Vector6<f64>> {
        self.chart.tangent_to_chart(&self.z, &self.to_frame(a))
    }

    /// Horizontal basis `E_i` (adapted) and vertical `s_2^-, s_3^-`.
    pub fn basis(&self) -> [TwistorTangent; 6] {
        [
            TwistorTangent::horizontal(unit(0)),
            TwistorTangent::horizontal(unit(1)),
            TwistorTangent::horizontal(unit(2)),
            TwistorTangent::horizontal(unit(3)),
            TwistorTangent::vertical(s_minus(1)),
            TwistorTangent::vertical(s_minus(2)),
        ]
    }
}

fn contract4(r: &Riemann6, a: &Vector6<f64>, b: &Vector6<f64>, c: &Vector6<f64>, d: &Vector6<f64>) -> f64 {
    let mut acc = 0.0;
    for i in 0..6 {
        if a[i] == 0.0 {
            continue;
        }
        for j in 0..6 {
            if b[j] == 0.0 {
                continue;
            }
            for k in 0..6 {
                for l in 0..6 {
                    acc += r[i][j][k][l] * a[i] * b[j] * c[k] * d[l];
                }
            }
        }
    }
    acc
}

/// Numeric `Tr_k(F)` from the chart: `Σ h^{λκ} h(R_Z((𝒥∘∇_λ𝒥)^∧)∂_κ, F)`.
pub fn numeric_tr_k(chart: &ZChart, z: &Point6, k: u8, r6: &Riemann6, f: &Vector6<f64>) -> Result<f64> {
    let h = chart.metric6(z)?;
    let hinv = h.try_inverse().ok_or_else(|| GeomError::Numeric("singular h_t".into()))?;
    let j = chart.j_matrix(z, k)?;
    let nj = chart.nabla_j(z, k)?;
    let mut acc = 0.0;
    for lam in 0..6 {
        let phi = j * nj[lam];
        // c^{αβ} = h^{αγ} φ^β_γ
        let c = hinv * phi.transpose();
        for kap in 0..6 {
            let w = hinv[(lam, kap)];
            if w == 0.0 {
                continue;
            }
            let mut inner = 0.0;
            for al in 0..6 {
                for be in 0..6 {
                    let cab = c[(al, be)];
                    if cab == 0.0 {
                        continue;
                    }
                    let rf: f64 = (0..6).map(|d| r6[al][be][kap][d] * f[d]).sum();
                    inner += cab * rf;
                }
            }
            acc += w * 0.5 * inner;
        }
    }
    Ok(acc)
}

/// Compares every closed form of the twistor module with brute-force chart
/// numerics at the given `(x, σ)` samples.
pub fn verify_closed_forms(chart: &ZChart, samples: &[(Point4, Bivector)]) -> Result<ResidualReport> {
    let mut rep = ResidualReport::default();
    let t = chart.t;
    for (x, sigma) in samples {
        let smp = Sample::new(chart, x, sigma)?;
        let tp = &smp.tp;
        let z = smp.z;
        let basis = smp.basis();
        let cv: Vec<Vector6<f64>> = basis.iter().map(|b| smp.chart_vector(b)).collect::<Result<_>>()?;
        let r6 = chart.riemann6(&z)?;
        let q = tp.rotation;
        let e_gs = chart.frame(x)?;
        let to_coords = |v: &Vector4<f64>| e_gs * (q * v);

        // curvature, kind by kind
        for kind in RzKind::ALL {
            let vs = kind.vertical_slots();
            let choices = |slot: usize| if vs[slot] { 4..6 } else { 0..4 };
            for a in choices(0) {
                for b in choices(1) {
                    for c in choices(2) {
                        for d in choices(3) {
                            let closed = tp.rz_component(kind, &basis[a], &basis[b], &basis[c], &basis[d], t)?;
                            let numeric = contract4(&r6, &cv[a], &cv[b], &cv[c], &cv[d]);
                            rep.record(&format!("rz_{}", kind.name()), numeric, closed);
                        }
                    }
                }
            }
        }

        // sectional formula on mixed tangents
        let mixes = [
            (TwistorTangent::new(Vector4::new(0.3, -0.5, 0.2, 0.7), s_minus(1) * 0.4 - s_minus(2) * 0.6),
             TwistorTangent::new(Vector4::new(-0.2, 0.1, 0.8, 0.3), s_minus(1) * -0.5 + s_minus(2) * 0.2)),
            (TwistorTangent::new(unit(0), s_minus(2)), TwistorTangent::new(unit(2), s_minus(1))),
            (TwistorTangent::horizontal(unit(1)), TwistorTangent::vertical(s_minus(1))),
        ];
        for (ea, fb) in &mixes {
            let closed = tp.sec_curvature(ea, fb, t)?;
            let (va, vb) = (smp.chart_vector(ea)?, smp.chart_vector(fb)?);
            rep.record("sec", contract4(&r6, &va, &vb, &va, &vb), closed);
        }

        // connection: coordinate-constant base fields X, Y lifted
        let frame_to_s = |b: &Bivector| b.in_rotated_frame(&q.transpose()).minus_coords();
        let h = chart.metric6(&z)?;
        for i in 0..4 {
            for j in 0..4 {
                let xc = to_coords(&unit(i));
                let yc = to_coords(&unit(j));
                let lift_y = |w: &Point6| chart.lift(w, &yc);
                let lift_x = |w: &Point6| chart.lift(w, &xc);
                let xa = chart.lift(&z, &xc)?;
                let num = chart.covariant_derivative(&z, &xa, lift_y)?;
                let (base, vert) = chart.decompose(&z, &num)?;
                let half = tp.d_hh_vertical(&unit(i), &unit(j));
                let want_v = frame_to_s(&half);
                let gam = &smp.pg.christoffel.gamma;
                let want_b = Vector4::from_fn(|kk, _| {
                    let mut acc = 0.0;
                    for a in 0..4 {
                        for b in 0..4 {
                            acc += gam[kk][a][b] * xc[a] * yc[b];
                        }
                    }
                    acc
                });
                for c in 0..3 {
                    rep.record("lc_vertical", vert[c] * t.sqrt(), want_v[c] * t.sqrt());
                }
                for c in 0..4 {
                    rep.record("lc_vertical", base[c], want_b[c]);
                }
                if i < j {
                    let br = chart.bracket(&z, lift_x, lift_y)?;
                    let (bb, bv) = chart.decompose(&z, &br)?;
                    let want = frame_to_s(&tp.vertical_curvature(&unit(i), &unit(j)));
                    for c in 0..3 {
                        rep.record("lie2", bv[c], want[c]);
                    }
                    for c in 0..4 {
                        rep.record("lie2", bb[c], 0.0);
                    }
                }
            }
            // D_V X^h along the fibre
            for l in 4..6 {
                let xc = to_coords(&unit(i));
                let lift_x = |w: &Point6| chart.lift(w, &xc);
                let num = chart.covariant_derivative(&z, &cv[l], lift_x)?;
                let want = tp.d_vh(&basis[l].ver, &unit(i), t);
                let want_c = chart.lift(&z, &to_coords(&want))?;
                let diff = num - want_c;
                let scale = (want_c.transpose() * h * want_c)[(0, 0)].sqrt();
                let err = (diff.transpose() * h * diff)[(0, 0)].sqrt();
                rep.record("lc_dvh", scale + err, scale);
            }
        }

        // R(X,Y) on skew endomorphisms against the base curvature of the chart
        let r_num = numeric_base_riemann(chart, x)?;
        let e_ad = e_gs * q;
        for (i, j) in [(0usize, 1usize), (0, 2), (1, 3), (2, 3)] {
            for (a, b) in [(s_minus(0), s_minus(1)), (s_minus(1), s_minus(2)), (crate::lambda2::s_plus(0), s_minus(2))] {
                let xv = unit(i);
                let yv = unit(j);
                // G(R(X,Y)a, b) with R(X,Y) from the differenced base curvature
                let rxy = Matrix4::from_fn(|c, d| {
                    // g(R(X,Y)E_d, E_c)
                    let mut acc = 0.0;
                    for p in 0..4 {
                        for qq in 0..4 {
                            for r in 0..4 {
                                for s in 0..4 {
                                    acc += r_num[p][qq][r][s] * e_ad[(p, i)] * e_ad[(qq, j)] * e_ad[(r, d)] * e_ad[(s, c)];
                                }
                            }
                        }
                    }
                    acc
                });
                let (ka, kb) = (crate::lambda2::k_endo(&a), crate::lambda2::k_endo(&b));
                let lhs = crate::lambda2::endo_inner(&(rxy * ka - ka * rxy), &kb);
                let comm = crate::lambda2::endo_to_bivector(&(ka * kb - kb * ka));
                let rhs = 0.5 * yv.dot(&(tp.r_endo(&comm) * xv));
                rep.record("rw", lhs, rhs);
            }
        }

        // D-Omega for both structures
        for k in [1u8, 2] {
            let jm = chart.j_matrix(&z, k)?;
            let nj = chart.nabla_j(&z, k)?;
            let _ = jm;
            for a in 0..6 {
                let dj = (0..6).fold(Matrix6::zeros(), |acc, m| acc + nj[m] * cv[a][m]);
                for b in 0..6 {
                    for c in 0..6 {
                        let numeric = (cv[c].transpose() * h * (dj * cv[b]))[(0, 0)];
                        let closed = tp.d_omega(k, t, &basis[a], &basis[b], &basis[c])?;
                        rep.record("d_omega", numeric, closed);
                    }
                }
            }
            for (n, f) in tp.ht_basis(t).iter().enumerate() {
                let _ = n;
                let fc = smp.chart_vector(f)?;
                let numeric = numeric_tr_k(chart, &z, k, &r6, &fc)?;
                let closed = crate::harmonicity::tr_k(tp, k, f, t)?;
                rep.record("tr_k", numeric, closed);
            }
        }
    }
    Ok(rep)
}

/// Base curvature `g(R(∂_a,∂_b)∂_c,∂_d)` from differenced metric values.
pub fn numeric_base_riemann(chart: &ZChart, x: &Point4) -> Result<[[[[f64; 4]; 4]; 4]; 4]> {
    let g = chart.metric(x)?;
    let gam = chart.base_gamma(x)?;
    let mut dgam = [[Matrix4::zeros(); 4]; 4];
    for (a, da) in dgam.iter_mut().enumerate() {
        let v = chart.scheme.derivative(|s| {
            let gg = chart.base_gamma(&shift4(x, a, s))?;
            Ok(gg.iter().flat_map(|m| m.as_slice().to_vec()).collect())
        })?;
        for m in 0..4 {
            da[m] = Matrix4::from_column_slice(&v[m * 16..(m + 1) * 16]);
        }
    }
    let mut out = [[[[0.0; 4]; 4]; 4]; 4];
    for a in 0..4 {
        for b in 0..4 {
            for c in 0..4 {
                for d in 0..4 {
                    let mut acc = 0.0;
                    for m in 0..4 {
                        let mut up = dgam[a][m][(b, c)] - dgam[b][m][(a, c)];
                        for p in 0..4 {
                            up += gam[m][(a, p)] * gam[p][(b, c)] - gam[m][(b, p)] * gam[p][(a, c)];
                        }
                        acc -= g[(d, m)] * up;
                    }
                    out[a][b][c][d] = acc;
                }
            }
        }
    }
    Ok(out)
}

/// Max of `|h_t(X^h, Y^h) - g(X, Y)|` and `|h_t(X^h, V)|` over coordinate
/// vectors and the fibre directions: the projection is a Riemannian
/// submersion with horizontal lifts orthogonal to the fibres.
pub fn submersion_defect(chart: &ZChart, z: &Point6) -> Result<f64> {
    let h = chart.metric6(z)?;
    let g = chart.metric(&[z[0], z[1], z[2], z[3]])?;
    let lifts: Vec<Vector6<f64>> = (0..4).map(|i| chart.lift(z, &unit(i))).collect::<Result<_>>()?;
    let mut worst: f64 = 0.0;
    for i in 0..4 {
        for j in 0..4 {
            worst = worst.max(((lifts[i].transpose() * h * lifts[j])[(0, 0)] - g[(i, j)]).abs());
        }
        for v in [basis6(4), basis6(5)] {
            worst = worst.max((lifts[i].transpose() * h * v)[(0, 0)].abs());
        }
    }
    Ok(worst)
}

/// Runs [`verify_closed_forms`] on the sample plan, one fibre-centred chart
/// per sample, keeping at most `max_samples` samples.
pub fn verify_plan(spec: &MetricSpec, t: f64, scheme: FdScheme, plan: &SamplePlan, max_samples: usize) -> Result<ResidualReport> {
    let samples: Vec<(Point4, Bivector)> = plan
        .points
        .iter()
        .zip(&plan.fibers)
        .flat_map(|(p, f)| f.iter().map(move |s| (*p, *s)))
        .take(max_samples)
        .collect();
    let reports = samples
        .par_iter()
        .map(|(p, s)| {
            let chart = ZChart::centered_on(spec, t, scheme, s)?;
            verify_closed_forms(&chart, &[(*p, *s)])
        })
        .collect::<Result<Vec<_>>>()?;
    let mut out = ResidualReport::default();
    for r in &reports {
        out.merge(r);
    }
    Ok(out)
}

/// Max relative residual at each step size, same sample and order.
pub fn richardson(spec: &MetricSpec, t: f64, x: &Point4, sigma: &Bivector, order: usize, steps: &[f64]) -> Result<Vec<f64>> {
    steps
        .iter()
        .map(|&h| {
            let chart = ZChart::centered_on(spec, t, FdScheme::new(h, order)?, sigma)?;
            Ok(verify_closed_forms(&chart, &[(*x, *sigma)])?.max_rel())
        })
        .collect()
}

/// True when each refinement gains at least `factor`, or the finer
/// residual is already below `floor`.
pub fn richardson_ok(residuals: &[f64], factor: f64, floor: f64) -> bool {
    residuals.windows(2).all(|w| w[1] < floor || w[0] >= factor * w[1])
}

/// Max relative residuals in the default chart and in a chart whose base
/// frame and fibre coordinates are both rotated by the seeded rotations.
pub fn chart_independence(spec: &MetricSpec, t: f64, scheme: FdScheme, x: &Point4, sigma: &Bivector, seed: u64) -> Result<(f64, f64)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let base = ZChart::centered_on(spec, t, scheme, sigma)?;
    let r0 = verify_closed_forms(&base, &[(*x, *sigma)])?.max_rel();
    let q3 = random_rotation(&mut rng);
    let fiber = q3 * base.fiber_rotation;
    let angle: f64 = rng.gen_range(0.2..1.2);
    let start = Matrix4::new(
        angle.cos(), -angle.sin(), 0.0, 0.0,
        angle.sin(), angle.cos(), 0.0, 0.0,
        0.0, 0.0, (0.5 * angle).cos(), -(0.5 * angle).sin(),
        0.0, 0.0, (0.5 * angle).sin(), (0.5 * angle).cos(),
    );
    let rotated = ZChart::with_frames(spec, t, scheme, start, fiber)?;
    // σ keeps its meaning as a 2-vector; re-express it in the rotated frame
    let g = spec.value_matrix(x);
    let e0 = gram_schmidt(&g, &Matrix4::identity(), spec.reverse_orientation)?;
    let e1 = gram_schmidt(&g, &start, spec.reverse_orientation)?;
    let change = e0.try_inverse().ok_or_else(|| GeomError::Numeric("singular frame".into()))? * e1;
    let sigma1 = sigma.in_rotated_frame(&change);
    let r1 = verify_closed_forms(&rotated, &[(*x, sigma1)])?.max_rel();
    Ok((r0, r1))
}

/// Wood defects `‖[𝒥_k, ∇*∇𝒥_k]‖` for `k = 1, 2`, maximised over the plan.
pub fn wood_defects(spec: &MetricSpec, t: f64, scheme: FdScheme, plan: &SamplePlan, max_samples: usize) -> Result<[f64; 2]> {
    let samples: Vec<(Point4, Bivector)> = plan
        .points
        .iter()
        .zip(&plan.fibers)
        .flat_map(|(p, f)| f.iter().map(move |s| (*p, *s)))
        .take(max_samples)
        .collect();
    let vals = samples
        .par_iter()
        .map(|(p, s)| {
            let chart = ZChart::centered_on(spec, t, scheme, s)?;
            let z = chart.point(p, s)?;
            Ok([chart.wood_defect(&z, 1)?, chart.wood_defect(&z, 2)?])
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(vals.iter().fold([0.0f64; 2], |m, v| [m[0].max(v[0]), m[1].max(v[1])]))
}
