//! Truncated third-order Taylor jets in four variables and the metric
//! description built on top of them.
//!
//! A [`Jet3`] carries a value together with every partial derivative up to
//! order three. Arithmetic propagates them exactly, so a metric written once
//! as a generic function over [`Scalar`] yields both plain `f64` values and
//! exact coordinate derivatives.

use std::ops::{Add, Div, Mul, Neg, Sub};

use nalgebra::Matrix4;

use crate::error::{GeomError, Result};

pub type Point4 = [f64; 4];

/// Number types a metric component function can be evaluated over.
pub trait Scalar:
    Copy
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
    + Add<f64, Output = Self>
    + Mul<f64, Output = Self>
{
    fn cst(v: f64) -> Self;
    fn value(&self) -> f64;
    fn exp(self) -> Self;
    fn ln(self) -> Self;
    fn sqrt(self) -> Self;
    fn powi(self, n: i32) -> Self;
    fn recip(self) -> Self;
}

impl Scalar for f64 {
    fn cst(v: f64) -> Self {
        v
    }
    fn value(&self) -> f64 {
        *self
    }
    fn exp(self) -> Self {
        f64::exp(self)
    }
    fn ln(self) -> Self {
        f64::ln(self)
    }
    fn sqrt(self) -> Self {
        f64::sqrt(self)
    }
    fn powi(self, n: i32) -> Self {
        f64::powi(self, n)
    }
    fn recip(self) -> Self {
        1.0 / self
    }
}

/// Value, gradient, Hessian and third derivatives of a function of four
/// variables.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Jet3 {
    pub value: f64,
    pub grad: [f64; 4],
    pub hess: [[f64; 4]; 4],
    pub third: [[[f64; 4]; 4]; 4],
}

impl Jet3 {
    pub const fn constant(value: f64) -> Self {
        Jet3 {
            value,
            grad: [0.0; 4],
            hess: [[0.0; 4]; 4],
            third: [[[0.0; 4]; 4]; 4],
        }
    }

    /// The coordinate function `x_index` evaluated at `value`.
    pub fn variable(value: f64, index: usize) -> Self {
        let mut j = Jet3::constant(value);
        j.grad[index] = 1.0;
        j
    }

    pub fn seed(p: &Point4) -> [Jet3; 4] {
        [
            Jet3::variable(p[0], 0),
            Jet3::variable(p[1], 1),
            Jet3::variable(p[2], 2),
            Jet3::variable(p[3], 3),
        ]
    }

    /// Partial derivative along `a`. The result is exact up to order two;
    /// its third-order block is zero and must not be relied on.
    pub fn partial(&self, a: usize) -> Jet3 {
        let mut out = Jet3::constant(self.grad[a]);
        for b in 0..4 {
            out.grad[b] = self.hess[a][b];
            for c in 0..4 {
                out.hess[b][c] = self.third[a][b][c];
            }
        }
        out
    }

    /// Applies a scalar function given its value and first three derivatives
    /// at `self.value` (Faa di Bruno, truncated at order three).
    fn chain(&self, d0: f64, d1: f64, d2: f64, d3: f64) -> Jet3 {
        let f = self;
        let mut out = Jet3::constant(d0);
        for i in 0..4 {
            out.grad[i] = d1 * f.grad[i];
            for j in 0..4 {
                out.hess[i][j] = d2 * f.grad[i] * f.grad[j] + d1 * f.hess[i][j];
                for k in 0..4 {
                    out.third[i][j][k] = d3 * f.grad[i] * f.grad[j] * f.grad[k]
                        + d2 * (f.hess[i][j] * f.grad[k]
                            + f.hess[i][k] * f.grad[j]
                            + f.hess[j][k] * f.grad[i])
                        + d1 * f.third[i][j][k];
                }
            }
        }
        out
    }

    fn zip(&self, other: &Jet3, op: impl Fn(f64, f64) -> f64) -> Jet3 {
        let mut out = Jet3::constant(op(self.value, other.value));
        for i in 0..4 {
            out.grad[i] = op(self.grad[i], other.grad[i]);
            for j in 0..4 {
                out.hess[i][j] = op(self.hess[i][j], other.hess[i][j]);
                for k in 0..4 {
                    out.third[i][j][k] = op(self.third[i][j][k], other.third[i][j][k]);
                }
            }
        }
        out
    }

    fn scale(&self, s: f64) -> Jet3 {
        self.zip(&Jet3::constant(0.0), |a, _| a * s)
    }
}

impl Default for Jet3 {
    fn default() -> Self {
        Jet3::constant(0.0)
    }
}

impl Add for Jet3 {
    type Output = Jet3;
    fn add(self, rhs: Jet3) -> Jet3 {
        self.zip(&rhs, |a, b| a + b)
    }
}

impl Sub for Jet3 {
    type Output = Jet3;
    fn sub(self, rhs: Jet3) -> Jet3 {
        self.zip(&rhs, |a, b| a - b)
    }
}

impl Neg for Jet3 {
    type Output = Jet3;
    fn neg(self) -> Jet3 {
        self.scale(-1.0)
    }
}

impl Add<f64> for Jet3 {
    type Output = Jet3;
    fn add(mut self, rhs: f64) -> Jet3 {
        self.value += rhs;
        self
    }
}

impl Mul<f64> for Jet3 {
    type Output = Jet3;
    fn mul(self, rhs: f64) -> Jet3 {
        self.scale(rhs)
    }
}

impl Mul for Jet3 {
    type Output = Jet3;
    fn mul(self, g: Jet3) -> Jet3 {
        let f = self;
        let mut out = Jet3::constant(f.value * g.value);
        for i in 0..4 {
            out.grad[i] = f.value * g.grad[i] + f.grad[i] * g.value;
            for j in 0..4 {
                out.hess[i][j] = f.value * g.hess[i][j]
                    + f.grad[i] * g.grad[j]
                    + f.grad[j] * g.grad[i]
                    + f.hess[i][j] * g.value;
                for k in 0..4 {
                    out.third[i][j][k] = f.value * g.third[i][j][k]
                        + f.grad[i] * g.hess[j][k]
                        + f.grad[j] * g.hess[i][k]
                        + f.grad[k] * g.hess[i][j]
                        + f.hess[i][j] * g.grad[k]
                        + f.hess[i][k] * g.grad[j]
                        + f.hess[j][k] * g.grad[i]
                        + f.third[i][j][k] * g.value;
                }
            }
        }
        out
    }
}

impl Div for Jet3 {
    type Output = Jet3;
    #[allow(clippy::suspicious_arithmetic_impl)]
    fn div(self, rhs: Jet3) -> Jet3 {
        self * rhs.recip()
    }
}

impl Scalar for Jet3 {
    fn cst(v: f64) -> Self {
        Jet3::constant(v)
    }
    fn value(&self) -> f64 {
        self.value
    }
    fn exp(self) -> Self {
        let e = self.value.exp();
        self.chain(e, e, e, e)
    }
    fn ln(self) -> Self {
        let x = self.value;
        self.chain(x.ln(), 1.0 / x, -1.0 / (x * x), 2.0 / (x * x * x))
    }
    fn sqrt(self) -> Self {
        let x = self.value;
        let r = x.sqrt();
        self.chain(r, 0.5 / r, -0.25 / (r * x), 0.375 / (r * x * x))
    }
    fn powi(self, n: i32) -> Self {
        let x = self.value;
        let nf = n as f64;
        self.chain(
            x.powi(n),
            nf * x.powi(n - 1),
            nf * (nf - 1.0) * x.powi(n - 2),
            nf * (nf - 1.0) * (nf - 2.0) * x.powi(n - 3),
        )
    }
    fn recip(self) -> Self {
        let x = self.value;
        let r = 1.0 / x;
        self.chain(r, -r * r, 2.0 * r * r * r, -6.0 * r * r * r * r)
    }
}

pub type MetricMatrix<S> = [[S; 4]; 4];

/// An analytic Riemannian 4-metric on a coordinate chart.
///
/// `values` and `jets` are two monomorphisations of the same generic
/// component function; the finite-difference oracle only ever sees `values`.
#[derive(Clone, Copy)]
pub struct MetricSpec {
    pub name: &'static str,
    pub values: fn(&Point4) -> MetricMatrix<f64>,
    pub jets: fn(&[Jet3; 4]) -> MetricMatrix<Jet3>,
    pub domain: fn(&Point4) -> bool,
    /// Reverses the coordinate orientation (frames flip their last vector).
    pub reverse_orientation: bool,
    /// Radius of the coordinate ball, centred at `sample_center`, from which
    /// sample plans draw base points.
    pub sample_radius: f64,
    pub sample_center: Point4,
}

impl std::fmt::Debug for MetricSpec {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("MetricSpec")
            .field("name", &self.name)
            .field("reverse_orientation", &self.reverse_orientation)
            .finish()
    }
}

impl MetricSpec {
    pub fn contains(&self, p: &Point4) -> bool {
        p.iter().all(|v| v.is_finite()) && (self.domain)(p)
    }

    pub fn check_domain(&self, p: &Point4) -> Result<()> {
        if self.contains(p) {
            Ok(())
        } else {
            Err(GeomError::Domain(*p, self.name.to_string()))
        }
    }

    pub fn value_matrix(&self, p: &Point4) -> Matrix4<f64> {
        let g = (self.values)(p);
        Matrix4::from_fn(|i, j| g[i][j])
    }
}

/// Metric components with all coordinate derivatives up to order three.
pub fn eval_metric_jet(spec: &MetricSpec, p: &Point4) -> Result<MetricMatrix<Jet3>> {
    spec.check_domain(p)?;
    let g = (spec.jets)(&Jet3::seed(p));
    for i in 0..4 {
        for j in 0..i {
            let d = (g[i][j].value - g[j][i].value).abs();
            if d > 1e-12 * (1.0 + g[i][j].value.abs()) {
                return Err(GeomError::Numeric(format!(
                    "metric of `{}` not symmetric at {p:?}",
                    spec.name
                )));
            }
        }
    }
    let values = Matrix4::from_fn(|i, j| g[i][j].value);
    let min_eig = values.symmetric_eigenvalues().min();
    if !(min_eig > 0.0) {
        return Err(GeomError::Numeric(format!(
            "metric of `{}` not positive definite at {p:?} (min eigenvalue {min_eig})",
            spec.name
        )));
    }
    Ok(g)
}

/// Inverse of a symmetric positive-definite jet matrix by Gauss-Jordan
/// elimination without pivoting.
pub fn invert_jet_matrix(m: &MetricMatrix<Jet3>) -> MetricMatrix<Jet3> {
    let mut a = *m;
    let mut inv = [[Jet3::constant(0.0); 4]; 4];
    for (i, row) in inv.iter_mut().enumerate() {
        row[i] = Jet3::constant(1.0);
    }
    for col in 0..4 {
        let pivot = a[col][col].recip();
        for k in 0..4 {
            a[col][k] = a[col][k] * pivot;
            inv[col][k] = inv[col][k] * pivot;
        }
        for row in 0..4 {
            if row == col {
                continue;
            }
            let factor = a[row][col];
            for k in 0..4 {
                a[row][k] = a[row][k] - factor * a[col][k];
                inv[row][k] = inv[row][k] - factor * inv[col][k];
            }
        }
    }
    inv
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample(x: [Jet3; 4]) -> Jet3 {
        // exp(x0 * x1) / (1 + x2^2) + sqrt(2 + x3)
        (x[0] * x[1]).exp() / (x[2].powi(2) + 1.0) + (x[3] + 2.0).sqrt()
    }

    fn sample_f64(x: [f64; 4]) -> f64 {
        (x[0] * x[1]).exp() / (1.0 + x[2] * x[2]) + (2.0 + x[3]).sqrt()
    }

    fn central(f: &dyn Fn([f64; 4]) -> f64, x: [f64; 4], i: usize, h: f64) -> f64 {
        let at = |s: f64| {
            let mut y = x;
            y[i] += s;
            f(y)
        };
        (-at(2.0 * h) + 8.0 * at(h) - 8.0 * at(-h) + at(-2.0 * h)) / (12.0 * h)
    }

    #[test]
    fn jet_derivatives_match_finite_differences() {
        let x = [0.3, -0.7, 0.4, 0.9];
        let j = sample(Jet3::seed(&x));
        assert!((j.value - sample_f64(x)).abs() < 1e-14);
        let h = 1e-3;
        for a in 0..4 {
            let fd = central(&sample_f64, x, a, h);
            assert!((j.grad[a] - fd).abs() < 1e-9, "grad {a}");
            for b in 0..4 {
                let fa = |y: [f64; 4]| central(&sample_f64, y, a, h);
                let fd2 = central(&fa, x, b, h);
                assert!((j.hess[a][b] - fd2).abs() < 1e-6, "hess {a}{b}");
                for c in 0..4 {
                    let fab = |y: [f64; 4]| central(&fa, y, b, 1e-2);
                    let fd3 = central(&fab, x, c, 1e-2);
                    assert!(
                        (j.third[a][b][c] - fd3).abs() < 1e-4,
                        "third {a}{b}{c}: {} vs {}",
                        j.third[a][b][c],
                        fd3
                    );
                }
            }
        }
    }

    #[test]
    fn derivative_blocks_are_symmetric() {
        let j = sample(Jet3::seed(&[0.1, 0.2, -0.3, 0.5]));
        for a in 0..4 {
            for b in 0..4 {
                assert_eq!(j.hess[a][b], j.hess[b][a]);
                for c in 0..4 {
                    let t = j.third[a][b][c];
                    assert!((t - j.third[b][a][c]).abs() < 1e-13);
                    assert!((t - j.third[a][c][b]).abs() < 1e-13);
                }
            }
        }
    }

    #[test]
    fn jet_inverse_is_exact_to_third_order() {
        let x = Jet3::seed(&[0.2, 0.1, -0.4, 0.3]);
        let one = Jet3::constant(1.0);
        let m = [
            [x[0].exp() + 2.0, x[1] * x[2], one * 0.1, x[3]],
            [x[1] * x[2], x[1].powi(2) + 3.0, x[0], one * 0.0],
            [one * 0.1, x[0], x[2].exp() + 1.0, x[3] * 0.5],
            [x[3], one * 0.0, x[3] * 0.5, x[0].powi(2) + 2.0],
        ];
        let inv = invert_jet_matrix(&m);
        for i in 0..4 {
            for j in 0..4 {
                let mut acc = Jet3::constant(0.0);
                for k in 0..4 {
                    acc = acc + m[i][k] * inv[k][j];
                }
                let target = if i == j { 1.0 } else { 0.0 };
                assert!((acc.value - target).abs() < 1e-13);
                assert!(acc.grad.iter().all(|v| v.abs() < 1e-12));
                assert!(acc.third.iter().flatten().flatten().all(|v| v.abs() < 1e-10));
            }
        }
    }

    #[test]
    fn partial_lowers_order() {
        let x = Jet3::seed(&[0.5, 0.0, 0.0, 0.0]);
        let f = x[0].powi(4);
        let d = f.partial(0);
        assert!((d.value - 4.0 * 0.125).abs() < 1e-14);
        assert!((d.grad[0] - 12.0 * 0.25).abs() < 1e-14);
        assert!((d.hess[0][0] - 24.0 * 0.5).abs() < 1e-14);
    }
}
