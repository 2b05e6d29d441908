//! Registry of analytic 4-metrics with known classification.

use serde::Serialize;

use crate::error::{GeomError, Result};
use crate::harmonicity::Verdict;
use crate::jet::{MetricMatrix, MetricSpec, Point4, Scalar};

/// Margin (chart units) kept between sample stencils and a chart boundary.
pub const DOMAIN_MARGIN: f64 = 0.05;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum PatternKind {
    Einstein,
    /// Triple eigenvalue plus a simple one equal to zero.
    TripleSimpleZero,
    TripleSimple,
    Other,
}

/// Expected classification, re-derived by the engine in the acceptance run.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct Truth {
    pub einstein: bool,
    pub self_dual: bool,
    pub constant_s: bool,
    pub pattern: PatternKind,
    pub verdict1: Verdict,
    pub verdict2: Verdict,
}

#[derive(Clone, Copy, Debug)]
pub struct CatalogEntry {
    pub name: &'static str,
    pub spec: MetricSpec,
    pub truth: Truth,
    pub notes: &'static str,
}

fn diag<S: Scalar>(f: [S; 4]) -> MetricMatrix<S> {
    let z = S::cst(0.0);
    [
        [f[0], z, z, z],
        [z, f[1], z, z],
        [z, z, f[2], z],
        [z, z, z, f[3]],
    ]
}

fn sq_norm<S: Scalar>(x: &[S]) -> S {
    x.iter().fold(S::cst(0.0), |acc, &v| acc + v * v)
}

fn flat<S: Scalar>(_x: &[S; 4]) -> MetricMatrix<S> {
    diag([S::cst(1.0); 4])
}

fn round_sphere<S: Scalar>(x: &[S; 4]) -> MetricMatrix<S> {
    let f = (sq_norm(x) + 1.0).powi(2).recip() * 4.0;
    diag([f; 4])
}

fn hyperbolic_ball<S: Scalar>(x: &[S; 4]) -> MetricMatrix<S> {
    let f = (-sq_norm(x) + 1.0).powi(2).recip() * 4.0;
    diag([f; 4])
}

fn fubini_study<S: Scalar>(x: &[S; 4]) -> MetricMatrix<S> {
    let r2 = sq_norm(x);
    let jx = [-x[1], x[0], -x[3], x[2]];
    let inv = (r2 + 1.0).powi(2).recip();
    std::array::from_fn(|a| {
        std::array::from_fn(|b| {
            let mut v = -(x[a] * x[b]) - jx[a] * jx[b];
            if a == b {
                v = v + r2 + 1.0;
            }
            v * inv
        })
    })
}

fn line_times_sphere3<S: Scalar>(x: &[S; 4]) -> MetricMatrix<S> {
    let f = (sq_norm(&x[1..]) + 1.0).powi(2).recip() * 4.0;
    diag([S::cst(1.0), f, f, f])
}

fn sphere2_times_sphere2<S: Scalar>(x: &[S; 4]) -> MetricMatrix<S> {
    let f = (sq_norm(&x[..2]) + 1.0).powi(2).recip() * 4.0;
    let h = (sq_norm(&x[2..]) + 1.0).powi(2).recip() * 4.0;
    diag([f, f, h, h])
}

fn conformal_exp<S: Scalar>(x: &[S; 4]) -> MetricMatrix<S> {
    let f = (x[0] * 0.2).exp();
    diag([f; 4])
}

fn everywhere(_p: &Point4) -> bool {
    true
}

fn inside_ball(p: &Point4) -> bool {
    let r = 0.9 - DOMAIN_MARGIN;
    p.iter().map(|v| v * v).sum::<f64>() < r * r
}

fn inside_box(p: &Point4) -> bool {
    p.iter().all(|v| v.abs() < 1.0 - DOMAIN_MARGIN)
}

macro_rules! spec {
    ($name:expr, $f:ident, $dom:ident, $rev:expr, $radius:expr) => {
        MetricSpec {
            name: $name,
            values: $f::<f64>,
            jets: $f::<crate::jet::Jet3>,
            domain: $dom,
            reverse_orientation: $rev,
            sample_radius: $radius,
            sample_center: [0.0; 4],
        }
    };
}

const SELF_DUAL_EINSTEIN: Truth = Truth {
    einstein: true,
    self_dual: true,
    constant_s: true,
    pattern: PatternKind::Einstein,
    verdict1: Verdict::HarmonicMap,
    verdict2: Verdict::HarmonicMap,
};

pub fn catalog() -> Vec<CatalogEntry> {
    vec![
        CatalogEntry {
            name: "flat",
            spec: spec!("flat", flat, everywhere, false, 1.0),
            truth: SELF_DUAL_EINSTEIN,
            notes: "Euclidean metric on R^4",
        },
        CatalogEntry {
            name: "s4",
            spec: spec!("s4", round_sphere, everywhere, false, 1.0),
            truth: SELF_DUAL_EINSTEIN,
            notes: "unit 4-sphere, stereographic chart",
        },
        CatalogEntry {
            name: "h4",
            spec: spec!("h4", hyperbolic_ball, inside_ball, false, 0.5),
            truth: SELF_DUAL_EINSTEIN,
            notes: "Poincare ball restricted to |x| < 0.9",
        },
        CatalogEntry {
            name: "cp2",
            spec: spec!("cp2", fubini_study, everywhere, false, 1.0),
            truth: SELF_DUAL_EINSTEIN,
            notes: "Fubini-Study metric (holomorphic curvature 4) in an affine chart, complex orientation",
        },
        CatalogEntry {
            name: "r_x_s3",
            spec: spec!("r_x_s3", line_times_sphere3, everywhere, false, 1.0),
            truth: Truth {
                einstein: false,
                self_dual: true,
                constant_s: true,
                pattern: PatternKind::TripleSimpleZero,
                verdict1: Verdict::HarmonicMap,
                verdict2: Verdict::HarmonicMap,
            },
            notes: "line times the unit 3-sphere; first coordinate is the line",
        },
        CatalogEntry {
            name: "s2_x_s2",
            spec: spec!("s2_x_s2", sphere2_times_sphere2, everywhere, false, 1.0),
            truth: Truth {
                einstein: true,
                self_dual: false,
                constant_s: true,
                pattern: PatternKind::Einstein,
                verdict1: Verdict::Neither,
                verdict2: Verdict::Neither,
            },
            notes: "product of two unit 2-spheres, stereographic on each factor",
        },
        CatalogEntry {
            name: "conformal_flat_exp",
            spec: spec!("conformal_flat_exp", conformal_exp, inside_box, false, 0.5),
            truth: Truth {
                einstein: false,
                self_dual: true,
                constant_s: false,
                pattern: PatternKind::TripleSimpleZero,
                verdict1: Verdict::HarmonicSectionOnly,
                verdict2: Verdict::Neither,
            },
            notes: "exp(0.2 x1) times the Euclidean metric on the box |x_i| < 1; \
                    Ricci spectrum is triple plus a zero simple eigenvalue but not parallel",
        },
    ]
}

pub fn list_metrics() -> Vec<&'static str> {
    catalog().iter().map(|e| e.name).collect()
}

pub fn get_metric(name: &str) -> Result<CatalogEntry> {
    catalog()
        .into_iter()
        .find(|e| e.name == name)
        .ok_or_else(|| GeomError::UnknownMetric(name.to_string()))
}
