//! Reproducible sample plans: Halton base points with a seeded shift and
//! tetrahedral fibre points.

use nalgebra::{Rotation3, Unit, Vector3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{GeomError, Result};
use crate::jet::{MetricSpec, Point4};
use crate::lambda2::Bivector;

const PRIMES: [u32; 4] = [2, 3, 5, 7];

/// Radical inverse of `index` in `base`.
pub fn halton(mut index: u64, base: u32) -> f64 {
    let b = base as u64;
    let mut f = 1.0;
    let mut r = 0.0;
    while index > 0 {
        f /= base as f64;
        r += f * (index % b) as f64;
        index /= b;
    }
    r
}

#[derive(Clone, Debug)]
pub struct SamplePlan {
    pub points: Vec<Point4>,
    /// Unit anti-self-dual 2-vectors per base point, frame components.
    pub fibers: Vec<Vec<Bivector>>,
}

impl SamplePlan {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn single(p: Point4, fiber: Vec<Bivector>) -> Self {
        SamplePlan { points: vec![p], fibers: vec![fiber] }
    }
}

/// Vertices of a regular tetrahedron on the unit sphere.
pub fn tetrahedron() -> [Vector3<f64>; 4] {
    let c = 1.0 / 3f64.sqrt();
    [
        Vector3::new(c, c, c),
        Vector3::new(c, -c, -c),
        Vector3::new(-c, c, -c),
        Vector3::new(-c, -c, c),
    ]
}

pub fn random_rotation(rng: &mut ChaCha8Rng) -> Rotation3<f64> {
    loop {
        let axis = Vector3::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
        if axis.norm() > 1e-3 && axis.norm() <= 1.0 {
            let angle = rng.gen_range(0.0..std::f64::consts::TAU);
            return Rotation3::from_axis_angle(&Unit::new_normalize(axis), angle);
        }
    }
}

pub fn random_unit3(rng: &mut ChaCha8Rng) -> Vector3<f64> {
    loop {
        let v = Vector3::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
        let n = v.norm();
        if n > 1e-3 && n <= 1.0 {
            return v / n;
        }
    }
}

/// Fibre points: a randomly rotated tetrahedron, extended by random unit
/// vectors when more than four are asked for.
pub fn fiber_points(n: usize, rng: &mut ChaCha8Rng) -> Vec<Bivector> {
    let rot = random_rotation(rng);
    let mut out: Vec<Bivector> = tetrahedron()
        .iter()
        .take(n)
        .map(|v| Bivector::from_minus(&(rot * v)))
        .collect();
    while out.len() < n {
        out.push(Bivector::from_minus(&random_unit3(rng)));
    }
    out
}

/// `n_points` base points in the ball of radius `sample_radius` around the
/// sample centre, from the Halton sequence shifted modulo one by a seeded
/// offset.
pub fn sample_plan(spec: &MetricSpec, n_points: usize, n_fiber: usize, seed: u64) -> Result<SamplePlan> {
    if n_points == 0 || n_fiber == 0 {
        return Err(GeomError::BadParameter("sample counts must be at least 1".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let shift: [f64; 4] = std::array::from_fn(|_| rng.gen_range(0.0..1.0));
    let mut points = Vec::with_capacity(n_points);
    let mut fibers = Vec::with_capacity(n_points);
    let mut index = 1u64;
    while points.len() < n_points {
        let u: [f64; 4] = std::array::from_fn(|d| (halton(index, PRIMES[d]) + shift[d]).fract());
        index += 1;
        if index > 100_000 {
            return Err(GeomError::Numeric("sampling region is empty".into()));
        }
        let p: Point4 = std::array::from_fn(|d| spec.sample_center[d] + spec.sample_radius * (u[d] - 0.5));
        let r2: f64 = (0..4).map(|d| (p[d] - spec.sample_center[d]).powi(2)).sum();
        if r2 > spec.sample_radius * spec.sample_radius || !spec.contains(&p) {
            continue;
        }
        points.push(p);
        fibers.push(fiber_points(n_fiber, &mut rng));
    }
    Ok(SamplePlan { points, fibers })
}
