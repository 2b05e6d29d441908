//! Christoffel symbols, Riemann tensor and Ricci data of a catalog metric.

use twistor_core::catalog::get_metric;
use twistor_core::riemann::{christoffel, ricci, riemann, symmetry_defect, PointGeometry};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let spec = get_metric("s4")?.spec;
    let p = [1.0, 0.0, 0.0, 0.0];
    let gamma = christoffel(&spec, &p)?;
    println!("s4 at {p:?}: g_11 = {:.4}", spec.value_matrix(&p)[(0, 0)]);
    println!("Gamma^1_11 = {:.4}", gamma.gamma[0][0][0]);
    let r = riemann(&spec, &p)?;
    println!("Riemann symmetry defect = {:.2e}", symmetry_defect(&r.r));
    let pg = PointGeometry::new(&spec, &p)?;
    let ric = ricci(&pg.curvature);
    println!("scalar curvature = {:.6}", ric.s);
    println!("Ricci eigenvalues = {:?}", ric.eigenvalues);
    Ok(())
}
