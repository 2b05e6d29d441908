//! Splitting the curvature operator into scalar, traceless Ricci and Weyl parts.

use twistor_core::catalog::catalog;
use twistor_core::decomp::{curv_op, decompose};
use twistor_core::riemann::{ricci, PointGeometry};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    println!("{:<20} {:>9} {:>9} {:>9} {:>9}  einstein self_dual", "metric", "s", "|B|", "|W+|", "|W-|");
    for entry in catalog() {
        let p = entry.spec.sample_center;
        let pg = PointGeometry::new(&entry.spec, &p)?;
        let ric = ricci(&pg.curvature);
        let d = decompose(&curv_op(&pg.curvature), &ric, 1e-7)?;
        println!(
            "{:<20} {:>9.4} {:>9.2e} {:>9.2e} {:>9.2e}  {:<8} {}",
            entry.name, d.s, d.norm_b, d.norm_w_plus, d.norm_w_minus, d.einstein, d.self_dual
        );
    }
    Ok(())
}
