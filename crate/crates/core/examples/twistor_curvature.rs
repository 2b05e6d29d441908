//! Closed-form curvature of the twistor space at one point, by block type.

use twistor_core::catalog::get_metric;
use twistor_core::lambda2::s_minus;
use twistor_core::riemann::PointGeometry;
use twistor_core::twistor::{unit, TwistorPoint};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let spec = get_metric("s4")?.spec;
    let pg = PointGeometry::new(&spec, &[0.0; 4])?;
    let tp = TwistorPoint::new(&pg, &s_minus(0))?;
    let (e1, e2) = (unit(0), unit(1));
    for t in [0.5, 1.0, 2.0] {
        let [v, w] = tp.vertical_basis(t);
        println!(
            "t = {t}: R(X,Y,X,Y) = {:.4}  R(X,U,X,U) = {:.4}  R(U,V,U,V) = {:.4}",
            tp.rz_hhhh(&e1, &e2, &e1, &e2, t),
            tp.rz_hvhv(&e1, &v, &e1, &v, t),
            tp.rz_vvvv(&v, &w, &v, &w, t),
        );
    }
    Ok(())
}
