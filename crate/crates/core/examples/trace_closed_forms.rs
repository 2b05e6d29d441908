//! The curvature trace of each almost complex structure against its closed forms.

use twistor_core::catalog::get_metric;
use twistor_core::harmonicity::{tr_k, tr_k_horizontal_closed, tr_k_horizontal_exact, tr_k_vertical_closed};
use twistor_core::lambda2::Bivector;
use twistor_core::riemann::PointGeometry;
use twistor_core::twistor::TwistorPoint;
use nalgebra::Vector3;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let spec = get_metric("conformal_flat_exp")?.spec;
    let pg = PointGeometry::new(&spec, &spec.sample_center)?;
    let sigma = Bivector::from_minus(&Vector3::new(0.3, -0.5, 0.8).normalize());
    let tp = TwistorPoint::new(&pg, &sigma)?;
    for t in [0.5, 1.0, 2.0] {
        for k in [1u8, 2] {
            let basis = tp.ht_basis(t);
            for f in &basis[..4] {
                let direct = tr_k(&tp, k, f, t)?;
                let quoted = tr_k_horizontal_closed(&tp, k, &f.hor, t, 1e-6)?;
                let exact = tr_k_horizontal_exact(&tp, k, &f.hor, t, 1e-6)?;
                println!("t={t} k={k} horizontal: trace {direct:+.6e}  quoted {quoted:+.6e}  exact {exact:+.6e}");
            }
            for f in &basis[4..] {
                let direct = tr_k(&tp, k, f, t)?;
                let closed = tr_k_vertical_closed(&tp, k, &f.ver, t, 1e-6)?;
                println!("t={t} k={k} vertical:   trace {direct:+.6e}  closed {closed:+.6e}");
            }
        }
    }
    Ok(())
}
