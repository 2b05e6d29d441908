//! Rough Laplacian of each almost complex structure, projected to the
//! tangent space of the twistor fibration.

use twistor_core::catalog::get_metric;
use twistor_core::oracle::{wood_defects, FdScheme};
use twistor_core::sampling::sample_plan;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    for name in ["flat", "s4", "conformal_flat_exp"] {
        let spec = get_metric(name)?.spec;
        let plan = sample_plan(&spec, 2, 2, 7)?;
        let [k1, k2] = wood_defects(&spec, 1.0, FdScheme::default(), &plan, 4)?;
        println!("{name:<20} k=1 {k1:.2e}  k=2 {k2:.2e}");
    }
    Ok(())
}
