//! Tension of a section of the twistor bundle: a constant section over
//! the product of spheres is a harmonic section.

use twistor_core::catalog::get_metric;
use twistor_core::harmonicity::{constant_section, section_defect};
use twistor_core::lambda2::s_minus;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let spec = get_metric("s2_x_s2")?.spec;
    let section = constant_section(s_minus(0));
    for t in [0.5, 1.0, 2.0] {
        let d = section_defect(&section, &spec, &spec.sample_center, t)?;
        println!("t = {t}: |vertical| = {:.2e}  |horizontal| = {:.2e}  total = {:.2e}", d.vertical.norm(), d.horizontal.norm(), d.norm(t));
    }
    Ok(())
}
