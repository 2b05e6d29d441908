//! Harmonicity verdicts for every catalog metric at a few fibre scales.

use twistor_core::catalog::catalog;
use twistor_core::harmonicity::{classify, Tolerances};
use twistor_core::sampling::sample_plan;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let tol = Tolerances::default();
    for entry in catalog() {
        let plan = sample_plan(&entry.spec, 8, 4, 20240601)?;
        for t in [0.5, 1.0, 2.0] {
            let c = classify(&entry.spec, t, &plan, &tol)?;
            println!("{:<20} t={t:<4} k=1 {:<24} k=2 {}", entry.name, c.global_verdict[0].name(), c.global_verdict[1].name());
        }
    }
    Ok(())
}
