//! Finite-difference check of every closed form on the twistor space.

use twistor_core::catalog::get_metric;
use twistor_core::oracle::{richardson, verify_plan, FdScheme};
use twistor_core::sampling::sample_plan;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let spec = get_metric("h4")?.spec;
    let plan = sample_plan(&spec, 2, 2, 20240601)?;
    for t in [0.5, 2.0] {
        let report = verify_plan(&spec, t, FdScheme::default(), &plan, 4)?;
        println!("t = {t}");
        for row in &report.rows {
            println!("  {:<14} max rel {:.2e}  ({} samples)", row.identity, row.max_rel, row.count);
        }
    }
    let r = richardson(&spec, 1.0, &plan.points[0], &plan.fibers[0][0], 4, &[0.08, 0.04, 0.02])?;
    let r: Vec<String> = r.iter().map(|v| format!("{v:.2e}")).collect();
    println!("order-4 residuals as the step halves: {}", r.join(", "));
    Ok(())
}
