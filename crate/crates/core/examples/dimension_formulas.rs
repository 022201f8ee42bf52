//! Upper bound, sandwich and equality verdicts for a system document.
//!
//! ```bash
//! cargo run --release --example dimension_formulas -- crates/core/systems/baker.system
//! ```

use gdfractal::document::load_system;
use gdfractal::experiment::{verify_dimension_formulas, ExperimentParams};

fn main() -> gdfractal::Result<()> {
    let path = std::env::args()
        .nth(1)
        .unwrap_or_else(|| concat!(env!("CARGO_MANIFEST_DIR"), "/systems/cantor_interval.system").into());
    let sys = load_system(&path)?;
    let report = verify_dimension_formulas(&sys, &ExperimentParams::for_dim(sys.dim()))?;
    println!("s* = {:.4}, s' = {:.4}", report.s_star, report.s_prime);
    for v in &report.vertices {
        let row = |name: &str, e: Option<&gdfractal::experiment::SetEstimate>| {
            if let Some(e) = e {
                println!(
                    "  {:<14} upper {:.4} lower {:.4}",
                    name, e.estimate.slope_upper, e.estimate.slope_lower
                );
            }
        };
        println!("vertex {}", v.vertex);
        row("homogeneous", Some(&v.homogeneous));
        row("orbital", v.orbital.as_ref());
        row("inhomogeneous", Some(&v.inhomogeneous));
        row("condensation", v.condensation.as_ref());
    }
    for v in &report.verdicts {
        println!("{:<20} {:?} {:.4} vs {:.4}", v.name, v.status, v.lhs, v.rhs);
    }
    Ok(())
}
