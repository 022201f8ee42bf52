//! Lower box-dimension bound from covering regularity exponents.
//!
//! ```bash
//! cargo run --release --example lower_bound
//! ```

use gdfractal::document::load_system;
use gdfractal::experiment::{lower_bound_experiment, ExperimentParams};

fn main() -> gdfractal::Result<()> {
    let sys = load_system(concat!(env!("CARGO_MANIFEST_DIR"), "/systems/cantor_interval.system"))?;
    let t: Vec<f64> = (1..=10).map(|k| k as f64 * 0.1).collect();
    let report = lower_bound_experiment(&sys, &t, &ExperimentParams::for_dim(1))?;
    let lower = report.vertices[0].inhomogeneous.estimate.slope_lower;
    println!("s' = {:.4}, empirical lower slope {lower:.4}", report.s_prime);
    println!("   t    P_t   bound");
    for row in &report.cre_table {
        println!("{:>5.2} {:>6.3} {:>7.4}", row.t, row.p_t, row.bound);
    }
    Ok(())
}
