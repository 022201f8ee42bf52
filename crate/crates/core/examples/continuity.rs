//! Graph dimension along parameterized families and their limit systems.
//!
//! ```bash
//! cargo run --release --example continuity
//! ```

use gdfractal::document::load_family;
use gdfractal::experiment::{continuity_experiment, ExperimentParams};

fn main() -> gdfractal::Result<()> {
    let dir = concat!(env!("CARGO_MANIFEST_DIR"), "/systems");
    let params = ExperimentParams::for_dim(1);
    for (name, ns) in [
        ("collapsing", vec![2, 3, 4, 6, 10]),
        ("shrinking_thirds", vec![4, 8, 16, 32, 64, 128]),
    ] {
        let family = load_family(format!("{dir}/{name}.family"))?;
        let report = continuity_experiment(&family, &ns, &params)?;
        println!("{name}");
        for row in &report.continuity {
            let dist = row.distance_to_limit.map_or("-".into(), |d| format!("{d:.4}"));
            println!("  n {:>4}  s_n* {:.4}  slope {:.4}  |s_n* - s*| {dist}", row.n, row.s_star, row.upper_slope);
        }
        if let Some(limit) = &report.limit {
            match limit.s_star {
                Some(s) => println!("  limit s* {s:.4}"),
                None => println!("  limit rejected: {} violation(s)", limit.violations.len()),
            }
        }
    }
    Ok(())
}
