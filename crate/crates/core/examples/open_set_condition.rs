//! Open set conditions with witnesses.
//!
//! ```bash
//! cargo run --example open_set_condition
//! ```

use gdfractal::attractor::inhomogeneous_cloud;
use gdfractal::document::load_system;
use gdfractal::separation::{check_gdiosc, check_strong};

fn main() -> gdfractal::Result<()> {
    let dir = concat!(env!("CARGO_MANIFEST_DIR"), "/systems");
    for name in ["cantor_interval", "halves_point", "baker"] {
        let sys = load_system(format!("{dir}/{name}.system"))?;
        let regions = sys.regions().unwrap();
        let report = check_gdiosc(&sys, regions)?;
        println!("{name}: holds {}", report.holds());
        for (label, c) in [
            ("i", &report.condition_i),
            ("ii", &report.condition_ii),
            ("iii", &report.condition_iii),
        ] {
            match &c.witness {
                Some(w) => println!("  ({label}) fails: {}", serde_json::to_string(w).unwrap()),
                None => println!("  ({label}) holds"),
            }
        }
    }

    let sys = load_system(format!("{dir}/cantor_interval.system"))?;
    let clouds: Vec<_> = sys
        .vertices()
        .map(|v| inhomogeneous_cloud(&sys, v, 1e-4, 5e-5))
        .collect::<Result<_, _>>()?;
    let strong = check_strong(&sys, sys.regions().unwrap(), &clouds)?;
    println!("cantor_interval strong condition: {}", strong.strong_holds());
    Ok(())
}
