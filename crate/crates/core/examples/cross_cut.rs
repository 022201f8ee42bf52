//! Cross-cuts of the path space and the cardinality bound they obey.
//!
//! ```bash
//! cargo run --example cross_cut
//! ```

use gdfractal::document::load_system;
use gdfractal::spectral::cross_cut_bound_check;
use gdfractal::{cross_cut, RatioKind};

fn main() -> gdfractal::Result<()> {
    let sys = load_system(concat!(env!("CARGO_MANIFEST_DIR"), "/systems/two_vertex_five_edge.system"))?;
    let v1 = sys.vertex_by_name("v1").unwrap();

    let cut = cross_cut(&sys, v1, 0.2, RatioKind::Upper)?;
    println!("cross-cut at delta = 0.2 from v1:");
    for p in &cut {
        let ids: Vec<&str> = p.edges.iter().map(|&e| sys.edge(e).id.as_str()).collect();
        println!("  {:<12} ratio {:.5}", ids.join(" "), p.ratio);
    }

    for delta in [0.2, 0.05, 0.01, 0.001] {
        let b = cross_cut_bound_check(&sys, v1, delta)?;
        println!(
            "delta {delta:<6} |T| = {:<6} bound {:>10.1}  holds: {}",
            b.cardinality, b.bound, b.holds
        );
    }
    Ok(())
}
