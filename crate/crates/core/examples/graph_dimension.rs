//! Ratio matrix, spectral radius and the graph dimensions s* and s'.
//!
//! ```bash
//! cargo run --example graph_dimension
//! ```

use gdfractal::document::load_system;
use gdfractal::spectral::{build_ratio_matrix, graph_dimension, perron_vector, phi};
use gdfractal::RatioKind;

fn main() -> gdfractal::Result<()> {
    let sys = load_system(concat!(env!("CARGO_MANIFEST_DIR"), "/systems/two_vertex_five_edge.system"))?;

    let m = build_ratio_matrix(&sys, 1.0, RatioKind::Upper)?;
    println!("M(1):");
    for i in 0..sys.vertex_count() {
        let row: Vec<String> = (0..sys.vertex_count()).map(|j| m.entry(i, j).to_string()).collect();
        println!("  [{}]", row.join(", "));
    }
    for s in [0.0, 0.25, 0.5, 0.75, 1.0] {
        println!("Phi({s:.2}) = {:.6}", phi(&sys, s, RatioKind::Upper)?);
    }

    let upper = graph_dimension(&sys, RatioKind::Upper)?;
    let lower = graph_dimension(&sys, RatioKind::Lower)?;
    println!(
        "s* = {:.10} (bracket {:.3}..{:.3}, {} bisection steps), s' = {:.10}",
        upper.value, upper.bracket.0, upper.bracket.1, upper.iterations, lower.value
    );
    let u = perron_vector(&build_ratio_matrix(&sys, upper.value, RatioKind::Upper)?)?;
    println!("Perron vector at s*: {:?}, residual {:.1e}", u.vector, u.residual);
    Ok(())
}
