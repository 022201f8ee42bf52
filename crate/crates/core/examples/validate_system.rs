//! Load a system document and list what validation finds.
//!
//! ```bash
//! cargo run --example validate_system -- crates/core/systems/baker.system
//! ```

use gdfractal::document::SystemDocument;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let path = std::env::args()
        .nth(1)
        .unwrap_or_else(|| concat!(env!("CARGO_MANIFEST_DIR"), "/systems/two_vertex_five_edge.system").into());
    let doc = SystemDocument::from_json(&std::fs::read_to_string(&path)?)?;
    let sys = doc.build_unchecked(&Default::default())?;
    println!("{path}: {} vertices, {} edges, d = {}", sys.vertex_count(), sys.edges().len(), sys.dim());
    for e in sys.edges() {
        println!(
            "  {:>4} {} -> {}  ratio {}",
            e.id,
            sys.vertex_name(e.from),
            sys.vertex_name(e.to),
            e.map.scale()
        );
    }
    let report = sys.validate();
    if report.is_valid() {
        println!("valid, fingerprint {}", sys.fingerprint());
    } else {
        for v in &report.violations {
            println!("  violation: {v}");
        }
    }

    // a non-contraction is caught at validation, not at parse time
    let bad = r#"{"ambient_dim": 1, "vertices": ["a"],
        "edges": [{"id": "e", "from": "a", "to": "a", "scale": 1}], "condensation": {}}"#;
    let err = SystemDocument::from_json(bad)?.build(&Default::default()).unwrap_err();
    println!("scale 1: {err}");
    Ok(())
}
