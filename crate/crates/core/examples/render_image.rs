//! Greyscale PGM density images of attractor clouds.
//!
//! ```bash
//! cargo run --release --example render_image -- /tmp
//! ```

use std::path::PathBuf;

use gdfractal::attractor::inhomogeneous_cloud;
use gdfractal::document::load_system;
use gdfractal::export::render_pgm;
use gdfractal::VertexId;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let out = PathBuf::from(std::env::args().nth(1).unwrap_or_else(|| ".".into()));
    let dir = concat!(env!("CARGO_MANIFEST_DIR"), "/systems");
    for (name, eps, pixels) in [("cantor", 1e-4, 729), ("baker", 2e-3, 512)] {
        let sys = load_system(format!("{dir}/{name}.system"))?;
        let cloud = inhomogeneous_cloud(&sys, VertexId(0), eps, eps / 2.0)?;
        let path = out.join(format!("{name}.pgm"));
        std::fs::write(&path, render_pgm(&cloud, pixels)?)?;
        println!("{} ({} points)", path.display(), cloud.len());
    }
    Ok(())
}
