//! Point clouds for the homogeneous attractor, the orbital set and their
//! union, written as CSV.
//!
//! ```bash
//! cargo run --release --example attractor_clouds -- /tmp/clouds
//! ```

use std::fs;
use std::path::PathBuf;

use gdfractal::attractor::{homogeneous_cloud, orbital_cloud};
use gdfractal::attractor::CloudRole;
use gdfractal::document::load_system;
use gdfractal::export::cloud_csv;
use gdfractal::VertexId;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let out = PathBuf::from(std::env::args().nth(1).unwrap_or_else(|| "clouds".into()));
    fs::create_dir_all(&out)?;
    let sys = load_system(concat!(env!("CARGO_MANIFEST_DIR"), "/systems/halves_point.system"))?;
    let v = VertexId(0);
    let eps = 1e-3;

    let hom = homogeneous_cloud(&sys, v, eps)?;
    let orb = orbital_cloud(&sys, v, eps, eps / 2.0)?;
    let inh = hom.clone().union(&orb, CloudRole::Inhomogeneous);
    for (name, cloud) in [("homogeneous", &hom), ("orbital", &orb), ("inhomogeneous", &inh)] {
        let (lo, hi) = cloud.bounds().unwrap();
        println!("{name:>14}: {:>7} points in [{:.4}, {:.4}]", cloud.len(), lo[0], hi[0]);
        fs::write(out.join(format!("{name}.csv")), cloud_csv(cloud))?;
    }
    println!("wrote {}", out.display());
    Ok(())
}
