//! Box-counting series and windowed slopes for a few reference sets.
//!
//! ```bash
//! cargo run --release --example box_dimension
//! ```

use gdfractal::attractor::inhomogeneous_cloud;
use gdfractal::boxdim::{analytic_series, cloud_series, estimate_dims, geometric_deltas};
use gdfractal::document::load_system;
use gdfractal::VertexId;

fn main() -> gdfractal::Result<()> {
    let dir = concat!(env!("CARGO_MANIFEST_DIR"), "/systems");

    let cantor = load_system(format!("{dir}/cantor.system"))?;
    let cloud = inhomogeneous_cloud(&cantor, VertexId(0), 3f64.powi(-10), 1e-6)?;
    let series = cloud_series(&cloud, &geometric_deltas(3.0, 2, 8))?;
    println!("Cantor, triadic meshes");
    for (d, n) in series.deltas.iter().zip(&series.counts) {
        println!("  delta {d:.3e}  N {n}");
    }
    println!("  {:?}", estimate_dims(&series, 4)?);

    let baker = load_system(format!("{dir}/baker.system"))?;
    let deltas = geometric_deltas(2.0, 3, 8);
    let cloud = inhomogeneous_cloud(&baker, VertexId(0), 1e-3, 5e-4)?;
    let est = estimate_dims(&cloud_series(&cloud, &deltas)?, 4)?;
    println!("Baker set from {} points: upper slope {:.4}", cloud.len(), est.slope_upper);

    let c = analytic_series(baker.condensation(VertexId(0)), 2, &deltas)?;
    println!("its condensation segment, exact counts {:?}", c.counts);
    Ok(())
}
