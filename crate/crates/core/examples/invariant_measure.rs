//! Exact sampling from the invariant measure of a probability scheme and a
//! check of its self-similarity on random boxes.
//!
//! ```bash
//! cargo run --release --example invariant_measure -- 100000 7
//! ```

use gdfractal::document::load_system;
use gdfractal::measure::{invariance_residual, random_probes, sample_mean, sample_measure};
use gdfractal::VertexId;

fn main() -> gdfractal::Result<()> {
    let mut args = std::env::args().skip(1);
    let n: usize = args.next().and_then(|a| a.parse().ok()).unwrap_or(100_000);
    let seed: u64 = args.next().and_then(|a| a.parse().ok()).unwrap_or(7);

    let sys = load_system(concat!(env!("CARGO_MANIFEST_DIR"), "/systems/halves_point.system"))?;
    let scheme = sys.scheme().expect("document has probabilities").clone();
    let sample = sample_measure(&sys, &scheme, VertexId(0), n, seed)?;
    println!("{n} samples, mean {:.5}", sample_mean(&sample)[0]);

    let at_two = sample.points.iter().filter(|p| p[0] == 2.0).count();
    println!("mass at the condensation point {:.4}", at_two as f64 / n as f64);

    let probes = random_probes(1, -0.5, 2.5, 200, seed);
    let r = invariance_residual(std::slice::from_ref(&sample), &sys, &scheme, &probes)?;
    println!("invariance residual over 200 boxes {r:.4}");
    Ok(())
}
