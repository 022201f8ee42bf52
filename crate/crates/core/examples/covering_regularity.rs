//! Covering regularity exponents of condensation sets.
//!
//! ```bash
//! cargo run --example covering_regularity
//! ```

use gdfractal::boxdim::{cre, geometric_deltas, pt_estimate};
use gdfractal::{CondensationSet, Primitive, Real};

fn x(v: Real) -> [Real; 3] {
    [v, Real::int(0), Real::int(0)]
}

fn main() -> gdfractal::Result<()> {
    let unit = CondensationSet::new(vec![Primitive::Segment(x(Real::int(0)), x(Real::int(1)))]);
    let point = CondensationSet::new(vec![Primitive::Point(x(Real::int(2)))]);
    let deltas = geometric_deltas(2.0, 3, 14);

    println!("   t   P_t,1/16([0,1])   P_t([0,1])   P_t({{2}})");
    for k in 0..=8 {
        let t = k as f64 * 0.25;
        println!(
            "{t:>5.2} {:>12.4} {:>14.4} {:>10.4}",
            cre(&unit, 1, t, 1.0 / 16.0, 64)?,
            pt_estimate(&unit, 1, t, &deltas, 64)?,
            pt_estimate(&point, 1, t, &deltas, 64)?
        );
    }
    Ok(())
}
