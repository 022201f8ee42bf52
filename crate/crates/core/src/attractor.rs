//! Finite point clouds approximating homogeneous attractors, orbital sets and
//! inhomogeneous attractors, generated by deterministic path expansion.
//!
//! A cloud at resolution `ε` holds one image point per cross-cut path at `ε`
//! (the image of the terminal vertex's seed point), so every point of the
//! attractor lies within `ε·D` of the cloud, `D` bounding the attractor
//! diameters.

use std::collections::HashMap;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::{
    coords_value, dist, Affine, CondensationSet, CutWalk, Edge, GdSystem, Point, Primitive,
    RatioKind, VertexId,
};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum CloudRole {
    Homogeneous,
    Orbital,
    Inhomogeneous,
    Condensation,
}

#[derive(Clone, Debug)]
pub struct PointCloud {
    pub vertex: Option<VertexId>,
    pub dim: usize,
    pub resolution: f64,
    pub role: CloudRole,
    pub points: Vec<Point>,
}

impl PointCloud {
    pub fn new(
        vertex: Option<VertexId>,
        dim: usize,
        resolution: f64,
        role: CloudRole,
        mut points: Vec<Point>,
    ) -> Self {
        normalize(&mut points);
        PointCloud {
            vertex,
            dim,
            resolution,
            role,
            points,
        }
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Axis-aligned bounding box `(min, max)`.
    pub fn bounds(&self) -> Option<(Point, Point)> {
        let first = *self.points.first()?;
        Some(self.points.iter().fold((first, first), |(mut lo, mut hi), p| {
            for k in 0..3 {
                lo[k] = lo[k].min(p[k]);
                hi[k] = hi[k].max(p[k]);
            }
            (lo, hi)
        }))
    }

    /// Union with another cloud of the same dimension.
    pub fn union(mut self, other: &PointCloud, role: CloudRole) -> PointCloud {
        self.points.extend_from_slice(&other.points);
        normalize(&mut self.points);
        self.role = role;
        self
    }
}

/// Sorts lexicographically and removes exact duplicates, so a cloud is a set
/// with a canonical order.
fn normalize(points: &mut Vec<Point>) {
    points.sort_unstable_by(|a, b| {
        a[0].total_cmp(&b[0])
            .then(a[1].total_cmp(&b[1]))
            .then(a[2].total_cmp(&b[2]))
    });
    points.dedup_by(|a, b| a[0].to_bits() == b[0].to_bits() && a[1].to_bits() == b[1].to_bits() && a[2].to_bits() == b[2].to_bits());
}

fn lerp(a: &Point, b: &Point, t: f64) -> Point {
    [
        a[0] + t * (b[0] - a[0]),
        a[1] + t * (b[1] - a[1]),
        a[2] + t * (b[2] - a[2]),
    ]
}

fn sample_segment(a: &Point, b: &Point, spacing: f64, out: &mut Vec<Point>) {
    let steps = (dist(a, b) / spacing).ceil().max(1.0) as usize;
    for k in 0..=steps {
        out.push(if k == steps { *b } else { lerp(a, b, k as f64 / steps as f64) });
    }
}

pub(crate) fn sample_primitive(prim: &Primitive, dim: usize, spacing: f64, out: &mut Vec<Point>) {
    match prim {
        Primitive::Point(p) => out.push(coords_value(p)),
        Primitive::Segment(a, b) => sample_segment(&coords_value(a), &coords_value(b), spacing, out),
        Primitive::Polyline(pts) => {
            let pts: Vec<Point> = pts.iter().map(coords_value).collect();
            if pts.len() == 1 {
                out.push(pts[0]);
            }
            for w in pts.windows(2) {
                sample_segment(&w[0], &w[1], spacing, out);
            }
        }
        Primitive::Box { min, max } => {
            let (lo, hi) = (coords_value(min), coords_value(max));
            let mut axes: Vec<Vec<f64>> = Vec::with_capacity(3);
            for k in 0..3 {
                if k >= dim || hi[k] <= lo[k] {
                    axes.push(vec![lo[k]]);
                    continue;
                }
                let steps = ((hi[k] - lo[k]) / spacing).ceil().max(1.0) as usize;
                axes.push(
                    (0..=steps)
                        .map(|i| {
                            if i == steps {
                                hi[k]
                            } else {
                                lo[k] + (hi[k] - lo[k]) * i as f64 / steps as f64
                            }
                        })
                        .collect(),
                );
            }
            for &x in &axes[0] {
                for &y in &axes[1] {
                    for &z in &axes[2] {
                        out.push([x, y, z]);
                    }
                }
            }
        }
    }
}

fn sample_set(set: &CondensationSet, dim: usize, spacing: f64) -> Vec<Point> {
    let mut out = Vec::new();
    for prim in &set.primitives {
        sample_primitive(prim, dim, spacing, &mut out);
    }
    out
}

/// Samples every primitive so that each of its points is within `spacing` of
/// a sample. An empty set yields an empty cloud.
pub fn condensation_samples(set: &CondensationSet, dim: usize, spacing: f64) -> Result<PointCloud> {
    if !(spacing > 0.0) {
        return Err(Error::InvalidParameter(format!("spacing {spacing} must be positive")));
    }
    Ok(PointCloud::new(
        None,
        dim,
        spacing,
        CloudRole::Condensation,
        sample_set(set, dim, spacing),
    ))
}

fn check_epsilon(eps: f64) -> Result<()> {
    if eps > 0.0 && eps < 1.0 {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!("resolution {eps} must lie in (0, 1)")))
    }
}

fn step(a: &Affine, e: &Edge) -> Affine {
    a.then(&e.map)
}

/// One point per cross-cut path at `ε`: the path's map applied to the seed of
/// its terminal vertex.
pub fn homogeneous_cloud(sys: &GdSystem, vertex: VertexId, eps: f64) -> Result<PointCloud> {
    check_epsilon(eps)?;
    sys.ensure_valid()?;
    let seeds = sys.seed_points()?;
    let walk = CutWalk::new(sys, RatioKind::Upper, eps, step);
    let points = walk.run_split(vertex, &Affine::identity(), |path, _r, map, leaf, out| {
        if leaf {
            let end = sys.edge(*path.last().expect("nonempty")).to;
            out.push(map.apply(&seeds[end.0]));
        }
    });
    Ok(PointCloud::new(
        Some(vertex),
        sys.dim(),
        eps,
        CloudRole::Homogeneous,
        points,
    ))
}

/// Truncated orbital set: samples of `C_i` and images of `C_{t(e)}` (sampled
/// so image spacing is `spacing`) under every path with `ρ(e) ≥ ε` and every
/// cross-cut path at `ε`, plus one seed image per cross-cut path.
///
/// A pruned tail `f_e(F_{t(e)})` then lies within `ρ(e)·r < ε·r` of the cloud,
/// `r` bounding the distance from points of `F_{t(e)}` to its seed and
/// condensation set.
pub fn orbital_cloud(sys: &GdSystem, vertex: VertexId, eps: f64, spacing: f64) -> Result<PointCloud> {
    check_epsilon(eps)?;
    if !(spacing > 0.0) {
        return Err(Error::InvalidParameter(format!("spacing {spacing} must be positive")));
    }
    sys.ensure_valid()?;
    if sys.is_homogeneous() {
        return Err(Error::HomogeneousSystem);
    }
    let seeds = sys.seed_points()?;
    let dim = sys.dim();
    let walk = CutWalk::new(sys, RatioKind::Upper, eps, step);
    let mut points = walk.run_split(vertex, &Affine::identity(), |path, r, map, leaf, out| {
        let end = sys.edge(*path.last().expect("nonempty")).to;
        if leaf {
            out.push(map.apply(&seeds[end.0]));
        }
        let set = sys.condensation(end);
        if !set.is_empty() {
            out.extend(sample_set(set, dim, spacing / r).iter().map(|p| map.apply(p)));
        }
    });
    points.extend(sample_set(sys.condensation(vertex), dim, spacing));
    Ok(PointCloud::new(Some(vertex), dim, eps, CloudRole::Orbital, points))
}

/// Union of the homogeneous and orbital clouds; equals the homogeneous cloud
/// when every condensation set is empty.
pub fn inhomogeneous_cloud(
    sys: &GdSystem,
    vertex: VertexId,
    eps: f64,
    spacing: f64,
) -> Result<PointCloud> {
    let hom = homogeneous_cloud(sys, vertex, eps)?;
    if sys.is_homogeneous() {
        return Ok(PointCloud {
            role: CloudRole::Inhomogeneous,
            ..hom
        });
    }
    let orb = orbital_cloud(sys, vertex, eps, spacing)?;
    Ok(hom.union(&orb, CloudRole::Inhomogeneous))
}

/// Grid-bucketed nearest-neighbour index over a point set.
pub struct NearestIndex {
    dim: usize,
    cell: f64,
    buckets: HashMap<[i64; 3], Vec<Point>>,
    points: Vec<Point>,
    reach: i64,
}

impl NearestIndex {
    pub fn new(points: &[Point], dim: usize) -> Self {
        let (mut lo, mut hi) = ([f64::INFINITY; 3], [f64::NEG_INFINITY; 3]);
        for p in points {
            for k in 0..dim {
                lo[k] = lo[k].min(p[k]);
                hi[k] = hi[k].max(p[k]);
            }
        }
        let extent = (0..dim).map(|k| hi[k] - lo[k]).fold(0.0, f64::max);
        let n = points.len().max(1) as f64;
        let cell = if extent > 0.0 {
            (extent / n.powf(1.0 / dim as f64)).max(extent * 1e-9)
        } else {
            1.0
        };
        let mut buckets: HashMap<[i64; 3], Vec<Point>> = HashMap::new();
        for p in points {
            buckets.entry(Self::key(p, cell, dim)).or_default().push(*p);
        }
        let reach = (extent / cell).ceil() as i64 + 2;
        NearestIndex {
            dim,
            cell,
            buckets,
            points: points.to_vec(),
            reach,
        }
    }

    fn key(p: &Point, cell: f64, dim: usize) -> [i64; 3] {
        let mut k = [0i64; 3];
        for i in 0..dim {
            k[i] = (p[i] / cell).floor() as i64;
        }
        k
    }

    /// Distance from `q` to the nearest indexed point (`∞` if empty).
    pub fn distance(&self, q: &Point) -> f64 {
        if self.points.is_empty() {
            return f64::INFINITY;
        }
        let center = Self::key(q, self.cell, self.dim);
        let mut best = f64::INFINITY;
        let mut ring = 0i64;
        loop {
            if ring > self.reach + 1 {
                // query far outside the indexed region
                return self.points.iter().map(|p| dist(p, q)).fold(f64::INFINITY, f64::min);
            }
            let r = ring;
            let ry = if self.dim >= 2 { r } else { 0 };
            let rz = if self.dim >= 3 { r } else { 0 };
            for dx in -r..=r {
                for dy in -ry..=ry {
                    for dz in -rz..=rz {
                        if dx.abs().max(dy.abs()).max(dz.abs()) != r {
                            continue;
                        }
                        let key = [center[0] + dx, center[1] + dy, center[2] + dz];
                        if let Some(bucket) = self.buckets.get(&key) {
                            for p in bucket {
                                best = best.min(dist(p, q));
                            }
                        }
                    }
                }
            }
            if best <= ring as f64 * self.cell {
                return best;
            }
            ring += 1;
        }
    }
}

/// `sup_{a ∈ from} dist(a, to)`.
pub fn one_sided_hausdorff(from: &[Point], to: &[Point], dim: usize) -> f64 {
    use rayon::prelude::*;
    let index = NearestIndex::new(to, dim);
    from.par_iter().map(|p| index.distance(p)).reduce(|| 0.0, f64::max)
}
