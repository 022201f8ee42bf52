//! Open set conditions for inhomogeneous graph-directed systems with open
//! intervals (d = 1) or open convex polygons (d = 2) as candidate sets.
//!
//! Comparisons are exact when every coordinate is rational and fall back to a
//! `1e-12` slack otherwise. Two images are separated when their interiors are
//! disjoint; sharing boundary is allowed. Disjointness is only checked between
//! edges with the same initial vertex, since images of edges at different
//! vertices live in different copies of the space.

use std::cmp::Ordering;

use rayon::prelude::*;
use serde::Serialize;

use crate::attractor::PointCloud;
use crate::error::{Error, Result};
use crate::model::{GdSystem, Point, SimilarityMap};
use crate::numeric::{Real, INEXACT_SLACK};

#[derive(Clone, Debug, PartialEq)]
pub enum Region {
    /// Open interval `(a, b)`.
    Interval(Real, Real),
    /// Interior of a convex polygon, vertices counterclockwise.
    Polygon(Vec<[Real; 2]>),
}

impl Region {
    pub fn dim(&self) -> usize {
        match self {
            Region::Interval(..) => 1,
            Region::Polygon(_) => 2,
        }
    }

    /// Checks nonempty interior, counterclockwise order and convexity.
    pub fn check(&self) -> Result<()> {
        match self {
            Region::Interval(a, b) => {
                if lt(a, b) {
                    Ok(())
                } else {
                    Err(Error::InvalidParameter(format!("interval ({a}, {b}) is empty")))
                }
            }
            Region::Polygon(v) => {
                if v.len() < 3 {
                    return Err(Error::InvalidParameter("polygon needs at least 3 vertices".into()));
                }
                for k in 0..v.len() {
                    let (a, b, c) = (v[k], v[(k + 1) % v.len()], v[(k + 2) % v.len()]);
                    if !gt(&cross(&a, &b, &c), &Real::int(0)) {
                        return Err(Error::InvalidParameter(
                            "polygon must be strictly convex and counterclockwise".into(),
                        ));
                    }
                }
                Ok(())
            }
        }
    }

    /// Whether `p` lies in the closure.
    pub fn closure_contains(&self, p: &[Real; 3]) -> bool {
        match self {
            Region::Interval(a, b) => le(a, &p[0]) && le(&p[0], b),
            Region::Polygon(v) => {
                let q = [p[0], p[1]];
                (0..v.len()).all(|k| ge(&cross(&v[k], &v[(k + 1) % v.len()], &q), &Real::int(0)))
            }
        }
    }

    /// Euclidean distance from an interior point to the boundary, negative
    /// (minus the distance to the region) outside.
    pub fn signed_depth(&self, p: &Point) -> f64 {
        match self {
            Region::Interval(a, b) => (p[0] - a.value()).min(b.value() - p[0]),
            Region::Polygon(v) => {
                let depth = (0..v.len())
                    .map(|k| {
                        let (a, b) = (vf(&v[k]), vf(&v[(k + 1) % v.len()]));
                        let (ex, ey) = (b[0] - a[0], b[1] - a[1]);
                        let len = (ex * ex + ey * ey).sqrt();
                        (ex * (p[1] - a[1]) - ey * (p[0] - a[0])) / len
                    })
                    .fold(f64::INFINITY, f64::min);
                if depth >= 0.0 {
                    depth
                } else {
                    -outside_distance(v, p)
                }
            }
        }
    }

    fn corners_f64(&self) -> Vec<[f64; 2]> {
        match self {
            Region::Interval(a, b) => vec![[a.value(), 0.0], [b.value(), 0.0]],
            Region::Polygon(v) => v.iter().map(vf).collect(),
        }
    }
}

fn vf(p: &[Real; 2]) -> [f64; 2] {
    [p[0].value(), p[1].value()]
}

fn outside_distance(v: &[[Real; 2]], p: &Point) -> f64 {
    (0..v.len())
        .map(|k| {
            let (a, b) = (vf(&v[k]), vf(&v[(k + 1) % v.len()]));
            let (dx, dy) = (b[0] - a[0], b[1] - a[1]);
            let t = (((p[0] - a[0]) * dx + (p[1] - a[1]) * dy) / (dx * dx + dy * dy)).clamp(0.0, 1.0);
            let (qx, qy) = (a[0] + t * dx, a[1] + t * dy);
            ((p[0] - qx).powi(2) + (p[1] - qy).powi(2)).sqrt()
        })
        .fold(f64::INFINITY, f64::min)
}

fn cmp(a: &Real, b: &Real) -> Ordering {
    a.compare(b, INEXACT_SLACK).unwrap_or(Ordering::Equal)
}

fn lt(a: &Real, b: &Real) -> bool {
    cmp(a, b) == Ordering::Less
}

fn gt(a: &Real, b: &Real) -> bool {
    cmp(a, b) == Ordering::Greater
}

fn le(a: &Real, b: &Real) -> bool {
    cmp(a, b) != Ordering::Greater
}

fn ge(a: &Real, b: &Real) -> bool {
    cmp(a, b) != Ordering::Less
}

/// `(b − a) × (c − a)`, positive when `c` is left of `a → b`.
fn cross(a: &[Real; 2], b: &[Real; 2], c: &[Real; 2]) -> Real {
    (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0])
}

/// Exact image of a region under a similarity.
pub fn image_region(map: &SimilarityMap, region: &Region) -> Result<Region> {
    if !map.is_similarity() {
        return Err(Error::NotSimilarity(format!(
            "scale {} with lower scale {}",
            map.scale(),
            map.lower_scale()
        )));
    }
    match region {
        Region::Interval(a, b) => {
            let fa = map.apply_exact(&[*a, Real::int(0), Real::int(0)])[0];
            let fb = map.apply_exact(&[*b, Real::int(0), Real::int(0)])[0];
            Ok(if le(&fa, &fb) {
                Region::Interval(fa, fb)
            } else {
                Region::Interval(fb, fa)
            })
        }
        Region::Polygon(v) => {
            let mut out: Vec<[Real; 2]> = v
                .iter()
                .map(|p| {
                    let q = map.apply_exact(&[p[0], p[1], Real::int(0)]);
                    [q[0], q[1]]
                })
                .collect();
            if !map.preserves_orientation() {
                out.reverse();
            }
            Ok(Region::Polygon(out))
        }
    }
}

/// Closed containment of `inner` in the closure of `outer`, which for open
/// convex sets is the same as containment of the open sets.
fn region_within(inner: &Region, outer: &Region) -> bool {
    match (inner, outer) {
        (Region::Interval(a, b), Region::Interval(c, d)) => le(c, a) && le(b, d),
        (Region::Polygon(v), Region::Polygon(_)) => v
            .iter()
            .all(|p| outer.closure_contains(&[p[0], p[1], Real::int(0)])),
        _ => false,
    }
}

/// Projection of a polygon on the normal of edge `a → b`.
fn project(v: &[[Real; 2]], a: &[Real; 2], b: &[Real; 2]) -> (Real, Real) {
    let (nx, ny) = (b[1] - a[1], a[0] - b[0]);
    let vals: Vec<Real> = v.iter().map(|p| nx * p[0] + ny * p[1]).collect();
    let mut lo = vals[0];
    let mut hi = vals[0];
    for x in &vals[1..] {
        if lt(x, &lo) {
            lo = *x;
        }
        if gt(x, &hi) {
            hi = *x;
        }
    }
    (lo, hi)
}

/// Interiors are disjoint iff some edge normal separates the polygons, with
/// touching projections allowed.
fn interiors_disjoint(p: &Region, q: &Region) -> bool {
    match (p, q) {
        (Region::Interval(a, b), Region::Interval(c, d)) => le(b, c) || le(d, a),
        (Region::Polygon(u), Region::Polygon(w)) => {
            let axes = u
                .iter()
                .zip(u.iter().cycle().skip(1))
                .chain(w.iter().zip(w.iter().cycle().skip(1)));
            for (a, b) in axes {
                let (p0, p1) = project(u, a, b);
                let (q0, q1) = project(w, a, b);
                if le(&p1, &q0) || le(&q1, &p0) {
                    return true;
                }
            }
            false
        }
        _ => false,
    }
}

/// A point inside both regions, taken as the centroid of their overlap.
fn overlap_witness(p: &Region, q: &Region) -> Vec<f64> {
    match (p, q) {
        (Region::Interval(a, b), Region::Interval(c, d)) => {
            let lo = a.value().max(c.value());
            let hi = b.value().min(d.value());
            vec![0.5 * (lo + hi)]
        }
        _ => {
            let clipped = clip_convex(&p.corners_f64(), &q.corners_f64());
            let pts = if clipped.is_empty() { p.corners_f64() } else { clipped };
            let n = pts.len() as f64;
            vec![
                pts.iter().map(|c| c[0]).sum::<f64>() / n,
                pts.iter().map(|c| c[1]).sum::<f64>() / n,
            ]
        }
    }
}

/// Sutherland-Hodgman clip of `subject` by the convex counterclockwise `clip`.
fn clip_convex(subject: &[[f64; 2]], clip: &[[f64; 2]]) -> Vec<[f64; 2]> {
    let mut out = subject.to_vec();
    for k in 0..clip.len() {
        if out.is_empty() {
            break;
        }
        let (a, b) = (clip[k], clip[(k + 1) % clip.len()]);
        let side = |p: &[f64; 2]| (b[0] - a[0]) * (p[1] - a[1]) - (b[1] - a[1]) * (p[0] - a[0]);
        let input = std::mem::take(&mut out);
        for i in 0..input.len() {
            let (cur, prev) = (input[i], input[(i + input.len() - 1) % input.len()]);
            let (sc, sp) = (side(&cur), side(&prev));
            if (sc >= 0.0) != (sp >= 0.0) {
                let t = sp / (sp - sc);
                out.push([prev[0] + t * (cur[0] - prev[0]), prev[1] + t * (cur[1] - prev[1])]);
            }
            if sc >= 0.0 {
                out.push(cur);
            }
        }
    }
    out
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Witness {
    /// The image of the region at `to` under this edge leaves the region at `from`.
    ImageNotContained { edge: String },
    /// Two edges from the same vertex whose open images overlap at `point`.
    OverlappingImages { first: String, second: String, point: Vec<f64> },
    /// A point of a condensation set outside the closure of the region.
    CondensationOutside { vertex: String, point: Vec<f64> },
    /// A cloud point deeper than the resolution inside the region.
    InteriorPoint { vertex: String, point: Vec<f64>, depth: f64 },
    /// No cloud point of this vertex meets the region.
    NoIntersection { vertex: String },
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ConditionResult {
    pub holds: bool,
    /// First counterexample when the condition fails; for the strong
    /// condition, the certificate when it holds.
    pub witness: Option<Witness>,
}

impl ConditionResult {
    fn pass() -> Self {
        ConditionResult {
            holds: true,
            witness: None,
        }
    }

    fn fail(w: Witness) -> Self {
        ConditionResult {
            holds: false,
            witness: Some(w),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct OSCReport {
    pub condition_i: ConditionResult,
    pub condition_ii: ConditionResult,
    pub condition_iii: ConditionResult,
    /// Present only after [`check_strong`] with conditions i-iii holding.
    pub condition_iv: Option<ConditionResult>,
}

impl OSCReport {
    /// Conditions i-iii.
    pub fn holds(&self) -> bool {
        self.condition_i.holds && self.condition_ii.holds && self.condition_iii.holds
    }

    pub fn strong_holds(&self) -> bool {
        self.holds() && self.condition_iv.as_ref().is_some_and(|c| c.holds)
    }
}

fn check_inputs(sys: &GdSystem, regions: &[Region]) -> Result<()> {
    if sys.dim() == 3 {
        return Err(Error::UnsupportedDimension(3));
    }
    sys.ensure_valid()?;
    if regions.len() != sys.vertex_count() {
        return Err(Error::InvalidParameter(format!(
            "{} regions for {} vertices",
            regions.len(),
            sys.vertex_count()
        )));
    }
    for r in regions {
        if r.dim() != sys.dim() {
            return Err(Error::InvalidParameter(format!(
                "region of dimension {} in a system of dimension {}",
                r.dim(),
                sys.dim()
            )));
        }
        r.check()?;
    }
    Ok(())
}

/// Conditions (i) nesting, (ii) separation and (iii) condensation
/// containment. Counterexamples are the first in edge order.
pub fn check_gdiosc(sys: &GdSystem, regions: &[Region]) -> Result<OSCReport> {
    check_inputs(sys, regions)?;
    let images = sys
        .edges()
        .iter()
        .map(|e| {
            image_region(&e.map, &regions[e.to.0]).map_err(|_| Error::NotSimilarity(e.id.clone()))
        })
        .collect::<Result<Vec<_>>>()?;

    let condition_i = sys
        .edges()
        .iter()
        .zip(&images)
        .find(|(e, img)| !region_within(img, &regions[e.from.0]))
        .map_or_else(ConditionResult::pass, |(e, _)| {
            ConditionResult::fail(Witness::ImageNotContained { edge: e.id.clone() })
        });

    let mut pairs = Vec::new();
    for v in sys.vertices() {
        let out = sys.out_edges(v);
        for (k, a) in out.iter().enumerate() {
            for b in &out[k + 1..] {
                pairs.push((*a, *b));
            }
        }
    }
    let overlap = pairs
        .par_iter()
        .find_first(|(a, b)| !interiors_disjoint(&images[a.0], &images[b.0]));
    let condition_ii = match overlap {
        None => ConditionResult::pass(),
        Some((a, b)) => ConditionResult::fail(Witness::OverlappingImages {
            first: sys.edge(*a).id.clone(),
            second: sys.edge(*b).id.clone(),
            point: overlap_witness(&images[a.0], &images[b.0]),
        }),
    };

    let mut condition_iii = ConditionResult::pass();
    'outer: for v in sys.vertices() {
        for prim in &sys.condensation(v).primitives {
            for c in prim.corners(sys.dim()) {
                if !regions[v.0].closure_contains(&c) {
                    condition_iii = ConditionResult::fail(Witness::CondensationOutside {
                        vertex: sys.vertex_name(v).to_string(),
                        point: c[..sys.dim()].iter().map(Real::value).collect(),
                    });
                    break 'outer;
                }
            }
        }
    }

    Ok(OSCReport {
        condition_i,
        condition_ii,
        condition_iii,
        condition_iv: None,
    })
}

/// Conditions i-iii plus the strong condition (iv): at every vertex some
/// cloud point lies deeper than the cloud resolution inside the region.
///
/// Fails with `InsufficientResolution` when a vertex has cloud points in or
/// within the resolution of its region but none deep enough to decide.
pub fn check_strong(sys: &GdSystem, regions: &[Region], clouds: &[PointCloud]) -> Result<OSCReport> {
    let mut report = check_gdiosc(sys, regions)?;
    if !report.holds() {
        return Ok(report);
    }
    if clouds.len() != sys.vertex_count() {
        return Err(Error::InvalidParameter(format!(
            "{} clouds for {} vertices",
            clouds.len(),
            sys.vertex_count()
        )));
    }
    let mut result = None;
    for v in sys.vertices() {
        let cloud = &clouds[v.0];
        let eps = cloud.resolution;
        let region = &regions[v.0];
        let best = cloud
            .points
            .iter()
            .map(|p| (region.signed_depth(p), p))
            .max_by(|a, b| a.0.total_cmp(&b.0));
        match best {
            Some((depth, p)) if depth > eps => {
                if result.is_none() {
                    result = Some(ConditionResult {
                        holds: true,
                        witness: Some(Witness::InteriorPoint {
                            vertex: sys.vertex_name(v).to_string(),
                            point: p[..sys.dim()].to_vec(),
                            depth,
                        }),
                    });
                }
            }
            Some((depth, _)) if depth >= -eps => return Err(Error::InsufficientResolution(eps)),
            _ => {
                result = Some(ConditionResult::fail(Witness::NoIntersection {
                    vertex: sys.vertex_name(v).to_string(),
                }));
                break;
            }
        }
    }
    report.condition_iv = result;
    Ok(report)
}
