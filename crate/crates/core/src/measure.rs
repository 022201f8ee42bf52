//! Invariant vector-measures of inhomogeneous graph-directed systems: exact
//! sampling by a stopped edge chain and an empirical invariance check.
//!
//! The condensation measure `λ_j` is uniform on `C_j`: primitives of the
//! largest topological dimension present are weighted by their length, area
//! or volume; when `C_j` is a finite set of points each point gets equal mass.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::{coords_value, Affine, CondensationSet, GdSystem, Point, Primitive, VertexId};

/// Edge weights `p^j_e` (indexed by edge) and stopping weights `p_j` (indexed
/// by vertex).
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ProbabilityScheme {
    pub edge_weights: Vec<f64>,
    pub stop_weights: Vec<f64>,
}

const SUM_TOL: f64 = 1e-9;
const MAX_STEPS: usize = 10_000_000;

impl ProbabilityScheme {
    pub fn new(edge_weights: Vec<f64>, stop_weights: Vec<f64>) -> Self {
        ProbabilityScheme {
            edge_weights,
            stop_weights,
        }
    }

    /// Stopping weight `p` at every vertex and the rest split evenly over the
    /// outgoing edges.
    pub fn uniform(sys: &GdSystem, stop: f64) -> Self {
        let mut edge_weights = vec![0.0; sys.edges().len()];
        for v in sys.vertices() {
            let out = sys.out_edges(v);
            for e in out {
                edge_weights[e.0] = (1.0 - stop) / out.len() as f64;
            }
        }
        ProbabilityScheme {
            edge_weights,
            stop_weights: vec![stop; sys.vertex_count()],
        }
    }

    /// Checks shapes, signs, per-vertex sums and that stopping only happens
    /// where there is a condensation set to draw from.
    pub fn validate(&self, sys: &GdSystem) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidScheme(m));
        if self.edge_weights.len() != sys.edges().len() {
            return bad(format!(
                "{} edge weights for {} edges",
                self.edge_weights.len(),
                sys.edges().len()
            ));
        }
        if self.stop_weights.len() != sys.vertex_count() {
            return bad(format!(
                "{} stopping weights for {} vertices",
                self.stop_weights.len(),
                sys.vertex_count()
            ));
        }
        if self
            .edge_weights
            .iter()
            .chain(&self.stop_weights)
            .any(|w| !(w.is_finite() && *w >= 0.0))
        {
            return bad("weights must be finite and nonnegative".into());
        }
        for v in sys.vertices() {
            let name = sys.vertex_name(v);
            let total: f64 = sys
                .out_edges(v)
                .iter()
                .map(|e| self.edge_weights[e.0])
                .sum::<f64>()
                + self.stop_weights[v.0];
            if (total - 1.0).abs() > SUM_TOL {
                return bad(format!("weights at vertex {name} sum to {total}"));
            }
            let empty = sys.condensation(v).is_empty();
            if empty && self.stop_weights[v.0] > 0.0 {
                return bad(format!("vertex {name} stops but has no condensation set"));
            }
            if !empty && self.stop_weights[v.0] == 0.0 {
                return bad(format!("vertex {name} has a condensation set but never stops"));
            }
        }
        if self.stop_weights.iter().all(|&p| p == 0.0) {
            return Err(Error::NoCondensation);
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MeasureSample {
    pub vertex: VertexId,
    pub seed: u64,
    pub count: usize,
    pub points: Vec<Point>,
}

/// Content of a primitive in its own topological dimension.
fn content(prim: &Primitive, dim: usize) -> (usize, f64) {
    match prim {
        Primitive::Point(_) => (0, 1.0),
        Primitive::Segment(a, b) => {
            let len = crate::model::dist(&coords_value(a), &coords_value(b));
            if len > 0.0 {
                (1, len)
            } else {
                (0, 1.0)
            }
        }
        Primitive::Polyline(pts) => {
            let len: f64 = pts
                .windows(2)
                .map(|w| crate::model::dist(&coords_value(&w[0]), &coords_value(&w[1])))
                .sum();
            if len > 0.0 {
                (1, len)
            } else {
                (0, 1.0)
            }
        }
        Primitive::Box { min, max } => {
            let (lo, hi) = (coords_value(min), coords_value(max));
            let sides: Vec<f64> = (0..dim).map(|k| hi[k] - lo[k]).filter(|s| *s > 0.0).collect();
            (sides.len(), sides.iter().product())
        }
    }
}

/// Uniform measure on a condensation set as weighted primitives.
#[derive(Clone, Debug)]
pub(crate) struct Uniform {
    dim: usize,
    parts: Vec<(Primitive, f64)>,
    cumulative: Vec<f64>,
}

impl Uniform {
    pub fn new(set: &CondensationSet, dim: usize) -> Option<Self> {
        let top = set.primitives.iter().map(|p| content(p, dim).0).max()?;
        let parts: Vec<(Primitive, f64)> = set
            .primitives
            .iter()
            .filter_map(|p| {
                let (k, c) = content(p, dim);
                (k == top).then(|| (p.clone(), c))
            })
            .collect();
        let total: f64 = parts.iter().map(|(_, c)| c).sum();
        let mut acc = 0.0;
        let cumulative = parts
            .iter()
            .map(|(_, c)| {
                acc += c / total;
                acc
            })
            .collect();
        Some(Uniform {
            dim,
            parts,
            cumulative,
        })
    }

    fn draw<R: Rng>(&self, rng: &mut R) -> Point {
        let u: f64 = rng.gen();
        let idx = self
            .cumulative
            .iter()
            .position(|&c| u < c)
            .unwrap_or(self.parts.len() - 1);
        match &self.parts[idx].0 {
            Primitive::Point(p) => coords_value(p),
            Primitive::Segment(a, b) => lerp(&coords_value(a), &coords_value(b), rng.gen()),
            Primitive::Polyline(pts) => {
                let pts: Vec<Point> = pts.iter().map(coords_value).collect();
                let lens: Vec<f64> = pts.windows(2).map(|w| crate::model::dist(&w[0], &w[1])).collect();
                let total: f64 = lens.iter().sum();
                let mut target = rng.gen::<f64>() * total;
                for (k, len) in lens.iter().enumerate() {
                    if target <= *len || k == lens.len() - 1 {
                        return lerp(&pts[k], &pts[k + 1], (target / len).min(1.0));
                    }
                    target -= len;
                }
                pts[0]
            }
            Primitive::Box { min, max } => {
                let (lo, hi) = (coords_value(min), coords_value(max));
                let mut p = lo;
                for k in 0..self.dim {
                    p[k] = lo[k] + rng.gen::<f64>() * (hi[k] - lo[k]);
                }
                p
            }
        }
    }

    /// `λ(B)` for a closed axis-parallel box `B`.
    fn mass(&self, probe: &ProbeBox) -> f64 {
        let total: f64 = self.parts.iter().map(|(_, c)| c).sum();
        let inside: f64 = self
            .parts
            .iter()
            .map(|(prim, c)| c * fraction_inside(prim, probe, self.dim))
            .sum();
        inside / total
    }
}

fn lerp(a: &Point, b: &Point, t: f64) -> Point {
    [
        a[0] + t * (b[0] - a[0]),
        a[1] + t * (b[1] - a[1]),
        a[2] + t * (b[2] - a[2]),
    ]
}

/// Parameter range of `a + t(b − a)`, `t ∈ [0, 1]`, inside the box.
fn clip_segment(a: &Point, b: &Point, probe: &ProbeBox, dim: usize) -> Option<(f64, f64)> {
    let (mut t0, mut t1) = (0.0f64, 1.0f64);
    for k in 0..dim {
        let d = b[k] - a[k];
        if d == 0.0 {
            if a[k] < probe.min[k] || a[k] > probe.max[k] {
                return None;
            }
            continue;
        }
        let (mut lo, mut hi) = ((probe.min[k] - a[k]) / d, (probe.max[k] - a[k]) / d);
        if lo > hi {
            std::mem::swap(&mut lo, &mut hi);
        }
        t0 = t0.max(lo);
        t1 = t1.min(hi);
    }
    (t0 <= t1).then_some((t0, t1))
}

fn fraction_inside(prim: &Primitive, probe: &ProbeBox, dim: usize) -> f64 {
    match prim {
        Primitive::Point(p) => probe.contains(&coords_value(p), dim) as u8 as f64,
        Primitive::Segment(a, b) => {
            let (a, b) = (coords_value(a), coords_value(b));
            if a == b {
                return probe.contains(&a, dim) as u8 as f64;
            }
            clip_segment(&a, &b, probe, dim).map_or(0.0, |(t0, t1)| t1 - t0)
        }
        Primitive::Polyline(pts) => {
            let pts: Vec<Point> = pts.iter().map(coords_value).collect();
            let lens: Vec<f64> = pts.windows(2).map(|w| crate::model::dist(&w[0], &w[1])).collect();
            let total: f64 = lens.iter().sum();
            if total == 0.0 {
                return probe.contains(&pts[0], dim) as u8 as f64;
            }
            pts.windows(2)
                .zip(&lens)
                .map(|(w, len)| len * clip_segment(&w[0], &w[1], probe, dim).map_or(0.0, |(t0, t1)| t1 - t0))
                .sum::<f64>()
                / total
        }
        Primitive::Box { min, max } => {
            let (lo, hi) = (coords_value(min), coords_value(max));
            let mut frac = 1.0;
            for k in 0..dim {
                let a = lo[k].max(probe.min[k]);
                let b = hi[k].min(probe.max[k]);
                if a > b {
                    return 0.0;
                }
                if hi[k] > lo[k] {
                    frac *= (b - a) / (hi[k] - lo[k]);
                }
            }
            frac
        }
    }
}

fn draw_one(
    sys: &GdSystem,
    scheme: &ProbabilityScheme,
    lambdas: &[Option<Uniform>],
    start: VertexId,
    rng: &mut ChaCha8Rng,
) -> Result<Point> {
    let mut v = start;
    let mut acc = Affine::identity();
    for _ in 0..MAX_STEPS {
        let u: f64 = rng.gen();
        let stop = scheme.stop_weights[v.0];
        if u < stop {
            let lambda = lambdas[v.0].as_ref().ok_or(Error::NoCondensation)?;
            return Ok(acc.apply(&lambda.draw(rng)));
        }
        let mut target = u - stop;
        let out = sys.out_edges(v);
        let mut chosen = *out.last().expect("valid system");
        for &e in out {
            let w = scheme.edge_weights[e.0];
            if w > 0.0 && target < w {
                chosen = e;
                break;
            }
            target -= w;
        }
        let edge = sys.edge(chosen);
        acc = acc.then(&edge.map);
        v = edge.to;
    }
    Err(Error::ConvergenceFailure(MAX_STEPS))
}

/// `n` independent exact draws from `μ_vertex`.
///
/// Sample `k` uses a ChaCha8 generator seeded with `seed` on stream `k`, so
/// the output does not depend on how the work is split across threads.
pub fn sample_measure(
    sys: &GdSystem,
    scheme: &ProbabilityScheme,
    vertex: VertexId,
    n: usize,
    seed: u64,
) -> Result<MeasureSample> {
    sys.ensure_valid()?;
    if vertex.0 >= sys.vertex_count() {
        return Err(Error::UnknownVertex(format!("#{}", vertex.0)));
    }
    scheme.validate(sys)?;
    let lambdas: Vec<Option<Uniform>> = sys
        .vertices()
        .map(|v| Uniform::new(sys.condensation(v), sys.dim()))
        .collect();
    let points = (0..n)
        .into_par_iter()
        .map(|k| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(k as u64);
            draw_one(sys, scheme, &lambdas, vertex, &mut rng)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(MeasureSample {
        vertex,
        seed,
        count: n,
        points,
    })
}

/// Closed axis-parallel box.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ProbeBox {
    pub min: Point,
    pub max: Point,
}

impl ProbeBox {
    pub fn contains(&self, p: &Point, dim: usize) -> bool {
        (0..dim).all(|k| p[k] >= self.min[k] && p[k] <= self.max[k])
    }
}

/// `count` boxes with corners drawn uniformly from `[lo, hi]^d`.
pub fn random_probes(dim: usize, lo: f64, hi: f64, count: usize, seed: u64) -> Vec<ProbeBox> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| {
            let mut b = ProbeBox {
                min: [0.0; 3],
                max: [0.0; 3],
            };
            for k in 0..dim {
                let x = lo + rng.gen::<f64>() * (hi - lo);
                let y = lo + rng.gen::<f64>() * (hi - lo);
                b.min[k] = x.min(y);
                b.max[k] = x.max(y);
            }
            b
        })
        .collect()
}

pub const MIN_RESIDUAL_SAMPLES: usize = 10_000;

/// Largest discrepancy, over vertices `i` and probes `B`, between
/// `μ̂_i(B)` and `Σ_e p_e μ̂_{t(e)}(f_e^{-1} B) + p_i λ_i(B)`.
///
/// `samples[i]` must hold draws from `μ_i` for every vertex `i`.
pub fn invariance_residual(
    samples: &[MeasureSample],
    sys: &GdSystem,
    scheme: &ProbabilityScheme,
    probes: &[ProbeBox],
) -> Result<f64> {
    scheme.validate(sys)?;
    if samples.len() != sys.vertex_count() {
        return Err(Error::InvalidParameter(format!(
            "{} sample sets for {} vertices",
            samples.len(),
            sys.vertex_count()
        )));
    }
    let fewest = samples.iter().map(|s| s.points.len()).min().unwrap_or(0);
    if fewest < MIN_RESIDUAL_SAMPLES {
        return Err(Error::InsufficientSamples {
            needed: MIN_RESIDUAL_SAMPLES,
            got: fewest,
        });
    }
    let dim = sys.dim();
    let lambdas: Vec<Option<Uniform>> = sys
        .vertices()
        .map(|v| Uniform::new(sys.condensation(v), dim))
        .collect();
    let freq = |pts: &[Point], probe: &ProbeBox, map: Option<&Affine>| -> f64 {
        let hits = pts
            .iter()
            .filter(|p| match map {
                Some(m) => probe.contains(&m.apply(p), dim),
                None => probe.contains(p, dim),
            })
            .count();
        hits as f64 / pts.len() as f64
    };
    let worst = sys
        .vertices()
        .collect::<Vec<_>>()
        .par_iter()
        .flat_map(|&v| probes.par_iter().map(move |b| (v, b)))
        .map(|(v, probe)| {
            let lhs = freq(&samples[v.0].points, probe, None);
            let mut rhs: f64 = sys
                .out_edges(v)
                .iter()
                .map(|&e| {
                    let edge = sys.edge(e);
                    let map = Affine::identity().then(&edge.map);
                    scheme.edge_weights[e.0] * freq(&samples[edge.to.0].points, probe, Some(&map))
                })
                .sum();
            if let Some(lambda) = &lambdas[v.0] {
                rhs += scheme.stop_weights[v.0] * lambda.mass(probe);
            }
            (lhs - rhs).abs()
        })
        .reduce(|| 0.0, f64::max);
    Ok(worst)
}

/// Componentwise mean of the sample points.
pub fn sample_mean(sample: &MeasureSample) -> Point {
    let n = sample.points.len().max(1) as f64;
    let mut m = [0.0; 3];
    for p in &sample.points {
        for k in 0..3 {
            m[k] += p[k];
        }
    }
    m.map(|x| x / n)
}
