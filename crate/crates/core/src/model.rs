//! Graph-directed systems: vertices, edges carrying contractions, condensation
//! sets, finite paths and cross-cuts.
//!
//! An edge `e` stored with `from = i(e)` and `to = t(e)` carries a map from the
//! space attached to `to` into the space attached to `from`. The set at a vertex
//! collects the images of the sets at the terminal vertices of its outgoing
//! edges, so paths are walked along edge direction and a path `e1 e2 … ek`
//! composes to `f_e1 ∘ f_e2 ∘ … ∘ f_ek`.

use std::collections::VecDeque;
use std::fmt;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::measure::ProbabilityScheme;
use crate::numeric::{Real, INEXACT_SLACK};
use crate::separation::Region;

/// A point in the ambient space. Coordinates past the ambient dimension are zero.
pub type Point = [f64; 3];

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub struct VertexId(pub usize);

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub struct EdgeId(pub usize);

/// Which contraction ratio a computation uses: the upper ratio `ρ` or the
/// lower ratio `ρ′`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum RatioKind {
    Upper,
    Lower,
}

/// Affine map `x ↦ ρ·O·x + b` with `O` orthogonal, plus a declared lower
/// ratio `ρ′ ≤ ρ`.
#[derive(Clone, Debug)]
pub struct SimilarityMap {
    dim: usize,
    scale: Real,
    lower_scale: Real,
    linear: [[Real; 3]; 3],
    translation: [Real; 3],
    lin: [[f64; 3]; 3],
    shift: [f64; 3],
}

fn zero_row() -> [Real; 3] {
    [Real::int(0); 3]
}

fn exact_cos_sin(degrees: f64) -> (Real, Real) {
    let d = degrees.rem_euclid(360.0);
    if d == 0.0 {
        (Real::int(1), Real::int(0))
    } else if d == 90.0 {
        (Real::int(0), Real::int(1))
    } else if d == 180.0 {
        (Real::int(-1), Real::int(0))
    } else if d == 270.0 {
        (Real::int(0), Real::int(-1))
    } else {
        let r = degrees.to_radians();
        (Real::from_f64(r.cos()), Real::from_f64(r.sin()))
    }
}

impl SimilarityMap {
    fn from_parts(
        dim: usize,
        scale: Real,
        lower_scale: Real,
        linear: [[Real; 3]; 3],
        translation: [Real; 3],
    ) -> Self {
        let mut lin = [[0.0; 3]; 3];
        let mut shift = [0.0; 3];
        for i in 0..3 {
            for j in 0..3 {
                lin[i][j] = linear[i][j].value();
            }
            shift[i] = translation[i].value();
        }
        SimilarityMap {
            dim,
            scale,
            lower_scale,
            linear,
            translation,
            lin,
            shift,
        }
    }

    pub fn identity(dim: usize) -> Self {
        let mut linear = [zero_row(), zero_row(), zero_row()];
        for (i, row) in linear.iter_mut().enumerate().take(dim) {
            row[i] = Real::int(1);
        }
        Self::from_parts(dim, Real::int(1), Real::int(1), linear, [Real::int(0); 3])
    }

    /// `x ↦ ±ρx + b` on the line.
    pub fn line(scale: Real, flip: bool, translation: Real) -> Self {
        let mut linear = [zero_row(), zero_row(), zero_row()];
        linear[0][0] = if flip { -scale } else { scale };
        let mut t = [Real::int(0); 3];
        t[0] = translation;
        Self::from_parts(1, scale, scale, linear, t)
    }

    /// Planar similarity: scale, counterclockwise rotation (degrees), optional
    /// reflection in the x-axis applied before the rotation, then translation.
    pub fn plane(scale: Real, rotation_deg: f64, reflect: bool, translation: [Real; 2]) -> Self {
        let (c, s) = exact_cos_sin(rotation_deg);
        let sign = if reflect { Real::int(-1) } else { Real::int(1) };
        let mut linear = [zero_row(), zero_row(), zero_row()];
        linear[0][0] = scale * c;
        linear[0][1] = -(scale * s) * sign;
        linear[1][0] = scale * s;
        linear[1][1] = scale * c * sign;
        let t = [translation[0], translation[1], Real::int(0)];
        Self::from_parts(2, scale, scale, linear, t)
    }

    /// Spatial similarity with an explicit orthonormal matrix (checked by
    /// validation, not here).
    pub fn space(scale: Real, orthonormal: [[Real; 3]; 3], translation: [Real; 3]) -> Self {
        let mut linear = [zero_row(), zero_row(), zero_row()];
        for i in 0..3 {
            for j in 0..3 {
                linear[i][j] = scale * orthonormal[i][j];
            }
        }
        Self::from_parts(3, scale, scale, linear, translation)
    }

    /// Declares a weaker lower ratio `ρ′`.
    pub fn with_lower_scale(mut self, lower_scale: Real) -> Self {
        self.lower_scale = lower_scale;
        self
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn scale(&self) -> Real {
        self.scale
    }

    pub fn lower_scale(&self) -> Real {
        self.lower_scale
    }

    pub fn ratio(&self, kind: RatioKind) -> f64 {
        match kind {
            RatioKind::Upper => self.scale.value(),
            RatioKind::Lower => self.lower_scale.value(),
        }
    }

    pub fn exact_ratio(&self, kind: RatioKind) -> Real {
        match kind {
            RatioKind::Upper => self.scale,
            RatioKind::Lower => self.lower_scale,
        }
    }

    pub fn linear(&self) -> &[[Real; 3]; 3] {
        &self.linear
    }

    pub fn translation(&self) -> &[Real; 3] {
        &self.translation
    }

    pub fn is_similarity(&self) -> bool {
        self.lower_scale.eq_within(&self.scale, INEXACT_SLACK)
    }

    /// Sign of the determinant of the orthogonal part.
    pub fn preserves_orientation(&self) -> bool {
        let m = &self.lin;
        let det = match self.dim {
            1 => m[0][0],
            2 => m[0][0] * m[1][1] - m[0][1] * m[1][0],
            _ => {
                m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1])
                    - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
                    + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
            }
        };
        det > 0.0
    }

    pub fn apply(&self, p: &Point) -> Point {
        let mut out = [0.0; 3];
        for (i, o) in out.iter_mut().enumerate().take(self.dim) {
            let mut acc = self.shift[i];
            for (j, x) in p.iter().enumerate().take(self.dim) {
                acc += self.lin[i][j] * x;
            }
            *o = acc;
        }
        out
    }

    /// Applies the map keeping exact arithmetic where the inputs allow it.
    pub fn apply_exact(&self, p: &[Real; 3]) -> [Real; 3] {
        let mut out = [Real::int(0); 3];
        for (i, o) in out.iter_mut().enumerate().take(self.dim) {
            let mut acc = self.translation[i];
            for (j, x) in p.iter().enumerate().take(self.dim) {
                acc = acc + self.linear[i][j] * *x;
            }
            *o = acc;
        }
        out
    }

    /// `self ∘ inner`.
    pub fn compose(&self, inner: &SimilarityMap) -> SimilarityMap {
        let d = self.dim;
        let mut linear = [zero_row(), zero_row(), zero_row()];
        for (i, row) in linear.iter_mut().enumerate().take(d) {
            for (j, cell) in row.iter_mut().enumerate().take(d) {
                let mut acc = Real::int(0);
                for k in 0..d {
                    acc = acc + self.linear[i][k] * inner.linear[k][j];
                }
                *cell = acc;
            }
        }
        let translation = self.apply_exact(&inner.translation);
        Self::from_parts(
            d,
            self.scale * inner.scale,
            self.lower_scale * inner.lower_scale,
            linear,
            translation,
        )
    }

    /// Unique fixed point of the contraction, solving `(I − A)x = b`.
    pub fn fixed_point(&self) -> Point {
        let d = self.dim;
        let mut a = [[0.0; 4]; 3];
        for i in 0..d {
            for j in 0..d {
                a[i][j] = if i == j { 1.0 } else { 0.0 } - self.lin[i][j];
            }
            a[i][3] = self.shift[i];
        }
        for col in 0..d {
            let pivot = (col..d)
                .max_by(|&x, &y| a[x][col].abs().total_cmp(&a[y][col].abs()))
                .unwrap_or(col);
            a.swap(col, pivot);
            let p = a[col][col];
            for k in col..4 {
                a[col][k] /= p;
            }
            for row in 0..d {
                if row != col {
                    let f = a[row][col];
                    for k in col..4 {
                        a[row][k] -= f * a[col][k];
                    }
                }
            }
        }
        let mut out = [0.0; 3];
        for i in 0..d {
            out[i] = a[i][3];
        }
        out
    }

    fn orthogonality_defect(&self) -> f64 {
        let s = self.scale.value();
        let mut worst: f64 = 0.0;
        for i in 0..self.dim {
            for j in 0..self.dim {
                let dot: f64 = (0..self.dim)
                    .map(|k| self.lin[k][i] * self.lin[k][j])
                    .sum::<f64>()
                    / (s * s);
                let target = if i == j { 1.0 } else { 0.0 };
                worst = worst.max((dot - target).abs());
            }
        }
        worst
    }
}

/// Plain `f64` affine map used on hot paths where exactness is not needed.
#[derive(Clone, Copy, Debug)]
pub(crate) struct Affine {
    pub lin: [[f64; 3]; 3],
    pub shift: [f64; 3],
}

impl Affine {
    pub fn identity() -> Self {
        let mut lin = [[0.0; 3]; 3];
        for (i, row) in lin.iter_mut().enumerate() {
            row[i] = 1.0;
        }
        Affine {
            lin,
            shift: [0.0; 3],
        }
    }

    pub fn apply(&self, p: &Point) -> Point {
        let mut out = self.shift;
        for (i, o) in out.iter_mut().enumerate() {
            *o += self.lin[i][0] * p[0] + self.lin[i][1] * p[1] + self.lin[i][2] * p[2];
        }
        out
    }

    /// `self ∘ map`.
    pub fn then(&self, map: &SimilarityMap) -> Affine {
        let mut lin = [[0.0; 3]; 3];
        for (i, row) in lin.iter_mut().enumerate() {
            for (j, cell) in row.iter_mut().enumerate() {
                *cell = (0..3).map(|k| self.lin[i][k] * map.lin[k][j]).sum();
            }
        }
        Affine {
            lin,
            shift: self.apply(&map.shift),
        }
    }
}

#[derive(Clone, Debug)]
pub struct Edge {
    pub id: String,
    pub from: VertexId,
    pub to: VertexId,
    pub map: SimilarityMap,
}

pub type Coords = [Real; 3];

pub fn coords_value(c: &Coords) -> Point {
    [c[0].value(), c[1].value(), c[2].value()]
}

/// Compact building block of a condensation set.
#[derive(Clone, Debug, PartialEq)]
pub enum Primitive {
    Point(Coords),
    Segment(Coords, Coords),
    Box { min: Coords, max: Coords },
    Polyline(Vec<Coords>),
}

impl Primitive {
    /// Extreme points whose convex hull contains the primitive.
    pub fn corners(&self, dim: usize) -> Vec<Coords> {
        match self {
            Primitive::Point(p) => vec![*p],
            Primitive::Segment(a, b) => vec![*a, *b],
            Primitive::Polyline(pts) => pts.clone(),
            Primitive::Box { min, max } => {
                let mut out = Vec::with_capacity(1 << dim);
                for mask in 0..(1usize << dim) {
                    let mut c = [Real::int(0); 3];
                    for (k, slot) in c.iter_mut().enumerate().take(dim) {
                        *slot = if mask >> k & 1 == 1 { max[k] } else { min[k] };
                    }
                    out.push(c);
                }
                out
            }
        }
    }
}

/// Finite union of primitives. Empty means the homogeneous case.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct CondensationSet {
    pub primitives: Vec<Primitive>,
}

impl CondensationSet {
    pub fn empty() -> Self {
        Self::default()
    }

    pub fn new(primitives: Vec<Primitive>) -> Self {
        CondensationSet { primitives }
    }

    pub fn is_empty(&self) -> bool {
        self.primitives.is_empty()
    }

    /// Largest distance of any primitive point from the origin.
    pub fn radius(&self, dim: usize) -> f64 {
        self.primitives
            .iter()
            .flat_map(|p| p.corners(dim))
            .map(|c| norm(&coords_value(&c)))
            .fold(0.0, f64::max)
    }
}

pub fn norm(p: &Point) -> f64 {
    (p[0] * p[0] + p[1] * p[1] + p[2] * p[2]).sqrt()
}

pub fn dist(a: &Point, b: &Point) -> f64 {
    norm(&[a[0] - b[0], a[1] - b[1], a[2] - b[2]])
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Violation {
    NoVertices,
    UnsupportedDimension { dim: usize },
    NonPositiveScale { edge: String },
    NonContraction { edge: String, scale: f64 },
    NonPositiveLowerScale { edge: String },
    LowerScaleExceedsScale { edge: String, scale: f64, lower_scale: f64 },
    NotOrthogonal { edge: String },
    DimensionMismatch { what: String, expected: usize, found: usize },
    NoOutgoingEdge { vertex: String },
    NotStronglyConnected { from: String, unreachable: String },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::NoVertices => write!(f, "system has no vertices"),
            Violation::UnsupportedDimension { dim } => {
                write!(f, "ambient dimension {dim} is not 1, 2 or 3")
            }
            Violation::NonPositiveScale { edge } => {
                write!(f, "edge {edge}: scale must be positive")
            }
            Violation::NonContraction { edge, scale } => {
                write!(f, "edge {edge}: scale {scale} is not a contraction")
            }
            Violation::NonPositiveLowerScale { edge } => {
                write!(f, "edge {edge}: lower scale must be positive")
            }
            Violation::LowerScaleExceedsScale {
                edge,
                scale,
                lower_scale,
            } => write!(f, "edge {edge}: lower scale {lower_scale} exceeds scale {scale}"),
            Violation::NotOrthogonal { edge } => {
                write!(f, "edge {edge}: linear part is not a scaled orthogonal matrix")
            }
            Violation::DimensionMismatch {
                what,
                expected,
                found,
            } => write!(f, "{what}: dimension {found}, expected {expected}"),
            Violation::NoOutgoingEdge { vertex } => {
                write!(f, "vertex {vertex} has no outgoing edge")
            }
            Violation::NotStronglyConnected { from, unreachable } => {
                write!(f, "not strongly connected: {unreachable} unreachable from {from}")
            }
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.violations.is_empty() {
            return write!(f, "valid");
        }
        let parts: Vec<String> = self.violations.iter().map(|v| v.to_string()).collect();
        write!(f, "{}", parts.join("; "))
    }
}

/// A graph-directed system. Immutable once handed to the analysis functions.
#[derive(Clone, Debug)]
pub struct GdSystem {
    dim: usize,
    vertex_names: Vec<String>,
    edges: Vec<Edge>,
    out_edges: Vec<Vec<EdgeId>>,
    condensation: Vec<CondensationSet>,
    regions: Option<Vec<Region>>,
    scheme: Option<ProbabilityScheme>,
}

impl GdSystem {
    pub fn new<S: Into<String>>(dim: usize, vertex_names: impl IntoIterator<Item = S>) -> Self {
        let vertex_names: Vec<String> = vertex_names.into_iter().map(Into::into).collect();
        let n = vertex_names.len();
        GdSystem {
            dim,
            vertex_names,
            edges: Vec::new(),
            out_edges: vec![Vec::new(); n],
            condensation: vec![CondensationSet::empty(); n],
            regions: None,
            scheme: None,
        }
    }

    /// Single-vertex system (a plain IFS) with the given maps as self-loops.
    pub fn single_vertex(dim: usize, maps: Vec<SimilarityMap>, condensation: CondensationSet) -> Self {
        let mut sys = GdSystem::new(dim, ["v1"]);
        for (k, map) in maps.into_iter().enumerate() {
            sys.add_edge(format!("e{}", k + 1), VertexId(0), VertexId(0), map)
                .expect("vertex 0 exists");
        }
        sys.set_condensation(VertexId(0), condensation)
            .expect("vertex 0 exists");
        sys
    }

    fn check_vertex(&self, v: VertexId) -> Result<()> {
        if v.0 < self.vertex_names.len() {
            Ok(())
        } else {
            Err(Error::UnknownVertex(format!("#{}", v.0)))
        }
    }

    pub fn add_edge(
        &mut self,
        id: impl Into<String>,
        from: VertexId,
        to: VertexId,
        map: SimilarityMap,
    ) -> Result<EdgeId> {
        self.check_vertex(from)?;
        self.check_vertex(to)?;
        let eid = EdgeId(self.edges.len());
        self.edges.push(Edge {
            id: id.into(),
            from,
            to,
            map,
        });
        self.out_edges[from.0].push(eid);
        Ok(eid)
    }

    pub fn set_condensation(&mut self, v: VertexId, set: CondensationSet) -> Result<()> {
        self.check_vertex(v)?;
        self.condensation[v.0] = set;
        Ok(())
    }

    pub fn set_regions(&mut self, regions: Vec<Region>) {
        self.regions = Some(regions);
    }

    pub fn set_scheme(&mut self, scheme: ProbabilityScheme) {
        self.scheme = Some(scheme);
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn vertex_count(&self) -> usize {
        self.vertex_names.len()
    }

    pub fn vertices(&self) -> impl Iterator<Item = VertexId> {
        (0..self.vertex_names.len()).map(VertexId)
    }

    pub fn vertex_name(&self, v: VertexId) -> &str {
        &self.vertex_names[v.0]
    }

    pub fn vertex_by_name(&self, name: &str) -> Option<VertexId> {
        self.vertex_names.iter().position(|n| n == name).map(VertexId)
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn edge(&self, e: EdgeId) -> &Edge {
        &self.edges[e.0]
    }

    pub fn edge_by_id(&self, id: &str) -> Option<EdgeId> {
        self.edges.iter().position(|e| e.id == id).map(EdgeId)
    }

    pub fn out_edges(&self, v: VertexId) -> &[EdgeId] {
        &self.out_edges[v.0]
    }

    pub fn condensation(&self, v: VertexId) -> &CondensationSet {
        &self.condensation[v.0]
    }

    pub fn regions(&self) -> Option<&[Region]> {
        self.regions.as_deref()
    }

    pub fn scheme(&self) -> Option<&ProbabilityScheme> {
        self.scheme.as_ref()
    }

    /// True when every condensation set is empty.
    pub fn is_homogeneous(&self) -> bool {
        self.condensation.iter().all(CondensationSet::is_empty)
    }

    pub fn all_similarities(&self) -> bool {
        self.edges.iter().all(|e| e.map.is_similarity())
    }

    pub fn min_ratio(&self, kind: RatioKind) -> f64 {
        self.edges
            .iter()
            .map(|e| e.map.ratio(kind))
            .fold(f64::INFINITY, f64::min)
    }

    pub fn max_ratio(&self, kind: RatioKind) -> f64 {
        self.edges.iter().map(|e| e.map.ratio(kind)).fold(0.0, f64::max)
    }

    /// Lists every structural problem; an empty report means the system is valid.
    pub fn validate(&self) -> ValidationReport {
        let mut violations = Vec::new();
        let n = self.vertex_count();
        if n == 0 {
            violations.push(Violation::NoVertices);
        }
        if !(1..=3).contains(&self.dim) {
            violations.push(Violation::UnsupportedDimension { dim: self.dim });
        }
        for e in &self.edges {
            let m = &e.map;
            let scale = m.scale.value();
            let lower = m.lower_scale.value();
            if m.dim != self.dim {
                violations.push(Violation::DimensionMismatch {
                    what: format!("edge {}", e.id),
                    expected: self.dim,
                    found: m.dim,
                });
            }
            if !(scale > 0.0) {
                violations.push(Violation::NonPositiveScale { edge: e.id.clone() });
            } else {
                if !(scale < 1.0) {
                    violations.push(Violation::NonContraction {
                        edge: e.id.clone(),
                        scale,
                    });
                }
                if m.dim == self.dim && m.orthogonality_defect() > 1e-9 {
                    violations.push(Violation::NotOrthogonal { edge: e.id.clone() });
                }
            }
            if !(lower > 0.0) {
                violations.push(Violation::NonPositiveLowerScale { edge: e.id.clone() });
            } else if !m.lower_scale.le_within(&m.scale, INEXACT_SLACK) {
                violations.push(Violation::LowerScaleExceedsScale {
                    edge: e.id.clone(),
                    scale,
                    lower_scale: lower,
                });
            }
        }
        for (v, set) in self.condensation.iter().enumerate() {
            for prim in &set.primitives {
                if let Primitive::Polyline(pts) = prim {
                    if pts.is_empty() {
                        violations.push(Violation::DimensionMismatch {
                            what: format!("empty polyline at vertex {}", self.vertex_names[v]),
                            expected: self.dim,
                            found: 0,
                        });
                    }
                }
            }
        }
        for v in 0..n {
            if self.out_edges[v].is_empty() {
                violations.push(Violation::NoOutgoingEdge {
                    vertex: self.vertex_names[v].clone(),
                });
            }
        }
        if n > 0 {
            let forward = self.reachable(VertexId(0), false);
            let backward = self.reachable(VertexId(0), true);
            if let Some(u) = (0..n).find(|&u| !forward[u]) {
                violations.push(Violation::NotStronglyConnected {
                    from: self.vertex_names[0].clone(),
                    unreachable: self.vertex_names[u].clone(),
                });
            } else if let Some(u) = (0..n).find(|&u| !backward[u]) {
                violations.push(Violation::NotStronglyConnected {
                    from: self.vertex_names[u].clone(),
                    unreachable: self.vertex_names[0].clone(),
                });
            }
        }
        ValidationReport { violations }
    }

    pub(crate) fn ensure_valid(&self) -> Result<()> {
        let report = self.validate();
        if report.is_valid() {
            Ok(())
        } else {
            Err(Error::InvalidSystem(report))
        }
    }

    fn reachable(&self, start: VertexId, reversed: bool) -> Vec<bool> {
        let n = self.vertex_count();
        let mut seen = vec![false; n];
        let mut queue = VecDeque::from([start.0]);
        seen[start.0] = true;
        while let Some(u) = queue.pop_front() {
            for e in &self.edges {
                let (a, b) = if reversed {
                    (e.to.0, e.from.0)
                } else {
                    (e.from.0, e.to.0)
                };
                if a == u && !seen[b] {
                    seen[b] = true;
                    queue.push_back(b);
                }
            }
        }
        seen
    }

    /// Shortest cycle through `v`, earliest in edge order among the shortest.
    pub fn first_cycle(&self, v: VertexId) -> Option<Vec<EdgeId>> {
        let n = self.vertex_count();
        let mut parent: Vec<Option<EdgeId>> = vec![None; n];
        let mut seen = vec![false; n];
        let mut queue = VecDeque::from([v]);
        seen[v.0] = true;
        while let Some(u) = queue.pop_front() {
            for &eid in self.out_edges(u) {
                let target = self.edge(eid).to;
                if target == v {
                    let mut path = vec![eid];
                    let mut cur = u;
                    while cur != v {
                        let pe = parent[cur.0].expect("BFS tree");
                        path.push(pe);
                        cur = self.edge(pe).from;
                    }
                    path.reverse();
                    return Some(path);
                }
                if !seen[target.0] {
                    seen[target.0] = true;
                    parent[target.0] = Some(eid);
                    queue.push_back(target);
                }
            }
        }
        None
    }

    /// Seed point per vertex: the fixed point of the map of [`Self::first_cycle`].
    /// It lies in the homogeneous attractor at that vertex.
    pub fn seed_points(&self) -> Result<Vec<Point>> {
        self.vertices()
            .map(|v| {
                let cycle = self
                    .first_cycle(v)
                    .ok_or_else(|| Error::InvalidSystem(self.validate()))?;
                let path = PathCode::new(self, cycle)?;
                Ok(compose_path(&path, self)?.fixed_point())
            })
            .collect()
    }

    /// Radius of a ball about the origin containing every attractor and
    /// condensation set: the least `R` with `ρ_e R + |b_e| ≤ R` for all edges
    /// and `R ≥ |c|` for all condensation points.
    pub fn bounding_radius(&self) -> f64 {
        let from_maps = self
            .edges
            .iter()
            .map(|e| {
                let b = [e.map.shift[0], e.map.shift[1], e.map.shift[2]];
                norm(&b) / (1.0 - e.map.scale.value())
            })
            .fold(0.0, f64::max);
        let from_sets = self
            .condensation
            .iter()
            .map(|c| c.radius(self.dim))
            .fold(0.0, f64::max);
        from_maps.max(from_sets)
    }

    /// Stable digest of the numeric content of the system.
    pub fn fingerprint(&self) -> String {
        use sha2::{Digest, Sha256};
        let mut h = Sha256::new();
        let push_f = |h: &mut Sha256, x: f64| h.update(x.to_bits().to_le_bytes());
        h.update((self.dim as u64).to_le_bytes());
        for name in &self.vertex_names {
            h.update(name.as_bytes());
            h.update([0u8]);
        }
        for e in &self.edges {
            h.update(e.id.as_bytes());
            h.update([0u8]);
            h.update((e.from.0 as u64).to_le_bytes());
            h.update((e.to.0 as u64).to_le_bytes());
            push_f(&mut h, e.map.scale.value());
            push_f(&mut h, e.map.lower_scale.value());
            for row in &e.map.lin {
                for &x in row {
                    push_f(&mut h, x);
                }
            }
            for &x in &e.map.shift {
                push_f(&mut h, x);
            }
        }
        for set in &self.condensation {
            h.update(b"C");
            for prim in &set.primitives {
                let (tag, pts) = match prim {
                    Primitive::Point(p) => (0u8, vec![*p]),
                    Primitive::Segment(a, b) => (1, vec![*a, *b]),
                    Primitive::Box { min, max } => (2, vec![*min, *max]),
                    Primitive::Polyline(v) => (3, v.clone()),
                };
                h.update([tag]);
                for c in pts {
                    for x in coords_value(&c) {
                        push_f(&mut h, x);
                    }
                }
            }
        }
        hex::encode(h.finalize())
    }
}

/// A finite path `e1 … ek` with `t(e_m) = i(e_{m+1})`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PathCode {
    pub edges: Vec<EdgeId>,
    pub ratio: f64,
    pub lower_ratio: f64,
    pub start: VertexId,
    pub end: VertexId,
}

impl PathCode {
    pub fn new(sys: &GdSystem, edges: Vec<EdgeId>) -> Result<Self> {
        let first = *edges
            .first()
            .ok_or_else(|| Error::InvalidParameter("path must contain at least one edge".into()))?;
        for w in edges.windows(2) {
            let (a, b) = (sys.edge(w[0]), sys.edge(w[1]));
            if a.to != b.from {
                return Err(Error::NonComposablePath {
                    prev: a.id.clone(),
                    next: b.id.clone(),
                });
            }
        }
        let ratio = edges
            .iter()
            .fold(1.0, |r, &e| r * sys.edge(e).map.ratio(RatioKind::Upper));
        let lower_ratio = edges
            .iter()
            .fold(1.0, |r, &e| r * sys.edge(e).map.ratio(RatioKind::Lower));
        let start = sys.edge(first).from;
        let end = sys.edge(*edges.last().expect("nonempty")).to;
        Ok(PathCode {
            edges,
            ratio,
            lower_ratio,
            start,
            end,
        })
    }

    pub fn len(&self) -> usize {
        self.edges.len()
    }

    pub fn is_empty(&self) -> bool {
        self.edges.is_empty()
    }

    pub fn ratio_of(&self, kind: RatioKind) -> f64 {
        match kind {
            RatioKind::Upper => self.ratio,
            RatioKind::Lower => self.lower_ratio,
        }
    }

    /// The path with its last edge removed, or `None` for a single edge.
    pub fn parent(&self, sys: &GdSystem) -> Option<PathCode> {
        if self.edges.len() <= 1 {
            return None;
        }
        PathCode::new(sys, self.edges[..self.edges.len() - 1].to_vec()).ok()
    }

    pub fn is_prefix_of(&self, other: &PathCode) -> bool {
        other.edges.len() >= self.edges.len() && other.edges[..self.edges.len()] == self.edges[..]
    }
}

/// Composes the edge maps along `path` into `f_e1 ∘ … ∘ f_ek`.
pub fn compose_path(path: &PathCode, sys: &GdSystem) -> Result<SimilarityMap> {
    for w in path.edges.windows(2) {
        let (a, b) = (sys.edge(w[0]), sys.edge(w[1]));
        if a.to != b.from {
            return Err(Error::NonComposablePath {
                prev: a.id.clone(),
                next: b.id.clone(),
            });
        }
    }
    let mut acc = SimilarityMap::identity(sys.dim());
    for &e in &path.edges {
        acc = acc.compose(&sys.edge(e).map);
    }
    Ok(acc)
}

pub(crate) fn check_delta(delta: f64) -> Result<()> {
    if delta > 0.0 && delta <= 1.0 {
        Ok(())
    } else {
        Err(Error::InvalidDelta(delta))
    }
}

/// Relative slack under which a path ratio still counts as equal to `δ`, so
/// that products like `1/2 · 1/10` are not pushed below `1/20` by rounding.
pub const RATIO_SLACK: f64 = 1e-12;

/// Depth-first traversal of all paths from a prefix whose ratio stays `≥ δ`.
///
/// `on_interior` sees every path with ratio `≥ δ`, `on_leaf` every path whose
/// ratio first drops below `δ`. `state` is threaded along edges with `step`.
pub(crate) struct CutWalk<'a, S, Step> {
    pub sys: &'a GdSystem,
    pub kind: RatioKind,
    threshold: f64,
    pub max_depth: usize,
    pub step: Step,
    pub _state: std::marker::PhantomData<S>,
}

impl<'a, S, Step> CutWalk<'a, S, Step>
where
    Step: Fn(&S, &Edge) -> S + Sync,
    S: Send + Sync,
{
    pub fn new(sys: &'a GdSystem, kind: RatioKind, delta: f64, step: Step) -> Self {
        let rho_max = sys.max_ratio(kind);
        let max_depth = if rho_max <= 0.0 || delta >= 1.0 {
            1
        } else {
            (delta.ln() / rho_max.ln()).ceil() as usize
        } + 2;
        CutWalk {
            sys,
            kind,
            threshold: delta * (1.0 - RATIO_SLACK),
            max_depth,
            step,
            _state: std::marker::PhantomData,
        }
    }

    fn descend<I, L>(
        &self,
        vertex: VertexId,
        ratio: f64,
        path: &mut Vec<EdgeId>,
        state: &S,
        on_interior: &mut I,
        on_leaf: &mut L,
    ) where
        I: FnMut(&[EdgeId], f64, &S),
        L: FnMut(&[EdgeId], f64, &S),
    {
        for &eid in self.sys.out_edges(vertex) {
            let edge = self.sys.edge(eid);
            let r = ratio * edge.map.ratio(self.kind);
            let next = (self.step)(state, edge);
            path.push(eid);
            if r < self.threshold || path.len() >= self.max_depth {
                on_leaf(path, r, &next);
            } else {
                on_interior(path, r, &next);
                self.descend(edge.to, r, path, &next, on_interior, on_leaf);
            }
            path.pop();
        }
    }

    /// Runs the traversal from `vertex`, splitting work over first edges.
    /// `make` is called for every visited path (`leaf` tells which kind) and
    /// pushes its output; pieces are concatenated in edge order.
    pub fn run_split<T, F>(&self, vertex: VertexId, root: &S, make: F) -> Vec<T>
    where
        T: Send,
        F: Fn(&[EdgeId], f64, &S, bool, &mut Vec<T>) + Sync,
    {
        let firsts: Vec<EdgeId> = self.sys.out_edges(vertex).to_vec();
        let parts: Vec<Vec<T>> = firsts
            .par_iter()
            .map(|&eid| {
                let mut out = Vec::new();
                let edge = self.sys.edge(eid);
                let r = edge.map.ratio(self.kind);
                let st = (self.step)(root, edge);
                let mut path = vec![eid];
                if r < self.threshold || self.max_depth <= 1 {
                    make(&path, r, &st, true, &mut out);
                } else {
                    make(&path, r, &st, false, &mut out);
                    let out_cell = std::cell::RefCell::new(&mut out);
                    let mut interior = |p: &[EdgeId], r: f64, s: &S| {
                        make(p, r, s, false, &mut out_cell.borrow_mut())
                    };
                    let mut leaf = |p: &[EdgeId], r: f64, s: &S| {
                        make(p, r, s, true, &mut out_cell.borrow_mut())
                    };
                    self.descend(edge.to, r, &mut path, &st, &mut interior, &mut leaf);
                }
                out
            })
            .collect();
        parts.into_iter().flatten().collect()
    }
}

/// Paths from `vertex` whose ratio first drops below `δ`:
/// `ρ(e) < δ ≤ ρ(e⁻)`, with the empty prefix counting as ratio 1. Ratios
/// within [`RATIO_SLACK`] of `δ` count as equal to it.
/// The result is an antichain covering every infinite path from `vertex`,
/// listed in lexicographic edge order.
pub fn cross_cut(
    sys: &GdSystem,
    vertex: VertexId,
    delta: f64,
    kind: RatioKind,
) -> Result<Vec<PathCode>> {
    check_delta(delta)?;
    sys.ensure_valid()?;
    sys.check_vertex(vertex)?;
    let walk = CutWalk::new(sys, kind, delta, |_: &(), _: &Edge| ());
    let paths: Vec<Vec<EdgeId>> = walk.run_split(vertex, &(), |path, _r, _s, leaf, out| {
        if leaf {
            out.push(path.to_vec());
        }
    });
    paths.into_iter().map(|p| PathCode::new(sys, p)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) fn five_edge() -> GdSystem {
        let mut sys = GdSystem::new(1, ["v1", "v2"]);
        let (v1, v2) = (VertexId(0), VertexId(1));
        let m = |d: i64| SimilarityMap::line(Real::ratio(1, d), false, Real::int(0));
        sys.add_edge("e1", v1, v2, m(2)).unwrap();
        sys.add_edge("e2", v1, v1, m(4)).unwrap();
        sys.add_edge("e3", v1, v2, m(6)).unwrap();
        sys.add_edge("e4", v2, v2, m(8)).unwrap();
        sys.add_edge("e5", v2, v1, m(10)).unwrap();
        sys
    }

    fn two_halves() -> GdSystem {
        GdSystem::single_vertex(
            1,
            vec![
                SimilarityMap::line(Real::ratio(1, 2), false, Real::int(0)),
                SimilarityMap::line(Real::ratio(1, 2), false, Real::ratio(1, 2)),
            ],
            CondensationSet::empty(),
        )
    }

    #[test]
    fn five_edge_is_valid() {
        assert!(five_edge().validate().is_valid());
    }

    #[test]
    fn single_loop_is_valid() {
        let sys = GdSystem::single_vertex(
            1,
            vec![SimilarityMap::line(Real::ratio(1, 2), false, Real::int(0))],
            CondensationSet::empty(),
        );
        assert!(sys.validate().is_valid());
    }

    #[test]
    fn one_way_graph_is_not_strongly_connected() {
        let mut sys = GdSystem::new(1, ["v1", "v2"]);
        let m = SimilarityMap::line(Real::ratio(1, 2), false, Real::int(0));
        sys.add_edge("a", VertexId(0), VertexId(1), m).unwrap();
        let report = sys.validate();
        assert!(report
            .violations
            .iter()
            .any(|v| matches!(v, Violation::NotStronglyConnected { .. })));
        assert!(report
            .violations
            .iter()
            .any(|v| matches!(v, Violation::NoOutgoingEdge { .. })));
    }

    #[test]
    fn bad_scales_are_reported() {
        let sys = GdSystem::single_vertex(
            1,
            vec![
                SimilarityMap::line(Real::int(1), false, Real::int(0)),
                SimilarityMap::line(Real::int(0), false, Real::int(0)),
                SimilarityMap::line(Real::ratio(1, 3), false, Real::int(0))
                    .with_lower_scale(Real::ratio(1, 2)),
            ],
            CondensationSet::empty(),
        );
        let v = sys.validate().violations;
        assert!(v.iter().any(|x| matches!(x, Violation::NonContraction { .. })));
        assert!(v.iter().any(|x| matches!(x, Violation::NonPositiveScale { .. })));
        assert!(v.iter().any(|x| matches!(x, Violation::LowerScaleExceedsScale { .. })));
    }

    #[test]
    fn dimension_mismatch() {
        let mut sys = GdSystem::new(2, ["v"]);
        sys.add_edge(
            "e",
            VertexId(0),
            VertexId(0),
            SimilarityMap::line(Real::ratio(1, 2), false, Real::int(0)),
        )
        .unwrap();
        assert!(sys
            .validate()
            .violations
            .iter()
            .any(|x| matches!(x, Violation::DimensionMismatch { .. })));
    }

    #[test]
    fn compose_two_halves() {
        let sys = two_halves();
        let path = PathCode::new(&sys, vec![EdgeId(0), EdgeId(1)]).unwrap();
        let f = compose_path(&path, &sys).unwrap();
        assert_eq!(f.scale(), Real::ratio(1, 4));
        assert_eq!(f.translation()[0], Real::ratio(1, 4));
        assert_eq!(f.linear()[0][0], Real::ratio(1, 4));
        assert_eq!(f.apply(&[1.0, 0.0, 0.0])[0], 0.5);
    }

    #[test]
    fn single_edge_path_is_the_edge_map() {
        let sys = two_halves();
        let path = PathCode::new(&sys, vec![EdgeId(1)]).unwrap();
        let f = compose_path(&path, &sys).unwrap();
        for x in [0.0, 0.3, 1.7] {
            assert_eq!(f.apply(&[x, 0.0, 0.0]), sys.edge(EdgeId(1)).map.apply(&[x, 0.0, 0.0]));
        }
    }

    #[test]
    fn five_edge_cycle_composes_to_one_twentieth() {
        let sys = five_edge();
        // e5: v2 -> v1, then e1: v1 -> v2
        let path = PathCode::new(&sys, vec![EdgeId(4), EdgeId(0)]).unwrap();
        assert_eq!(path.start, VertexId(1));
        assert_eq!(path.end, VertexId(1));
        let f = compose_path(&path, &sys).unwrap();
        assert_eq!(f.scale(), Real::ratio(1, 20));
        let direct = sys.edge(EdgeId(4)).map.apply(&sys.edge(EdgeId(0)).map.apply(&[3.0, 0.0, 0.0]));
        assert!((f.apply(&[3.0, 0.0, 0.0])[0] - direct[0]).abs() < 1e-15);
        assert!((direct[0] - 3.0 / 20.0).abs() < 1e-15);
    }

    #[test]
    fn non_composable_path() {
        let sys = five_edge();
        // e1 ends at v2 but e2 starts at v1
        let err = PathCode::new(&sys, vec![EdgeId(0), EdgeId(1)]).unwrap_err();
        assert!(matches!(err, Error::NonComposablePath { .. }));
    }

    #[test]
    fn cross_cut_small_cases() {
        let sys = two_halves();
        let cut = cross_cut(&sys, VertexId(0), 0.3, RatioKind::Upper).unwrap();
        assert_eq!(cut.len(), 4);
        assert!(cut.iter().all(|p| p.len() == 2 && p.ratio == 0.25));
        let cut = cross_cut(&sys, VertexId(0), 0.6, RatioKind::Upper).unwrap();
        assert_eq!(cut.len(), 2);
        assert!(cut.iter().all(|p| p.len() == 1));
    }

    #[test]
    fn cross_cut_rejects_bad_delta() {
        let sys = two_halves();
        for d in [0.0, -0.5, 1.5] {
            assert!(matches!(
                cross_cut(&sys, VertexId(0), d, RatioKind::Upper),
                Err(Error::InvalidDelta(_))
            ));
        }
    }

    #[test]
    fn plane_rotation_is_exact_for_right_angles() {
        let f = SimilarityMap::plane(Real::ratio(1, 2), 90.0, false, [Real::int(0), Real::int(0)]);
        let img = f.apply_exact(&[Real::int(1), Real::int(0), Real::int(0)]);
        assert_eq!(img[0], Real::int(0));
        assert_eq!(img[1], Real::ratio(1, 2));
        assert!(f.preserves_orientation());
        let g = SimilarityMap::plane(Real::ratio(1, 2), 0.0, true, [Real::int(0), Real::int(0)]);
        assert!(!g.preserves_orientation());
    }

    #[test]
    fn fixed_point_of_affine_map() {
        let f = SimilarityMap::line(Real::ratio(1, 3), false, Real::ratio(2, 3));
        assert!((f.fixed_point()[0] - 1.0).abs() < 1e-15);
        let g = SimilarityMap::plane(Real::ratio(1, 2), 90.0, false, [Real::int(1), Real::int(0)]);
        let p = g.fixed_point();
        let q = g.apply(&p);
        assert!(dist(&p, &q) < 1e-14);
    }

    #[test]
    fn seeds_are_cycle_fixed_points() {
        let sys = five_edge();
        let seeds = sys.seed_points().unwrap();
        assert_eq!(seeds, vec![[0.0; 3], [0.0; 3]]);
        assert_eq!(sys.first_cycle(VertexId(0)), Some(vec![EdgeId(1)]));
    }
}
