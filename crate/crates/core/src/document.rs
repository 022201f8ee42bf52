//! JSON system documents and parameterized families of them.
//!
//! ```json
//! {
//!   "ambient_dim": 1,
//!   "vertices": ["v1"],
//!   "edges": [
//!     { "id": "e1", "from": "v1", "to": "v1", "scale": "1/3", "translate": [0] },
//!     { "id": "e2", "from": "v1", "to": "v1", "scale": "1/3", "translate": ["2/3"] }
//!   ],
//!   "condensation": { "v1": [ { "segment": [["1/3"], ["2/3"]] } ] },
//!   "open_regions": { "v1": { "interval": [0, 1] } },
//!   "probabilities": { "edges": { "e1": 0.4, "e2": 0.4 }, "stop": { "v1": 0.2 } }
//! }
//! ```
//!
//! Numbers may be JSON numbers or strings holding a decimal, a fraction or an
//! arithmetic expression (`"1/sqrt(2)"`). Rational input stays exact. In a
//! family template, strings may also use the family parameter.
//!
//! Edge fields: `scale`, optional `lower_scale` (defaults to `scale`),
//! `translate`, and the orthogonal part: `reflect` (d = 1 flips the line;
//! d = 2 reflects in the x-axis before rotating), `rotation_deg` (d = 2, or
//! 0/180 for d = 1) and `orthonormal` (d = 3, a 3×3 table).
//!
//! Condensation primitives: `{"point": p}`, `{"segment": [a, b]}`,
//! `{"box": {"min": a, "max": b}}`, `{"polyline": [p, …]}`.

use std::collections::{BTreeMap, HashMap};
use std::path::Path;

use serde::Deserialize;

use crate::error::{Error, Result};
use crate::measure::ProbabilityScheme;
use crate::model::{Coords, CondensationSet, GdSystem, Primitive, SimilarityMap, VertexId};
use crate::numeric::{eval_expr, Real};
use crate::separation::Region;

#[derive(Clone, Debug, Deserialize)]
#[serde(untagged)]
pub enum Num {
    Number(f64),
    Text(String),
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EdgeDoc {
    pub id: String,
    pub from: String,
    pub to: String,
    pub scale: Num,
    #[serde(default)]
    pub lower_scale: Option<Num>,
    #[serde(default)]
    pub rotation_deg: Option<Num>,
    #[serde(default)]
    pub reflect: bool,
    #[serde(default)]
    pub orthonormal: Option<Vec<Vec<Num>>>,
    #[serde(default)]
    pub translate: Option<Vec<Num>>,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoxDoc {
    pub min: Vec<Num>,
    pub max: Vec<Num>,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "lowercase")]
pub enum PrimitiveDoc {
    Point(Vec<Num>),
    Segment([Vec<Num>; 2]),
    Box(BoxDoc),
    Polyline(Vec<Vec<Num>>),
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "lowercase")]
pub enum RegionDoc {
    Interval([Num; 2]),
    Polygon(Vec<[Num; 2]>),
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProbabilitiesDoc {
    pub edges: BTreeMap<String, Num>,
    #[serde(default)]
    pub stop: BTreeMap<String, Num>,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemDocument {
    pub ambient_dim: usize,
    pub vertices: Vec<String>,
    pub edges: Vec<EdgeDoc>,
    #[serde(default)]
    pub condensation: BTreeMap<String, Vec<PrimitiveDoc>>,
    #[serde(default)]
    pub open_regions: Option<BTreeMap<String, RegionDoc>>,
    #[serde(default)]
    pub probabilities: Option<ProbabilitiesDoc>,
}

/// A system document whose numbers may use a free parameter, with an
/// optional limit system.
#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FamilyDocument {
    pub parameter: String,
    pub template: SystemDocument,
    #[serde(default)]
    pub limit: Option<SystemDocument>,
}

struct Ctx<'a> {
    vars: &'a HashMap<String, Real>,
}

impl Ctx<'_> {
    fn num(&self, n: &Num, field: &str) -> Result<Real> {
        match n {
            Num::Number(x) if x.is_finite() => Ok(Real::from_f64_literal(*x)),
            Num::Number(x) => Err(Error::parse(field, format!("{x} is not finite"))),
            Num::Text(t) => eval_expr(t, self.vars).map_err(|m| Error::parse(field, m)),
        }
    }

    fn coords(&self, v: &[Num], dim: usize, field: &str) -> Result<Coords> {
        if v.len() != dim {
            return Err(Error::parse(
                field,
                format!("expected {dim} coordinates, found {}", v.len()),
            ));
        }
        let mut out = [Real::int(0); 3];
        for (k, x) in v.iter().enumerate() {
            out[k] = self.num(x, &format!("{field}[{k}]"))?;
        }
        Ok(out)
    }

    fn map(&self, e: &EdgeDoc, dim: usize, field: &str) -> Result<SimilarityMap> {
        let scale = self.num(&e.scale, &format!("{field}.scale"))?;
        let translation = match &e.translate {
            Some(t) => self.coords(t, dim, &format!("{field}.translate"))?,
            None => [Real::int(0); 3],
        };
        let rotation = match &e.rotation_deg {
            Some(r) => self.num(r, &format!("{field}.rotation_deg"))?.value(),
            None => 0.0,
        };
        if e.orthonormal.is_some() && dim != 3 {
            return Err(Error::parse(
                format!("{field}.orthonormal"),
                "only allowed when ambient_dim is 3",
            ));
        }
        let map = match dim {
            1 => {
                let flip = match rotation.rem_euclid(360.0) {
                    r if r == 0.0 => e.reflect,
                    r if r == 180.0 => !e.reflect,
                    _ => {
                        return Err(Error::parse(
                            format!("{field}.rotation_deg"),
                            "must be 0 or 180 on the line",
                        ))
                    }
                };
                SimilarityMap::line(scale, flip, translation[0])
            }
            2 => SimilarityMap::plane(scale, rotation, e.reflect, [translation[0], translation[1]]),
            3 => {
                if e.rotation_deg.is_some() || e.reflect {
                    return Err(Error::parse(
                        field,
                        "use orthonormal, not rotation_deg or reflect, when ambient_dim is 3",
                    ));
                }
                let mut o = [[Real::int(0); 3]; 3];
                match &e.orthonormal {
                    Some(rows) => {
                        if rows.len() != 3 {
                            return Err(Error::parse(format!("{field}.orthonormal"), "expected 3 rows"));
                        }
                        for (i, row) in rows.iter().enumerate() {
                            o[i] = self.coords(row, 3, &format!("{field}.orthonormal[{i}]"))?;
                        }
                    }
                    None => {
                        for (i, row) in o.iter_mut().enumerate() {
                            row[i] = Real::int(1);
                        }
                    }
                }
                SimilarityMap::space(scale, o, translation)
            }
            d => return Err(Error::parse("ambient_dim", format!("{d} is not 1, 2 or 3"))),
        };
        Ok(match &e.lower_scale {
            Some(l) => map.with_lower_scale(self.num(l, &format!("{field}.lower_scale"))?),
            None => map,
        })
    }

    fn primitive(&self, p: &PrimitiveDoc, dim: usize, field: &str) -> Result<Primitive> {
        Ok(match p {
            PrimitiveDoc::Point(v) => Primitive::Point(self.coords(v, dim, &format!("{field}.point"))?),
            PrimitiveDoc::Segment([a, b]) => Primitive::Segment(
                self.coords(a, dim, &format!("{field}.segment[0]"))?,
                self.coords(b, dim, &format!("{field}.segment[1]"))?,
            ),
            PrimitiveDoc::Box(b) => {
                let min = self.coords(&b.min, dim, &format!("{field}.box.min"))?;
                let max = self.coords(&b.max, dim, &format!("{field}.box.max"))?;
                if (0..dim).any(|k| min[k].value() > max[k].value()) {
                    return Err(Error::parse(format!("{field}.box"), "min exceeds max"));
                }
                Primitive::Box { min, max }
            }
            PrimitiveDoc::Polyline(pts) => {
                if pts.is_empty() {
                    return Err(Error::parse(format!("{field}.polyline"), "no vertices"));
                }
                Primitive::Polyline(
                    pts.iter()
                        .enumerate()
                        .map(|(k, p)| self.coords(p, dim, &format!("{field}.polyline[{k}]")))
                        .collect::<Result<_>>()?,
                )
            }
        })
    }

    fn region(&self, r: &RegionDoc, dim: usize, field: &str) -> Result<Region> {
        let region = match r {
            RegionDoc::Interval([a, b]) => {
                if dim != 1 {
                    return Err(Error::parse(field, "intervals need ambient_dim 1"));
                }
                Region::Interval(
                    self.num(a, &format!("{field}.interval[0]"))?,
                    self.num(b, &format!("{field}.interval[1]"))?,
                )
            }
            RegionDoc::Polygon(v) => {
                if dim != 2 {
                    return Err(Error::parse(field, "polygons need ambient_dim 2"));
                }
                Region::Polygon(
                    v.iter()
                        .enumerate()
                        .map(|(k, [x, y])| {
                            let f = format!("{field}.polygon[{k}]");
                            Ok([self.num(x, &f)?, self.num(y, &f)?])
                        })
                        .collect::<Result<_>>()?,
                )
            }
        };
        region
            .check()
            .map_err(|e| Error::parse(field, e.to_string()))?;
        Ok(region)
    }
}

impl SystemDocument {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| {
            Error::parse(format!("line {} column {}", e.line(), e.column()), e.to_string())
        })
    }

    /// Builds the system without validating it.
    pub fn build_unchecked(&self, vars: &HashMap<String, Real>) -> Result<GdSystem> {
        let ctx = Ctx { vars };
        let dim = self.ambient_dim;
        if !(1..=3).contains(&dim) {
            return Err(Error::parse("ambient_dim", format!("{dim} is not 1, 2 or 3")));
        }
        let mut sys = GdSystem::new(dim, self.vertices.iter().cloned());
        for (k, name) in self.vertices.iter().enumerate() {
            if self.vertices[..k].contains(name) {
                return Err(Error::parse(format!("vertices[{k}]"), format!("duplicate vertex {name}")));
            }
        }
        let names = &self.vertices;
        let vertex = |name: &str, field: String| {
            names
                .iter()
                .position(|n| n == name)
                .map(VertexId)
                .ok_or_else(|| Error::parse(field, format!("unknown vertex {name}")))
        };
        let mut edges = Vec::with_capacity(self.edges.len());
        for (k, e) in self.edges.iter().enumerate() {
            let field = format!("edges[{k}]");
            if self.edges[..k].iter().any(|o| o.id == e.id) {
                return Err(Error::parse(format!("{field}.id"), format!("duplicate edge {}", e.id)));
            }
            let from = vertex(&e.from, format!("{field}.from"))?;
            let to = vertex(&e.to, format!("{field}.to"))?;
            edges.push((e.id.clone(), from, to, ctx.map(e, dim, &field)?));
        }
        for (id, from, to, map) in edges {
            sys.add_edge(id, from, to, map)?;
        }
        let mut sets: Vec<(VertexId, CondensationSet)> = Vec::new();
        for (name, prims) in &self.condensation {
            let v = vertex(name, format!("condensation.{name}"))?;
            let prims = prims
                .iter()
                .enumerate()
                .map(|(k, p)| ctx.primitive(p, dim, &format!("condensation.{name}[{k}]")))
                .collect::<Result<Vec<_>>>()?;
            sets.push((v, CondensationSet::new(prims)));
        }
        let regions = match &self.open_regions {
            Some(map) => {
                let mut out = Vec::with_capacity(sys.vertex_count());
                for name in &self.vertices {
                    let r = map.get(name).ok_or_else(|| {
                        Error::parse("open_regions", format!("no region for vertex {name}"))
                    })?;
                    out.push(ctx.region(r, dim, &format!("open_regions.{name}"))?);
                }
                if let Some(extra) = map.keys().find(|k| !self.vertices.contains(k)) {
                    return Err(Error::parse(
                        format!("open_regions.{extra}"),
                        format!("unknown vertex {extra}"),
                    ));
                }
                Some(out)
            }
            None => None,
        };
        let scheme = match &self.probabilities {
            Some(p) => {
                let mut edge_weights = vec![0.0; self.edges.len()];
                for (id, w) in &p.edges {
                    let e = sys.edge_by_id(id).ok_or_else(|| {
                        Error::parse(format!("probabilities.edges.{id}"), format!("unknown edge {id}"))
                    })?;
                    edge_weights[e.0] = ctx.num(w, &format!("probabilities.edges.{id}"))?.value();
                }
                let mut stop_weights = vec![0.0; self.vertices.len()];
                for (name, w) in &p.stop {
                    let v = vertex(name, format!("probabilities.stop.{name}"))?;
                    stop_weights[v.0] = ctx.num(w, &format!("probabilities.stop.{name}"))?.value();
                }
                Some(ProbabilityScheme::new(edge_weights, stop_weights))
            }
            None => None,
        };
        for (v, set) in sets {
            sys.set_condensation(v, set)?;
        }
        if let Some(r) = regions {
            sys.set_regions(r);
        }
        if let Some(s) = scheme {
            sys.set_scheme(s);
        }
        Ok(sys)
    }

    /// Builds and validates the system, including its probability scheme.
    pub fn build(&self, vars: &HashMap<String, Real>) -> Result<GdSystem> {
        let sys = self.build_unchecked(vars)?;
        sys.ensure_valid()?;
        if let Some(s) = sys.scheme() {
            s.validate(&sys)?;
        }
        Ok(sys)
    }
}

/// Parses and validates a system document.
pub fn parse_system(text: &str) -> Result<GdSystem> {
    SystemDocument::from_json(text)?.build(&HashMap::new())
}

pub fn load_system(path: impl AsRef<Path>) -> Result<GdSystem> {
    parse_system(&std::fs::read_to_string(path)?)
}

impl FamilyDocument {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| {
            Error::parse(format!("line {} column {}", e.line(), e.column()), e.to_string())
        })
    }

    /// The member at parameter value `n`, validated.
    pub fn instantiate(&self, n: i64) -> Result<GdSystem> {
        let vars = HashMap::from([(self.parameter.clone(), Real::int(n))]);
        self.template.build(&vars)
    }

    /// The limit system, validated. `None` when the family declares none.
    pub fn limit_system(&self) -> Option<Result<GdSystem>> {
        self.limit.as_ref().map(|d| d.build(&HashMap::new()))
    }
}

pub fn load_family(path: impl AsRef<Path>) -> Result<FamilyDocument> {
    FamilyDocument::from_json(&std::fs::read_to_string(path)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{EdgeId, Violation};

    const CANTOR: &str = r#"{
        "ambient_dim": 1,
        "vertices": ["v1"],
        "edges": [
            {"id": "e1", "from": "v1", "to": "v1", "scale": "1/3", "translate": [0]},
            {"id": "e2", "from": "v1", "to": "v1", "scale": "1/3", "translate": ["2/3"]}
        ],
        "condensation": {"v1": [{"segment": [["1/3"], ["2/3"]]}]},
        "open_regions": {"v1": {"interval": [0, 1]}}
    }"#;

    #[test]
    fn parses_exact_rationals() {
        let sys = parse_system(CANTOR).unwrap();
        assert_eq!(sys.edges().len(), 2);
        assert_eq!(sys.edge(EdgeId(1)).map.scale(), Real::ratio(1, 3));
        assert_eq!(sys.edge(EdgeId(1)).map.translation()[0], Real::ratio(2, 3));
        assert_eq!(sys.regions().unwrap().len(), 1);
        assert!(!sys.is_homogeneous());
    }

    #[test]
    fn decimal_numbers_are_exact() {
        let text = CANTOR.replace("\"1/3\", \"translate\": [0]", "0.25, \"translate\": [0]");
        let sys = parse_system(&text).unwrap();
        assert_eq!(sys.edge(EdgeId(0)).map.scale(), Real::ratio(1, 4));
    }

    #[test]
    fn unknown_field_is_rejected() {
        let text = CANTOR.replace("\"ambient_dim\": 1,", "\"ambient_dim\": 1, \"colour\": 3,");
        assert!(matches!(parse_system(&text), Err(Error::Parse { .. })));
    }

    #[test]
    fn unknown_vertex_is_a_parse_error() {
        let text = CANTOR.replace("\"to\": \"v1\", \"scale\": \"1/3\", \"translate\": [0]", "\"to\": \"v9\", \"scale\": \"1/3\", \"translate\": [0]");
        let err = parse_system(&text).unwrap_err();
        let Error::Parse { context, message } = err else { panic!("{err}") };
        assert_eq!(context, "edges[0].to");
        assert!(message.contains("v9"));
    }

    #[test]
    fn non_contraction_is_a_validation_error() {
        let text = CANTOR.replace("\"scale\": \"1/3\", \"translate\": [0]", "\"scale\": 1.0, \"translate\": [0]");
        let err = parse_system(&text).unwrap_err();
        let Error::InvalidSystem(report) = err else { panic!("{err}") };
        assert!(matches!(report.violations[0], Violation::NonContraction { .. }));
    }

    #[test]
    fn syntax_error_reports_position() {
        let err = parse_system("{\"ambient_dim\": 1,\n \"vertices\": [}").unwrap_err();
        let Error::Parse { context, .. } = err else { panic!() };
        assert!(context.starts_with("line 2"));
    }

    #[test]
    fn family_instantiation() {
        let fam = FamilyDocument::from_json(
            r#"{
            "parameter": "n",
            "template": {
                "ambient_dim": 1,
                "vertices": ["v1"],
                "edges": [
                    {"id": "f1", "from": "v1", "to": "v1", "scale": "1/n"},
                    {"id": "f2", "from": "v1", "to": "v1", "scale": "(n-1)/n", "translate": ["1/n"]}
                ]
            }
        }"#,
        )
        .unwrap();
        let sys = fam.instantiate(4).unwrap();
        assert_eq!(sys.edge(EdgeId(1)).map.scale(), Real::ratio(3, 4));
        assert_eq!(sys.edge(EdgeId(1)).map.translation()[0], Real::ratio(1, 4));
        assert!(fam.limit_system().is_none());
    }

    #[test]
    fn planar_edges_and_regions() {
        let sys = parse_system(
            r#"{
            "ambient_dim": 2,
            "vertices": ["a"],
            "edges": [
                {"id": "s1", "from": "a", "to": "a", "scale": "1/sqrt(2)", "rotation_deg": 45},
                {"id": "s2", "from": "a", "to": "a", "scale": "1/2", "translate": ["1/2", 0], "reflect": true}
            ],
            "condensation": {"a": [{"box": {"min": [0, 0], "max": [1, "1/2"]}}]},
            "open_regions": {"a": {"polygon": [[0, 0], [1, 0], [1, 1], [0, 1]]}}
        }"#,
        )
        .unwrap();
        let f = &sys.edge(EdgeId(0)).map;
        let p = f.apply(&[1.0, 0.0, 0.0]);
        assert!((p[0] - 0.5).abs() < 1e-12 && (p[1] - 0.5).abs() < 1e-12);
        assert!(!sys.edge(EdgeId(1)).map.preserves_orientation());
    }

    #[test]
    fn clockwise_polygon_is_rejected() {
        let err = parse_system(
            r#"{
            "ambient_dim": 2,
            "vertices": ["a"],
            "edges": [{"id": "s", "from": "a", "to": "a", "scale": "1/2"}],
            "open_regions": {"a": {"polygon": [[0, 0], [0, 1], [1, 1], [1, 0]]}}
        }"#,
        )
        .unwrap_err();
        assert!(matches!(err, Error::Parse { .. }));
    }

    #[test]
    fn probabilities_are_checked() {
        let good = CANTOR.replace(
            "\"open_regions\"",
            "\"probabilities\": {\"edges\": {\"e1\": 0.4, \"e2\": 0.4}, \"stop\": {\"v1\": 0.2}}, \"open_regions\"",
        );
        let sys = parse_system(&good).unwrap();
        assert_eq!(sys.scheme().unwrap().stop_weights, vec![0.2]);
        let bad = good.replace("\"e2\": 0.4", "\"e2\": 0.5");
        assert!(matches!(parse_system(&bad), Err(Error::InvalidScheme(_))));
    }
}
