//! Experiments that compare graph dimensions, box-counting slopes and
//! covering regularity exponents, assembled into deterministic reports.
//!
//! Verdicts are one-sided with tolerance `τ`. A verdict violated by more than
//! `τ` is flagged as a numerical anomaly for review rather than reported as a
//! counterexample.

use std::time::Instant;

use serde::Serialize;

use crate::attractor::{homogeneous_cloud, orbital_cloud, CloudRole, PointCloud};
use crate::boxdim::{analytic_series, cloud_series, estimate_dims, pt_estimate, BoxCountSeries, DimEstimate};
use crate::document::FamilyDocument;
use crate::error::{Error, Result};
use crate::model::{GdSystem, RatioKind, VertexId, Violation};
use crate::separation::{check_gdiosc, check_strong, OSCReport};
use crate::spectral::graph_dimension;

pub const DEFAULT_TAU: f64 = 0.05;
pub const DEFAULT_WINDOW: usize = 4;
pub const DEFAULT_P_GRID: usize = 64;

/// Inputs shared by every experiment.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ExperimentParams {
    /// Cloud resolution `ε`.
    pub epsilon: f64,
    /// Mesh sizes, strictly decreasing.
    pub deltas: Vec<f64>,
    pub window: usize,
    pub tau: f64,
    pub p_grid: usize,
    /// Record wall-clock time in the report (off by default so reports are
    /// byte-reproducible).
    #[serde(skip)]
    pub timing: bool,
}

impl ExperimentParams {
    /// `ε = 2^-16` on the line, `10^-3` in the plane and `2·10^-3` in space;
    /// `δ_k = 2^-k` for `k = 3..=K` with `K = min(14, ⌊log2(1/(2ε))⌋)`, which
    /// keeps every mesh at least twice the cloud resolution.
    pub fn for_dim(dim: usize) -> Self {
        let epsilon = match dim {
            1 => 2f64.powi(-16),
            2 => 1e-3,
            _ => 2e-3,
        };
        Self::with_epsilon(epsilon)
    }

    pub fn with_epsilon(epsilon: f64) -> Self {
        let k_max = ((1.0 / (2.0 * epsilon)).log2().floor() as i32).min(14);
        ExperimentParams {
            epsilon,
            deltas: (3..=k_max).map(|k| 2f64.powi(-k)).collect(),
            window: DEFAULT_WINDOW,
            tau: DEFAULT_TAU,
            p_grid: DEFAULT_P_GRID,
            timing: false,
        }
    }

    pub fn spacing(&self) -> f64 {
        self.epsilon / 2.0
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum VerdictStatus {
    Pass,
    NumericalAnomaly,
    NotApplicable,
}

/// One checked inequality `lhs ≤ rhs + τ` (or `|lhs − rhs| ≤ τ` for
/// equalities), with the inputs that produced it.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Verdict {
    pub name: String,
    pub vertex: Option<String>,
    pub status: VerdictStatus,
    pub lhs: f64,
    pub rhs: f64,
    /// `rhs − lhs` for inequalities, `τ − |lhs − rhs|` for equalities.
    pub margin: f64,
    pub tau: f64,
    pub epsilon: f64,
    pub delta_max: f64,
    pub delta_min: f64,
    pub window: usize,
    pub note: Option<String>,
}

impl Verdict {
    fn new(name: &str, vertex: Option<&str>, lhs: f64, rhs: f64, margin: f64, params: &ExperimentParams) -> Self {
        Verdict {
            name: name.to_string(),
            vertex: vertex.map(str::to_string),
            status: if margin >= -params.tau {
                VerdictStatus::Pass
            } else {
                VerdictStatus::NumericalAnomaly
            },
            lhs,
            rhs,
            margin,
            tau: params.tau,
            epsilon: params.epsilon,
            delta_max: params.deltas.first().copied().unwrap_or(f64::NAN),
            delta_min: params.deltas.last().copied().unwrap_or(f64::NAN),
            window: params.window,
            note: None,
        }
    }

    fn at_most(name: &str, vertex: Option<&str>, lhs: f64, rhs: f64, params: &ExperimentParams) -> Self {
        Self::new(name, vertex, lhs, rhs, rhs - lhs, params)
    }

    fn equal(name: &str, vertex: Option<&str>, lhs: f64, rhs: f64, params: &ExperimentParams) -> Self {
        let mut v = Self::new(name, vertex, lhs, rhs, 0.0, params);
        v.margin = params.tau - (lhs - rhs).abs();
        v.status = if v.margin >= 0.0 {
            VerdictStatus::Pass
        } else {
            VerdictStatus::NumericalAnomaly
        };
        v
    }

    fn not_applicable(mut self, why: impl Into<String>) -> Self {
        self.status = VerdictStatus::NotApplicable;
        self.note = Some(why.into());
        self
    }

    pub fn passed(&self) -> bool {
        self.status == VerdictStatus::Pass
    }
}

/// A box-count series and the slopes fitted to it.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SetEstimate {
    pub series: BoxCountSeries,
    pub estimate: DimEstimate,
    pub points: Option<usize>,
}

impl SetEstimate {
    fn from_cloud(cloud: &PointCloud, params: &ExperimentParams) -> Result<Self> {
        let series = cloud_series(cloud, &params.deltas)?;
        let estimate = estimate_dims(&series, params.window)?;
        Ok(SetEstimate {
            series,
            estimate,
            points: Some(cloud.len()),
        })
    }

    fn upper(&self) -> f64 {
        self.estimate.slope_upper
    }

    fn lower(&self) -> f64 {
        self.estimate.slope_lower
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct VertexReport {
    pub vertex: String,
    pub homogeneous: SetEstimate,
    pub orbital: Option<SetEstimate>,
    pub inhomogeneous: SetEstimate,
    pub condensation: Option<SetEstimate>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CreRow {
    pub t: f64,
    pub p_t: f64,
    pub bound: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ContinuityRow {
    pub n: i64,
    pub s_star: f64,
    pub distance_to_limit: Option<f64>,
    pub upper_slope: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LimitReport {
    pub valid: bool,
    pub s_star: Option<f64>,
    pub violations: Vec<Violation>,
    pub error: Option<String>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum ExperimentKind {
    Formulas,
    LowerBound,
    Continuity,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ExperimentReport {
    pub kind: ExperimentKind,
    pub system_hash: String,
    pub s_star: f64,
    pub s_prime: f64,
    pub params: ExperimentParams,
    pub vertices: Vec<VertexReport>,
    pub osc: Option<OSCReport>,
    pub osc_note: Option<String>,
    pub verdicts: Vec<Verdict>,
    pub cre_table: Vec<CreRow>,
    pub continuity: Vec<ContinuityRow>,
    pub limit: Option<LimitReport>,
    pub timing_ms: Option<u128>,
}

impl ExperimentReport {
    pub fn has_anomaly(&self) -> bool {
        self.verdicts
            .iter()
            .any(|v| v.status == VerdictStatus::NumericalAnomaly)
    }

    pub fn verdict(&self, name: &str) -> Option<&Verdict> {
        self.verdicts.iter().find(|v| v.name == name)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

fn check_params(params: &ExperimentParams) -> Result<()> {
    if !(params.epsilon > 0.0 && params.epsilon < 1.0) {
        return Err(Error::InvalidParameter(format!(
            "epsilon {} must lie in (0, 1)",
            params.epsilon
        )));
    }
    if params.deltas.len() < params.window + 1 {
        return Err(Error::InsufficientData(format!(
            "{} mesh sizes with window {}",
            params.deltas.len(),
            params.window
        )));
    }
    Ok(())
}

/// Clouds and slopes for every set family at one vertex.
fn measure_vertex(sys: &GdSystem, v: VertexId, params: &ExperimentParams) -> Result<(VertexReport, PointCloud)> {
    let hom = homogeneous_cloud(sys, v, params.epsilon)?;
    let homogeneous = SetEstimate::from_cloud(&hom, params)?;
    let name = sys.vertex_name(v).to_string();
    if sys.is_homogeneous() {
        let inhomogeneous = homogeneous.clone();
        let cloud = PointCloud {
            role: CloudRole::Inhomogeneous,
            ..hom
        };
        return Ok((
            VertexReport {
                vertex: name,
                homogeneous,
                orbital: None,
                inhomogeneous,
                condensation: None,
            },
            cloud,
        ));
    }
    let orb = orbital_cloud(sys, v, params.epsilon, params.spacing())?;
    let orbital = SetEstimate::from_cloud(&orb, params)?;
    let inh = hom.union(&orb, CloudRole::Inhomogeneous);
    let inhomogeneous = SetEstimate::from_cloud(&inh, params)?;
    let set = sys.condensation(v);
    let condensation = if set.is_empty() {
        None
    } else {
        let series = analytic_series(set, sys.dim(), &params.deltas)?;
        let estimate = estimate_dims(&series, params.window)?;
        Some(SetEstimate {
            series,
            estimate,
            points: None,
        })
    };
    Ok((
        VertexReport {
            vertex: name,
            homogeneous,
            orbital: Some(orbital),
            inhomogeneous,
            condensation,
        },
        inh,
    ))
}

struct Measured {
    s_star: f64,
    s_prime: f64,
    vertices: Vec<VertexReport>,
    clouds: Vec<PointCloud>,
    osc: Option<OSCReport>,
    osc_note: Option<String>,
}

fn measure_system(sys: &GdSystem, params: &ExperimentParams) -> Result<Measured> {
    check_params(params)?;
    sys.ensure_valid()?;
    let s_star = graph_dimension(sys, RatioKind::Upper)?.value;
    let s_prime = graph_dimension(sys, RatioKind::Lower)?.value;
    let mut vertices = Vec::new();
    let mut clouds = Vec::new();
    for v in sys.vertices() {
        let (report, cloud) = measure_vertex(sys, v, params)?;
        vertices.push(report);
        clouds.push(cloud);
    }
    let (osc, osc_note) = match sys.regions() {
        None => (None, Some("no open regions supplied".to_string())),
        Some(regions) => match check_strong(sys, regions, &clouds) {
            Ok(report) => (Some(report), None),
            Err(Error::InsufficientResolution(eps)) => (
                check_gdiosc(sys, regions).ok(),
                Some(format!("strong condition undecided at resolution {eps}")),
            ),
            Err(e @ (Error::UnsupportedDimension(_) | Error::NotSimilarity(_))) => (None, Some(e.to_string())),
            Err(e) => return Err(e),
        },
    };
    Ok(Measured {
        s_star,
        s_prime,
        vertices,
        clouds,
        osc,
        osc_note,
    })
}

fn empty_report(kind: ExperimentKind, sys: &GdSystem, m: &Measured, params: &ExperimentParams) -> ExperimentReport {
    ExperimentReport {
        kind,
        system_hash: sys.fingerprint(),
        s_star: m.s_star,
        s_prime: m.s_prime,
        params: params.clone(),
        vertices: m.vertices.clone(),
        osc: m.osc.clone(),
        osc_note: m.osc_note.clone(),
        verdicts: Vec::new(),
        cre_table: Vec::new(),
        continuity: Vec::new(),
        limit: None,
        timing_ms: None,
    }
}

/// Upper bound on the orbital set, the sandwich on the inhomogeneous
/// attractor and, when the strong open set condition is certified for a
/// system of similarities, the equality case.
pub fn verify_dimension_formulas(sys: &GdSystem, params: &ExperimentParams) -> Result<ExperimentReport> {
    let start = Instant::now();
    let m = measure_system(sys, params)?;
    let mut report = empty_report(ExperimentKind::Formulas, sys, &m, params);
    let strong = m.osc.as_ref().is_some_and(OSCReport::strong_holds) && sys.all_similarities();
    for vr in &m.vertices {
        let name = Some(vr.vertex.as_str());
        let dim_c = vr.condensation.as_ref().map_or(0.0, SetEstimate::upper);
        let top = m.s_star.max(dim_c);
        if let Some(orb) = &vr.orbital {
            report
                .verdicts
                .push(Verdict::at_most("orbital-upper-bound", name, orb.upper(), top, params));
        }
        let floor = vr.homogeneous.upper().max(dim_c);
        let f = vr.inhomogeneous.upper();
        report
            .verdicts
            .push(Verdict::at_most("sandwich-lower", name, floor, f, params));
        report
            .verdicts
            .push(Verdict::at_most("sandwich-upper", name, f, top, params));
        let eq = Verdict::equal("equality", name, f, top, params);
        report.verdicts.push(if strong {
            eq
        } else {
            eq.not_applicable("strong open set condition not certified for a system of similarities")
        });
    }
    if params.timing {
        report.timing_ms = Some(start.elapsed().as_millis());
    }
    let _ = m.clouds;
    Ok(report)
}

/// Covering-regularity lower bound `P_t·t + (1 − P_t)·s′ ≤ lower slope of F`
/// for each `t`.
///
/// Requires the same condensation set at every vertex. When the open set
/// condition fails or cannot be checked the rows are still computed and the
/// verdicts are marked not applicable.
pub fn lower_bound_experiment(sys: &GdSystem, t_values: &[f64], params: &ExperimentParams) -> Result<ExperimentReport> {
    let start = Instant::now();
    sys.ensure_valid()?;
    let c0 = sys.condensation(VertexId(0));
    if let Some(v) = sys.vertices().find(|&v| sys.condensation(v) != c0) {
        return Err(Error::HypothesisViolated(format!(
            "condensation set at {} differs from the one at {}",
            sys.vertex_name(v),
            sys.vertex_name(VertexId(0))
        )));
    }
    if c0.is_empty() {
        return Err(Error::HomogeneousSystem);
    }
    let m = measure_system(sys, params)?;
    let mut report = empty_report(ExperimentKind::LowerBound, sys, &m, params);
    let osc_ok = m.osc.as_ref().is_some_and(OSCReport::holds);
    for &t in t_values {
        let p_t = pt_estimate(c0, sys.dim(), t, &params.deltas, params.p_grid)?;
        let bound = p_t * t + (1.0 - p_t) * m.s_prime;
        report.cre_table.push(CreRow { t, p_t, bound });
        for vr in &m.vertices {
            let mut v = Verdict::at_most(
                &format!("cre-lower-bound t={t}"),
                Some(&vr.vertex),
                bound,
                vr.inhomogeneous.lower(),
                params,
            );
            if !osc_ok {
                v = v.not_applicable(
                    m.osc_note
                        .clone()
                        .unwrap_or_else(|| "open set condition fails".to_string()),
                );
            }
            report.verdicts.push(v);
        }
    }
    if params.timing {
        report.timing_ms = Some(start.elapsed().as_millis());
    }
    Ok(report)
}

/// Graph dimensions and upper slopes along a family of systems, compared with
/// the family's limit system when it has a valid one.
pub fn continuity_experiment(family: &FamilyDocument, n_values: &[i64], params: &ExperimentParams) -> Result<ExperimentReport> {
    let start = Instant::now();
    check_params(params)?;
    if n_values.is_empty() {
        return Err(Error::InsufficientData("no parameter values".into()));
    }
    let limit = family.limit_system().map(|r| match r {
        Ok(sys) => match graph_dimension(&sys, RatioKind::Upper) {
            Ok(g) => LimitReport {
                valid: true,
                s_star: Some(g.value),
                violations: Vec::new(),
                error: None,
            },
            Err(e) => LimitReport {
                valid: true,
                s_star: None,
                violations: Vec::new(),
                error: Some(e.to_string()),
            },
        },
        Err(Error::InvalidSystem(report)) => LimitReport {
            valid: false,
            s_star: None,
            violations: report.violations,
            error: None,
        },
        Err(e) => LimitReport {
            valid: false,
            s_star: None,
            violations: Vec::new(),
            error: Some(e.to_string()),
        },
    });
    let s_limit = limit.as_ref().and_then(|l| l.s_star);
    let mut rows = Vec::new();
    let mut first = None;
    for &n in n_values {
        let sys = family.instantiate(n)?;
        let s = graph_dimension(&sys, RatioKind::Upper)?.value;
        let cloud = homogeneous_cloud(&sys, VertexId(0), params.epsilon)?;
        let est = SetEstimate::from_cloud(&cloud, params)?;
        rows.push(ContinuityRow {
            n,
            s_star: s,
            distance_to_limit: s_limit.map(|l| (s - l).abs()),
            upper_slope: est.upper(),
        });
        first.get_or_insert(sys);
    }
    let first = first.expect("nonempty");
    let mut report = ExperimentReport {
        kind: ExperimentKind::Continuity,
        system_hash: first.fingerprint(),
        s_star: rows[0].s_star,
        s_prime: graph_dimension(&first, RatioKind::Lower)?.value,
        params: params.clone(),
        vertices: Vec::new(),
        osc: None,
        osc_note: None,
        verdicts: Vec::new(),
        cre_table: Vec::new(),
        continuity: Vec::new(),
        limit: limit.clone(),
        timing_ms: None,
    };
    match (&limit, s_limit) {
        (Some(_), Some(_)) => {
            let increases = rows
                .windows(2)
                .filter_map(|w| Some(w[1].distance_to_limit? - w[0].distance_to_limit?))
                .fold(0.0, f64::max);
            let mut v = Verdict::at_most("distance-nonincreasing", None, increases, 0.0, params);
            v.note = Some("largest increase of |s_n* - s*| between consecutive n".into());
            report.verdicts.push(v);
        }
        _ => {
            let why = match &limit {
                Some(l) if !l.valid => "limit system rejected at validation",
                Some(_) => "limit graph dimension unavailable",
                None => "family declares no limit system",
            };
            report.verdicts.push(
                Verdict::at_most("distance-nonincreasing", None, 0.0, 0.0, params).not_applicable(why),
            );
        }
    }
    let dim = first.dim() as f64;
    for row in &rows {
        report.verdicts.push(Verdict::at_most(
            &format!("slope-upper-bound n={}", row.n),
            None,
            row.upper_slope,
            row.s_star.min(dim),
            params,
        ));
    }
    report.continuity = rows;
    if params.timing {
        report.timing_ms = Some(start.elapsed().as_millis());
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::document::parse_system;

    fn cantor(cond: &str) -> GdSystem {
        parse_system(&format!(
            r#"{{
            "ambient_dim": 1,
            "vertices": ["v1"],
            "edges": [
                {{"id": "e1", "from": "v1", "to": "v1", "scale": "1/3"}},
                {{"id": "e2", "from": "v1", "to": "v1", "scale": "1/3", "translate": ["2/3"]}}
            ],
            "condensation": {{"v1": [{cond}]}},
            "open_regions": {{"v1": {{"interval": [0, 1]}}}}
        }}"#
        ))
        .unwrap()
    }

    #[test]
    fn default_params() {
        let p = ExperimentParams::for_dim(1);
        assert_eq!(p.deltas.len(), 12);
        assert_eq!(p.deltas[0], 0.125);
        assert_eq!(*p.deltas.last().unwrap(), 2f64.powi(-14));
        let p = ExperimentParams::for_dim(2);
        assert_eq!(*p.deltas.last().unwrap(), 2f64.powi(-8));
    }

    #[test]
    fn homogeneous_cantor_formulas() {
        let sys = cantor("");
        let report = verify_dimension_formulas(&sys, &ExperimentParams::for_dim(1)).unwrap();
        assert!((report.s_star - 2f64.ln() / 3f64.ln()).abs() < 1e-9);
        let eq = report.verdict("equality").unwrap();
        assert_eq!(eq.status, VerdictStatus::Pass, "{eq:?}");
        assert!(report.vertices[0].orbital.is_none());
        assert!(!report.has_anomaly());
    }

    #[test]
    fn cantor_with_interval_formulas() {
        let sys = cantor(r#"{"segment": [["1/3"], ["2/3"]]}"#);
        let report = verify_dimension_formulas(&sys, &ExperimentParams::for_dim(1)).unwrap();
        assert!(report.osc.as_ref().unwrap().strong_holds());
        for v in &report.verdicts {
            assert_eq!(v.status, VerdictStatus::Pass, "{v:?}");
        }
        assert!((report.vertices[0].inhomogeneous.estimate.slope_upper - 1.0).abs() < 0.05);
    }

    #[test]
    fn lower_bound_rows() {
        let sys = cantor(r#"{"segment": [["1/3"], ["2/3"]]}"#);
        let report = lower_bound_experiment(&sys, &[0.3, 0.6, 0.9], &ExperimentParams::for_dim(1)).unwrap();
        assert_eq!(report.cre_table.len(), 3);
        for row in &report.cre_table[..2] {
            assert_eq!(row.p_t, 1.0);
            assert_eq!(row.bound, row.t);
        }
        // length 1/3 needs δ^{-0.1} ≥ 3, beyond the finest mesh
        assert!(report.cre_table[2].p_t < 0.1);
        assert!(report.verdicts.iter().all(Verdict::passed));
    }

    #[test]
    fn lower_bound_with_point_is_trivial() {
        let sys = parse_system(
            r#"{
            "ambient_dim": 1,
            "vertices": ["v1"],
            "edges": [
                {"id": "e1", "from": "v1", "to": "v1", "scale": "1/2"},
                {"id": "e2", "from": "v1", "to": "v1", "scale": "1/2", "translate": ["1/2"]}
            ],
            "condensation": {"v1": [{"point": [2]}]},
            "open_regions": {"v1": {"interval": [0, 1]}}
        }"#,
        )
        .unwrap();
        let report = lower_bound_experiment(&sys, &[2.0], &ExperimentParams::for_dim(1)).unwrap();
        assert_eq!(report.cre_table[0].p_t, 0.0);
        assert!((report.cre_table[0].bound - report.s_prime).abs() < 1e-12);
        assert_eq!(report.verdicts[0].status, VerdictStatus::NotApplicable);
    }

    #[test]
    fn unequal_condensation_sets_violate_the_hypothesis() {
        let sys = parse_system(
            r#"{
            "ambient_dim": 1,
            "vertices": ["a", "b"],
            "edges": [
                {"id": "ab", "from": "a", "to": "b", "scale": "1/2"},
                {"id": "ba", "from": "b", "to": "a", "scale": "1/2"}
            ],
            "condensation": {"a": [{"point": [0]}], "b": [{"point": [1]}]}
        }"#,
        )
        .unwrap();
        assert!(matches!(
            lower_bound_experiment(&sys, &[0.5], &ExperimentParams::for_dim(1)),
            Err(Error::HypothesisViolated(_))
        ));
    }

    #[test]
    fn continuity_of_a_constant_family() {
        let fam = FamilyDocument::from_json(
            r#"{
            "parameter": "n",
            "template": {
                "ambient_dim": 1,
                "vertices": ["v"],
                "edges": [
                    {"id": "a", "from": "v", "to": "v", "scale": "1/3"},
                    {"id": "b", "from": "v", "to": "v", "scale": "1/3", "translate": ["2/3"]}
                ]
            }
        }"#,
        )
        .unwrap();
        let report = continuity_experiment(&fam, &[2, 3, 4], &ExperimentParams::for_dim(1)).unwrap();
        let s: Vec<f64> = report.continuity.iter().map(|r| r.s_star).collect();
        assert!(s.windows(2).all(|w| w[0] == w[1]));
        assert_eq!(
            report.verdict("distance-nonincreasing").unwrap().status,
            VerdictStatus::NotApplicable
        );
    }
}
