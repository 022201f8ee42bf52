//! Grid box counting, analytic counts for condensation primitives, log-log
//! slope estimates and covering regularity exponents.
//!
//! The grid is anchored at the origin with half-open cells
//! `∏ [k_j δ, (k_j + 1) δ)`. A coordinate whose quotient by `δ` lies within
//! `1e-9` of an integer is snapped to it, so that points sitting on grid
//! lines are not split by rounding noise.

use std::collections::HashSet;

use rayon::prelude::*;
use serde::Serialize;

use crate::attractor::PointCloud;
use crate::error::{Error, Result};
use crate::model::{coords_value, CondensationSet, Point, Primitive};

const SNAP: f64 = 1e-9;

/// Cell index of a coordinate on the grid of mesh `delta`.
pub fn cell_index(x: f64, delta: f64) -> i64 {
    let q = x / delta;
    let r = q.round();
    if (q - r).abs() <= SNAP * r.abs().max(1.0) {
        r as i64
    } else {
        q.floor() as i64
    }
}

fn cell_of(p: &Point, dim: usize, delta: f64) -> [i64; 3] {
    let mut k = [0i64; 3];
    for i in 0..dim {
        k[i] = cell_index(p[i], delta);
    }
    k
}

/// Number of occupied grid cells.
pub fn count_boxes(cloud: &PointCloud, delta: f64) -> Result<u64> {
    if !(delta > 0.0) {
        return Err(Error::InvalidDelta(delta));
    }
    if cloud.is_empty() {
        return Err(Error::EmptyCloud);
    }
    let mut cells: Vec<[i64; 3]> = cloud
        .points
        .par_iter()
        .map(|p| cell_of(p, cloud.dim, delta))
        .collect();
    cells.par_sort_unstable();
    cells.dedup();
    Ok(cells.len() as u64)
}

/// Inclusive cell range covering `[a, b]` on one axis.
fn axis_range(a: f64, b: f64, delta: f64) -> (i64, i64) {
    let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
    (cell_index(lo, delta), cell_index(hi, delta))
}

/// Product of inclusive per-axis ranges.
type CellBlock = [(i64, i64); 3];

fn block_size(b: &CellBlock, dim: usize) -> u64 {
    (0..dim).map(|k| (b[k].1 - b[k].0 + 1) as u64).product()
}

fn axis_block(a: &Point, b: &Point, dim: usize, delta: f64) -> CellBlock {
    let mut out = [(0, 0); 3];
    for k in 0..dim {
        out[k] = axis_range(a[k], b[k], delta);
    }
    out
}

fn is_axis_aligned(a: &Point, b: &Point, dim: usize) -> bool {
    (0..dim).filter(|&k| a[k] != b[k]).count() <= 1
}

/// Cells met by a general segment: the cells of both endpoints, of every
/// grid-line crossing, and of the midpoint of every piece between crossings.
fn segment_cells(a: &Point, b: &Point, dim: usize, delta: f64, out: &mut HashSet<[i64; 3]>) {
    let mut ts = vec![0.0, 1.0];
    for k in 0..dim {
        let (lo, hi) = axis_range(a[k], b[k], delta);
        let span = b[k] - a[k];
        if span == 0.0 {
            continue;
        }
        for c in lo + 1..=hi {
            let t = (c as f64 * delta - a[k]) / span;
            if t > 0.0 && t < 1.0 {
                ts.push(t);
            }
        }
    }
    ts.sort_by(f64::total_cmp);
    ts.dedup();
    let at = |t: f64| -> Point {
        let mut p = [0.0; 3];
        for k in 0..dim {
            p[k] = a[k] + t * (b[k] - a[k]);
        }
        p
    };
    out.insert(cell_of(a, dim, delta));
    out.insert(cell_of(b, dim, delta));
    for w in ts.windows(2) {
        out.insert(cell_of(&at(w[0]), dim, delta));
        out.insert(cell_of(&at(0.5 * (w[0] + w[1])), dim, delta));
    }
}

/// Exact cell blocks when every primitive is a point, a box or an
/// axis-parallel segment; `None` otherwise.
fn axis_blocks(set: &CondensationSet, dim: usize, delta: f64) -> Option<Vec<CellBlock>> {
    let mut blocks = Vec::new();
    let push_segment = |a: Point, b: Point, blocks: &mut Vec<CellBlock>| {
        if is_axis_aligned(&a, &b, dim) {
            blocks.push(axis_block(&a, &b, dim, delta));
            true
        } else {
            false
        }
    };
    for prim in &set.primitives {
        let ok = match prim {
            Primitive::Point(p) => push_segment(coords_value(p), coords_value(p), &mut blocks),
            Primitive::Box { min, max } => {
                blocks.push(axis_block(&coords_value(min), &coords_value(max), dim, delta));
                true
            }
            Primitive::Segment(a, b) => push_segment(coords_value(a), coords_value(b), &mut blocks),
            Primitive::Polyline(pts) => {
                let pts: Vec<Point> = pts.iter().map(coords_value).collect();
                if pts.len() == 1 {
                    push_segment(pts[0], pts[0], &mut blocks)
                } else {
                    pts.windows(2).all(|w| push_segment(w[0], w[1], &mut blocks))
                }
            }
        };
        if !ok {
            return None;
        }
    }
    Some(blocks)
}

fn explicit_cells(set: &CondensationSet, dim: usize, delta: f64) -> HashSet<[i64; 3]> {
    let mut cells = HashSet::new();
    for prim in &set.primitives {
        match prim {
            Primitive::Point(p) => {
                cells.insert(cell_of(&coords_value(p), dim, delta));
            }
            Primitive::Box { min, max } => expand_block(
                &axis_block(&coords_value(min), &coords_value(max), dim, delta),
                dim,
                &mut cells,
            ),
            Primitive::Segment(a, b) => {
                segment_cells(&coords_value(a), &coords_value(b), dim, delta, &mut cells)
            }
            Primitive::Polyline(pts) => {
                let pts: Vec<Point> = pts.iter().map(coords_value).collect();
                if pts.len() == 1 {
                    cells.insert(cell_of(&pts[0], dim, delta));
                }
                for w in pts.windows(2) {
                    segment_cells(&w[0], &w[1], dim, delta, &mut cells);
                }
            }
        }
    }
    cells
}

fn expand_block(b: &CellBlock, dim: usize, out: &mut HashSet<[i64; 3]>) {
    let r = |k: usize| if k < dim { b[k] } else { (0, 0) };
    for x in r(0).0..=r(0).1 {
        for y in r(1).0..=r(1).1 {
            for z in r(2).0..=r(2).1 {
                out.insert([x, y, z]);
            }
        }
    }
}

/// Size of a union of cell blocks. Disjoint blocks and one-dimensional
/// unions are counted without enumerating cells.
fn union_size(mut blocks: Vec<CellBlock>, dim: usize) -> u64 {
    if blocks.len() == 1 {
        return block_size(&blocks[0], dim);
    }
    if dim == 1 {
        blocks.sort_by_key(|b| b[0]);
        let mut total = 0u64;
        let mut cur: Option<(i64, i64)> = None;
        for b in blocks {
            let (lo, hi) = b[0];
            cur = match cur {
                Some((clo, chi)) if lo <= chi + 1 => Some((clo, chi.max(hi))),
                Some((clo, chi)) => {
                    total += (chi - clo + 1) as u64;
                    Some((lo, hi))
                }
                None => Some((lo, hi)),
            };
        }
        if let Some((lo, hi)) = cur {
            total += (hi - lo + 1) as u64;
        }
        return total;
    }
    let overlaps = |a: &CellBlock, b: &CellBlock| (0..dim).all(|k| a[k].0 <= b[k].1 && b[k].0 <= a[k].1);
    let disjoint = (0..blocks.len()).all(|i| (i + 1..blocks.len()).all(|j| !overlaps(&blocks[i], &blocks[j])));
    if disjoint {
        return blocks.iter().map(|b| block_size(b, dim)).sum();
    }
    let mut cells = HashSet::new();
    for b in &blocks {
        expand_block(b, dim, &mut cells);
    }
    cells.len() as u64
}

/// Exact number of grid cells met by the condensation set (0 when empty).
pub fn analytic_count(set: &CondensationSet, dim: usize, delta: f64) -> Result<u64> {
    if !(delta > 0.0) {
        return Err(Error::InvalidDelta(delta));
    }
    if set.is_empty() {
        return Ok(0);
    }
    Ok(match axis_blocks(set, dim, delta) {
        Some(blocks) => union_size(blocks, dim),
        None => explicit_cells(set, dim, delta).len() as u64,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum SeriesSource {
    Cloud,
    Analytic,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BoxCountSeries {
    pub deltas: Vec<f64>,
    pub counts: Vec<u64>,
    pub source: SeriesSource,
    pub ambient_dim: usize,
}

impl BoxCountSeries {
    pub fn len(&self) -> usize {
        self.deltas.len()
    }

    pub fn is_empty(&self) -> bool {
        self.deltas.is_empty()
    }

    /// Counts never decrease as `δ` shrinks, and halving `δ` multiplies a
    /// grid count by at most `2^d` (checked where consecutive meshes halve).
    pub fn is_consistent(&self) -> bool {
        self.deltas.windows(2).zip(self.counts.windows(2)).all(|(d, c)| {
            let monotone = c[1] >= c[0];
            let halving = (d[0] / d[1] - 2.0).abs() < 1e-9;
            monotone && (!halving || c[1] <= (1u64 << self.ambient_dim) * c[0])
        })
    }
}

/// `steps` meshes spaced geometrically from `delta_max` down to `delta_min`.
pub fn delta_range(delta_max: f64, delta_min: f64, steps: usize) -> Result<Vec<f64>> {
    if !(delta_min > 0.0 && delta_min < delta_max && delta_max <= 1.0) || steps < 2 {
        return Err(Error::InvalidParameter(format!(
            "need 0 < delta_min < delta_max <= 1 and steps >= 2, got {delta_min}, {delta_max}, {steps}"
        )));
    }
    let ratio = (delta_min / delta_max).powf(1.0 / (steps - 1) as f64);
    Ok((0..steps)
        .map(|k| {
            if k == steps - 1 {
                delta_min
            } else {
                delta_max * ratio.powi(k as i32)
            }
        })
        .collect())
}

/// `δ_k = base^{-k}` for `k` in `first..=last`.
pub fn geometric_deltas(base: f64, first: i32, last: i32) -> Vec<f64> {
    (first..=last).map(|k| base.powi(-k)).collect()
}

fn check_deltas(deltas: &[f64]) -> Result<()> {
    if deltas.iter().any(|d| !(*d > 0.0)) {
        return Err(Error::InvalidParameter("mesh sizes must be positive".into()));
    }
    if deltas.windows(2).any(|w| w[1] >= w[0]) {
        return Err(Error::InvalidParameter("mesh sizes must strictly decrease".into()));
    }
    Ok(())
}

pub fn cloud_series(cloud: &PointCloud, deltas: &[f64]) -> Result<BoxCountSeries> {
    check_deltas(deltas)?;
    let counts = deltas
        .iter()
        .map(|&d| count_boxes(cloud, d))
        .collect::<Result<Vec<_>>>()?;
    Ok(BoxCountSeries {
        deltas: deltas.to_vec(),
        counts,
        source: SeriesSource::Cloud,
        ambient_dim: cloud.dim,
    })
}

pub fn analytic_series(set: &CondensationSet, dim: usize, deltas: &[f64]) -> Result<BoxCountSeries> {
    check_deltas(deltas)?;
    if set.is_empty() {
        return Err(Error::EmptyCondensation);
    }
    let counts = deltas
        .iter()
        .map(|&d| analytic_count(set, dim, d))
        .collect::<Result<Vec<_>>>()?;
    Ok(BoxCountSeries {
        deltas: deltas.to_vec(),
        counts,
        source: SeriesSource::Analytic,
        ambient_dim: dim,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DimEstimate {
    pub slope_global: f64,
    pub slope_upper: f64,
    pub slope_lower: f64,
    pub window: usize,
    pub r2: f64,
}

/// Least-squares slope and coefficient of determination.
fn ols(xs: &[f64], ys: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let syy: f64 = ys.iter().map(|y| (y - my) * (y - my)).sum();
    let slope = if sxx > 0.0 { sxy / sxx } else { 0.0 };
    let r2 = if syy > 0.0 { (sxy * sxy) / (sxx * syy) } else { 1.0 };
    (slope, r2)
}

/// Global slope of `log N` against `log(1/δ)`, plus the extreme slopes over
/// sliding windows on the finest half of the series.
///
/// The upper and lower slopes also take the global slope into account, and
/// every slope is clamped to `[0, d]`.
pub fn estimate_dims(series: &BoxCountSeries, window: usize) -> Result<DimEstimate> {
    let n = series.len();
    if window < 2 || n < window + 1 {
        return Err(Error::InsufficientData(format!(
            "{n} points with window {window}; need window >= 2 and at least window + 1 points"
        )));
    }
    if series.counts.iter().any(|&c| c == 0) {
        return Err(Error::InsufficientData("zero box count".into()));
    }
    let xs: Vec<f64> = series.deltas.iter().map(|d| -d.ln()).collect();
    let ys: Vec<f64> = series.counts.iter().map(|&c| (c as f64).ln()).collect();
    let clamp = |s: f64| s.clamp(0.0, series.ambient_dim as f64);
    let (global, r2) = ols(&xs, &ys);
    let start = (n / 2).min(n - window);
    let mut upper = global;
    let mut lower = global;
    for i in start..=n - window {
        let (s, _) = ols(&xs[i..i + window], &ys[i..i + window]);
        upper = upper.max(s);
        lower = lower.min(s);
    }
    Ok(DimEstimate {
        slope_global: clamp(global),
        slope_upper: clamp(upper),
        slope_lower: clamp(lower),
        window,
        r2,
    })
}

/// `(t, δ)` covering regularity exponent: the largest `p` on the grid
/// `{0, 1/p_grid, …, 1}` with `N_{δ^p} ≥ δ^{-pt}`, using analytic counts.
/// Returns 0 when no grid value qualifies (only possible for an empty set).
pub fn cre(set: &CondensationSet, dim: usize, t: f64, delta: f64, p_grid: usize) -> Result<f64> {
    if p_grid < 64 {
        return Err(Error::InvalidParameter(format!("p_grid {p_grid} is below 64")));
    }
    if !(t >= 0.0) {
        return Err(Error::InvalidParameter(format!("t = {t} must be nonnegative")));
    }
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::InvalidDelta(delta));
    }
    let mut best = 0.0;
    for k in 0..=p_grid {
        let p = k as f64 / p_grid as f64;
        let count = analytic_count(set, dim, delta.powf(p))? as f64;
        let need = delta.powf(-p * t);
        if count >= need * (1.0 - 1e-12) {
            best = p;
        }
    }
    Ok(best)
}

/// `t`-CRE proxy: the minimum of [`cre`] over the finest half of a
/// decreasing mesh sequence.
pub fn pt_estimate(
    set: &CondensationSet,
    dim: usize,
    t: f64,
    deltas: &[f64],
    p_grid: usize,
) -> Result<f64> {
    if deltas.len() < 4 {
        return Err(Error::InsufficientData(format!(
            "{} mesh sizes; need at least 4",
            deltas.len()
        )));
    }
    check_deltas(deltas)?;
    let tail = &deltas[deltas.len() / 2..];
    let values = tail
        .par_iter()
        .map(|&d| cre(set, dim, t, d, p_grid))
        .collect::<Result<Vec<_>>>()?;
    Ok(values.into_iter().fold(1.0, f64::min))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::attractor::{condensation_samples, CloudRole};
    use crate::numeric::Real;

    fn c(x: f64, y: f64) -> [Real; 3] {
        [Real::from_f64(x), Real::from_f64(y), Real::int(0)]
    }

    fn unit_interval() -> CondensationSet {
        CondensationSet::new(vec![Primitive::Segment(c(0.0, 0.0), c(1.0, 0.0))])
    }

    fn finite_point() -> CondensationSet {
        CondensationSet::new(vec![Primitive::Point(c(2.0, 0.0))])
    }

    #[test]
    fn sampled_interval_count() {
        let cloud = condensation_samples(&unit_interval(), 1, 1.0 / 64.0).unwrap();
        assert_eq!(count_boxes(&cloud, 0.125).unwrap(), 9);
    }

    #[test]
    fn single_point_and_empty() {
        let cloud = PointCloud::new(None, 2, 0.1, CloudRole::Condensation, vec![[0.3, 0.7, 0.0]]);
        for d in [1.0, 0.1, 1e-6] {
            assert_eq!(count_boxes(&cloud, d).unwrap(), 1);
        }
        let empty = PointCloud::new(None, 1, 0.1, CloudRole::Condensation, vec![]);
        assert!(matches!(count_boxes(&empty, 0.1), Err(Error::EmptyCloud)));
    }

    #[test]
    fn grid_of_nine() {
        let b = CondensationSet::new(vec![Primitive::Box {
            min: c(0.0, 0.0),
            max: c(1.0, 1.0),
        }]);
        let cloud = condensation_samples(&b, 2, 0.5).unwrap();
        assert_eq!(cloud.len(), 9);
        assert_eq!(count_boxes(&cloud, 0.5).unwrap(), 9);
        assert_eq!(analytic_count(&b, 2, 0.5).unwrap(), 9);
    }

    #[test]
    fn analytic_examples() {
        assert_eq!(analytic_count(&unit_interval(), 1, 0.125).unwrap(), 9);
        assert_eq!(analytic_count(&finite_point(), 1, 0.001).unwrap(), 1);
        let third = CondensationSet::new(vec![Primitive::Segment(
            [Real::ratio(1, 3), Real::int(0), Real::int(0)],
            [Real::ratio(2, 3), Real::int(0), Real::int(0)],
        )]);
        assert_eq!(analytic_count(&third, 1, 0.1).unwrap(), 4);
        assert_eq!(analytic_count(&CondensationSet::empty(), 1, 0.1).unwrap(), 0);
    }

    #[test]
    fn union_of_overlapping_intervals() {
        let set = CondensationSet::new(vec![
            Primitive::Segment(c(0.0, 0.0), c(0.5, 0.0)),
            Primitive::Segment(c(0.25, 0.0), c(1.0, 0.0)),
            Primitive::Point(c(3.0, 0.0)),
        ]);
        assert_eq!(analytic_count(&set, 1, 0.125).unwrap(), 10);
    }

    #[test]
    fn diagonal_segment_matches_dense_sampling() {
        let set = CondensationSet::new(vec![Primitive::Segment(c(0.05, 0.1), c(0.93, 0.71))]);
        for delta in [0.1, 0.037, 0.01] {
            let exact = analytic_count(&set, 2, delta).unwrap();
            let cloud = condensation_samples(&set, 2, delta * 1e-3).unwrap();
            assert_eq!(exact, count_boxes(&cloud, delta).unwrap(), "delta {delta}");
        }
    }

    #[test]
    fn diagonal_through_corners() {
        let set = CondensationSet::new(vec![Primitive::Segment(c(0.0, 0.0), c(1.0, 1.0))]);
        // the diagonal meets cells (k, k) only, plus the far corner cell
        assert_eq!(analytic_count(&set, 2, 0.25).unwrap(), 5);
    }

    #[test]
    fn interval_slope_is_one() {
        let deltas = geometric_deltas(2.0, 1, 16);
        let s = analytic_series(&unit_interval(), 1, &deltas).unwrap();
        assert!(s.is_consistent());
        let est = estimate_dims(&s, 4).unwrap();
        // counts are 2^k + 1, which bends the coarse end of the fit
        assert!((est.slope_global - 0.976_380_5).abs() < 1e-6);
        assert!((est.slope_upper - 1.0).abs() < 0.01);
        assert_eq!(est.slope_lower, est.slope_global);
        assert!(est.slope_lower <= est.slope_global && est.slope_global <= est.slope_upper);
    }

    #[test]
    fn point_slope_is_zero() {
        let deltas = geometric_deltas(2.0, 1, 10);
        let s = analytic_series(&finite_point(), 1, &deltas).unwrap();
        let est = estimate_dims(&s, 4).unwrap();
        assert!(est.slope_global.abs() < 1e-9);
        assert!(est.slope_upper.abs() < 1e-9);
    }

    #[test]
    fn too_few_points() {
        let s = analytic_series(&unit_interval(), 1, &geometric_deltas(2.0, 1, 4)).unwrap();
        assert!(matches!(estimate_dims(&s, 4), Err(Error::InsufficientData(_))));
    }

    #[test]
    fn cre_examples() {
        assert_eq!(cre(&finite_point(), 1, 1.0, 1.0 / 16.0, 64).unwrap(), 0.0);
        assert_eq!(cre(&unit_interval(), 1, 0.5, 1.0 / 16.0, 64).unwrap(), 1.0);
        // floor(16^p) + 1 >= 16^{2p} holds up to 16^p = sqrt 2
        let v = cre(&unit_interval(), 1, 2.0, 1.0 / 16.0, 64).unwrap();
        assert!((v - 0.125).abs() <= 1.0 / 64.0, "{v}");
        assert!(cre(&unit_interval(), 1, 1.0, 0.5, 10).is_err());
    }

    #[test]
    fn cre_is_nonincreasing_in_t() {
        for set in [unit_interval(), finite_point()] {
            let mut prev = f64::INFINITY;
            for k in 0..10 {
                let v = cre(&set, 1, k as f64 * 0.3, 0.01, 64).unwrap();
                assert!(v <= prev);
                prev = v;
            }
        }
    }

    #[test]
    fn pt_examples() {
        let deltas = geometric_deltas(2.0, 8, 20);
        assert!(pt_estimate(&unit_interval(), 1, 0.5, &deltas, 64).unwrap() >= 1.0 - 1.0 / 64.0);
        assert!(pt_estimate(&unit_interval(), 1, 1.5, &deltas, 64).unwrap() <= 0.3);
        assert_eq!(pt_estimate(&finite_point(), 1, 0.0, &deltas, 64).unwrap(), 1.0);
        assert!(pt_estimate(&finite_point(), 1, 1.0, &deltas, 64).unwrap() <= 0.05);
        assert!(pt_estimate(&unit_interval(), 1, 0.5, &deltas[..3], 64).is_err());
    }

    #[test]
    fn delta_range_endpoints() {
        let d = delta_range(0.5, 0.5f64.powi(10), 10).unwrap();
        assert_eq!(d.len(), 10);
        assert_eq!(d[0], 0.5);
        assert_eq!(d[9], 0.5f64.powi(10));
        assert!((d[1] - 0.25).abs() < 1e-15);
    }
}
