//! Ratio matrices `M(s)`, their Perron pair and the graph dimension: the root
//! of `Φ(s) = spectral radius of M(s) = 1`.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::{check_delta, cross_cut, GdSystem, RatioKind, VertexId};
use crate::numeric::Real;

/// Relative tolerance on the spectral radius.
pub const RADIUS_TOL: f64 = 1e-10;
/// Absolute tolerance on `|Φ(s*) − 1|`.
pub const ROOT_TOL: f64 = 1e-9;

const MAX_POWER_ITERATIONS: usize = 200_000;

/// Square nonnegative matrix, row-major.
#[derive(Clone, Debug, Serialize)]
pub struct RatioMatrix {
    pub n: usize,
    pub s: f64,
    pub kind: RatioKind,
    #[serde(serialize_with = "serialize_reals")]
    entries: Vec<Real>,
}

fn serialize_reals<S: serde::Serializer>(v: &[Real], ser: S) -> Result<S::Ok, S::Error> {
    use serde::ser::SerializeSeq;
    let mut seq = ser.serialize_seq(Some(v.len()))?;
    for x in v {
        seq.serialize_element(&x.value())?;
    }
    seq.end()
}

impl RatioMatrix {
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        Self::from_real_rows(
            &rows
                .iter()
                .map(|r| r.iter().map(|&x| Real::from_f64(x)).collect())
                .collect::<Vec<Vec<Real>>>(),
        )
    }

    pub fn from_real_rows(rows: &[Vec<Real>]) -> Result<Self> {
        let n = rows.len();
        if n == 0 || rows.iter().any(|r| r.len() != n) {
            return Err(Error::InvalidParameter("matrix must be square and nonempty".into()));
        }
        if rows.iter().flatten().any(|x| !(x.value() >= 0.0)) {
            return Err(Error::InvalidParameter("matrix entries must be nonnegative".into()));
        }
        Ok(RatioMatrix {
            n,
            s: f64::NAN,
            kind: RatioKind::Upper,
            entries: rows.iter().flatten().copied().collect(),
        })
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.entries[i * self.n + j].value()
    }

    /// Entry with exact value when it is rational.
    pub fn entry(&self, i: usize, j: usize) -> Real {
        self.entries[i * self.n + j]
    }

    pub fn transpose(&self) -> RatioMatrix {
        let mut entries = self.entries.clone();
        for i in 0..self.n {
            for j in 0..self.n {
                entries[j * self.n + i] = self.entries[i * self.n + j];
            }
        }
        RatioMatrix {
            entries,
            ..self.clone()
        }
    }

    pub fn rows(&self) -> Vec<Vec<f64>> {
        (0..self.n)
            .map(|i| (0..self.n).map(|j| self.get(i, j)).collect())
            .collect()
    }

    fn mul_vec(&self, x: &[f64], out: &mut [f64]) {
        for (i, o) in out.iter_mut().enumerate() {
            *o = (0..self.n).map(|j| self.get(i, j) * x[j]).sum();
        }
    }

    fn is_irreducible(&self) -> bool {
        let n = self.n;
        let reach = |transposed: bool| {
            let mut seen = vec![false; n];
            let mut stack = vec![0usize];
            seen[0] = true;
            while let Some(u) = stack.pop() {
                for v in 0..n {
                    let w = if transposed { self.get(v, u) } else { self.get(u, v) };
                    if w > 0.0 && !seen[v] {
                        seen[v] = true;
                        stack.push(v);
                    }
                }
            }
            seen.into_iter().all(|b| b)
        };
        if n == 1 {
            return self.get(0, 0) > 0.0;
        }
        reach(false) && reach(true)
    }
}

/// `M(s)[i][j] = Σ ρ_e^s` over edges from `v_i` to `v_j`.
pub fn build_ratio_matrix(sys: &GdSystem, s: f64, kind: RatioKind) -> Result<RatioMatrix> {
    if !(s >= 0.0) || !s.is_finite() {
        return Err(Error::InvalidParameter(format!("exponent {s} must be finite and ≥ 0")));
    }
    sys.ensure_valid()?;
    let n = sys.vertex_count();
    let mut entries = vec![Real::int(0); n * n];
    for e in sys.edges() {
        let cell = &mut entries[e.from.0 * n + e.to.0];
        *cell = *cell + e.map.exact_ratio(kind).powf(s);
    }
    Ok(RatioMatrix { n, s, kind, entries })
}

#[derive(Clone, Debug, Serialize)]
pub struct PerronData {
    pub radius: f64,
    /// Positive right eigenvector normalized to sum 1.
    pub vector: Vec<f64>,
    /// `‖M·u − radius·u‖∞`.
    pub residual: f64,
    pub iterations: usize,
}

/// Perron root and positive eigenvector by power iteration.
///
/// Iterates on `M/‖M‖∞ + I`, which shares the Perron vector of `M` and is
/// primitive even when `M` is periodic. The Collatz-Wielandt quotients
/// `(M·u)_i / u_i` bracket the radius for every positive `u`; iteration stops
/// once the bracket is tight.
pub fn perron_vector(m: &RatioMatrix) -> Result<PerronData> {
    if !m.is_irreducible() {
        return Err(Error::NotIrreducible);
    }
    let n = m.n;
    let norm = (0..n)
        .map(|i| (0..n).map(|j| m.get(i, j)).sum::<f64>())
        .fold(0.0, f64::max);
    let mut u = vec![1.0 / n as f64; n];
    let mut mu = vec![0.0; n];
    let mut best: Option<(f64, f64, f64, Vec<f64>)> = None;
    for iter in 1..=MAX_POWER_ITERATIONS {
        m.mul_vec(&u, &mut mu);
        let (lo, hi) = u
            .iter()
            .zip(&mu)
            .map(|(x, y)| y / x)
            .fold((f64::INFINITY, 0.0f64), |(lo, hi), q| (lo.min(q), hi.max(q)));
        let gap = hi - lo;
        if best.as_ref().is_none_or(|b| gap < b.0) {
            best = Some((gap, lo, hi, u.clone()));
        }
        if gap <= 8.0 * f64::EPSILON * hi * n as f64 {
            return Ok(finish(m, lo, hi, u, iter));
        }
        // shifted step: u ← (M/‖M‖ + I)u, renormalized to sum 1
        let mut sum = 0.0;
        for i in 0..n {
            u[i] += mu[i] / norm;
            sum += u[i];
        }
        u.iter_mut().for_each(|x| *x /= sum);
    }
    match best {
        Some((gap, lo, hi, u)) if gap <= RADIUS_TOL * 1e-2 * hi => {
            Ok(finish(m, lo, hi, u, MAX_POWER_ITERATIONS))
        }
        _ => Err(Error::ConvergenceFailure(MAX_POWER_ITERATIONS)),
    }
}

fn finish(m: &RatioMatrix, lo: f64, hi: f64, u: Vec<f64>, iterations: usize) -> PerronData {
    let radius = 0.5 * (lo + hi);
    let sum: f64 = u.iter().sum();
    let vector: Vec<f64> = u.iter().map(|x| x / sum).collect();
    let mut mu = vec![0.0; m.n];
    m.mul_vec(&vector, &mut mu);
    let residual = mu
        .iter()
        .zip(&vector)
        .map(|(y, x)| (y - radius * x).abs())
        .fold(0.0, f64::max);
    PerronData {
        radius,
        vector,
        residual,
        iterations,
    }
}

pub fn spectral_radius(m: &RatioMatrix) -> Result<f64> {
    Ok(perron_vector(m)?.radius)
}

/// `Φ(s)`: spectral radius of the ratio matrix at exponent `s`.
pub fn phi(sys: &GdSystem, s: f64, kind: RatioKind) -> Result<f64> {
    spectral_radius(&build_ratio_matrix(sys, s, kind)?)
}

#[derive(Clone, Debug, Serialize)]
pub struct GraphDimension {
    pub kind: RatioKind,
    pub value: f64,
    pub phi_at_value: f64,
    pub bracket: (f64, f64),
    pub iterations: usize,
}

/// Root of `Φ(s) = 1` by bisection. `kind = Upper` gives `s*`, `Lower` gives `s′`.
pub fn graph_dimension(sys: &GdSystem, kind: RatioKind) -> Result<GraphDimension> {
    let phi0 = phi(sys, 0.0, kind)?;
    if phi0 < 1.0 - 1e-12 {
        return Err(Error::BracketFailure(phi0));
    }
    if phi0 <= 1.0 + 1e-12 {
        return Ok(GraphDimension {
            kind,
            value: 0.0,
            phi_at_value: phi0,
            bracket: (0.0, 0.0),
            iterations: 0,
        });
    }
    let mut lo = 0.0;
    let mut hi = 1.0;
    while phi(sys, hi, kind)? >= 1.0 {
        lo = hi;
        hi *= 2.0;
        if hi > 1e6 {
            return Err(Error::BracketFailure(phi0));
        }
    }
    let mut iterations = 0;
    while hi - lo > 1e-15 * hi.max(1.0) && iterations < 200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if phi(sys, mid, kind)? >= 1.0 {
            lo = mid;
        } else {
            hi = mid;
        }
        iterations += 1;
    }
    let value = 0.5 * (lo + hi);
    let phi_at_value = phi(sys, value, kind)?;
    if (phi_at_value - 1.0).abs() > ROOT_TOL {
        return Err(Error::ConvergenceFailure(iterations));
    }
    Ok(GraphDimension {
        kind,
        value,
        phi_at_value,
        bracket: (lo, hi),
        iterations,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct CrossCutBound {
    pub delta: f64,
    pub cardinality: usize,
    pub bound: f64,
    pub holds: bool,
    pub s_star: f64,
    pub rho_min: f64,
    pub u_min: f64,
    pub u_max: f64,
}

/// Compares `|T_i|` at mesh `δ` with `(δ ρ_min)^{-s*} · u_max / u_min`.
///
/// `ρ_min` is the smallest edge ratio in the whole system: the last edge of a
/// cut path can be any edge.
pub fn cross_cut_bound_check(sys: &GdSystem, vertex: VertexId, delta: f64) -> Result<CrossCutBound> {
    check_delta(delta)?;
    let cut = cross_cut(sys, vertex, delta, RatioKind::Upper)?;
    let dim = graph_dimension(sys, RatioKind::Upper)?;
    let perron = perron_vector(&build_ratio_matrix(sys, dim.value, RatioKind::Upper)?)?;
    let u_min = perron.vector.iter().copied().fold(f64::INFINITY, f64::min);
    let u_max = perron.vector.iter().copied().fold(0.0, f64::max);
    let rho_min = sys.min_ratio(RatioKind::Upper);
    let bound = (delta * rho_min).powf(-dim.value) * u_max / u_min;
    Ok(CrossCutBound {
        delta,
        cardinality: cut.len(),
        bound,
        holds: cut.len() as f64 <= bound,
        s_star: dim.value,
        rho_min,
        u_min,
        u_max,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{CondensationSet, SimilarityMap};

    fn loops(ratios: &[(i64, i64)]) -> GdSystem {
        GdSystem::single_vertex(
            1,
            ratios
                .iter()
                .enumerate()
                .map(|(k, &(a, b))| SimilarityMap::line(Real::ratio(a, b), false, Real::int(k as i64)))
                .collect(),
            CondensationSet::empty(),
        )
    }

    #[test]
    fn two_by_two_example() {
        let m = RatioMatrix::from_rows(&[vec![0.5, 1.0 / 3.0], vec![0.5, 1.0 / 3.0]]).unwrap();
        let p = perron_vector(&m).unwrap();
        assert!((p.radius - 5.0 / 6.0).abs() < 1e-12);
        assert!((p.vector[0] - 0.5).abs() < 1e-12);
        assert!((p.vector[1] - 0.5).abs() < 1e-12);
        assert!(p.residual < 1e-12);
    }

    #[test]
    fn scalar_matrix() {
        let m = RatioMatrix::from_rows(&[vec![0.37]]).unwrap();
        let p = perron_vector(&m).unwrap();
        assert_eq!(p.vector, vec![1.0]);
        assert!((p.radius - 0.37).abs() < 1e-15);
    }

    #[test]
    fn periodic_matrix_converges() {
        let m = RatioMatrix::from_rows(&[vec![0.0, 2.0], vec![0.5, 0.0]]).unwrap();
        let p = perron_vector(&m).unwrap();
        assert!((p.radius - 1.0).abs() < 1e-12);
        assert!(p.residual < 1e-12);
    }

    #[test]
    fn reducible_matrix_rejected() {
        let m = RatioMatrix::from_rows(&[vec![0.5, 0.1], vec![0.0, 0.3]]).unwrap();
        assert!(matches!(spectral_radius(&m), Err(Error::NotIrreducible)));
        let z = RatioMatrix::from_rows(&[vec![0.0]]).unwrap();
        assert!(matches!(spectral_radius(&z), Err(Error::NotIrreducible)));
    }

    #[test]
    fn counts_at_zero() {
        let sys = loops(&[(1, 3), (1, 3), (1, 2)]);
        let m = build_ratio_matrix(&sys, 0.0, RatioKind::Upper).unwrap();
        assert_eq!(m.entry(0, 0), Real::int(3));
        let m1 = build_ratio_matrix(&loops(&[(1, 3), (1, 3)]), 1.0, RatioKind::Upper).unwrap();
        assert_eq!(m1.entry(0, 0), Real::ratio(2, 3));
    }

    #[test]
    fn closed_form_dimensions() {
        let s = graph_dimension(&loops(&[(1, 3), (1, 3)]), RatioKind::Upper).unwrap();
        assert!((s.value - 2f64.ln() / 3f64.ln()).abs() < 1e-9);
        let golden = -(((5f64).sqrt() - 1.0) / 2.0).log2();
        let s = graph_dimension(&loops(&[(1, 2), (1, 4)]), RatioKind::Upper).unwrap();
        assert!((s.value - golden).abs() < 1e-9);
        let s = graph_dimension(&loops(&[(1, 2), (1, 2)]), RatioKind::Upper).unwrap();
        assert!((s.value - 1.0).abs() < 1e-9);
        let s = graph_dimension(&loops(&[(1, 2)]), RatioKind::Upper).unwrap();
        assert_eq!(s.value, 0.0);
    }

    #[test]
    fn bound_on_two_halves() {
        let sys = loops(&[(1, 2), (1, 2)]);
        let b = cross_cut_bound_check(&sys, VertexId(0), 0.3).unwrap();
        assert_eq!(b.cardinality, 4);
        assert!((b.bound - 1.0 / 0.15).abs() < 1e-9);
        assert!(b.holds);
    }
}
