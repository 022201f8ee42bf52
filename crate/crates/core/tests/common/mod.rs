#![allow(dead_code)]

use std::path::PathBuf;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use gdfractal::document::{load_family, load_system, FamilyDocument};
use gdfractal::{EdgeId, GdSystem, RatioKind, Real, SimilarityMap, VertexId};

pub fn system_path(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("systems").join(name)
}

pub fn bundled(name: &str) -> GdSystem {
    load_system(system_path(&format!("{name}.system"))).expect("bundled system loads")
}

pub fn bundled_family(name: &str) -> FamilyDocument {
    load_family(system_path(&format!("{name}.family"))).expect("bundled family loads")
}

/// Strongly connected line system: a ring through all vertices plus a few
/// random extra edges, out-degree at most 3, rational ratios in (0, 0.6].
pub fn random_system(seed: u64) -> GdSystem {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = rng.gen_range(1..=3);
    let names: Vec<String> = (0..n).map(|i| format!("v{i}")).collect();
    let mut sys = GdSystem::new(1, names);
    let mut degree = vec![0usize; n];
    let edge = |sys: &mut GdSystem, rng: &mut ChaCha8Rng, from: usize, to: usize| {
        let den = rng.gen_range(2..=10i64);
        let num = rng.gen_range(1..=(den * 3 / 5).max(1));
        let scale = Real::ratio(num, den);
        let lower = scale * Real::ratio(rng.gen_range(5..=10), 10);
        let shift = Real::ratio(rng.gen_range(0..10), 10);
        let map = SimilarityMap::line(scale, false, shift).with_lower_scale(lower);
        let id = format!("e{}", sys.edges().len());
        sys.add_edge(id, VertexId(from), VertexId(to), map).unwrap();
    };
    for i in 0..n {
        edge(&mut sys, &mut rng, i, (i + 1) % n);
        degree[i] += 1;
    }
    for _ in 0..rng.gen_range(0..=4) {
        let from = rng.gen_range(0..n);
        if degree[from] < 3 {
            let to = rng.gen_range(0..n);
            edge(&mut sys, &mut rng, from, to);
            degree[from] += 1;
        }
    }
    assert!(sys.validate().is_valid(), "{}", sys.validate());
    sys
}

/// Every path from `v` with length at most `max_len`, no pruning.
pub fn all_paths(sys: &GdSystem, v: VertexId, max_len: usize) -> Vec<Vec<EdgeId>> {
    let mut out = Vec::new();
    let mut stack: Vec<Vec<EdgeId>> = sys.out_edges(v).iter().map(|&e| vec![e]).collect();
    while let Some(p) = stack.pop() {
        if p.len() < max_len {
            let end = sys.edge(*p.last().unwrap()).to;
            for &e in sys.out_edges(end) {
                let mut q = p.clone();
                q.push(e);
                stack.push(q);
            }
        }
        out.push(p);
    }
    out
}

/// Product of upper ratios along a path, as an exact rational when every
/// ratio is exact.
pub fn path_ratio(sys: &GdSystem, path: &[EdgeId]) -> f64 {
    path.iter()
        .fold(Real::int(1), |r, &e| r * sys.edge(e).map.exact_ratio(RatioKind::Upper))
        .value()
}

/// The cross-cut by brute force: paths with ratio below `δ` whose every proper
/// prefix has ratio at least `δ`, sorted.
pub fn brute_cross_cut(sys: &GdSystem, v: VertexId, delta: f64) -> Vec<Vec<EdgeId>> {
    let rho_max = sys.max_ratio(RatioKind::Upper);
    let max_len = (delta.ln() / rho_max.ln()).ceil() as usize + 1;
    let mut cut: Vec<Vec<EdgeId>> = all_paths(sys, v, max_len)
        .into_iter()
        .filter(|p| {
            path_ratio(sys, p) < delta && (1..p.len()).all(|k| path_ratio(sys, &p[..k]) >= delta)
        })
        .collect();
    cut.sort();
    cut
}
