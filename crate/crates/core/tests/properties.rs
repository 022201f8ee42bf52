mod common;

use proptest::prelude::*;

use gdfractal::attractor::{CloudRole, PointCloud};
use gdfractal::boxdim::{analytic_count, cloud_series, cre, geometric_deltas};
use gdfractal::model::RATIO_SLACK;
use gdfractal::separation::{image_region, Region};
use gdfractal::spectral::{build_ratio_matrix, graph_dimension, perron_vector, phi, spectral_radius};
use gdfractal::{cross_cut, CondensationSet, Primitive, RatioKind, Real, SimilarityMap, VertexId};

use common::{all_paths, random_system};

fn config() -> ProptestConfig {
    ProptestConfig {
        cases: 64,
        ..ProptestConfig::default()
    }
}

proptest! {
    #![proptest_config(config())]

    #[test]
    fn cross_cut_is_a_complete_antichain(seed in any::<u64>(), delta in 0.01f64..0.9) {
        let sys = random_system(seed);
        for v in sys.vertices() {
            let cut = cross_cut(&sys, v, delta, RatioKind::Upper).unwrap();
            for p in &cut {
                prop_assert!(p.ratio < delta);
                let parent = p.ratio / sys.edge(*p.edges.last().unwrap()).map.scale().value();
                prop_assert!(p.len() == 1 || parent >= delta * (1.0 - 1e-9));
            }
            for (a, b) in cut.iter().zip(cut.iter().skip(1)) {
                prop_assert!(!a.is_prefix_of(b) && !b.is_prefix_of(a));
            }
            // every long enough path extends exactly one cut path
            let depth = cut.iter().map(|p| p.len()).max().unwrap();
            for path in all_paths(&sys, v, depth).into_iter().filter(|p| p.len() == depth).take(200) {
                let hits = cut.iter().filter(|c| path.starts_with(&c.edges)).count();
                prop_assert_eq!(hits, 1);
            }
        }
    }

    #[test]
    fn phi_strictly_decreasing(seed in any::<u64>()) {
        let sys = random_system(seed);
        let values: Vec<f64> = (0..20).map(|k| phi(&sys, k as f64 * 0.15, RatioKind::Upper).unwrap()).collect();
        prop_assert!(values[0] >= 1.0);
        prop_assert!(values.windows(2).all(|w| w[1] < w[0]), "{:?}", values);
    }

    #[test]
    fn lower_dimension_below_upper(seed in any::<u64>()) {
        let sys = random_system(seed);
        let s = graph_dimension(&sys, RatioKind::Upper).unwrap();
        let sp = graph_dimension(&sys, RatioKind::Lower).unwrap();
        prop_assert!(sp.value <= s.value);
        prop_assert!((s.phi_at_value - 1.0).abs() <= 1e-9);
        prop_assert!(s.bracket.0 <= s.value && s.value <= s.bracket.1);
    }

    #[test]
    fn transpose_has_same_radius(seed in any::<u64>(), s in 0.0f64..2.0) {
        let m = build_ratio_matrix(&random_system(seed), s, RatioKind::Upper).unwrap();
        let a = spectral_radius(&m).unwrap();
        let b = spectral_radius(&m.transpose()).unwrap();
        prop_assert!((a - b).abs() <= 1e-10 * a.max(1.0));
    }

    #[test]
    fn perron_vector_positive(seed in any::<u64>(), s in 0.0f64..2.0) {
        let m = build_ratio_matrix(&random_system(seed), s, RatioKind::Upper).unwrap();
        let p = perron_vector(&m).unwrap();
        prop_assert!(p.vector.iter().all(|&u| u > 0.0));
        prop_assert!((p.vector.iter().sum::<f64>() - 1.0).abs() <= 1e-12);
        prop_assert!(p.residual <= 1e-9);
    }

    #[test]
    fn adding_an_edge_never_lowers_dimension(seed in any::<u64>(), num in 1i64..6, from in 0usize..3, to in 0usize..3) {
        let mut sys = random_system(seed);
        let before = graph_dimension(&sys, RatioKind::Upper).unwrap().value;
        let n = sys.vertex_count();
        let map = SimilarityMap::line(Real::ratio(num, 10), false, Real::int(0));
        sys.add_edge("extra", VertexId(from % n), VertexId(to % n), map).unwrap();
        let after = graph_dimension(&sys, RatioKind::Upper).unwrap().value;
        prop_assert!(after >= before - 1e-12);
    }

    #[test]
    fn grid_counts_are_consistent(points in prop::collection::vec((0.0f64..1.0, 0.0f64..1.0), 1..400)) {
        let pts = points.iter().map(|&(x, y)| [x, y, 0.0]).collect();
        let cloud = PointCloud::new(None, 2, 1e-3, CloudRole::Homogeneous, pts);
        let series = cloud_series(&cloud, &geometric_deltas(2.0, 1, 10)).unwrap();
        prop_assert!(series.is_consistent());
        prop_assert!(series.counts.windows(2).all(|w| w[0] <= w[1] && w[1] <= 4 * w[0]));
        prop_assert!(series.counts.iter().all(|&c| c as usize <= cloud.len()));
    }

    #[test]
    fn cre_nonincreasing_in_t(a in 0i64..50, len in 1i64..50, delta in 0.01f64..0.5) {
        let set = CondensationSet::new(vec![Primitive::Segment(
            [Real::ratio(a, 50), Real::int(0), Real::int(0)],
            [Real::ratio(a + len, 50), Real::int(0), Real::int(0)],
        )]);
        let values: Vec<f64> = (0..10).map(|k| cre(&set, 1, k as f64 * 0.3, delta, 64).unwrap()).collect();
        prop_assert!(values.windows(2).all(|w| w[1] <= w[0]), "{:?}", values);
        prop_assert!(values.iter().all(|p| (0.0..=1.0).contains(p)));
    }

    #[test]
    fn segment_count_matches_formula(a in -100i64..100, len in 0i64..100, k in 1i32..12) {
        let delta = 2f64.powi(-k);
        let (lo, hi) = (a as f64 / 37.0, (a + len) as f64 / 37.0);
        let set = CondensationSet::new(vec![Primitive::Segment(
            [Real::ratio(a, 37), Real::int(0), Real::int(0)],
            [Real::ratio(a + len, 37), Real::int(0), Real::int(0)],
        )]);
        let formula = (hi / delta).floor() - (lo / delta).floor() + 1.0;
        prop_assert_eq!(analytic_count(&set, 1, delta).unwrap() as f64, formula);
    }

    #[test]
    fn image_region_commutes_with_maps(
        num in 1i64..9, rot in 0u32..8, reflect in any::<bool>(),
        tx in -5i64..5, ty in -5i64..5, u in 0.05f64..0.95, v in 0.05f64..0.95,
    ) {
        let square = Region::Polygon(vec![
            [Real::int(0), Real::int(0)],
            [Real::int(1), Real::int(0)],
            [Real::int(1), Real::int(1)],
            [Real::int(0), Real::int(1)],
        ]);
        let scale = Real::ratio(num, 10);
        let map = SimilarityMap::plane(scale, 90.0 * rot as f64, reflect, [Real::ratio(tx, 4), Real::ratio(ty, 4)]);
        let image = image_region(&map, &square).unwrap();
        prop_assert!(image.check().is_ok());
        let p = [u, v, 0.0];
        let depth = square.signed_depth(&p);
        let moved = image.signed_depth(&map.apply(&p));
        prop_assert!((moved - scale.value() * depth).abs() <= 1e-9);
        let corner = map.apply_exact(&[Real::int(1), Real::int(1), Real::int(0)]);
        prop_assert!(image.closure_contains(&corner));
    }
}

#[test]
fn ratio_ties_are_not_below_delta() {
    let sys = gdfractal::GdSystem::single_vertex(
        1,
        vec![
            SimilarityMap::line(Real::ratio(1, 2), false, Real::int(0)),
            SimilarityMap::line(Real::ratio(1, 10), false, Real::ratio(1, 2)),
        ],
        CondensationSet::empty(),
    );
    let cut = cross_cut(&sys, VertexId(0), 0.05, RatioKind::Upper).unwrap();
    // 1/2 · 1/10 rounds just below 0.05 in floating point
    assert!(cut.iter().all(|p| p.ratio < 0.05 * (1.0 - RATIO_SLACK)));
    assert!(!cut.iter().any(|p| p.edges.len() == 2 && p.ratio > 0.0499));
}
