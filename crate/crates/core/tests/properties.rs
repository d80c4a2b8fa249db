mod common;

use embedmap::linalg::{ridge_fit, ridge_objective, svd, truncate_rank, variance_explained};
use embedmap::metrics::{cosine_distance, mapped_distance};
use embedmap::protocol::{accuracy_at, evaluate, find_threshold, ScoredPair};
use embedmap::{io, EmbeddingSet, EvalConfig, Label, LinearMap, MappingMode, Pair};
use nalgebra::DMatrix;
use proptest::prelude::*;

fn vector(dim: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-10.0..10.0f64, dim)
        .prop_filter("nonzero", |v| v.iter().map(|x| x * x).sum::<f64>() > 1e-6)
}

fn matrix(r: usize, c: usize) -> impl Strategy<Value = DMatrix<f64>> {
    prop::collection::vec(-3.0..3.0f64, r * c).prop_map(move |v| DMatrix::from_vec(r, c, v))
}

fn scored_set() -> impl Strategy<Value = Vec<ScoredPair>> {
    prop::collection::vec((0u8..20, any::<bool>()), 1..40).prop_map(|raw| {
        raw.into_iter()
            .enumerate()
            .map(|(i, (d, same))| ScoredPair {
                pair: Pair::new(
                    format!("a{i}"),
                    format!("b{i}"),
                    if same { Label::Same } else { Label::Different },
                ),
                distance: d as f64 / 10.0,
            })
            .collect()
    })
}

proptest! {
    #[test]
    fn cosine_is_symmetric_and_scale_invariant(
        (x, y) in (1usize..20).prop_flat_map(|d| (vector(d), vector(d))),
        c in 1e-3..1e3f64,
    ) {
        let d = cosine_distance(&x, &y).unwrap();
        prop_assert!((0.0..=2.0).contains(&d));
        prop_assert!((d - cosine_distance(&y, &x).unwrap()).abs() <= 1e-12);
        let cx: Vec<f64> = x.iter().map(|v| v * c).collect();
        prop_assert!((d - cosine_distance(&cx, &y).unwrap()).abs() <= 1e-12);
    }

    #[test]
    fn mapped_distance_ignores_map_scale(
        x in vector(4), y in vector(3), m in matrix(4, 3), c in 0.01..100.0f64,
    ) {
        let a = LinearMap::new(m.clone(), 0.0, 0, "", "").unwrap();
        let b = LinearMap::new(m * c, 0.0, 0, "", "").unwrap();
        if let (Ok(da), Ok(db)) = (mapped_distance(&x, &y, &a), mapped_distance(&x, &y, &b)) {
            prop_assert!((da - db).abs() <= 1e-10);
        }
    }

    #[test]
    fn threshold_beats_every_candidate(scored in scored_set()) {
        let found = find_threshold(&scored).unwrap();
        prop_assert_eq!(accuracy_at(&scored, found.tau).unwrap(), found.train_accuracy);
        for g in -5..=25 {
            prop_assert!(accuracy_at(&scored, g as f64 / 10.0 + 0.05).unwrap() <= found.train_accuracy);
        }
    }

    #[test]
    fn ridge_is_a_local_minimum(
        s in matrix(12, 4), t in matrix(12, 3), lambda in 0.01..10.0f64,
        dm in matrix(4, 3),
    ) {
        let fit = ridge_fit(&s, &t, lambda).unwrap();
        let base = ridge_objective(&s, &t, fit.matrix(), lambda);
        let nudged = fit.matrix() + dm * 1e-3;
        prop_assert!(ridge_objective(&s, &t, &nudged, lambda) >= base - 1e-9 * base.max(1.0));
    }

    #[test]
    fn truncation_shrinks_residual_monotonically(m in matrix(6, 5)) {
        let map = LinearMap::new(m.clone(), 0.0, 0, "", "").unwrap();
        let dec = svd(&m).unwrap();
        let mut last_residual = f64::INFINITY;
        let mut last_var = 0.0;
        for k in 1..=5 {
            let r = (truncate_rank(&map, k).unwrap().matrix() - &m).norm();
            prop_assert!(r <= last_residual + 1e-12);
            last_residual = r;
            if m.norm() > 1e-9 {
                let v = variance_explained(&dec, k).unwrap();
                prop_assert!(v + 1e-12 >= last_var);
                last_var = v;
            }
        }
        let full = truncate_rank(&map, 5).unwrap();
        prop_assert_eq!(full.matrix(), &m);
    }

    #[test]
    fn embeddings_round_trip(
        rows in prop::collection::vec(vector(5), 1..20),
        binary in any::<bool>(),
    ) {
        let mut set = EmbeddingSet::new(5, "sys").unwrap();
        for (i, r) in rows.iter().enumerate() {
            set.insert(format!("p{i}/0001"), r).unwrap();
        }
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join(if binary { "e.bin" } else { "e.csv" });
        io::write_embeddings(&set, &path).unwrap();
        let back = io::read_embeddings(&path).unwrap();
        prop_assert_eq!(back.ids(), set.ids());
        for (id, v) in set.iter() {
            prop_assert_eq!(back.get(id).unwrap(), v);
        }
    }

    #[test]
    fn map_round_trip(m in matrix(3, 7), lambda in 0.0..5.0f64) {
        let map = LinearMap::new(m, lambda, 9, "a", "b").unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("m.map");
        io::write_map(&map, &path).unwrap();
        prop_assert_eq!(io::read_map(&path).unwrap(), map);
    }
}

#[test]
fn identity_mode_ignores_row_scaling() {
    let w = common::small_world(2, 0.1, 3);
    let config = EvalConfig::default().with_mode(MappingMode::Identity);
    let a = evaluate(&w.systems[0], &w.systems[1], &w.proto, &config).unwrap();
    let b = evaluate(
        &common::scaled(&w.systems[0], 37.5),
        &common::scaled(&w.systems[1], 0.02),
        &w.proto,
        &config,
    )
    .unwrap();
    for (x, y) in a.per_fold.iter().zip(&b.per_fold) {
        assert!((x.test_accuracy - y.test_accuracy).abs() < 1e-12);
    }
}

#[test]
fn mean_and_std_match_per_fold_accuracies() {
    let w = common::small_world(2, 0.1, 4);
    let r = evaluate(
        &w.systems[0],
        &w.systems[1],
        &w.proto,
        &EvalConfig::default(),
    )
    .unwrap();
    let accs: Vec<f64> = r.per_fold.iter().map(|f| f.test_accuracy).collect();
    let mean = accs.iter().sum::<f64>() / accs.len() as f64;
    let var = accs.iter().map(|a| (a - mean).powi(2)).sum::<f64>() / accs.len() as f64;
    assert!((r.mean_accuracy - mean).abs() < 1e-12);
    assert!((r.std_accuracy - var.sqrt()).abs() < 1e-12);
    assert!(r
        .per_fold
        .iter()
        .enumerate()
        .all(|(i, f)| f.fold_index == i));
}

#[test]
fn fold_isolation() {
    // perturbing embeddings only referenced by fold k's pairs cannot change the map fit for k
    let w = common::small_world(2, 0.1, 5);
    let config = EvalConfig::default();
    let k = 3;
    let before =
        embedmap::protocol::fit_map(&w.systems[0], &w.systems[1], &w.proto, &config, Some(k))
            .unwrap();

    let held_ids: std::collections::HashSet<&str> = w.proto.folds()[k]
        .pairs
        .iter()
        .flat_map(|p| [p.id_a.as_str(), p.id_b.as_str()])
        .collect();
    let mut source = EmbeddingSet::new(w.systems[0].dim(), "s").unwrap();
    for (id, v) in w.systems[0].iter() {
        let v: Vec<f64> = if held_ids.contains(id) {
            v.iter().map(|x| -x + 0.3).collect()
        } else {
            v.to_vec()
        };
        source.insert(id, &v).unwrap();
    }
    let after =
        embedmap::protocol::fit_map(&source, &w.systems[1], &w.proto, &config, Some(k)).unwrap();
    assert_eq!(before.matrix(), after.matrix());
}
