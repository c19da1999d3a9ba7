mod common;

use common::*;
use fswgnn::gnn::UpdateMap;
use fswgnn::{
    default_hidden_dim, disjoint_union, relative_distance, tmd, wl_equivalent, FswGnnModel, Graph,
    GnnError, Matrix, UpdateKind,
};
use proptest::prelude::*;

const PALETTE: &[f64] = &[-1.0, 0.5, 2.0];

fn shape(map: &UpdateMap) -> (usize, usize) {
    (map.output_dim(), map.input_dim())
}

#[test]
fn layer_shapes() {
    let model = FswGnnModel::new(2, 10, 3, 5).unwrap();
    let shapes: Vec<_> = model.layers().iter().map(|l| shape(&l.update)).collect();
    assert_eq!(shapes, vec![(10, 12), (10, 20), (10, 20)]);
    assert_eq!(model.layers()[0].aggregate.input_dim(), 2);
    assert!(model.layers()[1..].iter().all(|l| l.aggregate.input_dim() == 10));
    assert_eq!(shape(model.readout()), (10, 10));
    assert_eq!(model.readout_embedding().input_dim(), 10);
    assert_eq!(default_hidden_dim(6, 1), 14);
}

#[test]
fn deterministic_from_seed() {
    let a = FswGnnModel::new(3, 8, 2, 42).unwrap();
    assert_eq!(a, FswGnnModel::new(3, 8, 2, 42).unwrap());
    assert_ne!(a, FswGnnModel::new(3, 8, 2, 43).unwrap());
    assert!(FswGnnModel::new(0, 8, 2, 1).is_err());
    assert!(FswGnnModel::new(2, 0, 2, 1).is_err());
}

#[test]
fn zero_iterations_reads_out_raw_features() {
    let model = FswGnnModel::new(1, 6, 0, 9).unwrap();
    let g = path(3);
    let direct = model.readout_from(&Matrix::from_rows(g.features()));
    assert_eq!(model.graph_embedding(&g).unwrap(), direct);
    assert_eq!(model.node_embeddings(&g).unwrap().len(), 1);
}

#[test]
fn vertex_transitive_rows_agree() {
    let model = FswGnnModel::new(1, 14, 4, 2).unwrap();
    for h in model.node_embeddings(&cycle(6)).unwrap() {
        assert!((1..6).all(|v| h.row(v) == h.row(0)));
    }
}

#[test]
fn path_splits_at_first_iteration() {
    let model = FswGnnModel::new(1, 8, 1, 3).unwrap();
    let h = &model.node_embeddings(&path(3)).unwrap()[1];
    assert_eq!(h.row(0), h.row(2));
    assert!(relative_distance(h.row(0), h.row(1)) > 1e-6);
}

#[test]
fn classic_pairs() {
    let m = default_hidden_dim(6, 1);
    let c3c3 = disjoint_union(&cycle(3), &cycle(3)).unwrap();
    for kind in [UpdateKind::Linear, UpdateKind::Hidden] {
        for seed in 0..5 {
            let model = FswGnnModel::with_update(1, m, 6, seed, kind).unwrap();
            let emb = |g: &Graph| model.graph_embedding(g).unwrap();
            assert!(relative_distance(&emb(&cycle(6)), &emb(&c3c3)) <= 1e-9);
            assert!(relative_distance(&emb(&path(3)), &emb(&cycle(3))) >= 1e-6);
        }
    }
}

#[test]
fn dimension_mismatch() {
    let model = FswGnnModel::new(2, 4, 1, 0).unwrap();
    assert!(matches!(model.graph_embedding(&cycle(3)), Err(GnnError::DimensionMismatch { .. })));
}

#[test]
fn hidden_variant_matches_wl_on_tiny_graphs() {
    let graphs = small_corpus(4, &[1.0]);
    let model = FswGnnModel::with_update(1, default_hidden_dim(4, 1), 4, 11, UpdateKind::Hidden).unwrap();
    let emb: Vec<_> = graphs.iter().map(|g| model.graph_embedding(g).unwrap()).collect();
    for i in 0..graphs.len() {
        for j in i + 1..graphs.len() {
            let same = relative_distance(&emb[i], &emb[j]) <= 1e-8;
            assert_eq!(same, wl_equivalent(&graphs[i], &graphs[j]).unwrap(), "pair ({i}, {j})");
        }
    }
}

#[test]
fn embedding_zero_set_matches_tree_distance() {
    // T message-passing rounds see exactly what depth-(T + 1) computation
    // trees see, since a lone root already has depth 1.
    let graphs = small_corpus(4, &[1.0]);
    for t in 1..=4 {
        let model = FswGnnModel::new(1, default_hidden_dim(4, 1), t, 100 + t as u64).unwrap();
        let emb: Vec<_> = graphs.iter().map(|g| model.graph_embedding(g).unwrap()).collect();
        for i in 0..graphs.len() {
            for j in i + 1..graphs.len() {
                let same = relative_distance(&emb[i], &emb[j]) <= 1e-8;
                let zero = tmd(&graphs[i], &graphs[j], t + 1).unwrap() <= 1e-8;
                assert_eq!(same, zero, "T={t} pair ({i}, {j})");
            }
        }
    }
}

proptest! {
    #[test]
    fn equivariant_and_invariant((g, perm) in graph_and_perm(7, 2, PALETTE), seed in any::<u64>()) {
        let model = FswGnnModel::new(2, 6, 3, seed).unwrap();
        let pg = g.permute(&perm).unwrap();
        prop_assert_eq!(model.graph_embedding(&g).unwrap(), model.graph_embedding(&pg).unwrap());
        let (h, ph) = (model.node_embeddings(&g).unwrap(), model.node_embeddings(&pg).unwrap());
        for (a, b) in h.iter().zip(&ph) {
            for (v, &pv) in perm.iter().enumerate() {
                prop_assert_eq!(a.row(v), b.row(pv));
            }
        }
    }

    #[test]
    fn outputs_are_finite(g in graph_strategy(7, 2, PALETTE), seed in any::<u64>()) {
        let model = FswGnnModel::with_update(2, 5, 3, seed, UpdateKind::Hidden).unwrap();
        prop_assert!(model.graph_embedding(&g).unwrap().iter().all(|x| x.is_finite()));
    }
}
