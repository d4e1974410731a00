mod common;

use common::{random_features, random_frame, suites};
use proptest::prelude::*;
use proptest::strategy::Strategy as PropStrategy;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use trajgnn::models::{prepare_graph, Model, ModelConfig};
use trajgnn::numkern::Tensor;
use trajgnn::scenegraph::{build_graph, SceneFrame, Strategy, VehicleState, ALONGSIDE_M};

#[test]
fn gcn_layer_matches_dense_reference() {
    let d = suites::gcn_dense_oracle(200);
    assert!(d < 1e-12, "max abs diff {d:e}");
}

#[test]
fn gat_layer_matches_dense_reference() {
    let d = suites::gat_dense_oracle(200);
    assert!(d < 1e-12, "max abs diff {d:e}");
}

#[test]
fn predictions_permute_with_vehicles() {
    let d = suites::equivariance(100);
    assert!(d < 1e-9, "max abs diff {d:e}");
}

#[test]
fn nodes_beyond_two_hops_have_no_influence() {
    let (d, checked) = suites::locality(120);
    assert_eq!(d, 0.0);
    assert!(
        checked > 20,
        "only {checked} scenes had nodes beyond two hops"
    );
}

#[test]
fn self_connections_ignore_other_vehicles() {
    assert_eq!(suites::self_blindness(), 0.0);
}

#[test]
fn self_connection_gat_matches_feed_forward_layout() {
    // with only self-loops every attention weight is one
    let cfg = ModelConfig::gat().with_hidden_dim(8);
    let frame = random_frame(&mut ChaCha8Rng::seed_from_u64(16), 4);
    let g = build_graph(&frame, Strategy::SelfConnections).unwrap();
    assert_eq!(g.num_edges(), 4);
    assert_eq!(g.self_loop_count(), 4);
    let model = Model::new(cfg, Strategy::SelfConnections, 0).unwrap();
    let x = random_features(&mut ChaCha8Rng::seed_from_u64(17), 4, 20);
    let full = model
        .predict(
            &x,
            &prepare_graph(&cfg, Strategy::SelfConnections, &frame).unwrap(),
        )
        .unwrap();
    for k in 0..4 {
        let one = SceneFrame::new(0.0, vec![frame.states()[k]]).unwrap();
        let xk = Tensor::matrix(1, 20, x.row(k).to_vec()).unwrap();
        let alone = model
            .predict(
                &xk,
                &prepare_graph(&cfg, Strategy::SelfConnections, &one).unwrap(),
            )
            .unwrap();
        assert_eq!(alone.row(0), full.row(k));
    }
}

fn arb_frame() -> impl PropStrategy<Value = SceneFrame> {
    proptest::collection::vec((0.0..150.0f64, 1..=3i32, 10.0..35.0f64), 1..12).prop_map(|cars| {
        let states = cars
            .into_iter()
            .enumerate()
            .map(|(k, (x, lane, v))| {
                VehicleState::new(
                    k as i64 + 1,
                    x,
                    trajgnn::datapipe::lane_center(lane),
                    v,
                    0.0,
                    lane,
                )
            })
            .collect();
        SceneFrame::new(0.0, states).unwrap()
    })
}

proptest! {
    #[test]
    fn neighbour_graphs_are_bounded_and_loop_free(frame in arb_frame()) {
        let g = build_graph(&frame, Strategy::NeighbourConnection).unwrap();
        prop_assert_eq!(g.self_loop_count(), 0);
        for i in 0..g.num_nodes() {
            prop_assert!(g.in_neighbors(i).len() <= 8);
        }
    }

    #[test]
    fn preceding_is_a_subgraph_of_neighbour(frame in arb_frame()) {
        let pre = build_graph(&frame, Strategy::PrecedingConnection).unwrap();
        let nb = build_graph(&frame, Strategy::NeighbourConnection).unwrap();
        let st = frame.states();
        // a same-lane leader closer than the alongside band is not an Ahead neighbour
        for (s, d) in pre.edges().filter(|&(s, d)| st[s].x - st[d].x > ALONGSIDE_M) {
            prop_assert!(nb.find_edge(s, d).is_some(), "edge {} -> {}", s, d);
        }
        for i in 0..pre.num_nodes() {
            prop_assert!(pre.in_neighbors(i).len() <= 1);
        }
    }

    #[test]
    fn all_connections_is_complete(frame in arb_frame()) {
        let g = build_graph(&frame, Strategy::AllConnections).unwrap();
        let n = g.num_nodes();
        prop_assert_eq!(g.num_edges(), n * (n - 1));
    }
}
