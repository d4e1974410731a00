#![allow(dead_code)]

pub mod suites;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use trajgnn::datapipe::lane_center;
use trajgnn::models::{ModelConfig, ModelKind};
use trajgnn::numkern::Tensor;
use trajgnn::scenegraph::{SceneFrame, VehicleState};

/// `n` vehicles on three lanes within 120 m, distinct ids.
pub fn random_frame(rng: &mut ChaCha8Rng, n: usize) -> SceneFrame {
    let states = (0..n)
        .map(|i| {
            let lane = rng.gen_range(1..=3);
            VehicleState::new(
                10 + 3 * i as i64,
                rng.gen_range(0.0..120.0),
                lane_center(lane) + rng.gen_range(-0.5..0.5),
                rng.gen_range(15.0..30.0),
                rng.gen_range(-0.3..0.3),
                lane,
            )
        })
        .collect();
    SceneFrame::new(0.0, states).unwrap()
}

pub fn random_features(rng: &mut ChaCha8Rng, n: usize, cols: usize) -> Tensor {
    Tensor::matrix(
        n,
        cols,
        (0..n * cols).map(|_| rng.gen_range(-1.0..1.0)).collect(),
    )
    .unwrap()
}

/// Every GCN and GAT flag combination plus FF, at a small width.
pub fn all_configs(hidden: usize) -> Vec<ModelConfig> {
    let mut out = vec![ModelConfig::ff().with_hidden_dim(hidden)];
    for kind in [ModelKind::Gcn, ModelKind::Gat] {
        for bits in 0..8u8 {
            let mut c = ModelConfig::new(kind).with_hidden_dim(hidden);
            c.use_residual = bits & 1 != 0;
            c.use_ff_output = bits & 2 != 0;
            match kind {
                ModelKind::Gcn => c.use_weighted_edges = bits & 4 != 0,
                _ => c.use_edge_features = bits & 4 != 0,
            }
            out.push(c);
        }
    }
    out
}
