use crate::datapipe::PredictionWindow;
use crate::models::{prepare_graph, ModelConfig, FUTURE_STEPS, INPUT_DIM, OUTPUT_DIM};
use crate::numkern::Tensor;
use crate::scenegraph::{InteractionGraph, Strategy};
use crate::Result;

use super::Trajectory;

/// Scale applied to positions and displacements, 1/m.
pub const POSITION_SCALE: f64 = 0.01;
/// Scale applied to velocities, s/m.
pub const VELOCITY_SCALE: f64 = 0.1;

/// `N × 20` input: for each history second, scene-frame position and
/// velocity, both scaled.
pub fn window_features(w: &PredictionWindow) -> Tensor {
    let mut data = Vec::with_capacity(w.len() * INPUT_DIM);
    for v in &w.vehicles {
        for s in v.history() {
            data.extend_from_slice(&[
                s.x * POSITION_SCALE,
                s.y * POSITION_SCALE,
                s.vx * VELOCITY_SCALE,
                s.vy * VELOCITY_SCALE,
            ]);
        }
    }
    Tensor::matrix(w.len(), INPUT_DIM, data).expect("consistent sizes")
}

/// `M × 10` targets for the loss-masked vehicles, in window order: future
/// displacements from the last observed position, scaled, as
/// `(dx1, dy1, ..., dx5, dy5)`.
pub fn window_targets(w: &PredictionWindow) -> Tensor {
    let rows = w.loss_indices();
    let mut data = Vec::with_capacity(rows.len() * OUTPUT_DIM);
    for &i in &rows {
        let v = &w.vehicles[i];
        let last = v.last_observed();
        for s in v.samples[v.samples.len() - FUTURE_STEPS..].iter() {
            let s = s.as_ref().expect("loss-masked vehicles are complete");
            data.push((s.x - last.x) * POSITION_SCALE);
            data.push((s.y - last.y) * POSITION_SCALE);
        }
    }
    Tensor::matrix(rows.len(), OUTPUT_DIM, data).expect("consistent sizes")
}

/// Turns `N × 10` model output rows back into absolute positions.
pub fn decode_outputs(w: &PredictionWindow, out: &Tensor, first_row: usize) -> Vec<Trajectory> {
    w.vehicles
        .iter()
        .enumerate()
        .map(|(i, v)| {
            let last = v.last_observed();
            let row = out.row(first_row + i);
            std::array::from_fn(|k| {
                [
                    last.x + row[2 * k] / POSITION_SCALE,
                    last.y + row[2 * k + 1] / POSITION_SCALE,
                ]
            })
        })
        .collect()
}

/// A window with its features, graph and targets computed once.
#[derive(Debug, Clone)]
pub struct PreparedWindow {
    pub features: Tensor,
    pub graph: InteractionGraph,
    pub targets: Tensor,
    pub loss_rows: Vec<usize>,
}

impl PreparedWindow {
    pub fn new(config: &ModelConfig, strategy: Strategy, w: &PredictionWindow) -> Result<Self> {
        Ok(PreparedWindow {
            features: window_features(w),
            graph: prepare_graph(config, strategy, &w.history_frame()?)?,
            targets: window_targets(w),
            loss_rows: w.loss_indices(),
        })
    }
}

/// Several windows merged into one block-diagonal graph.
#[derive(Debug, Clone)]
pub struct Batch {
    pub features: Tensor,
    pub graph: InteractionGraph,
    pub targets: Tensor,
    /// Rows of `features` whose outputs are scored, aligned with `targets`.
    pub loss_rows: Vec<usize>,
}

impl Batch {
    pub fn merge(parts: &[&PreparedWindow]) -> Result<Self> {
        let nodes: usize = parts.iter().map(|p| p.features.rows()).sum();
        let scored: usize = parts.iter().map(|p| p.loss_rows.len()).sum();
        let mut features = Vec::with_capacity(nodes * INPUT_DIM);
        let mut targets = Vec::with_capacity(scored * OUTPUT_DIM);
        let mut loss_rows = Vec::with_capacity(scored);
        let mut offset = 0;
        for p in parts {
            features.extend_from_slice(p.features.data());
            targets.extend_from_slice(p.targets.data());
            loss_rows.extend(p.loss_rows.iter().map(|r| r + offset));
            offset += p.features.rows();
        }
        Ok(Batch {
            features: Tensor::matrix(nodes, INPUT_DIM, features)?,
            graph: InteractionGraph::disjoint_union(parts.iter().map(|p| &p.graph))?,
            targets: Tensor::matrix(scored, OUTPUT_DIM, targets)?,
            loss_rows,
        })
    }
}
