//! Learnable trajectory predictors.
//!
//! Every model maps per-vehicle history features (`N × 20`) to future
//! displacements (`N × 10`), standardising both sides with a stored
//! [`Normalizer`]. The body has two feature layers of width
//! `hidden_dim`, then an optional per-node linear head. Graph layers read an
//! [`InteractionGraph`](crate::scenegraph::InteractionGraph) prepared by
//! [`prepare_graph`].

mod config;
mod io;
mod layers;
mod model;
mod normalizer;

pub use config::{ModelConfig, ModelKind};
pub use layers::{
    dense, ff_forward, gat_layer, gcn_layer, DenseParams, FfParams, GatHeadParams, GatLayerParams,
    GatOptions, GcnLayerParams, GcnMode, HeadMerge, ATTENTION_SLOPE,
};
pub use model::{prepare_graph, Model};
pub use normalizer::Normalizer;

/// Observed samples per vehicle.
pub const HISTORY_STEPS: usize = 5;
/// Predicted samples per vehicle.
pub const FUTURE_STEPS: usize = 5;
/// Per-sample input features: x, y, vx, vy in the scene frame.
pub const FEATURES_PER_STEP: usize = 4;
pub const INPUT_DIM: usize = HISTORY_STEPS * FEATURES_PER_STEP;
pub const OUTPUT_DIM: usize = 2 * FUTURE_STEPS;
