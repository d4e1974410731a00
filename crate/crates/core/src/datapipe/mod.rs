//! Track ingestion, smoothing, windowing, splitting and synthetic traffic.
//!
//! Canonical axes: `x` grows in the driving direction, `y` is lateral, both
//! in metres.

mod csvutil;
mod parse;
mod raw;
mod scenes;
mod smooth;
mod split;
mod synth;
mod window;

pub use parse::{parse_highd, parse_ngsim, FEET_TO_M};
pub use raw::{RawTrackTable, Source, Track};
pub use scenes::{read_scenes, scenes_from_csv, scenes_to_csv, write_scenes, SCENE_COLUMNS};
pub use smooth::{double_ema, ema_alpha, smooth_and_differentiate, DEFAULT_SPAN_S};
pub use split::{split_dataset, DatasetSplit};
pub use synth::{
    generate_synthetic, lane_center, simulate_idm, SimVehicle, SynthConfig, SynthMode,
    LANE_CHANGE_S, LANE_WIDTH_M, SPAWN_GAP_M,
};
pub use window::{
    window_extract, PredictionWindow, Sample, WindowId, WindowVehicle, DEFAULT_STRIDE_S,
    WINDOW_SAMPLES,
};
