//! Non-learned baselines: constant velocity and the Intelligent Driver
//! Model, plus random-search tuning of IDM parameters.

mod idm;
mod params;
mod tune;

pub(crate) use idm::same_lane_leaders;
pub use idm::{
    cvm_predict, idm_acceleration, idm_rollout, CvmPredictor, IdmPredictor, RolloutConfig,
    MIN_GAP_M,
};
pub use params::{IdmBounds, IdmParams};
pub use tune::{idm_objective, tune_idm, TuneResult, TUNE_ROUNDS};
