//! Interaction graphs over the vehicles of one scene.
//!
//! Edges lead from a neighbouring vehicle to the ego vehicle it may
//! influence, so every node aggregates over its in-edges. Node order is
//! ascending vehicle id.

mod build;
mod graph;
mod neighbors;
mod weights;

pub use build::{build_graph, Strategy};
pub use graph::InteractionGraph;
pub use neighbors::{find_neighbors, nearest_ahead_in_lane, Neighbor, NeighborSlot};
pub use weights::{
    gcn_normalization, inverse_distance_weights, relative_position_edge_features, NormMode,
};

use crate::{Error, Result};

/// Longitudinal reach of neighbour search and preceding-vehicle search, m.
pub const NEIGHBOR_CUTOFF_M: f64 = 100.0;
/// Longitudinal offset under which a vehicle in an adjacent lane counts as
/// alongside, m.
pub const ALONGSIDE_M: f64 = 5.0;
/// Scale applied to relative positions in edge features, 1/m.
pub const EDGE_FEATURE_SCALE: f64 = 0.01;
/// Lower bound on distances used for inverse-distance weights, m.
pub const MIN_WEIGHT_DISTANCE_M: f64 = 1.0;

/// Kinematic state of one vehicle at one instant. `x` grows in the driving
/// direction, `y` is lateral.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VehicleState {
    pub vehicle_id: i64,
    pub x: f64,
    pub y: f64,
    pub vx: f64,
    pub vy: f64,
    pub lane_id: i32,
}

impl VehicleState {
    pub fn new(vehicle_id: i64, x: f64, y: f64, vx: f64, vy: f64, lane_id: i32) -> Self {
        VehicleState {
            vehicle_id,
            x,
            y,
            vx,
            vy,
            lane_id,
        }
    }

    fn validate(&self) -> Result<()> {
        if ![self.x, self.y, self.vx, self.vy]
            .iter()
            .all(|v| v.is_finite())
        {
            return Err(Error::NonFinite(format!(
                "state of vehicle {}",
                self.vehicle_id
            )));
        }
        if self.lane_id < 1 {
            return Err(Error::invalid(format!(
                "vehicle {} has lane id {} (must be >= 1)",
                self.vehicle_id, self.lane_id
            )));
        }
        Ok(())
    }

    pub fn distance_to(&self, other: &VehicleState) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }
}

/// All vehicles present at one timestamp, sorted by vehicle id.
#[derive(Debug, Clone, PartialEq)]
pub struct SceneFrame {
    timestamp: f64,
    states: Vec<VehicleState>,
}

impl SceneFrame {
    pub fn new(timestamp: f64, mut states: Vec<VehicleState>) -> Result<Self> {
        for s in &states {
            s.validate()?;
        }
        states.sort_by_key(|s| s.vehicle_id);
        if let Some(w) = states
            .windows(2)
            .find(|w| w[0].vehicle_id == w[1].vehicle_id)
        {
            return Err(Error::invalid(format!(
                "vehicle {} appears twice in one frame",
                w[0].vehicle_id
            )));
        }
        Ok(SceneFrame { timestamp, states })
    }

    pub fn timestamp(&self) -> f64 {
        self.timestamp
    }

    pub fn states(&self) -> &[VehicleState] {
        &self.states
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn index_of(&self, vehicle_id: i64) -> Option<usize> {
        self.states
            .binary_search_by_key(&vehicle_id, |s| s.vehicle_id)
            .ok()
    }

    pub fn get(&self, vehicle_id: i64) -> Option<&VehicleState> {
        self.index_of(vehicle_id).map(|i| &self.states[i])
    }

    pub fn vehicle_ids(&self) -> Vec<i64> {
        self.states.iter().map(|s| s.vehicle_id).collect()
    }
}
