use std::fmt;
use std::str::FromStr;

use super::{
    find_neighbors, nearest_ahead_in_lane, InteractionGraph, SceneFrame, NEIGHBOR_CUTOFF_M,
};
use crate::{Error, Result};

/// Rule deciding which vehicles are connected.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Strategy {
    /// Self-loops only; no interaction.
    SelfConnections,
    /// Every ordered pair of distinct vehicles.
    AllConnections,
    /// Same-lane predecessor to follower.
    PrecedingConnection,
    /// Up to eight lane-based neighbours to the ego vehicle.
    NeighbourConnection,
}

impl Strategy {
    pub const ALL: [Strategy; 4] = [
        Strategy::SelfConnections,
        Strategy::PrecedingConnection,
        Strategy::NeighbourConnection,
        Strategy::AllConnections,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Strategy::SelfConnections => "self",
            Strategy::AllConnections => "all",
            Strategy::PrecedingConnection => "preceding",
            Strategy::NeighbourConnection => "neighbour",
        }
    }
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Strategy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "self" => Ok(Strategy::SelfConnections),
            "all" => Ok(Strategy::AllConnections),
            "preceding" => Ok(Strategy::PrecedingConnection),
            "neighbour" | "neighbor" => Ok(Strategy::NeighbourConnection),
            other => Err(Error::invalid(format!(
                "unknown strategy {other:?} (expected self, preceding, neighbour or all)"
            ))),
        }
    }
}

/// Unit-weighted interaction graph for `frame` under `strategy`.
pub fn build_graph(frame: &SceneFrame, strategy: Strategy) -> Result<InteractionGraph> {
    if frame.is_empty() {
        return Err(Error::invalid("cannot build a graph over an empty frame"));
    }
    let states = frame.states();
    let n = states.len();
    let mut edges = Vec::new();
    match strategy {
        Strategy::SelfConnections => edges.extend((0..n).map(|i| (i, i))),
        Strategy::AllConnections => {
            for dst in 0..n {
                edges.extend((0..n).filter(|&src| src != dst).map(|src| (src, dst)));
            }
        }
        Strategy::PrecedingConnection => {
            for follower in 0..n {
                if let Some(lead) = nearest_ahead_in_lane(states, follower, NEIGHBOR_CUTOFF_M) {
                    edges.push((lead, follower));
                }
            }
        }
        Strategy::NeighbourConnection => {
            for (dst, ego) in states.iter().enumerate() {
                for nb in find_neighbors(frame, ego)? {
                    let src = frame
                        .index_of(nb.state.vehicle_id)
                        .expect("neighbour comes from the frame");
                    edges.push((src, dst));
                }
            }
        }
    }
    InteractionGraph::new(frame.vehicle_ids(), &edges)
}
