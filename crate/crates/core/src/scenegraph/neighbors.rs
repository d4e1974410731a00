use super::{SceneFrame, VehicleState, ALONGSIDE_M, NEIGHBOR_CUTOFF_M};
use crate::{Error, Result};

/// Position of a neighbour relative to the ego vehicle. "Left" is the lane
/// with the next-higher lane id.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum NeighborSlot {
    Ahead,
    Behind,
    LeftAhead,
    LeftAlongside,
    LeftBehind,
    RightAhead,
    RightAlongside,
    RightBehind,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Neighbor {
    pub slot: NeighborSlot,
    pub state: VehicleState,
}

#[derive(Clone, Copy)]
enum Band {
    Ahead,
    Behind,
    Alongside,
}

/// Closest vehicle in `lane` within a longitudinal band around `ego`;
/// ties go to the smaller vehicle id.
fn closest<'a>(
    states: &'a [VehicleState],
    ego: &VehicleState,
    lane: i32,
    band: Band,
) -> Option<&'a VehicleState> {
    states
        .iter()
        .filter(|s| s.vehicle_id != ego.vehicle_id && s.lane_id == lane)
        .filter(|s| {
            let dx = s.x - ego.x;
            dx.abs() <= NEIGHBOR_CUTOFF_M
                && match band {
                    Band::Ahead => dx > ALONGSIDE_M,
                    Band::Behind => dx < -ALONGSIDE_M,
                    Band::Alongside => dx.abs() <= ALONGSIDE_M,
                }
        })
        .min_by(|a, b| {
            let (da, db) = ((a.x - ego.x).abs(), (b.x - ego.x).abs());
            da.total_cmp(&db).then(a.vehicle_id.cmp(&b.vehicle_id))
        })
}

/// Up to eight lane-based neighbours of `ego`: nearest ahead and behind in
/// its own lane, and nearest ahead, alongside and behind in each adjacent
/// lane, all within the longitudinal cutoff.
pub fn find_neighbors(frame: &SceneFrame, ego: &VehicleState) -> Result<Vec<Neighbor>> {
    if frame.get(ego.vehicle_id).is_none() {
        return Err(Error::invalid(format!(
            "ego vehicle {} is not part of the frame",
            ego.vehicle_id
        )));
    }
    let states = frame.states();
    let lane = ego.lane_id;
    let wanted = [
        (NeighborSlot::Ahead, lane, Band::Ahead),
        (NeighborSlot::Behind, lane, Band::Behind),
        (NeighborSlot::LeftAhead, lane + 1, Band::Ahead),
        (NeighborSlot::LeftAlongside, lane + 1, Band::Alongside),
        (NeighborSlot::LeftBehind, lane + 1, Band::Behind),
        (NeighborSlot::RightAhead, lane - 1, Band::Ahead),
        (NeighborSlot::RightAlongside, lane - 1, Band::Alongside),
        (NeighborSlot::RightBehind, lane - 1, Band::Behind),
    ];
    Ok(wanted
        .into_iter()
        .filter_map(|(slot, l, band)| {
            closest(states, ego, l, band).map(|s| Neighbor { slot, state: *s })
        })
        .collect())
}

/// Index of the nearest vehicle strictly ahead of `states[ego]` in the same
/// lane, no further than `cutoff` metres. Ties go to the smaller vehicle id.
pub fn nearest_ahead_in_lane(states: &[VehicleState], ego: usize, cutoff: f64) -> Option<usize> {
    let e = &states[ego];
    states
        .iter()
        .enumerate()
        .filter(|(i, s)| *i != ego && s.lane_id == e.lane_id && s.x > e.x && s.x - e.x <= cutoff)
        .min_by(|(_, a), (_, b)| a.x.total_cmp(&b.x).then(a.vehicle_id.cmp(&b.vehicle_id)))
        .map(|(i, _)| i)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn v(id: i64, x: f64, y: f64, lane: i32) -> VehicleState {
        VehicleState::new(id, x, y, 20.0, 0.0, lane)
    }

    /// Scans every vehicle and every slot definition independently of
    /// `closest`, keeping the best per slot.
    fn brute_force(frame: &SceneFrame, ego: &VehicleState) -> Vec<(NeighborSlot, i64)> {
        let mut best: Vec<(NeighborSlot, f64, i64)> = Vec::new();
        for s in frame.states() {
            if s.vehicle_id == ego.vehicle_id {
                continue;
            }
            let dx = s.x - ego.x;
            if dx.abs() > 100.0 {
                continue;
            }
            let rel = s.lane_id - ego.lane_id;
            let slot = match (rel, dx) {
                (0, d) if d > 5.0 => NeighborSlot::Ahead,
                (0, d) if d < -5.0 => NeighborSlot::Behind,
                (1, d) if d > 5.0 => NeighborSlot::LeftAhead,
                (1, d) if d < -5.0 => NeighborSlot::LeftBehind,
                (1, _) => NeighborSlot::LeftAlongside,
                (-1, d) if d > 5.0 => NeighborSlot::RightAhead,
                (-1, d) if d < -5.0 => NeighborSlot::RightBehind,
                (-1, _) => NeighborSlot::RightAlongside,
                _ => continue,
            };
            match best.iter_mut().find(|b| b.0 == slot) {
                Some(b) if (dx.abs(), s.vehicle_id) < (b.1, b.2) => {
                    *b = (slot, dx.abs(), s.vehicle_id)
                }
                Some(_) => {}
                None => best.push((slot, dx.abs(), s.vehicle_id)),
            }
        }
        best.sort_by_key(|b| b.0);
        best.into_iter().map(|b| (b.0, b.2)).collect()
    }

    #[test]
    fn lone_ego_has_no_neighbors() {
        let ego = v(1, 0.0, 0.0, 1);
        let f = SceneFrame::new(0.0, vec![ego]).unwrap();
        assert!(find_neighbors(&f, &ego).unwrap().is_empty());
    }

    #[test]
    fn cutoff_excludes_far_vehicles() {
        let ego = v(1, 0.0, 0.0, 1);
        let f = SceneFrame::new(0.0, vec![ego, v(2, 200.0, 0.0, 1)]).unwrap();
        assert!(find_neighbors(&f, &ego).unwrap().is_empty());
    }

    #[test]
    fn mixed_scene() {
        let ego = v(0, 50.0, 0.0, 1);
        let f = SceneFrame::new(
            0.0,
            vec![
                ego,
                v(1, 80.0, 0.0, 1),
                v(2, 20.0, 0.0, 1),
                v(3, 52.0, 4.0, 2),
                v(4, 90.0, 4.0, 2),
            ],
        )
        .unwrap();
        let got: Vec<_> = find_neighbors(&f, &ego)
            .unwrap()
            .into_iter()
            .map(|n| (n.slot, n.state.vehicle_id))
            .collect();
        assert_eq!(
            got,
            vec![
                (NeighborSlot::Ahead, 1),
                (NeighborSlot::Behind, 2),
                (NeighborSlot::LeftAhead, 4),
                (NeighborSlot::LeftAlongside, 3),
            ]
        );
        assert_eq!(got, brute_force(&f, &ego));
    }

    #[test]
    fn ties_go_to_smaller_id() {
        let ego = v(0, 0.0, 0.0, 2);
        let f = SceneFrame::new(0.0, vec![ego, v(9, 30.0, 0.0, 2), v(4, 30.0, 0.0, 2)]).unwrap();
        let n = find_neighbors(&f, &ego).unwrap();
        assert_eq!(n[0].state.vehicle_id, 4);
    }

    #[test]
    fn matches_brute_force_on_dense_scenes() {
        let mut x = 0x2545F4914F6CDD1Du64;
        let mut next = || {
            x ^= x << 13;
            x ^= x >> 7;
            x ^= x << 17;
            (x % 10_000) as f64 / 10_000.0
        };
        for round in 0..50 {
            let states: Vec<_> = (0..25)
                .map(|i| v(i, next() * 400.0, 0.0, 1 + (next() * 4.0) as i32))
                .collect();
            let f = SceneFrame::new(round as f64, states).unwrap();
            for ego in f.states() {
                let got: Vec<_> = find_neighbors(&f, ego)
                    .unwrap()
                    .into_iter()
                    .map(|n| (n.slot, n.state.vehicle_id))
                    .collect();
                assert!(got.len() <= 8);
                assert_eq!(got, brute_force(&f, ego));
            }
        }
    }

    #[test]
    fn ego_must_be_in_frame() {
        let f = SceneFrame::new(0.0, vec![v(1, 0.0, 0.0, 1)]).unwrap();
        assert!(find_neighbors(&f, &v(2, 0.0, 0.0, 1)).is_err());
    }
}
