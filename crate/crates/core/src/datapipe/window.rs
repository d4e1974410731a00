use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;

use super::raw::{RawTrackTable, Track};
use crate::models::{FUTURE_STEPS, HISTORY_STEPS};
use crate::scenegraph::{SceneFrame, VehicleState};
use crate::{Error, Result};

/// Samples per window: history followed by future, 1 Hz.
pub const WINDOW_SAMPLES: usize = HISTORY_STEPS + FUTURE_STEPS;
/// Default spacing between consecutive window starts, s.
pub const DEFAULT_STRIDE_S: u32 = 5;

/// Identifies a window by recording and `t0`, the whole second of its first
/// future sample. Written as `recording:t0`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct WindowId {
    pub recording_id: u32,
    pub t0: i64,
}

impl fmt::Display for WindowId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.recording_id, self.t0)
    }
}

impl FromStr for WindowId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::invalid(format!("malformed window id {s:?} (expected recording:t0)"));
        let (r, t) = s.split_once(':').ok_or_else(bad)?;
        Ok(WindowId {
            recording_id: r.parse().map_err(|_| bad())?,
            t0: t.parse().map_err(|_| bad())?,
        })
    }
}

/// Kinematic sample of one vehicle at one second of a window.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Sample {
    pub x: f64,
    pub y: f64,
    pub vx: f64,
    pub vy: f64,
    pub lane_id: i32,
}

impl Sample {
    pub fn state(&self, vehicle_id: i64) -> VehicleState {
        VehicleState::new(vehicle_id, self.x, self.y, self.vx, self.vy, self.lane_id)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct WindowVehicle {
    pub vehicle_id: i64,
    pub samples: [Option<Sample>; WINDOW_SAMPLES],
    /// Present for the whole window, so scored and trained on.
    pub loss_mask: bool,
}

impl WindowVehicle {
    /// Last observed sample.
    pub fn last_observed(&self) -> &Sample {
        self.samples[HISTORY_STEPS - 1]
            .as_ref()
            .expect("validated window")
    }

    pub fn history(&self) -> impl Iterator<Item = &Sample> {
        self.samples[..HISTORY_STEPS]
            .iter()
            .map(|s| s.as_ref().expect("validated window"))
    }
}

/// Ten seconds of one recording: every vehicle present for the full history,
/// ordered by vehicle id.
#[derive(Debug, Clone, PartialEq)]
pub struct PredictionWindow {
    pub id: WindowId,
    pub vehicles: Vec<WindowVehicle>,
}

impl PredictionWindow {
    /// Checks ordering, history completeness and that loss-masked vehicles
    /// have every sample.
    pub fn new(id: WindowId, vehicles: Vec<WindowVehicle>) -> Result<Self> {
        let bad = |m: String| Err(Error::invalid(format!("window {id}: {m}")));
        if vehicles
            .windows(2)
            .any(|w| w[1].vehicle_id <= w[0].vehicle_id)
        {
            return bad("vehicles not in strictly ascending id order".into());
        }
        for v in &vehicles {
            if v.samples[..HISTORY_STEPS].iter().any(Option::is_none) {
                return bad(format!("vehicle {} lacks history samples", v.vehicle_id));
            }
            if v.loss_mask && v.samples.iter().any(Option::is_none) {
                return bad(format!(
                    "loss-masked vehicle {} lacks future samples",
                    v.vehicle_id
                ));
            }
            let finite =
                v.samples.iter().flatten().all(|s| {
                    [s.x, s.y, s.vx, s.vy].iter().all(|c| c.is_finite()) && s.lane_id >= 1
                });
            if !finite {
                return bad(format!(
                    "vehicle {} has a non-finite value or bad lane",
                    v.vehicle_id
                ));
            }
        }
        Ok(PredictionWindow { id, vehicles })
    }

    pub fn len(&self) -> usize {
        self.vehicles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vehicles.is_empty()
    }

    pub fn num_loss_vehicles(&self) -> usize {
        self.vehicles.iter().filter(|v| v.loss_mask).count()
    }

    /// Positions (in `vehicles`) of loss-masked vehicles.
    pub fn loss_indices(&self) -> Vec<usize> {
        (0..self.vehicles.len())
            .filter(|&i| self.vehicles[i].loss_mask)
            .collect()
    }

    /// States at the last observed second, one per vehicle, in window order.
    pub fn last_observed_states(&self) -> Vec<VehicleState> {
        self.vehicles
            .iter()
            .map(|v| v.last_observed().state(v.vehicle_id))
            .collect()
    }

    /// Scene at the last observed second; node order matches `vehicles`.
    pub fn history_frame(&self) -> Result<SceneFrame> {
        SceneFrame::new((self.id.t0 - 1) as f64, self.last_observed_states())
    }
}

struct SecondTrack<'a> {
    track: &'a Track,
    /// (second, index into the track), ascending.
    samples: Vec<(i64, usize)>,
}

impl SecondTrack<'_> {
    fn sample_at(&self, sec: i64) -> Option<Sample> {
        let k = self.samples.binary_search_by_key(&sec, |s| s.0).ok()?;
        let i = self.samples[k].1;
        let t = self.track;
        Some(Sample {
            x: t.x[i],
            y: t.y[i],
            vx: t.vx.as_ref()?[i],
            vy: t.vy.as_ref()?[i],
            lane_id: t.lane_id[i],
        })
    }
}

fn extract_recording(tracks: &[Track], rate: i64, stride: i64) -> Result<Vec<PredictionWindow>> {
    let seconds: Vec<SecondTrack<'_>> = tracks
        .iter()
        .map(|t| SecondTrack {
            track: t,
            samples: t
                .frames
                .iter()
                .enumerate()
                .filter(|(_, f)| f.rem_euclid(rate) == 0)
                .map(|(i, f)| (f.div_euclid(rate), i))
                .collect(),
        })
        .collect();
    let lo = seconds
        .iter()
        .filter_map(|s| s.samples.first())
        .map(|s| s.0)
        .min();
    let hi = seconds
        .iter()
        .filter_map(|s| s.samples.last())
        .map(|s| s.0)
        .max();
    let (Some(lo), Some(hi)) = (lo, hi) else {
        return Ok(Vec::new());
    };
    let recording_id = tracks[0].recording_id;
    let mut out = Vec::new();
    let mut start = lo;
    while start + WINDOW_SAMPLES as i64 - 1 <= hi {
        let mut vehicles = Vec::new();
        for st in &seconds {
            let (Some(first), Some(last)) = (st.samples.first(), st.samples.last()) else {
                continue;
            };
            if first.0 > start || last.0 < start + HISTORY_STEPS as i64 - 1 {
                continue;
            }
            let mut samples = [None; WINDOW_SAMPLES];
            for (k, s) in samples.iter_mut().enumerate() {
                *s = st.sample_at(start + k as i64);
            }
            if samples[..HISTORY_STEPS].iter().any(Option::is_none) {
                continue;
            }
            let loss_mask = samples.iter().all(Option::is_some);
            vehicles.push(WindowVehicle {
                vehicle_id: st.track.vehicle_id,
                samples,
                loss_mask,
            });
        }
        if vehicles.iter().any(|v| v.loss_mask) {
            let id = WindowId {
                recording_id,
                t0: start + HISTORY_STEPS as i64,
            };
            out.push(PredictionWindow::new(id, vehicles)?);
        }
        start += stride;
    }
    Ok(out)
}

/// Cuts every recording into 10-second windows sampled at 1 Hz, one window
/// starting every `stride_s` seconds from the recording's first sampled
/// second.
///
/// A sample is taken at every frame divisible by the frame rate. Vehicles
/// present for all five history seconds are kept; those also present for
/// the five future seconds carry the loss mask. Windows without any
/// loss-masked vehicle are dropped. The table must carry velocities.
pub fn window_extract(table: &RawTrackTable, stride_s: u32) -> Result<Vec<PredictionWindow>> {
    if stride_s == 0 {
        return Err(Error::invalid("window stride must be positive"));
    }
    if table
        .tracks
        .iter()
        .any(|t| t.vx.is_none() || t.vy.is_none())
    {
        return Err(Error::invalid(
            "track table has no velocities; smooth it first",
        ));
    }
    let groups: Vec<&[Track]> = table
        .tracks
        .chunk_by(|a, b| a.recording_id == b.recording_id)
        .collect();
    let rate = i64::from(table.frame_rate);
    let per_recording: Vec<Vec<PredictionWindow>> = groups
        .par_iter()
        .map(|g| extract_recording(g, rate, i64::from(stride_s)))
        .collect::<Result<_>>()?;
    Ok(per_recording.into_iter().flatten().collect())
}
