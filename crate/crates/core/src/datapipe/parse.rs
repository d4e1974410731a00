use std::collections::{BTreeMap, HashMap};

use super::csvutil::CsvTable;
use super::raw::{RawTrackTable, Source, Track};
use crate::{Error, Result};

/// Feet to metres.
pub const FEET_TO_M: f64 = 0.3048;

#[derive(Default)]
struct TrackBuilder {
    rows: Vec<(i64, f64, f64, i32, Option<f64>)>,
}

fn assemble(
    source: Source,
    groups: BTreeMap<(u32, i64), TrackBuilder>,
    with_speed: bool,
) -> Result<RawTrackTable> {
    let mut tracks = Vec::with_capacity(groups.len());
    for ((recording_id, vehicle_id), mut b) in groups {
        b.rows.sort_by_key(|r| r.0);
        tracks.push(Track {
            recording_id,
            vehicle_id,
            frames: b.rows.iter().map(|r| r.0).collect(),
            x: b.rows.iter().map(|r| r.1).collect(),
            y: b.rows.iter().map(|r| r.2).collect(),
            lane_id: b.rows.iter().map(|r| r.3).collect(),
            v_raw: with_speed.then(|| b.rows.iter().map(|r| r.4.unwrap_or(0.0)).collect()),
            vx: None,
            vy: None,
        });
    }
    RawTrackTable::new(source, source.native_rate(), tracks)
}

fn lane(row: &super::csvutil::Row<'_>, col: usize) -> Result<i32> {
    let l = row.i64(col)?;
    i32::try_from(l).map_err(|_| Error::Parse {
        line: row.line,
        message: format!("lane id {l} out of range"),
    })
}

/// Parses an NGSIM-format CSV. `Local_Y` becomes the longitudinal `x` and
/// `Local_X` the lateral `y`, both converted from feet to metres. An optional
/// `Recording_ID` column assigns rows to recordings (default 1); `v_Vel` is
/// kept as the raw speed when present.
pub fn parse_ngsim(bytes: &[u8]) -> Result<RawTrackTable> {
    let t = CsvTable::parse(bytes)?;
    let vid = t.column("Vehicle_ID")?;
    let frame = t.column("Frame_ID")?;
    let lx = t.column("Local_X")?;
    let ly = t.column("Local_Y")?;
    let lane_col = t.column("Lane_ID")?;
    let vel = t.optional_column("v_Vel");
    let rec = t.optional_column("Recording_ID");

    let mut groups: BTreeMap<(u32, i64), TrackBuilder> = BTreeMap::new();
    for row in t.rows() {
        let recording = match rec {
            Some(c) => u32::try_from(row.i64(c)?).map_err(|_| Error::Parse {
                line: row.line,
                message: "Recording_ID out of range".into(),
            })?,
            None => 1,
        };
        let speed = vel.map(|c| row.f64(c)).transpose()?.map(|v| v * FEET_TO_M);
        groups
            .entry((recording, row.i64(vid)?))
            .or_default()
            .rows
            .push((
                row.i64(frame)?,
                row.f64(ly)? * FEET_TO_M,
                row.f64(lx)? * FEET_TO_M,
                lane(&row, lane_col)?,
                speed,
            ));
    }
    assemble(Source::Ngsim, groups, vel.is_some())
}

/// Parses a HighD recording from its tracks and tracks-meta CSVs.
///
/// Vehicles with `drivingDirection == 1` travel towards −x in the source
/// frame; their coordinates are rotated by 180° so that all traffic flows
/// towards +x. When `width`/`height` columns are present the bounding-box
/// corner is moved to the box centre. Every row lands in recording 1.
pub fn parse_highd(tracks: &[u8], meta: &[u8]) -> Result<RawTrackTable> {
    let m = CsvTable::parse(meta)?;
    let mid = m.column("id")?;
    let mdir = m.column("drivingDirection")?;
    let mut direction: HashMap<i64, i64> = HashMap::with_capacity(m.len());
    for row in m.rows() {
        direction.insert(row.i64(mid)?, row.i64(mdir)?);
    }

    let t = CsvTable::parse(tracks)?;
    let id = t.column("id")?;
    let frame = t.column("frame")?;
    let xc = t.column("x")?;
    let yc = t.column("y")?;
    let vxc = t.column("xVelocity")?;
    let lane_col = t.column("laneId")?;
    let wc = t.optional_column("width");
    let hc = t.optional_column("height");

    let mut groups: BTreeMap<(u32, i64), TrackBuilder> = BTreeMap::new();
    for row in t.rows() {
        let vehicle = row.i64(id)?;
        let flip = match direction.get(&vehicle) {
            Some(1) => -1.0,
            Some(2) => 1.0,
            Some(d) => {
                return Err(Error::Parse {
                    line: row.line,
                    message: format!(
                        "vehicle {vehicle} has driving direction {d} (expected 1 or 2)"
                    ),
                })
            }
            None => {
                return Err(Error::Parse {
                    line: row.line,
                    message: format!("no driving direction for vehicle {vehicle}"),
                })
            }
        };
        let half_w = wc.map(|c| row.f64(c)).transpose()?.unwrap_or(0.0) / 2.0;
        let half_h = hc.map(|c| row.f64(c)).transpose()?.unwrap_or(0.0) / 2.0;
        groups.entry((1, vehicle)).or_default().rows.push((
            row.i64(frame)?,
            flip * (row.f64(xc)? + half_w),
            flip * (row.f64(yc)? + half_h),
            lane(&row, lane_col)?,
            Some(flip * row.f64(vxc)?),
        ));
    }
    assemble(Source::Highd, groups, true)
}
