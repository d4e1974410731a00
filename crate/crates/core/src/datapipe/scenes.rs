use std::collections::{BTreeMap, HashMap};
use std::fmt::Write as _;
use std::path::Path;

use super::csvutil::CsvTable;
use super::window::{PredictionWindow, Sample, WindowId, WindowVehicle, WINDOW_SAMPLES};
use crate::{Error, Result};

/// Header of the canonical scene file.
pub const SCENE_COLUMNS: [&str; 9] = [
    "window_id",
    "vehicle_id",
    "sample_index",
    "x",
    "y",
    "vx",
    "vy",
    "lane_id",
    "loss_mask",
];

/// Renders windows as canonical CSV: one row per vehicle-sample, sample
/// indices 1 to 10, floats in shortest round-trip form.
pub fn scenes_to_csv(windows: &[PredictionWindow]) -> String {
    let mut out = SCENE_COLUMNS.join(",");
    out.push('\n');
    for w in windows {
        for v in &w.vehicles {
            for (k, s) in v.samples.iter().enumerate() {
                let Some(s) = s else { continue };
                writeln!(
                    out,
                    "{},{},{},{},{},{},{},{},{}",
                    w.id,
                    v.vehicle_id,
                    k + 1,
                    s.x,
                    s.y,
                    s.vx,
                    s.vy,
                    s.lane_id,
                    u8::from(v.loss_mask)
                )
                .unwrap();
            }
        }
    }
    out
}

/// Parses canonical CSV. Windows keep their order of first appearance and
/// vehicles are sorted by id.
pub fn scenes_from_csv(bytes: &[u8]) -> Result<Vec<PredictionWindow>> {
    let t = CsvTable::parse(bytes)?;
    let cols: Vec<usize> = SCENE_COLUMNS
        .iter()
        .map(|c| t.column(c))
        .collect::<Result<_>>()?;
    let mut order: Vec<WindowId> = Vec::new();
    let mut windows: HashMap<WindowId, BTreeMap<i64, WindowVehicle>> = HashMap::new();
    for row in t.rows() {
        let perr = |message: String| Error::Parse {
            line: row.line,
            message,
        };
        let id: WindowId = row
            .str(cols[0])?
            .parse()
            .map_err(|e: Error| perr(e.to_string()))?;
        let vehicle_id = row.i64(cols[1])?;
        let k = row.i64(cols[2])?;
        if !(1..=WINDOW_SAMPLES as i64).contains(&k) {
            return Err(perr(format!(
                "sample_index {k} outside 1..={WINDOW_SAMPLES}"
            )));
        }
        let lane_id =
            i32::try_from(row.i64(cols[7])?).map_err(|_| perr("lane_id out of range".into()))?;
        let loss_mask = match row.str(cols[8])? {
            "1" | "true" => true,
            "0" | "false" => false,
            other => return Err(perr(format!("loss_mask must be 0 or 1, got {other:?}"))),
        };
        let sample = Sample {
            x: row.f64(cols[3])?,
            y: row.f64(cols[4])?,
            vx: row.f64(cols[5])?,
            vy: row.f64(cols[6])?,
            lane_id,
        };
        let vehicles = windows.entry(id).or_insert_with(|| {
            order.push(id);
            BTreeMap::new()
        });
        let v = vehicles.entry(vehicle_id).or_insert(WindowVehicle {
            vehicle_id,
            samples: [None; WINDOW_SAMPLES],
            loss_mask,
        });
        if v.loss_mask != loss_mask {
            return Err(perr(format!(
                "inconsistent loss_mask for vehicle {vehicle_id} in window {id}"
            )));
        }
        let slot = &mut v.samples[(k - 1) as usize];
        if slot.is_some() {
            return Err(perr(format!(
                "duplicate sample {k} for vehicle {vehicle_id} in window {id}"
            )));
        }
        *slot = Some(sample);
    }
    order
        .into_iter()
        .map(|id| {
            let vehicles = windows.remove(&id).unwrap().into_values().collect();
            PredictionWindow::new(id, vehicles)
        })
        .collect()
}

pub fn write_scenes(path: impl AsRef<Path>, windows: &[PredictionWindow]) -> Result<()> {
    let path = path.as_ref();
    std::fs::write(path, scenes_to_csv(windows)).map_err(|e| Error::io(path, e))
}

pub fn read_scenes(path: impl AsRef<Path>) -> Result<Vec<PredictionWindow>> {
    let path = path.as_ref();
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    scenes_from_csv(&bytes)
}
