#![allow(dead_code)]

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

pub fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_trajgnn"))
}

/// Runs the binary and returns its output; panics with stderr unless it
/// exits 0.
pub fn ok(args: &[&str]) -> Output {
    let out = bin().args(args).output().expect("binary runs");
    assert!(
        out.status.success(),
        "trajgnn {args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

pub fn p(path: &Path) -> &str {
    path.to_str().expect("utf-8 temp path")
}

/// HighD-style recording: `seconds` of 25 Hz tracks for three vehicles on
/// the +x carriageway and one on the -x carriageway.
pub fn highd_recording(rec: u32, seconds: u32) -> (String, String) {
    let mut tracks = String::from("frame,id,x,y,width,height,xVelocity,laneId\n");
    let mut meta = String::from("id,drivingDirection\n");
    let cars: [(i64, f64, f64, f64, i64, i64); 4] = [
        (1, 20.0, 24.0, 20.0, 5, 2),
        (2, 60.0, 25.0, 20.0, 5, 2),
        (3, 35.0, 27.0, 23.6, 6, 2),
        (4, 380.0, -26.0, 8.0, 2, 1),
    ];
    for (id, x0, v, y, lane, dir) in cars {
        meta.push_str(&format!("{id},{dir}\n"));
        let v = v + 0.1 * f64::from(rec);
        for f in 0..=25 * seconds {
            let t = f64::from(f) / 25.0;
            let x = x0 + v * t + 0.05 * (t * 0.7 + id as f64).sin();
            tracks.push_str(&format!("{f},{id},{x:.3},{y:.3},4.5,1.8,{v:.3},{lane}\n"));
        }
    }
    (tracks, meta)
}

/// Writes `count` HighD recordings of 12 s into `dir`; each yields one
/// window.
pub fn write_highd_dir(dir: &Path, count: u32) -> PathBuf {
    std::fs::create_dir_all(dir).unwrap();
    for rec in 1..=count {
        let (tracks, meta) = highd_recording(rec, 12);
        std::fs::write(dir.join(format!("{rec:02}_tracks.csv")), tracks).unwrap();
        std::fs::write(dir.join(format!("{rec:02}_tracksMeta.csv")), meta).unwrap();
    }
    dir.to_path_buf()
}

/// NGSIM-style file: three vehicles over `seconds` at 10 Hz, in feet.
pub fn ngsim_file(seconds: u32, speed_fps: f64) -> String {
    let mut s = String::from("Vehicle_ID,Frame_ID,Local_X,Local_Y,v_Vel,Lane_ID\n");
    for (id, y0, lx, lane) in [(11, 30.0, 6.0, 1), (12, 150.0, 6.0, 1), (13, 90.0, 18.0, 2)] {
        for f in 1..=10 * seconds {
            let t = f64::from(f) / 10.0;
            let v = speed_fps + f64::from(id - 11);
            s.push_str(&format!(
                "{id},{f},{lx:.2},{:.3},{v:.2},{lane}\n",
                y0 + v * t
            ));
        }
    }
    s
}
