use std::fmt;
use std::str::FromStr;

use crate::{Error, Result};

/// Where a track table came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Source {
    Ngsim,
    Highd,
    Synthetic,
}

impl Source {
    pub fn name(self) -> &'static str {
        match self {
            Source::Ngsim => "ngsim",
            Source::Highd => "highd",
            Source::Synthetic => "synthetic",
        }
    }

    /// Recording frame rate, Hz.
    pub fn native_rate(self) -> u32 {
        match self {
            Source::Ngsim => 10,
            Source::Highd | Source::Synthetic => 25,
        }
    }
}

impl fmt::Display for Source {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Source {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "ngsim" => Ok(Source::Ngsim),
            "highd" => Ok(Source::Highd),
            "synthetic" | "synth" => Ok(Source::Synthetic),
            _ => Err(Error::invalid(format!(
                "unknown dataset {s:?} (expected ngsim, highd or synthetic)"
            ))),
        }
    }
}

/// One vehicle's trajectory within one recording, in canonical axes and
/// metres. `vx`/`vy` are filled by smoothing or by the synthetic generator.
#[derive(Debug, Clone, PartialEq)]
pub struct Track {
    pub recording_id: u32,
    pub vehicle_id: i64,
    pub frames: Vec<i64>,
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub lane_id: Vec<i32>,
    /// Speed as reported by the source, if any.
    pub v_raw: Option<Vec<f64>>,
    pub vx: Option<Vec<f64>>,
    pub vy: Option<Vec<f64>>,
}

impl Track {
    pub fn len(&self) -> usize {
        self.frames.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frames.is_empty()
    }

    fn validate(&self) -> Result<()> {
        let n = self.frames.len();
        let ok = self.x.len() == n
            && self.y.len() == n
            && self.lane_id.len() == n
            && [&self.v_raw, &self.vx, &self.vy]
                .iter()
                .all(|c| c.as_ref().is_none_or(|c| c.len() == n));
        if !ok {
            return Err(Error::invalid(format!(
                "track {}/{} has columns of differing length",
                self.recording_id, self.vehicle_id
            )));
        }
        if let Some(w) = self.frames.windows(2).find(|w| w[1] <= w[0]) {
            return Err(Error::invalid(format!(
                "track {}/{}: frames not strictly increasing ({} then {})",
                self.recording_id, self.vehicle_id, w[0], w[1]
            )));
        }
        Ok(())
    }
}

/// Per-vehicle tracks of one or more recordings, sorted by
/// `(recording_id, vehicle_id)`.
#[derive(Debug, Clone, PartialEq)]
pub struct RawTrackTable {
    pub source: Source,
    /// Native frame rate, Hz.
    pub frame_rate: u32,
    pub tracks: Vec<Track>,
}

impl RawTrackTable {
    pub fn new(source: Source, frame_rate: u32, mut tracks: Vec<Track>) -> Result<Self> {
        if frame_rate == 0 {
            return Err(Error::invalid("frame rate must be positive"));
        }
        tracks.sort_by_key(|t| (t.recording_id, t.vehicle_id));
        for t in &tracks {
            t.validate()?;
        }
        if let Some(w) = tracks
            .windows(2)
            .find(|w| (w[0].recording_id, w[0].vehicle_id) == (w[1].recording_id, w[1].vehicle_id))
        {
            return Err(Error::invalid(format!(
                "duplicate track for vehicle {} in recording {}",
                w[0].vehicle_id, w[0].recording_id
            )));
        }
        Ok(RawTrackTable {
            source,
            frame_rate,
            tracks,
        })
    }

    /// Reassigns every track to `recording_id`.
    pub fn with_recording_id(mut self, recording_id: u32) -> Self {
        for t in &mut self.tracks {
            t.recording_id = recording_id;
        }
        self
    }

    /// Concatenates tables of the same source and rate.
    pub fn concat(tables: Vec<RawTrackTable>) -> Result<Self> {
        let Some(first) = tables.first() else {
            return Err(Error::invalid("no tables to concatenate"));
        };
        let (source, rate) = (first.source, first.frame_rate);
        if tables
            .iter()
            .any(|t| t.source != source || t.frame_rate != rate)
        {
            return Err(Error::invalid(
                "cannot concatenate tables of different sources",
            ));
        }
        RawTrackTable::new(
            source,
            rate,
            tables.into_iter().flat_map(|t| t.tracks).collect(),
        )
    }

    pub fn recording_ids(&self) -> Vec<u32> {
        let mut ids: Vec<u32> = self.tracks.iter().map(|t| t.recording_id).collect();
        ids.dedup();
        ids
    }
}
