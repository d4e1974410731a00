use std::collections::BTreeSet;

use super::raw::Source;
use super::window::PredictionWindow;
use crate::{Error, Result};

#[derive(Debug, Clone, Default, PartialEq)]
pub struct DatasetSplit {
    pub train: Vec<PredictionWindow>,
    pub val: Vec<PredictionWindow>,
    pub test: Vec<PredictionWindow>,
}

/// Splits windows by recording.
///
/// NGSIM policy: every recording but the last trains; the windows of the
/// last recording, ordered by `t0`, are halved into validation (first half,
/// rounded up) and test. HighD policy (also used for synthetic data): the
/// last ⌈10 %⌉ of recordings are test, the ⌈10 %⌉ before them validation,
/// the rest train. Recordings are ordered by id.
pub fn split_dataset(windows: &[PredictionWindow], policy: Source) -> Result<DatasetSplit> {
    let recordings: Vec<u32> = windows
        .iter()
        .map(|w| w.id.recording_id)
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();
    let r = recordings.len();
    let mut out = DatasetSplit::default();
    match policy {
        Source::Ngsim => {
            if r < 2 {
                return Err(Error::invalid(format!(
                    "ngsim split needs at least 2 recordings, got {r}"
                )));
            }
            let last = recordings[r - 1];
            let mut held: Vec<&PredictionWindow> = Vec::new();
            for w in windows {
                if w.id.recording_id == last {
                    held.push(w);
                } else {
                    out.train.push(w.clone());
                }
            }
            held.sort_by_key(|w| w.id.t0);
            let n_val = held.len().div_ceil(2);
            out.val = held[..n_val].iter().map(|w| (*w).clone()).collect();
            out.test = held[n_val..].iter().map(|w| (*w).clone()).collect();
        }
        Source::Highd | Source::Synthetic => {
            let tenth = r.div_ceil(10);
            if r < 2 * tenth + 1 {
                return Err(Error::invalid(format!(
                    "highd split needs at least 3 recordings, got {r}"
                )));
            }
            let val_from = recordings[r - 2 * tenth];
            let test_from = recordings[r - tenth];
            for w in windows {
                let id = w.id.recording_id;
                let part = if id >= test_from {
                    &mut out.test
                } else if id >= val_from {
                    &mut out.val
                } else {
                    &mut out.train
                };
                part.push(w.clone());
            }
        }
    }
    Ok(out)
}
