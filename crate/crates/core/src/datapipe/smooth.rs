use super::raw::RawTrackTable;
use crate::{Error, Result};

/// Default smoothing span, s.
pub const DEFAULT_SPAN_S: f64 = 0.5;

/// Smoothing factor for a span of `n` samples.
pub fn ema_alpha(span_s: f64, rate: u32) -> f64 {
    let n = (span_s * f64::from(rate)).round().max(1.0);
    2.0 / (n + 1.0)
}

/// Mean of a forward and a backward exponential moving average.
pub fn double_ema(values: &[f64], alpha: f64) -> Vec<f64> {
    let n = values.len();
    if n == 0 {
        return Vec::new();
    }
    let mut fwd = vec![0.0; n];
    fwd[0] = values[0];
    for i in 1..n {
        fwd[i] = fwd[i - 1] + alpha * (values[i] - fwd[i - 1]);
    }
    let mut bwd = vec![0.0; n];
    bwd[n - 1] = values[n - 1];
    for i in (0..n - 1).rev() {
        bwd[i] = bwd[i + 1] + alpha * (values[i] - bwd[i + 1]);
    }
    fwd.iter().zip(&bwd).map(|(f, b)| 0.5 * (f + b)).collect()
}

/// Central differences in time, one-sided at the ends. `frames` may skip.
pub fn differentiate(values: &[f64], frames: &[i64], rate: u32) -> Vec<f64> {
    let n = values.len();
    let rate = f64::from(rate);
    (0..n)
        .map(|i| {
            let (a, b) = (i.saturating_sub(1), (i + 1).min(n - 1));
            if a == b {
                return 0.0;
            }
            (values[b] - values[a]) * rate / (frames[b] - frames[a]) as f64
        })
        .collect()
}

/// Smooths positions of every track and derives velocities from them.
///
/// Tracks shorter than 3 samples are dropped; their number is returned
/// alongside the table.
pub fn smooth_and_differentiate(
    table: &RawTrackTable,
    span_s: f64,
) -> Result<(RawTrackTable, usize)> {
    if !(span_s > 0.0 && span_s.is_finite()) {
        return Err(Error::invalid(format!(
            "smoothing span must be positive, got {span_s}"
        )));
    }
    let alpha = ema_alpha(span_s, table.frame_rate);
    let mut dropped = 0;
    let mut tracks = Vec::with_capacity(table.tracks.len());
    for t in &table.tracks {
        if t.len() < 3 {
            dropped += 1;
            continue;
        }
        let mut s = t.clone();
        s.x = double_ema(&t.x, alpha);
        s.y = double_ema(&t.y, alpha);
        s.vx = Some(differentiate(&s.x, &s.frames, table.frame_rate));
        s.vy = Some(differentiate(&s.y, &s.frames, table.frame_rate));
        tracks.push(s);
    }
    Ok((
        RawTrackTable::new(table.source, table.frame_rate, tracks)?,
        dropped,
    ))
}
