use crate::datapipe::PredictionWindow;
use crate::models::{Model, FUTURE_STEPS};
use crate::{Error, Result};

use super::features::{decode_outputs, Batch, PreparedWindow};

/// Absolute positions at the five future seconds.
pub type Trajectory = [[f64; 2]; FUTURE_STEPS];

/// Windows merged per forward pass when a model predicts.
pub const EVAL_BATCH: usize = 64;

/// Anything that maps a window to future positions for all its vehicles.
pub trait Predictor: Sync {
    fn name(&self) -> String;

    /// One trajectory per vehicle of `window`, in window order.
    fn predict_window(&self, window: &PredictionWindow) -> Result<Vec<Trajectory>>;

    fn predict_windows(&self, windows: &[PredictionWindow]) -> Result<Vec<Vec<Trajectory>>> {
        windows.iter().map(|w| self.predict_window(w)).collect()
    }
}

impl Predictor for Model {
    fn name(&self) -> String {
        let kind = self.config().kind.name();
        match self.config().kind {
            crate::models::ModelKind::Ff => kind.to_owned(),
            _ => format!("{kind}-{}", self.strategy()),
        }
    }

    fn predict_window(&self, window: &PredictionWindow) -> Result<Vec<Trajectory>> {
        Ok(self
            .predict_windows(std::slice::from_ref(window))?
            .pop()
            .unwrap())
    }

    fn predict_windows(&self, windows: &[PredictionWindow]) -> Result<Vec<Vec<Trajectory>>> {
        let mut out = Vec::with_capacity(windows.len());
        for chunk in windows.chunks(EVAL_BATCH) {
            let prepared = chunk
                .iter()
                .map(|w| PreparedWindow::new(self.config(), self.strategy(), w))
                .collect::<Result<Vec<_>>>()?;
            let batch = Batch::merge(&prepared.iter().collect::<Vec<_>>())?;
            let pred = self.predict(&batch.features, &batch.graph)?;
            let mut row = 0;
            for w in chunk {
                out.push(decode_outputs(w, &pred, row));
                row += w.len();
            }
        }
        Ok(out)
    }
}

/// Displacement errors over loss-masked vehicles.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Metrics {
    /// Per-vehicle mean over the five steps, averaged over vehicles, m.
    pub mean_displacement: f64,
    /// Error at the fifth step averaged over vehicles, m.
    pub final_displacement: f64,
    /// Mean error at each future step, m.
    pub per_step: [f64; FUTURE_STEPS],
    /// Number of scored vehicles.
    pub count: usize,
}

/// Scores predictions against the futures of loss-masked vehicles.
pub fn displacement_metrics(
    windows: &[PredictionWindow],
    predictions: &[Vec<Trajectory>],
) -> Result<Metrics> {
    if windows.len() != predictions.len() {
        return Err(Error::invalid("one prediction set per window is required"));
    }
    let mut per_step = [0.0; FUTURE_STEPS];
    let mut mean_sum = 0.0;
    let mut count = 0usize;
    for (w, preds) in windows.iter().zip(predictions) {
        if preds.len() != w.len() {
            return Err(Error::invalid(format!(
                "window {}: {} predictions for {} vehicles",
                w.id,
                preds.len(),
                w.len()
            )));
        }
        for (v, p) in w.vehicles.iter().zip(preds) {
            if !v.loss_mask {
                continue;
            }
            let future = &v.samples[v.samples.len() - FUTURE_STEPS..];
            let mut sum = 0.0;
            for k in 0..FUTURE_STEPS {
                let s = future[k]
                    .as_ref()
                    .expect("loss-masked vehicles are complete");
                let d = (p[k][0] - s.x).hypot(p[k][1] - s.y);
                per_step[k] += d;
                sum += d;
            }
            mean_sum += sum / FUTURE_STEPS as f64;
            count += 1;
        }
    }
    if count == 0 {
        return Err(Error::invalid("no loss-masked vehicles to evaluate"));
    }
    let n = count as f64;
    let per_step = per_step.map(|s| s / n);
    Ok(Metrics {
        mean_displacement: mean_sum / n,
        final_displacement: per_step[FUTURE_STEPS - 1],
        per_step,
        count,
    })
}

pub fn evaluate_displacement<P: Predictor + ?Sized>(
    predictor: &P,
    windows: &[PredictionWindow],
) -> Result<Metrics> {
    displacement_metrics(windows, &predictor.predict_windows(windows)?)
}
