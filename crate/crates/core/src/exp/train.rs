use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::datapipe::PredictionWindow;
use crate::models::{Model, ModelConfig, Normalizer};
use crate::numkern::{clip_grad_norm, AdamConfig, AdamState, ParamStore, Tape};
use crate::scenegraph::Strategy;
use crate::{Error, Result};

use super::features::{decode_outputs, Batch, PreparedWindow};
use super::metrics::{displacement_metrics, Metrics, EVAL_BATCH};

#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub model: ModelConfig,
    pub strategy: Strategy,
    /// Windows per optimisation step.
    pub batch_size: usize,
    pub max_epochs: usize,
    /// Epochs without validation improvement before stopping; `None` never
    /// stops early.
    pub patience: Option<usize>,
    pub seed: u64,
    pub adam: AdamConfig,
}

impl TrainConfig {
    pub fn new(model: ModelConfig, strategy: Strategy, seed: u64) -> Self {
        TrainConfig {
            model,
            strategy,
            batch_size: 32,
            max_epochs: 50,
            patience: Some(10),
            seed,
            adam: AdamConfig::default(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.model.validate()?;
        if self.batch_size == 0 || self.max_epochs == 0 || self.patience == Some(0) {
            return Err(Error::config(
                "batch size, epochs and patience must be positive",
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpochRecord {
    /// 1-based.
    pub epoch: usize,
    /// Mean training loss over the epoch's batches.
    pub train_loss: f64,
    pub val_mean_displacement: f64,
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    /// Parameters of the best validation epoch.
    pub model: Model,
    pub history: Vec<EpochRecord>,
    pub best_epoch: usize,
    pub stopped_early: bool,
}

/// Windows prepared once and merged into fixed batches for scoring.
pub(crate) struct EvalSet<'a> {
    windows: &'a [PredictionWindow],
    batches: Vec<Batch>,
}

impl<'a> EvalSet<'a> {
    pub(crate) fn new(
        cfg: &ModelConfig,
        strategy: Strategy,
        windows: &'a [PredictionWindow],
    ) -> Result<Self> {
        let batches = windows
            .chunks(EVAL_BATCH)
            .map(|chunk| {
                let prepared = chunk
                    .iter()
                    .map(|w| PreparedWindow::new(cfg, strategy, w))
                    .collect::<Result<Vec<_>>>()?;
                Batch::merge(&prepared.iter().collect::<Vec<_>>())
            })
            .collect::<Result<_>>()?;
        Ok(EvalSet { windows, batches })
    }

    pub(crate) fn evaluate(&self, model: &Model) -> Result<Metrics> {
        let mut preds = Vec::with_capacity(self.windows.len());
        for (chunk, batch) in self.windows.chunks(EVAL_BATCH).zip(&self.batches) {
            let out = model.predict(&batch.features, &batch.graph)?;
            let mut row = 0;
            for w in chunk {
                preds.push(decode_outputs(w, &out, row));
                row += w.len();
            }
        }
        displacement_metrics(self.windows, &preds)
    }
}

/// Loss of one batch: MSE over the normalised outputs of scored vehicles;
/// `batch.targets` must already be normalised.
/// Gradients are accumulated into the model's parameters.
pub(crate) fn batch_loss_and_grad(model: &mut Model, batch: &Batch) -> Result<f64> {
    let mut tape = Tape::new();
    let out = model.forward(&mut tape, &batch.features, &batch.graph)?;
    let scored = tape.gather_rows(out, &batch.loss_rows)?;
    let loss = tape.mse(scored, &batch.targets)?;
    let value = tape.value(loss).item();
    let store = model.params_mut();
    store.zero_grad();
    tape.backward(loss, store)?;
    Ok(value)
}

/// Trains a fresh model with Adam on merged batches of windows.
///
/// Inputs and targets are standardised with statistics of the training
/// windows, which the returned model keeps. Window order is reshuffled every epoch from a generator seeded with
/// `cfg.seed`. After each epoch the validation mean displacement decides
/// early stopping, and the returned model carries the best epoch's
/// parameters.
pub fn train(
    train: &[PredictionWindow],
    val: &[PredictionWindow],
    cfg: &TrainConfig,
) -> Result<TrainOutcome> {
    cfg.validate()?;
    if train.is_empty() || val.is_empty() {
        return Err(Error::invalid(
            "training and validation sets must be non-empty",
        ));
    }
    if train.iter().all(|w| w.num_loss_vehicles() == 0) {
        return Err(Error::invalid("training set has no loss-masked vehicles"));
    }
    let mut model = Model::new(cfg.model, cfg.strategy, cfg.seed)?;
    let mut prepared = train
        .iter()
        .map(|w| PreparedWindow::new(&cfg.model, cfg.strategy, w))
        .collect::<Result<Vec<_>>>()?;
    let everything = Batch::merge(&prepared.iter().collect::<Vec<_>>())?;
    let normalizer = Normalizer::fit(&everything.features, &everything.targets);
    drop(everything);
    for p in &mut prepared {
        p.targets = normalizer.normalize_targets(&p.targets)?;
    }
    model.set_normalizer(normalizer)?;
    let val_set = EvalSet::new(&cfg.model, cfg.strategy, val)?;
    let mut adam = AdamState::new(cfg.adam, model.params());
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed ^ 0x5348_5546_464C_4521);
    let mut order: Vec<usize> = (0..prepared.len()).collect();

    let mut best: Option<(f64, usize, ParamStore)> = None;
    let mut history = Vec::new();
    let mut stale = 0;
    let mut stopped_early = false;
    for epoch in 1..=cfg.max_epochs {
        order.shuffle(&mut rng);
        let mut loss_sum = 0.0;
        let mut steps = 0;
        for chunk in order.chunks(cfg.batch_size) {
            let parts: Vec<&PreparedWindow> = chunk.iter().map(|&i| &prepared[i]).collect();
            if parts.iter().all(|p| p.loss_rows.is_empty()) {
                continue;
            }
            let batch = Batch::merge(&parts)?;
            let loss = batch_loss_and_grad(&mut model, &batch)?;
            if !loss.is_finite() {
                return Err(Error::NonFinite(format!("training loss at epoch {epoch}")));
            }
            if let Some(max) = cfg.adam.clip_norm {
                clip_grad_norm(model.params_mut(), max);
            }
            adam.step(model.params_mut())?;
            loss_sum += loss;
            steps += 1;
        }
        let val_md = val_set.evaluate(&model)?.mean_displacement;
        history.push(EpochRecord {
            epoch,
            train_loss: loss_sum / steps.max(1) as f64,
            val_mean_displacement: val_md,
        });
        if best.as_ref().is_none_or(|b| val_md < b.0) {
            best = Some((val_md, epoch, model.params().clone()));
            stale = 0;
        } else {
            stale += 1;
            if cfg.patience.is_some_and(|p| stale >= p) {
                stopped_early = true;
                break;
            }
        }
    }
    let (_, best_epoch, params) = best.expect("at least one epoch ran");
    model.params_mut().copy_values_from(&params);
    Ok(TrainOutcome {
        model,
        history,
        best_epoch,
        stopped_early,
    })
}
