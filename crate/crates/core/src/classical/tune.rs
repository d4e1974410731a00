use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::idm::IdmPredictor;
use super::params::{IdmBounds, IdmParams};
use crate::datapipe::PredictionWindow;
use crate::exp::evaluate_displacement;
use crate::{Error, Result};

/// Number of shrink-and-recentre rounds in [`tune_idm`].
pub const TUNE_ROUNDS: usize = 10;

#[derive(Debug, Clone, PartialEq)]
pub struct TuneResult {
    /// Best candidate found.
    pub params: IdmParams,
    /// Its mean displacement on the tuning windows, m.
    pub objective: f64,
    /// Every evaluated candidate with its objective, in sampling order.
    pub evaluated: Vec<(IdmParams, f64)>,
}

/// Mean displacement of IDM rollouts with `params` over `windows`.
pub fn idm_objective(windows: &[PredictionWindow], params: &IdmParams) -> Result<f64> {
    Ok(evaluate_displacement(&IdmPredictor::new(*params), windows)?.mean_displacement)
}

/// Guided random search over IDM parameters (δ fixed at 4).
///
/// The budget is spread over [`TUNE_ROUNDS`] rounds of uniform sampling.
/// After each round every interval is halved and re-centred on the best
/// candidate so far, clipped to [`IdmBounds::GLOBAL`]. Candidates of a round
/// are scored in parallel; the incumbent is the first candidate, in sampling
/// order, with the lowest objective.
pub fn tune_idm(windows: &[PredictionWindow], budget: usize, seed: u64) -> Result<TuneResult> {
    if windows.is_empty() {
        return Err(Error::invalid("IDM tuning needs at least one window"));
    }
    if budget == 0 {
        return Err(Error::invalid("IDM tuning budget must be at least 1"));
    }
    let global = IdmBounds::GLOBAL;
    let delta = IdmParams::NGSIM.delta;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut bounds = global;
    let mut best: Option<(IdmParams, f64)> = None;
    let mut evaluated = Vec::with_capacity(budget);
    for round in 0..TUNE_ROUNDS {
        let count = budget / TUNE_ROUNDS + usize::from(round < budget % TUNE_ROUNDS);
        let candidates: Vec<IdmParams> = (0..count)
            .map(|_| {
                let v: [f64; 5] = std::array::from_fn(|d| {
                    let (lo, hi) = (bounds.lo[d], bounds.hi[d]);
                    if hi > lo {
                        rng.gen_range(lo..=hi)
                    } else {
                        lo
                    }
                });
                IdmBounds::to_params(v, delta)
            })
            .collect();
        let scores: Vec<f64> = candidates
            .par_iter()
            .map(|p| idm_objective(windows, p).map(|s| if s.is_nan() { f64::INFINITY } else { s }))
            .collect::<Result<_>>()?;
        for (p, s) in candidates.into_iter().zip(scores) {
            if best.as_ref().is_none_or(|b| s < b.1) {
                best = Some((p, s));
            }
            evaluated.push((p, s));
        }
        if let Some((p, _)) = &best {
            let centre = IdmBounds::from_params(p);
            let scale = 0.5f64.powi(round as i32 + 1);
            for d in 0..5 {
                let half = 0.5 * scale * (global.hi[d] - global.lo[d]);
                bounds.lo[d] = (centre[d] - half).max(global.lo[d]);
                bounds.hi[d] = (centre[d] + half).min(global.hi[d]);
            }
        }
    }
    let (params, objective) = best.expect("budget >= 1 yields a candidate");
    Ok(TuneResult {
        params,
        objective,
        evaluated,
    })
}
