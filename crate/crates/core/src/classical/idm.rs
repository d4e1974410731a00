use super::params::IdmParams;
use crate::datapipe::PredictionWindow;
use crate::exp::{Predictor, Trajectory};
use crate::models::FUTURE_STEPS;
use crate::scenegraph::VehicleState;
use crate::{Error, Result};

/// Floor on bumper-free centre gaps during rollouts, m.
pub const MIN_GAP_M: f64 = 0.1;

/// Positions at 1 Hz extrapolated along the current velocity.
pub fn cvm_predict(state: &VehicleState, horizon_steps: usize) -> Result<Vec<[f64; 2]>> {
    if horizon_steps == 0 {
        return Err(Error::invalid("horizon must be at least one step"));
    }
    Ok((1..=horizon_steps)
        .map(|k| {
            let t = k as f64;
            [state.x + t * state.vx, state.y + t * state.vy]
        })
        .collect())
}

/// IDM acceleration. The interaction term is applied only with a leader,
/// whose centre gap `gap` must then be positive; `closing_speed` is the
/// follower speed minus the leader speed.
///
/// The desired-gap ratio enters linearly, not squared.
pub fn idm_acceleration(
    v: f64,
    gap: f64,
    closing_speed: f64,
    leader_present: bool,
    p: &IdmParams,
) -> Result<f64> {
    let free = p.a_max * (1.0 - (v / p.v0).powf(p.delta));
    if !leader_present {
        return Ok(free);
    }
    if !(gap > 0.0) {
        return Err(Error::invalid(format!(
            "IDM gap must be positive with a leader, got {gap}"
        )));
    }
    let interaction = -p.a_max
        * ((p.s0 + v * p.tau) / gap + v * closing_speed / (2.0 * gap * (p.a_max * p.b).sqrt()));
    Ok(free + interaction)
}

/// For every vehicle, the index of the nearest vehicle strictly ahead in the
/// same lane (ties to the smaller id), with no distance limit.
pub(crate) fn same_lane_leaders(lane: &[i32], x: &[f64], ids: &[i64]) -> Vec<Option<usize>> {
    let n = lane.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| {
        lane[a]
            .cmp(&lane[b])
            .then(x[a].total_cmp(&x[b]))
            .then(ids[a].cmp(&ids[b]))
    });
    let mut leader = vec![None; n];
    let mut p = 0;
    while p < n {
        // run of equal (lane, x)
        let mut q = p + 1;
        while q < n && lane[order[q]] == lane[order[p]] && x[order[q]] == x[order[p]] {
            q += 1;
        }
        let next = (q < n && lane[order[q]] == lane[order[p]]).then(|| order[q]);
        for &i in &order[p..q] {
            leader[i] = next;
        }
        p = q;
    }
    leader
}

/// Integration settings for IDM rollouts.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RolloutConfig {
    /// Euler step, s.
    pub dt: f64,
    /// Prediction horizon, whole seconds.
    pub horizon: f64,
}

impl Default for RolloutConfig {
    fn default() -> Self {
        RolloutConfig {
            dt: 0.1,
            horizon: FUTURE_STEPS as f64,
        }
    }
}

impl RolloutConfig {
    fn steps(&self) -> Result<(usize, usize)> {
        let per_second = 1.0 / self.dt;
        let k = per_second.round();
        if !(self.dt > 0.0) || (per_second - k).abs() > 1e-9 || k < 1.0 {
            return Err(Error::invalid(format!(
                "rollout dt {} must divide one second",
                self.dt
            )));
        }
        let h = self.horizon.round();
        if !(self.horizon >= 1.0) || (self.horizon - h).abs() > 1e-12 {
            return Err(Error::invalid(format!(
                "rollout horizon {} must be whole seconds",
                self.horizon
            )));
        }
        Ok((k as usize, h as usize))
    }
}

/// Joint explicit-Euler rollout of all vehicles along their lanes.
///
/// Leaders are re-resolved before every step. Lateral position is held,
/// speeds never drop below zero and gaps are floored at [`MIN_GAP_M`].
/// Returns, per vehicle, positions at every whole second of the horizon.
pub fn idm_rollout(
    states: &[VehicleState],
    p: &IdmParams,
    cfg: &RolloutConfig,
) -> Result<Vec<Vec<[f64; 2]>>> {
    p.validate()?;
    let (per_second, seconds) = cfg.steps()?;
    let n = states.len();
    let lane: Vec<i32> = states.iter().map(|s| s.lane_id).collect();
    let ids: Vec<i64> = states.iter().map(|s| s.vehicle_id).collect();
    let mut x: Vec<f64> = states.iter().map(|s| s.x).collect();
    let mut v: Vec<f64> = states.iter().map(|s| s.vx.max(0.0)).collect();
    let mut acc = vec![0.0; n];
    let mut out = vec![Vec::with_capacity(seconds); n];
    for _ in 0..seconds {
        for _ in 0..per_second {
            let leaders = same_lane_leaders(&lane, &x, &ids);
            for i in 0..n {
                acc[i] = match leaders[i] {
                    Some(j) => {
                        idm_acceleration(v[i], (x[j] - x[i]).max(MIN_GAP_M), v[i] - v[j], true, p)?
                    }
                    None => idm_acceleration(v[i], 0.0, 0.0, false, p)?,
                };
            }
            for i in 0..n {
                x[i] += v[i] * cfg.dt;
                v[i] = (v[i] + acc[i] * cfg.dt).max(0.0);
            }
        }
        for i in 0..n {
            out[i].push([x[i], states[i].y]);
        }
    }
    Ok(out)
}

/// Constant-velocity baseline.
#[derive(Debug, Clone, Copy, Default)]
pub struct CvmPredictor;

impl Predictor for CvmPredictor {
    fn name(&self) -> String {
        "cvm".into()
    }

    fn predict_window(&self, window: &PredictionWindow) -> Result<Vec<Trajectory>> {
        window
            .last_observed_states()
            .iter()
            .map(|s| {
                let p = cvm_predict(s, FUTURE_STEPS)?;
                Ok(std::array::from_fn(|k| p[k]))
            })
            .collect()
    }
}

/// IDM baseline: all vehicles of a window rolled out jointly from their
/// last observed states.
#[derive(Debug, Clone, Copy)]
pub struct IdmPredictor {
    pub params: IdmParams,
    pub rollout: RolloutConfig,
}

impl IdmPredictor {
    pub fn new(params: IdmParams) -> Self {
        IdmPredictor {
            params,
            rollout: RolloutConfig::default(),
        }
    }
}

impl Predictor for IdmPredictor {
    fn name(&self) -> String {
        "idm".into()
    }

    fn predict_window(&self, window: &PredictionWindow) -> Result<Vec<Trajectory>> {
        let paths = idm_rollout(&window.last_observed_states(), &self.params, &self.rollout)?;
        paths
            .into_iter()
            .map(|p| {
                if p.len() != FUTURE_STEPS {
                    return Err(Error::invalid("IDM predictor needs a five-second horizon"));
                }
                Ok(std::array::from_fn(|k| p[k]))
            })
            .collect()
    }
}
