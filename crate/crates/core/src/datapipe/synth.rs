use std::f64::consts::PI;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::raw::{RawTrackTable, Source, Track};
use crate::classical::same_lane_leaders;
use crate::classical::{idm_acceleration, IdmParams, MIN_GAP_M};
use crate::{Error, Result};

/// Lane width used to place lane centres, m.
pub const LANE_WIDTH_M: f64 = 3.7;
/// Duration of a scripted lane change, s.
pub const LANE_CHANGE_S: f64 = 3.0;
/// Minimum longitudinal spacing at placement and entry, m.
pub const SPAWN_GAP_M: f64 = 30.0;
/// Free space needed ahead and behind in the target lane before a lane change, m.
const LANE_CHANGE_CLEARANCE_M: f64 = 20.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SynthMode {
    /// Straight, non-interacting motion at per-vehicle constant speeds.
    ConstantVelocity,
    /// Joint IDM car following with scripted lane changes.
    IdmInteracting,
}

impl SynthMode {
    pub fn name(self) -> &'static str {
        match self {
            SynthMode::ConstantVelocity => "constant_velocity",
            SynthMode::IdmInteracting => "idm_interacting",
        }
    }
}

impl FromStr for SynthMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "constant_velocity" => Ok(SynthMode::ConstantVelocity),
            "idm_interacting" => Ok(SynthMode::IdmInteracting),
            _ => Err(Error::config(format!(
                "unknown synthetic mode {s:?} (expected constant_velocity or idm_interacting)"
            ))),
        }
    }
}

/// Open road segment of `lanes` lanes and `length_m` metres. About
/// `vehicles` vehicles are on it at any time: a vehicle leaving the far end
/// is replaced by a new one entering at `x = 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct SynthConfig {
    pub seed: u64,
    pub lanes: u32,
    pub length_m: f64,
    pub vehicles: usize,
    pub mode: SynthMode,
    /// Lane changes per vehicle per minute (IDM mode only).
    pub lane_change_rate: f64,
    /// Per-vehicle IDM parameters are drawn uniformly between these.
    pub idm_lo: IdmParams,
    pub idm_hi: IdmParams,
    /// Initial and entry speeds are drawn uniformly from this range, m/s.
    pub speed_min: f64,
    pub speed_max: f64,
    pub recordings: u32,
    pub duration_s: f64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig {
            seed: 0,
            lanes: 3,
            length_m: 500.0,
            vehicles: 24,
            mode: SynthMode::IdmInteracting,
            lane_change_rate: 0.5,
            idm_lo: IdmParams {
                v0: 22.0,
                a_max: 0.8,
                tau: 1.0,
                b: 1.5,
                s0: 2.0,
                delta: 4.0,
            },
            idm_hi: IdmParams {
                v0: 34.0,
                a_max: 2.0,
                tau: 1.8,
                b: 3.0,
                s0: 4.0,
                delta: 4.0,
            },
            speed_min: 15.0,
            speed_max: 32.0,
            recordings: 3,
            duration_s: 120.0,
        }
    }
}

const IDM_KEYS: [&str; 5] = ["v0", "a_max", "tau", "b", "s0"];

fn idm_field<'a>(p: &'a mut IdmParams, key: &str) -> &'a mut f64 {
    match key {
        "v0" => &mut p.v0,
        "a_max" => &mut p.a_max,
        "tau" => &mut p.tau,
        "b" => &mut p.b,
        "s0" => &mut p.s0,
        _ => unreachable!(),
    }
}

impl SynthConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::config(m));
        if self.lanes == 0 || self.vehicles == 0 || self.recordings == 0 {
            return bad("lanes, vehicles and recordings must be positive".into());
        }
        if !(self.length_m > 0.0 && self.duration_s > 0.0) {
            return bad("length_m and duration_s must be positive".into());
        }
        if !(self.speed_min >= 0.0 && self.speed_max >= self.speed_min) {
            return bad(format!(
                "bad speed range [{}, {}]",
                self.speed_min, self.speed_max
            ));
        }
        if !(self.lane_change_rate >= 0.0 && self.lane_change_rate.is_finite()) {
            return bad("lane_change_rate must be non-negative".into());
        }
        self.idm_lo.validate()?;
        self.idm_hi.validate()?;
        let (mut lo, mut hi) = (self.idm_lo, self.idm_hi);
        for k in IDM_KEYS {
            if *idm_field(&mut lo, k) > *idm_field(&mut hi, k) {
                return bad(format!("IDM range for {k} is empty"));
            }
        }
        if self.idm_lo.delta != self.idm_hi.delta {
            return bad("delta must be fixed".into());
        }
        let capacity = self.lanes as usize * (self.length_m / SPAWN_GAP_M).floor() as usize;
        if self.vehicles > capacity {
            return bad(format!(
                "{} vehicles do not fit on {} lanes of {} m (capacity {capacity})",
                self.vehicles, self.lanes, self.length_m
            ));
        }
        Ok(())
    }

    /// Applies `key=value` overrides, one per line; `#` starts a comment.
    /// IDM ranges use `<param>_min` / `<param>_max` keys.
    pub fn apply_kv_str(&mut self, text: &str) -> Result<()> {
        for (lineno, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let err = |message: String| Error::Parse {
                line: lineno + 1,
                message,
            };
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| err(format!("expected key=value, got {line:?}")))?;
            self.set(k.trim(), v.trim())
                .map_err(|e| err(e.to_string()))?;
        }
        self.validate()
    }

    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        fn num<T: FromStr>(key: &str, value: &str) -> Result<T> {
            value
                .parse()
                .map_err(|_| Error::config(format!("bad value {value:?} for {key}")))
        }
        match key {
            "seed" => self.seed = num(key, value)?,
            "lanes" => self.lanes = num(key, value)?,
            "length_m" => self.length_m = num(key, value)?,
            "vehicles" => self.vehicles = num(key, value)?,
            "mode" => self.mode = value.parse()?,
            "lane_change_rate" => self.lane_change_rate = num(key, value)?,
            "speed_min" => self.speed_min = num(key, value)?,
            "speed_max" => self.speed_max = num(key, value)?,
            "recordings" => self.recordings = num(key, value)?,
            "duration_s" => self.duration_s = num(key, value)?,
            "delta" => {
                self.idm_lo.delta = num(key, value)?;
                self.idm_hi.delta = self.idm_lo.delta;
            }
            _ => {
                let range = key
                    .strip_suffix("_min")
                    .map(|p| (p, true))
                    .or_else(|| key.strip_suffix("_max").map(|p| (p, false)));
                match range {
                    Some((p, is_min)) if IDM_KEYS.contains(&p) => {
                        let target = if is_min {
                            &mut self.idm_lo
                        } else {
                            &mut self.idm_hi
                        };
                        *idm_field(target, p) = num(key, value)?;
                    }
                    _ => return Err(Error::config(format!("unknown key {key:?}"))),
                }
            }
        }
        Ok(())
    }
}

/// Lateral centre of a lane; lane 1 is nearest `y = 0`.
pub fn lane_center(lane: i32) -> f64 {
    (f64::from(lane) - 0.5) * LANE_WIDTH_M
}

#[derive(Debug, Clone, Copy)]
struct LaneChange {
    from: i32,
    to: i32,
    start: f64,
}

/// A vehicle handed to [`simulate_idm`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimVehicle {
    pub vehicle_id: i64,
    pub x: f64,
    pub v: f64,
    pub lane_id: i32,
    pub params: IdmParams,
}

struct Agent {
    id: i64,
    x: f64,
    v: f64,
    lane: i32,
    params: IdmParams,
    change: Option<LaneChange>,
    next_change: f64,
    /// Constant-velocity mode: position at `t_ref`.
    x_ref: f64,
    t_ref: f64,
    track: usize,
}

impl Agent {
    fn lateral(&self, t: f64) -> (f64, f64) {
        match self.change {
            None => (lane_center(self.lane), 0.0),
            Some(c) => {
                let (a, b) = (lane_center(c.from), lane_center(c.to));
                let phase = ((t - c.start) / LANE_CHANGE_S).clamp(0.0, 1.0);
                let y = a + (b - a) * (1.0 - (PI * phase).cos()) / 2.0;
                let vy = (b - a) * PI / (2.0 * LANE_CHANGE_S) * (PI * phase).sin();
                (y, vy)
            }
        }
    }
}

struct Sim<'a> {
    agents: Vec<Agent>,
    tracks: Vec<Track>,
    recording_id: u32,
    rate: u32,
    cfg: Option<&'a SynthConfig>,
}

impl Sim<'_> {
    fn start_track(&mut self, agent: usize) {
        let a = &mut self.agents[agent];
        a.track = self.tracks.len();
        self.tracks.push(Track {
            recording_id: self.recording_id,
            vehicle_id: a.id,
            frames: Vec::new(),
            x: Vec::new(),
            y: Vec::new(),
            lane_id: Vec::new(),
            v_raw: None,
            vx: Some(Vec::new()),
            vy: Some(Vec::new()),
        });
    }

    fn record(&mut self, frame: i64, t: f64) {
        for a in &self.agents {
            let (y, vy) = a.lateral(t);
            let tr = &mut self.tracks[a.track];
            tr.frames.push(frame);
            tr.x.push(a.x);
            tr.y.push(y);
            tr.lane_id.push(a.lane);
            tr.vx.as_mut().unwrap().push(a.v);
            tr.vy.as_mut().unwrap().push(vy);
        }
    }

    fn idm_step(&mut self, dt: f64) -> Result<()> {
        let lane: Vec<i32> = self.agents.iter().map(|a| a.lane).collect();
        let x: Vec<f64> = self.agents.iter().map(|a| a.x).collect();
        let ids: Vec<i64> = self.agents.iter().map(|a| a.id).collect();
        let leaders = same_lane_leaders(&lane, &x, &ids);
        let mut acc = Vec::with_capacity(self.agents.len());
        for (i, a) in self.agents.iter().enumerate() {
            acc.push(match leaders[i] {
                Some(j) => {
                    let l = &self.agents[j];
                    idm_acceleration(a.v, (l.x - a.x).max(MIN_GAP_M), a.v - l.v, true, &a.params)?
                }
                None => idm_acceleration(a.v, 0.0, 0.0, false, &a.params)?,
            });
        }
        for (a, acc) in self.agents.iter_mut().zip(acc) {
            a.x += a.v * dt;
            a.v = (a.v + acc * dt).max(0.0);
        }
        Ok(())
    }
}

/// Joint IDM simulation of the given vehicles with no lane changes, entries
/// or exits, sampled at `rate` Hz for `duration_s` seconds.
pub fn simulate_idm(vehicles: &[SimVehicle], duration_s: f64, rate: u32) -> Result<RawTrackTable> {
    for v in vehicles {
        v.params.validate()?;
    }
    let mut sim = Sim {
        agents: vehicles
            .iter()
            .map(|v| Agent {
                id: v.vehicle_id,
                x: v.x,
                v: v.v.max(0.0),
                lane: v.lane_id,
                params: v.params,
                change: None,
                next_change: f64::INFINITY,
                x_ref: v.x,
                t_ref: 0.0,
                track: 0,
            })
            .collect(),
        tracks: Vec::new(),
        recording_id: 1,
        rate,
        cfg: None,
    };
    for i in 0..sim.agents.len() {
        sim.start_track(i);
    }
    let dt = 1.0 / f64::from(rate);
    let frames = (duration_s * f64::from(rate)).round() as i64;
    for f in 0..frames {
        sim.record(f, f as f64 * dt);
        sim.idm_step(dt)?;
    }
    RawTrackTable::new(Source::Synthetic, rate, sim.tracks)
}

fn draw_params(rng: &mut ChaCha8Rng, cfg: &SynthConfig) -> IdmParams {
    let (mut lo, mut hi) = (cfg.idm_lo, cfg.idm_hi);
    let mut p = cfg.idm_lo;
    for k in IDM_KEYS {
        let (a, b) = (*idm_field(&mut lo, k), *idm_field(&mut hi, k));
        *idm_field(&mut p, k) = if b > a { rng.gen_range(a..=b) } else { a };
    }
    p
}

fn draw_speed(rng: &mut ChaCha8Rng, cfg: &SynthConfig) -> f64 {
    if cfg.speed_max > cfg.speed_min {
        rng.gen_range(cfg.speed_min..=cfg.speed_max)
    } else {
        cfg.speed_min
    }
}

fn next_change_time(rng: &mut ChaCha8Rng, t: f64, rate_per_min: f64) -> f64 {
    if rate_per_min <= 0.0 {
        return f64::INFINITY;
    }
    let u: f64 = rng.gen_range(f64::MIN_POSITIVE..1.0);
    t - u.ln() * 60.0 / rate_per_min
}

impl Sim<'_> {
    fn new_agent(
        &mut self,
        rng: &mut ChaCha8Rng,
        next_id: &mut i64,
        x: f64,
        lane: i32,
        t: f64,
    ) -> Agent {
        let cfg = self.cfg.unwrap();
        let id = *next_id;
        *next_id += 1;
        let params = draw_params(rng, cfg);
        let v = draw_speed(rng, cfg);
        Agent {
            id,
            x,
            v,
            lane,
            params,
            change: None,
            next_change: match cfg.mode {
                SynthMode::ConstantVelocity => f64::INFINITY,
                SynthMode::IdmInteracting => next_change_time(rng, t, cfg.lane_change_rate),
            },
            x_ref: x,
            t_ref: t,
            track: 0,
        }
    }

    fn clearance(&self, me: usize, lane: i32) -> bool {
        let x = self.agents[me].x;
        self.agents.iter().enumerate().all(|(j, o)| {
            j == me
                || (o.lane != lane && o.change.is_none_or(|c| c.to != lane && c.from != lane))
                || (o.x - x).abs() > LANE_CHANGE_CLEARANCE_M
        })
    }

    fn lane_changes(&mut self, rng: &mut ChaCha8Rng, t: f64) {
        let cfg = self.cfg.unwrap();
        let lanes = cfg.lanes as i32;
        for i in 0..self.agents.len() {
            if let Some(c) = self.agents[i].change {
                let elapsed = t - c.start;
                if elapsed >= 0.5 * LANE_CHANGE_S {
                    self.agents[i].lane = c.to;
                }
                if elapsed >= LANE_CHANGE_S {
                    self.agents[i].change = None;
                }
                continue;
            }
            if t < self.agents[i].next_change {
                continue;
            }
            self.agents[i].next_change = next_change_time(rng, t, cfg.lane_change_rate);
            let lane = self.agents[i].lane;
            let options: Vec<i32> = [lane - 1, lane + 1]
                .into_iter()
                .filter(|l| (1..=lanes).contains(l))
                .collect();
            if options.is_empty() {
                continue;
            }
            let to = options[rng.gen_range(0..options.len())];
            if self.clearance(i, to) {
                self.agents[i].change = Some(LaneChange {
                    from: lane,
                    to,
                    start: t,
                });
            }
        }
    }
}

fn simulate_recording(cfg: &SynthConfig, recording_id: u32) -> Result<Vec<Track>> {
    let mut rng = ChaCha8Rng::seed_from_u64(
        cfg.seed ^ u64::from(recording_id).wrapping_mul(0x9E37_79B9_7F4A_7C15),
    );
    let rate = Source::Synthetic.native_rate();
    let dt = 1.0 / f64::from(rate);
    let mut sim = Sim {
        agents: Vec::new(),
        tracks: Vec::new(),
        recording_id,
        rate,
        cfg: Some(cfg),
    };
    let mut next_id = 1i64;

    // initial placement: distinct slots SPAWN_GAP_M apart, jittered
    let per_lane = (cfg.length_m / SPAWN_GAP_M).floor() as usize;
    let mut slots: Vec<usize> = (0..cfg.lanes as usize * per_lane).collect();
    for k in 0..cfg.vehicles {
        let j = rng.gen_range(k..slots.len());
        slots.swap(k, j);
    }
    let mut chosen = slots[..cfg.vehicles].to_vec();
    chosen.sort_unstable();
    for s in chosen {
        let lane = (s / per_lane) as i32 + 1;
        let x = (s % per_lane) as f64 * SPAWN_GAP_M + rng.gen_range(0.0..0.3 * SPAWN_GAP_M);
        let a = sim.new_agent(&mut rng, &mut next_id, x, lane, 0.0);
        sim.agents.push(a);
        sim.start_track(sim.agents.len() - 1);
    }

    let frames = (cfg.duration_s * f64::from(sim.rate)).round() as i64;
    for f in 0..frames {
        let t = f as f64 * dt;
        if f > 0 {
            match cfg.mode {
                SynthMode::ConstantVelocity => {
                    for a in &mut sim.agents {
                        a.x = a.x_ref + a.v * (t - a.t_ref);
                    }
                }
                SynthMode::IdmInteracting => {
                    sim.idm_step(dt)?;
                    sim.lane_changes(&mut rng, t);
                }
            }
            // exits, then entries into the emptiest lane
            sim.agents.retain(|a| a.x <= cfg.length_m);
            while sim.agents.len() < cfg.vehicles {
                let entry_gap = |lane: i32| {
                    sim.agents
                        .iter()
                        .filter(|a| a.lane == lane || a.change.is_some_and(|c| c.to == lane))
                        .map(|a| a.x)
                        .fold(f64::INFINITY, f64::min)
                };
                let (lane, gap) = (1..=cfg.lanes as i32)
                    .map(|l| (l, entry_gap(l)))
                    .fold((0, f64::NEG_INFINITY), |b, c| if c.1 > b.1 { c } else { b });
                if gap < SPAWN_GAP_M {
                    break;
                }
                let mut a = sim.new_agent(&mut rng, &mut next_id, 0.0, lane, t);
                if cfg.mode == SynthMode::IdmInteracting {
                    // enter no faster than the vehicle ahead allows
                    if let Some(l) = sim
                        .agents
                        .iter()
                        .filter(|o| o.lane == lane)
                        .min_by(|p, q| p.x.total_cmp(&q.x))
                    {
                        a.v = a.v.min(l.v + 0.2 * gap.min(50.0));
                    }
                }
                sim.agents.push(a);
                sim.start_track(sim.agents.len() - 1);
            }
        }
        sim.record(f, t);
    }
    Ok(sim.tracks)
}

/// Generates `cfg.recordings` recordings of synthetic traffic at 25 Hz with
/// exact velocities. Deterministic for a given configuration.
pub fn generate_synthetic(cfg: &SynthConfig) -> Result<RawTrackTable> {
    cfg.validate()?;
    let mut tracks = Vec::new();
    for r in 1..=cfg.recordings {
        tracks.extend(simulate_recording(cfg, r)?);
    }
    RawTrackTable::new(Source::Synthetic, Source::Synthetic.native_rate(), tracks)
}
