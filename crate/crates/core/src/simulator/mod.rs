//! Synthetic radar scenes with ground truth.
//!
//! Targets are rigid rectangles following [`Trajectory`]s. Reflections are
//! sampled on the edges facing the sensor, perturbed by position and Doppler
//! noise, optionally corrupted by range-rate outliers, thinned by dropout and
//! mixed with clutter. Range rates are produced by inverting the ego
//! compensation, so compensating an emitted point recovers the target's
//! radial velocity in the world frame.

mod scenarios;
mod trajectory;

pub use scenarios::{circle, scenario_a, scenario_b, scenario_c, stadium, traffic, ScenarioLabel};
pub use trajectory::{Kinematics, Path, PathPose, Segment, SpeedProfile, Trajectory};

use crate::ego_comp::{ego_range_rate, motion_at_sensor};
use crate::error::{Error, Result};
use crate::rng;
use crate::types::{normalize_angle, EgoState, Frame, RadarPoint, SensorMount};
use rand::Rng;
use rand_distr::{Distribution, Normal, Poisson};
use serde::{Deserialize, Serialize};
use std::f64::consts::FRAC_PI_3;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SensorModel {
    /// Std of the isotropic position noise (m).
    pub range_sigma: f64,
    /// Nominal positional resolution (m).
    pub pos_resolution: f64,
    /// Minimum spacing of reflections on an edge (m).
    pub separation: f64,
    pub doppler_sigma: f64,
    /// Full opening angle (rad).
    pub fov: f64,
    pub max_range: f64,
    pub min_range: f64,
    pub frame_rate: f64,
}

impl Default for SensorModel {
    fn default() -> Self {
        Self {
            range_sigma: 0.1,
            pos_resolution: 0.4,
            separation: 0.6,
            doppler_sigma: 0.12,
            fov: 2.0 * FRAC_PI_3,
            max_range: 120.0,
            min_range: 0.5,
            frame_rate: 14.0,
        }
    }
}

impl SensorModel {
    pub fn noiseless() -> Self {
        Self { range_sigma: 0.0, doppler_sigma: 0.0, ..Self::default() }
    }

    pub fn period(&self) -> f64 {
        1.0 / self.frame_rate
    }

    pub fn validate(&self) -> Result<()> {
        let positive = [self.pos_resolution, self.separation, self.fov, self.max_range, self.min_range, self.frame_rate];
        if positive.iter().all(|&v| v > 0.0) && self.range_sigma >= 0.0 && self.doppler_sigma >= 0.0 && self.min_range < self.max_range {
            Ok(())
        } else {
            Err(Error::Config(format!("invalid sensor model {self:?}")))
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct NoiseModel {
    pub outlier_prob: f64,
    /// Outlier corruption magnitude is uniform in `[min, max]` with a random sign.
    pub outlier_offset_min: f64,
    pub outlier_offset_max: f64,
    pub dropout_prob: f64,
    /// Expected clutter points per frame.
    pub clutter_rate: f64,
    /// Largest |range rate| of a clutter point.
    pub clutter_max_range_rate: f64,
    /// Std of the noise on the reported ego velocity (m/s).
    pub ego_velocity_sigma: f64,
}

impl Default for NoiseModel {
    fn default() -> Self {
        Self {
            outlier_prob: 0.3,
            outlier_offset_min: 1.0,
            outlier_offset_max: 6.0,
            dropout_prob: 0.05,
            clutter_rate: 2.0,
            clutter_max_range_rate: 10.0,
            ego_velocity_sigma: 0.0,
        }
    }
}

impl NoiseModel {
    pub fn none() -> Self {
        Self { outlier_prob: 0.0, dropout_prob: 0.0, clutter_rate: 0.0, ego_velocity_sigma: 0.0, ..Self::default() }
    }

    pub fn validate(&self) -> Result<()> {
        let probs = [self.outlier_prob, self.dropout_prob];
        if probs.iter().all(|p| (0.0..=1.0).contains(p))
            && self.outlier_offset_min >= 0.0
            && self.outlier_offset_min <= self.outlier_offset_max
            && self.clutter_rate >= 0.0
            && self.clutter_max_range_rate >= 0.0
            && self.ego_velocity_sigma >= 0.0
        {
            Ok(())
        } else {
            Err(Error::Config(format!("invalid noise model {self:?}")))
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Target {
    pub id: u32,
    pub length: f64,
    pub width: f64,
    pub trajectory: Trajectory,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    pub label: ScenarioLabel,
    pub duration: f64,
    pub ego: Trajectory,
    pub targets: Vec<Target>,
    #[serde(default = "default_mounts")]
    pub mounts: Vec<SensorMount>,
    #[serde(default)]
    pub sensor: SensorModel,
    #[serde(default)]
    pub noise: NoiseModel,
    /// Hide edges facing away from the sensor.
    #[serde(default = "yes")]
    pub self_occlusion: bool,
}

fn default_mounts() -> Vec<SensorMount> {
    vec![SensorMount::default()]
}

fn yes() -> bool {
    true
}

impl Scenario {
    pub fn frame_count(&self) -> u64 {
        (self.duration * self.sensor.frame_rate + 1e-9).floor() as u64 + 1
    }

    pub fn frame_time(&self, frame_index: u64) -> f64 {
        frame_index as f64 / self.sensor.frame_rate
    }

    pub fn ego_state(&self, t: f64) -> EgoState {
        let k = self.ego.state(t);
        EgoState { x_e: k.x, y_e: k.y, alpha: k.heading, vx_e: k.vx, vy_e: k.vy, omega_e: k.omega, timestamp: t }
    }

    pub fn validate(&self) -> Result<()> {
        self.sensor.validate()?;
        self.noise.validate()?;
        if !(self.duration >= 0.0) || self.mounts.is_empty() {
            return Err(Error::Config("scenario needs a duration and at least one sensor".into()));
        }
        if self.targets.iter().any(|t| !(t.length > 0.0 && t.width > 0.0)) {
            return Err(Error::Config("target extents must be positive".into()));
        }
        Ok(())
    }

    pub fn parse_toml(text: &str) -> Result<Self> {
        let s: Scenario = toml::from_str(text).map_err(|e| {
            let line = e.span().map(|sp| text[..sp.start].matches('\n').count() + 1).unwrap_or(0);
            Error::Parse { line, msg: e.message().to_string() }
        })?;
        s.validate()?;
        Ok(s)
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }
}

/// Ground truth attached to every emitted point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PointLabel {
    /// Target id, `None` for clutter.
    pub target: Option<u32>,
    /// Range-rate corruption added to the point; zero for inliers.
    pub outlier_offset: f64,
    /// True world velocity of the reflecting surface.
    pub velocity: (f64, f64),
}

impl PointLabel {
    pub fn is_outlier(&self) -> bool {
        self.outlier_offset != 0.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TargetTruth {
    pub id: u32,
    pub x: f64,
    pub y: f64,
    pub heading: f64,
    pub vx: f64,
    pub vy: f64,
    pub omega: f64,
    pub length: f64,
    pub width: f64,
}

impl TargetTruth {
    pub fn speed(&self) -> f64 {
        self.vx.hypot(self.vy)
    }
}

/// One simulated scan with its ground truth.
#[derive(Debug, Clone, PartialEq)]
pub struct SimFrame {
    /// The frame as a pipeline would receive it (ego possibly noisy).
    pub frame: Frame,
    /// One label per point of `frame.points`.
    pub labels: Vec<PointLabel>,
    pub targets: Vec<TargetTruth>,
    pub ego_truth: EgoState,
}

/// Body-frame reflection sites on the rectangle's edges: position, edge
/// index and whether the site is the corner opening that edge.
fn edge_sites(length: f64, width: f64, separation: f64) -> Vec<((f64, f64), usize, bool)> {
    let (hl, hw) = (length / 2.0, width / 2.0);
    // counter-clockwise: front, left, rear, right
    let corners = [(hl, -hw), (hl, hw), (-hl, hw), (-hl, -hw)];
    let mut out = Vec::new();
    for e in 0..4 {
        let (a, b) = (corners[e], corners[(e + 1) % 4]);
        let len = (b.0 - a.0).hypot(b.1 - a.1);
        let n = ((len / separation).floor() as usize).max(1);
        for j in 0..n {
            let f = j as f64 / n as f64;
            out.push(((a.0 + f * (b.0 - a.0), a.1 + f * (b.1 - a.1)), e, j == 0));
        }
    }
    out
}

/// Outward normals of the edges in body frame, same order as [`edge_sites`].
const EDGE_NORMALS: [(f64, f64); 4] = [(1.0, 0.0), (0.0, 1.0), (-1.0, 0.0), (0.0, -1.0)];

fn to_world(k: &Kinematics, p: (f64, f64)) -> (f64, f64) {
    let (s, c) = k.heading.sin_cos();
    (k.x + c * p.0 - s * p.1, k.y + s * p.0 + c * p.1)
}

fn rotate(h: f64, v: (f64, f64)) -> (f64, f64) {
    let (s, c) = h.sin_cos();
    (c * v.0 - s * v.1, s * v.0 + c * v.1)
}

/// World position, point velocity and visibility of every reflection site.
fn visible_sites(target: &Target, k: &Kinematics, sensor_pos: (f64, f64), self_occlusion: bool, separation: f64) -> Vec<((f64, f64), (f64, f64))> {
    let sites = edge_sites(target.length, target.width, separation);
    let visible: Vec<bool> = (0..4)
        .map(|e| {
            if !self_occlusion {
                return true;
            }
            let n = rotate(k.heading, EDGE_NORMALS[e]);
            let mid_body = match e {
                0 => (target.length / 2.0, 0.0),
                1 => (0.0, target.width / 2.0),
                2 => (-target.length / 2.0, 0.0),
                _ => (0.0, -target.width / 2.0),
            };
            let m = to_world(k, mid_body);
            n.0 * (sensor_pos.0 - m.0) + n.1 * (sensor_pos.1 - m.1) > 0.0
        })
        .collect();
    sites
        .into_iter()
        // a corner opening edge `e` also closes edge `e - 1`
        .filter(|&(_, e, corner)| visible[e] || (corner && visible[(e + 3) % 4]))
        .map(|(p, _, _)| {
            let w = to_world(k, p);
            // rigid-body velocity of the surface point
            let r = (w.0 - k.x, w.1 - k.y);
            (w, (k.vx - k.omega * r.1, k.vy + k.omega * r.0))
        })
        .collect()
}

/// Generates the frame with index `frame_index` of `scenario`. The random
/// stream depends only on `(seed, frame_index)`.
pub fn generate_frame(scenario: &Scenario, frame_index: u64, seed: u64) -> SimFrame {
    let t = scenario.frame_time(frame_index);
    let mut rng = rng::stream(rng::derive(seed, frame_index), 0);
    let ego = scenario.ego_state(t);
    let sensor = &scenario.sensor;
    let noise = &scenario.noise;
    let pos_noise = Normal::new(0.0, sensor.range_sigma).expect("finite sigma");
    let dop_noise = Normal::new(0.0, sensor.doppler_sigma).expect("finite sigma");

    let truths: Vec<(TargetTruth, Kinematics)> = scenario
        .targets
        .iter()
        .map(|tg| {
            let k = tg.trajectory.state(t);
            let truth = TargetTruth {
                id: tg.id,
                x: k.x,
                y: k.y,
                heading: k.heading,
                vx: k.vx,
                vy: k.vy,
                omega: k.omega,
                length: tg.length,
                width: tg.width,
            };
            (truth, k)
        })
        .collect();

    let mut points = Vec::new();
    let mut labels = Vec::new();
    for (sid, mount) in scenario.mounts.iter().enumerate() {
        let sensor_pos = mount.world_position(&ego);
        let boresight = mount.world_yaw(&ego);
        let motion = motion_at_sensor(&ego, mount);
        let mut emit = |pos: (f64, f64), rr_comp: f64, label: PointLabel| -> bool {
            let (dx, dy) = (pos.0 - sensor_pos.0, pos.1 - sensor_pos.1);
            let range = dx.hypot(dy);
            let phi_s = normalize_angle(dy.atan2(dx) - boresight);
            if range < sensor.min_range || range > sensor.max_range || phi_s.abs() > sensor.fov / 2.0 {
                return false;
            }
            let r_e = ego_range_rate(&motion, mount, phi_s, ego.alpha);
            points.push(RadarPoint {
                x_w: pos.0,
                y_w: pos.1,
                range_rate_meas: rr_comp - r_e,
                bearing_sensor: phi_s,
                timestamp: t,
                sensor_id: sid as u32,
            });
            labels.push(label);
            true
        };

        for (tg, (truth, k)) in scenario.targets.iter().zip(&truths) {
            for (p, v) in visible_sites(tg, k, sensor_pos, scenario.self_occlusion, sensor.separation) {
                if noise.dropout_prob > 0.0 && rng.random_bool(noise.dropout_prob) {
                    continue;
                }
                let pos = (p.0 + pos_noise.sample(&mut rng), p.1 + pos_noise.sample(&mut rng));
                let phi_w = (pos.1 - sensor_pos.1).atan2(pos.0 - sensor_pos.0);
                let mut rr = v.0 * phi_w.cos() + v.1 * phi_w.sin() + dop_noise.sample(&mut rng);
                let mut offset = 0.0;
                if noise.outlier_prob > 0.0 && rng.random_bool(noise.outlier_prob) {
                    let mag = rng.random_range(noise.outlier_offset_min..=noise.outlier_offset_max);
                    offset = if rng.random_bool(0.5) { mag } else { -mag };
                    rr += offset;
                }
                emit(pos, rr, PointLabel { target: Some(truth.id), outlier_offset: offset, velocity: v });
            }
        }

        if noise.clutter_rate > 0.0 {
            let n = Poisson::new(noise.clutter_rate).expect("positive rate").sample(&mut rng) as usize;
            for _ in 0..n {
                let r = rng.random_range(sensor.min_range..sensor.max_range);
                let a = boresight + rng.random_range(-sensor.fov / 2.0..sensor.fov / 2.0);
                let pos = (sensor_pos.0 + r * a.cos(), sensor_pos.1 + r * a.sin());
                let rr = rng.random_range(-noise.clutter_max_range_rate..=noise.clutter_max_range_rate);
                emit(pos, rr, PointLabel { target: None, outlier_offset: 0.0, velocity: (0.0, 0.0) });
            }
        }
    }

    let mut reported = ego;
    if noise.ego_velocity_sigma > 0.0 {
        let n = Normal::new(0.0, noise.ego_velocity_sigma).expect("finite sigma");
        reported.vx_e += n.sample(&mut rng);
        reported.vy_e += n.sample(&mut rng);
    }
    SimFrame {
        frame: Frame { points, ego: reported, timestamp: t, frame_index },
        labels,
        targets: truths.into_iter().map(|(tr, _)| tr).collect(),
        ego_truth: ego,
    }
}

/// All frames of a scenario in order.
pub fn generate(scenario: &Scenario, seed: u64) -> impl Iterator<Item = SimFrame> + '_ {
    (0..scenario.frame_count()).map(move |k| generate_frame(scenario, k, seed))
}
