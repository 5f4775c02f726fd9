//! Piecewise planar paths with a closed-form speed profile.

use crate::types::normalize_angle;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Segment {
    Line { length: f64 },
    /// Circular arc; positive `angle` turns left.
    Arc { radius: f64, angle: f64 },
}

impl Segment {
    pub fn length(&self) -> f64 {
        match *self {
            Segment::Line { length } => length,
            Segment::Arc { radius, angle } => radius * angle.abs(),
        }
    }

    fn curvature(&self) -> f64 {
        match *self {
            Segment::Line { .. } => 0.0,
            Segment::Arc { radius, angle } => angle.signum() / radius,
        }
    }
}

/// Pose along a path at arc length `s`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PathPose {
    pub x: f64,
    pub y: f64,
    pub heading: f64,
    pub curvature: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Path {
    /// `[x, y, heading]` at arc length zero.
    pub start: [f64; 3],
    #[serde(default)]
    pub segments: Vec<Segment>,
    /// Closed paths wrap around; open ones continue straight past the end.
    #[serde(default)]
    pub closed: bool,
}

impl Path {
    pub fn length(&self) -> f64 {
        self.segments.iter().map(Segment::length).sum()
    }

    pub fn pose_at(&self, s: f64) -> PathPose {
        let total = self.length();
        let mut s = if self.closed && total > 0.0 { s.rem_euclid(total) } else { s };
        let [mut x, mut y, mut h] = self.start;
        for seg in &self.segments {
            let len = seg.length();
            let step = s.min(len);
            let k = seg.curvature();
            if k == 0.0 {
                x += step * h.cos();
                y += step * h.sin();
            } else {
                let dh = k * step;
                x += (((h + dh).sin()) - h.sin()) / k;
                y += (h.cos() - (h + dh).cos()) / k;
                h += dh;
            }
            if s <= len {
                return PathPose { x, y, heading: normalize_angle(h), curvature: k };
            }
            s -= len;
        }
        // past the end of an open path: straight extension
        x += s * h.cos();
        y += s * h.sin();
        PathPose { x, y, heading: normalize_angle(h), curvature: 0.0 }
    }
}

/// Initial speed followed by constant-acceleration phases; the last speed
/// is held afterwards. Speed never drops below zero.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct SpeedProfile {
    pub initial: f64,
    /// `[duration, acceleration]` pairs.
    #[serde(default)]
    pub phases: Vec<[f64; 2]>,
}

impl SpeedProfile {
    pub fn constant(v: f64) -> Self {
        Self { initial: v, phases: Vec::new() }
    }

    /// Distance travelled, speed and acceleration at time `t`.
    pub fn at(&self, t: f64) -> (f64, f64, f64) {
        let (mut s, mut v, mut rem) = (0.0, self.initial, t.max(0.0));
        for &[dur, a] in &self.phases {
            let d = rem.min(dur);
            if a < 0.0 && v + a * d < 0.0 {
                s += v * v / (-2.0 * a);
                v = 0.0;
                if rem <= dur {
                    return (s, 0.0, 0.0);
                }
                rem -= dur;
                continue;
            }
            s += v * d + 0.5 * a * d * d;
            v += a * d;
            if rem <= dur {
                return (s, v, a);
            }
            rem -= dur;
        }
        (s + v * rem, v, 0.0)
    }
}

/// Kinematic state of a body following a trajectory.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Kinematics {
    pub x: f64,
    pub y: f64,
    pub heading: f64,
    pub vx: f64,
    pub vy: f64,
    pub omega: f64,
}

impl Kinematics {
    pub fn speed(&self) -> f64 {
        self.vx.hypot(self.vy)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub path: Path,
    pub speed: SpeedProfile,
    /// Arc length at `t = 0`.
    #[serde(default)]
    pub s0: f64,
}

impl Trajectory {
    pub fn stationary(x: f64, y: f64, heading: f64) -> Self {
        Self { path: Path { start: [x, y, heading], segments: Vec::new(), closed: false }, speed: SpeedProfile::default(), s0: 0.0 }
    }

    pub fn straight(x: f64, y: f64, heading: f64, speed: SpeedProfile) -> Self {
        Self { path: Path { start: [x, y, heading], segments: Vec::new(), closed: false }, speed, s0: 0.0 }
    }

    pub fn state(&self, t: f64) -> Kinematics {
        let (s, v, _) = self.speed.at(t);
        let pose = self.path.pose_at(self.s0 + s);
        let (sh, ch) = pose.heading.sin_cos();
        Kinematics { x: pose.x, y: pose.y, heading: pose.heading, vx: v * ch, vy: v * sh, omega: v * pose.curvature }
    }
}
