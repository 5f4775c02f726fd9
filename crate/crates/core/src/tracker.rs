//! Extended-object track management with a linear Kalman filter.
//!
//! The state is `[x, y, vx, vy, l, w]`: centre position, world velocity and
//! the extents along and across the heading. Prediction uses a constant
//! velocity model with white-acceleration process noise; every state
//! component is measured directly from the (merged) cluster, so the
//! observation matrix is the identity.
//!
//! Lifecycle: a track is born `Invalid` from an unassociated cluster, becomes
//! `Valid` after `confirm_hits` consecutive associated frames and is deleted
//! after `delete_misses` consecutive frames without a cluster. Only valid
//! tracks are reported downstream, but invalid ones take part in association.

use crate::association::{associate, AssociationResult, Gates};
use crate::clustering::{extreme_points_bbox, Cluster};
use crate::error::{Error, Result};
use crate::preprocess::TaggedPoint;
use crate::rng;
use crate::velocity::{estimate_velocity, RlsConfig};
use nalgebra::{Matrix6, Vector6};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum TrackStatus {
    Invalid,
    Valid,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct KfConfig {
    /// White-acceleration spectral density of the CV model, as a std (m/s^2).
    pub sigma_a: f64,
    /// Random-walk rate of the extents (m^2/s).
    pub extent_drift: f64,
    /// Measurement noise variances for `[x, y, vx, vy, l, w]`.
    pub r: [f64; 6],
    /// Initial covariance diagonal of a new track.
    pub init_var: [f64; 6],
    pub confirm_hits: u32,
    pub delete_misses: u32,
    pub init_l: f64,
    pub init_w: f64,
}

impl Default for KfConfig {
    fn default() -> Self {
        Self {
            sigma_a: 2.0,
            extent_drift: 0.01,
            r: [0.16, 0.16, 0.25, 0.25, 0.25, 0.25],
            init_var: [0.16, 0.16, 0.25, 0.25, 1.0, 1.0],
            confirm_hits: 3,
            delete_misses: 5,
            init_l: 4.0,
            init_w: 2.0,
        }
    }
}

impl KfConfig {
    /// Practically noise-free measurements: the posterior follows the measurement.
    pub fn exact() -> Self {
        Self { r: [1e-12; 6], ..Self::default() }
    }

    pub fn validate(&self) -> Result<()> {
        let ok = self.sigma_a >= 0.0
            && self.extent_drift >= 0.0
            && self.r.iter().all(|&v| v > 0.0)
            && self.init_var.iter().all(|&v| v > 0.0)
            && self.confirm_hits > 0
            && self.delete_misses > 0
            && self.init_l >= 0.0
            && self.init_w >= 0.0;
        if ok {
            Ok(())
        } else {
            Err(Error::Config(format!("invalid tracker configuration {self:?}")))
        }
    }

    fn transition(dt: f64) -> Matrix6<f64> {
        let mut f = Matrix6::identity();
        f[(0, 2)] = dt;
        f[(1, 3)] = dt;
        f
    }

    pub fn process_noise(&self, dt: f64) -> Matrix6<f64> {
        let q = self.sigma_a * self.sigma_a;
        let mut m = Matrix6::zeros();
        for (p, v) in [(0, 2), (1, 3)] {
            m[(p, p)] = q * dt.powi(4) / 4.0;
            m[(p, v)] = q * dt.powi(3) / 2.0;
            m[(v, p)] = q * dt.powi(3) / 2.0;
            m[(v, v)] = q * dt * dt;
        }
        m[(4, 4)] = self.extent_drift * dt;
        m[(5, 5)] = self.extent_drift * dt;
        m
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Track {
    pub id: u64,
    pub state: Vector6<f64>,
    pub cov: Matrix6<f64>,
    pub status: TrackStatus,
    /// Consecutive frames with at least one associated cluster.
    pub hits: u32,
    /// Consecutive frames without one.
    pub misses: u32,
    pub last_update: f64,
    /// Time the state refers to.
    pub time: f64,
}

impl Track {
    pub fn new(id: u64, state: [f64; 6], cfg: &KfConfig, t: f64) -> Self {
        Self {
            id,
            state: Vector6::from_column_slice(&state),
            cov: Matrix6::from_diagonal(&Vector6::from_column_slice(&cfg.init_var)),
            status: TrackStatus::Invalid,
            hits: 0,
            misses: 0,
            last_update: t,
            time: t,
        }
    }

    pub fn position(&self) -> (f64, f64) {
        (self.state[0], self.state[1])
    }

    pub fn velocity(&self) -> (f64, f64) {
        (self.state[2], self.state[3])
    }

    pub fn extents(&self) -> (f64, f64) {
        (self.state[4], self.state[5])
    }

    pub fn is_valid(&self) -> bool {
        self.status == TrackStatus::Valid
    }

    /// Books an associated frame.
    pub fn record_hit(&mut self, cfg: &KfConfig) {
        self.hits += 1;
        self.misses = 0;
        if self.hits >= cfg.confirm_hits {
            self.status = TrackStatus::Valid;
        }
    }

    /// Books a frame without association; returns true when the track is stale.
    pub fn record_miss(&mut self, cfg: &KfConfig) -> bool {
        self.misses += 1;
        self.hits = 0;
        self.misses >= cfg.delete_misses
    }
}

/// Constant-velocity prediction over `dt` seconds.
pub fn predict(track: &Track, dt: f64, cfg: &KfConfig) -> Result<Track> {
    if !(dt > 0.0) {
        return Err(Error::InvalidTimeStep(dt));
    }
    let f = KfConfig::transition(dt);
    let mut out = track.clone();
    out.state = f * track.state;
    let p = f * track.cov * f.transpose() + cfg.process_noise(dt);
    out.cov = (p + p.transpose()) * 0.5;
    out.time = track.time + dt;
    Ok(out)
}

/// Direct measurement of the full state, built from one or more clusters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Measurement {
    pub x: f64,
    pub y: f64,
    pub vx: f64,
    pub vy: f64,
    pub l: f64,
    pub w: f64,
}

impl Measurement {
    pub fn to_vector(&self) -> Vector6<f64> {
        Vector6::new(self.x, self.y, self.vx, self.vy, self.l, self.w)
    }

    pub fn from_cluster(c: &Cluster) -> Option<Self> {
        let (vx, vy) = c.velocity_vector()?;
        Some(Self { x: c.centre.0, y: c.centre.1, vx, vy, l: c.bbox.length, w: c.bbox.width })
    }
}

/// Kalman measurement update with `H = I`, Joseph-form covariance.
pub fn update(track: &Track, meas: &Measurement, cfg: &KfConfig) -> Track {
    let r = Matrix6::from_diagonal(&Vector6::from_column_slice(&cfg.r));
    let s = track.cov + r;
    // S is symmetric positive definite since both terms are.
    let s_inv = s.cholesky().map(|c| c.inverse()).unwrap_or_else(|| s.try_inverse().unwrap_or(Matrix6::zeros()));
    let k = track.cov * s_inv;
    let innovation = meas.to_vector() - track.state;
    let mut out = track.clone();
    out.state = track.state + k * innovation;
    out.state[4] = out.state[4].max(0.0);
    out.state[5] = out.state[5].max(0.0);
    let i_k = Matrix6::identity() - k;
    let p = i_k * track.cov * i_k.transpose() + k * r * k.transpose();
    out.cov = (p + p.transpose()) * 0.5;
    out
}

/// Result of pooling the clusters associated to one track.
#[derive(Debug, Clone, PartialEq)]
pub struct Merged {
    pub measurement: Measurement,
    /// True when the pooled velocity fit failed and the weighted mean of the
    /// member velocities was used instead.
    pub fallback: bool,
    pub inlier_count: usize,
}

fn weighted_velocity(clusters: &[&Cluster]) -> Option<(f64, f64)> {
    let mut sum = (0.0, 0.0);
    let mut total = 0.0;
    for c in clusters {
        if let Some(est) = &c.velocity {
            let w = est.inlier_count.max(1) as f64;
            sum.0 += w * est.v.0;
            sum.1 += w * est.v.1;
            total += w;
        }
    }
    (total > 0.0).then(|| (sum.0 / total, sum.1 / total))
}

/// Heading used to orient extents; falls back to `fallback` for slow objects.
pub fn heading_of(v: (f64, f64), fallback: f64) -> f64 {
    if v.0.hypot(v.1) > 1e-6 {
        v.1.atan2(v.0)
    } else {
        fallback
    }
}

/// Pools all points of the given clusters and re-derives the measurement.
/// The pooled velocity fit is seeded with the inlier-weighted mean of the
/// member velocities.
pub fn merge_clusters(clusters: &[&Cluster], rls: &RlsConfig) -> Result<Merged> {
    let first = clusters.first().ok_or(Error::Empty("merge of no clusters"))?;
    let mean_v = weighted_velocity(clusters).ok_or(Error::MissingVelocity)?;
    if clusters.len() == 1 {
        let est = first.velocity.as_ref().ok_or(Error::MissingVelocity)?;
        return Ok(Merged {
            measurement: Measurement::from_cluster(first).ok_or(Error::MissingVelocity)?,
            fallback: false,
            inlier_count: est.inlier_count,
        });
    }
    let pooled: Vec<TaggedPoint> = clusters.iter().flat_map(|c| c.points.iter().copied()).collect();
    let samples: Vec<(f64, f64)> = pooled.iter().map(|(p, _)| (p.phi_w, p.range_rate_comp)).collect();
    let (v, fallback, inliers) = match estimate_velocity(&samples, mean_v, rls) {
        Ok(est) => (est.v, false, est.inlier_count),
        Err(_) => (mean_v, true, clusters.iter().filter_map(|c| c.velocity.as_ref()).map(|e| e.inlier_count).sum()),
    };
    let positions: Vec<(f64, f64)> = pooled.iter().map(|(p, _)| p.position()).collect();
    let bbox = extreme_points_bbox(&positions, heading_of(v, first.bbox.yaw))?;
    Ok(Merged {
        measurement: Measurement { x: bbox.centre.0, y: bbox.centre.1, vx: v.0, vy: v.1, l: bbox.length, w: bbox.width },
        fallback,
        inlier_count: inliers,
    })
}

/// What happened during one tracker step.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct StepReport {
    pub association: AssociationResult,
    pub created: Vec<u64>,
    pub deleted: Vec<u64>,
    pub merge_fallbacks: usize,
}

#[derive(Debug, Clone)]
pub struct Tracker {
    pub cfg: KfConfig,
    pub gates: Gates,
    pub rls: RlsConfig,
    tracks: Vec<Track>,
    next_id: u64,
}

impl Tracker {
    pub fn new(cfg: KfConfig, gates: Gates, rls: RlsConfig) -> Self {
        Self { cfg, gates, rls, tracks: Vec::new(), next_id: 0 }
    }

    pub fn tracks(&self) -> &[Track] {
        &self.tracks
    }

    pub fn valid_tracks(&self) -> impl Iterator<Item = &Track> {
        self.tracks.iter().filter(|t| t.is_valid())
    }

    /// Inserts a track directly (fixtures, replays). Returns its id.
    pub fn insert(&mut self, mut track: Track) -> u64 {
        track.id = self.next_id;
        self.next_id += 1;
        self.tracks.push(track);
        self.next_id - 1
    }

    /// Predict, associate, update and manage the track list for the clusters
    /// of the frame at time `t`. `rng_seed` drives the pooled velocity fits.
    pub fn step(&mut self, clusters: &[Cluster], t: f64, rng_seed: u64) -> Result<StepReport> {
        for track in &mut self.tracks {
            let dt = t - track.time;
            if dt > 0.0 {
                *track = predict(track, dt, &self.cfg)?;
            }
        }

        let association = associate(&self.tracks, clusters, &self.gates);
        let mut report = StepReport::default();
        let mut keep = Vec::with_capacity(self.tracks.len());
        for mut track in std::mem::take(&mut self.tracks) {
            match association.tracks_with_clusters.get(&track.id) {
                Some(indices) => {
                    let members: Vec<&Cluster> = indices.iter().map(|&i| &clusters[i]).collect();
                    let rls = RlsConfig { rng_seed: rng::derive(rng_seed, track.id), ..self.rls };
                    let merged = merge_clusters(&members, &rls)?;
                    report.merge_fallbacks += merged.fallback as usize;
                    track = update(&track, &merged.measurement, &self.cfg);
                    track.last_update = t;
                    track.record_hit(&self.cfg);
                    keep.push(track);
                }
                None => {
                    if track.record_miss(&self.cfg) {
                        report.deleted.push(track.id);
                    } else {
                        keep.push(track);
                    }
                }
            }
        }
        self.tracks = keep;

        for &ci in &association.unassigned_clusters {
            let c = &clusters[ci];
            let Some((vx, vy)) = c.velocity_vector() else { continue };
            let track = Track::new(self.next_id, [c.centre.0, c.centre.1, vx, vy, self.cfg.init_l, self.cfg.init_w], &self.cfg, t);
            report.created.push(track.id);
            self.next_id += 1;
            self.tracks.push(track);
        }
        report.association = association;
        Ok(report)
    }
}
