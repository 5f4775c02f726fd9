//! Per-frame processing chain: compensation, static filtering,
//! accumulation, clustering, velocity estimation, distortion correction and
//! tracking.

use crate::clustering::{dbscan, Cluster};
use crate::config::PipelineConfig;
use crate::ego_comp::compensate_all;
use crate::error::Result;
use crate::flow::FlowField;
use crate::preprocess::{correct_distortion, remove_static, AccumulatedCloud};
use crate::rng;
use crate::tracker::{heading_of, Track, TrackStatus, Tracker};
use crate::types::{Frame, OrientedBox, SensorMount};
use crate::velocity::{
    cah_seed, estimate_velocity, match_previous, ols_baseline, ransac_ols_baseline, RlsConfig, VelocityEstimate,
};
use serde::{Deserialize, Serialize};
use std::time::Instant;

/// Everything known about one cluster after the velocity stage.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterReport {
    pub centre: (f64, f64),
    pub bbox: OrientedBox,
    pub n_points: usize,
    pub rls: Option<VelocityEstimate>,
    pub ols: Option<(f64, f64)>,
    pub ransac: Option<(f64, f64)>,
    pub cah: Option<(f64, f64)>,
    /// Track the cluster was associated to, if any.
    pub track: Option<u64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrackReport {
    pub id: u64,
    pub status: TrackStatus,
    pub x: f64,
    pub y: f64,
    pub vx: f64,
    pub vy: f64,
    pub length: f64,
    pub width: f64,
    pub misses: u32,
}

impl From<&Track> for TrackReport {
    fn from(t: &Track) -> Self {
        Self {
            id: t.id,
            status: t.status,
            x: t.state[0],
            y: t.state[1],
            vx: t.state[2],
            vy: t.state[3],
            length: t.state[4],
            width: t.state[5],
            misses: t.misses,
        }
    }
}

/// Wall-clock time spent on one frame (ms).
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct StageTiming {
    /// RLS estimation over all clusters.
    pub velocity_ms: f64,
    pub pipeline_ms: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrameOutput {
    pub frame_index: u64,
    pub t: f64,
    pub n_points: usize,
    pub n_dynamic: usize,
    pub clusters: Vec<ClusterReport>,
    /// Every live track, valid or not.
    pub tracks: Vec<TrackReport>,
    /// Clusters for which no velocity could be estimated.
    pub degenerate: usize,
    pub merge_fallbacks: usize,
    #[serde(skip)]
    pub timing: StageTiming,
}

impl FrameOutput {
    pub fn valid_tracks(&self) -> impl Iterator<Item = &TrackReport> {
        self.tracks.iter().filter(|t| t.status == TrackStatus::Valid)
    }
}

pub struct Pipeline {
    cfg: PipelineConfig,
    mounts: Vec<SensorMount>,
    flow: FlowField,
    seed: u64,
    cloud: AccumulatedCloud,
    tracker: Tracker,
    previous: Option<(f64, Vec<(f64, f64)>)>,
}

impl Pipeline {
    pub fn new(cfg: PipelineConfig, mounts: Vec<SensorMount>, flow: FlowField, seed: u64) -> Result<Self> {
        cfg.validate()?;
        Ok(Self {
            cloud: AccumulatedCloud::new(cfg.accumulation_depth),
            tracker: Tracker::new(cfg.tracker, cfg.gates, cfg.rls),
            cfg,
            mounts,
            flow,
            seed,
            previous: None,
        })
    }

    pub fn config(&self) -> &PipelineConfig {
        &self.cfg
    }

    pub fn tracker(&self) -> &Tracker {
        &self.tracker
    }

    /// Runs compensation through clustering and velocity estimation, leaving
    /// the tracker untouched. Also returns the number of dynamic points.
    pub fn clusters(&mut self, frame: &Frame) -> Result<(Vec<Cluster>, Vec<ClusterReport>, usize, StageTiming)> {
        let start = Instant::now();
        let compensated = compensate_all(&frame.points, &frame.ego, &self.mounts)?;
        let dynamic = remove_static(&compensated, self.cfg.static_threshold);
        let n_dynamic = dynamic.len();
        let cloud = std::mem::replace(&mut self.cloud, AccumulatedCloud::new(self.cfg.accumulation_depth));
        self.cloud = cloud.accumulate(dynamic, frame.frame_index, frame.timestamp)?;
        let frame_times = self.cloud.frame_times();
        let mut clusters = dbscan(&self.cloud.points(), &self.cfg.dbscan, &self.flow)?.clusters;

        let frame_seed = rng::derive(self.seed, frame.frame_index);
        let raw_centres: Vec<(f64, f64)> = clusters.iter().map(|c| c.centre).collect();
        let mut reports = Vec::with_capacity(clusters.len());
        let mut velocity_time = 0.0;
        for (ci, cluster) in clusters.iter_mut().enumerate() {
            let cah = self.previous.as_ref().and_then(|(t_prev, prev)| {
                let j = match_previous(cluster.centre, prev, self.cfg.cah_gate)?;
                cah_seed(cluster.centre, prev[j], frame.timestamp, *t_prev).ok()
            });
            cluster.cah_seed = cah;
            let samples = cluster.doppler_samples();
            let cluster_seed = rng::derive(frame_seed, ci as u64);
            let rls_cfg = RlsConfig { rng_seed: cluster_seed, ..self.cfg.rls };

            let t0 = Instant::now();
            let rls = estimate_velocity(&samples, cah.unwrap_or((0.0, 0.0)), &rls_cfg).ok();
            velocity_time += t0.elapsed().as_secs_f64() * 1e3;

            let (ols, ransac) = if self.cfg.baselines {
                (ols_baseline(&samples).ok(), ransac_ols_baseline(&samples, &self.cfg.ransac, rng::derive(cluster_seed, 1)).ok())
            } else {
                (None, None)
            };

            if let Some(est) = &rls {
                if self.cfg.distortion_correction {
                    let corrected = correct_distortion(&cluster.points, est.v, &frame_times, frame.timestamp)?;
                    for (slot, p) in cluster.points.iter_mut().zip(corrected) {
                        slot.0 = p;
                    }
                }
                let yaw = if est.speed() >= self.cfg.min_heading_speed { heading_of(est.v, cluster.bbox.yaw) } else { cluster.bbox.yaw };
                cluster.reorient(yaw);
            }
            cluster.velocity = rls.clone();
            reports.push(ClusterReport {
                centre: cluster.centre,
                bbox: cluster.bbox,
                n_points: cluster.len(),
                rls,
                ols,
                ransac,
                cah,
                track: None,
            });
        }
        self.previous = Some((frame.timestamp, raw_centres));
        let timing = StageTiming { velocity_ms: velocity_time, pipeline_ms: start.elapsed().as_secs_f64() * 1e3 };
        Ok((clusters, reports, n_dynamic, timing))
    }

    /// Processes one frame end to end.
    pub fn process(&mut self, frame: &Frame) -> Result<FrameOutput> {
        let start = Instant::now();
        let (clusters, mut reports, n_dynamic, timing) = self.clusters(frame)?;
        let frame_seed = rng::derive(self.seed, frame.frame_index);
        let step = self.tracker.step(&clusters, frame.timestamp, rng::derive(frame_seed, u64::MAX))?;
        for (ci, id) in &step.association.assignments {
            reports[*ci].track = Some(*id);
        }
        let degenerate = reports.iter().filter(|r| r.rls.is_none()).count();
        Ok(FrameOutput {
            frame_index: frame.frame_index,
            t: frame.timestamp,
            n_points: frame.points.len(),
            n_dynamic,
            clusters: reports,
            tracks: self.tracker.tracks().iter().map(TrackReport::from).collect(),
            degenerate,
            merge_fallbacks: step.merge_fallbacks,
            timing: StageTiming { velocity_ms: timing.velocity_ms, pipeline_ms: start.elapsed().as_secs_f64() * 1e3 },
        })
    }
}
