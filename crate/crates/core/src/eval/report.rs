//! End-to-end runs against ground truth and their reports.

use super::stats::{error_stats, speed_errors, SpeedErrorStats};
use crate::config::PipelineConfig;
use crate::error::{Error, Result};
use crate::flow::FlowField;
use crate::pipeline::{FrameOutput, Pipeline, TrackReport};
use crate::simulator::{generate, Scenario, SimFrame, TargetTruth};
use crate::types::{OrientedBox, SensorMount};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

pub const REPORT_SCHEMA_VERSION: u32 = 1;
pub const ALGORITHMS: [&str; 4] = ["rls", "ols", "ransac", "cah"];

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RunOptions {
    /// Include wall-clock timings, which makes reports differ between runs.
    pub record_timing: bool,
    /// A cluster belongs to a target if its centre lies in the target box
    /// grown by this margin (m).
    pub cluster_margin: f64,
    /// Largest distance between a valid track and a target for a match (m).
    pub track_gate: f64,
}

impl Default for RunOptions {
    fn default() -> Self {
        Self { record_timing: false, cluster_margin: 1.5, track_gate: 5.0 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExtentSample {
    pub t: f64,
    pub target: u32,
    pub length: f64,
    pub width: f64,
    pub true_length: f64,
    pub true_width: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrackingSummary {
    pub pos_rmse: Option<f64>,
    pub matched_samples: usize,
    pub extents_series: Vec<ExtentSample>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimingSummary {
    pub velocity_ms: Vec<f64>,
    pub pipeline_ms: Vec<f64>,
    pub velocity_mean_ms: f64,
    pub pipeline_mean_ms: f64,
    pub pipeline_max_ms: f64,
}

impl TimingSummary {
    pub fn from_samples(velocity_ms: Vec<f64>, pipeline_ms: Vec<f64>) -> Self {
        let mean = |v: &[f64]| if v.is_empty() { 0.0 } else { v.iter().sum::<f64>() / v.len() as f64 };
        Self {
            velocity_mean_ms: mean(&velocity_ms),
            pipeline_mean_ms: mean(&pipeline_ms),
            pipeline_max_ms: pipeline_ms.iter().copied().fold(0.0, f64::max),
            velocity_ms,
            pipeline_ms,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub schema_version: u32,
    pub label: String,
    pub seed: u64,
    pub frames: usize,
    pub clusters: usize,
    pub degenerate_clusters: usize,
    pub degenerate_fraction: f64,
    pub merge_fallbacks: usize,
    pub algorithms: BTreeMap<String, Option<SpeedErrorStats>>,
    pub tracking: TrackingSummary,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub timing: Option<TimingSummary>,
    pub config: PipelineConfig,
}

impl RunReport {
    pub fn exceeds_degeneracy(&self) -> bool {
        self.degenerate_fraction > self.config.max_degenerate_fraction
    }

    pub fn to_json(&self) -> Result<String> {
        serde_json::to_string_pretty(self).map_err(|e| Error::Config(e.to_string()))
    }

    /// Flat table of the speed-error statistics.
    pub fn stats_csv(&self) -> String {
        let mut out = String::from("schema_version,algorithm,mean,median,variance,samples\n");
        for (name, s) in &self.algorithms {
            match s {
                Some(s) => out.push_str(&format!("{REPORT_SCHEMA_VERSION},{name},{},{},{},{}\n", s.mean, s.median, s.variance, s.samples)),
                None => out.push_str(&format!("{REPORT_SCHEMA_VERSION},{name},,,,0\n")),
            }
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterTrace {
    pub centre: (f64, f64),
    pub bbox: OrientedBox,
    pub n_points: usize,
    pub target: Option<u32>,
    pub true_velocity: Option<(f64, f64)>,
    pub rls: Option<(f64, f64)>,
    pub ols: Option<(f64, f64)>,
    pub ransac: Option<(f64, f64)>,
    pub cah: Option<(f64, f64)>,
    pub track: Option<u64>,
}

impl ClusterTrace {
    pub fn estimate(&self, algorithm: &str) -> Option<(f64, f64)> {
        match algorithm {
            "rls" => self.rls,
            "ols" => self.ols,
            "ransac" => self.ransac,
            "cah" => self.cah,
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename = "trace")]
pub struct FrameTrace {
    pub frame: u64,
    pub t: f64,
    pub n_points: usize,
    pub n_dynamic: usize,
    pub clusters: Vec<ClusterTrace>,
    pub tracks: Vec<TrackReport>,
    pub targets: Vec<TargetTruth>,
}

#[derive(Debug, Clone)]
pub struct RunOutput {
    pub report: RunReport,
    pub traces: Vec<FrameTrace>,
    pub outputs: Vec<FrameOutput>,
}

fn in_box(tg: &TargetTruth, p: (f64, f64), margin: f64) -> bool {
    let b = OrientedBox { centre: (tg.x, tg.y), length: tg.length, width: tg.width, yaw: tg.heading };
    b.contains(p, margin)
}

/// Target a cluster belongs to: the nearest one whose grown box holds the centre.
pub fn match_target(targets: &[TargetTruth], centre: (f64, f64), margin: f64) -> Option<&TargetTruth> {
    targets
        .iter()
        .filter(|tg| in_box(tg, centre, margin))
        .min_by(|a, b| {
            let da = (a.x - centre.0).hypot(a.y - centre.1);
            let db = (b.x - centre.0).hypot(b.y - centre.1);
            da.total_cmp(&db).then(a.id.cmp(&b.id))
        })
}

/// Nearest valid track to a target within `gate`.
pub fn match_track<'a>(tracks: &'a [TrackReport], tg: &TargetTruth, gate: f64) -> Option<&'a TrackReport> {
    tracks
        .iter()
        .filter(|t| t.status == crate::tracker::TrackStatus::Valid)
        .map(|t| (t, (t.x - tg.x).hypot(t.y - tg.y)))
        .filter(|&(_, d)| d <= gate)
        .min_by(|a, b| a.1.total_cmp(&b.1).then(a.0.id.cmp(&b.0.id)))
        .map(|(t, _)| t)
}

/// Runs the pipeline over recorded or simulated frames.
pub fn run_frames(
    frames: impl IntoIterator<Item = SimFrame>,
    label: &str,
    mounts: Vec<SensorMount>,
    cfg: &PipelineConfig,
    flow: FlowField,
    seed: u64,
    frame_period: f64,
    opts: &RunOptions,
) -> Result<RunOutput> {
    let mut pipeline = Pipeline::new(cfg.clone(), mounts, flow, seed)?;
    let mut traces = Vec::new();
    let mut outputs = Vec::new();
    // per algorithm and target: (t, v) estimate series; per target truth series
    let mut est: BTreeMap<(&str, u32), Vec<(f64, (f64, f64))>> = BTreeMap::new();
    let mut truth: BTreeMap<u32, Vec<(f64, (f64, f64))>> = BTreeMap::new();
    let mut sq_err = 0.0;
    let mut matched = 0usize;
    let mut extents = Vec::new();
    let (mut n_clusters, mut degenerate, mut fallbacks) = (0usize, 0usize, 0usize);
    let (mut vel_ms, mut pipe_ms) = (Vec::new(), Vec::new());

    for sim in frames {
        let out = pipeline.process(&sim.frame)?;
        if out.degenerate > 0 {
            log::warn!("frame {}: {} of {} clusters without a velocity estimate", out.frame_index, out.degenerate, out.clusters.len());
        }
        n_clusters += out.clusters.len();
        degenerate += out.degenerate;
        fallbacks += out.merge_fallbacks;
        vel_ms.push(out.timing.velocity_ms);
        pipe_ms.push(out.timing.pipeline_ms);

        for tg in &sim.targets {
            truth.entry(tg.id).or_default().push((out.t, (tg.vx, tg.vy)));
        }
        let mut cluster_traces = Vec::with_capacity(out.clusters.len());
        for c in &out.clusters {
            let tg = match_target(&sim.targets, c.centre, opts.cluster_margin);
            let trace = ClusterTrace {
                centre: c.centre,
                bbox: c.bbox,
                n_points: c.n_points,
                target: tg.map(|t| t.id),
                true_velocity: tg.map(|t| (t.vx, t.vy)),
                rls: c.rls.as_ref().map(|e| e.v),
                ols: c.ols,
                ransac: c.ransac,
                cah: c.cah,
                track: c.track,
            };
            if let Some(tg) = tg {
                for alg in ALGORITHMS {
                    if let Some(v) = trace.estimate(alg) {
                        est.entry((alg, tg.id)).or_default().push((out.t, v));
                    }
                }
            }
            cluster_traces.push(trace);
        }
        for tg in &sim.targets {
            if let Some(tr) = match_track(&out.tracks, tg, opts.track_gate) {
                sq_err += (tr.x - tg.x).powi(2) + (tr.y - tg.y).powi(2);
                matched += 1;
                extents.push(ExtentSample { t: out.t, target: tg.id, length: tr.length, width: tr.width, true_length: tg.length, true_width: tg.width });
            }
        }
        traces.push(FrameTrace {
            frame: out.frame_index,
            t: out.t,
            n_points: out.n_points,
            n_dynamic: out.n_dynamic,
            clusters: cluster_traces,
            tracks: out.tracks.clone(),
            targets: sim.targets.clone(),
        });
        outputs.push(out);
    }

    let mut algorithms = BTreeMap::new();
    for alg in ALGORITHMS {
        let mut errors = Vec::new();
        for (id, series) in &truth {
            if let Some(e) = est.get(&(alg, *id)) {
                errors.extend(speed_errors(e, series, frame_period));
            }
        }
        algorithms.insert(alg.to_string(), error_stats(&errors).ok());
    }
    let report = RunReport {
        schema_version: REPORT_SCHEMA_VERSION,
        label: label.to_string(),
        seed,
        frames: traces.len(),
        clusters: n_clusters,
        degenerate_clusters: degenerate,
        degenerate_fraction: if n_clusters == 0 { 0.0 } else { degenerate as f64 / n_clusters as f64 },
        merge_fallbacks: fallbacks,
        algorithms,
        tracking: TrackingSummary {
            pos_rmse: (matched > 0).then(|| (sq_err / matched as f64).sqrt()),
            matched_samples: matched,
            extents_series: extents,
        },
        timing: opts.record_timing.then(|| TimingSummary::from_samples(vel_ms, pipe_ms)),
        config: cfg.clone(),
    };
    Ok(RunOutput { report, traces, outputs })
}

/// Simulates `scenario` with `seed` and runs the pipeline on it.
pub fn run_scenario(scenario: &Scenario, cfg: &PipelineConfig, flow: FlowField, seed: u64, opts: &RunOptions) -> Result<RunOutput> {
    scenario.validate()?;
    let label = serde_json::to_value(scenario.label).ok().and_then(|v| v.as_str().map(str::to_string)).unwrap_or_default();
    run_frames(generate(scenario, seed), &label, scenario.mounts.clone(), cfg, flow, seed, scenario.sensor.period(), opts)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::simulator::scenario_b;

    #[test]
    fn matching_uses_grown_boxes() {
        let tg = TargetTruth { id: 3, x: 10.0, y: 0.0, heading: 0.0, vx: 1.0, vy: 0.0, omega: 0.0, length: 4.0, width: 2.0 };
        assert_eq!(match_target(&[tg], (12.5, 0.0), 1.0).map(|t| t.id), Some(3));
        assert!(match_target(&[tg], (13.5, 0.0), 1.0).is_none());
    }

    #[test]
    fn report_is_reproducible_and_csv_is_flat() {
        let mut sc = scenario_b();
        sc.duration = 3.0;
        let cfg = PipelineConfig::default();
        let a = run_scenario(&sc, &cfg, FlowField::undefined(), 11, &RunOptions::default()).unwrap();
        let b = run_scenario(&sc, &cfg, FlowField::undefined(), 11, &RunOptions::default()).unwrap();
        assert_eq!(a.report.to_json().unwrap(), b.report.to_json().unwrap());
        assert!(a.report.timing.is_none());
        let csv = a.report.stats_csv();
        assert_eq!(csv.lines().count(), 5);
        assert!(csv.lines().skip(1).all(|l| l.starts_with("1,")));
    }
}
