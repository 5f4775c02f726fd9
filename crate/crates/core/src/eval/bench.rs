//! Per-frame runtime over growing numbers of objects.

use crate::config::PipelineConfig;
use crate::error::Result;
use crate::flow::FlowField;
use crate::pipeline::Pipeline;
use crate::simulator::{generate, traffic, SimFrame};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BenchRow {
    pub objects: usize,
    pub frames: usize,
    pub clusters_mean: f64,
    pub pipeline_mean_ms: f64,
    pub pipeline_max_ms: f64,
    pub pipeline_var_ms2: f64,
    pub velocity_mean_ms: f64,
    pub velocity_max_ms: f64,
}

fn mean_var_max(v: &[f64]) -> (f64, f64, f64) {
    let n = v.len().max(1) as f64;
    let mean = v.iter().sum::<f64>() / n;
    let var = v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n;
    (mean, var, v.iter().copied().fold(0.0, f64::max))
}

/// Times `frames` frames of the multi-lane traffic scene for each object count.
/// Frames are simulated up front so only the pipeline is timed.
pub fn bench(cfg: &PipelineConfig, counts: &[usize], frames: usize, seed: u64) -> Result<Vec<BenchRow>> {
    counts
        .iter()
        .map(|&n| {
            let mut scenario = traffic(n, 0.0);
            scenario.duration = (frames.max(1) - 1) as f64 / scenario.sensor.frame_rate;
            let sim: Vec<SimFrame> = generate(&scenario, seed).collect();
            let mut pipeline = Pipeline::new(cfg.clone(), scenario.mounts.clone(), FlowField::undefined(), seed)?;
            let (mut pipe, mut vel, mut clusters) = (Vec::new(), Vec::new(), 0usize);
            for f in &sim {
                let out = pipeline.process(&f.frame)?;
                pipe.push(out.timing.pipeline_ms);
                vel.push(out.timing.velocity_ms);
                clusters += out.clusters.len();
            }
            let (pm, pv, px) = mean_var_max(&pipe);
            let (vm, _, vx) = mean_var_max(&vel);
            Ok(BenchRow {
                objects: n,
                frames: sim.len(),
                clusters_mean: clusters as f64 / sim.len().max(1) as f64,
                pipeline_mean_ms: pm,
                pipeline_max_ms: px,
                pipeline_var_ms2: pv,
                velocity_mean_ms: vm,
                velocity_max_ms: vx,
            })
        })
        .collect()
}

pub fn bench_csv(rows: &[BenchRow]) -> String {
    let mut out = String::from(
        "schema_version,objects,frames,clusters_mean,pipeline_mean_ms,pipeline_max_ms,pipeline_var_ms2,velocity_mean_ms,velocity_max_ms\n",
    );
    for r in rows {
        out.push_str(&format!(
            "{},{},{},{:.3},{:.4},{:.4},{:.6},{:.4},{:.4}\n",
            super::REPORT_SCHEMA_VERSION,
            r.objects,
            r.frames,
            r.clusters_mean,
            r.pipeline_mean_ms,
            r.pipeline_max_ms,
            r.pipeline_var_ms2,
            r.velocity_mean_ms,
            r.velocity_max_ms
        ));
    }
    out
}
