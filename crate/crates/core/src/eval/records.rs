//! Line-delimited frame records: one JSON object per line.
//!
//! A stream starts with a `header` record, followed for every frame by one
//! `ego` record, its `point` records and one `truth` record per target.

use crate::error::{Error, Result};
use crate::simulator::{PointLabel, SimFrame, TargetTruth};
use crate::types::{EgoState, Frame, RadarPoint, SensorMount};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::io::{BufRead, Write};

pub const FRAME_SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum Record {
    Header {
        schema_version: u32,
        label: String,
        seed: u64,
        frame_rate: f64,
        mounts: Vec<SensorMount>,
    },
    Ego {
        frame: u64,
        t: f64,
        x: f64,
        y: f64,
        alpha: f64,
        vx: f64,
        vy: f64,
        omega: f64,
    },
    Point {
        frame: u64,
        t: f64,
        x: f64,
        y: f64,
        range_rate: f64,
        bearing: f64,
        sensor: u32,
        target: Option<u32>,
        outlier_offset: f64,
        true_vx: f64,
        true_vy: f64,
    },
    Truth {
        frame: u64,
        t: f64,
        #[serde(flatten)]
        target: TargetTruth,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Recording {
    pub label: String,
    pub seed: u64,
    pub frame_rate: f64,
    pub mounts: Vec<SensorMount>,
    pub frames: Vec<SimFrame>,
}

pub fn frame_records(sim: &SimFrame) -> Vec<Record> {
    let f = &sim.frame;
    let e = &f.ego;
    let mut out = vec![Record::Ego { frame: f.frame_index, t: f.timestamp, x: e.x_e, y: e.y_e, alpha: e.alpha, vx: e.vx_e, vy: e.vy_e, omega: e.omega_e }];
    for (p, l) in f.points.iter().zip(&sim.labels) {
        out.push(Record::Point {
            frame: f.frame_index,
            t: p.timestamp,
            x: p.x_w,
            y: p.y_w,
            range_rate: p.range_rate_meas,
            bearing: p.bearing_sensor,
            sensor: p.sensor_id,
            target: l.target,
            outlier_offset: l.outlier_offset,
            true_vx: l.velocity.0,
            true_vy: l.velocity.1,
        });
    }
    out.extend(sim.targets.iter().map(|tg| Record::Truth { frame: f.frame_index, t: f.timestamp, target: *tg }));
    out
}

pub fn write_recording<W: Write>(mut w: W, rec: &Recording) -> Result<()> {
    let header = Record::Header {
        schema_version: FRAME_SCHEMA_VERSION,
        label: rec.label.clone(),
        seed: rec.seed,
        frame_rate: rec.frame_rate,
        mounts: rec.mounts.clone(),
    };
    let mut line = |r: &Record| -> Result<()> {
        serde_json::to_writer(&mut w, r).map_err(|e| Error::Config(e.to_string()))?;
        w.write_all(b"\n")?;
        Ok(())
    };
    line(&header)?;
    for f in &rec.frames {
        for r in frame_records(f) {
            line(&r)?;
        }
    }
    Ok(())
}

#[derive(Default)]
struct Partial {
    t: f64,
    ego: Option<EgoState>,
    points: Vec<RadarPoint>,
    labels: Vec<PointLabel>,
    targets: Vec<TargetTruth>,
}

pub fn read_recording<R: BufRead>(r: R) -> Result<Recording> {
    let mut header = None;
    let mut frames: BTreeMap<u64, Partial> = BTreeMap::new();
    for (n, line) in r.lines().enumerate() {
        let line = line?;
        let lineno = n + 1;
        if line.trim().is_empty() {
            continue;
        }
        let rec: Record = serde_json::from_str(&line).map_err(|e| Error::Parse { line: lineno, msg: e.to_string() })?;
        match rec {
            Record::Header { schema_version, label, seed, frame_rate, mounts } => {
                if schema_version != FRAME_SCHEMA_VERSION {
                    return Err(Error::Parse { line: lineno, msg: format!("unsupported schema version {schema_version}") });
                }
                if header.is_some() {
                    return Err(Error::Parse { line: lineno, msg: "second header record".into() });
                }
                header = Some((label, seed, frame_rate, mounts));
            }
            Record::Ego { frame, t, x, y, alpha, vx, vy, omega } => {
                let p = frames.entry(frame).or_default();
                if p.ego.is_some() {
                    return Err(Error::Parse { line: lineno, msg: format!("duplicate ego record for frame {frame}") });
                }
                p.t = t;
                p.ego = Some(EgoState { x_e: x, y_e: y, alpha, vx_e: vx, vy_e: vy, omega_e: omega, timestamp: t });
            }
            Record::Point { frame, t, x, y, range_rate, bearing, sensor, target, outlier_offset, true_vx, true_vy } => {
                let p = frames.entry(frame).or_default();
                p.points.push(RadarPoint { x_w: x, y_w: y, range_rate_meas: range_rate, bearing_sensor: bearing, timestamp: t, sensor_id: sensor });
                p.labels.push(PointLabel { target, outlier_offset, velocity: (true_vx, true_vy) });
            }
            Record::Truth { frame, target, .. } => frames.entry(frame).or_default().targets.push(target),
        }
        if header.is_none() {
            return Err(Error::Parse { line: lineno, msg: "stream must start with a header record".into() });
        }
    }
    let (label, seed, frame_rate, mounts) = header.ok_or(Error::Empty("frame stream"))?;
    let frames = frames
        .into_iter()
        .map(|(idx, p)| {
            let ego = p.ego.ok_or_else(|| Error::Config(format!("frame {idx} has no ego record")))?;
            Ok(SimFrame {
                frame: Frame { points: p.points, ego, timestamp: p.t, frame_index: idx },
                labels: p.labels,
                targets: p.targets,
                ego_truth: ego,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(Recording { label, seed, frame_rate, mounts, frames })
}
