//! Static-point removal, multi-frame accumulation and motion-distortion
//! correction.

use crate::ego_comp::CompensatedPoint;
use crate::error::{Error, Result};
use std::collections::{BTreeMap, VecDeque};

/// Keeps the points whose compensated range rate magnitude is at least
/// `threshold`. Order is preserved.
pub fn remove_static(points: &[CompensatedPoint], threshold: f64) -> Vec<CompensatedPoint> {
    points.iter().filter(|p| p.range_rate_comp.abs() >= threshold).copied().collect()
}

/// A point tagged with the index of the frame it came from.
pub type TaggedPoint = (CompensatedPoint, u64);

/// Sliding window over the most recent frames.
#[derive(Debug, Clone)]
pub struct AccumulatedCloud {
    depth: usize,
    /// (frame index, frame time, points), oldest first.
    frames: VecDeque<(u64, f64, Vec<CompensatedPoint>)>,
}

impl AccumulatedCloud {
    pub fn new(depth: usize) -> Self {
        Self { depth: depth.max(1), frames: VecDeque::new() }
    }

    pub fn depth(&self) -> usize {
        self.depth
    }

    /// Frame indices currently held, oldest first.
    pub fn window(&self) -> Vec<u64> {
        self.frames.iter().map(|f| f.0).collect()
    }

    pub fn reference_time(&self) -> Option<f64> {
        self.frames.back().map(|f| f.1)
    }

    pub fn frame_times(&self) -> BTreeMap<u64, f64> {
        self.frames.iter().map(|f| (f.0, f.1)).collect()
    }

    pub fn len(&self) -> usize {
        self.frames.iter().map(|f| f.2.len()).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn points(&self) -> Vec<TaggedPoint> {
        self.frames
            .iter()
            .flat_map(|(idx, _, pts)| pts.iter().map(move |p| (*p, *idx)))
            .collect()
    }

    /// Pushes a frame, evicting the oldest once the window is full.
    pub fn accumulate(
        mut self,
        new_frame: Vec<CompensatedPoint>,
        frame_index: u64,
        timestamp: f64,
    ) -> Result<Self> {
        if let Some(&(last, _, _)) = self.frames.back() {
            if frame_index <= last {
                return Err(Error::NonMonotonicFrame { last, new: frame_index });
            }
        }
        self.frames.push_back((frame_index, timestamp, new_frame));
        while self.frames.len() > self.depth {
            self.frames.pop_front();
        }
        Ok(self)
    }
}

/// Moves every point from its frame time to `reference_time` along the
/// cluster velocity: a point taken at `t1` is shifted by `v * (t_ref - t1)`,
/// undoing the transformation `-v * (t_ref - t1)` the object went through.
pub fn correct_distortion(
    cluster_points: &[TaggedPoint],
    velocity: (f64, f64),
    frame_times: &BTreeMap<u64, f64>,
    reference_time: f64,
) -> Result<Vec<CompensatedPoint>> {
    cluster_points
        .iter()
        .map(|(p, idx)| {
            let t1 = *frame_times.get(idx).ok_or(Error::MissingFrameTime(*idx))?;
            let dt = reference_time - t1;
            let mut q = *p;
            q.base.x_w += velocity.0 * dt;
            q.base.y_w += velocity.1 * dt;
            Ok(q)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::types::RadarPoint;
    use proptest::prelude::*;

    fn cp(x: f64, y: f64, rr: f64) -> CompensatedPoint {
        CompensatedPoint {
            base: RadarPoint {
                x_w: x,
                y_w: y,
                range_rate_meas: rr,
                bearing_sensor: 0.0,
                timestamp: 0.0,
                sensor_id: 0,
            },
            range_rate_comp: rr,
            phi_w: 0.0,
        }
    }

    #[test]
    fn static_threshold_is_inclusive() {
        let pts: Vec<_> = [0.0, 0.49, 0.5, 2.0, -0.5, -0.3].iter().map(|&r| cp(0.0, 0.0, r)).collect();
        let kept: Vec<f64> = remove_static(&pts, 0.5).iter().map(|p| p.range_rate_comp).collect();
        assert_eq!(kept, vec![0.5, 2.0, -0.5]);
        assert!(remove_static(&[], 0.5).is_empty());
        let dynamic: Vec<_> = [1.0, -3.0].iter().map(|&r| cp(0.0, 0.0, r)).collect();
        assert_eq!(remove_static(&dynamic, 1e-12), dynamic);
    }

    #[test]
    fn window_is_a_ring_buffer() {
        let mut cloud = AccumulatedCloud::new(3);
        for i in 1..=4u64 {
            cloud = cloud.accumulate(vec![cp(i as f64, 0.0, 1.0); 2], i, i as f64 * 0.1).unwrap();
        }
        assert_eq!(cloud.window(), vec![2, 3, 4]);
        assert_eq!(cloud.len(), 6);
        assert!(cloud.points().iter().all(|(p, i)| p.base.x_w == *i as f64));
        assert_eq!(cloud.reference_time(), Some(0.4));
    }

    #[test]
    fn single_frame_window() {
        let cloud = AccumulatedCloud::new(3).accumulate(vec![cp(0.0, 0.0, 1.0); 3], 1, 0.0).unwrap();
        assert_eq!(cloud.window(), vec![1]);
        assert_eq!(cloud.points().len(), 3);
    }

    #[test]
    fn duplicate_frame_index_rejected() {
        let cloud = AccumulatedCloud::new(3).accumulate(vec![], 5, 0.0).unwrap();
        assert!(matches!(
            cloud.clone().accumulate(vec![], 5, 0.1),
            Err(Error::NonMonotonicFrame { last: 5, new: 5 })
        ));
        assert!(cloud.accumulate(vec![], 4, 0.1).is_err());
    }

    #[test]
    fn distortion_examples() {
        let times: BTreeMap<u64, f64> = [(0, 0.0), (1, 0.5)].into_iter().collect();
        let pts = vec![(cp(0.0, 0.0, 1.0), 0), (cp(1.0, 1.0, 1.0), 1)];
        let out = correct_distortion(&pts, (2.0, -1.0), &times, 0.5).unwrap();
        assert_eq!(out[0].position(), (1.0, -0.5));
        assert_eq!(out[1].position(), (1.0, 1.0));

        let out = correct_distortion(&pts, (0.0, 0.0), &times, 0.5).unwrap();
        assert_eq!(out[0].position(), (0.0, 0.0));

        // 14 m/s at 14 Hz: two frames old means two metres.
        let dt = 1.0 / 14.0;
        let times: BTreeMap<u64, f64> = [(0, 0.0), (2, 2.0 * dt)].into_iter().collect();
        let out = correct_distortion(&[(cp(0.0, 0.0, 1.0), 0)], (14.0, 0.0), &times, 2.0 * dt).unwrap();
        assert!((out[0].base.x_w - 2.0).abs() < 1e-12);
    }

    #[test]
    fn missing_frame_time_errors() {
        let times = BTreeMap::new();
        assert!(matches!(
            correct_distortion(&[(cp(0.0, 0.0, 1.0), 7)], (1.0, 0.0), &times, 0.0),
            Err(Error::MissingFrameTime(7))
        ));
    }

    proptest! {
        #[test]
        fn remove_static_idempotent(rrs in proptest::collection::vec(-3.0f64..3.0, 0..40), th in 0.01f64..2.0) {
            let pts: Vec<_> = rrs.iter().map(|&r| cp(0.0, 0.0, r)).collect();
            let once = remove_static(&pts, th);
            prop_assert_eq!(remove_static(&once, th), once);
        }

        #[test]
        fn accumulation_bounded(sizes in proptest::collection::vec(0usize..20, 1..12), depth in 1usize..5) {
            let mut cloud = AccumulatedCloud::new(depth);
            let max = sizes.iter().copied().max().unwrap_or(0);
            for (i, n) in sizes.iter().enumerate() {
                cloud = cloud.accumulate(vec![cp(0.0, 0.0, 1.0); *n], i as u64, i as f64).unwrap();
                prop_assert!(cloud.window().len() <= depth);
                prop_assert!(cloud.len() <= depth * max);
                let window = cloud.window();
                prop_assert!(cloud.points().iter().all(|(_, idx)| window.contains(idx)));
            }
        }
    }
}
