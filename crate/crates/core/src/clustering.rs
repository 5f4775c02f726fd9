//! Flow-aware DBSCAN and cluster geometry.
//!
//! Neighbourhoods are ellipses whose major axis follows the local traffic
//! flow, falling back to circles where the flow is undefined. Because the
//! flow can change between two points, the neighbour relation is made
//! symmetric by requiring each point to lie in the other's neighbourhood.
//!
//! Cluster position is the centre of the tightest rectangle, at a given yaw,
//! through the extreme points, not the centroid of the points.

use crate::ego_comp::CompensatedPoint;
use crate::error::{Error, Result};
use crate::flow::FlowField;
use crate::preprocess::TaggedPoint;
use crate::types::OrientedBox;
use crate::velocity::VelocityEstimate;
use serde::{Deserialize, Serialize};
use std::collections::HashMap;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DbscanParams {
    /// Half-length of the neighbourhood ellipse along the flow.
    pub semi_major: f64,
    /// Half-width across the flow.
    pub semi_minor: f64,
    /// Radius used where the flow is undefined.
    pub circle_radius: f64,
    /// Neighbourhood size (including the point itself) that makes a core point.
    pub min_pts: usize,
}

impl Default for DbscanParams {
    fn default() -> Self {
        Self { semi_major: 2.5, semi_minor: 1.0, circle_radius: 1.5, min_pts: 2 }
    }
}

impl DbscanParams {
    pub fn validate(&self) -> Result<()> {
        let ok = self.semi_minor > 0.0
            && self.semi_major >= self.semi_minor
            && self.circle_radius > 0.0
            && self.min_pts >= 1;
        if ok {
            Ok(())
        } else {
            Err(Error::Config(format!("invalid DBSCAN parameters {self:?}")))
        }
    }

    fn reach(&self) -> f64 {
        self.semi_major.max(self.circle_radius)
    }
}

/// A group of points with its geometry and, once estimated, its velocity.
#[derive(Debug, Clone, PartialEq)]
pub struct Cluster {
    pub points: Vec<TaggedPoint>,
    pub centre: (f64, f64),
    pub bbox: OrientedBox,
    pub velocity: Option<VelocityEstimate>,
    /// Finite-difference velocity from the cluster accumulation history.
    pub cah_seed: Option<(f64, f64)>,
}

impl Cluster {
    /// Builds a cluster and its bounding box at the given yaw.
    pub fn from_points(points: Vec<TaggedPoint>, yaw: f64) -> Result<Self> {
        let positions: Vec<(f64, f64)> = points.iter().map(|(p, _)| p.position()).collect();
        let bbox = extreme_points_bbox(&positions, yaw)?;
        Ok(Self { points, centre: bbox.centre, bbox, velocity: None, cah_seed: None })
    }

    /// Recomputes the bounding box at a new yaw.
    pub fn reorient(&mut self, yaw: f64) {
        let positions: Vec<(f64, f64)> = self.points.iter().map(|(p, _)| p.position()).collect();
        if let Ok(bbox) = extreme_points_bbox(&positions, yaw) {
            self.bbox = bbox;
            self.centre = bbox.centre;
        }
    }

    pub fn centroid(&self) -> (f64, f64) {
        centroid(self.points.iter().map(|(p, _)| p.position()))
    }

    pub fn velocity_vector(&self) -> Option<(f64, f64)> {
        self.velocity.as_ref().map(|v| v.v)
    }

    /// `(phi_w, range_rate_comp)` pairs for velocity estimation.
    pub fn doppler_samples(&self) -> Vec<(f64, f64)> {
        self.points.iter().map(|(p, _)| (p.phi_w, p.range_rate_comp)).collect()
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

pub fn centroid(points: impl IntoIterator<Item = (f64, f64)>) -> (f64, f64) {
    let (mut sx, mut sy, mut n) = (0.0, 0.0, 0usize);
    for (x, y) in points {
        sx += x;
        sy += y;
        n += 1;
    }
    if n == 0 {
        (0.0, 0.0)
    } else {
        (sx / n as f64, sy / n as f64)
    }
}

/// Tightest rectangle at yaw `orientation` whose edges pass through the
/// extreme points. Collinear input gives a zero-width box.
pub fn extreme_points_bbox(points: &[(f64, f64)], orientation: f64) -> Result<OrientedBox> {
    if points.is_empty() {
        return Err(Error::Empty("bounding box of no points"));
    }
    let (s, c) = orientation.sin_cos();
    let (mut umin, mut umax) = (f64::INFINITY, f64::NEG_INFINITY);
    let (mut vmin, mut vmax) = (f64::INFINITY, f64::NEG_INFINITY);
    for &(x, y) in points {
        let u = c * x + s * y;
        let v = -s * x + c * y;
        umin = umin.min(u);
        umax = umax.max(u);
        vmin = vmin.min(v);
        vmax = vmax.max(v);
    }
    let (uc, vc) = ((umin + umax) / 2.0, (vmin + vmax) / 2.0);
    Ok(OrientedBox {
        centre: (c * uc - s * vc, s * uc + c * vc),
        length: umax - umin,
        width: vmax - vmin,
        yaw: orientation,
    })
}

/// Geometric centre of the cluster's bounding box.
pub fn cluster_centre(cluster: &Cluster) -> (f64, f64) {
    cluster.bbox.centre
}

/// Orientation used for a fresh cluster: flow at the centroid, else the world x axis.
pub fn default_orientation(points: &[TaggedPoint], flow: &FlowField) -> f64 {
    let (cx, cy) = centroid(points.iter().map(|(p, _)| p.position()));
    flow.query(cx, cy).unwrap_or(0.0)
}

/// Output of [`dbscan`].
#[derive(Debug, Clone, Default)]
pub struct Clustering {
    pub clusters: Vec<Cluster>,
    pub noise: Vec<TaggedPoint>,
}

/// Per-point neighbourhood shape, precomputed.
#[derive(Clone, Copy)]
enum Shape {
    Ellipse { cos: f64, sin: f64, inv_a2: f64, inv_b2: f64 },
    Circle { r2: f64 },
}

impl Shape {
    fn contains(&self, dx: f64, dy: f64) -> bool {
        match *self {
            Shape::Ellipse { cos, sin, inv_a2, inv_b2 } => {
                let u = cos * dx + sin * dy;
                let v = -sin * dx + cos * dy;
                u * u * inv_a2 + v * v * inv_b2 <= 1.0
            }
            Shape::Circle { r2 } => dx * dx + dy * dy <= r2,
        }
    }
}

/// Index of points into square cells of side `cell`.
struct Grid {
    cell: f64,
    buckets: HashMap<(i64, i64), Vec<usize>>,
}

impl Grid {
    fn new(positions: &[(f64, f64)], cell: f64) -> Self {
        let mut buckets: HashMap<(i64, i64), Vec<usize>> = HashMap::new();
        for (i, &(x, y)) in positions.iter().enumerate() {
            buckets.entry(Self::key(x, y, cell)).or_default().push(i);
        }
        Self { cell, buckets }
    }

    fn key(x: f64, y: f64, cell: f64) -> (i64, i64) {
        ((x / cell).floor() as i64, (y / cell).floor() as i64)
    }

    fn candidates(&self, x: f64, y: f64) -> impl Iterator<Item = usize> + '_ {
        let (kx, ky) = Self::key(x, y, self.cell);
        (-1..=1)
            .flat_map(move |dx| (-1..=1).map(move |dy| (kx + dx, ky + dy)))
            .filter_map(|k| self.buckets.get(&k))
            .flatten()
            .copied()
    }
}

/// Symmetric neighbour lists (each list includes the point itself), sorted.
pub fn neighbourhoods(positions: &[(f64, f64)], params: &DbscanParams, flow: &FlowField) -> Vec<Vec<usize>> {
    let shapes: Vec<Shape> = positions
        .iter()
        .map(|&(x, y)| match flow.query(x, y) {
            Some(theta) => Shape::Ellipse {
                cos: theta.cos(),
                sin: theta.sin(),
                inv_a2: 1.0 / (params.semi_major * params.semi_major),
                inv_b2: 1.0 / (params.semi_minor * params.semi_minor),
            },
            None => Shape::Circle { r2: params.circle_radius * params.circle_radius },
        })
        .collect();
    let grid = Grid::new(positions, params.reach());
    positions
        .iter()
        .enumerate()
        .map(|(i, &(x, y))| {
            let mut nb: Vec<usize> = grid
                .candidates(x, y)
                .filter(|&j| {
                    let (dx, dy) = (positions[j].0 - x, positions[j].1 - y);
                    shapes[i].contains(dx, dy) && shapes[j].contains(-dx, -dy)
                })
                .collect();
            nb.sort_unstable();
            nb
        })
        .collect()
}

/// Cluster labels from DBSCAN: `Some(cluster)` or `None` for noise.
pub fn dbscan_labels(positions: &[(f64, f64)], params: &DbscanParams, flow: &FlowField) -> Vec<Option<usize>> {
    let nbs = neighbourhoods(positions, params, flow);
    let n = positions.len();
    let mut labels: Vec<Option<usize>> = vec![None; n];
    let mut visited = vec![false; n];
    let mut next = 0usize;
    for i in 0..n {
        if visited[i] {
            continue;
        }
        visited[i] = true;
        if nbs[i].len() < params.min_pts {
            continue;
        }
        let cluster = next;
        next += 1;
        labels[i] = Some(cluster);
        let mut queue: Vec<usize> = nbs[i].clone();
        let mut head = 0;
        while head < queue.len() {
            let j = queue[head];
            head += 1;
            if labels[j].is_none() {
                labels[j] = Some(cluster);
            }
            if visited[j] {
                continue;
            }
            visited[j] = true;
            if nbs[j].len() >= params.min_pts {
                queue.extend(nbs[j].iter().copied());
            }
        }
    }
    labels
}

/// Runs flow-aware DBSCAN and builds a [`Cluster`] for every group.
pub fn dbscan(points: &[TaggedPoint], params: &DbscanParams, flow: &FlowField) -> Result<Clustering> {
    params.validate()?;
    let positions: Vec<(f64, f64)> = points.iter().map(|(p, _)| p.position()).collect();
    let labels = dbscan_labels(&positions, params, flow);
    let count = labels.iter().flatten().max().map_or(0, |m| m + 1);
    let mut groups: Vec<Vec<TaggedPoint>> = vec![Vec::new(); count];
    let mut noise = Vec::new();
    for (p, label) in points.iter().zip(&labels) {
        match label {
            Some(c) => groups[*c].push(*p),
            None => noise.push(*p),
        }
    }
    let clusters = groups
        .into_iter()
        .map(|g| {
            let yaw = default_orientation(&g, flow);
            Cluster::from_points(g, yaw)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(Clustering { clusters, noise })
}

/// Convenience for tests and fixtures: tags untagged points with frame 0.
pub fn tag(points: &[CompensatedPoint]) -> Vec<TaggedPoint> {
    points.iter().map(|p| (*p, 0)).collect()
}
