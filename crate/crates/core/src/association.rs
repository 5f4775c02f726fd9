//! One-to-many track/cluster association.
//!
//! Every cluster is handled on its own: the candidate tracks are those whose
//! predicted position and velocity both lie strictly inside the gates, and
//! the cluster goes to the candidate with the smallest summed innovation.
//! Several clusters may therefore land on the same track.

use crate::clustering::Cluster;
use crate::error::{Error, Result};
use crate::tracker::Track;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Innovation {
    /// Squared position difference (m^2).
    pub i_pos: f64,
    /// Squared velocity difference (m^2/s^2).
    pub i_vel: f64,
}

impl Innovation {
    pub fn total(&self) -> f64 {
        self.i_pos + self.i_vel
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Gates {
    pub gate_pos: f64,
    pub gate_vel: f64,
}

impl Default for Gates {
    fn default() -> Self {
        Self { gate_pos: 9.0, gate_vel: 9.0 }
    }
}

pub fn innovation_raw(track_pos: (f64, f64), track_vel: (f64, f64), pos: (f64, f64), vel: (f64, f64)) -> Innovation {
    Innovation {
        i_pos: (track_pos.0 - pos.0).powi(2) + (track_pos.1 - pos.1).powi(2),
        i_vel: (track_vel.0 - vel.0).powi(2) + (track_vel.1 - vel.1).powi(2),
    }
}

pub fn innovation(track: &Track, cluster: &Cluster) -> Result<Innovation> {
    let vel = cluster.velocity_vector().ok_or(Error::MissingVelocity)?;
    Ok(innovation_raw(track.position(), track.velocity(), cluster.centre, vel))
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct AssociationResult {
    /// Cluster index to track id.
    pub assignments: BTreeMap<usize, u64>,
    pub unassigned_clusters: Vec<usize>,
    /// Track id to the cluster indices it received, ascending.
    pub tracks_with_clusters: BTreeMap<u64, Vec<usize>>,
}

/// Associates clusters to predicted tracks. Clusters without a velocity
/// estimate cannot be gated and are reported as unassigned.
pub fn associate(tracks: &[Track], clusters: &[Cluster], gates: &Gates) -> AssociationResult {
    let mut result = AssociationResult::default();
    for (ci, cluster) in clusters.iter().enumerate() {
        match best_track(tracks, cluster, gates) {
            Some(id) => {
                result.assignments.insert(ci, id);
                result.tracks_with_clusters.entry(id).or_default().push(ci);
            }
            None => result.unassigned_clusters.push(ci),
        }
    }
    result
}

fn best_track(tracks: &[Track], cluster: &Cluster, gates: &Gates) -> Option<u64> {
    let mut best: Option<(f64, u64)> = None;
    for t in tracks {
        let Ok(inn) = innovation(t, cluster) else { return None };
        if !(inn.i_pos < gates.gate_pos && inn.i_vel < gates.gate_vel) {
            continue;
        }
        let total = inn.total();
        let better = match best {
            None => true,
            Some((b, id)) => total < b || (total == b && t.id < id),
        };
        if better {
            best = Some((total, t.id));
        }
    }
    best.map(|(_, id)| id)
}
