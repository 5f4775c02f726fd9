//! Extended-object tracking from automotive radar point clouds.
//!
//! Each frame is ego-motion compensated, stripped of static returns,
//! accumulated over a short window and clustered with a flow-aware DBSCAN.
//! Every cluster gets an instantaneous velocity from a bank of recursive
//! least-squares filters fitted to the Doppler measurements, which in turn
//! drives distortion correction, bounding-box orientation and the tracker.

pub mod association;
pub mod clustering;
pub mod config;
pub mod ego_comp;
pub mod error;
pub mod eval;
pub mod flow;
pub mod pipeline;
pub mod preprocess;
pub mod rng;
pub mod simulator;
pub mod tracker;
pub mod types;
pub mod velocity;

pub use error::{Error, Result};
