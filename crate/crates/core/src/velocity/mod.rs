//! Instantaneous cluster velocity from Doppler range rates.
//!
//! For a rigid target every reflection satisfies
//! `r_dot = vx cos(phi_w) + vy sin(phi_w)`. The estimator runs several
//! recursive-least-squares filters over random orderings of the cluster's
//! points, each seeded with a prior velocity. After a short warm-up, a point
//! whose update would move either velocity component by more than a threshold
//! is treated as an outlier and its update is discarded. The filter with the
//! lowest mean reprojection error over its inliers wins.

mod baselines;
mod cah;
mod rls;

pub use baselines::{ols_baseline, ransac_ols_baseline, RansacConfig};
pub use cah::{cah_seed, match_previous};
pub use rls::{
    estimate_velocity, reprojection_error, rls_update, run_all_filters, run_filter, select_winner,
    RlsConfig, RlsFilter, VelocityEstimate,
};

/// A Doppler sample: world bearing and compensated range rate.
pub type DopplerSample = (f64, f64);
