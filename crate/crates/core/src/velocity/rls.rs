use super::DopplerSample;
use crate::error::{Error, Result};
use crate::rng;
use nalgebra::{Matrix2, Vector2};
use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RlsConfig {
    /// Largest change of either velocity component an inlier may cause (m/s).
    pub outlier_delta_threshold: f64,
    /// Accepted updates before outlier checks start.
    pub warmup_updates: usize,
    /// Number of independently ordered filters per cluster.
    pub num_filters: usize,
    /// Initial gain matrix is `p0_scale * I`.
    pub p0_scale: f64,
    pub rng_seed: u64,
}

impl Default for RlsConfig {
    fn default() -> Self {
        Self { outlier_delta_threshold: 0.4, warmup_updates: 3, num_filters: 10, p0_scale: 1.0, rng_seed: 0 }
    }
}

impl RlsConfig {
    pub fn validate(&self) -> Result<()> {
        if self.outlier_delta_threshold > 0.0 && self.num_filters > 0 && self.p0_scale > 0.0 {
            Ok(())
        } else {
            Err(Error::Config(format!("invalid RLS configuration {self:?}")))
        }
    }
}

/// State of one recursive-least-squares filter.
#[derive(Debug, Clone, PartialEq)]
pub struct RlsFilter {
    pub v: Vector2<f64>,
    pub p: Matrix2<f64>,
    pub update_count: usize,
    /// Indices of points whose update was committed.
    pub inliers: Vec<usize>,
    /// Indices of points rejected as outliers.
    pub rejected: Vec<usize>,
}

impl RlsFilter {
    pub fn new(v0: (f64, f64), p0_scale: f64) -> Self {
        Self {
            v: Vector2::new(v0.0, v0.1),
            p: Matrix2::identity() * p0_scale,
            update_count: 0,
            inliers: Vec::new(),
            rejected: Vec::new(),
        }
    }

    /// Proposed `(v, P)` after absorbing one sample, without committing it.
    fn propose(&self, phi: &Vector2<f64>, r_dot: f64) -> (Vector2<f64>, Matrix2<f64>) {
        let p_phi = self.p * phi;
        let denom = 1.0 + phi.dot(&p_phi);
        let gain = p_phi / denom;
        let v = self.v + gain * (r_dot - phi.dot(&self.v));
        let p = self.p - p_phi * p_phi.transpose() / denom;
        (v, (p + p.transpose()) * 0.5)
    }

    /// Unconditionally absorbs a sample.
    pub fn update(&mut self, phi_w: f64, r_dot: f64) {
        let (s, c) = phi_w.sin_cos();
        let (v, p) = self.propose(&Vector2::new(c, s), r_dot);
        self.v = v;
        self.p = p;
        self.update_count += 1;
    }

    pub fn velocity(&self) -> (f64, f64) {
        (self.v.x, self.v.y)
    }

    /// Ratio of the extreme eigenvalues of `P`. Large values flag a velocity
    /// component the data barely constrains (e.g. all bearings equal).
    pub fn condition_number(&self) -> f64 {
        let eig = self.p.symmetric_eigenvalues();
        let (lo, hi) = (eig.min(), eig.max());
        if lo <= 0.0 {
            f64::INFINITY
        } else {
            hi / lo
        }
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.p.symmetric_eigenvalues().min()
    }
}

/// One standard RLS step with unit forgetting, returning the new filter.
pub fn rls_update(f: &RlsFilter, phi_w: f64, r_dot: f64) -> RlsFilter {
    let mut out = f.clone();
    out.update(phi_w, r_dot);
    out
}

struct Sample {
    phi: Vector2<f64>,
    r_dot: f64,
}

fn regressors(points: &[DopplerSample]) -> Vec<Sample> {
    points
        .iter()
        .map(|&(phi_w, r_dot)| {
            let (s, c) = phi_w.sin_cos();
            Sample { phi: Vector2::new(c, s), r_dot }
        })
        .collect()
}

fn run_on(samples: &[Sample], order: &[usize], seed_v0: (f64, f64), cfg: &RlsConfig) -> RlsFilter {
    let mut f = RlsFilter::new(seed_v0, cfg.p0_scale);
    for &i in order {
        let s = &samples[i];
        let (v, p) = f.propose(&s.phi, s.r_dot);
        if f.update_count >= cfg.warmup_updates {
            let dv = v - f.v;
            if dv.x.abs() > cfg.outlier_delta_threshold || dv.y.abs() > cfg.outlier_delta_threshold {
                f.rejected.push(i);
                continue;
            }
        }
        f.v = v;
        f.p = p;
        f.update_count += 1;
        f.inliers.push(i);
    }
    f
}

/// Feeds `points` in `order` through one filter with outlier rejection.
pub fn run_filter(
    points: &[DopplerSample],
    order: &[usize],
    seed_v0: (f64, f64),
    cfg: &RlsConfig,
) -> Result<RlsFilter> {
    if points.len() < 2 {
        return Err(Error::NotEnoughPoints { needed: 2, got: points.len() });
    }
    if order.iter().any(|&i| i >= points.len()) {
        return Err(Error::Config("order refers to a missing point".into()));
    }
    Ok(run_on(&regressors(points), order, seed_v0, cfg))
}

/// Mean absolute difference between predicted and measured range rate over
/// the filter's inliers.
pub fn reprojection_error(f: &RlsFilter, points: &[DopplerSample]) -> Result<f64> {
    if f.inliers.is_empty() {
        return Err(Error::Empty("filter has no inliers"));
    }
    let (vx, vy) = f.velocity();
    let sum: f64 = f
        .inliers
        .iter()
        .map(|&i| {
            let (phi, r) = points[i];
            (vx * phi.cos() + vy * phi.sin() - r).abs()
        })
        .sum();
    Ok(sum / f.inliers.len() as f64)
}

/// Best filter of a multi-start run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VelocityEstimate {
    pub v: (f64, f64),
    pub reprojection_error: f64,
    pub inlier_count: usize,
    pub filter_index: usize,
    pub seed: (f64, f64),
    /// Condition number of the winner's gain matrix.
    pub p_condition: f64,
    pub inliers: Vec<usize>,
}

impl VelocityEstimate {
    pub fn speed(&self) -> f64 {
        self.v.0.hypot(self.v.1)
    }
}

/// Runs `cfg.num_filters` filters, each over its own seeded permutation.
/// Filter `k` draws from stream `k` of `cfg.rng_seed`, so the result does not
/// depend on the order the filters are evaluated in.
pub fn run_all_filters(points: &[DopplerSample], seed_v0: (f64, f64), cfg: &RlsConfig) -> Result<Vec<RlsFilter>> {
    if points.len() < 2 {
        return Err(Error::NotEnoughPoints { needed: 2, got: points.len() });
    }
    let samples = regressors(points);
    Ok((0..cfg.num_filters)
        .map(|k| {
            let mut order: Vec<usize> = (0..points.len()).collect();
            order.shuffle(&mut rng::stream(cfg.rng_seed, k as u64));
            run_on(&samples, &order, seed_v0, cfg)
        })
        .collect())
}

/// Picks the filter with the least mean reprojection error; ties go to the
/// larger inlier set, then the lower index. Filters with fewer than two
/// inliers are not eligible.
pub fn select_winner(filters: &[RlsFilter], points: &[DopplerSample]) -> Option<(usize, f64)> {
    let mut best: Option<(usize, f64, usize)> = None;
    for (k, f) in filters.iter().enumerate() {
        if f.inliers.len() < 2 {
            continue;
        }
        let Ok(err) = reprojection_error(f, points) else { continue };
        if !err.is_finite() {
            continue;
        }
        let better = match best {
            None => true,
            Some((_, e, n)) => err < e || (err == e && f.inliers.len() > n),
        };
        if better {
            best = Some((k, err, f.inliers.len()));
        }
    }
    best.map(|(k, e, _)| (k, e))
}

pub fn estimate_velocity(points: &[DopplerSample], seed_v0: (f64, f64), cfg: &RlsConfig) -> Result<VelocityEstimate> {
    let filters = run_all_filters(points, seed_v0, cfg)?;
    let (k, err) = select_winner(&filters, points)
        .ok_or_else(|| Error::Degenerate("every filter ended with fewer than two inliers".into()))?;
    let f = &filters[k];
    Ok(VelocityEstimate {
        v: f.velocity(),
        reprojection_error: err,
        inlier_count: f.inliers.len(),
        filter_index: k,
        seed: seed_v0,
        p_condition: f.condition_number(),
        inliers: f.inliers.clone(),
    })
}
