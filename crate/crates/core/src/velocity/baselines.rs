//! Reference estimators for comparison: plain least squares and
//! RANSAC followed by least squares on the consensus set.

use super::DopplerSample;
use crate::error::{Error, Result};
use crate::rng;
use rand::Rng;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RansacConfig {
    pub iters: usize,
    /// Residual bound `|r_dot - phi^T v|` for consensus membership (m/s).
    pub inlier_tol: f64,
}

impl Default for RansacConfig {
    fn default() -> Self {
        Self { iters: 50, inlier_tol: 0.3 }
    }
}

/// Normal-equation solve. Rejects near rank-deficient regressors.
pub fn ols_baseline(points: &[DopplerSample]) -> Result<(f64, f64)> {
    if points.len() < 2 {
        return Err(Error::NotEnoughPoints { needed: 2, got: points.len() });
    }
    let (mut a, mut b, mut d, mut y0, mut y1) = (0.0, 0.0, 0.0, 0.0, 0.0);
    for &(phi, r) in points {
        let (s, c) = phi.sin_cos();
        a += c * c;
        b += c * s;
        d += s * s;
        y0 += c * r;
        y1 += s * r;
    }
    let det = a * d - b * b;
    // a + d = n, so this is a relative test on the smaller eigenvalue.
    if det <= 1e-10 * (a + d) * (a + d) {
        return Err(Error::Degenerate("regressor matrix is rank deficient".into()));
    }
    Ok(((d * y0 - b * y1) / det, (a * y1 - b * y0) / det))
}

/// Exact solution through two samples, if their bearings differ.
fn solve_pair(p: DopplerSample, q: DopplerSample) -> Option<(f64, f64)> {
    let (s1, c1) = p.0.sin_cos();
    let (s2, c2) = q.0.sin_cos();
    let det = c1 * s2 - s1 * c2;
    if det.abs() < 1e-6 {
        return None;
    }
    Some(((p.1 * s2 - q.1 * s1) / det, (c1 * q.1 - c2 * p.1) / det))
}

fn residual(v: (f64, f64), p: DopplerSample) -> f64 {
    (p.1 - v.0 * p.0.cos() - v.1 * p.0.sin()).abs()
}

/// Two-point RANSAC on the Doppler model, refit by OLS on the largest
/// consensus set (first found wins ties).
pub fn ransac_ols_baseline(points: &[DopplerSample], cfg: &RansacConfig, rng_seed: u64) -> Result<(f64, f64)> {
    let n = points.len();
    if n < 2 {
        return Err(Error::NotEnoughPoints { needed: 2, got: n });
    }
    let mut rng = rng::stream(rng_seed, 0);
    let mut best: Option<Vec<usize>> = None;
    for _ in 0..cfg.iters {
        let i = rng.random_range(0..n);
        let mut j = rng.random_range(0..n - 1);
        if j >= i {
            j += 1;
        }
        let Some(v) = solve_pair(points[i], points[j]) else { continue };
        let consensus: Vec<usize> = (0..n).filter(|&k| residual(v, points[k]) <= cfg.inlier_tol).collect();
        if best.as_ref().is_none_or(|b| consensus.len() > b.len()) {
            best = Some(consensus);
        }
    }
    let best = best.ok_or_else(|| Error::Degenerate("no invertible two-point sample".into()))?;
    let subset: Vec<DopplerSample> = best.iter().map(|&k| points[k]).collect();
    ols_baseline(&subset)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::velocity::{estimate_velocity, RlsConfig};
    use std::f64::consts::FRAC_PI_2;

    fn exact(v: (f64, f64), bearings: &[f64]) -> Vec<DopplerSample> {
        bearings.iter().map(|&b| (b, v.0 * b.cos() + v.1 * b.sin())).collect()
    }

    fn close(a: (f64, f64), b: (f64, f64), tol: f64) -> bool {
        (a.0 - b.0).abs() < tol && (a.1 - b.1).abs() < tol
    }

    #[test]
    fn ols_examples() {
        let pts = exact((7.0, -3.0), &[-0.3, 0.1, 0.4, 0.8]);
        assert!(close(ols_baseline(&pts).unwrap(), (7.0, -3.0), 1e-12));
        let v = ols_baseline(&[(0.0, 3.0), (FRAC_PI_2, -1.0)]).unwrap();
        assert!(close(v, (3.0, -1.0), 1e-12));
        assert!(matches!(ols_baseline(&exact((1.0, 1.0), &[0.2, 0.2, 0.2])), Err(Error::Degenerate(_))));
        assert!(matches!(ols_baseline(&[(0.0, 1.0)]), Err(Error::NotEnoughPoints { .. })));
    }

    #[test]
    fn ols_is_pulled_by_outlier_where_rls_is_not() {
        let v = (8.0, 1.0);
        let mut pts = exact(v, &[-0.5, -0.3, -0.1, 0.1, 0.3, 0.5, 0.7]);
        pts[6].1 += 10.0;
        let ols = ols_baseline(&pts).unwrap();
        let rls = estimate_velocity(&pts, v, &RlsConfig::default()).unwrap().v;
        let err = |e: (f64, f64)| (e.0 - v.0).hypot(e.1 - v.1);
        assert!(err(ols) > 1.0);
        assert!(err(rls) < err(ols));
    }

    #[test]
    fn ransac_examples() {
        let cfg = RansacConfig { iters: 100, inlier_tol: 0.3 };
        let pts = exact((7.0, -3.0), &[-0.3, 0.1, 0.4, 0.8]);
        assert!(close(ransac_ols_baseline(&pts, &cfg, 1).unwrap(), (7.0, -3.0), 1e-9));

        let mut pts = exact((10.0, 2.0), &[-0.6, -0.4, -0.2, 0.0, 0.2, 0.4, 0.55, 0.65]);
        pts[6].1 += 6.0;
        pts[7].1 -= 8.0;
        assert!(close(ransac_ols_baseline(&pts, &cfg, 5).unwrap(), (10.0, 2.0), 1e-9));

        let same = exact((1.0, 1.0), &[0.3; 4]);
        assert!(matches!(ransac_ols_baseline(&same, &cfg, 0), Err(Error::Degenerate(_))));
    }
}
