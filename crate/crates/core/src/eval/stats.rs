//! Speed-error statistics against ground truth.

use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpeedErrorStats {
    pub mean: f64,
    pub median: f64,
    /// Population variance.
    pub variance: f64,
    pub samples: usize,
}

/// Mean, median and population variance of signed errors. Sorting first
/// makes the result independent of the input order.
pub fn error_stats(errors: &[f64]) -> Result<SpeedErrorStats> {
    if errors.is_empty() {
        return Err(Error::Empty("no speed errors"));
    }
    let mut e = errors.to_vec();
    e.sort_by(f64::total_cmp);
    let n = e.len();
    let mean = e.iter().sum::<f64>() / n as f64;
    let median = if n % 2 == 1 { e[n / 2] } else { 0.5 * (e[n / 2 - 1] + e[n / 2]) };
    let variance = e.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n as f64;
    Ok(SpeedErrorStats { mean, median, variance, samples: n })
}

/// Signed speed differences `|v_est| - |v_true|`, pairing every estimate with
/// the truth sample nearest in time, if it lies within `period`.
pub fn speed_errors(estimates: &[(f64, (f64, f64))], truth: &[(f64, (f64, f64))], period: f64) -> Vec<f64> {
    let mut sorted: Vec<(f64, (f64, f64))> = truth.to_vec();
    sorted.sort_by(|a, b| a.0.total_cmp(&b.0));
    estimates
        .iter()
        .filter_map(|&(t, v)| {
            let i = sorted.partition_point(|s| s.0 < t);
            let candidates = [i.checked_sub(1), (i < sorted.len()).then_some(i)];
            let (_, vt) = candidates
                .into_iter()
                .flatten()
                .map(|j| sorted[j])
                .filter(|s| (s.0 - t).abs() <= period)
                .min_by(|a, b| (a.0 - t).abs().total_cmp(&(b.0 - t).abs()))?;
            Some(v.0.hypot(v.1) - vt.0.hypot(vt.1))
        })
        .collect()
}

pub fn speed_error_stats(estimates: &[(f64, (f64, f64))], truth: &[(f64, (f64, f64))], period: f64) -> Result<SpeedErrorStats> {
    if estimates.is_empty() || truth.is_empty() {
        return Err(Error::Empty("estimates and truth must be non-empty"));
    }
    let errors = speed_errors(estimates, truth, period);
    if errors.is_empty() {
        return Err(Error::NoMatchedSamples);
    }
    error_stats(&errors)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn examples() {
        let truth = [(0.0, (3.0, 4.0)), (0.1, (6.0, 8.0))];
        let s = speed_error_stats(&truth, &truth, 0.1).unwrap();
        assert_eq!((s.mean, s.median, s.variance, s.samples), (0.0, 0.0, 0.0, 2));

        let s = error_stats(&[1.0, -1.0]).unwrap();
        assert_eq!((s.mean, s.median, s.variance), (0.0, 0.0, 1.0));

        let s = error_stats(&[0.1, 0.2, 0.3]).unwrap();
        assert!((s.mean - 0.2).abs() < 1e-12 && (s.median - 0.2).abs() < 1e-12);
        assert!((s.variance - 0.02 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn errors_are_signed_speed_differences() {
        let est = [(0.0, (0.0, -5.0)), (0.07, (1.0, 0.0))];
        let truth = [(0.0, (4.0, 0.0)), (0.0714, (2.0, 0.0))];
        let e = speed_errors(&est, &truth, 1.0 / 14.0);
        assert_eq!(e, vec![1.0, -1.0]);
    }

    #[test]
    fn unmatched_samples_are_an_error() {
        let est = [(5.0, (1.0, 0.0))];
        let truth = [(0.0, (1.0, 0.0))];
        assert!(matches!(speed_error_stats(&est, &truth, 0.1), Err(Error::NoMatchedSamples)));
        assert!(speed_error_stats(&[], &truth, 0.1).is_err());
    }

    proptest! {
        #[test]
        fn order_does_not_matter(mut errors in proptest::collection::vec(-5.0f64..5.0, 1..40), seed in any::<u64>()) {
            use rand::seq::SliceRandom;
            let a = error_stats(&errors).unwrap();
            errors.shuffle(&mut crate::rng::stream(seed, 0));
            let b = error_stats(&errors).unwrap();
            prop_assert_eq!(a, b);
            prop_assert!(a.variance >= 0.0);
        }
    }
}
