//! Velocity seed from the cluster accumulation history.

use crate::error::{Error, Result};

/// Finite-difference velocity between two cluster centres.
pub fn cah_seed(centre_now: (f64, f64), centre_prev: (f64, f64), t_now: f64, t_prev: f64) -> Result<(f64, f64)> {
    let dt = t_now - t_prev;
    if !(dt > 0.0) {
        return Err(Error::InvalidTimeStep(dt));
    }
    Ok(((centre_now.0 - centre_prev.0) / dt, (centre_now.1 - centre_prev.1) / dt))
}

/// Index of the previous centre nearest to `centre`, if within `gate` metres.
pub fn match_previous(centre: (f64, f64), previous: &[(f64, f64)], gate: f64) -> Option<usize> {
    previous
        .iter()
        .enumerate()
        .map(|(i, p)| (i, (p.0 - centre.0).hypot(p.1 - centre.1)))
        .filter(|&(_, d)| d <= gate)
        .min_by(|a, b| a.1.total_cmp(&b.1))
        .map(|(i, _)| i)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn seed_examples() {
        let v = cah_seed((11.0, 0.0), (10.0, 0.0), 0.1, 0.0).unwrap();
        assert!((v.0 - 10.0).abs() < 1e-12 && v.1 == 0.0);
        assert_eq!(cah_seed((1.0, 2.0), (1.0, 2.0), 1.0, 0.5).unwrap(), (0.0, 0.0));
        let v = cah_seed((2.5, 4.2), (3.0, 4.0), 0.25, 0.0).unwrap();
        assert!((v.0 + 2.0).abs() < 1e-12 && (v.1 - 0.8).abs() < 1e-12);
        assert!(cah_seed((0.0, 0.0), (1.0, 0.0), 1.0, 1.0).is_err());
        assert!(cah_seed((0.0, 0.0), (1.0, 0.0), 0.5, 1.0).is_err());
    }

    #[test]
    fn matching_picks_nearest_within_gate() {
        let prev = [(0.0, 0.0), (2.0, 0.0), (10.0, 0.0)];
        assert_eq!(match_previous((2.5, 0.0), &prev, 3.0), Some(1));
        assert_eq!(match_previous((6.0, 0.0), &prev, 3.0), None);
        assert_eq!(match_previous((0.0, 0.0), &[], 3.0), None);
    }
}
