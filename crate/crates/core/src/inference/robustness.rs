use super::InferenceError;
use crate::math::sqrt;

/// Equal-strength robustness value: the partial association an omitted
/// variable would need with both treatment and outcome to drive the
/// estimate to zero. Positive root of `nu*rho^2 + t^2*rho - t^2 = 0`.
pub fn robustness_rho(t: f64, nu: f64) -> Result<f64, InferenceError> {
    if nu.is_nan() || nu < 1.0 {
        return Err(InferenceError::DofTooSmall(nu));
    }
    if !t.is_finite() || !nu.is_finite() {
        return Err(InferenceError::NonFinite("t statistic"));
    }
    if t == 0.0 {
        return Ok(0.0);
    }
    // (-t^2 + sqrt(t^4 + 4 nu t^2)) / (2 nu), rationalized: no cancellation
    // for small |t| and no overflow of t^4 for large |t|.
    Ok(2.0 / (1.0 + sqrt(1.0 + 4.0 * nu / (t * t))))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn examples() {
        assert_eq!(robustness_rho(0.0, 10.0).unwrap(), 0.0);
        let r = robustness_rho(2.0, 100.0).unwrap();
        assert!((r - 0.18100).abs() < 5e-6);
        assert_eq!(robustness_rho(-2.0, 100.0).unwrap(), r);
        assert!(robustness_rho(1.0, 0.5).is_err());
        assert!(robustness_rho(f64::NAN, 5.0).is_err());
    }

    #[test]
    fn satisfies_quadratic() {
        for nu in [1.0, 7.0, 100.0, 9752.0] {
            for t in [0.01, 0.5, 1.96, 4.0, 12.0] {
                let r = robustness_rho(t, nu).unwrap();
                assert!((0.0..1.0).contains(&r));
                assert!((nu * r * r + t * t * r - t * t).abs() < 1e-12);
            }
        }
    }
}
