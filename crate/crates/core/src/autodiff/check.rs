//! Central finite-difference gradient checking.

use thiserror::Error;

/// Denominator floor for the relative error.
pub const GRADIENT_FLOOR: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum FiniteDiffError {
    #[error("analytic gradient has {analytic} entries, point has {point}")]
    LengthMismatch { analytic: usize, point: usize },
    #[error("function is non-finite at probe {coordinate} ({value})")]
    NonFiniteProbe { coordinate: usize, value: f64 },
}

/// Largest relative error between `analytic` and a central difference of `f`
/// at `point`, taken over coordinates:
/// `|analytic - fd| / (|fd| + GRADIENT_FLOOR)`.
pub fn finite_diff_check<F>(
    mut f: F,
    analytic: &[f64],
    point: &[f64],
    step: f64,
) -> Result<f64, FiniteDiffError>
where
    F: FnMut(&[f64]) -> f64,
{
    if analytic.len() != point.len() {
        return Err(FiniteDiffError::LengthMismatch {
            analytic: analytic.len(),
            point: point.len(),
        });
    }
    let mut probe = point.to_vec();
    let mut worst: f64 = 0.0;
    for (i, &a) in analytic.iter().enumerate() {
        let original = probe[i];
        probe[i] = original + step;
        let plus = f(&probe);
        probe[i] = original - step;
        let minus = f(&probe);
        probe[i] = original;
        for value in [plus, minus] {
            if !value.is_finite() {
                return Err(FiniteDiffError::NonFiniteProbe {
                    coordinate: i,
                    value,
                });
            }
        }
        let fd = (plus - minus) / (2.0 * step);
        worst = worst.max((a - fd).abs() / (fd.abs() + GRADIENT_FLOOR));
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quadratic_is_exact_up_to_rounding() {
        let err = finite_diff_check(|x| x[0] * x[0], &[6.0], &[3.0], 1e-5).unwrap();
        assert!(err < 1e-7, "{err}");
    }

    #[test]
    fn constant_function_has_zero_error() {
        let err = finite_diff_check(|_| 4.2, &[0.0, 0.0], &[1.0, -1.0], 1e-5).unwrap();
        assert_eq!(err, 0.0);
    }

    #[test]
    fn discontinuity_is_reported() {
        let err = finite_diff_check(|x| x[0].ln(), &[f64::INFINITY], &[0.0], 1e-5).unwrap_err();
        assert!(matches!(
            err,
            FiniteDiffError::NonFiniteProbe { coordinate: 0, .. }
        ));
    }

    #[test]
    fn length_mismatch() {
        assert!(finite_diff_check(|_| 0.0, &[0.0], &[0.0, 1.0], 1e-5).is_err());
    }
}
