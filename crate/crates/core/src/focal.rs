//! Focal loss: cross-entropy scaled by the modulating factor `(1 - p_t)^gamma`.

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum FocalError {
    #[error("p_t must lie in (0, 1], got {0}")]
    DomainError(f64),
    #[error("gamma must be non-negative, got {0}")]
    NegativeGamma(f64),
    #[error("alpha must lie in [0, 1], got {0}")]
    AlphaOutOfRange(f64),
}

fn check(p_t: f64, gamma: f64, alpha: Option<f64>) -> Result<f64, FocalError> {
    if !(p_t > 0.0 && p_t <= 1.0) {
        return Err(FocalError::DomainError(p_t));
    }
    if !(gamma >= 0.0) {
        return Err(FocalError::NegativeGamma(gamma));
    }
    let alpha = alpha.unwrap_or(1.0);
    if !(0.0..=1.0).contains(&alpha) {
        return Err(FocalError::AlphaOutOfRange(alpha));
    }
    Ok(alpha)
}

/// `-alpha * (1 - p_t)^gamma * ln(p_t)`; `alpha` defaults to 1.
pub fn focal_loss(p_t: f64, gamma: f64, alpha: Option<f64>) -> Result<f64, FocalError> {
    let alpha = check(p_t, gamma, alpha)?;
    if p_t == 1.0 {
        return Ok(0.0);
    }
    Ok(-alpha * (1.0 - p_t).powf(gamma) * p_t.ln())
}

/// Derivative of [`focal_loss`] with respect to `p_t`.
pub fn focal_loss_grad(p_t: f64, gamma: f64, alpha: Option<f64>) -> Result<f64, FocalError> {
    let alpha = check(p_t, gamma, alpha)?;
    let q = 1.0 - p_t;
    let modulating = q.powf(gamma);
    let dmod = if gamma == 0.0 {
        0.0
    } else {
        -gamma * q.powf(gamma - 1.0)
    };
    Ok(-alpha * (dmod * p_t.ln() + modulating / p_t))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn examples() {
        assert_eq!(focal_loss(1.0, 2.0, None).unwrap(), 0.0);
        assert_eq!(focal_loss(1.0, 0.0, Some(0.25)).unwrap(), 0.0);
        assert!((focal_loss(0.5, 0.0, None).unwrap() - std::f64::consts::LN_2).abs() < 1e-15);
        let v = focal_loss(0.9, 2.0, None).unwrap();
        assert!((v - 0.01 * -(0.9f64).ln()).abs() < 1e-15);
        assert!((v - 1.0536e-3).abs() < 1e-7);
    }

    #[test]
    fn reduces_to_cross_entropy_and_scales_with_alpha() {
        for p in [0.01, 0.2, 0.7, 0.999] {
            assert_eq!(focal_loss(p, 0.0, None).unwrap(), -f64::ln(p));
            let a = focal_loss(p, 2.0, Some(0.25)).unwrap();
            assert!((a - 0.25 * focal_loss(p, 2.0, None).unwrap()).abs() < 1e-15);
        }
    }

    #[test]
    fn domain_errors() {
        assert_eq!(focal_loss(0.0, 2.0, None), Err(FocalError::DomainError(0.0)));
        assert!(focal_loss(-0.5, 2.0, None).is_err());
        assert!(focal_loss(1.5, 2.0, None).is_err());
        assert!(focal_loss(f64::NAN, 2.0, None).is_err());
        assert!(focal_loss(0.5, -1.0, None).is_err());
        assert!(focal_loss(0.5, 1.0, Some(1.5)).is_err());
    }

    #[test]
    fn monotone_decreasing_in_p() {
        for gamma in [0.0, 0.5, 1.0, 2.0, 5.0] {
            let values: Vec<f64> = (1..=100)
                .map(|i| focal_loss(i as f64 / 100.0, gamma, None).unwrap())
                .collect();
            assert!(values.windows(2).all(|w| w[1] < w[0]), "gamma {gamma}");
        }
    }

    #[test]
    fn gradient_matches_central_differences() {
        let h = 1e-6;
        for i in 0..20 {
            let p = 0.03 + 0.045 * i as f64;
            let gamma = [0.0, 1.0, 2.0, 3.5][i % 4];
            let fd = (focal_loss(p + h, gamma, None).unwrap() - focal_loss(p - h, gamma, None).unwrap()) / (2.0 * h);
            let an = focal_loss_grad(p, gamma, None).unwrap();
            assert!(((fd - an) / an).abs() < 1e-6, "p {p} gamma {gamma}: {fd} vs {an}");
        }
    }
}
