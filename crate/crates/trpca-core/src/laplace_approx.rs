//! Gaussian surrogates for the absolute-value and nuclear-norm factors:
//! posterior means, variance surrogates from the majorization bound
//! `|x| <= x^2/(2|y|) + |y|/2`, and the expectation identities consumed by
//! the hyperparameter updates.
//!
//! Everything is parameterized by a likelihood precision `alpha`; the
//! textbook single-variable forms are recovered at `alpha = 1`.

use crate::error::{Error, Result};

/// Mean and variance surrogate of a scalar posterior with an absolute-value
/// penalty. Variance is zero exactly when the mean is zero.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScalarPosterior {
    pub mean: f64,
    pub variance: f64,
}

fn check_precisions(alpha: f64, beta: f64) -> Result<()> {
    if alpha <= 0.0 || !alpha.is_finite() || beta < 0.0 || !beta.is_finite() {
        return Err(Error::BadPrecision { alpha, beta });
    }
    Ok(())
}

/// `argmin_x (alpha/2)(x - b)^2 + beta |x| = sign(b) max(|b| - beta/alpha, 0)`.
pub fn soft_threshold(b: f64, alpha: f64, beta: f64) -> Result<f64> {
    check_precisions(alpha, beta)?;
    Ok(soft_threshold_raw(b, beta / alpha))
}

/// The shrinkage kernel with a precomputed threshold.
#[inline]
pub(crate) fn soft_threshold_raw(b: f64, thresh: f64) -> f64 {
    if b > thresh {
        b - thresh
    } else if b < -thresh {
        b + thresh
    } else {
        0.0
    }
}

/// Posterior mean and variance for the absolute-value factor: the mode of
/// `-(alpha/2)(x-b)^2 - beta|x|`, with curvature taken from the
/// majorization bound at the mode.
pub fn abs_posterior(b: f64, alpha: f64, beta: f64) -> Result<ScalarPosterior> {
    check_precisions(alpha, beta)?;
    let mean = soft_threshold_raw(b, beta / alpha);
    let variance = if mean == 0.0 {
        0.0
    } else {
        mean.abs() / (alpha * mean.abs() + beta)
    };
    Ok(ScalarPosterior { mean, variance })
}

/// `E|x| = |mean| + 1/(2(alpha |mean| + beta))`; the same expression is used
/// at `mean = 0` (its continuous limit `1/(2 beta)`), matching the
/// all-entries summation in the theta_2 scale update.
pub fn expected_abs(p: &ScalarPosterior, alpha: f64, beta: f64) -> f64 {
    let m = p.mean.abs();
    m + 0.5 / (alpha * m + beta)
}

/// Spectral trace terms for the nuclear-norm factor of one Fourier slice.
///
/// Over the indices with `d_i > 0` (the retained span of the skinny SVD):
/// the covariance trace `sum d_i / (alpha d_i + beta w_i)` and the inverse
/// precision trace `sum 1 / (alpha d_i + beta w_i)`. Indices with zero
/// weight and positive `d_i` contribute `1/(alpha d_i)`.
pub fn nuclear_posterior_trace_terms(
    svals_col: &[f64],
    alpha: f64,
    beta: f64,
    w_col: &[f64],
) -> Result<(f64, f64)> {
    if svals_col.len() != w_col.len() {
        return Err(Error::DimMismatch(format!(
            "trace terms: {} singular values vs {} weights",
            svals_col.len(),
            w_col.len()
        )));
    }
    let mut cov_trace = 0.0;
    let mut inv_prec_trace = 0.0;
    for (&d, &w) in svals_col.iter().zip(w_col) {
        if d > 0.0 {
            let prec = alpha * d + beta * w;
            cov_trace += d / prec;
            inv_prec_trace += 1.0 / prec;
        }
    }
    Ok((cov_trace, inv_prec_trace))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid_argmin(b: f64, alpha: f64, beta: f64) -> f64 {
        let mut best = (f64::INFINITY, 0.0);
        let mut x = -2.0;
        while x <= 2.0 {
            let f = 0.5 * alpha * (x - b) * (x - b) + beta * x.abs();
            if f < best.0 {
                best = (f, x);
            }
            x += 1e-6;
        }
        best.1
    }

    #[test]
    fn soft_threshold_known_values() {
        assert_eq!(soft_threshold(0.0, 1.0, 2.0).unwrap(), 0.0);
        assert_eq!(soft_threshold(5.0, 1.0, 2.0).unwrap(), 3.0);
        let v = soft_threshold(-0.7, 2.0, 1.0).unwrap();
        assert!((v - (-0.2)).abs() < 1e-12);
        assert!((v - grid_argmin(-0.7, 2.0, 1.0)).abs() < 1e-5);
    }

    #[test]
    fn soft_threshold_rejects_bad_precision() {
        assert!(matches!(
            soft_threshold(1.0, 0.0, 1.0),
            Err(Error::BadPrecision { .. })
        ));
        assert!(matches!(
            soft_threshold(1.0, 1.0, -1.0),
            Err(Error::BadPrecision { .. })
        ));
    }

    #[test]
    fn abs_posterior_known_values() {
        let p = abs_posterior(0.0, 1.0, 2.0).unwrap();
        assert_eq!((p.mean, p.variance), (0.0, 0.0));

        let p = abs_posterior(5.0, 1.0, 2.0).unwrap();
        assert_eq!(p.mean, 3.0);
        assert!((p.variance - 3.0 / 5.0).abs() < 1e-15);

        let p = abs_posterior(5.0, 2.0, 2.0).unwrap();
        assert_eq!(p.mean, 4.0);
        assert!((p.variance - 0.4).abs() < 1e-15);
    }

    #[test]
    fn abs_posterior_curvature_matches_bound() {
        // -d^2/dx^2 of (alpha/2)(x-b)^2 + (beta/(2|mean|)) x^2 at the mean
        // equals 1/variance.
        let (b, alpha, beta) = (5.0, 2.0, 2.0);
        let p = abs_posterior(b, alpha, beta).unwrap();
        let m = p.mean.abs();
        let f = |x: f64| 0.5 * alpha * (x - b) * (x - b) + beta / (2.0 * m) * x * x;
        let h = 1e-4;
        let second = (f(p.mean + h) - 2.0 * f(p.mean) + f(p.mean - h)) / (h * h);
        assert!((second - 1.0 / p.variance).abs() < 1e-6 * second.abs());
    }

    #[test]
    fn expected_abs_values_and_limit() {
        let p = ScalarPosterior {
            mean: 3.0,
            variance: 0.6,
        };
        assert!((expected_abs(&p, 1.0, 2.0) - 3.1).abs() < 1e-15);

        let p4 = abs_posterior(5.0, 2.0, 2.0).unwrap();
        let e = expected_abs(&p4, 2.0, 2.0);
        assert!((e - 4.05).abs() < 1e-15);
        // identity: E|x| = |mean| + variance / (2 |mean|)
        assert!((e - (p4.mean.abs() + p4.variance / (2.0 * p4.mean.abs()))).abs() < 1e-15);

        // beta -> infinity collapses to |mean|
        let e = expected_abs(&p, 1.0, 1e18);
        assert!((e - 3.0).abs() < 1e-12);
    }

    #[test]
    fn trace_terms_direct_evaluation() {
        let (c, i) = nuclear_posterior_trace_terms(&[], 1.0, 2.0, &[]).unwrap();
        assert_eq!((c, i), (0.0, 0.0));

        let (c, i) = nuclear_posterior_trace_terms(&[3.0], 1.0, 2.0, &[1.0]).unwrap();
        assert!((c - 3.0 / 5.0).abs() < 1e-15);
        assert!((i - 1.0 / 5.0).abs() < 1e-15);

        let (c, i) = nuclear_posterior_trace_terms(&[2.0, 1.0], 2.0, 1.0, &[1.0, 1.0]).unwrap();
        assert!((c - (2.0 / 5.0 + 1.0 / 3.0)).abs() < 1e-15);
        assert!((i - (1.0 / 5.0 + 1.0 / 3.0)).abs() < 1e-15);

        assert!(matches!(
            nuclear_posterior_trace_terms(&[1.0], 1.0, 1.0, &[1.0, 1.0]),
            Err(Error::DimMismatch(_))
        ));
    }

    #[test]
    fn trace_terms_zero_weight_and_zero_sval() {
        // zero weight with positive d contributes 1/(alpha d); zero d is
        // excluded entirely.
        let (c, i) = nuclear_posterior_trace_terms(&[2.0, 0.0], 4.0, 7.0, &[0.0, 1.0]).unwrap();
        assert!((c - 2.0 / 8.0).abs() < 1e-15);
        assert!((i - 1.0 / 8.0).abs() < 1e-15);
    }

    #[test]
    fn soft_threshold_grid_sweep() {
        // deterministic sweep standing in for the 1-D grid oracle
        let mut state = 42u64;
        let mut next = || {
            state = state
                .wrapping_mul(6364136223846793005)
                .wrapping_add(1442695040888963407);
            (state >> 11) as f64 / (1u64 << 53) as f64
        };
        for _ in 0..200 {
            let b = next() * 4.0 - 2.0;
            let alpha = next() * 3.0 + 0.1;
            let beta = next() * 2.0;
            let got = soft_threshold(b, alpha, beta).unwrap();
            assert!((got - grid_argmin(b, alpha, beta)).abs() < 1e-5);
            // oddness and nonexpansiveness
            let neg = soft_threshold(-b, alpha, beta).unwrap();
            assert!((got + neg).abs() < 1e-12);
        }
    }
}
