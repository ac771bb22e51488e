//! Quality metrics: PSNR, mean local SSIM, and the relative step change used
//! as the solver's stopping rule.

use crate::error::{Error, Result};
use crate::tensor_algebra::Tensor3;

/// Peak signal-to-noise ratio in dB; infinite for identical inputs.
pub fn psnr(reference: &Tensor3, test: &Tensor3, peak: f64) -> Result<f64> {
    if reference.dims() != test.dims() {
        return Err(Error::DimMismatch(format!(
            "psnr: {:?} vs {:?}",
            reference.dims(),
            test.dims()
        )));
    }
    assert!(peak > 0.0, "psnr peak must be positive");
    let mse = (reference - test).fro_norm().powi(2) / reference.len() as f64;
    if mse == 0.0 {
        return Ok(f64::INFINITY);
    }
    Ok(10.0 * (peak * peak / mse).log10())
}

const SSIM_WINDOW: usize = 11;
const SSIM_SIGMA: f64 = 1.5;

fn gaussian_window() -> [f64; SSIM_WINDOW * SSIM_WINDOW] {
    let mut w = [0.0; SSIM_WINDOW * SSIM_WINDOW];
    let c = (SSIM_WINDOW / 2) as isize;
    let mut sum = 0.0;
    for dy in 0..SSIM_WINDOW {
        for dx in 0..SSIM_WINDOW {
            let y = dy as isize - c;
            let x = dx as isize - c;
            let v = (-((x * x + y * y) as f64) / (2.0 * SSIM_SIGMA * SSIM_SIGMA)).exp();
            w[dy * SSIM_WINDOW + dx] = v;
            sum += v;
        }
    }
    for v in &mut w {
        *v /= sum;
    }
    w
}

fn ssim_plane(a: &Tensor3, b: &Tensor3, k: usize, range: f64) -> f64 {
    let (h, w, _) = a.dims();
    let win = gaussian_window();
    let c1 = (0.01 * range) * (0.01 * range);
    let c2 = (0.03 * range) * (0.03 * range);
    let mut acc = 0.0;
    let mut count = 0usize;
    for top in 0..=(h - SSIM_WINDOW) {
        for left in 0..=(w - SSIM_WINDOW) {
            let (mut ma, mut mb) = (0.0, 0.0);
            for dy in 0..SSIM_WINDOW {
                for dx in 0..SSIM_WINDOW {
                    let wgt = win[dy * SSIM_WINDOW + dx];
                    ma += wgt * a.at(top + dy, left + dx, k);
                    mb += wgt * b.at(top + dy, left + dx, k);
                }
            }
            let (mut va, mut vb, mut cov) = (0.0, 0.0, 0.0);
            for dy in 0..SSIM_WINDOW {
                for dx in 0..SSIM_WINDOW {
                    let wgt = win[dy * SSIM_WINDOW + dx];
                    let da = a.at(top + dy, left + dx, k) - ma;
                    let db = b.at(top + dy, left + dx, k) - mb;
                    va += wgt * da * da;
                    vb += wgt * db * db;
                    cov += wgt * da * db;
                }
            }
            let num = (2.0 * ma * mb + c1) * (2.0 * cov + c2);
            let den = (ma * ma + mb * mb + c1) * (va + vb + c2);
            acc += num / den;
            count += 1;
        }
    }
    acc / count as f64
}

/// Mean local SSIM over an 11x11 Gaussian window (sigma 1.5), with the
/// standard stabilizers `C1 = (0.01 range)^2`, `C2 = (0.03 range)^2`.
/// Frontal slices are treated as channels and averaged.
pub fn ssim(reference: &Tensor3, test: &Tensor3, dynamic_range: f64) -> Result<f64> {
    if reference.dims() != test.dims() {
        return Err(Error::DimMismatch(format!(
            "ssim: {:?} vs {:?}",
            reference.dims(),
            test.dims()
        )));
    }
    let (h, w, channels) = reference.dims();
    if h < SSIM_WINDOW || w < SSIM_WINDOW {
        return Err(Error::TooSmall { h, w });
    }
    let total: f64 = (0..channels)
        .map(|k| ssim_plane(reference, test, k, dynamic_range))
        .sum();
    Ok(total / channels as f64)
}

/// Relative change between consecutive iterates,
/// `||curr - prev||_F / ||curr||_F`; zero once the current iterate is the
/// zero tensor (converged to zero).
pub fn rmse_step(prev: &Tensor3, curr: &Tensor3) -> Result<f64> {
    if prev.dims() != curr.dims() {
        return Err(Error::DimMismatch(format!(
            "rmse_step: {:?} vs {:?}",
            prev.dims(),
            curr.dims()
        )));
    }
    let denom = curr.fro_norm();
    if denom < 1e-15 {
        return Ok(0.0);
    }
    Ok((curr - prev).fro_norm() / denom)
}
