//! Image fidelity metrics: PSNR and single-scale SSIM.

use crate::error::{Result, TwscError};
use crate::image::PlanarImage;

/// PSNR/SSIM pair for one image comparison.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QualityScore {
    /// Peak signal-to-noise ratio in dB; `+inf` for identical images.
    pub psnr_db: f64,
    /// Structural similarity in `[-1, 1]`; exactly 1 for identical images.
    pub ssim: f64,
}

/// Scores both metrics at once.
pub fn quality(a: &PlanarImage, b: &PlanarImage) -> Result<QualityScore> {
    Ok(QualityScore {
        psnr_db: psnr(a, b, 255.0)?,
        ssim: ssim(a, b)?,
    })
}

fn check_dims(a: &PlanarImage, b: &PlanarImage, what: &str) -> Result<()> {
    if a.height() != b.height() || a.width() != b.width() || a.channels() != b.channels() {
        return Err(TwscError::ShapeMismatch {
            context: what.into(),
            expected: format!("{}x{}x{}", a.height(), a.width(), a.channels()),
            actual: format!("{}x{}x{}", b.height(), b.width(), b.channels()),
        });
    }
    Ok(())
}

/// `10 log10(peak^2 / MSE)` with the MSE over all pixels and channels.
/// Identical images return `+inf`.
pub fn psnr(a: &PlanarImage, b: &PlanarImage, peak: f64) -> Result<f64> {
    check_dims(a, b, "psnr")?;
    let mut sum_sq = 0.0;
    let mut count = 0usize;
    for c in 0..a.channels() {
        for (x, y) in a.plane(c).iter().zip(b.plane(c)) {
            let d = x - y;
            sum_sq += d * d;
            count += 1;
        }
    }
    let mse = sum_sq / count as f64;
    if mse == 0.0 {
        return Ok(f64::INFINITY);
    }
    Ok(10.0 * (peak * peak / mse).log10())
}

const SSIM_WINDOW: usize = 11;
const SSIM_SIGMA: f64 = 1.5;
const SSIM_K1: f64 = 0.01;
const SSIM_K2: f64 = 0.03;
const SSIM_PEAK: f64 = 255.0;

/// Single-scale SSIM: 11x11 Gaussian window (sigma 1.5), K1 = 0.01,
/// K2 = 0.03, L = 255, averaged over all fully interior windows. Color
/// scores are the unweighted mean of the per-channel scores.
pub fn ssim(a: &PlanarImage, b: &PlanarImage) -> Result<f64> {
    check_dims(a, b, "ssim")?;
    if a.height() < SSIM_WINDOW || a.width() < SSIM_WINDOW {
        return Err(TwscError::InvalidParameter {
            name: "image".into(),
            reason: format!(
                "ssim needs at least {SSIM_WINDOW}x{SSIM_WINDOW}, got {}x{}",
                a.height(),
                a.width()
            ),
        });
    }
    let weights = gaussian_window();
    let total: f64 = (0..a.channels())
        .map(|c| ssim_plane(a.plane(c), b.plane(c), a.height(), a.width(), &weights))
        .sum();
    Ok(total / a.channels() as f64)
}

fn gaussian_window() -> Vec<f64> {
    let half = (SSIM_WINDOW / 2) as isize;
    let mut w = Vec::with_capacity(SSIM_WINDOW * SSIM_WINDOW);
    for r in -half..=half {
        for c in -half..=half {
            let d2 = (r * r + c * c) as f64;
            w.push((-d2 / (2.0 * SSIM_SIGMA * SSIM_SIGMA)).exp());
        }
    }
    let sum: f64 = w.iter().sum();
    for v in &mut w {
        *v /= sum;
    }
    w
}

fn ssim_plane(a: &[f64], b: &[f64], height: usize, width: usize, weights: &[f64]) -> f64 {
    let c1 = (SSIM_K1 * SSIM_PEAK) * (SSIM_K1 * SSIM_PEAK);
    let c2 = (SSIM_K2 * SSIM_PEAK) * (SSIM_K2 * SSIM_PEAK);
    let mut total = 0.0;
    let mut windows = 0usize;
    for r0 in 0..=(height - SSIM_WINDOW) {
        for c0 in 0..=(width - SSIM_WINDOW) {
            let mut mu_a = 0.0;
            let mut mu_b = 0.0;
            let mut aa = 0.0;
            let mut bb = 0.0;
            let mut ab = 0.0;
            let mut wi = 0;
            for r in r0..r0 + SSIM_WINDOW {
                let base = r * width;
                for c in c0..c0 + SSIM_WINDOW {
                    let w = weights[wi];
                    wi += 1;
                    let x = a[base + c];
                    let y = b[base + c];
                    mu_a += w * x;
                    mu_b += w * y;
                    aa += w * x * x;
                    bb += w * y * y;
                    ab += w * x * y;
                }
            }
            let var_a = aa - mu_a * mu_a;
            let var_b = bb - mu_b * mu_b;
            let cov = ab - mu_a * mu_b;
            let score = ((2.0 * mu_a * mu_b + c1) * (2.0 * cov + c2))
                / ((mu_a * mu_a + mu_b * mu_b + c1) * (var_a + var_b + c2));
            total += score;
            windows += 1;
        }
    }
    total / windows as f64
}
