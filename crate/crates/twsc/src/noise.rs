//! Noise-level estimation and seeded synthetic noise.
//!
//! Estimation uses the classic high-pass residual approach: convolve with the
//! 3x3 Laplacian-difference kernel and rescale the mean absolute response,
//! which cancels image structure on smooth regions and is robust enough for
//! parameter selection. Benchmark runs can bypass it entirely by supplying
//! stds.

use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{Result, TwscError};
use crate::image::PlanarImage;

/// Where channel noise levels came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SigmaSource {
    UserSupplied,
    Estimated,
}

/// Per-channel noise standard deviations (one entry in grayscale mode).
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelSigmas {
    pub stds: Vec<f64>,
    pub source: SigmaSource,
}

impl ChannelSigmas {
    pub fn user_supplied(stds: Vec<f64>) -> Self {
        Self {
            stds,
            source: SigmaSource::UserSupplied,
        }
    }

    /// Pooled level `sqrt(mean of squared channel stds)`.
    pub fn pooled(&self) -> f64 {
        (self.stds.iter().map(|s| s * s).sum::<f64>() / self.stds.len() as f64).sqrt()
    }
}

/// Estimates the noise std of one plane from the mean absolute response to
/// the kernel `[[1,-2,1],[-2,4,-2],[1,-2,1]]`:
/// `sigma = sqrt(pi/2) * sum|response| / (6 (W-2) (H-2))`.
pub fn estimate_channel_sigma(plane: &[f64], height: usize, width: usize) -> Result<f64> {
    if height < 3 || width < 3 {
        return Err(TwscError::InvalidParameter {
            name: "plane".into(),
            reason: format!("need at least 3x3, got {height}x{width}"),
        });
    }
    let at = |r: usize, c: usize| plane[r * width + c];
    let mut total = 0.0;
    for r in 1..height - 1 {
        for c in 1..width - 1 {
            let response = 4.0 * at(r, c)
                - 2.0 * (at(r - 1, c) + at(r + 1, c) + at(r, c - 1) + at(r, c + 1))
                + at(r - 1, c - 1)
                + at(r - 1, c + 1)
                + at(r + 1, c - 1)
                + at(r + 1, c + 1);
            total += response.abs();
        }
    }
    let norm = 6.0 * ((width - 2) * (height - 2)) as f64;
    Ok((std::f64::consts::PI / 2.0).sqrt() * total / norm)
}

/// Estimates every channel of an image.
pub fn estimate_sigmas(image: &PlanarImage) -> Result<ChannelSigmas> {
    let stds = (0..image.channels())
        .map(|c| estimate_channel_sigma(image.plane(c), image.height(), image.width()))
        .collect::<Result<Vec<_>>>()?;
    Ok(ChannelSigmas {
        stds,
        source: SigmaSource::Estimated,
    })
}

/// Adds i.i.d. zero-mean Gaussian noise with std `sigma` to every sample,
/// deterministically from `seed`. Values are left unclamped.
pub fn add_awgn(image: &PlanarImage, sigma: f64, seed: u64) -> Result<PlanarImage> {
    if sigma < 0.0 || !sigma.is_finite() {
        return Err(TwscError::InvalidParameter {
            name: "sigma".into(),
            reason: format!("noise std must be finite and >= 0, got {sigma}"),
        });
    }
    if sigma == 0.0 {
        return Ok(image.clone());
    }
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    let normal = Normal::new(0.0, sigma).expect("sigma validated");
    let mut out = image.clone();
    for c in 0..out.channels() {
        for v in out.plane_mut(c) {
            *v += normal.sample(&mut rng);
        }
    }
    Ok(out)
}

/// Adds zero-mean Gaussian noise whose per-pixel std is
/// `channel_scale[c] * std_map[pixel]`. The map is a row-major `H x W` field;
/// a uniform map of 1 reduces to plain AWGN per channel.
pub fn add_heterogeneous_noise(
    image: &PlanarImage,
    channel_scales: &[f64],
    std_map: &[f64],
    seed: u64,
) -> Result<PlanarImage> {
    if channel_scales.len() != image.channels() {
        return Err(TwscError::ShapeMismatch {
            context: "add_heterogeneous_noise".into(),
            expected: format!("{} channel scales", image.channels()),
            actual: format!("{}", channel_scales.len()),
        });
    }
    if std_map.len() != image.height() * image.width() {
        return Err(TwscError::ShapeMismatch {
            context: "std_map".into(),
            expected: format!("{} samples", image.height() * image.width()),
            actual: format!("{}", std_map.len()),
        });
    }
    if channel_scales.iter().chain(std_map).any(|&v| v < 0.0 || !v.is_finite()) {
        return Err(TwscError::InvalidParameter {
            name: "noise scales".into(),
            reason: "channel scales and map values must be finite and >= 0".into(),
        });
    }
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    let unit = Normal::new(0.0, 1.0).expect("unit normal");
    let mut out = image.clone();
    for (c, &scale) in channel_scales.iter().enumerate() {
        let plane = out.plane_mut(c);
        for (v, &map) in plane.iter_mut().zip(std_map) {
            *v += scale * map * unit.sample(&mut rng);
        }
    }
    Ok(out)
}
