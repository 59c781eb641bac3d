//! Patch extraction, nonlocal block matching, per-patch noise tracking, and
//! aggregation of patch estimates back into an image.
//!
//! Patches are vectorized row-major; color patches stack the three channel
//! blocks as `[R; G; B]`, so a color group matrix has `3 p^2` rows.

use nalgebra::DMatrix;

use crate::error::{Result, TwscError};
use crate::image::PlanarImage;

/// A reference patch with its nonlocal neighbors, columns ordered
/// `[reference, then neighbors by ascending distance]`.
#[derive(Debug, Clone)]
pub struct PatchGroup {
    /// Vectorized patches, `(channels * p^2) x M`.
    pub y: DMatrix<f64>,
    /// Top-left coordinates per column.
    pub locations: Vec<(usize, usize)>,
    /// Patch size.
    pub p: usize,
}

impl PatchGroup {
    pub fn group_size(&self) -> usize {
        self.y.ncols()
    }
}

/// Global and per-patch noise levels tracked across outer iterations.
#[derive(Debug, Clone)]
pub struct SigmaTracker {
    pub sigma_global: f64,
    pub sigma_patches: Vec<f64>,
}

/// Pools channel noise levels into the initial tracker:
/// `sigma = sqrt(mean of squared channel stds)`, replicated over M patches.
pub fn init_patch_sigmas(channel_stds: &[f64], m: usize) -> Result<SigmaTracker> {
    if channel_stds.is_empty() || m == 0 {
        return Err(TwscError::InvalidParameter {
            name: "init_patch_sigmas".into(),
            reason: "need at least one channel std and m >= 1".into(),
        });
    }
    if channel_stds.iter().any(|&s| s < 0.0 || !s.is_finite()) {
        return Err(TwscError::InvalidParameter {
            name: "channel_stds".into(),
            reason: "noise standard deviations must be finite and >= 0".into(),
        });
    }
    let pooled =
        (channel_stds.iter().map(|s| s * s).sum::<f64>() / channel_stds.len() as f64).sqrt();
    Ok(SigmaTracker {
        sigma_global: pooled,
        sigma_patches: vec![pooled; m],
    })
}

/// Re-estimates per-patch noise from the residual against the original noisy
/// patches: `sigma_m = sqrt(max(0, sigma^2 - mse_m))` with `mse_m` the mean
/// squared difference per vector element.
pub fn update_patch_sigmas(
    tracker: &SigmaTracker,
    y_original: &DMatrix<f64>,
    x_hat: &DMatrix<f64>,
) -> Result<SigmaTracker> {
    if y_original.shape() != x_hat.shape() {
        return Err(TwscError::ShapeMismatch {
            context: "update_patch_sigmas".into(),
            expected: format!("{}x{}", y_original.nrows(), y_original.ncols()),
            actual: format!("{}x{}", x_hat.nrows(), x_hat.ncols()),
        });
    }
    let rows = y_original.nrows() as f64;
    let var = tracker.sigma_global * tracker.sigma_global;
    let sigma_patches = (0..y_original.ncols())
        .map(|m| {
            let mse = (y_original.column(m) - x_hat.column(m)).norm_squared() / rows;
            (var - mse).max(0.0).sqrt()
        })
        .collect();
    Ok(SigmaTracker {
        sigma_global: tracker.sigma_global,
        sigma_patches,
    })
}

/// Row-major grid of patch top-left coordinates with the given stride. The
/// last valid row and column index is always appended when the stride does
/// not land on it, so the grid covers every pixel.
pub fn extract_patch_grid(image: &PlanarImage, p: usize, stride: usize) -> Result<Vec<(usize, usize)>> {
    if p == 0 || p > image.height() || p > image.width() {
        return Err(TwscError::InvalidParameter {
            name: "p".into(),
            reason: format!(
                "patch size {p} outside image {}x{}",
                image.height(),
                image.width()
            ),
        });
    }
    if stride == 0 {
        return Err(TwscError::InvalidParameter {
            name: "stride".into(),
            reason: "stride must be >= 1".into(),
        });
    }
    let axis = |len: usize| -> Vec<usize> {
        let last = len - p;
        let mut idx: Vec<usize> = (0..=last).step_by(stride).collect();
        if *idx.last().expect("non-empty") != last {
            idx.push(last);
        }
        idx
    };
    let rows = axis(image.height());
    let cols = axis(image.width());
    let mut grid = Vec::with_capacity(rows.len() * cols.len());
    for &r in &rows {
        for &c in &cols {
            grid.push((r, c));
        }
    }
    Ok(grid)
}

/// Copies the vectorized patch at `loc` into `out`.
fn fill_patch_column(image: &PlanarImage, loc: (usize, usize), p: usize, out: &mut [f64]) {
    let p2 = p * p;
    for c in 0..image.channels() {
        let plane = image.plane(c);
        let base = c * p2;
        for pr in 0..p {
            let row_start = (loc.0 + pr) * image.width() + loc.1;
            let dst = base + pr * p;
            out[dst..dst + p].copy_from_slice(&plane[row_start..row_start + p]);
        }
    }
}

/// Stacks the vectorized patches at `locations` into a matrix, one column per
/// location.
pub fn gather_patches(image: &PlanarImage, locations: &[(usize, usize)], p: usize) -> DMatrix<f64> {
    let n = image.channels() * p * p;
    let mut y = DMatrix::zeros(n, locations.len());
    let mut buf = vec![0.0; n];
    for (j, &loc) in locations.iter().enumerate() {
        fill_patch_column(image, loc, p, &mut buf);
        y.column_mut(j).copy_from_slice(&buf);
    }
    y
}

/// Finds the `m` patches most similar to the one at `loc` (itself included)
/// by squared Euclidean distance over stride-1 candidates whose top-left
/// falls in a `window x window` neighborhood clamped to the image.
///
/// The reference is always column 0; ties are broken by (row, col) order.
/// Small images may yield fewer than `m` candidates; all of them are
/// returned.
pub fn block_match(
    image: &PlanarImage,
    loc: (usize, usize),
    p: usize,
    m: usize,
    window: usize,
) -> Result<PatchGroup> {
    if m == 0 {
        return Err(TwscError::InvalidParameter {
            name: "m".into(),
            reason: "group size must be >= 1".into(),
        });
    }
    if window < p {
        return Err(TwscError::InvalidParameter {
            name: "window".into(),
            reason: format!("search window {window} smaller than patch size {p}"),
        });
    }
    let max_r = image.height() - p;
    let max_c = image.width() - p;
    if loc.0 > max_r || loc.1 > max_c {
        return Err(TwscError::InvalidParameter {
            name: "loc".into(),
            reason: format!("reference {loc:?} outside valid top-left range"),
        });
    }

    let half_lo = (window - 1) / 2;
    let half_hi = window / 2;
    let r_lo = loc.0.saturating_sub(half_lo);
    let r_hi = (loc.0 + half_hi).min(max_r);
    let c_lo = loc.1.saturating_sub(half_lo);
    let c_hi = (loc.1 + half_hi).min(max_c);

    let n = image.channels() * p * p;
    let mut reference = vec![0.0; n];
    fill_patch_column(image, loc, p, &mut reference);

    let mut candidate = vec![0.0; n];
    let mut scored: Vec<(f64, usize, usize)> = Vec::new();
    for r in r_lo..=r_hi {
        for c in c_lo..=c_hi {
            if (r, c) == loc {
                continue;
            }
            fill_patch_column(image, (r, c), p, &mut candidate);
            let dist: f64 = reference
                .iter()
                .zip(&candidate)
                .map(|(a, b)| (a - b) * (a - b))
                .sum();
            scored.push((dist, r, c));
        }
    }
    scored.sort_by(|a, b| {
        a.0.partial_cmp(&b.0)
            .expect("finite distances")
            .then(a.1.cmp(&b.1))
            .then(a.2.cmp(&b.2))
    });

    let mut locations = Vec::with_capacity(m);
    locations.push(loc);
    locations.extend(scored.iter().take(m - 1).map(|&(_, r, c)| (r, c)));

    Ok(PatchGroup {
        y: gather_patches(image, &locations, p),
        locations,
        p,
    })
}

/// Patch estimates for one group, aligned with its locations.
#[derive(Debug, Clone)]
pub struct PatchEstimates {
    pub locations: Vec<(usize, usize)>,
    /// One vectorized patch estimate per column.
    pub values: DMatrix<f64>,
}

/// Averages all patch estimates covering each pixel into an image. Every
/// pixel must be covered by at least one estimate; output values stay
/// unclamped.
pub fn aggregate(
    estimates: &[PatchEstimates],
    height: usize,
    width: usize,
    p: usize,
    channels: usize,
) -> Result<PlanarImage> {
    let mut acc = vec![vec![0.0f64; height * width]; channels];
    let mut count = vec![0u32; height * width];
    let p2 = p * p;

    for est in estimates {
        if est.values.nrows() != channels * p2 || est.values.ncols() != est.locations.len() {
            return Err(TwscError::ShapeMismatch {
                context: "aggregate".into(),
                expected: format!("{}x{}", channels * p2, est.locations.len()),
                actual: format!("{}x{}", est.values.nrows(), est.values.ncols()),
            });
        }
        for (j, &(r0, c0)) in est.locations.iter().enumerate() {
            for pr in 0..p {
                let row = r0 + pr;
                for pc in 0..p {
                    let pix = row * width + c0 + pc;
                    for (ch, plane) in acc.iter_mut().enumerate() {
                        plane[pix] += est.values[(ch * p2 + pr * p + pc, j)];
                    }
                    count[pix] += 1;
                }
            }
        }
    }

    for (pix, &n) in count.iter().enumerate() {
        if n == 0 {
            return Err(TwscError::UncoveredPixel {
                row: pix / width,
                col: pix % width,
            });
        }
    }
    for plane in &mut acc {
        for (v, &n) in plane.iter_mut().zip(&count) {
            *v /= f64::from(n);
        }
    }
    PlanarImage::from_planes(height, width, acc)
}
