//! Trilateral weighted sparse coding (TWSC) image denoising.
//!
//! The denoiser models realistic, signal-dependent noise by weighting the
//! sparse-coding data term per channel and per patch, and the sparsity term
//! by the patch group's singular values. Each nonlocal patch group is solved
//! by ADMM, whose coefficient update is a Sylvester equation solved exactly
//! through one cached eigendecomposition; an outer loop repeats grouping,
//! solving, and aggregation over the whole image.
//!
//! Modules:
//! - [`linalg`]: economy SVD, soft thresholding, Sylvester solvers, and the
//!   unique-solvability predicate.
//! - [`solver`]: weight construction and the per-group ADMM.
//! - [`patch`]: patch grids, nonlocal block matching, per-patch noise
//!   tracking, and aggregation.
//! - [`noise`]: noise-level estimation and seeded noise synthesis.
//! - [`pipeline`]: the outer denoising loop and its configuration schedule.
//! - [`metrics`]: PSNR and SSIM.
//! - [`cli`]: the `denoise` and `bench` commands.

pub mod cli;
pub mod error;
pub mod image;
pub mod linalg;
pub mod metrics;
pub mod noise;
pub mod patch;
pub mod pipeline;
pub mod solver;

pub use error::{Result, TwscError};
pub use image::PlanarImage;
