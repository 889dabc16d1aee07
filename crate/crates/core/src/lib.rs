//! Evaluation toolkit for paired image-to-image synthesis of DCE-MRI.
//!
//! - [`image`]: slice and volume model, normalization, resizing, stacking, subtraction
//! - [`io`]: slice PNGs, volume directories, bounding-box CSV
//! - [`metrics`]: MSE, MAE, PSNR, SSIM, MS-SSIM, Dice and dataset summaries
//! - [`frechet`]: Gaussian fits and Fréchet distance over feature sets
//! - [`same`]: scaled aggregate measure and checkpoint selection
//! - [`kinetics`]: lesion intensity statistics across contrast phases
//! - [`phantom`]: deterministic lesion phantoms

pub mod error;
pub mod frechet;
pub mod image;
pub mod io;
pub mod kinetics;
pub mod metrics;
pub mod phantom;
pub mod same;

pub use error::{Error, Result};
pub use image::{BoundingBox, Image2D, Phase, RawVolume, Volume};
