//! Building blocks for blind deblurring of out-of-focus microscopy images.
//!
//! The crate covers everything around the restoration network itself:
//!
//! * [`imagecore`]: grayscale rasters, patch grids with overlap-blended
//!   stitching, dihedral augmentation and histogram stretching.
//! * [`blursynth`]: Gaussian PSFs, forward blur simulation and synthetic
//!   training-set generation.
//! * [`align`]: phase-correlation registration and Haar wavelet denoising.
//! * [`kernelest`]: regularized least-squares PSF recovery from sharp/blurry
//!   pairs and kernel-bank selection.
//! * [`metrics`]: MSE, PSNR and SSIM.

pub mod align;
pub mod blursynth;
mod error;
pub(crate) mod fft;
pub mod fsutil;
pub mod imagecore;
pub mod kernelest;
pub mod metrics;

pub use error::{Error, Result};
pub use imagecore::{Image, Image8};
