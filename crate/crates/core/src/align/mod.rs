//! Translation registration and wavelet denoising ahead of kernel estimation.

mod registration;
mod wavelet;

pub use registration::{apply_translation, register_translation, Shift};
pub use wavelet::{haar_forward, haar_inverse, wavelet_denoise, HaarPyramid, Threshold};
