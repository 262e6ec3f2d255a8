//! Blind PSF recovery from aligned sharp/blurry pairs.
//!
//! For a candidate size `s` the kernel solves the Tikhonov-regularized
//! least-squares problem over the valid region (where the kernel support never
//! leaves the image):
//!
//! `k = argmin ‖B_valid − (k ∗ S)_valid‖² + λ‖k‖²`
//!
//! through its `s² × s²` normal equations. The solution is then projected onto
//! the PSF constraints (non-negative, unit sum).

mod bank;
mod estimate;

pub use bank::{build_kernel_bank, BankOptions, EstimationPair, KernelBank, SizeCategory};
pub use estimate::{
    estimate_kernel, select_kernel_size, select_kernel_size_denoised, solve_kernel_ls, valid_convolve, valid_fit_mse,
    KernelEstimate, Lambda, MAX_KERNEL_SIZE, MIN_KERNEL_SIZE,
};
