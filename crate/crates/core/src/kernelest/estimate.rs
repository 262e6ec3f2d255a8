use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::blursynth::Kernel;
use crate::{Error, Image, Result};

pub const MIN_KERNEL_SIZE: usize = 3;
pub const MAX_KERNEL_SIZE: usize = 35;

/// Margin (per axis) the patch must exceed the kernel size by.
const MIN_MARGIN: usize = 16;

/// Sizes whose fits differ by less than this are treated as tied, and the
/// smaller size wins.
const TIE_RELATIVE: f64 = 1e-9;
const TIE_ABSOLUTE: f64 = 1e-18;

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub enum Lambda {
    /// `1e-4 · mean(S²) · s²`
    #[default]
    Auto,
    Value(f64),
}

impl Lambda {
    pub fn resolve(self, sharp: &Image, size: usize) -> Result<f64> {
        match self {
            Lambda::Auto => {
                let energy = sharp.data().iter().map(|v| v * v).sum::<f64>() / sharp.data().len() as f64;
                Ok(1e-4 * energy * (size * size) as f64)
            }
            Lambda::Value(v) if v.is_finite() && v >= 0.0 => Ok(v),
            Lambda::Value(v) => Err(Error::InvalidArgument(format!("lambda must be >= 0, got {v}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct KernelEstimate {
    pub kernel: Kernel,
    pub size: usize,
    /// Valid-region MSE of the projected kernel.
    pub fit_mse: f64,
    /// Valid-region MSE of the unconstrained least-squares taps.
    pub raw_fit_mse: f64,
    pub patch_offset: (usize, usize),
    pub denoised: bool,
}

fn check_inputs(sharp: &Image, blur: &Image, size: usize) -> Result<()> {
    sharp.require_same_dims(blur, "kernel estimation")?;
    if size.is_multiple_of(2) || !(MIN_KERNEL_SIZE..=MAX_KERNEL_SIZE).contains(&size) {
        return Err(Error::InvalidArgument(format!(
            "kernel size {size} must be odd and within {MIN_KERNEL_SIZE}..={MAX_KERNEL_SIZE}"
        )));
    }
    let (h, w) = sharp.dims();
    if h.min(w) < size + MIN_MARGIN {
        return Err(Error::Shape(format!(
            "{h}x{w} patch too small for a {size}x{size} kernel (needs {} per axis)",
            size + MIN_MARGIN
        )));
    }
    if sharp.is_constant() {
        return Err(Error::InvalidArgument("sharp patch is constant".into()));
    }
    Ok(())
}

/// `(k ∗ S)` on the valid region, `(h − s + 1) × (w − s + 1)` row-major.
pub fn valid_convolve(sharp: &Image, taps: &[f64], size: usize) -> Vec<f64> {
    let (h, w) = sharp.dims();
    let (vh, vw) = (h + 1 - size, w + 1 - size);
    let s = sharp.data();
    let mut out = vec![0.0; vh * vw];
    // Output (i, j) in valid coordinates sits at image pixel (i + r, j + r);
    // tap (a, b) reads S(i + s − 1 − a, j + s − 1 − b).
    for a in 0..size {
        for b in 0..size {
            let k = taps[a * size + b];
            if k == 0.0 {
                continue;
            }
            for i in 0..vh {
                let src = &s[(i + size - 1 - a) * w + size - 1 - b..][..vw];
                for (d, x) in out[i * vw..(i + 1) * vw].iter_mut().zip(src) {
                    *d += k * x;
                }
            }
        }
    }
    out
}

fn valid_blur(blur: &Image, size: usize) -> Vec<f64> {
    let (h, w) = blur.dims();
    let r = size / 2;
    let mut out = Vec::with_capacity((h + 1 - size) * (w + 1 - size));
    for i in r..h - r {
        out.extend_from_slice(&blur.data()[i * w + r..i * w + w - r]);
    }
    out
}

fn residual_mse(sharp: &Image, blur_valid: &[f64], taps: &[f64], size: usize) -> f64 {
    let pred = valid_convolve(sharp, taps, size);
    pred.iter().zip(blur_valid).map(|(p, b)| (p - b) * (p - b)).sum::<f64>() / pred.len() as f64
}

/// Valid-region MSE between `kernel ∗ sharp` and `blur`.
pub fn valid_fit_mse(sharp: &Image, blur: &Image, kernel: &Kernel) -> Result<f64> {
    sharp.require_same_dims(blur, "fit")?;
    let s = kernel.size();
    if sharp.height() < s || sharp.width() < s {
        return Err(Error::Shape("kernel larger than patch".into()));
    }
    Ok(residual_mse(sharp, &valid_blur(blur, s), kernel.taps(), s))
}

/// Gram matrix `AᵀA` of the valid-region design matrix.
///
/// Entry `((a, b), (a', b'))` is a rectangle sum of the lag product
/// `S(p, q)·S(p + a − a', q + b − b')`, read from one summed-area table per lag.
fn gram_matrix(sharp: &Image, size: usize) -> DMatrix<f64> {
    let (h, w) = sharp.dims();
    let s = sharp.data();
    let n = size * size;
    let r = size / 2;
    let mut gram = DMatrix::<f64>::zeros(n, n);
    let mut sat = vec![0.0; (h + 1) * (w + 1)];
    let lag_max = size as isize - 1;
    for dy in -lag_max..=lag_max {
        for dx in -lag_max..=lag_max {
            // Upper triangle only: lags in lexicographic order (dy, dx) >= (0, 0).
            if (dy, dx) < (0, 0) {
                continue;
            }
            for p in 0..h {
                let mut row_acc = 0.0;
                let py = p as isize + dy;
                for q in 0..w {
                    let qx = q as isize + dx;
                    if py >= 0 && (py as usize) < h && qx >= 0 && (qx as usize) < w {
                        row_acc += s[p * w + q] * s[py as usize * w + qx as usize];
                    }
                    sat[(p + 1) * (w + 1) + q + 1] = sat[p * (w + 1) + q + 1] + row_acc;
                }
            }
            let rect = |p0: usize, p1: usize, q0: usize, q1: usize| {
                sat[(p1 + 1) * (w + 1) + q1 + 1] - sat[p0 * (w + 1) + q1 + 1] - sat[(p1 + 1) * (w + 1) + q0]
                    + sat[p0 * (w + 1) + q0]
            };
            for a in 0..size {
                let a2 = a as isize - dy;
                if a2 < 0 || a2 >= size as isize {
                    continue;
                }
                for b in 0..size {
                    let b2 = b as isize - dx;
                    if b2 < 0 || b2 >= size as isize {
                        continue;
                    }
                    // Column (a, b) of the design matrix reads S(p, q) for
                    // p ∈ [2r − a, h − 1 − a], q ∈ [2r − b, w − 1 − b].
                    let v = rect(2 * r - a, h - 1 - a, 2 * r - b, w - 1 - b);
                    let (i, j) = (a * size + b, a2 as usize * size + b2 as usize);
                    gram[(i, j)] = v;
                    gram[(j, i)] = v;
                }
            }
        }
    }
    gram
}

/// `Aᵀ b` for the valid region of `blur`.
fn design_rhs(sharp: &Image, blur: &Image, size: usize) -> Vec<f64> {
    let (h, w) = sharp.dims();
    let bv = valid_blur(blur, size);
    let vw = w + 1 - size;
    let vh = h + 1 - size;
    let s = sharp.data();
    let mut rhs = vec![0.0; size * size];
    for a in 0..size {
        for b in 0..size {
            let mut acc = 0.0;
            for i in 0..vh {
                let src = &s[(i + size - 1 - a) * w + size - 1 - b..][..vw];
                acc += src
                    .iter()
                    .zip(&bv[i * vw..(i + 1) * vw])
                    .map(|(x, y)| x * y)
                    .sum::<f64>();
            }
            rhs[a * size + b] = acc;
        }
    }
    rhs
}

/// Unconstrained regularized least-squares taps, row-major `size × size`.
pub fn solve_kernel_ls(sharp: &Image, blur: &Image, size: usize, lambda: Lambda) -> Result<Vec<f64>> {
    check_inputs(sharp, blur, size)?;
    let lam = lambda.resolve(sharp, size)?;
    let n = size * size;
    let (h, w) = sharp.dims();
    let equations = (h + 1 - size) * (w + 1 - size);
    if lam == 0.0 && equations < n {
        return Err(Error::Singular {
            size,
            reason: format!("{equations} valid-region equations for {n} unknowns"),
        });
    }
    let mut gram = gram_matrix(sharp, size);
    for i in 0..n {
        gram[(i, i)] += lam;
    }
    let rhs = nalgebra::DVector::from_vec(design_rhs(sharp, blur, size));
    let chol = gram.cholesky().ok_or_else(|| Error::Singular {
        size,
        reason: "normal matrix is not positive definite".into(),
    })?;
    let sol = chol.solve(&rhs);
    if sol.iter().any(|v| !v.is_finite()) {
        return Err(Error::Singular {
            size,
            reason: "non-finite solution".into(),
        });
    }
    Ok(sol.iter().copied().collect())
}

/// Estimates a `size × size` PSF mapping `sharp` onto `blur`.
pub fn estimate_kernel(sharp: &Image, blur: &Image, size: usize, lambda: Lambda) -> Result<KernelEstimate> {
    let raw = solve_kernel_ls(sharp, blur, size, lambda)?;
    let bv = valid_blur(blur, size);
    let raw_fit_mse = residual_mse(sharp, &bv, &raw, size);
    let clamped: Vec<f64> = raw.iter().map(|&t| t.max(0.0)).collect();
    if clamped.iter().sum::<f64>() <= 0.0 {
        return Err(Error::Numeric(format!("{size}x{size} estimate has no positive taps")));
    }
    let kernel = Kernel::normalized(size, clamped, format!("est-{size}"))?;
    let fit_mse = residual_mse(sharp, &bv, kernel.taps(), size);
    Ok(KernelEstimate {
        kernel,
        size,
        fit_mse,
        raw_fit_mse,
        patch_offset: (0, 0),
        denoised: false,
    })
}

fn better(candidate: f64, best: f64) -> bool {
    candidate < best * (1.0 - TIE_RELATIVE) - TIE_ABSOLUTE
}

fn select_scored(
    sharp: &Image,
    blur: &Image,
    reference: Option<&Image>,
    sizes: &[usize],
    lambda: Lambda,
) -> Result<KernelEstimate> {
    let mut sorted: Vec<usize> = sizes.to_vec();
    sorted.sort_unstable();
    sorted.dedup();
    let mut best: Option<KernelEstimate> = None;
    let mut last_err = None;
    for size in sorted {
        match estimate_kernel(sharp, blur, size, lambda) {
            Ok(mut est) => {
                if let Some(reference) = reference {
                    est.fit_mse = valid_fit_mse(sharp, reference, &est.kernel)?;
                    est.denoised = true;
                }
                if best.as_ref().is_none_or(|b| better(est.fit_mse, b.fit_mse)) {
                    best = Some(est);
                }
            }
            Err(e) => last_err = Some(e),
        }
    }
    best.ok_or_else(|| last_err.unwrap_or_else(|| Error::InvalidArgument("no candidate kernel sizes".into())))
}

/// Estimates every size in `sizes` and keeps the lowest fit MSE; near-ties go
/// to the smaller size. Fails only if every size fails.
pub fn select_kernel_size(sharp: &Image, blur: &Image, sizes: &[usize], lambda: Lambda) -> Result<KernelEstimate> {
    select_scored(sharp, blur, None, sizes, lambda)
}

/// Like [`select_kernel_size`], estimating from a denoised blurry patch but
/// scoring (and selecting) by the fit against the original blurry patch.
pub fn select_kernel_size_denoised(
    sharp: &Image,
    denoised: &Image,
    original: &Image,
    sizes: &[usize],
    lambda: Lambda,
) -> Result<KernelEstimate> {
    denoised.require_same_dims(original, "denoised vs original blur")?;
    select_scored(sharp, denoised, Some(original), sizes, lambda)
}
