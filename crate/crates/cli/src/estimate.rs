use std::path::{Path, PathBuf};

use clap::Parser;
use deblur_core::align::{apply_translation, register_translation, wavelet_denoise, Shift, Threshold};
use deblur_core::blursynth::write_kernel;
use deblur_core::fsutil::{create_dir_all, write_atomic};
use deblur_core::imagecore::{extract_patches, load_image};
use deblur_core::kernelest::{build_kernel_bank, BankOptions, EstimationPair, KernelEstimate, Lambda, SizeCategory};
use deblur_core::{Error, Result};
use serde::Serialize;

#[derive(Parser)]
pub struct Args {
    /// Sharp (in-focus) image.
    #[arg(long)]
    sharp: PathBuf,
    /// Blurry image of the same scene.
    #[arg(long)]
    blur: PathBuf,
    /// Output directory for KERN files and report.json.
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = 3)]
    min_size: usize,
    #[arg(long, default_value_t = 35)]
    max_size: usize,
    /// Kernels kept per category (medium and large).
    #[arg(long, default_value_t = 5)]
    top: usize,
    /// Tikhonov weight: "auto" or a non-negative number.
    #[arg(long, default_value = "auto", value_parser = parse_lambda)]
    lambda: Lambda,
    /// Wavelet-denoise the blurry image before estimating; fits are still
    /// scored against the original.
    #[arg(long)]
    denoise: bool,
    /// Haar decomposition depth used by --denoise.
    #[arg(long, default_value_t = 2)]
    denoise_levels: usize,
    /// Side of the square patches estimated independently.
    #[arg(long, default_value_t = 64)]
    patch: usize,
    #[arg(long, default_value_t = 64)]
    stride: usize,
}

fn parse_lambda(s: &str) -> std::result::Result<Lambda, String> {
    if s == "auto" {
        return Ok(Lambda::Auto);
    }
    match s.parse::<f64>() {
        Ok(v) if v >= 0.0 && v.is_finite() => Ok(Lambda::Value(v)),
        _ => Err(format!("expected \"auto\" or a non-negative number, got {s:?}")),
    }
}

#[derive(Serialize)]
struct EstimateEntry {
    patch_offset: (usize, usize),
    size: usize,
    category: SizeCategory,
    fit_mse: f64,
    denoised: bool,
    kernel: PathBuf,
}

#[derive(Serialize)]
struct Failure {
    patch_offset: (usize, usize),
    reason: String,
}

#[derive(Serialize)]
struct Report {
    sharp: PathBuf,
    blur: PathBuf,
    registration: Shift,
    lambda: Lambda,
    denoise: bool,
    sizes: Vec<usize>,
    patch: usize,
    stride: usize,
    top: usize,
    estimates: Vec<EstimateEntry>,
    selected: Vec<EstimateEntry>,
    selected_medium: usize,
    selected_large: usize,
    failures: Vec<Failure>,
}

fn kernel_name(e: &KernelEstimate) -> String {
    format!("r{:05}_c{:05}_s{:02}.kern", e.patch_offset.0, e.patch_offset.1, e.size)
}

fn entry(e: &KernelEstimate, path: PathBuf) -> EstimateEntry {
    EstimateEntry {
        patch_offset: e.patch_offset,
        size: e.size,
        category: SizeCategory::of(e.size),
        fit_mse: e.fit_mse,
        denoised: e.denoised,
        kernel: path,
    }
}

pub fn run(args: Args) -> Result<()> {
    if args.min_size > args.max_size || args.min_size.is_multiple_of(2) || args.max_size.is_multiple_of(2) {
        return Err(Error::InvalidArgument(format!(
            "--min-size {} / --max-size {} must be odd with min <= max",
            args.min_size, args.max_size
        )));
    }
    let sharp = load_image(&args.sharp)?;
    let blur = load_image(&args.blur)?;
    let shift = register_translation(&sharp, &blur)?;
    let aligned = apply_translation(&blur, shift.inverse())?;
    let denoised = if args.denoise {
        Some(wavelet_denoise(&aligned, args.denoise_levels, Threshold::Auto)?)
    } else {
        None
    };

    let sharp_grid = extract_patches(&sharp, args.patch, args.stride)?;
    let blur_grid = extract_patches(&aligned, args.patch, args.stride)?;
    let den_grid = denoised
        .as_ref()
        .map(|d| extract_patches(d, args.patch, args.stride))
        .transpose()?;
    let pairs: Vec<EstimationPair> = sharp_grid
        .patches
        .iter()
        .enumerate()
        .map(|(i, s)| {
            let observed = blur_grid.patches[i].image.clone();
            match &den_grid {
                Some(g) => EstimationPair {
                    sharp: s.image.clone(),
                    blur: g.patches[i].image.clone(),
                    reference: Some(observed),
                    offset: (s.row, s.col),
                },
                None => EstimationPair {
                    sharp: s.image.clone(),
                    blur: observed,
                    reference: None,
                    offset: (s.row, s.col),
                },
            }
        })
        .collect();

    let opts = BankOptions {
        sizes: (args.min_size..=args.max_size).step_by(2).collect(),
        lambda: args.lambda,
        top_n: args.top,
    };
    let bank = build_kernel_bank(&pairs, &opts)?;

    let est_dir = args.out.join("estimates");
    let bank_dir = args.out.join("kernels");
    create_dir_all(&est_dir)?;
    create_dir_all(&bank_dir)?;
    let write = |dir: &Path, e: &KernelEstimate| -> Result<PathBuf> {
        let name = kernel_name(e);
        write_kernel(dir.join(&name), &e.kernel)?;
        Ok(dir.strip_prefix(&args.out).unwrap_or(dir).join(name))
    };
    let mut estimates = Vec::new();
    for e in bank.small.iter().chain(&bank.medium).chain(&bank.large) {
        estimates.push(entry(e, write(&est_dir, e)?));
    }
    estimates.sort_by_key(|e| e.patch_offset);
    let mut selected = Vec::new();
    for e in &bank.selected {
        selected.push(entry(e, write(&bank_dir, e)?));
    }
    let (selected_medium, selected_large) = bank.selected_counts();
    let report = Report {
        sharp: args.sharp.clone(),
        blur: args.blur.clone(),
        registration: shift,
        lambda: args.lambda,
        denoise: args.denoise,
        sizes: opts.sizes,
        patch: args.patch,
        stride: args.stride,
        top: args.top,
        estimates,
        selected,
        selected_medium,
        selected_large,
        failures: bank
            .failures
            .iter()
            .map(|(offset, reason)| Failure {
                patch_offset: *offset,
                reason: reason.clone(),
            })
            .collect(),
    };
    let report_path = args.out.join("report.json");
    let mut json = serde_json::to_vec_pretty(&report).map_err(|e| Error::format(&report_path, e.to_string()))?;
    json.push(b'\n');
    write_atomic(&report_path, &json)?;

    println!(
        "shift ({}, {}); {} patches, {} estimated, {} failed; selected {} medium (of {}), {} large (of {})",
        shift.dy,
        shift.dx,
        pairs.len(),
        report.estimates.len(),
        report.failures.len(),
        selected_medium,
        args.top,
        selected_large,
        args.top
    );
    Ok(())
}
