use std::path::{Path, PathBuf};

use clap::{Parser, ValueEnum};
use deblur_core::blursynth::{gaussian_kernel_bank, read_kernel, synthesize_dataset, Kernel, SynthOptions};
use deblur_core::imagecore::{dihedral_augment, load_image};
use deblur_core::{Error, Image, Result};

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Mode {
    /// Isotropic Gaussian kernels with linearly spaced sigmas.
    Gaussian,
    /// KERN files from --kernel-dir, e.g. written by `estimate`.
    Estimated,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Augment {
    /// Off in gaussian mode, on in estimated mode.
    Auto,
    On,
    Off,
}

#[derive(Parser)]
pub struct Args {
    /// Directory of sharp full-stack images (PNG/PGM/PPM), processed in name order.
    #[arg(long)]
    stacks: PathBuf,
    /// Output dataset directory.
    #[arg(long)]
    out: PathBuf,
    #[arg(long, value_enum)]
    mode: Mode,
    /// Directory of KERN files (estimated mode).
    #[arg(long, required_if_eq("mode", "estimated"))]
    kernel_dir: Option<PathBuf>,
    #[arg(long, default_value_t = 1.0)]
    sigma_min: f64,
    #[arg(long, default_value_t = 25.0)]
    sigma_max: f64,
    #[arg(long, default_value_t = 50)]
    sigma_count: usize,
    /// Standard deviation of additive Gaussian noise on blurred images.
    #[arg(long, default_value_t = 0.0)]
    noise: f64,
    #[arg(long, default_value_t = 64)]
    patch: usize,
    #[arg(long, default_value_t = 32)]
    stride: usize,
    /// Dihedral (rotation/flip) augmentation of the stacks: 8 variants each.
    #[arg(long, value_enum, default_value_t = Augment::Auto)]
    augment: Augment,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

const IMAGE_EXTENSIONS: [&str; 3] = ["png", "pgm", "ppm"];

pub(crate) fn list_files(dir: &Path, extensions: &[&str]) -> Result<Vec<PathBuf>> {
    let entries = std::fs::read_dir(dir).map_err(|e| Error::io(dir, e))?;
    let mut files = Vec::new();
    for entry in entries {
        let path = entry.map_err(|e| Error::io(dir, e))?.path();
        let ext = path.extension().and_then(|e| e.to_str()).map(str::to_ascii_lowercase);
        if path.is_file() && ext.is_some_and(|e| extensions.contains(&e.as_str())) {
            files.push(path);
        }
    }
    files.sort();
    Ok(files)
}

pub fn run(args: Args) -> Result<()> {
    let stack_files = list_files(&args.stacks, &IMAGE_EXTENSIONS)?;
    if stack_files.is_empty() {
        return Err(Error::format(&args.stacks, "no PNG/PGM/PPM images in directory"));
    }
    let kernels: Vec<Kernel> = match args.mode {
        Mode::Gaussian => gaussian_kernel_bank(args.sigma_min, args.sigma_max, args.sigma_count)?,
        Mode::Estimated => {
            let dir = args.kernel_dir.as_deref().expect("clap enforces --kernel-dir");
            let files = list_files(dir, &["kern"])?;
            if files.is_empty() {
                return Err(Error::format(dir, "no .kern files in directory"));
            }
            files.iter().map(read_kernel).collect::<Result<_>>()?
        }
    };
    let augment = match args.augment {
        Augment::Auto => args.mode == Mode::Estimated,
        Augment::On => true,
        Augment::Off => false,
    };
    let mut images: Vec<Image> = Vec::new();
    for path in &stack_files {
        let img = load_image(path)?;
        if augment {
            images.extend(dihedral_augment(&img));
        } else {
            images.push(img);
        }
    }
    let opts = SynthOptions {
        patch_size: args.patch,
        stride: args.stride,
        noise_sigma: args.noise,
        seed: args.seed,
    };
    let manifest = synthesize_dataset(&images, &kernels, &opts, &args.out)?;
    println!(
        "{} blurred images, {} pairs ({} source images x {} kernels)",
        manifest.blurred_image_count(),
        manifest.pairs.len(),
        images.len(),
        kernels.len()
    );
    Ok(())
}
