//! Paired sharp/blurred patch datasets on disk.

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::{add_noise, convolve, derive_seed, write_kernel, Kernel};
use crate::imagecore::{extract_patches, save_image};
use crate::{fsutil, Error, Image, Result};

pub const MANIFEST_FILE: &str = "manifest.json";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KernelEntry {
    pub id: String,
    pub path: PathBuf,
}

/// One training pair. Paths are relative to the manifest's directory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairEntry {
    pub sharp: PathBuf,
    pub blur: PathBuf,
    pub kernel_id: String,
    pub image_index: usize,
    pub row: usize,
    pub col: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetManifest {
    pub patch_size: usize,
    pub stride: usize,
    pub noise_sigma: f64,
    pub seed: u64,
    pub source_images: usize,
    pub kernels: Vec<KernelEntry>,
    pub pairs: Vec<PairEntry>,
}

impl DatasetManifest {
    /// Number of distinct full-size blurred images the pairs were cut from.
    pub fn blurred_image_count(&self) -> usize {
        self.pairs
            .iter()
            .map(|p| (p.image_index, p.kernel_id.as_str()))
            .collect::<BTreeSet<_>>()
            .len()
    }

    /// Writes `manifest.json` into `dir` after checking that every referenced file exists.
    pub fn write(&self, dir: &Path) -> Result<PathBuf> {
        let referenced = self
            .kernels
            .iter()
            .map(|k| &k.path)
            .chain(self.pairs.iter().flat_map(|p| [&p.sharp, &p.blur]));
        for rel in referenced {
            let full = dir.join(rel);
            if !full.is_file() {
                return Err(Error::io(
                    full,
                    std::io::Error::new(std::io::ErrorKind::NotFound, "manifest references a missing file"),
                ));
            }
        }
        let path = dir.join(MANIFEST_FILE);
        let mut json = serde_json::to_vec_pretty(self).map_err(|e| Error::format(&path, e.to_string()))?;
        json.push(b'\n');
        fsutil::write_atomic(&path, &json)?;
        Ok(path)
    }

    pub fn read(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
        serde_json::from_slice(&bytes).map_err(|e| Error::format(path, e.to_string()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SynthOptions {
    pub patch_size: usize,
    pub stride: usize,
    pub noise_sigma: f64,
    pub seed: u64,
}

impl Default for SynthOptions {
    fn default() -> Self {
        Self {
            patch_size: 64,
            stride: 32,
            noise_sigma: 0.0,
            seed: 0,
        }
    }
}

/// Blurs every sharp image with every kernel, cuts both into aligned patch
/// grids and writes patches, kernels and `manifest.json` under `out_dir`.
///
/// Pairs are ordered image-major, then kernel, then patch. Noise for the
/// (image, kernel) blur is seeded from `(seed, image index, kernel index)`.
pub fn synthesize_dataset(
    sharp_images: &[Image],
    kernels: &[Kernel],
    opts: &SynthOptions,
    out_dir: &Path,
) -> Result<DatasetManifest> {
    if sharp_images.is_empty() || kernels.is_empty() {
        return Err(Error::InvalidArgument(format!(
            "need at least one image and one kernel, got {} and {}",
            sharp_images.len(),
            kernels.len()
        )));
    }
    let mut ids = BTreeSet::new();
    if let Some(dup) = kernels.iter().find(|k| !ids.insert(k.id())) {
        return Err(Error::InvalidArgument(format!("duplicate kernel id {:?}", dup.id())));
    }
    for sub in ["sharp", "blur", "kernels"] {
        fsutil::create_dir_all(&out_dir.join(sub))?;
    }

    let mut kernel_entries = Vec::with_capacity(kernels.len());
    for (ki, k) in kernels.iter().enumerate() {
        let rel = PathBuf::from("kernels").join(format!("k{ki:03}.kern"));
        write_kernel(out_dir.join(&rel), k)?;
        kernel_entries.push(KernelEntry {
            id: k.id().to_owned(),
            path: rel,
        });
    }

    let mut pairs = Vec::new();
    for (ii, sharp) in sharp_images.iter().enumerate() {
        let sharp_grid = extract_patches(sharp, opts.patch_size, opts.stride)?;
        let mut sharp_paths = Vec::with_capacity(sharp_grid.len());
        for (pi, patch) in sharp_grid.patches.iter().enumerate() {
            let rel = PathBuf::from("sharp").join(format!("i{ii:03}_p{pi:05}.png"));
            save_image(&patch.image, out_dir.join(&rel))?;
            sharp_paths.push(rel);
        }
        for (ki, kernel) in kernels.iter().enumerate() {
            let blurred = convolve(sharp, kernel)?;
            let blurred = add_noise(&blurred, opts.noise_sigma, derive_seed(opts.seed, ii as u64, ki as u64))?;
            let blur_grid = extract_patches(&blurred, opts.patch_size, opts.stride)?;
            for (pi, (bp, sp)) in blur_grid.patches.iter().zip(&sharp_grid.patches).enumerate() {
                debug_assert_eq!((bp.row, bp.col), (sp.row, sp.col));
                let rel = PathBuf::from("blur").join(format!("i{ii:03}_k{ki:03}_p{pi:05}.png"));
                save_image(&bp.image, out_dir.join(&rel))?;
                pairs.push(PairEntry {
                    sharp: sharp_paths[pi].clone(),
                    blur: rel,
                    kernel_id: kernel.id().to_owned(),
                    image_index: ii,
                    row: bp.row,
                    col: bp.col,
                });
            }
        }
    }

    let manifest = DatasetManifest {
        patch_size: opts.patch_size,
        stride: opts.stride,
        noise_sigma: opts.noise_sigma,
        seed: opts.seed,
        source_images: sharp_images.len(),
        kernels: kernel_entries,
        pairs,
    };
    manifest.write(out_dir)?;
    Ok(manifest)
}
