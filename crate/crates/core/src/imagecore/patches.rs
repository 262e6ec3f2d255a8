//! Overlapping patch grids and weighted stitching.

use std::f64::consts::PI;

use super::Image;
use crate::{Error, Result};

/// Lower bound of the per-axis blending weight. Pixels on the outer border are
/// covered by a single patch whose raised-cosine weight would otherwise be ~0.
const WEIGHT_FLOOR: f64 = 1e-3;

#[derive(Debug, Clone, PartialEq)]
pub struct Patch {
    pub row: usize,
    pub col: usize,
    pub image: Image,
}

/// Square patches cut from one source image, in row-major offset order.
#[derive(Debug, Clone, PartialEq)]
pub struct PatchGrid {
    pub patch_size: usize,
    pub stride: usize,
    pub source_height: usize,
    pub source_width: usize,
    pub patches: Vec<Patch>,
}

impl PatchGrid {
    pub fn len(&self) -> usize {
        self.patches.len()
    }

    pub fn is_empty(&self) -> bool {
        self.patches.is_empty()
    }

    pub fn offsets(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.patches.iter().map(|p| (p.row, p.col))
    }

    /// Same grid geometry with each patch image replaced, in order.
    pub fn with_images(&self, images: Vec<Image>) -> Result<PatchGrid> {
        if images.len() != self.patches.len() {
            return Err(Error::Shape(format!(
                "{} replacement patches for a grid of {}",
                images.len(),
                self.patches.len()
            )));
        }
        let patches = self
            .patches
            .iter()
            .zip(images)
            .map(|(p, image)| Patch {
                row: p.row,
                col: p.col,
                image,
            })
            .collect();
        Ok(PatchGrid {
            patches,
            ..self.clone_geometry()
        })
    }

    fn clone_geometry(&self) -> PatchGrid {
        PatchGrid {
            patch_size: self.patch_size,
            stride: self.stride,
            source_height: self.source_height,
            source_width: self.source_width,
            patches: Vec::new(),
        }
    }
}

/// Window offsets along one axis: multiples of `stride`, plus a final offset
/// clamped to the edge when the regular grid does not reach it.
pub(crate) fn axis_offsets(dim: usize, patch_size: usize, stride: usize) -> Vec<usize> {
    let last = dim - patch_size;
    let mut offs: Vec<usize> = (0..=last).step_by(stride).collect();
    if !last.is_multiple_of(stride) {
        offs.push(last);
    }
    offs
}

pub fn extract_patches(img: &Image, patch_size: usize, stride: usize) -> Result<PatchGrid> {
    let (h, w) = img.dims();
    if patch_size == 0 || patch_size > h.min(w) {
        return Err(Error::InvalidArgument(format!(
            "patch size {patch_size} does not fit a {h}x{w} image"
        )));
    }
    if stride == 0 || stride > patch_size {
        return Err(Error::InvalidArgument(format!(
            "stride {stride} must lie in 1..={patch_size}"
        )));
    }
    let rows = axis_offsets(h, patch_size, stride);
    let cols = axis_offsets(w, patch_size, stride);
    let mut patches = Vec::with_capacity(rows.len() * cols.len());
    for &row in &rows {
        for &col in &cols {
            patches.push(Patch {
                row,
                col,
                image: img.crop(row, col, patch_size, patch_size)?,
            });
        }
    }
    Ok(PatchGrid {
        patch_size,
        stride,
        source_height: h,
        source_width: w,
        patches,
    })
}

/// Raised-cosine blending weight at position `t` of a patch of `size` pixels.
pub fn stitch_weight(t: usize, size: usize) -> f64 {
    let w = 0.5 - 0.5 * (2.0 * PI * (t as f64 + 0.5) / size as f64).cos();
    w.max(WEIGHT_FLOOR)
}

/// Reassembles a grid into a full image by weighted averaging of overlapping patches.
pub fn stitch_patches(grid: &PatchGrid) -> Result<Image> {
    if grid.patches.is_empty() {
        return Err(Error::InvalidArgument("cannot stitch an empty patch grid".into()));
    }
    let (h, w, p) = (grid.source_height, grid.source_width, grid.patch_size);
    if h == 0 || w == 0 || p == 0 {
        return Err(Error::Shape(format!("degenerate grid {h}x{w} with patch size {p}")));
    }
    let weights: Vec<f64> = (0..p).map(|t| stitch_weight(t, p)).collect();
    let mut num = vec![0.0; h * w];
    let mut den = vec![0.0; h * w];
    for patch in &grid.patches {
        if patch.image.dims() != (p, p) {
            return Err(Error::Shape(format!(
                "patch at ({}, {}) is {}x{}, grid patch size is {p}",
                patch.row,
                patch.col,
                patch.image.height(),
                patch.image.width()
            )));
        }
        if patch.row + p > h || patch.col + p > w {
            return Err(Error::Shape(format!(
                "patch at ({}, {}) extends beyond {h}x{w}",
                patch.row, patch.col
            )));
        }
        let src = patch.image.data();
        for (r, &wr) in weights.iter().enumerate() {
            let base = (patch.row + r) * w + patch.col;
            let nrow = &mut num[base..base + p];
            let drow = &mut den[base..base + p];
            for c in 0..p {
                let wt = wr * weights[c];
                nrow[c] += wt * src[r * p + c];
                drow[c] += wt;
            }
        }
    }
    if let Some(i) = den.iter().position(|&d| d <= 0.0) {
        return Err(Error::Shape(format!(
            "pixel ({}, {}) is not covered by any patch",
            i / w,
            i % w
        )));
    }
    let data = num.iter().zip(&den).map(|(n, d)| n / d).collect();
    Image::from_clamped(h, w, data)
}
