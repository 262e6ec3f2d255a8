use deblur_core::imagecore::{extract_patches, histogram_stretch, stitch_patches, Stretched};
use deblur_core::{Error, Image, Result};

use crate::net::net_forward;
use crate::params::NetParams;
use crate::tensor::Tensor4;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct InferOptions {
    pub patch_size: usize,
    pub stride: usize,
    /// Patches per forward pass.
    pub batch_size: usize,
}

impl Default for InferOptions {
    fn default() -> Self {
        Self {
            patch_size: 64,
            stride: 32,
            batch_size: 16,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum InferOutput {
    Image(Image),
    Stretched(Stretched),
}

/// Deblurs a whole image patch by patch. Patch outputs are clamped to
/// `[0, 1]` and blended with the overlap window before the optional stretch.
pub fn infer_image(img: &Image, params: &NetParams<f32>, opts: &InferOptions, stretch: bool) -> Result<InferOutput> {
    if !opts.patch_size.is_multiple_of(2) || opts.batch_size == 0 {
        return Err(Error::InvalidArgument(format!("invalid inference options {opts:?}")));
    }
    let grid = extract_patches(img, opts.patch_size, opts.stride)?;
    let p = opts.patch_size;
    let mut outputs = Vec::with_capacity(grid.len());
    for chunk in grid.patches.chunks(opts.batch_size) {
        let data: Vec<f32> = chunk
            .iter()
            .flat_map(|q| q.image.data().iter().map(|&v| v as f32))
            .collect();
        let x = Tensor4::from_vec([chunk.len(), 1, p, p], data)?;
        let y = net_forward(params, &x)?;
        for i in 0..chunk.len() {
            let vals = y.sample(i).iter().map(|&v| (v as f64).clamp(0.0, 1.0)).collect();
            outputs.push(Image::from_clamped(p, p, vals)?);
        }
    }
    let stitched = stitch_patches(&grid.with_images(outputs)?)?;
    Ok(if stretch {
        InferOutput::Stretched(histogram_stretch(&stitched))
    } else {
        InferOutput::Image(stitched)
    })
}
