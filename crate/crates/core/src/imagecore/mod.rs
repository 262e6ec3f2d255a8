//! Grayscale rasters and the image-level operations of the pipeline.

mod dihedral;
mod io;
mod patches;
mod stretch;

pub use dihedral::{dihedral_augment, Dihedral};
pub use io::{load_image, save_image, save_image_as, RasterFormat, ToGray8};
pub use patches::{extract_patches, stitch_patches, stitch_weight, Patch, PatchGrid};
pub use stretch::{histogram_stretch, Stretched};

use crate::{Error, Result};

/// A grayscale raster with intensities in `[0, 1]`, stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Image {
    height: usize,
    width: usize,
    data: Vec<f64>,
}

impl Image {
    /// Validates dimensions and that every intensity is a finite value in `[0, 1]`.
    pub fn new(height: usize, width: usize, data: Vec<f64>) -> Result<Self> {
        if height == 0 || width == 0 {
            return Err(Error::Shape(format!("empty image {height}x{width}")));
        }
        if data.len() != height * width {
            return Err(Error::Shape(format!(
                "{} samples for a {height}x{width} image",
                data.len()
            )));
        }
        if let Some((i, v)) = data.iter().enumerate().find(|(_, v)| !(0.0..=1.0).contains(*v)) {
            return Err(Error::InvalidArgument(format!(
                "intensity {v} at index {i} is outside [0, 1]"
            )));
        }
        Ok(Self { height, width, data })
    }

    /// Builds an image from arbitrary reals, clamping each into `[0, 1]`.
    /// Non-finite samples are rejected.
    pub fn from_clamped(height: usize, width: usize, mut data: Vec<f64>) -> Result<Self> {
        if data.iter().any(|v| !v.is_finite()) {
            return Err(Error::Numeric("non-finite intensity".into()));
        }
        data.iter_mut().for_each(|v| *v = v.clamp(0.0, 1.0));
        Self::new(height, width, data)
    }

    pub fn filled(height: usize, width: usize, value: f64) -> Result<Self> {
        Self::new(height, width, vec![value; height * width])
    }

    pub fn from_fn(height: usize, width: usize, mut f: impl FnMut(usize, usize) -> f64) -> Result<Self> {
        let mut data = Vec::with_capacity(height * width);
        for r in 0..height {
            for c in 0..width {
                data.push(f(r, c));
            }
        }
        Self::new(height, width, data)
    }

    #[inline]
    pub fn height(&self) -> usize {
        self.height
    }

    #[inline]
    pub fn width(&self) -> usize {
        self.width
    }

    #[inline]
    pub fn dims(&self) -> (usize, usize) {
        (self.height, self.width)
    }

    #[inline]
    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn into_data(self) -> Vec<f64> {
        self.data
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.data[row * self.width + col]
    }

    /// Copies the `height`x`width` window whose top-left corner is `(row, col)`.
    pub fn crop(&self, row: usize, col: usize, height: usize, width: usize) -> Result<Image> {
        if height == 0 || width == 0 || row + height > self.height || col + width > self.width {
            return Err(Error::Shape(format!(
                "crop {height}x{width} at ({row}, {col}) exceeds {}x{}",
                self.height, self.width
            )));
        }
        let mut data = Vec::with_capacity(height * width);
        for r in row..row + height {
            let start = r * self.width + col;
            data.extend_from_slice(&self.data[start..start + width]);
        }
        Ok(Image { height, width, data })
    }

    pub fn min_max(&self) -> (f64, f64) {
        self.data
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| {
                (lo.min(v), hi.max(v))
            })
    }

    pub fn is_constant(&self) -> bool {
        let (lo, hi) = self.min_max();
        lo == hi
    }

    pub(crate) fn require_same_dims(&self, other: &Image, what: &str) -> Result<()> {
        if self.dims() != other.dims() {
            return Err(Error::Shape(format!(
                "{what}: {}x{} vs {}x{}",
                self.height, self.width, other.height, other.width
            )));
        }
        Ok(())
    }
}

/// An 8-bit grayscale raster, the display-range output of histogram stretching.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Image8 {
    height: usize,
    width: usize,
    data: Vec<u8>,
}

impl Image8 {
    pub fn new(height: usize, width: usize, data: Vec<u8>) -> Result<Self> {
        if height == 0 || width == 0 || data.len() != height * width {
            return Err(Error::Shape(format!(
                "{} bytes for a {height}x{width} image",
                data.len()
            )));
        }
        Ok(Self { height, width, data })
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn data(&self) -> &[u8] {
        &self.data
    }

    /// Back to `[0, 1]` intensities (`v / 255`).
    pub fn to_image(&self) -> Image {
        Image {
            height: self.height,
            width: self.width,
            data: self.data.iter().map(|&v| f64::from(v) / 255.0).collect(),
        }
    }
}

/// Round-half-up quantization of a `[0, 1]` intensity to a byte.
///
/// A slack of 1e-9 levels absorbs representation error so that values which
/// are mathematically `k + 0.5` (for instance `127.5` reached through a
/// division) still round up.
#[inline]
pub fn quantize(v: f64) -> u8 {
    quantize_level(v * 255.0)
}

#[inline]
pub(crate) fn quantize_level(level: f64) -> u8 {
    (level + 0.5 + 1e-9).floor().clamp(0.0, 255.0) as u8
}
