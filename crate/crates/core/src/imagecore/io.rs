use std::path::Path;

use image::codecs::png::PngEncoder;
use image::codecs::pnm::{PnmEncoder, PnmSubtype, SampleEncoding};
use image::{DynamicImage, ExtendedColorType, ImageEncoder, ImageReader};

use super::{quantize, Image, Image8};
use crate::{fsutil, Error, Result};

const LUMA_R: f64 = 0.299;
const LUMA_G: f64 = 0.587;
const LUMA_B: f64 = 0.114;

/// Raster container used when writing.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum RasterFormat {
    #[default]
    Png,
    /// Binary (P5) portable graymap.
    Pgm,
}

impl RasterFormat {
    /// PGM for a `.pgm` extension, PNG otherwise. The path itself is never rewritten.
    pub fn for_path(path: &Path) -> Self {
        match path.extension().and_then(|e| e.to_str()) {
            Some(ext) if ext.eq_ignore_ascii_case("pgm") => RasterFormat::Pgm,
            _ => RasterFormat::Png,
        }
    }
}

/// Loads an 8-bit grayscale or RGB raster (PNG, PGM or PPM) as intensities in `[0, 1]`.
///
/// RGB is reduced with luminance weights 0.299 / 0.587 / 0.114.
pub fn load_image(path: impl AsRef<Path>) -> Result<Image> {
    let path = path.as_ref();
    let reader = ImageReader::open(path)
        .map_err(|e| Error::io(path, e))?
        .with_guessed_format()
        .map_err(|e| Error::io(path, e))?;
    let decoded = reader
        .decode()
        .map_err(|e| Error::format(path, format!("cannot decode raster: {e}")))?;
    let (w, h) = (decoded.width() as usize, decoded.height() as usize);
    let data: Vec<f64> = match decoded {
        DynamicImage::ImageLuma8(buf) => buf.into_raw().into_iter().map(|v| f64::from(v) / 255.0).collect(),
        DynamicImage::ImageRgb8(buf) => buf
            .into_raw()
            .chunks_exact(3)
            .map(|px| {
                let y = LUMA_R * f64::from(px[0]) + LUMA_G * f64::from(px[1]) + LUMA_B * f64::from(px[2]);
                (y / 255.0).min(1.0)
            })
            .collect(),
        other => {
            return Err(Error::format(
                path,
                format!(
                    "unsupported pixel layout {:?}; expected 8-bit grayscale or RGB",
                    other.color()
                ),
            ))
        }
    };
    Image::new(h, w, data).map_err(|e| Error::format(path, e.to_string()))
}

/// Anything that can be written as an 8-bit grayscale raster.
pub trait ToGray8 {
    /// `(height, width, row-major bytes)`
    fn to_gray8(&self) -> (usize, usize, Vec<u8>);
}

impl ToGray8 for Image {
    fn to_gray8(&self) -> (usize, usize, Vec<u8>) {
        (
            self.height(),
            self.width(),
            self.data().iter().map(|&v| quantize(v)).collect(),
        )
    }
}

impl ToGray8 for Image8 {
    fn to_gray8(&self) -> (usize, usize, Vec<u8>) {
        (self.height(), self.width(), self.data().to_vec())
    }
}

/// Saves as 8-bit grayscale, PGM when the path ends in `.pgm` and PNG otherwise.
pub fn save_image(img: &impl ToGray8, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    save_image_as(img, path, RasterFormat::for_path(path))
}

pub fn save_image_as(img: &impl ToGray8, path: impl AsRef<Path>, format: RasterFormat) -> Result<()> {
    let path = path.as_ref();
    let (h, w, bytes) = img.to_gray8();
    let mut buf = Vec::with_capacity(bytes.len() + 64);
    let res = match format {
        RasterFormat::Png => PngEncoder::new(&mut buf).write_image(&bytes, w as u32, h as u32, ExtendedColorType::L8),
        RasterFormat::Pgm => PnmEncoder::new(&mut buf)
            .with_subtype(PnmSubtype::Graymap(SampleEncoding::Binary))
            .write_image(&bytes, w as u32, h as u32, ExtendedColorType::L8),
    };
    res.map_err(|e| Error::format(path, format!("cannot encode raster: {e}")))?;
    fsutil::write_atomic(path, &buf)
}
