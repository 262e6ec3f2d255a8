use rustfft::num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::fft::{to_complex, Fft2};
use crate::{Error, Image, Result};

/// Integer translation of `moving` relative to `fixed`: `moving(y, x) ≈ fixed(y − dy, x − dx)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Shift {
    pub dy: isize,
    pub dx: isize,
    /// Height of the normalized correlation peak, in `[0, 1]`.
    pub confidence: f64,
}

impl Shift {
    pub fn new(dy: isize, dx: isize) -> Self {
        Self {
            dy,
            dx,
            confidence: 1.0,
        }
    }

    pub fn inverse(self) -> Self {
        Self {
            dy: -self.dy,
            dx: -self.dx,
            ..self
        }
    }
}

/// Spectral bins whose cross-power magnitude falls below this fraction of the
/// largest one carry no phase information and are zeroed.
const SPECTRUM_FLOOR: f64 = 1e-12;

/// Phase correlation: the peak of the inverse transform of the normalized
/// cross-power spectrum, unwrapped to signed offsets.
pub fn register_translation(fixed: &Image, moving: &Image) -> Result<Shift> {
    fixed.require_same_dims(moving, "registration")?;
    if fixed.is_constant() || moving.is_constant() {
        return Err(Error::InvalidArgument(
            "cannot register a constant image (undefined phase spectrum)".into(),
        ));
    }
    let (h, w) = fixed.dims();
    let mut f = to_complex(fixed.data());
    let mut m = to_complex(moving.data());
    let mut fft = Fft2::new(h, w);
    fft.forward(&mut f);
    fft.forward(&mut m);

    let mut cross: Vec<Complex64> = m.iter().zip(&f).map(|(a, b)| a * b.conj()).collect();
    let peak_mag = cross.iter().map(|c| c.norm()).fold(0.0, f64::max);
    for c in cross.iter_mut() {
        let n = c.norm();
        *c = if n > SPECTRUM_FLOOR * peak_mag {
            *c / n
        } else {
            Complex64::default()
        };
    }
    fft.inverse(&mut cross);

    let (mut best, mut best_val) = (0usize, f64::NEG_INFINITY);
    for (i, v) in cross.iter().enumerate() {
        if v.re > best_val {
            best = i;
            best_val = v.re;
        }
    }
    let unwrap = |p: usize, n: usize| -> isize {
        if p > n / 2 {
            p as isize - n as isize
        } else {
            p as isize
        }
    };
    Ok(Shift {
        dy: unwrap(best / w, h),
        dx: unwrap(best % w, w),
        confidence: best_val.clamp(0.0, 1.0),
    })
}

/// Translates by `(dy, dx)`; uncovered pixels replicate the nearest edge.
pub fn apply_translation(img: &Image, shift: Shift) -> Result<Image> {
    let (h, w) = img.dims();
    if shift.dy.unsigned_abs() >= h || shift.dx.unsigned_abs() >= w {
        return Err(Error::InvalidArgument(format!(
            "shift ({}, {}) out of range for a {h}x{w} image",
            shift.dy, shift.dx
        )));
    }
    let clamp = |v: isize, n: usize| v.clamp(0, n as isize - 1) as usize;
    let mut data = Vec::with_capacity(h * w);
    for r in 0..h {
        let sr = clamp(r as isize - shift.dy, h);
        for c in 0..w {
            data.push(img.get(sr, clamp(c as isize - shift.dx, w)));
        }
    }
    Image::new(h, w, data)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::blursynth::add_noise;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn texture(h: usize, w: usize, seed: u64) -> Image {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let raw: Vec<f64> = (0..h * w).map(|_| rng.random::<f64>()).collect();
        // light smoothing so the spectrum is not flat white noise
        Image::from_fn(h, w, |r, c| {
            let mut acc = 0.0;
            for (dr, dc) in [(0, 0), (0, 1), (1, 0), (1, 1)] {
                acc += raw[((r + dr) % h) * w + (c + dc) % w];
            }
            acc / 4.0
        })
        .unwrap()
    }

    fn circular_shift(img: &Image, dy: isize, dx: isize) -> Image {
        let (h, w) = img.dims();
        Image::from_fn(h, w, |r, c| {
            let sr = (r as isize - dy).rem_euclid(h as isize) as usize;
            let sc = (c as isize - dx).rem_euclid(w as isize) as usize;
            img.get(sr, sc)
        })
        .unwrap()
    }

    #[test]
    fn identical_images_zero_shift() {
        let img = texture(47, 41, 1);
        let s = register_translation(&img, &img).unwrap();
        assert_eq!((s.dy, s.dx), (0, 0));
        assert!(s.confidence > 0.999);
    }

    #[test]
    fn recovers_circular_shift_and_is_antisymmetric() {
        let img = texture(64, 80, 2);
        let moved = circular_shift(&img, 5, -3);
        let s = register_translation(&img, &moved).unwrap();
        assert_eq!((s.dy, s.dx), (5, -3));
        let back = register_translation(&moved, &img).unwrap();
        assert_eq!((back.dy, back.dx), (-5, 3));
    }

    #[test]
    fn noisy_shift_within_one_pixel() {
        let img = texture(64, 64, 3);
        let moved = add_noise(&circular_shift(&img, -7, 11), 0.02, 5).unwrap();
        let s = register_translation(&img, &moved).unwrap();
        assert!((s.dy + 7).abs() <= 1 && (s.dx - 11).abs() <= 1, "{s:?}");
    }

    #[test]
    fn constant_input_rejected() {
        let img = texture(16, 16, 4);
        let flat = Image::filled(16, 16, 0.5).unwrap();
        assert!(register_translation(&flat, &img).is_err());
        assert!(register_translation(&img, &flat).is_err());
        assert!(register_translation(&img, &texture(16, 17, 4)).is_err());
    }

    #[test]
    fn translation_replicates_edges() {
        let img = Image::from_fn(5, 3, |r, _| r as f64 / 4.0).unwrap();
        let out = apply_translation(&img, Shift::new(1, 0)).unwrap();
        for c in 0..3 {
            assert_eq!(out.get(0, c), img.get(0, c));
            for r in 1..5 {
                assert_eq!(out.get(r, c), img.get(r - 1, c));
            }
        }
        assert_eq!(apply_translation(&img, Shift::new(0, 0)).unwrap(), img);
        assert!(apply_translation(&img, Shift::new(5, 0)).is_err());
        assert!(apply_translation(&img, Shift::new(0, -3)).is_err());
    }

    #[test]
    fn translation_inverse_on_interior() {
        let img = texture(20, 20, 6);
        let s = Shift::new(3, -2);
        let back = apply_translation(&apply_translation(&img, s).unwrap(), s.inverse()).unwrap();
        for r in 3..17 {
            for c in 2..18 {
                assert_eq!(back.get(r, c), img.get(r, c));
            }
        }
    }
}
