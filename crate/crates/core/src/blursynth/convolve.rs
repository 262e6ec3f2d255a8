//! Same-size 2D convolution with half-sample symmetric (mirror) boundaries.
//!
//! `out(i, j) = Σ_{u,v} k(u, v) · x(i − u, j − v)` with `u, v ∈ [−r, r]` and
//! out-of-range indices mirrored about the image edge (`x(−1) = x(0)`).

use rustfft::num_complex::Complex64;

use super::Kernel;
use crate::fft::{to_complex, Fft2};
use crate::{Error, Image, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ConvMethod {
    /// Direct summation for small kernels, FFT otherwise.
    #[default]
    Auto,
    Direct,
    Fft,
}

/// Largest kernel side convolved by direct summation under [`ConvMethod::Auto`].
const DIRECT_MAX_SIZE: usize = 9;

#[inline]
fn reflect(i: isize, n: usize) -> usize {
    let n = n as isize;
    let j = if i < 0 {
        -i - 1
    } else if i >= n {
        2 * n - i - 1
    } else {
        i
    };
    j as usize
}

/// Input extended by `r` mirrored pixels on every side.
fn pad_reflect(img: &Image, r: usize) -> (Vec<f64>, usize, usize) {
    let (h, w) = img.dims();
    let (ph, pw) = (h + 2 * r, w + 2 * r);
    let mut out = Vec::with_capacity(ph * pw);
    for pr in 0..ph {
        let sr = reflect(pr as isize - r as isize, h);
        for pc in 0..pw {
            out.push(img.get(sr, reflect(pc as isize - r as isize, w)));
        }
    }
    (out, ph, pw)
}

pub fn convolve(img: &Image, kernel: &Kernel) -> Result<Image> {
    convolve_with(img, kernel, ConvMethod::Auto)
}

/// Convolves and clamps the result into `[0, 1]`.
pub fn convolve_with(img: &Image, kernel: &Kernel, method: ConvMethod) -> Result<Image> {
    let raw = convolve_raw(img, kernel, method)?;
    Image::from_clamped(img.height(), img.width(), raw)
}

/// Unclamped convolution output, row-major, same size as `img`.
pub fn convolve_raw(img: &Image, kernel: &Kernel, method: ConvMethod) -> Result<Vec<f64>> {
    let (h, w) = img.dims();
    if kernel.size() > h.min(w) {
        return Err(Error::InvalidArgument(format!(
            "{0}x{0} kernel does not fit a {h}x{w} image",
            kernel.size()
        )));
    }
    let use_fft = match method {
        ConvMethod::Auto => kernel.size() > DIRECT_MAX_SIZE,
        ConvMethod::Direct => false,
        ConvMethod::Fft => true,
    };
    Ok(if use_fft {
        convolve_fft(img, kernel)
    } else {
        convolve_direct(img, kernel)
    })
}

fn convolve_direct(img: &Image, kernel: &Kernel) -> Vec<f64> {
    let (h, w) = img.dims();
    let s = kernel.size();
    let r = kernel.radius();
    let (xp, _, pw) = pad_reflect(img, r);
    let taps = kernel.taps();
    let mut out = vec![0.0; h * w];
    // Tap (a, b) reads padded pixel (i + 2r − a, j + 2r − b).
    for a in 0..s {
        for b in 0..s {
            let k = taps[a * s + b];
            if k == 0.0 {
                continue;
            }
            for i in 0..h {
                let src = &xp[(i + 2 * r - a) * pw + 2 * r - b..][..w];
                let dst = &mut out[i * w..(i + 1) * w];
                for (d, x) in dst.iter_mut().zip(src) {
                    *d += k * x;
                }
            }
        }
    }
    out
}

fn convolve_fft(img: &Image, kernel: &Kernel) -> Vec<f64> {
    let (h, w) = img.dims();
    let s = kernel.size();
    let r = kernel.radius();
    let (xp, ph, pw) = pad_reflect(img, r);
    let mut xf = to_complex(&xp);
    let mut kf = vec![Complex64::default(); ph * pw];
    for a in 0..s {
        for b in 0..s {
            let row = (a as isize - r as isize).rem_euclid(ph as isize) as usize;
            let col = (b as isize - r as isize).rem_euclid(pw as isize) as usize;
            kf[row * pw + col].re = kernel.taps()[a * s + b];
        }
    }
    let mut fft = Fft2::new(ph, pw);
    fft.forward(&mut xf);
    fft.forward(&mut kf);
    xf.iter_mut().zip(&kf).for_each(|(x, k)| *x *= k);
    fft.inverse(&mut xf);
    // Circular convolution of the padded image; the centre window never wraps.
    let mut out = Vec::with_capacity(h * w);
    for i in 0..h {
        out.extend(xf[(i + r) * pw + r..][..w].iter().map(|v| v.re));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::blursynth::gaussian_kernel;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_image(h: usize, w: usize, rng: &mut ChaCha8Rng) -> Image {
        Image::from_fn(h, w, |_, _| rng.random::<f64>()).unwrap()
    }

    fn random_kernel(s: usize, rng: &mut ChaCha8Rng) -> Kernel {
        Kernel::normalized(s, (0..s * s).map(|_| rng.random::<f64>()).collect(), "rand").unwrap()
    }

    /// Textbook definition, one pixel and one tap at a time.
    fn oracle(img: &Image, k: &Kernel) -> Vec<f64> {
        let (h, w) = img.dims();
        let r = k.radius() as isize;
        let mut out = vec![0.0; h * w];
        for i in 0..h as isize {
            for j in 0..w as isize {
                let mut acc = 0.0;
                for u in -r..=r {
                    for v in -r..=r {
                        acc += k.at(u, v) * img.get(reflect(i - u, h), reflect(j - v, w));
                    }
                }
                out[(i as usize) * w + j as usize] = acc;
            }
        }
        out
    }

    fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
        a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
    }

    #[test]
    fn reflect_indices() {
        assert_eq!(reflect(-1, 5), 0);
        assert_eq!(reflect(-3, 5), 2);
        assert_eq!(reflect(5, 5), 4);
        assert_eq!(reflect(7, 5), 2);
    }

    #[test]
    fn delta_is_identity() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let img = random_image(12, 9, &mut rng);
        for method in [ConvMethod::Direct, ConvMethod::Fft] {
            let out = convolve_with(&img, &Kernel::delta(5).unwrap(), method).unwrap();
            assert!(max_abs_diff(out.data(), img.data()) < 1e-14);
        }
        assert_eq!(
            convolve_with(&img, &Kernel::delta(3).unwrap(), ConvMethod::Direct).unwrap(),
            img
        );
    }

    #[test]
    fn constant_image_preserved() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let img = Image::filled(20, 20, 0.37).unwrap();
        for s in [3, 7, 15] {
            let k = random_kernel(s, &mut rng);
            let out = convolve(&img, &k).unwrap();
            assert!(out.data().iter().all(|v| (v - 0.37).abs() < 1e-12));
        }
    }

    #[test]
    fn asymmetric_kernel_matches_definition() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let img = random_image(11, 14, &mut rng);
        let mut taps = vec![0.0; 9];
        taps[1] = 1.0; // offset (-1, 0): out(i, j) = x(i + 1, j)
        let k = Kernel::new(3, taps, "shift").unwrap();
        let out = convolve_raw(&img, &k, ConvMethod::Direct).unwrap();
        for i in 0..10 {
            for j in 0..14 {
                assert_eq!(out[i * 14 + j], img.get(i + 1, j));
            }
        }
        assert!(max_abs_diff(&out, &oracle(&img, &k)) < 1e-14);
    }

    #[test]
    fn fft_and_direct_match_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let img = random_image(32, 32, &mut rng);
        let k = random_kernel(5, &mut rng);
        let reference = oracle(&img, &k);
        for method in [ConvMethod::Direct, ConvMethod::Fft] {
            let out = convolve_raw(&img, &k, method).unwrap();
            assert!(max_abs_diff(&out, &reference) < 1e-8, "{method:?}");
        }
    }

    #[test]
    fn kernel_larger_than_image_rejected() {
        let img = Image::filled(6, 20, 0.5).unwrap();
        assert!(convolve(&img, &gaussian_kernel(2.0).unwrap()).is_err());
    }

    #[test]
    fn linear_in_the_image() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let x = random_image(24, 30, &mut rng);
        let y = random_image(24, 30, &mut rng);
        let (a, b) = (0.3, 0.6);
        let mix = Image::new(
            24,
            30,
            x.data().iter().zip(y.data()).map(|(p, q)| a * p + b * q).collect(),
        )
        .unwrap();
        let k = random_kernel(7, &mut rng);
        for method in [ConvMethod::Direct, ConvMethod::Fft] {
            let lhs = convolve_raw(&mix, &k, method).unwrap();
            let cx = convolve_raw(&x, &k, method).unwrap();
            let cy = convolve_raw(&y, &k, method).unwrap();
            let rhs: Vec<f64> = cx.iter().zip(&cy).map(|(p, q)| a * p + b * q).collect();
            assert!(max_abs_diff(&lhs, &rhs) < 1e-8);
        }
    }

    fn total_variation(img: &Image) -> f64 {
        let (h, w) = img.dims();
        let mut tv = 0.0;
        for r in 0..h {
            for c in 0..w {
                if r + 1 < h {
                    tv += (img.get(r + 1, c) - img.get(r, c)).abs();
                }
                if c + 1 < w {
                    tv += (img.get(r, c + 1) - img.get(r, c)).abs();
                }
            }
        }
        tv
    }

    #[test]
    fn gaussian_blur_never_sharpens() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        for sigma in [0.5, 1.0, 2.5] {
            let img = random_image(40, 40, &mut rng);
            let out = convolve(&img, &gaussian_kernel(sigma).unwrap()).unwrap();
            assert!(total_variation(&out) <= total_variation(&img));
        }
    }
}
