//! Orthonormal 2D Haar transform and VisuShrink soft-threshold denoising.
//!
//! Odd-sized bands are extended by repeating the last row or column before
//! each analysis step and cropped back after synthesis, so the transform
//! reconstructs any size exactly.

use crate::{Error, Image, Result};

/// Detail bands of one decomposition level.
#[derive(Debug, Clone, PartialEq)]
pub struct HaarLevel {
    /// Size of the band that was decomposed at this level.
    pub input_dims: (usize, usize),
    pub horizontal: Vec<f64>,
    pub vertical: Vec<f64>,
    pub diagonal: Vec<f64>,
}

impl HaarLevel {
    /// `(rows, cols)` of each detail band.
    pub fn band_dims(&self) -> (usize, usize) {
        (self.input_dims.0.div_ceil(2), self.input_dims.1.div_ceil(2))
    }

    fn bands_mut(&mut self) -> [&mut Vec<f64>; 3] {
        [&mut self.horizontal, &mut self.vertical, &mut self.diagonal]
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct HaarPyramid {
    /// Finest level first.
    pub levels: Vec<HaarLevel>,
    pub approx: Vec<f64>,
    pub approx_dims: (usize, usize),
}

/// One analysis step on an `h`x`w` buffer: `(approx, horizontal, vertical, diagonal)`.
fn analyze(x: &[f64], h: usize, w: usize) -> [Vec<f64>; 4] {
    let (bh, bw) = (h.div_ceil(2), w.div_ceil(2));
    let at = |r: usize, c: usize| x[r.min(h - 1) * w + c.min(w - 1)];
    let mut bands = [
        vec![0.0; bh * bw],
        vec![0.0; bh * bw],
        vec![0.0; bh * bw],
        vec![0.0; bh * bw],
    ];
    for i in 0..bh {
        for j in 0..bw {
            let (a, b) = (at(2 * i, 2 * j), at(2 * i, 2 * j + 1));
            let (c, d) = (at(2 * i + 1, 2 * j), at(2 * i + 1, 2 * j + 1));
            let k = i * bw + j;
            bands[0][k] = 0.5 * (a + b + c + d);
            bands[1][k] = 0.5 * (a - b + c - d);
            bands[2][k] = 0.5 * (a + b - c - d);
            bands[3][k] = 0.5 * (a - b - c + d);
        }
    }
    bands
}

fn synthesize(approx: &[f64], level: &HaarLevel) -> Vec<f64> {
    let (h, w) = level.input_dims;
    let (_, bw) = level.band_dims();
    let mut out = vec![0.0; h * w];
    let mut put = |r: usize, c: usize, v: f64| {
        if r < h && c < w {
            out[r * w + c] = v;
        }
    };
    for k in 0..approx.len() {
        let (i, j) = (k / bw, k % bw);
        let (s, hz, vt, dg) = (approx[k], level.horizontal[k], level.vertical[k], level.diagonal[k]);
        put(2 * i, 2 * j, 0.5 * (s + hz + vt + dg));
        put(2 * i, 2 * j + 1, 0.5 * (s - hz + vt - dg));
        put(2 * i + 1, 2 * j, 0.5 * (s + hz - vt - dg));
        put(2 * i + 1, 2 * j + 1, 0.5 * (s - hz - vt + dg));
    }
    out
}

pub fn haar_forward(img: &Image, levels: usize) -> Result<HaarPyramid> {
    let (h, w) = img.dims();
    if levels == 0 {
        return Err(Error::InvalidArgument("wavelet depth must be at least 1".into()));
    }
    if levels >= usize::BITS as usize || h.min(w) < (1usize << levels) {
        return Err(Error::InvalidArgument(format!(
            "{h}x{w} image is too small for {levels} wavelet levels"
        )));
    }
    let mut current = img.data().to_vec();
    let mut dims = (h, w);
    let mut out = Vec::with_capacity(levels);
    for _ in 0..levels {
        let [approx, horizontal, vertical, diagonal] = analyze(&current, dims.0, dims.1);
        out.push(HaarLevel {
            input_dims: dims,
            horizontal,
            vertical,
            diagonal,
        });
        dims = (dims.0.div_ceil(2), dims.1.div_ceil(2));
        current = approx;
    }
    Ok(HaarPyramid {
        levels: out,
        approx: current,
        approx_dims: dims,
    })
}

/// Exact inverse of [`haar_forward`]; returns unclamped samples.
pub fn haar_inverse(pyr: &HaarPyramid) -> Vec<f64> {
    let mut current = pyr.approx.clone();
    for level in pyr.levels.iter().rev() {
        current = synthesize(&current, level);
    }
    current
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Threshold {
    /// Universal threshold `σ̂·√(2 ln N)`, `σ̂ = median(|finest diagonal|) / 0.6745`.
    Auto,
    Fixed(f64),
}

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

#[inline]
fn soft(c: f64, t: f64) -> f64 {
    c.signum() * (c.abs() - t).max(0.0)
}

pub fn wavelet_denoise(img: &Image, levels: usize, threshold: Threshold) -> Result<Image> {
    let mut pyr = haar_forward(img, levels)?;
    let t = match threshold {
        Threshold::Fixed(t) if t.is_finite() && t >= 0.0 => t,
        Threshold::Fixed(t) => {
            return Err(Error::InvalidArgument(format!("threshold must be >= 0, got {t}")));
        }
        Threshold::Auto => {
            let finest = &pyr.levels[0].diagonal;
            let sigma = median(finest.iter().map(|c| c.abs()).collect()) / 0.6745;
            sigma * (2.0 * (img.data().len() as f64).ln()).sqrt()
        }
    };
    if t > 0.0 {
        for level in &mut pyr.levels {
            for band in level.bands_mut() {
                band.iter_mut().for_each(|c| *c = soft(*c, t));
            }
        }
    }
    Image::from_clamped(img.height(), img.width(), haar_inverse(&pyr))
}
