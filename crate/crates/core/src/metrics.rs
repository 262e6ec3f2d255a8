//! Full-reference quality metrics: MSE, PSNR and SSIM.

use crate::{Error, Image, Result};

/// `(1/mn) Σ (a − b)²`
pub fn mse(a: &Image, b: &Image) -> Result<f64> {
    a.require_same_dims(b, "mse")?;
    let sum: f64 = a.data().iter().zip(b.data()).map(|(x, y)| (x - y) * (x - y)).sum();
    Ok(sum / a.data().len() as f64)
}

/// PSNR in dB for a known MSE. Zero error yields `f64::INFINITY`.
pub fn psnr_from_mse(mse: f64, max_value: f64) -> f64 {
    if mse <= 0.0 {
        f64::INFINITY
    } else {
        10.0 * (max_value * max_value / mse).log10()
    }
}

/// `10·log10(max² / mse)`; identical images give `f64::INFINITY`.
pub fn psnr(a: &Image, b: &Image, max_value: f64) -> Result<f64> {
    Ok(psnr_from_mse(mse(a, b)?, max_value))
}

#[derive(Debug, Clone, PartialEq)]
pub struct SsimConfig {
    pub window_size: usize,
    pub sigma: f64,
    pub dynamic_range: f64,
}

impl Default for SsimConfig {
    fn default() -> Self {
        Self {
            window_size: 11,
            sigma: 1.5,
            dynamic_range: 1.0,
        }
    }
}

impl SsimConfig {
    pub fn with_window(window_size: usize) -> Self {
        Self {
            window_size,
            ..Self::default()
        }
    }

    pub fn c1(&self) -> f64 {
        (0.01 * self.dynamic_range).powi(2)
    }

    pub fn c2(&self) -> f64 {
        (0.03 * self.dynamic_range).powi(2)
    }

    /// Normalized 1D Gaussian; the 2D window is its outer product.
    pub fn window_1d(&self) -> Result<Vec<f64>> {
        if self.window_size.is_multiple_of(2) || self.window_size == 0 {
            return Err(Error::InvalidArgument(format!(
                "SSIM window size {} must be odd",
                self.window_size
            )));
        }
        if !(self.sigma > 0.0 && self.dynamic_range > 0.0) {
            return Err(Error::InvalidArgument(
                "SSIM sigma and dynamic range must be positive".into(),
            ));
        }
        let r = (self.window_size / 2) as f64;
        let g: Vec<f64> = (0..self.window_size)
            .map(|i| {
                let d = i as f64 - r;
                (-d * d / (2.0 * self.sigma * self.sigma)).exp()
            })
            .collect();
        let s: f64 = g.iter().sum();
        Ok(g.into_iter().map(|v| v / s).collect())
    }
}

/// Separable weighted sum over every window fully inside the image.
fn filter_valid(x: &[f64], h: usize, w: usize, g: &[f64]) -> Vec<f64> {
    let n = g.len();
    let (oh, ow) = (h - n + 1, w - n + 1);
    let mut rows = vec![0.0; h * ow];
    for r in 0..h {
        let src = &x[r * w..(r + 1) * w];
        for c in 0..ow {
            rows[r * ow + c] = g.iter().zip(&src[c..c + n]).map(|(a, b)| a * b).sum();
        }
    }
    let mut out = vec![0.0; oh * ow];
    for r in 0..oh {
        for c in 0..ow {
            out[r * ow + c] = g.iter().enumerate().map(|(k, gk)| gk * rows[(r + k) * ow + c]).sum();
        }
    }
    out
}

/// Mean structural similarity over all valid window positions.
pub fn ssim(a: &Image, b: &Image, config: &SsimConfig) -> Result<f64> {
    a.require_same_dims(b, "ssim")?;
    let g = config.window_1d()?;
    let (h, w) = a.dims();
    if h < g.len() || w < g.len() {
        return Err(Error::Shape(format!(
            "{h}x{w} image is smaller than the {0}x{0} SSIM window",
            g.len()
        )));
    }
    let (c1, c2) = (config.c1(), config.c2());
    let prod = |p: &[f64], q: &[f64]| -> Vec<f64> { p.iter().zip(q).map(|(x, y)| x * y).collect() };
    let (ad, bd) = (a.data(), b.data());
    let mu_a = filter_valid(ad, h, w, &g);
    let mu_b = filter_valid(bd, h, w, &g);
    let e_aa = filter_valid(&prod(ad, ad), h, w, &g);
    let e_bb = filter_valid(&prod(bd, bd), h, w, &g);
    let e_ab = filter_valid(&prod(ad, bd), h, w, &g);

    let mut total = 0.0;
    for i in 0..mu_a.len() {
        let (ma, mb) = (mu_a[i], mu_b[i]);
        let var_a = e_aa[i] - ma * ma;
        let var_b = e_bb[i] - mb * mb;
        let cov = e_ab[i] - ma * mb;
        let num = (2.0 * ma * mb + c1) * (2.0 * cov + c2);
        let den = (ma * ma + mb * mb + c1) * (var_a + var_b + c2);
        total += num / den;
    }
    Ok(total / mu_a.len() as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_image(h: usize, w: usize, seed: u64) -> Image {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Image::from_fn(h, w, |_, _| rng.random::<f64>()).unwrap()
    }

    /// Explicit 2D window loop.
    fn ssim_oracle(a: &Image, b: &Image, cfg: &SsimConfig) -> f64 {
        let g = cfg.window_1d().unwrap();
        let n = g.len();
        let (h, w) = a.dims();
        let (c1, c2) = (cfg.c1(), cfg.c2());
        let mut total = 0.0;
        let mut count = 0;
        for r in 0..=h - n {
            for c in 0..=w - n {
                let (mut ma, mut mb) = (0.0, 0.0);
                for i in 0..n {
                    for j in 0..n {
                        ma += g[i] * g[j] * a.get(r + i, c + j);
                        mb += g[i] * g[j] * b.get(r + i, c + j);
                    }
                }
                let (mut va, mut vb, mut cov) = (0.0, 0.0, 0.0);
                for i in 0..n {
                    for j in 0..n {
                        let (x, y) = (a.get(r + i, c + j) - ma, b.get(r + i, c + j) - mb);
                        va += g[i] * g[j] * x * x;
                        vb += g[i] * g[j] * y * y;
                        cov += g[i] * g[j] * x * y;
                    }
                }
                total += (2.0 * ma * mb + c1) * (2.0 * cov + c2) / ((ma * ma + mb * mb + c1) * (va + vb + c2));
                count += 1;
            }
        }
        total / count as f64
    }

    #[test]
    fn mse_basics() {
        let a = random_image(9, 7, 1);
        assert_eq!(mse(&a, &a).unwrap(), 0.0);
        let base = Image::filled(4, 4, 0.3).unwrap();
        let off = Image::filled(4, 4, 0.4).unwrap();
        assert!((mse(&base, &off).unwrap() - 0.01).abs() < 1e-12);
        let b = random_image(9, 7, 2);
        let mut s = 0.0;
        for r in 0..9 {
            for c in 0..7 {
                s += (a.get(r, c) - b.get(r, c)).powi(2);
            }
        }
        assert!((mse(&a, &b).unwrap() - s / 63.0).abs() < 1e-12);
        assert!(mse(&a, &random_image(7, 9, 2)).is_err());
    }

    #[test]
    fn psnr_values() {
        assert!((psnr_from_mse(0.0008, 1.0) - 30.97).abs() < 0.01);
        assert_eq!(psnr_from_mse(1.0, 1.0), 0.0);
        let a = random_image(5, 5, 3);
        assert_eq!(psnr(&a, &a, 1.0).unwrap(), f64::INFINITY);
        let b = random_image(5, 5, 4);
        let direct = psnr(&a, &b, 1.0).unwrap();
        assert!((direct - psnr_from_mse(mse(&a, &b).unwrap(), 1.0)).abs() < 1e-10);
    }

    #[test]
    fn ssim_identical_is_exactly_one() {
        let a = random_image(30, 25, 5);
        assert_eq!(ssim(&a, &a, &SsimConfig::default()).unwrap(), 1.0);
    }

    #[test]
    fn ssim_constant_pair() {
        let a = Image::filled(16, 16, 0.2).unwrap();
        let b = Image::filled(16, 16, 0.8).unwrap();
        let c1 = 1e-4;
        let expected = (2.0 * 0.2 * 0.8 + c1) / (0.2f64 * 0.2 + 0.8 * 0.8 + c1);
        let got = ssim(&a, &b, &SsimConfig::default()).unwrap();
        assert!((got - expected).abs() < 1e-9);
        assert!((got - 0.4707).abs() < 1e-4);
    }

    #[test]
    fn ssim_anticorrelated_and_matches_oracle() {
        let a = random_image(32, 32, 6);
        let b = Image::new(32, 32, a.data().iter().map(|v| 1.0 - v).collect()).unwrap();
        let cfg = SsimConfig::default();
        let got = ssim(&a, &b, &cfg).unwrap();
        assert!(got < 0.3, "{got}");
        assert!((got - ssim_oracle(&a, &b, &cfg)).abs() < 1e-10);
        let c = random_image(32, 32, 7);
        assert!((ssim(&a, &c, &cfg).unwrap() - ssim_oracle(&a, &c, &cfg)).abs() < 1e-10);
    }

    #[test]
    fn ssim_errors() {
        let small = random_image(8, 20, 1);
        assert!(ssim(&small, &small, &SsimConfig::default()).is_err());
        assert!(ssim(&small, &small, &SsimConfig::with_window(4)).is_err());
    }

    proptest! {
        #[test]
        fn symmetric_and_bounded(s1 in 0u64..500, s2 in 0u64..500) {
            let a = random_image(16, 13, s1);
            let b = random_image(16, 13, s2);
            let cfg = SsimConfig::default();
            prop_assert_eq!(mse(&a, &b).unwrap(), mse(&b, &a).unwrap());
            let (ab, ba) = (ssim(&a, &b, &cfg).unwrap(), ssim(&b, &a, &cfg).unwrap());
            prop_assert!((ab - ba).abs() < 1e-12);
            prop_assert!(ab.abs() <= 1.0);
            prop_assert_eq!(ssim(&a, &a, &cfg).unwrap(), 1.0);
        }

        #[test]
        fn psnr_strictly_decreasing(m1 in 1e-8f64..1.0, m2 in 1e-8f64..1.0) {
            prop_assume!(m1 < m2);
            prop_assert!(psnr_from_mse(m1, 1.0) > psnr_from_mse(m2, 1.0));
        }
    }
}
