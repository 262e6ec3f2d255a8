use std::fmt::Write as _;
use std::path::Path;

use crate::{fsutil, Error, Result};

/// An odd-sided, non-negative point-spread function whose taps sum to one.
#[derive(Debug, Clone, PartialEq)]
pub struct Kernel {
    size: usize,
    taps: Vec<f64>,
    id: String,
}

impl Kernel {
    pub const MIN_SIZE: usize = 3;
    pub const MAX_SIZE: usize = 151;
    const SUM_TOLERANCE: f64 = 1e-9;

    pub fn new(size: usize, taps: Vec<f64>, id: impl Into<String>) -> Result<Self> {
        Self::check_size(size)?;
        if taps.len() != size * size {
            return Err(Error::Shape(format!("{} taps for a {size}x{size} kernel", taps.len())));
        }
        if let Some(t) = taps.iter().find(|t| !t.is_finite() || **t < 0.0) {
            return Err(Error::InvalidArgument(format!(
                "kernel tap {t} is negative or non-finite"
            )));
        }
        let sum: f64 = taps.iter().sum();
        if (sum - 1.0).abs() > Self::SUM_TOLERANCE {
            return Err(Error::InvalidArgument(format!("kernel taps sum to {sum}, expected 1")));
        }
        Ok(Self {
            size,
            taps,
            id: id.into(),
        })
    }

    /// Divides non-negative weights by their sum.
    pub fn normalized(size: usize, weights: Vec<f64>, id: impl Into<String>) -> Result<Self> {
        Self::check_size(size)?;
        if weights.iter().any(|t| !t.is_finite() || *t < 0.0) {
            return Err(Error::InvalidArgument(
                "kernel weights must be finite and non-negative".into(),
            ));
        }
        let sum: f64 = weights.iter().sum();
        if sum <= 0.0 {
            return Err(Error::InvalidArgument("kernel weights sum to zero".into()));
        }
        Self::new(size, weights.into_iter().map(|t| t / sum).collect(), id)
    }

    /// The identity kernel: center tap 1.
    pub fn delta(size: usize) -> Result<Self> {
        Self::check_size(size)?;
        let mut taps = vec![0.0; size * size];
        taps[size * size / 2] = 1.0;
        Self::new(size, taps, format!("delta-{size}"))
    }

    fn check_size(size: usize) -> Result<()> {
        if size.is_multiple_of(2) || !(Self::MIN_SIZE..=Self::MAX_SIZE).contains(&size) {
            return Err(Error::InvalidArgument(format!(
                "kernel size {size} must be odd and within {}..={}",
                Self::MIN_SIZE,
                Self::MAX_SIZE
            )));
        }
        Ok(())
    }

    pub fn size(&self) -> usize {
        self.size
    }

    pub fn radius(&self) -> usize {
        self.size / 2
    }

    pub fn taps(&self) -> &[f64] {
        &self.taps
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn with_id(mut self, id: impl Into<String>) -> Self {
        self.id = id.into();
        self
    }

    /// Tap at offset `(dy, dx)` from the center; zero outside the support.
    pub fn at(&self, dy: isize, dx: isize) -> f64 {
        let r = self.radius() as isize;
        if dy.abs() > r || dx.abs() > r {
            return 0.0;
        }
        self.taps[((dy + r) as usize) * self.size + (dx + r) as usize]
    }

    /// Zero-pads (centered) to a larger odd size.
    pub fn embed(&self, size: usize) -> Result<Kernel> {
        if size < self.size || size.is_multiple_of(2) {
            return Err(Error::InvalidArgument(format!(
                "cannot embed a {0}x{0} kernel into {size}x{size}",
                self.size
            )));
        }
        let off = (size - self.size) / 2;
        let mut taps = vec![0.0; size * size];
        for r in 0..self.size {
            for c in 0..self.size {
                taps[(r + off) * size + c + off] = self.taps[r * self.size + c];
            }
        }
        Ok(Kernel {
            size,
            taps,
            id: self.id.clone(),
        })
    }

    /// L2 distance after centering both kernels on the larger support.
    pub fn l2_distance(&self, other: &Kernel) -> f64 {
        let size = self.size.max(other.size);
        let a = self.embed(size).expect("odd size");
        let b = other.embed(size).expect("odd size");
        a.taps
            .iter()
            .zip(&b.taps)
            .map(|(x, y)| (x - y) * (x - y))
            .sum::<f64>()
            .sqrt()
    }
}

/// Normalized samples of `exp(-(x² + y²) / 2σ²)` on a `2⌈3σ⌉ + 1` grid.
pub fn gaussian_kernel(sigma: f64) -> Result<Kernel> {
    if !(sigma.is_finite() && sigma > 0.0) {
        return Err(Error::InvalidArgument(format!("sigma must be positive, got {sigma}")));
    }
    let radius = (3.0 * sigma).ceil() as usize;
    let size = 2 * radius + 1;
    if size > Kernel::MAX_SIZE {
        return Err(Error::InvalidArgument(format!(
            "sigma {sigma} needs a {size}x{size} kernel, above the cap of {}",
            Kernel::MAX_SIZE
        )));
    }
    let r = radius as f64;
    let denom = 2.0 * sigma * sigma;
    let mut weights = Vec::with_capacity(size * size);
    for y in 0..size {
        for x in 0..size {
            let (dy, dx) = (y as f64 - r, x as f64 - r);
            weights.push((-(dy * dy + dx * dx) / denom).exp());
        }
    }
    Kernel::normalized(size, weights, format!("gauss-sigma-{sigma:.4}"))
}

/// `count` Gaussian kernels with sigmas spaced linearly over `[sigma_min, sigma_max]`.
pub fn gaussian_kernel_bank(sigma_min: f64, sigma_max: f64, count: usize) -> Result<Vec<Kernel>> {
    if !(sigma_min > 0.0 && sigma_min <= sigma_max && sigma_max.is_finite()) || count == 0 {
        return Err(Error::InvalidArgument(format!(
            "invalid sigma range [{sigma_min}, {sigma_max}] with {count} kernels"
        )));
    }
    let step = if count > 1 {
        (sigma_max - sigma_min) / (count - 1) as f64
    } else {
        0.0
    };
    (0..count)
        .map(|i| {
            let sigma = if i + 1 == count && count > 1 {
                sigma_max
            } else {
                sigma_min + step * i as f64
            };
            gaussian_kernel(sigma)
        })
        .collect()
}

const KERN_MAGIC: &str = "KERN v1";

/// Writes the text format: a `KERN v1 <s>` header and `s` rows of `s` reals.
pub fn write_kernel(path: impl AsRef<Path>, kernel: &Kernel) -> Result<()> {
    let s = kernel.size();
    let mut out = format!("{KERN_MAGIC} {s}\n");
    for row in kernel.taps().chunks(s) {
        let line: Vec<String> = row.iter().map(|v| v.to_string()).collect();
        writeln!(out, "{}", line.join(" ")).expect("write to string");
    }
    fsutil::write_atomic(path.as_ref(), out.as_bytes())
}

/// Reads a `KERN v1` file, renormalizing the taps. The file stem becomes the id.
pub fn read_kernel(path: impl AsRef<Path>) -> Result<Kernel> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut lines = text.lines();
    let header = lines.next().unwrap_or_default();
    let size: usize = header
        .strip_prefix(KERN_MAGIC)
        .and_then(|rest| rest.trim().parse().ok())
        .ok_or_else(|| Error::format(path, format!("bad header {header:?}")))?;
    let mut taps = Vec::with_capacity(size * size);
    for (i, line) in lines.filter(|l| !l.trim().is_empty()).enumerate() {
        let row: Vec<f64> = line
            .split_whitespace()
            .map(str::parse)
            .collect::<std::result::Result<_, _>>()
            .map_err(|e| Error::format(path, format!("row {}: {e}", i + 1)))?;
        if row.len() != size {
            return Err(Error::format(
                path,
                format!("row {} has {} values, expected {size}", i + 1, row.len()),
            ));
        }
        taps.extend(row);
    }
    if taps.len() != size * size {
        return Err(Error::format(
            path,
            format!("{} rows, expected {size}", taps.len() / size.max(1)),
        ));
    }
    let id = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    Kernel::normalized(size, taps, id).map_err(|e| Error::format(path, e.to_string()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sigma_one_is_seven_wide_symmetric_peaked() {
        let k = gaussian_kernel(1.0).unwrap();
        assert_eq!(k.size(), 7);
        assert!((k.taps().iter().sum::<f64>() - 1.0).abs() < 1e-12);
        let center = k.at(0, 0);
        assert!(k.taps().iter().all(|&t| t <= center));
        for dy in -3..=3isize {
            for dx in -3..=3isize {
                let v = k.at(dy, dx);
                for (a, b) in [
                    (-dy, dx),
                    (dy, -dx),
                    (dx, dy),
                    (-dx, -dy),
                    (-dy, -dx),
                    (dx, -dy),
                    (-dx, dy),
                ] {
                    assert_eq!(v, k.at(a, b));
                }
            }
        }
    }

    #[test]
    fn size_cap() {
        assert_eq!(gaussian_kernel(25.0).unwrap().size(), 151);
        let err = gaussian_kernel(25.1).unwrap_err();
        assert!(err.to_string().contains("151"));
        assert!(gaussian_kernel(0.0).is_err());
        assert_eq!(gaussian_kernel(0.1).unwrap().size(), 3);
    }

    #[test]
    fn bank_spacing() {
        let bank = gaussian_kernel_bank(1.0, 25.0, 50).unwrap();
        assert_eq!(bank.len(), 50);
        assert_eq!(bank[0].id(), "gauss-sigma-1.0000");
        assert_eq!(bank[49].id(), "gauss-sigma-25.0000");
        assert_eq!(bank[1].id(), format!("gauss-sigma-{:.4}", 1.0 + 24.0 / 49.0));
        assert!((24.0f64 / 49.0 - 0.4898).abs() < 1e-4);

        let single = gaussian_kernel_bank(2.0, 2.0, 1).unwrap();
        assert_eq!(single.len(), 1);
        assert_eq!(single[0], gaussian_kernel(2.0).unwrap());

        assert!(gaussian_kernel_bank(3.0, 2.0, 4).is_err());
        assert!(gaussian_kernel_bank(1.0, 2.0, 0).is_err());
        assert!(gaussian_kernel_bank(0.0, 2.0, 3).is_err());
    }

    #[test]
    fn rejects_invalid_kernels() {
        assert!(Kernel::new(4, vec![1.0 / 16.0; 16], "even").is_err());
        assert!(Kernel::new(3, vec![1.0 / 8.0; 9], "unnormalized").is_err());
        let mut taps = vec![0.0; 9];
        taps[0] = -0.5;
        taps[4] = 1.5;
        assert!(Kernel::new(3, taps, "negative").is_err());
    }

    #[test]
    fn kern_file_roundtrip() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("g.kern");
        let k = gaussian_kernel(1.3).unwrap();
        write_kernel(&p, &k).unwrap();
        let text = std::fs::read_to_string(&p).unwrap();
        assert!(text.starts_with("KERN v1 9\n"));
        assert_eq!(text.lines().count(), 10);
        let back = read_kernel(&p).unwrap();
        assert_eq!(back.id(), "g");
        assert!(back.l2_distance(&k) < 1e-15);
    }

    #[test]
    fn kern_reader_renormalizes_and_validates() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("k.kern");
        std::fs::write(&p, "KERN v1 3\n0 0 0\n0 2 0\n0 0 2\n").unwrap();
        let k = read_kernel(&p).unwrap();
        assert_eq!(k.at(0, 0), 0.5);
        assert_eq!(k.at(1, 1), 0.5);

        for bad in [
            "KERN v2 3\n",
            "KERN v1 3\n1 2\n",
            "KERN v1 3\n0 0 0\n0 -1 0\n0 0 2\n",
            "KERN v1 3\n1 1 1\n",
        ] {
            std::fs::write(&p, bad).unwrap();
            let err = read_kernel(&p).unwrap_err();
            assert!(err.to_string().contains("k.kern"), "{bad:?}: {err}");
        }
    }
}
