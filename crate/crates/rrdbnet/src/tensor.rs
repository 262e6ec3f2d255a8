use deblur_core::{Error, Result};

use crate::real::Real;

/// Dense `[batch, channels, height, width]` tensor, width innermost.
#[derive(Debug, Clone, PartialEq)]
pub struct Tensor4<T> {
    dims: [usize; 4],
    data: Vec<T>,
}

impl<T: Real> Tensor4<T> {
    pub fn zeros(dims: [usize; 4]) -> Result<Self> {
        check_dims(dims)?;
        Ok(Self {
            dims,
            data: vec![T::zero(); dims.iter().product()],
        })
    }

    pub fn from_vec(dims: [usize; 4], data: Vec<T>) -> Result<Self> {
        check_dims(dims)?;
        if data.len() != dims.iter().product::<usize>() {
            return Err(Error::Shape(format!("{} values for dims {dims:?}", data.len())));
        }
        if data.iter().any(|v| !v.is_finite()) {
            return Err(Error::Numeric("tensor contains non-finite values".into()));
        }
        Ok(Self { dims, data })
    }

    pub fn dims(&self) -> [usize; 4] {
        self.dims
    }

    pub fn data(&self) -> &[T] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [T] {
        &mut self.data
    }

    pub fn into_data(self) -> Vec<T> {
        self.data
    }

    /// All channels of one batch element.
    pub fn sample(&self, i: usize) -> &[T] {
        let len = self.dims[1] * self.dims[2] * self.dims[3];
        &self.data[i * len..(i + 1) * len]
    }

    pub fn map(&self, f: impl Fn(T) -> T) -> Self {
        Self {
            dims: self.dims,
            data: self.data.iter().map(|&v| f(v)).collect(),
        }
    }

    pub fn cast<U: Real>(&self) -> Tensor4<U> {
        Tensor4 {
            dims: self.dims,
            data: self.data.iter().map(|v| U::from_f64(v.as_f64())).collect(),
        }
    }
}

fn check_dims(dims: [usize; 4]) -> Result<()> {
    if dims.contains(&0) {
        return Err(Error::Shape(format!("tensor dims must be >= 1, got {dims:?}")));
    }
    Ok(())
}

/// Activations with a one-pixel zero border per channel plane, the layout all
/// convolutions read from and write into.
#[derive(Debug, Clone)]
pub(crate) struct Padded<T> {
    pub n: usize,
    pub c: usize,
    pub h: usize,
    pub w: usize,
    pub data: Vec<T>,
}

impl<T: Real> Padded<T> {
    pub fn zeros(n: usize, c: usize, h: usize, w: usize) -> Self {
        Self {
            n,
            c,
            h,
            w,
            data: vec![T::zero(); n * c * (h + 2) * (w + 2)],
        }
    }

    pub fn plane(&self) -> usize {
        (self.h + 2) * (self.w + 2)
    }

    pub fn sample_len(&self) -> usize {
        self.c * self.plane()
    }

    /// Channels `c0..c1` of sample `i`.
    pub fn channels(&self, i: usize, c0: usize, c1: usize) -> &[T] {
        let (p, s) = (self.plane(), i * self.sample_len());
        &self.data[s + c0 * p..s + c1 * p]
    }

    pub fn channels_mut(&mut self, i: usize, c0: usize, c1: usize) -> &mut [T] {
        let (p, s) = (self.plane(), i * self.sample_len());
        &mut self.data[s + c0 * p..s + c1 * p]
    }

    pub fn from_tensor(t: &Tensor4<T>) -> Self {
        let [n, c, h, w] = t.dims();
        let mut out = Self::zeros(n, c, h, w);
        for (plane, src) in out
            .data
            .chunks_exact_mut((h + 2) * (w + 2))
            .zip(t.data().chunks_exact(h * w))
        {
            for r in 0..h {
                plane[(r + 1) * (w + 2) + 1..][..w].copy_from_slice(&src[r * w..][..w]);
            }
        }
        out
    }

    pub fn to_tensor(&self) -> Tensor4<T> {
        let (h, w) = (self.h, self.w);
        let mut data = Vec::with_capacity(self.n * self.c * h * w);
        for plane in self.data.chunks_exact(self.plane()) {
            for r in 0..h {
                data.extend_from_slice(&plane[(r + 1) * (w + 2) + 1..][..w]);
            }
        }
        Tensor4 {
            dims: [self.n, self.c, h, w],
            data,
        }
    }
}

/// Zeroes the border ring of every `(h+2)×(w+2)` plane in `buf`.
pub(crate) fn zero_borders<T: Real>(buf: &mut [T], h: usize, w: usize) {
    let pw = w + 2;
    for plane in buf.chunks_exact_mut((h + 2) * pw) {
        plane[..pw].fill(T::zero());
        plane[(h + 1) * pw..].fill(T::zero());
        for r in 1..=h {
            plane[r * pw] = T::zero();
            plane[r * pw + w + 1] = T::zero();
        }
    }
}
