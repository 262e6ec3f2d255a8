//! Minimal 2D complex FFT over row-major buffers.

use rustfft::num_complex::Complex64;
use rustfft::FftPlanner;

pub(crate) struct Fft2 {
    h: usize,
    w: usize,
    planner: FftPlanner<f64>,
}

impl Fft2 {
    pub(crate) fn new(h: usize, w: usize) -> Self {
        Self {
            h,
            w,
            planner: FftPlanner::new(),
        }
    }

    pub(crate) fn forward(&mut self, buf: &mut [Complex64]) {
        self.transform(buf, false);
    }

    /// Inverse transform including the `1 / (h * w)` normalization.
    pub(crate) fn inverse(&mut self, buf: &mut [Complex64]) {
        self.transform(buf, true);
        let scale = 1.0 / (self.h * self.w) as f64;
        buf.iter_mut().for_each(|v| *v *= scale);
    }

    fn transform(&mut self, buf: &mut [Complex64], inverse: bool) {
        let (h, w) = (self.h, self.w);
        debug_assert_eq!(buf.len(), h * w);
        let row_fft = if inverse {
            self.planner.plan_fft_inverse(w)
        } else {
            self.planner.plan_fft_forward(w)
        };
        row_fft.process(buf);

        let col_fft = if inverse {
            self.planner.plan_fft_inverse(h)
        } else {
            self.planner.plan_fft_forward(h)
        };
        let mut col = vec![Complex64::default(); h];
        for c in 0..w {
            for r in 0..h {
                col[r] = buf[r * w + c];
            }
            col_fft.process(&mut col);
            for r in 0..h {
                buf[r * w + c] = col[r];
            }
        }
    }
}

pub(crate) fn to_complex(data: &[f64]) -> Vec<Complex64> {
    data.iter().map(|&v| Complex64::new(v, 0.0)).collect()
}
