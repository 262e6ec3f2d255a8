//! Layer kernels. Convolutions are 3×3 cross-correlations with zero padding 1:
//! `y[o, i, j] = b[o] + Σ_{c, dy, dx} w[o, c, dy, dx] · x[c, i + dy − 1, j + dx − 1]`
//! with weights laid out `[out, in, 3, 3]`.
//!
//! Internally every activation plane carries a one-pixel zero border. In that
//! layout the nine taps are nine GEMMs over shifted views of the same buffer:
//! output column `t = i·(w+2) + j` reads input offset `t + dy·(w+2) + dx`. The
//! two columns per row with `j ≥ w` land on the border and are discarded.

use deblur_core::{Error, Result};

use crate::real::{gemm, Real, View};
use crate::tensor::{zero_borders, Padded, Tensor4};

fn span(h: usize, w: usize) -> usize {
    h * (w + 2) - 2
}

/// One sample: `x` holds `cin` padded planes, `y` receives `cout` padded planes.
#[allow(clippy::too_many_arguments)]
pub(crate) fn conv_forward<T: Real>(
    x: &[T],
    cin: usize,
    h: usize,
    w: usize,
    weight: &[T],
    bias: &[T],
    cout: usize,
    y: &mut [T],
) {
    let (pw, plane, n) = (w + 2, (h + 2) * (w + 2), span(h, w));
    debug_assert_eq!(x.len(), cin * plane);
    debug_assert_eq!(y.len(), cout * plane);
    let yv = View {
        rows: cout,
        cols: n,
        rs: plane,
        cs: 1,
    };
    for tap in 0..9 {
        let off = (tap / 3) * pw + tap % 3;
        gemm(
            &weight[tap..],
            View {
                rows: cout,
                cols: cin,
                rs: cin * 9,
                cs: 9,
            },
            &x[off..],
            View {
                rows: cin,
                cols: n,
                rs: plane,
                cs: 1,
            },
            if tap == 0 { T::zero() } else { T::one() },
            &mut y[pw + 1..],
            yv,
        );
    }
    zero_borders(y, h, w);
    for (plane_buf, &b) in y.chunks_exact_mut(plane).zip(bias) {
        for r in 1..=h {
            for v in &mut plane_buf[r * pw + 1..r * pw + 1 + w] {
                *v += b;
            }
        }
    }
}

/// Accumulates weight, bias and (optionally) input gradients for one sample.
/// `dy` must have zero borders; `dx` borders receive garbage.
#[allow(clippy::too_many_arguments)]
pub(crate) fn conv_backward<T: Real>(
    x: &[T],
    cin: usize,
    h: usize,
    w: usize,
    weight: &[T],
    cout: usize,
    dy: &[T],
    dweight: &mut [T],
    dbias: &mut [T],
    dx: Option<&mut [T]>,
) {
    let (pw, plane, n) = (w + 2, (h + 2) * (w + 2), span(h, w));
    let dyv = View {
        rows: cout,
        cols: n,
        rs: plane,
        cs: 1,
    };
    let dy_in = &dy[pw + 1..];
    for (db, p) in dbias.iter_mut().zip(dy.chunks_exact(plane)) {
        *db += p.iter().fold(T::zero(), |a, &v| a + v);
    }
    for tap in 0..9 {
        let off = (tap / 3) * pw + tap % 3;
        gemm(
            dy_in,
            dyv,
            &x[off..],
            View {
                rows: n,
                cols: cin,
                rs: 1,
                cs: plane,
            },
            T::one(),
            &mut dweight[tap..],
            View {
                rows: cout,
                cols: cin,
                rs: cin * 9,
                cs: 9,
            },
        );
    }
    if let Some(dx) = dx {
        for tap in 0..9 {
            let off = (tap / 3) * pw + tap % 3;
            gemm(
                &weight[tap..],
                View {
                    rows: cin,
                    cols: cout,
                    rs: 9,
                    cs: cin * 9,
                },
                dy_in,
                dyv,
                T::one(),
                &mut dx[off..],
                View {
                    rows: cin,
                    cols: n,
                    rs: plane,
                    cs: 1,
                },
            );
        }
    }
}

pub(crate) fn leaky_relu_inplace<T: Real>(v: &mut [T], slope: T) {
    for x in v {
        if *x < T::zero() {
            *x *= slope;
        }
    }
}

/// Chain rule through a leaky ReLU given its output `y`. With a positive slope
/// the sign of `y` is the sign of the input; `y = 0` takes the positive branch.
pub(crate) fn leaky_relu_backward<T: Real>(grad: &mut [T], y: &[T], slope: T) {
    for (g, &v) in grad.iter_mut().zip(y) {
        if v < T::zero() {
            *g *= slope;
        }
    }
}

pub(crate) fn upsample2<T: Real>(x: &Padded<T>) -> Padded<T> {
    let (h, w) = (x.h, x.w);
    let mut out = Padded::zeros(x.n, x.c, 2 * h, 2 * w);
    let (ip, op) = (x.plane(), out.plane());
    for (src, dst) in x.data.chunks_exact(ip).zip(out.data.chunks_exact_mut(op)) {
        for r in 0..2 * h {
            let s = &src[(r / 2 + 1) * (w + 2) + 1..];
            let d = &mut dst[(r + 1) * (2 * w + 2) + 1..];
            for c in 0..2 * w {
                d[c] = s[c / 2];
            }
        }
    }
    out
}

pub(crate) fn upsample2_backward<T: Real>(dout: &Padded<T>) -> Padded<T> {
    let (h, w) = (dout.h / 2, dout.w / 2);
    let mut dx = Padded::zeros(dout.n, dout.c, h, w);
    let (ip, op) = (dx.plane(), dout.plane());
    for (dst, src) in dx.data.chunks_exact_mut(ip).zip(dout.data.chunks_exact(op)) {
        for r in 0..2 * h {
            let s = &src[(r + 1) * (2 * w + 2) + 1..];
            let d = &mut dst[(r / 2 + 1) * (w + 2) + 1..];
            for c in 0..2 * w {
                d[c / 2] += s[c];
            }
        }
    }
    dx
}

/// 2×2 max pooling, stride 2. Returns the pooled tensor and, per output
/// element, which cell of the window won (row-major, first maximum).
pub(crate) fn maxpool2<T: Real>(x: &Padded<T>) -> (Padded<T>, Vec<u8>) {
    let (h, w) = (x.h / 2, x.w / 2);
    let mut out = Padded::zeros(x.n, x.c, h, w);
    let mut arg = Vec::with_capacity(x.n * x.c * h * w);
    let (ip, op, ipw) = (x.plane(), out.plane(), x.w + 2);
    for (src, dst) in x.data.chunks_exact(ip).zip(out.data.chunks_exact_mut(op)) {
        for r in 0..h {
            for c in 0..w {
                let base = (2 * r + 1) * ipw + 2 * c + 1;
                let cells = [src[base], src[base + 1], src[base + ipw], src[base + ipw + 1]];
                let mut best = 0;
                for k in 1..4 {
                    if cells[k] > cells[best] {
                        best = k;
                    }
                }
                dst[(r + 1) * (w + 2) + c + 1] = cells[best];
                arg.push(best as u8);
            }
        }
    }
    (out, arg)
}

pub(crate) fn maxpool2_backward<T: Real>(dout: &Padded<T>, arg: &[u8]) -> Padded<T> {
    let (h, w) = (dout.h, dout.w);
    let mut dx = Padded::zeros(dout.n, dout.c, 2 * h, 2 * w);
    let (ip, op, ipw) = (dx.plane(), dout.plane(), 2 * w + 2);
    let mut k = 0;
    for (dst, src) in dx.data.chunks_exact_mut(ip).zip(dout.data.chunks_exact(op)) {
        for r in 0..h {
            for c in 0..w {
                let a = arg[k] as usize;
                k += 1;
                let base = (2 * r + 1) * ipw + 2 * c + 1;
                dst[base + (a / 2) * ipw + a % 2] = src[(r + 1) * (w + 2) + c + 1];
            }
        }
    }
    dx
}

fn require_same<T: Real>(a: &Tensor4<T>, b: &Tensor4<T>) -> Result<()> {
    if a.dims() != b.dims() {
        return Err(Error::Shape(format!("{:?} vs {:?}", a.dims(), b.dims())));
    }
    Ok(())
}

/// Mean squared error, accumulated in `f64`.
pub fn mse_loss<T: Real>(pred: &Tensor4<T>, target: &Tensor4<T>) -> Result<f64> {
    require_same(pred, target)?;
    let sum: f64 = pred
        .data()
        .iter()
        .zip(target.data())
        .map(|(p, t)| {
            let d = p.as_f64() - t.as_f64();
            d * d
        })
        .sum();
    Ok(sum / pred.data().len() as f64)
}

/// `∂ mse / ∂ pred`.
pub fn mse_loss_grad<T: Real>(pred: &Tensor4<T>, target: &Tensor4<T>) -> Result<Tensor4<T>> {
    require_same(pred, target)?;
    let scale = T::from_f64(2.0 / pred.data().len() as f64);
    let data = pred
        .data()
        .iter()
        .zip(target.data())
        .map(|(&p, &t)| scale * (p - t))
        .collect();
    Tensor4::from_vec(pred.dims(), data)
}

/// Standalone 3×3, padding-1 convolution of a whole batch.
pub fn conv2d<T: Real>(x: &Tensor4<T>, weight: &[T], bias: &[T], out_channels: usize) -> Result<Tensor4<T>> {
    let [n, cin, h, w] = x.dims();
    if weight.len() != out_channels * cin * 9 || bias.len() != out_channels {
        return Err(Error::Shape(format!(
            "conv {cin}->{out_channels} needs {} weights and {out_channels} biases, got {} and {}",
            out_channels * cin * 9,
            weight.len(),
            bias.len()
        )));
    }
    let xp = Padded::from_tensor(x);
    let mut y = Padded::zeros(n, out_channels, h, w);
    for i in 0..n {
        conv_forward(
            xp.channels(i, 0, cin),
            cin,
            h,
            w,
            weight,
            bias,
            out_channels,
            y.channels_mut(i, 0, out_channels),
        );
    }
    Ok(y.to_tensor())
}

pub fn leaky_relu<T: Real>(x: &Tensor4<T>, slope: T) -> Tensor4<T> {
    x.map(|v| if v < T::zero() { slope * v } else { v })
}

/// Nearest-neighbour ×2 upsampling.
pub fn upsample_nearest2<T: Real>(x: &Tensor4<T>) -> Tensor4<T> {
    upsample2(&Padded::from_tensor(x)).to_tensor()
}

pub fn maxpool2x2<T: Real>(x: &Tensor4<T>) -> Result<Tensor4<T>> {
    let [_, _, h, w] = x.dims();
    if h % 2 != 0 || w % 2 != 0 {
        return Err(Error::Shape(format!("maxpool needs even dims, got {h}x{w}")));
    }
    Ok(maxpool2(&Padded::from_tensor(x)).0.to_tensor())
}
