//! Forward and reverse passes.
//!
//! Graph: `first_conv → RRDB × num_rrdb → trunk_conv → (+ first_conv output)
//! → nearest ×2 → post_upsample_conv → leaky ReLU → maxpool 2×2 → last_conv`.
//! An RDB runs `L − 1` conv + leaky ReLU layers over the running concatenation
//! of its input and all earlier outputs, fuses all `L·C` channels with a final
//! conv and adds the input back. An RRDB chains its RDBs and adds its own input.

use deblur_core::{Error, Result};

use crate::ops::{
    conv_backward, conv_forward, leaky_relu_backward, leaky_relu_inplace, maxpool2, maxpool2_backward, mse_loss,
    mse_loss_grad, upsample2, upsample2_backward,
};
use crate::params::{Layout, NetParams};
use crate::real::Real;
use crate::tensor::{zero_borders, Padded, Tensor4};

/// Dense feature buffer of one RDB: the input in channels `0..C`, then the
/// activated output of each dense layer.
#[derive(Debug, Clone)]
struct RdbCache<T> {
    feat: Padded<T>,
}

/// Activations recorded by [`forward_train`] for [`backward`].
#[derive(Debug, Clone)]
pub struct ForwardCache<T> {
    input: Padded<T>,
    rrdbs: Vec<Vec<RdbCache<T>>>,
    body: Padded<T>,
    up: Padded<T>,
    post: Padded<T>,
    pool_arg: Vec<u8>,
    pooled: Padded<T>,
}

struct Ctx<'a, T> {
    params: &'a NetParams<T>,
    layout: Layout,
    c: usize,
    layers: usize,
    slope: T,
    scale: T,
}

impl<'a, T: Real> Ctx<'a, T> {
    fn new(params: &'a NetParams<T>) -> Self {
        let cfg = params.config();
        Self {
            params,
            layout: cfg.layout(),
            c: cfg.base_channels,
            layers: cfg.dense_layers_per_rdb,
            slope: T::from_f64(cfg.leaky_slope),
            scale: T::from_f64(cfg.residual_scale),
        }
    }

    fn conv(&self, index: usize, x: &Padded<T>, cin: usize, cout: usize) -> Padded<T> {
        let (w, b) = self.params.conv(index);
        let mut y = Padded::zeros(x.n, cout, x.h, x.w);
        for s in 0..x.n {
            conv_forward(
                x.channels(s, 0, cin),
                cin,
                x.h,
                x.w,
                w,
                b,
                cout,
                y.channels_mut(s, 0, cout),
            );
        }
        y
    }

    fn conv_back(
        &self,
        index: usize,
        x: &Padded<T>,
        cin: usize,
        cout: usize,
        dy: &Padded<T>,
        grads: &mut NetParams<T>,
        want_dx: bool,
    ) -> Option<Padded<T>> {
        let (w, _) = self.params.conv(index);
        let (dw, db) = grads.conv_mut(index);
        let mut dx = want_dx.then(|| Padded::zeros(x.n, cin, x.h, x.w));
        for s in 0..x.n {
            conv_backward(
                x.channels(s, 0, cin),
                cin,
                x.h,
                x.w,
                w,
                cout,
                dy.channels(s, 0, cout),
                dw,
                db,
                dx.as_mut().map(|d| d.channels_mut(s, 0, cin)),
            );
        }
        if let Some(d) = dx.as_mut() {
            zero_borders(&mut d.data, d.h, d.w);
        }
        dx
    }

    fn rdb(&self, rrdb: usize, rdb: usize, x: &Padded<T>) -> (Padded<T>, RdbCache<T>) {
        let (c, l) = (self.c, self.layers);
        let (h, w) = (x.h, x.w);
        let mut feat = Padded::zeros(x.n, l * c, h, w);
        for s in 0..x.n {
            feat.channels_mut(s, 0, c).copy_from_slice(x.channels(s, 0, c));
        }
        let plane = feat.plane();
        for k in 0..l - 1 {
            let (wt, b) = self.params.conv(self.layout.rdb_conv(rrdb, rdb, k));
            let cin = self.layout.dense_shape(k).cin;
            for s in 0..x.n {
                let (inp, out) = feat.channels_mut(s, 0, cin + c).split_at_mut(cin * plane);
                conv_forward(inp, cin, h, w, wt, b, c, out);
                leaky_relu_inplace(out, self.slope);
            }
        }
        let mut out = self.conv(self.layout.rdb_conv(rrdb, rdb, l - 1), &feat, l * c, c);
        for (o, &xi) in out.data.iter_mut().zip(&x.data) {
            *o = xi + self.scale * *o;
        }
        (out, RdbCache { feat })
    }

    fn rdb_back(
        &self,
        rrdb: usize,
        rdb: usize,
        cache: &RdbCache<T>,
        dout: &Padded<T>,
        grads: &mut NetParams<T>,
    ) -> Padded<T> {
        let (c, l) = (self.c, self.layers);
        let feat = &cache.feat;
        let (h, w) = (feat.h, feat.w);
        let mut dfused = dout.clone();
        for v in dfused.data.iter_mut() {
            *v *= self.scale;
        }
        let mut dfeat = self
            .conv_back(
                self.layout.rdb_conv(rrdb, rdb, l - 1),
                feat,
                l * c,
                c,
                &dfused,
                grads,
                true,
            )
            .expect("dx requested");
        let plane = feat.plane();
        for k in (0..l - 1).rev() {
            let index = self.layout.rdb_conv(rrdb, rdb, k);
            let cin = self.layout.dense_shape(k).cin;
            let (wt, _) = self.params.conv(index);
            let (dw, db) = grads.conv_mut(index);
            for s in 0..feat.n {
                let (dx, dy) = dfeat.channels_mut(s, 0, cin + c).split_at_mut(cin * plane);
                zero_borders(dy, h, w);
                leaky_relu_backward(dy, feat.channels(s, cin, cin + c), self.slope);
                conv_backward(feat.channels(s, 0, cin), cin, h, w, wt, c, dy, dw, db, Some(dx));
            }
        }
        let mut dx = Padded::zeros(dout.n, c, h, w);
        for s in 0..dout.n {
            let d = dx.channels_mut(s, 0, c);
            d.copy_from_slice(dfeat.channels(s, 0, c));
            for (v, &g) in d.iter_mut().zip(dout.channels(s, 0, c)) {
                *v += g;
            }
        }
        zero_borders(&mut dx.data, h, w);
        dx
    }

    fn rrdb(&self, rrdb: usize, x: &Padded<T>) -> (Padded<T>, Vec<RdbCache<T>>) {
        let mut caches = Vec::new();
        let mut cur = x.clone();
        for j in 0..self.params.config().rdb_per_rrdb {
            let (next, cache) = self.rdb(rrdb, j, &cur);
            caches.push(cache);
            cur = next;
        }
        for (o, &xi) in cur.data.iter_mut().zip(&x.data) {
            *o = xi + self.scale * *o;
        }
        (cur, caches)
    }

    fn rrdb_back(&self, rrdb: usize, caches: &[RdbCache<T>], dout: &Padded<T>, grads: &mut NetParams<T>) -> Padded<T> {
        let mut d = dout.clone();
        for v in d.data.iter_mut() {
            *v *= self.scale;
        }
        for (j, cache) in caches.iter().enumerate().rev() {
            d = self.rdb_back(rrdb, j, cache, &d, grads);
        }
        for (v, &g) in d.data.iter_mut().zip(&dout.data) {
            *v += g;
        }
        d
    }

    fn forward(&self, x: &Tensor4<T>) -> (Tensor4<T>, ForwardCache<T>) {
        let c = self.c;
        let cfg = self.params.config();
        let input = Padded::from_tensor(x);
        let f0 = self.conv(Layout::FIRST, &input, 1, c);
        let mut body = f0.clone();
        let mut rrdbs = Vec::with_capacity(cfg.num_rrdb);
        for i in 0..cfg.num_rrdb {
            let (next, caches) = self.rrdb(i, &body);
            rrdbs.push(caches);
            body = next;
        }
        let mut g = self.conv(self.layout.trunk(), &body, c, c);
        for (v, &f) in g.data.iter_mut().zip(&f0.data) {
            *v += f;
        }
        let up = upsample2(&g);
        let mut post = self.conv(self.layout.post_upsample(), &up, c, c);
        leaky_relu_inplace(&mut post.data, self.slope);
        let (pooled, pool_arg) = maxpool2(&post);
        let out = self.conv(self.layout.last(), &pooled, c, 1).to_tensor();
        (
            out,
            ForwardCache {
                input,
                rrdbs,
                body,
                up,
                post,
                pool_arg,
                pooled,
            },
        )
    }

    fn backward(&self, cache: &ForwardCache<T>, dpred: &Tensor4<T>) -> NetParams<T> {
        let c = self.c;
        let mut grads = self.params.zeros_like();
        let dp = Padded::from_tensor(dpred);
        let dpooled = self
            .conv_back(self.layout.last(), &cache.pooled, c, 1, &dp, &mut grads, true)
            .expect("dx requested");
        let mut dpost = maxpool2_backward(&dpooled, &cache.pool_arg);
        leaky_relu_backward(&mut dpost.data, &cache.post.data, self.slope);
        let dup = self
            .conv_back(self.layout.post_upsample(), &cache.up, c, c, &dpost, &mut grads, true)
            .expect("dx requested");
        let dg = upsample2_backward(&dup);
        let mut dbody = self
            .conv_back(self.layout.trunk(), &cache.body, c, c, &dg, &mut grads, true)
            .expect("dx requested");
        for (i, caches) in cache.rrdbs.iter().enumerate().rev() {
            dbody = self.rrdb_back(i, caches, &dbody, &mut grads);
        }
        let mut df0 = dg;
        for (v, &g) in df0.data.iter_mut().zip(&dbody.data) {
            *v += g;
        }
        self.conv_back(Layout::FIRST, &cache.input, 1, c, &df0, &mut grads, false);
        grads
    }
}

fn check_net_input<T: Real>(x: &Tensor4<T>) -> Result<()> {
    let [_, c, h, w] = x.dims();
    if c != 1 {
        return Err(Error::Shape(format!("network input must have 1 channel, got {c}")));
    }
    if h % 2 != 0 || w % 2 != 0 {
        return Err(Error::Shape(format!("network input dims must be even, got {h}x{w}")));
    }
    Ok(())
}

fn check_features<T: Real>(params: &NetParams<T>, x: &Tensor4<T>) -> Result<()> {
    let c = params.config().base_channels;
    if x.dims()[1] != c {
        return Err(Error::Shape(format!("expected {c} channels, got {}", x.dims()[1])));
    }
    Ok(())
}

/// Full network on a `[n, 1, h, w]` batch with even `h`, `w`.
pub fn net_forward<T: Real>(params: &NetParams<T>, x: &Tensor4<T>) -> Result<Tensor4<T>> {
    check_net_input(x)?;
    Ok(Ctx::new(params).forward(x).0)
}

/// Like [`net_forward`], also recording what [`backward`] needs.
pub fn forward_train<T: Real>(params: &NetParams<T>, x: &Tensor4<T>) -> Result<(Tensor4<T>, ForwardCache<T>)> {
    check_net_input(x)?;
    Ok(Ctx::new(params).forward(x))
}

/// Parameter gradients given `∂loss/∂output`.
pub fn backward<T: Real>(params: &NetParams<T>, cache: &ForwardCache<T>, dpred: &Tensor4<T>) -> Result<NetParams<T>> {
    let [n, c, h, w] = dpred.dims();
    if (n, c, h, w) != (cache.input.n, 1, cache.input.h, cache.input.w) {
        return Err(Error::Shape(format!(
            "output gradient dims {:?} do not match the recorded pass",
            dpred.dims()
        )));
    }
    Ok(Ctx::new(params).backward(cache, dpred))
}

/// MSE loss of one batch and its parameter gradients.
pub fn loss_and_gradients<T: Real>(
    params: &NetParams<T>,
    x: &Tensor4<T>,
    target: &Tensor4<T>,
) -> Result<(f64, NetParams<T>)> {
    let (pred, cache) = forward_train(params, x)?;
    let loss = mse_loss(&pred, target)?;
    let grads = backward(params, &cache, &mse_loss_grad(&pred, target)?)?;
    Ok((loss, grads))
}

/// A single RDB (`rdb` within RRDB `rrdb`) applied to `base_channels` features.
pub fn rdb_forward<T: Real>(params: &NetParams<T>, rrdb: usize, rdb: usize, x: &Tensor4<T>) -> Result<Tensor4<T>> {
    check_features(params, x)?;
    check_block(params, rrdb, Some(rdb))?;
    Ok(Ctx::new(params).rdb(rrdb, rdb, &Padded::from_tensor(x)).0.to_tensor())
}

pub fn rrdb_forward<T: Real>(params: &NetParams<T>, rrdb: usize, x: &Tensor4<T>) -> Result<Tensor4<T>> {
    check_features(params, x)?;
    check_block(params, rrdb, None)?;
    Ok(Ctx::new(params).rrdb(rrdb, &Padded::from_tensor(x)).0.to_tensor())
}

fn check_block<T: Real>(params: &NetParams<T>, rrdb: usize, rdb: Option<usize>) -> Result<()> {
    let cfg = params.config();
    if rrdb >= cfg.num_rrdb || rdb.is_some_and(|j| j >= cfg.rdb_per_rrdb) {
        return Err(Error::InvalidArgument(format!("no block rrdb {rrdb} rdb {rdb:?}")));
    }
    Ok(())
}
