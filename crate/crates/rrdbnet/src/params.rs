use deblur_core::{Error, Result};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::real::Real;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NetConfig {
    pub num_rrdb: usize,
    pub base_channels: usize,
    /// Convolutions per RDB, the last being the fusion layer.
    pub dense_layers_per_rdb: usize,
    pub rdb_per_rrdb: usize,
    pub leaky_slope: f64,
    pub residual_scale: f64,
}

impl Default for NetConfig {
    fn default() -> Self {
        Self {
            num_rrdb: 4,
            base_channels: 64,
            dense_layers_per_rdb: 5,
            rdb_per_rrdb: 3,
            leaky_slope: 0.2,
            residual_scale: 1.0,
        }
    }
}

impl NetConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |what: &str| Err(Error::InvalidArgument(format!("net config: {what}")));
        if self.num_rrdb == 0 || self.base_channels == 0 || self.dense_layers_per_rdb == 0 || self.rdb_per_rrdb == 0 {
            return bad("block, layer and channel counts must be >= 1");
        }
        // Backpropagation reads the activation sign off the output.
        if !(self.leaky_slope > 0.0 && self.leaky_slope.is_finite()) {
            return bad("leaky_slope must be positive");
        }
        if !self.residual_scale.is_finite() {
            return bad("residual_scale must be finite");
        }
        Ok(())
    }

    pub(crate) fn layout(&self) -> Layout {
        Layout { cfg: self.clone() }
    }
}

/// Maps convolution roles onto indices of the canonical parameter list. Each
/// convolution owns two consecutive entries, weight then bias.
#[derive(Debug, Clone)]
pub(crate) struct Layout {
    cfg: NetConfig,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) struct ConvShape {
    pub cin: usize,
    pub cout: usize,
}

impl Layout {
    pub const FIRST: usize = 0;

    pub fn rdb_conv(&self, rrdb: usize, rdb: usize, layer: usize) -> usize {
        1 + (rrdb * self.cfg.rdb_per_rrdb + rdb) * self.cfg.dense_layers_per_rdb + layer
    }

    pub fn trunk(&self) -> usize {
        1 + self.cfg.num_rrdb * self.cfg.rdb_per_rrdb * self.cfg.dense_layers_per_rdb
    }

    pub fn post_upsample(&self) -> usize {
        self.trunk() + 1
    }

    pub fn last(&self) -> usize {
        self.trunk() + 2
    }

    /// Dense layer `k` sees the block input plus `k` earlier outputs.
    pub fn dense_shape(&self, layer: usize) -> ConvShape {
        let c = self.cfg.base_channels;
        ConvShape {
            cin: (layer + 1) * c,
            cout: c,
        }
    }

    fn conv_entries(&self) -> Vec<(String, ConvShape, f64)> {
        let c = self.cfg.base_channels;
        let l = self.cfg.dense_layers_per_rdb;
        let mut out = vec![("first_conv".to_string(), ConvShape { cin: 1, cout: c }, 1.0)];
        for i in 0..self.cfg.num_rrdb {
            for j in 0..self.cfg.rdb_per_rrdb {
                for k in 0..l {
                    let gain = if k + 1 == l { 0.1 } else { 1.0 };
                    out.push((format!("rrdb.{i}.rdb.{j}.conv{}", k + 1), self.dense_shape(k), gain));
                }
            }
        }
        out.push(("trunk_conv".into(), ConvShape { cin: c, cout: c }, 1.0));
        out.push(("post_upsample_conv".into(), ConvShape { cin: c, cout: c }, 1.0));
        out.push(("last_conv".into(), ConvShape { cin: c, cout: 1 }, 0.1));
        out
    }
}

/// Name and shape of one parameter tensor.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParamSpec {
    pub name: String,
    pub shape: Vec<usize>,
}

impl ParamSpec {
    pub fn len(&self) -> usize {
        self.shape.iter().product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Parameter specs in canonical order.
pub fn param_specs(cfg: &NetConfig) -> Vec<ParamSpec> {
    let mut specs = Vec::new();
    for (name, s, _) in cfg.layout().conv_entries() {
        specs.push(ParamSpec {
            name: format!("{name}.weight"),
            shape: vec![s.cout, s.cin, 3, 3],
        });
        specs.push(ParamSpec {
            name: format!("{name}.bias"),
            shape: vec![s.cout],
        });
    }
    specs
}

/// Every network parameter, in canonical order. Also used for gradients.
#[derive(Debug, Clone, PartialEq)]
pub struct NetParams<T> {
    config: NetConfig,
    specs: Vec<ParamSpec>,
    values: Vec<Vec<T>>,
}

impl<T: Real> NetParams<T> {
    pub fn zeros(config: &NetConfig) -> Result<Self> {
        config.validate()?;
        let specs = param_specs(config);
        let values = specs.iter().map(|s| vec![T::zero(); s.len()]).collect();
        Ok(Self {
            config: config.clone(),
            specs,
            values,
        })
    }

    /// Uniform fan-in init with Kaiming bounds for the leaky ReLU; fusion
    /// layers and the output head are scaled by 0.1. Biases start at zero.
    pub fn init(config: &NetConfig, seed: u64) -> Result<Self> {
        let mut p = Self::zeros(config)?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let slope = config.leaky_slope;
        for (conv, (_, shape, gain)) in config.layout().conv_entries().into_iter().enumerate() {
            let fan_in = (shape.cin * 9) as f64;
            let bound = gain * (6.0 / ((1.0 + slope * slope) * fan_in)).sqrt();
            for v in p.values[2 * conv].iter_mut() {
                *v = T::from_f64(rng.random_range(-bound..bound));
            }
        }
        Ok(p)
    }

    /// Builds from values given in canonical order, checking every shape.
    pub fn from_values(config: &NetConfig, values: Vec<Vec<T>>) -> Result<Self> {
        let mut p = Self::zeros(config)?;
        if values.len() != p.specs.len() {
            return Err(Error::Shape(format!(
                "{} tensors for {} parameters",
                values.len(),
                p.specs.len()
            )));
        }
        for (spec, v) in p.specs.iter().zip(&values) {
            if v.len() != spec.len() {
                return Err(Error::Shape(format!(
                    "{}: {} values for shape {:?}",
                    spec.name,
                    v.len(),
                    spec.shape
                )));
            }
        }
        p.values = values;
        Ok(p)
    }

    pub fn config(&self) -> &NetConfig {
        &self.config
    }

    pub fn specs(&self) -> &[ParamSpec] {
        &self.specs
    }

    pub fn values(&self) -> &[Vec<T>] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [Vec<T>] {
        &mut self.values
    }

    pub fn get(&self, name: &str) -> Option<&[T]> {
        self.specs
            .iter()
            .position(|s| s.name == name)
            .map(|i| self.values[i].as_slice())
    }

    pub fn get_mut(&mut self, name: &str) -> Option<&mut Vec<T>> {
        self.specs
            .iter()
            .position(|s| s.name == name)
            .map(|i| &mut self.values[i])
    }

    pub fn len(&self) -> usize {
        self.specs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.specs.is_empty()
    }

    pub fn zeros_like(&self) -> Self {
        Self {
            config: self.config.clone(),
            specs: self.specs.clone(),
            values: self.values.iter().map(|v| vec![T::zero(); v.len()]).collect(),
        }
    }

    pub fn cast<U: Real>(&self) -> NetParams<U> {
        NetParams {
            config: self.config.clone(),
            specs: self.specs.clone(),
            values: self
                .values
                .iter()
                .map(|v| v.iter().map(|x| U::from_f64(x.as_f64())).collect())
                .collect(),
        }
    }

    pub fn scale(&mut self, factor: T) {
        for v in self.values.iter_mut().flatten() {
            *v *= factor;
        }
    }

    pub(crate) fn conv(&self, index: usize) -> (&[T], &[T]) {
        (&self.values[2 * index], &self.values[2 * index + 1])
    }

    pub(crate) fn conv_mut(&mut self, index: usize) -> (&mut [T], &mut [T]) {
        let (w, b) = self.values[2 * index..2 * index + 2].split_at_mut(1);
        (&mut w[0], &mut b[0])
    }
}
