use std::path::Path;
use std::time::Instant;

use deblur_core::blursynth::DatasetManifest;
use deblur_core::imagecore::load_image;
use deblur_core::{Error, Image, Result};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::adam::{adam_step, AdamConfig, AdamState};
use crate::checkpoint::save_checkpoint;
use crate::net::{loss_and_gradients, net_forward};
use crate::ops::mse_loss;
use crate::params::{NetConfig, NetParams};
use crate::tensor::Tensor4;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub batch_size: usize,
    pub learning_rate: f64,
    pub epochs: usize,
    /// Seeds initialization, the train/validation split and batch order.
    pub seed: u64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    pub validation_fraction: f64,
    /// Stop after this many optimizer steps even mid-epoch.
    pub max_steps: Option<usize>,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            batch_size: 16,
            learning_rate: 1e-4,
            epochs: 1,
            seed: 0,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            validation_fraction: 0.1,
            max_steps: None,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        let ok = self.batch_size >= 1
            && self.learning_rate.is_finite()
            && self.learning_rate >= 0.0
            && (0.0..1.0).contains(&self.validation_fraction)
            && (0.0..1.0).contains(&self.beta1)
            && (0.0..1.0).contains(&self.beta2)
            && self.eps > 0.0;
        if !ok {
            return Err(Error::InvalidArgument(format!("invalid training config {self:?}")));
        }
        Ok(())
    }

    fn adam(&self) -> AdamConfig {
        AdamConfig {
            learning_rate: self.learning_rate,
            beta1: self.beta1,
            beta2: self.beta2,
            eps: self.eps,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochReport {
    pub epoch: usize,
    pub steps: usize,
    /// Mean of the batch losses of this epoch.
    pub train_loss: f64,
    pub validation_mse: Option<f64>,
    pub wall_seconds: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainingReport {
    pub seed: u64,
    pub net_config: NetConfig,
    pub train_config: TrainConfig,
    pub train_pairs: usize,
    pub validation_pairs: usize,
    pub steps: usize,
    /// Batch loss of every optimizer step, measured before its update.
    pub step_losses: Vec<f64>,
    pub epochs: Vec<EpochReport>,
}

/// Aligned training example: network input and its target.
#[derive(Debug, Clone)]
pub struct TrainingPair {
    pub blur: Image,
    pub sharp: Image,
}

/// Loads every pair listed in a dataset manifest (paths relative to it).
pub fn load_pairs(manifest_path: &Path) -> Result<Vec<TrainingPair>> {
    let manifest = DatasetManifest::read(manifest_path)?;
    let base = manifest_path.parent().unwrap_or(Path::new("."));
    manifest
        .pairs
        .iter()
        .map(|p| {
            Ok(TrainingPair {
                blur: load_image(base.join(&p.blur))?,
                sharp: load_image(base.join(&p.sharp))?,
            })
        })
        .collect()
}

fn stack(images: impl Iterator<Item = Image>, h: usize, w: usize) -> Result<Tensor4<f32>> {
    let mut data = Vec::new();
    let mut n = 0;
    for img in images {
        data.extend(img.data().iter().map(|&v| v as f32));
        n += 1;
    }
    Tensor4::from_vec([n, 1, h, w], data)
}

fn batch(pairs: &[TrainingPair], idx: &[usize], h: usize, w: usize) -> Result<(Tensor4<f32>, Tensor4<f32>)> {
    Ok((
        stack(idx.iter().map(|&i| pairs[i].blur.clone()), h, w)?,
        stack(idx.iter().map(|&i| pairs[i].sharp.clone()), h, w)?,
    ))
}

/// Elementwise MSE of the network over the given pairs.
pub fn evaluate(params: &NetParams<f32>, pairs: &[TrainingPair], idx: &[usize], batch_size: usize) -> Result<f64> {
    let Some(first) = idx.first() else {
        return Err(Error::InvalidArgument("no pairs to evaluate".into()));
    };
    let (h, w) = pairs[*first].blur.dims();
    let mut weighted = 0.0;
    for chunk in idx.chunks(batch_size.max(1)) {
        let (x, y) = batch(pairs, chunk, h, w)?;
        weighted += mse_loss(&net_forward(params, &x)?, &y)? * chunk.len() as f64;
    }
    Ok(weighted / idx.len() as f64)
}

/// Trains from scratch on in-memory pairs. `progress` sees `(step, loss)`
/// after every optimizer step.
pub fn train_pairs(
    pairs: &[TrainingPair],
    net: &NetConfig,
    cfg: &TrainConfig,
    mut progress: impl FnMut(usize, f64),
) -> Result<(NetParams<f32>, TrainingReport)> {
    cfg.validate()?;
    if pairs.len() < cfg.batch_size {
        return Err(Error::InvalidArgument(format!(
            "{} pairs is fewer than one batch of {}",
            pairs.len(),
            cfg.batch_size
        )));
    }
    let (h, w) = pairs[0].blur.dims();
    if h % 2 != 0 || w % 2 != 0 {
        return Err(Error::Shape(format!("patches must have even dims, got {h}x{w}")));
    }
    if let Some(p) = pairs
        .iter()
        .find(|p| p.blur.dims() != (h, w) || p.sharp.dims() != (h, w))
    {
        return Err(Error::Shape(format!(
            "all patches must be {h}x{w}, found {:?}/{:?}",
            p.blur.dims(),
            p.sharp.dims()
        )));
    }

    let mut params = NetParams::<f32>::init(net, cfg.seed)?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    rng.set_stream(1);
    let mut order: Vec<usize> = (0..pairs.len()).collect();
    order.shuffle(&mut rng);
    let n_val = (pairs.len() as f64 * cfg.validation_fraction).floor() as usize;
    let (val_idx, train_idx) = order.split_at(n_val);
    let mut train_idx = train_idx.to_vec();

    let adam = cfg.adam();
    let mut state = AdamState::new(&params);
    let mut report = TrainingReport {
        seed: cfg.seed,
        net_config: net.clone(),
        train_config: cfg.clone(),
        train_pairs: train_idx.len(),
        validation_pairs: val_idx.len(),
        steps: 0,
        step_losses: Vec::new(),
        epochs: Vec::new(),
    };
    let limit = cfg.max_steps.unwrap_or(usize::MAX);

    for epoch in 0..cfg.epochs {
        if report.steps >= limit {
            break;
        }
        let started = Instant::now();
        train_idx.shuffle(&mut rng);
        let mut losses = Vec::new();
        for (b, chunk) in train_idx.chunks(cfg.batch_size).enumerate() {
            if report.steps >= limit {
                break;
            }
            let (x, y) = batch(pairs, chunk, h, w)?;
            let (loss, grads) = loss_and_gradients(&params, &x, &y)?;
            if !loss.is_finite() {
                return Err(Error::Numeric(format!("non-finite loss at epoch {epoch}, batch {b}")));
            }
            adam_step(&mut params, &grads, &mut state, &adam)
                .map_err(|e| Error::Numeric(format!("epoch {epoch}, batch {b}: {e}")))?;
            report.steps += 1;
            report.step_losses.push(loss);
            losses.push(loss);
            progress(report.steps, loss);
        }
        let validation_mse = if val_idx.is_empty() {
            None
        } else {
            Some(evaluate(&params, pairs, val_idx, cfg.batch_size)?)
        };
        report.epochs.push(EpochReport {
            epoch,
            steps: losses.len(),
            train_loss: losses.iter().sum::<f64>() / losses.len().max(1) as f64,
            validation_mse,
            wall_seconds: started.elapsed().as_secs_f64(),
        });
    }
    Ok((params, report))
}

/// Trains on a synthesized dataset and writes the final parameters.
pub fn train(
    manifest_path: &Path,
    net: &NetConfig,
    cfg: &TrainConfig,
    out_checkpoint: &Path,
    progress: impl FnMut(usize, f64),
) -> Result<TrainingReport> {
    let pairs = load_pairs(manifest_path)?;
    let (params, report) = train_pairs(&pairs, net, cfg, progress)?;
    save_checkpoint(out_checkpoint, &params)?;
    Ok(report)
}
