use deblur_core::{Error, Result};
use serde::{Deserialize, Serialize};

use crate::params::NetParams;
use crate::real::Real;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AdamConfig {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        Self {
            learning_rate: 1e-4,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
        }
    }
}

/// First and second moment estimates plus the step counter.
#[derive(Debug, Clone, PartialEq)]
pub struct AdamState<T> {
    m: Vec<Vec<T>>,
    v: Vec<Vec<T>>,
    t: u64,
}

impl<T: Real> AdamState<T> {
    pub fn new(params: &NetParams<T>) -> Self {
        let zeros: Vec<Vec<T>> = params.values().iter().map(|v| vec![T::zero(); v.len()]).collect();
        Self {
            m: zeros.clone(),
            v: zeros,
            t: 0,
        }
    }

    pub fn timestep(&self) -> u64 {
        self.t
    }
}

/// One bias-corrected Adam update. Nothing is modified if any gradient is
/// non-finite.
pub fn adam_step<T: Real>(
    params: &mut NetParams<T>,
    grads: &NetParams<T>,
    state: &mut AdamState<T>,
    cfg: &AdamConfig,
) -> Result<()> {
    if grads.specs() != params.specs() || state.m.len() != params.len() {
        return Err(Error::Shape(
            "gradients or optimizer state do not match the parameters".into(),
        ));
    }
    for (spec, g) in grads.specs().iter().zip(grads.values()) {
        if let Some(i) = g.iter().position(|v| !v.is_finite()) {
            return Err(Error::Numeric(format!(
                "non-finite gradient in {} at index {i}",
                spec.name
            )));
        }
    }
    state.t += 1;
    let t = state.t as i32;
    let (b1, b2) = (T::from_f64(cfg.beta1), T::from_f64(cfg.beta2));
    let (c1, c2) = (T::one() - b1, T::one() - b2);
    let m_corr = T::from_f64(1.0 / (1.0 - cfg.beta1.powi(t)));
    let v_corr = T::from_f64(1.0 / (1.0 - cfg.beta2.powi(t)));
    let (lr, eps) = (T::from_f64(cfg.learning_rate), T::from_f64(cfg.eps));
    for (((p, g), m), v) in params
        .values_mut()
        .iter_mut()
        .zip(grads.values())
        .zip(state.m.iter_mut())
        .zip(state.v.iter_mut())
    {
        for i in 0..p.len() {
            let gi = g[i];
            m[i] = b1 * m[i] + c1 * gi;
            v[i] = b2 * v[i] + c2 * gi * gi;
            let step = (m[i] * m_corr) / ((v[i] * v_corr).sqrt() + eps);
            p[i] -= lr * step;
        }
    }
    Ok(())
}
