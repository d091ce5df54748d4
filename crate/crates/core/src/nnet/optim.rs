use serde::{Deserialize, Serialize};

use super::params::EncoderParams;
use crate::error::{Error, Result};
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AdamWConfig {
    pub lr: f64,
    pub weight_decay: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl Default for AdamWConfig {
    fn default() -> Self {
        AdamWConfig {
            lr: 3e-4,
            weight_decay: 0.01,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
        }
    }
}

/// Adaptive-moment optimizer with decoupled weight decay.
///
/// Decay shrinks the weights directly by `lr * weight_decay` and never enters
/// the moment estimates.
#[derive(Debug, Clone, PartialEq)]
pub struct AdamW<T> {
    pub config: AdamWConfig,
    pub step: u64,
    first: Vec<Vec<T>>,
    second: Vec<Vec<T>>,
}

impl<T: Scalar> AdamW<T> {
    pub fn new(config: AdamWConfig) -> Self {
        AdamW {
            config,
            step: 0,
            first: Vec::new(),
            second: Vec::new(),
        }
    }

    /// Updates `params` in place from `grads`; tensors are matched by position.
    pub fn update(&mut self, params: &mut [&mut [T]], grads: &[&[T]]) -> Result<()> {
        if params.len() != grads.len() {
            return Err(Error::Shape("parameter and gradient tensor counts differ".into()));
        }
        for (p, g) in params.iter().zip(grads) {
            if p.len() != g.len() {
                return Err(Error::Shape("parameter and gradient sizes differ".into()));
            }
        }
        if grads.iter().any(|g| g.iter().any(|v| !v.is_finite())) {
            return Err(Error::NonFinite("gradient".into()));
        }
        if self.first.is_empty() {
            self.first = params.iter().map(|p| vec![T::zero(); p.len()]).collect();
            self.second = self.first.clone();
        } else if self.first.len() != params.len() || self.first.iter().zip(params.iter()).any(|(m, p)| m.len() != p.len()) {
            return Err(Error::Shape("optimizer state does not match parameters".into()));
        }
        self.step += 1;
        let c = &self.config;
        let t = self.step as i32;
        let correction1 = 1.0 - c.beta1.powi(t);
        let correction2 = 1.0 - c.beta2.powi(t);
        let b1 = T::from_f64_lossy(c.beta1);
        let b2 = T::from_f64_lossy(c.beta2);
        let one_b1 = T::from_f64_lossy(1.0 - c.beta1);
        let one_b2 = T::from_f64_lossy(1.0 - c.beta2);
        let decay = T::from_f64_lossy(1.0 - c.lr * c.weight_decay);
        let step_size = T::from_f64_lossy(c.lr / correction1);
        let inv_c2 = T::from_f64_lossy(1.0 / correction2);
        let eps = T::from_f64_lossy(c.eps);
        for (((p, g), m), v) in params
            .iter_mut()
            .zip(grads)
            .zip(&mut self.first)
            .zip(&mut self.second)
        {
            for i in 0..p.len() {
                let gi = g[i];
                m[i] = b1 * m[i] + one_b1 * gi;
                v[i] = b2 * v[i] + one_b2 * gi * gi;
                let denom = (v[i] * inv_c2).sqrt() + eps;
                p[i] = p[i] * decay - step_size * m[i] / denom;
            }
        }
        Ok(())
    }

    /// One step over every encoder tensor.
    pub fn step_encoder(&mut self, params: &mut EncoderParams<T>, grads: &EncoderParams<T>) -> Result<()> {
        let grad_views = grads.tensors();
        let grad_slices: Vec<&[T]> = grad_views
            .iter()
            .map(|(_, g)| g.as_slice().expect("standard layout"))
            .collect();
        let mut param_views = params.tensors_mut();
        let mut param_slices: Vec<&mut [T]> = param_views
            .iter_mut()
            .map(|(_, p)| p.as_slice_mut().expect("standard layout"))
            .collect();
        self.update(&mut param_slices, &grad_slices)
    }
}
