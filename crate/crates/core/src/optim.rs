//! Parameter-update rules applied uniformly to weights, biases, and
//! trainable activation parameters.

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum OptimError {
    #[error("parameter/gradient length mismatch: {params} vs {grads}")]
    ShapeMismatch { params: usize, grads: usize },
    #[error("learning rate must be positive, got {0}")]
    BadLearningRate(f64),
}

/// Plain gradient descent: p <- p - lr * g, elementwise.
pub fn sgd_step(params: &mut [f64], grads: &[f64], lr: f64) -> Result<(), OptimError> {
    if params.len() != grads.len() {
        return Err(OptimError::ShapeMismatch {
            params: params.len(),
            grads: grads.len(),
        });
    }
    if lr.is_nan() || lr <= 0.0 {
        return Err(OptimError::BadLearningRate(lr));
    }
    for (p, &g) in params.iter_mut().zip(grads) {
        *p -= lr * g;
    }
    Ok(())
}

/// Adam hyperparameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AdamConfig {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        AdamConfig {
            lr: 0.001,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
        }
    }
}

/// Per-coordinate moment estimates plus the shared step counter.
#[derive(Debug, Clone)]
pub struct AdamState {
    cfg: AdamConfig,
    m: Vec<f64>,
    v: Vec<f64>,
    t: u64,
}

impl AdamState {
    pub fn new(dim: usize, cfg: AdamConfig) -> Self {
        AdamState {
            cfg,
            m: vec![0.0; dim],
            v: vec![0.0; dim],
            t: 0,
        }
    }

    pub fn step_count(&self) -> u64 {
        self.t
    }

    pub fn config(&self) -> AdamConfig {
        self.cfg
    }

    /// One bias-corrected Adam update; the step counter increments once per
    /// call.
    pub fn step(&mut self, params: &mut [f64], grads: &[f64]) -> Result<(), OptimError> {
        if params.len() != self.m.len() || grads.len() != self.m.len() {
            return Err(OptimError::ShapeMismatch {
                params: params.len(),
                grads: grads.len(),
            });
        }
        self.t += 1;
        let AdamConfig {
            lr,
            beta1,
            beta2,
            epsilon,
        } = self.cfg;
        let bc1 = 1.0 - beta1.powi(self.t as i32);
        let bc2 = 1.0 - beta2.powi(self.t as i32);
        for i in 0..params.len() {
            let g = grads[i];
            self.m[i] = beta1 * self.m[i] + (1.0 - beta1) * g;
            self.v[i] = beta2 * self.v[i] + (1.0 - beta2) * g * g;
            let m_hat = self.m[i] / bc1;
            let v_hat = self.v[i] / bc2;
            params[i] -= lr * m_hat / (v_hat.sqrt() + epsilon);
        }
        Ok(())
    }
}

/// One-coordinate convenience wrapper around [`AdamState::step`].
pub fn adam_step(
    state: &mut AdamState,
    params: &mut [f64],
    grads: &[f64],
) -> Result<(), OptimError> {
    state.step(params, grads)
}
