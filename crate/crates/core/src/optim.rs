//! Adam with bias-corrected moment estimates.
//!
//! Per element, at step `t` (incremented before use):
//!
//! ```text
//! m     <- b1 m + (1 - b1) g
//! v     <- b2 v + (1 - b2) g^2
//! m_hat  = m / (1 - b1^t)
//! v_hat  = v / (1 - b2^t)
//! theta <- theta - lr * m_hat / (sqrt(v_hat) + eps)
//! ```

use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tensor::{read_tensor, write_tensor, Tensor};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AdamConfig {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        AdamConfig {
            learning_rate: 1e-3,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct AdamState {
    pub config: AdamConfig,
    pub step: u64,
    pub m: Vec<Tensor>,
    pub v: Vec<Tensor>,
}

impl AdamState {
    pub fn new(config: AdamConfig, params: &[&Tensor]) -> AdamState {
        let zeros = || -> Vec<Tensor> {
            params
                .iter()
                .map(|p| Tensor::zeros(p.shape()).expect("parameter shapes are valid"))
                .collect()
        };
        AdamState {
            config,
            step: 0,
            m: zeros(),
            v: zeros(),
        }
    }

    /// Applies one update to every parameter tensor, in order. A
    /// non-finite or mis-shaped gradient aborts before anything changes.
    pub fn step(&mut self, params: &mut [&mut Tensor], grads: &[Tensor]) -> Result<()> {
        if params.len() != self.m.len() || grads.len() != self.m.len() {
            return Err(Error::Optimizer(format!(
                "optimizer tracks {} tensors, got {} parameters and {} gradients",
                self.m.len(),
                params.len(),
                grads.len()
            )));
        }
        for (i, (p, g)) in params.iter().zip(grads).enumerate() {
            if p.shape() != g.shape() || p.shape() != self.m[i].shape() {
                return Err(Error::Optimizer(format!(
                    "tensor {i}: parameter {:?}, gradient {:?}, state {:?}",
                    p.shape(),
                    g.shape(),
                    self.m[i].shape()
                )));
            }
            if !g.is_finite() {
                return Err(Error::Optimizer(format!(
                    "non-finite gradient in tensor {i}"
                )));
            }
        }

        self.step += 1;
        let AdamConfig {
            learning_rate,
            beta1,
            beta2,
            epsilon,
        } = self.config;
        let t = self.step as i32;
        let correction1 = 1.0 - beta1.powi(t);
        let correction2 = 1.0 - beta2.powi(t);
        for ((p, g), (m, v)) in params
            .iter_mut()
            .zip(grads)
            .zip(self.m.iter_mut().zip(self.v.iter_mut()))
        {
            let p = p.data_mut();
            for (((theta, &g), m), v) in p
                .iter_mut()
                .zip(g.data())
                .zip(m.data_mut().iter_mut())
                .zip(v.data_mut().iter_mut())
            {
                *m = beta1 * *m + (1.0 - beta1) * g;
                *v = beta2 * *v + (1.0 - beta2) * g * g;
                let m_hat = *m / correction1;
                let v_hat = *v / correction2;
                *theta -= learning_rate * m_hat / (v_hat.sqrt() + epsilon);
            }
        }
        Ok(())
    }

    /// Moment tensors `m[0..n]` then `v[0..n]`, tensor codec each.
    pub fn write_moments<W: Write>(&self, w: &mut W) -> std::io::Result<()> {
        for t in self.m.iter().chain(&self.v) {
            write_tensor(w, t)?;
        }
        Ok(())
    }

    pub fn read_moments<R: Read>(
        config: AdamConfig,
        step: u64,
        shapes: &[Vec<usize>],
        r: &mut R,
    ) -> Result<AdamState> {
        let mut read = |what: &str| -> Result<Vec<Tensor>> {
            shapes
                .iter()
                .enumerate()
                .map(|(i, shape)| {
                    let t = read_tensor(r)?;
                    if t.shape() != shape.as_slice() {
                        return Err(Error::Checkpoint(format!(
                            "optimizer {what}[{i}] has shape {:?}, expected {shape:?}",
                            t.shape()
                        )));
                    }
                    Ok(t)
                })
                .collect()
        };
        let m = read("m")?;
        let v = read("v")?;
        Ok(AdamState { config, step, m, v })
    }
}
