use crate::error::{Error, Result};
use crate::tensor::{Rng, Tensor};

pub fn relu_forward(x: &Tensor) -> Tensor {
    x.map(|v| v.max(0.0))
}

/// Subgradient at zero is taken as zero.
pub fn relu_backward(grad_out: &Tensor, x: &Tensor) -> Result<Tensor> {
    grad_out.zip_map(x, |g, v| if v > 0.0 { g } else { 0.0 })
}

/// Inverted dropout: at train time units are kept with probability
/// `keep_prob` and scaled by `1 / keep_prob`; inference is the identity.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DropoutLayer {
    pub keep_prob: f64,
}

impl DropoutLayer {
    pub fn new(keep_prob: f64) -> Result<Self> {
        if !(keep_prob > 0.0 && keep_prob <= 1.0) {
            return Err(Error::Parameter(format!(
                "keep_prob must lie in (0, 1], got {keep_prob}"
            )));
        }
        Ok(DropoutLayer { keep_prob })
    }

    /// Scaled keep mask: entries are `0` or `1 / keep_prob`.
    pub fn sample_mask(&self, rng: &mut Rng, shape: &[usize]) -> Result<Tensor> {
        let mut mask = Tensor::zeros(shape)?;
        let scale = 1.0 / self.keep_prob;
        for m in mask.data_mut() {
            if self.keep_prob >= 1.0 || rng.bernoulli(self.keep_prob) {
                *m = scale;
            }
        }
        Ok(mask)
    }
}

pub fn dropout_forward(x: &Tensor, mask: &Tensor) -> Result<Tensor> {
    x.zip_map(mask, |v, m| v * m)
}

pub fn dropout_backward(grad_out: &Tensor, mask: &Tensor) -> Result<Tensor> {
    grad_out.zip_map(mask, |g, m| g * m)
}
