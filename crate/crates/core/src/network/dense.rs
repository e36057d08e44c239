use super::Gradient;
use crate::error::{Error, Result};
use crate::tensor::{linalg, Rng, Tensor, TRUNCATION_BOUND};

/// Fully connected layer `y = x W + b` on a flat input vector.
#[derive(Clone, Debug, PartialEq)]
pub struct DenseLayer {
    pub weights: Tensor,
    pub bias: Tensor,
}

impl DenseLayer {
    pub fn init(
        rng: &mut Rng,
        inputs: usize,
        outputs: usize,
        weight_std: f64,
        bias: f64,
    ) -> Result<Self> {
        Ok(DenseLayer {
            weights: Tensor::truncated_normal(
                rng,
                &[inputs, outputs],
                weight_std,
                TRUNCATION_BOUND,
            )?,
            bias: Tensor::full(&[outputs], bias)?,
        })
    }

    pub fn inputs(&self) -> usize {
        self.weights.shape()[0]
    }

    pub fn outputs(&self) -> usize {
        self.weights.shape()[1]
    }

    pub fn forward(&self, x: &Tensor) -> Result<Tensor> {
        if x.len() != self.inputs() {
            return Err(Error::Shape(format!(
                "dense layer expects {} inputs, got {:?}",
                self.inputs(),
                x.shape()
            )));
        }
        let n = self.outputs();
        let mut y = vec![0.0; n];
        linalg::matmul_into(x.data(), self.weights.data(), 1, self.inputs(), n, &mut y);
        for (o, b) in y.iter_mut().zip(self.bias.data()) {
            *o += b;
        }
        Tensor::from_vec(&[n], y)
    }
}

pub(crate) fn dense_backward_into(
    grad_out: &Tensor,
    x: &Tensor,
    layer: &DenseLayer,
    grads: Gradient<'_>,
) -> Result<Tensor> {
    let (m, n) = (layer.inputs(), layer.outputs());
    if grad_out.len() != n || x.len() != m {
        return Err(Error::Shape(format!(
            "dense backward: layer {m}x{n}, input {:?}, upstream {:?}",
            x.shape(),
            grad_out.shape()
        )));
    }
    let g = grad_out.data();
    for (b, v) in grads.bias.iter_mut().zip(g) {
        *b += v;
    }
    linalg::matmul_at_b_acc(x.data(), g, 1, m, n, grads.weights);
    let mut grad_x = vec![0.0; m];
    linalg::matmul_a_bt_into(g, layer.weights.data(), 1, n, m, &mut grad_x);
    Tensor::from_vec(x.shape(), grad_x)
}

#[derive(Clone, Debug, PartialEq)]
pub struct DenseGrads {
    pub input: Tensor,
    pub weights: Tensor,
    pub bias: Tensor,
}

pub fn dense_backward(grad_out: &Tensor, x: &Tensor, layer: &DenseLayer) -> Result<DenseGrads> {
    let mut weights = Tensor::zeros(layer.weights.shape())?;
    let mut bias = Tensor::zeros(layer.bias.shape())?;
    let input = dense_backward_into(
        grad_out,
        x,
        layer,
        Gradient {
            weights: weights.data_mut(),
            bias: bias.data_mut(),
        },
    )?;
    Ok(DenseGrads {
        input,
        weights,
        bias,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_weights() {
        let layer = DenseLayer {
            weights: Tensor::from_vec(&[2, 2], vec![1.0, 0.0, 0.0, 1.0]).unwrap(),
            bias: Tensor::zeros(&[2]).unwrap(),
        };
        let x = Tensor::from_vec(&[2], vec![3.0, -4.0]).unwrap();
        assert_eq!(layer.forward(&x).unwrap(), x);
        assert!(layer.forward(&Tensor::zeros(&[3]).unwrap()).is_err());
    }

    #[test]
    fn backward_closed_form() {
        let layer = DenseLayer {
            weights: Tensor::from_vec(&[2, 3], vec![1.0, 2.0, 3.0, 4.0, 5.0, 6.0]).unwrap(),
            bias: Tensor::zeros(&[3]).unwrap(),
        };
        let x = Tensor::from_vec(&[2], vec![0.5, -1.0]).unwrap();
        let g = Tensor::from_vec(&[3], vec![1.0, 0.0, -1.0]).unwrap();
        let grads = dense_backward(&g, &x, &layer).unwrap();
        assert_eq!(grads.input.data(), &[1.0 - 3.0, 4.0 - 6.0]);
        assert_eq!(grads.weights.data(), &[0.5, 0.0, -0.5, -1.0, 0.0, 1.0]);
        assert_eq!(grads.bias, g);
    }
}
