//! Convolutional classifier over the joint-time plane with hand-written
//! backward passes.
//!
//! Stage order:
//!
//! ```text
//! input [joints, frames, attributes]
//!   -> conv1 -> relu -> maxpool
//!   -> conv2 -> relu -> maxpool
//!   -> flatten
//!   -> fc1 -> relu -> dropout
//!   -> fc2 -> relu -> dropout
//!   -> output dense -> softmax cross-entropy
//! ```
//!
//! Only conv1's time axis is strided by the configured stride; every other
//! stride is 1 and pooling is 2x2 with stride 2.

mod activation;
pub mod checkpoint;
mod conv;
mod dense;
mod loss;
mod pool;

pub use activation::{
    dropout_backward, dropout_forward, relu_backward, relu_forward, DropoutLayer,
};
pub use checkpoint::Checkpoint;
pub use conv::{conv2d_backward, conv2d_forward, conv_output_shape, ConvGrads, ConvLayer};
pub use dense::{dense_backward, DenseGrads, DenseLayer};
pub use loss::{softmax, softmax_cross_entropy};
pub use pool::{maxpool_backward, PoolLayer, PoolOutput};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tensor::{Rng, Tensor};

pub const MAX_STRIDE: usize = 7;

/// Layer sizes. [`Architecture::reference`] gives the full-size network;
/// every field can be shrunk for experiments and tests.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Architecture {
    pub joints: usize,
    pub frames: usize,
    pub attributes: usize,
    pub conv1_filters: usize,
    pub conv1_kernel: (usize, usize),
    /// Time-axis stride of conv1.
    pub stride: usize,
    pub conv2_filters: usize,
    pub conv2_kernel: (usize, usize),
    pub fc1: usize,
    pub fc2: usize,
    pub classes: usize,
    pub keep_prob: f64,
    pub weight_std: f64,
    pub bias_init: f64,
}

impl Architecture {
    pub fn reference(stride: usize, classes: usize) -> Architecture {
        Architecture {
            joints: crate::dataset::JOINT_COUNT,
            frames: crate::preprocess::FEATURE_FRAMES,
            attributes: crate::dataset::ATTRIBUTE_COUNT,
            conv1_filters: 256,
            conv1_kernel: (3, 10),
            stride,
            conv2_filters: 64,
            conv2_kernel: (5, 5),
            fc1: 1024,
            fc2: 256,
            classes,
            keep_prob: 0.5,
            weight_std: 0.1,
            bias_init: 0.1,
        }
    }

    pub fn input_shape(&self) -> [usize; 3] {
        [self.joints, self.frames, self.attributes]
    }

    /// Intermediate shapes, or a configuration error naming the stage and
    /// shape that became empty.
    pub fn shape_plan(&self) -> Result<ShapePlan> {
        if self.stride < 1 || self.stride > MAX_STRIDE {
            return Err(Error::Config(format!(
                "stride {} outside 1..={MAX_STRIDE}",
                self.stride
            )));
        }
        if self.classes < 2 {
            return Err(Error::Config(format!(
                "need at least 2 classes, got {}",
                self.classes
            )));
        }
        let pool = PoolLayer::default();
        let stage = |name: &str, e: Error, shape: [usize; 3]| {
            Error::Config(format!(
                "stage {name} cannot consume shape {shape:?} at stride {}: {e}",
                self.stride
            ))
        };
        let input = self.input_shape();
        let [h, w] = conv_output_shape(input, self.conv1_kernel, (1, self.stride))
            .map_err(|e| stage("conv1", e, input))?;
        let conv1 = [h, w, self.conv1_filters];
        let pool1 = pool
            .output_shape(conv1)
            .map_err(|e| stage("pool1", e, conv1))?;
        let [h, w] = conv_output_shape(pool1, self.conv2_kernel, (1, 1))
            .map_err(|e| stage("conv2", e, pool1))?;
        let conv2 = [h, w, self.conv2_filters];
        let pool2 = pool
            .output_shape(conv2)
            .map_err(|e| stage("pool2", e, conv2))?;
        Ok(ShapePlan {
            input,
            conv1,
            pool1,
            conv2,
            pool2,
            flatten: pool2.iter().product(),
            fc1: self.fc1,
            fc2: self.fc2,
            classes: self.classes,
        })
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ShapePlan {
    pub input: [usize; 3],
    pub conv1: [usize; 3],
    pub pool1: [usize; 3],
    pub conv2: [usize; 3],
    pub pool2: [usize; 3],
    pub flatten: usize,
    pub fc1: usize,
    pub fc2: usize,
    pub classes: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Mode {
    Train,
    Infer,
}

/// Mutable weight and bias slices of one layer's gradient buffers.
pub(crate) struct Gradient<'a> {
    pub weights: &'a mut [f64],
    pub bias: &'a mut [f64],
}

/// Gradient buffers in [`NetworkParams::parameters`] order.
#[derive(Clone, Debug, PartialEq)]
pub struct Gradients {
    tensors: Vec<Tensor>,
}

impl Gradients {
    pub fn tensors(&self) -> &[Tensor] {
        &self.tensors
    }

    pub fn zero(&mut self) {
        for t in &mut self.tensors {
            t.fill(0.0);
        }
    }

    pub fn scale(&mut self, factor: f64) {
        for t in &mut self.tensors {
            t.scale_in_place(factor);
        }
    }

    fn layer(&mut self, index: usize) -> Gradient<'_> {
        let (w, rest) = self.tensors[2 * index..].split_at_mut(1);
        Gradient {
            weights: w[0].data_mut(),
            bias: rest[0].data_mut(),
        }
    }
}

/// Cached activations from one forward pass, consumed by backward.
#[derive(Clone, Debug)]
pub struct ForwardPass {
    mode: Mode,
    input: Tensor,
    conv1_pre: Tensor,
    pool1: PoolOutput,
    conv2_pre: Tensor,
    pool2: PoolOutput,
    flat: Tensor,
    fc1_pre: Tensor,
    fc1_mask: Option<Tensor>,
    fc1_out: Tensor,
    fc2_pre: Tensor,
    fc2_mask: Option<Tensor>,
    fc2_out: Tensor,
    pub logits: Tensor,
}

impl ForwardPass {
    pub fn mode(&self) -> Mode {
        self.mode
    }

    /// Shapes after conv1, pool1, conv2, pool2.
    pub fn stage_shapes(&self) -> [Vec<usize>; 4] {
        [
            self.conv1_pre.shape().to_vec(),
            self.pool1.output.shape().to_vec(),
            self.conv2_pre.shape().to_vec(),
            self.pool2.output.shape().to_vec(),
        ]
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct NetworkParams {
    pub architecture: Architecture,
    pub conv1: ConvLayer,
    pub pool1: PoolLayer,
    pub conv2: ConvLayer,
    pub pool2: PoolLayer,
    pub fc1: DenseLayer,
    pub fc2: DenseLayer,
    pub output: DenseLayer,
    pub dropout: DropoutLayer,
    mode: Mode,
}

fn apply_dropout(
    layer: &DropoutLayer,
    pre_activation: &Tensor,
    rng: Option<&mut Rng>,
) -> Result<(Option<Tensor>, Tensor)> {
    let act = relu_forward(pre_activation);
    match rng {
        Some(rng) => {
            let mask = layer.sample_mask(rng, act.shape())?;
            let out = dropout_forward(&act, &mask)?;
            Ok((Some(mask), out))
        }
        None => Ok((None, act)),
    }
}

impl NetworkParams {
    /// Truncated-normal weights, constant positive biases.
    pub fn init(rng: &Rng, architecture: Architecture) -> Result<NetworkParams> {
        let plan = architecture.shape_plan()?;
        let a = &architecture;
        let std = a.weight_std;
        let b = a.bias_init;
        let conv1 = ConvLayer::init(
            &mut rng.split(0),
            a.conv1_filters,
            a.conv1_kernel,
            a.attributes,
            (1, a.stride),
            std,
            b,
        )?;
        let conv2 = ConvLayer::init(
            &mut rng.split(1),
            a.conv2_filters,
            a.conv2_kernel,
            a.conv1_filters,
            (1, 1),
            std,
            b,
        )?;
        let fc1 = DenseLayer::init(&mut rng.split(2), plan.flatten, a.fc1, std, b)?;
        let fc2 = DenseLayer::init(&mut rng.split(3), a.fc1, a.fc2, std, b)?;
        let output = DenseLayer::init(&mut rng.split(4), a.fc2, a.classes, std, b)?;
        let dropout = DropoutLayer::new(a.keep_prob)?;
        Ok(NetworkParams {
            architecture,
            conv1,
            pool1: PoolLayer::default(),
            conv2,
            pool2: PoolLayer::default(),
            fc1,
            fc2,
            output,
            dropout,
            mode: Mode::Train,
        })
    }

    pub fn mode(&self) -> Mode {
        self.mode
    }

    pub fn set_mode(&mut self, mode: Mode) {
        self.mode = mode;
    }

    /// Learnable tensors in fixed order: conv1, conv2, fc1, fc2, output,
    /// weights before bias.
    pub fn parameters(&self) -> Vec<&Tensor> {
        vec![
            &self.conv1.kernels,
            &self.conv1.bias,
            &self.conv2.kernels,
            &self.conv2.bias,
            &self.fc1.weights,
            &self.fc1.bias,
            &self.fc2.weights,
            &self.fc2.bias,
            &self.output.weights,
            &self.output.bias,
        ]
    }

    pub fn parameters_mut(&mut self) -> Vec<&mut Tensor> {
        vec![
            &mut self.conv1.kernels,
            &mut self.conv1.bias,
            &mut self.conv2.kernels,
            &mut self.conv2.bias,
            &mut self.fc1.weights,
            &mut self.fc1.bias,
            &mut self.fc2.weights,
            &mut self.fc2.bias,
            &mut self.output.weights,
            &mut self.output.bias,
        ]
    }

    pub fn zero_gradients(&self) -> Gradients {
        Gradients {
            tensors: self
                .parameters()
                .into_iter()
                .map(|p| Tensor::zeros(p.shape()).expect("parameter shapes are valid"))
                .collect(),
        }
    }

    /// Full forward pass. In train mode dropout masks are drawn from
    /// `dropout_rng`, which is then required; in inference mode it is ignored.
    pub fn forward(&self, input: &Tensor, dropout_rng: Option<&mut Rng>) -> Result<ForwardPass> {
        input.expect_shape(&self.architecture.input_shape(), "network input")?;
        let mut rng = match self.mode {
            Mode::Train => Some(dropout_rng.ok_or_else(|| {
                Error::State("train-mode forward needs a dropout random stream".into())
            })?),
            Mode::Infer => None,
        };

        let conv1_pre = conv2d_forward(input, &self.conv1)?;
        let pool1 = self.pool1.forward(&relu_forward(&conv1_pre))?;
        let conv2_pre = conv2d_forward(&pool1.output, &self.conv2)?;
        let pool2 = self.pool2.forward(&relu_forward(&conv2_pre))?;
        let flat = pool2.output.reshape(&[pool2.output.len()])?;

        let fc1_pre = self.fc1.forward(&flat)?;
        let (fc1_mask, fc1_out) = apply_dropout(&self.dropout, &fc1_pre, rng.as_deref_mut())?;
        let fc2_pre = self.fc2.forward(&fc1_out)?;
        let (fc2_mask, fc2_out) = apply_dropout(&self.dropout, &fc2_pre, rng)?;
        let logits = self.output.forward(&fc2_out)?;

        Ok(ForwardPass {
            mode: self.mode,
            input: input.clone(),
            conv1_pre,
            pool1,
            conv2_pre,
            pool2,
            flat,
            fc1_pre,
            fc1_mask,
            fc1_out,
            fc2_pre,
            fc2_mask,
            fc2_out,
            logits,
        })
    }

    /// Inference-mode logits regardless of the current mode.
    pub fn infer(&self, input: &Tensor) -> Result<Tensor> {
        if self.mode == Mode::Infer {
            return self.forward(input, None).map(|p| p.logits);
        }
        let mut frozen = self.clone();
        frozen.mode = Mode::Infer;
        frozen.forward(input, None).map(|p| p.logits)
    }

    pub fn forward_batch(&self, inputs: &[&Tensor]) -> Result<Vec<Tensor>> {
        let mut frozen = None;
        let net = if self.mode == Mode::Infer {
            self
        } else {
            frozen.insert(NetworkParams {
                mode: Mode::Infer,
                ..self.clone()
            })
        };
        inputs
            .iter()
            .map(|x| net.forward(x, None).map(|p| p.logits))
            .collect()
    }

    /// Adds the gradient of the loss (given `d loss / d logits`) to `grads`.
    pub fn backward(
        &self,
        pass: &ForwardPass,
        grad_logits: &Tensor,
        grads: &mut Gradients,
    ) -> Result<()> {
        if self.mode != Mode::Train || pass.mode != Mode::Train {
            return Err(Error::State(
                "backward requires a train-mode network and forward pass".into(),
            ));
        }
        grad_logits.expect_shape(pass.logits.shape(), "logit gradient")?;
        let masks = pass
            .fc1_mask
            .as_ref()
            .zip(pass.fc2_mask.as_ref())
            .ok_or_else(|| Error::State("forward pass carries no dropout masks".into()))?;

        let g =
            dense::dense_backward_into(grad_logits, &pass.fc2_out, &self.output, grads.layer(4))?;
        let g = relu_backward(&dropout_backward(&g, masks.1)?, &pass.fc2_pre)?;
        let g = dense::dense_backward_into(&g, &pass.fc1_out, &self.fc2, grads.layer(3))?;
        let g = relu_backward(&dropout_backward(&g, masks.0)?, &pass.fc1_pre)?;
        let g = dense::dense_backward_into(&g, &pass.flat, &self.fc1, grads.layer(2))?;

        let g = g.into_reshaped(pass.pool2.output.shape())?;
        let g = maxpool_backward(&g, &pass.pool2.argmax, pass.conv2_pre.shape())?;
        let g = relu_backward(&g, &pass.conv2_pre)?;
        let g =
            conv::conv2d_backward_into(&g, &pass.pool1.output, &self.conv2, grads.layer(1), true)?
                .expect("input gradient requested");
        let g = maxpool_backward(&g, &pass.pool1.argmax, pass.conv1_pre.shape())?;
        let g = relu_backward(&g, &pass.conv1_pre)?;
        conv::conv2d_backward_into(&g, &pass.input, &self.conv1, grads.layer(0), false)?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) fn small(stride: usize) -> Architecture {
        Architecture {
            frames: 64,
            conv1_filters: 8,
            conv2_filters: 4,
            fc1: 32,
            fc2: 16,
            ..Architecture::reference(stride, 3)
        }
    }

    #[test]
    fn reference_shape_chain_at_stride_five() {
        let plan = Architecture::reference(5, 10).shape_plan().unwrap();
        assert_eq!(plan.conv1, [13, 391, 256]);
        assert_eq!(plan.pool1, [6, 195, 256]);
        assert_eq!(plan.conv2, [2, 191, 64]);
        assert_eq!(plan.pool2, [1, 95, 64]);
        assert_eq!(plan.flatten, 6080);
    }

    #[test]
    fn infeasible_configurations() {
        assert!(matches!(
            Architecture::reference(0, 3).shape_plan(),
            Err(Error::Config(_))
        ));
        assert!(matches!(
            Architecture::reference(8, 3).shape_plan(),
            Err(Error::Config(_))
        ));
        assert!(matches!(
            Architecture::reference(5, 1).shape_plan(),
            Err(Error::Config(_))
        ));
        let err = small(5).shape_plan().unwrap_err().to_string();
        assert!(err.contains("pool2"), "{err}");
    }

    #[test]
    fn init_rules() {
        let net = NetworkParams::init(&Rng::new(1), small(2)).unwrap();
        let params = net.parameters();
        for (i, p) in params.iter().enumerate() {
            if i % 2 == 1 {
                assert!(p.data().iter().all(|&b| b == 0.1));
            } else {
                assert!(p.data().iter().all(|&w| w.abs() <= 0.2));
            }
        }
        assert_eq!(net, NetworkParams::init(&Rng::new(1), small(2)).unwrap());
        let grads = net.zero_gradients();
        for (g, p) in grads.tensors().iter().zip(params) {
            assert_eq!(g.shape(), p.shape());
        }
    }

    #[test]
    fn inference_is_pure() {
        let mut net = NetworkParams::init(&Rng::new(2), small(2)).unwrap();
        let x = Tensor::normal(&mut Rng::new(3), &[15, 64, 4], 0.0, 1.0).unwrap();
        let a = net.infer(&x).unwrap();
        let batch = net.forward_batch(&[&x, &x]).unwrap();
        assert_eq!(batch[0], batch[1]);
        assert_eq!(batch[0], a);
        net.set_mode(Mode::Infer);
        let pass = net.forward(&x, None).unwrap();
        assert_eq!(pass.logits, a);
        let mut grads = net.zero_gradients();
        let g = Tensor::zeros(&[3]).unwrap();
        assert!(matches!(
            net.backward(&pass, &g, &mut grads),
            Err(Error::State(_))
        ));
    }

    #[test]
    fn train_forward_requires_rng() {
        let net = NetworkParams::init(&Rng::new(2), small(2)).unwrap();
        let x = Tensor::zeros(&[15, 64, 4]).unwrap();
        assert!(matches!(net.forward(&x, None), Err(Error::State(_))));
        assert!(net
            .forward(
                &Tensor::zeros(&[15, 63, 4]).unwrap(),
                Some(&mut Rng::new(0))
            )
            .is_err());
    }
}
