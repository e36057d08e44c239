//! Valid-padding 2-D convolution over `[height, width, channels]` inputs,
//! lowered to a matrix product through an im2col patch matrix.
//!
//! Kernels are stored `[filters, kh, kw, channels]`, so flattening a kernel
//! gives the same `(row, column, channel)` order as an im2col patch row.

use super::Gradient;
use crate::error::{Error, Result};
use crate::tensor::{linalg, Rng, Tensor, TRUNCATION_BOUND};

#[derive(Clone, Debug, PartialEq)]
pub struct ConvLayer {
    pub kernels: Tensor,
    pub bias: Tensor,
    pub stride: (usize, usize),
}

#[derive(Clone, Debug, PartialEq)]
pub struct ConvGrads {
    pub input: Tensor,
    pub kernels: Tensor,
    pub bias: Tensor,
}

/// Output extents of a valid convolution, or an error naming the shapes.
pub fn conv_output_shape(
    input: [usize; 3],
    kernel: (usize, usize),
    stride: (usize, usize),
) -> Result<[usize; 2]> {
    let [h, w, _] = input;
    let (kh, kw) = kernel;
    let (sh, sw) = stride;
    if sh == 0 || sw == 0 {
        return Err(Error::Shape("convolution stride must be >= 1".into()));
    }
    if h < kh || w < kw {
        return Err(Error::Shape(format!(
            "kernel {kh}x{kw} does not fit input {h}x{w}"
        )));
    }
    Ok([(h - kh) / sh + 1, (w - kw) / sw + 1])
}

impl ConvLayer {
    /// Truncated-normal kernels and constant bias.
    pub fn init(
        rng: &mut Rng,
        filters: usize,
        kernel: (usize, usize),
        channels: usize,
        stride: (usize, usize),
        weight_std: f64,
        bias: f64,
    ) -> Result<ConvLayer> {
        Ok(ConvLayer {
            kernels: Tensor::truncated_normal(
                rng,
                &[filters, kernel.0, kernel.1, channels],
                weight_std,
                TRUNCATION_BOUND,
            )?,
            bias: Tensor::full(&[filters], bias)?,
            stride,
        })
    }

    pub fn filters(&self) -> usize {
        self.kernels.shape()[0]
    }

    pub fn kernel_size(&self) -> (usize, usize) {
        (self.kernels.shape()[1], self.kernels.shape()[2])
    }

    pub fn channels(&self) -> usize {
        self.kernels.shape()[3]
    }

    fn geometry(&self, input: &Tensor) -> Result<Geometry> {
        if input.rank() != 3 {
            return Err(Error::Shape(format!(
                "convolution input must be [h, w, c], got {:?}",
                input.shape()
            )));
        }
        let s = input.shape();
        if s[2] != self.channels() {
            return Err(Error::Shape(format!(
                "convolution expects {} channels, input has {}",
                self.channels(),
                s[2]
            )));
        }
        let (kh, kw) = self.kernel_size();
        let [oh, ow] = conv_output_shape([s[0], s[1], s[2]], (kh, kw), self.stride)?;
        Ok(Geometry {
            w: s[1],
            c: s[2],
            kh,
            kw,
            sh: self.stride.0,
            sw: self.stride.1,
            oh,
            ow,
        })
    }
}

struct Geometry {
    w: usize,
    c: usize,
    kh: usize,
    kw: usize,
    sh: usize,
    sw: usize,
    oh: usize,
    ow: usize,
}

impl Geometry {
    fn patch_len(&self) -> usize {
        self.kh * self.kw * self.c
    }

    fn positions(&self) -> usize {
        self.oh * self.ow
    }

    fn im2col(&self, input: &[f64]) -> Vec<f64> {
        let q = self.patch_len();
        let run = self.kw * self.c;
        let mut cols = vec![0.0; self.positions() * q];
        for oi in 0..self.oh {
            for oj in 0..self.ow {
                let p = oi * self.ow + oj;
                for di in 0..self.kh {
                    let src = ((oi * self.sh + di) * self.w + oj * self.sw) * self.c;
                    let dst = p * q + di * run;
                    cols[dst..dst + run].copy_from_slice(&input[src..src + run]);
                }
            }
        }
        cols
    }

    fn col2im_acc(&self, cols: &[f64], out: &mut [f64]) {
        let q = self.patch_len();
        let run = self.kw * self.c;
        for oi in 0..self.oh {
            for oj in 0..self.ow {
                let p = oi * self.ow + oj;
                for di in 0..self.kh {
                    let dst = ((oi * self.sh + di) * self.w + oj * self.sw) * self.c;
                    let src = p * q + di * run;
                    for (o, g) in out[dst..dst + run].iter_mut().zip(&cols[src..src + run]) {
                        *o += g;
                    }
                }
            }
        }
    }
}

pub fn conv2d_forward(input: &Tensor, layer: &ConvLayer) -> Result<Tensor> {
    let g = layer.geometry(input)?;
    let k = layer.filters();
    let cols = g.im2col(input.data());
    let mut out = vec![0.0; g.positions() * k];
    linalg::matmul_a_bt_into(
        &cols,
        layer.kernels.data(),
        g.positions(),
        g.patch_len(),
        k,
        &mut out,
    );
    let bias = layer.bias.data();
    for row in out.chunks_exact_mut(k) {
        for (o, b) in row.iter_mut().zip(bias) {
            *o += b;
        }
    }
    Tensor::from_vec(&[g.oh, g.ow, k], out)
}

/// Parameter gradients are accumulated into `grads`; the input gradient is
/// returned only when `want_input` is set.
pub(crate) fn conv2d_backward_into(
    grad_out: &Tensor,
    input: &Tensor,
    layer: &ConvLayer,
    grads: Gradient<'_>,
    want_input: bool,
) -> Result<Option<Tensor>> {
    let g = layer.geometry(input)?;
    let k = layer.filters();
    grad_out.expect_shape(&[g.oh, g.ow, k], "convolution upstream gradient")?;
    let go = grad_out.data();

    for row in go.chunks_exact(k) {
        for (b, x) in grads.bias.iter_mut().zip(row) {
            *b += x;
        }
    }
    let cols = g.im2col(input.data());
    linalg::matmul_at_b_acc(go, &cols, g.positions(), k, g.patch_len(), grads.weights);

    if !want_input {
        return Ok(None);
    }
    let mut grad_cols = vec![0.0; g.positions() * g.patch_len()];
    linalg::matmul_into(
        go,
        layer.kernels.data(),
        g.positions(),
        k,
        g.patch_len(),
        &mut grad_cols,
    );
    let mut grad_input = vec![0.0; input.len()];
    g.col2im_acc(&grad_cols, &mut grad_input);
    Tensor::from_vec(input.shape(), grad_input).map(Some)
}

pub fn conv2d_backward(grad_out: &Tensor, input: &Tensor, layer: &ConvLayer) -> Result<ConvGrads> {
    let mut kernels = Tensor::zeros(layer.kernels.shape())?;
    let mut bias = Tensor::zeros(layer.bias.shape())?;
    let input_grad = conv2d_backward_into(
        grad_out,
        input,
        layer,
        Gradient {
            weights: kernels.data_mut(),
            bias: bias.data_mut(),
        },
        true,
    )?
    .expect("input gradient requested");
    Ok(ConvGrads {
        input: input_grad,
        kernels,
        bias,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Direct nested-loop convolution.
    pub(crate) fn brute_force(input: &Tensor, layer: &ConvLayer) -> Tensor {
        let s = input.shape();
        let (kh, kw) = layer.kernel_size();
        let (sh, sw) = layer.stride;
        let oh = (s[0] - kh) / sh + 1;
        let ow = (s[1] - kw) / sw + 1;
        let k = layer.filters();
        let mut out = Tensor::zeros(&[oh, ow, k]).unwrap();
        for i in 0..oh {
            for j in 0..ow {
                for f in 0..k {
                    let mut acc = layer.bias.get(&[f]);
                    for di in 0..kh {
                        for dj in 0..kw {
                            for c in 0..s[2] {
                                acc += layer.kernels.get(&[f, di, dj, c])
                                    * input.get(&[i * sh + di, j * sw + dj, c]);
                            }
                        }
                    }
                    out.set(&[i, j, f], acc);
                }
            }
        }
        out
    }

    fn layer(kernels: Tensor, stride: (usize, usize)) -> ConvLayer {
        let k = kernels.shape()[0];
        ConvLayer {
            kernels,
            bias: Tensor::zeros(&[k]).unwrap(),
            stride,
        }
    }

    #[test]
    fn identity_kernel() {
        let input = Tensor::arange(&[3, 4, 1]).unwrap();
        let l = layer(Tensor::full(&[1, 1, 1, 1], 1.0).unwrap(), (1, 1));
        assert_eq!(conv2d_forward(&input, &l).unwrap(), input);
    }

    #[test]
    fn hand_dot_product() {
        let input = Tensor::from_vec(&[2, 2, 1], vec![1.0, 2.0, 3.0, 4.0]).unwrap();
        let l = layer(
            Tensor::from_vec(&[1, 2, 2, 1], vec![1.0, 0.0, 0.0, 1.0]).unwrap(),
            (1, 1),
        );
        assert_eq!(conv2d_forward(&input, &l).unwrap().data(), &[5.0]);
    }

    #[test]
    fn matches_brute_force_with_stride() {
        let mut rng = Rng::new(5);
        let input = Tensor::normal(&mut rng, &[7, 13, 3], 0.0, 1.0).unwrap();
        let mut l = ConvLayer::init(&mut rng, 4, (3, 4), 3, (2, 3), 0.5, 0.1).unwrap();
        l.bias = Tensor::normal(&mut rng, &[4], 0.0, 1.0).unwrap();
        let fast = conv2d_forward(&input, &l).unwrap();
        let slow = brute_force(&input, &l);
        assert_eq!(fast.shape(), slow.shape());
        for (a, b) in fast.data().iter().zip(slow.data()) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn reference_conv1_shape() {
        assert_eq!(
            conv_output_shape([15, 1961, 4], (3, 10), (1, 5)).unwrap(),
            [13, 391]
        );
        assert!(conv_output_shape([2, 20, 4], (3, 10), (1, 1)).is_err());
    }

    #[test]
    fn backward_basics() {
        let mut rng = Rng::new(6);
        let input = Tensor::normal(&mut rng, &[6, 8, 2], 0.0, 1.0).unwrap();
        let l = ConvLayer::init(&mut rng, 3, (3, 3), 2, (1, 1), 0.3, 0.1).unwrap();
        let zero = Tensor::zeros(&[4, 6, 3]).unwrap();
        let g = conv2d_backward(&zero, &input, &l).unwrap();
        assert!(g
            .input
            .data()
            .iter()
            .chain(g.kernels.data())
            .chain(g.bias.data())
            .all(|&x| x == 0.0));

        let up = Tensor::normal(&mut rng, &[4, 6, 3], 0.0, 1.0).unwrap();
        let g = conv2d_backward(&up, &input, &l).unwrap();
        for f in 0..3 {
            let want: f64 = up.data().iter().skip(f).step_by(3).sum();
            assert!((g.bias.get(&[f]) - want).abs() < 1e-12);
        }
        assert!(conv2d_backward(&input, &input, &l).is_err());
    }
}
