//! Max pooling over the two spatial axes of a `[h, w, c]` tensor, per
//! channel. Leftover rows/columns that do not fill a window are dropped.
//! Ties go to the first cell in row-major window order.

use crate::error::{Error, Result};
use crate::tensor::Tensor;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct PoolLayer {
    pub window: (usize, usize),
    pub stride: (usize, usize),
}

impl Default for PoolLayer {
    fn default() -> Self {
        PoolLayer {
            window: (2, 2),
            stride: (2, 2),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct PoolOutput {
    pub output: Tensor,
    /// Flat input offset of the winning cell, per output element.
    pub argmax: Vec<usize>,
}

impl PoolLayer {
    pub fn output_shape(&self, input: [usize; 3]) -> Result<[usize; 3]> {
        let [h, w, c] = input;
        let (wh, ww) = self.window;
        if h < wh || w < ww {
            return Err(Error::Shape(format!(
                "pool window {wh}x{ww} does not fit input {h}x{w}"
            )));
        }
        Ok([
            (h - wh) / self.stride.0 + 1,
            (w - ww) / self.stride.1 + 1,
            c,
        ])
    }

    pub fn forward(&self, input: &Tensor) -> Result<PoolOutput> {
        if input.rank() != 3 {
            return Err(Error::Shape(format!(
                "pool input must be rank 3, got {:?}",
                input.shape()
            )));
        }
        let s = input.shape();
        let [oh, ow, c] = self.output_shape([s[0], s[1], s[2]])?;
        let w = s[1];
        let x = input.data();
        let mut out = Vec::with_capacity(oh * ow * c);
        let mut argmax = Vec::with_capacity(oh * ow * c);
        for i in 0..oh {
            for j in 0..ow {
                for ch in 0..c {
                    let mut best = usize::MAX;
                    for di in 0..self.window.0 {
                        for dj in 0..self.window.1 {
                            let at =
                                ((i * self.stride.0 + di) * w + j * self.stride.1 + dj) * c + ch;
                            if best == usize::MAX || x[at] > x[best] {
                                best = at;
                            }
                        }
                    }
                    out.push(x[best]);
                    argmax.push(best);
                }
            }
        }
        Ok(PoolOutput {
            output: Tensor::from_vec(&[oh, ow, c], out)?,
            argmax,
        })
    }
}

/// Routes each upstream gradient to the cell that won its window.
pub fn maxpool_backward(
    grad_out: &Tensor,
    argmax: &[usize],
    input_shape: &[usize],
) -> Result<Tensor> {
    if grad_out.len() != argmax.len() {
        return Err(Error::Shape(format!(
            "pool backward: {} gradients for {} windows",
            grad_out.len(),
            argmax.len()
        )));
    }
    let mut grad = Tensor::zeros(input_shape)?;
    let buf = grad.data_mut();
    for (&at, &g) in argmax.iter().zip(grad_out.data()) {
        buf[at] += g;
    }
    Ok(grad)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_window() {
        let x = Tensor::from_vec(&[2, 2, 1], vec![1.0, 2.0, 3.0, 4.0]).unwrap();
        let p = PoolLayer::default().forward(&x).unwrap();
        assert_eq!(p.output.data(), &[4.0]);
        let g = maxpool_backward(
            &Tensor::full(&[1, 1, 1], 1.0).unwrap(),
            &p.argmax,
            x.shape(),
        )
        .unwrap();
        assert_eq!(g.data(), &[0.0, 0.0, 0.0, 1.0]);
    }

    #[test]
    fn ties_go_to_first_cell() {
        let x = Tensor::full(&[2, 2, 1], 7.0).unwrap();
        let p = PoolLayer::default().forward(&x).unwrap();
        assert_eq!(p.argmax, vec![0]);
    }

    #[test]
    fn floor_semantics_and_channels() {
        let x = Tensor::arange(&[5, 7, 3]).unwrap();
        let p = PoolLayer::default().forward(&x).unwrap();
        assert_eq!(p.output.shape(), &[2, 3, 3]);
        // bottom-right cell of window (0,0) wins on an increasing ramp
        assert_eq!(p.output.get(&[0, 0, 1]), x.get(&[1, 1, 1]));
        assert!(PoolLayer::default()
            .forward(&Tensor::zeros(&[1, 4, 1]).unwrap())
            .is_err());
    }

    #[test]
    fn argmax_stays_inside_window() {
        let mut rng = crate::tensor::Rng::new(2);
        let x = Tensor::normal(&mut rng, &[9, 8, 2], 0.0, 1.0).unwrap();
        let p = PoolLayer::default().forward(&x).unwrap();
        let [oh, ow, c] = [4, 4, 2];
        for i in 0..oh {
            for j in 0..ow {
                for ch in 0..c {
                    let at = p.argmax[(i * ow + j) * c + ch];
                    let (r, col, k) = (at / (8 * 2), (at / 2) % 8, at % 2);
                    assert_eq!(k, ch);
                    assert!(r / 2 == i && col / 2 == j);
                }
            }
        }
        let up = Tensor::normal(&mut rng, &[4, 4, 2], 0.0, 1.0).unwrap();
        let g = maxpool_backward(&up, &p.argmax, x.shape()).unwrap();
        assert!((g.sum() - up.sum()).abs() < 1e-12);
    }
}
