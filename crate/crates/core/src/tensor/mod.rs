//! Dense row-major `f64` arrays.
//!
//! Element `(i, j, k)` of a tensor with shape `[A, B, C]` lives at flat index
//! `i*B*C + j*C + k`. Convolution and pooling kernels are written against this
//! layout.

mod codec;
pub mod linalg;
mod rng;

pub use codec::{read_tensor, write_tensor};
pub use rng::Rng;

use crate::error::{Error, Result};

/// Rejection bound used by weight initialisation, in standard deviations.
pub const TRUNCATION_BOUND: f64 = 2.0;

#[derive(Clone, Debug, PartialEq)]
pub struct Tensor {
    shape: Vec<usize>,
    data: Vec<f64>,
}

fn check_shape(shape: &[usize]) -> Result<usize> {
    if shape.is_empty() {
        return Err(Error::Shape("empty shape list".into()));
    }
    if let Some(axis) = shape.iter().position(|&e| e == 0) {
        return Err(Error::Shape(format!(
            "zero extent on axis {axis} of {shape:?}"
        )));
    }
    shape
        .iter()
        .try_fold(1usize, |acc, &e| acc.checked_mul(e))
        .ok_or_else(|| Error::Shape(format!("shape {shape:?} overflows")))
}

impl Tensor {
    pub fn zeros(shape: &[usize]) -> Result<Self> {
        Self::full(shape, 0.0)
    }

    pub fn full(shape: &[usize], value: f64) -> Result<Self> {
        let len = check_shape(shape)?;
        Ok(Tensor {
            shape: shape.to_vec(),
            data: vec![value; len],
        })
    }

    pub fn from_vec(shape: &[usize], data: Vec<f64>) -> Result<Self> {
        let len = check_shape(shape)?;
        if len != data.len() {
            return Err(Error::Shape(format!(
                "shape {shape:?} needs {len} elements, got {}",
                data.len()
            )));
        }
        Ok(Tensor {
            shape: shape.to_vec(),
            data,
        })
    }

    /// `0, 1, 2, ...` laid out in row-major order.
    pub fn arange(shape: &[usize]) -> Result<Self> {
        let len = check_shape(shape)?;
        Self::from_vec(shape, (0..len).map(|i| i as f64).collect())
    }

    /// i.i.d. draws from `N(mean, std^2)`.
    pub fn normal(rng: &mut Rng, shape: &[usize], mean: f64, std: f64) -> Result<Self> {
        if !std.is_finite() || std < 0.0 {
            return Err(Error::Parameter(format!(
                "normal std must be >= 0, got {std}"
            )));
        }
        let len = check_shape(shape)?;
        let data = if std == 0.0 {
            vec![mean; len]
        } else {
            (0..len)
                .map(|_| mean + std * rng.standard_normal())
                .collect()
        };
        Self::from_vec(shape, data)
    }

    /// Zero-mean normal draws, rejecting any sample with `|x| > bound * std`.
    pub fn truncated_normal(rng: &mut Rng, shape: &[usize], std: f64, bound: f64) -> Result<Self> {
        if !std.is_finite() || !bound.is_finite() || std <= 0.0 || bound <= 0.0 {
            return Err(Error::Parameter(format!(
                "truncated normal needs std > 0 and bound > 0, got std={std} bound={bound}"
            )));
        }
        let len = check_shape(shape)?;
        let limit = bound * std;
        let data = (0..len)
            .map(|_| loop {
                let x = std * rng.standard_normal();
                if x.abs() <= limit {
                    break x;
                }
            })
            .collect();
        Self::from_vec(shape, data)
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn rank(&self) -> usize {
        self.shape.len()
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_data(self) -> Vec<f64> {
        self.data
    }

    /// Flat offset of a multi-index.
    pub fn offset(&self, index: &[usize]) -> usize {
        assert_eq!(index.len(), self.shape.len(), "index rank mismatch");
        index.iter().zip(&self.shape).fold(0, |acc, (&i, &extent)| {
            assert!(
                i < extent,
                "index {index:?} out of bounds for {:?}",
                self.shape
            );
            acc * extent + i
        })
    }

    pub fn get(&self, index: &[usize]) -> f64 {
        self.data[self.offset(index)]
    }

    pub fn set(&mut self, index: &[usize], value: f64) {
        let at = self.offset(index);
        self.data[at] = value;
    }

    /// Copy with a new shape of identical element count.
    pub fn reshape(&self, shape: &[usize]) -> Result<Tensor> {
        self.clone().into_reshaped(shape)
    }

    pub fn into_reshaped(self, shape: &[usize]) -> Result<Tensor> {
        Tensor::from_vec(shape, self.data)
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Tensor {
        Tensor {
            shape: self.shape.clone(),
            data: self.data.iter().map(|&x| f(x)).collect(),
        }
    }

    pub fn zip_map(&self, other: &Tensor, f: impl Fn(f64, f64) -> f64) -> Result<Tensor> {
        self.expect_same_shape(other)?;
        Ok(Tensor {
            shape: self.shape.clone(),
            data: self
                .data
                .iter()
                .zip(&other.data)
                .map(|(&a, &b)| f(a, b))
                .collect(),
        })
    }

    pub fn add_assign(&mut self, other: &Tensor) -> Result<()> {
        self.expect_same_shape(other)?;
        for (a, b) in self.data.iter_mut().zip(&other.data) {
            *a += b;
        }
        Ok(())
    }

    pub fn scale_in_place(&mut self, factor: f64) {
        for x in &mut self.data {
            *x *= factor;
        }
    }

    pub fn fill(&mut self, value: f64) {
        self.data.fill(value);
    }

    pub fn sum(&self) -> f64 {
        self.data.iter().sum()
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|x| x.is_finite())
    }

    /// Rank-2 matrix product.
    pub fn matmul(&self, other: &Tensor) -> Result<Tensor> {
        if self.rank() != 2 || other.rank() != 2 {
            return Err(Error::Shape(format!(
                "matmul needs rank-2 operands, got {:?} and {:?}",
                self.shape, other.shape
            )));
        }
        let (m, k) = (self.shape[0], self.shape[1]);
        let (k2, n) = (other.shape[0], other.shape[1]);
        if k != k2 {
            return Err(Error::Shape(format!(
                "matmul inner dimension mismatch: {:?} x {:?}",
                self.shape, other.shape
            )));
        }
        let mut out = vec![0.0; m * n];
        linalg::matmul_into(&self.data, &other.data, m, k, n, &mut out);
        Tensor::from_vec(&[m, n], out)
    }

    pub(crate) fn expect_same_shape(&self, other: &Tensor) -> Result<()> {
        if self.shape != other.shape {
            return Err(Error::Shape(format!(
                "shape mismatch: {:?} vs {:?}",
                self.shape, other.shape
            )));
        }
        Ok(())
    }

    pub(crate) fn expect_shape(&self, shape: &[usize], what: &str) -> Result<()> {
        if self.shape != shape {
            return Err(Error::Shape(format!(
                "{what}: expected shape {shape:?}, got {:?}",
                self.shape
            )));
        }
        Ok(())
    }
}
