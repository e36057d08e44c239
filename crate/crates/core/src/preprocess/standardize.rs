use serde::{Deserialize, Serialize};

use super::FeatureTensor;
use crate::dataset::{ATTRIBUTE_COUNT, JOINT_COUNT};
use crate::error::{Error, Result};
use crate::tensor::Tensor;

const CHANNELS: usize = JOINT_COUNT * ATTRIBUTE_COUNT;

/// Per-(joint, attribute) affine standardisation fitted on training data.
/// Channel `j * 4 + a` covers joint `j`, attribute `a`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Standardizer {
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
}

fn channel_of(flat: usize, frames: usize) -> usize {
    let joint = flat / (frames * ATTRIBUTE_COUNT);
    joint * ATTRIBUTE_COUNT + flat % ATTRIBUTE_COUNT
}

/// Population mean and std of every channel over all frames and samples.
/// Channels with zero spread keep std 1.
pub fn fit_standardizer(train: &[FeatureTensor]) -> Result<Standardizer> {
    if train.is_empty() {
        return Err(Error::Parameter(
            "cannot fit a standardizer on zero samples".into(),
        ));
    }
    let frames = train[0].frames();
    let mut sum = vec![0.0; CHANNELS];
    let mut count = 0usize;
    for t in train {
        if t.frames() != frames {
            return Err(Error::Shape("mixed frame counts in training set".into()));
        }
        for (i, &x) in t.data.data().iter().enumerate() {
            sum[channel_of(i, frames)] += x;
        }
        count += frames;
    }
    let mean: Vec<f64> = sum.iter().map(|s| s / count as f64).collect();
    let mut sq = vec![0.0; CHANNELS];
    for t in train {
        for (i, &x) in t.data.data().iter().enumerate() {
            let c = channel_of(i, frames);
            sq[c] += (x - mean[c]).powi(2);
        }
    }
    let std = sq
        .iter()
        .map(|s| {
            let sd = (s / count as f64).sqrt();
            if sd > 1e-12 && sd.is_finite() {
                sd
            } else {
                1.0
            }
        })
        .collect();
    Ok(Standardizer { mean, std })
}

impl Standardizer {
    pub fn apply(&self, t: &FeatureTensor) -> Result<FeatureTensor> {
        if self.mean.len() != CHANNELS || self.std.len() != CHANNELS {
            return Err(Error::Parameter(
                "standardizer has the wrong channel count".into(),
            ));
        }
        let frames = t.frames();
        let data: Vec<f64> = t
            .data
            .data()
            .iter()
            .enumerate()
            .map(|(i, &x)| {
                let c = channel_of(i, frames);
                (x - self.mean[c]) / self.std[c]
            })
            .collect();
        Ok(FeatureTensor {
            data: Tensor::from_vec(t.data.shape(), data)?,
            ..t.clone()
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tensor::Rng;

    fn random(rng: &mut Rng, frames: usize) -> FeatureTensor {
        let data = Tensor::normal(rng, &[15, frames, 4], 300.0, 80.0).unwrap();
        FeatureTensor::new(data, 0, "r").unwrap()
    }

    fn channel_stats(ts: &[FeatureTensor]) -> (Vec<f64>, Vec<f64>) {
        fit_standardizer(ts).map(|s| (s.mean, s.std)).unwrap()
    }

    #[test]
    fn single_tensor_is_centred() {
        let mut rng = Rng::new(0);
        let t = random(&mut rng, 20);
        let s = fit_standardizer(std::slice::from_ref(&t)).unwrap();
        let z = s.apply(&t).unwrap();
        let (mean, _) = channel_stats(&[z]);
        assert!(mean.iter().all(|m| m.abs() < 1e-9));
    }

    #[test]
    fn refit_on_standardised_data_is_unit() {
        let mut rng = Rng::new(1);
        let ts: Vec<_> = (0..4).map(|_| random(&mut rng, 10)).collect();
        let s = fit_standardizer(&ts).unwrap();
        let zs: Vec<_> = ts.iter().map(|t| s.apply(t).unwrap()).collect();
        let (mean, std) = channel_stats(&zs);
        assert!(mean.iter().all(|m| m.abs() < 1e-9));
        assert!(std.iter().all(|s| (s - 1.0).abs() < 1e-9));
    }

    #[test]
    fn constant_channel_passes_through() {
        let t = FeatureTensor::new(Tensor::full(&[15, 5, 4], 0.0).unwrap(), 0, "c").unwrap();
        let s = fit_standardizer(std::slice::from_ref(&t)).unwrap();
        assert!(s.std.iter().all(|&v| v == 1.0));
        assert_eq!(s.apply(&t).unwrap(), t);
    }

    #[test]
    fn apply_is_affine() {
        let mut rng = Rng::new(2);
        let ts: Vec<_> = (0..3).map(|_| random(&mut rng, 8)).collect();
        let s = fit_standardizer(&ts).unwrap();
        let x = random(&mut rng, 8);
        let a = 2.5;
        let scaled = FeatureTensor {
            data: x.data.map(|v| a * v),
            ..x.clone()
        };
        let lhs = s.apply(&scaled).unwrap();
        let rhs = s.apply(&x).unwrap();
        for (i, (l, r)) in lhs.data.data().iter().zip(rhs.data.data()).enumerate() {
            let c = channel_of(i, 8);
            let want = a * r + (a - 1.0) * s.mean[c] / s.std[c];
            assert!((l - want).abs() < 1e-9 * want.abs().max(1.0));
        }
    }
}
