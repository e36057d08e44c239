//! From labelled recordings to fixed-shape, standardised, balanced feature
//! tensors.

mod augment;
pub mod cache;
mod normalize;
mod split;
mod standardize;

pub use augment::augment;
pub use normalize::{
    normalize_frames, normalizers, repetition_counts, FrameNormalizer, FrameSlot, PadSpecial,
    PadTerminal, Repetition, Truncation, DEFAULT_NORMALIZATION,
};
pub use split::{split, Partition, SplitSpec};
pub use standardize::{fit_standardizer, Standardizer};

use crate::dataset::{LabelMap, SkeletonSequence, ATTRIBUTE_COUNT, JOINT_COUNT};
use crate::error::{Error, Result};
use crate::tensor::Tensor;

/// Frame count every recording is normalised to.
pub const FEATURE_FRAMES: usize = 1961;

/// One network input: a `[joint, time, attribute]` block and its class.
#[derive(Clone, Debug, PartialEq)]
pub struct FeatureTensor {
    pub data: Tensor,
    pub label_index: usize,
    pub source_id: String,
    /// Set on samples produced by noise augmentation.
    pub synthetic: bool,
}

impl FeatureTensor {
    pub fn new(data: Tensor, label_index: usize, source_id: impl Into<String>) -> Result<Self> {
        let shape = data.shape();
        if shape.len() != 3 || shape[0] != JOINT_COUNT || shape[2] != ATTRIBUTE_COUNT {
            return Err(Error::Shape(format!(
                "feature tensor must be [{JOINT_COUNT}, frames, {ATTRIBUTE_COUNT}], got {shape:?}"
            )));
        }
        if !data.is_finite() {
            return Err(Error::Parameter(
                "feature tensor contains non-finite values".into(),
            ));
        }
        Ok(FeatureTensor {
            data,
            label_index,
            source_id: source_id.into(),
            synthetic: false,
        })
    }

    pub fn frames(&self) -> usize {
        self.data.shape()[1]
    }
}

/// Lays a normalised sequence out as `[joint, frame, attribute]`.
pub fn assemble(
    seq: &SkeletonSequence,
    frames: usize,
    classes: &LabelMap,
) -> Result<FeatureTensor> {
    if seq.len() != frames {
        return Err(Error::Shape(format!(
            "{}: expected {frames} frames, got {}",
            seq.source_id,
            seq.len()
        )));
    }
    let label_index = classes.class_index(&seq.label)?;
    let mut data = Tensor::zeros(&[JOINT_COUNT, frames, ATTRIBUTE_COUNT])?;
    let buf = data.data_mut();
    for (t, frame) in seq.frames().iter().enumerate() {
        for (j, joint) in frame.joints.iter().enumerate() {
            let at = (j * frames + t) * ATTRIBUTE_COUNT;
            buf[at..at + ATTRIBUTE_COUNT].copy_from_slice(&joint.attributes());
        }
    }
    FeatureTensor::new(data, label_index, seq.source_id.clone())
}
