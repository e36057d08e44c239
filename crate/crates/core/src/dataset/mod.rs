//! Skeleton recordings: in-memory types, on-disk formats and corpus loading.

mod cad60;
mod canonical;
mod corpus;
mod labels;

pub use cad60::{parse_cad60, Cad60Recording, CAD60_ROW_FIELDS};
pub use canonical::{read_canonical, write_canonical, CANONICAL_FIELDS_PER_FRAME};
pub use corpus::{load_corpus, normalize_label_text, Corpus};
pub use labels::LabelMap;

use crate::error::{Error, Result};

pub const JOINT_COUNT: usize = 15;
pub const ATTRIBUTE_COUNT: usize = 4;

/// Canonical joint order used by every frame and feature tensor.
pub const JOINT_NAMES: [&str; JOINT_COUNT] = [
    "head",
    "neck",
    "torso",
    "left_shoulder",
    "left_elbow",
    "right_shoulder",
    "right_elbow",
    "left_hip",
    "left_knee",
    "right_hip",
    "right_knee",
    "left_hand",
    "right_hand",
    "left_foot",
    "right_foot",
];

/// Tracked joint position in millimetres plus tracker confidence.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Joint {
    pub x: f64,
    pub y: f64,
    pub z: f64,
    pub confidence: f64,
}

impl Joint {
    /// Validating constructor: coordinates must be finite, confidence is
    /// clamped into `[0, 1]`.
    pub fn new(x: f64, y: f64, z: f64, confidence: f64) -> Result<Joint> {
        if !(x.is_finite() && y.is_finite() && z.is_finite()) {
            return Err(Error::Parameter(format!(
                "non-finite joint position ({x}, {y}, {z})"
            )));
        }
        if !confidence.is_finite() {
            return Err(Error::Parameter(format!(
                "non-finite confidence {confidence}"
            )));
        }
        let clamped = confidence.clamp(0.0, 1.0);
        if clamped != confidence {
            log::warn!("joint confidence {confidence} clamped to {clamped}");
        }
        Ok(Joint {
            x,
            y,
            z,
            confidence: clamped,
        })
    }

    pub fn attributes(&self) -> [f64; ATTRIBUTE_COUNT] {
        [self.x, self.y, self.z, self.confidence]
    }

    pub fn splat(value: f64) -> Joint {
        Joint {
            x: value,
            y: value,
            z: value,
            confidence: value,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Frame {
    pub joints: [Joint; JOINT_COUNT],
}

impl Frame {
    pub fn new(joints: [Joint; JOINT_COUNT]) -> Frame {
        Frame { joints }
    }

    pub fn splat(value: f64) -> Frame {
        Frame {
            joints: [Joint::splat(value); JOINT_COUNT],
        }
    }
}

/// One labelled recording.
#[derive(Clone, Debug, PartialEq)]
pub struct SkeletonSequence {
    frames: Vec<Frame>,
    pub label: String,
    pub source_id: String,
}

impl SkeletonSequence {
    pub fn new(
        frames: Vec<Frame>,
        label: impl Into<String>,
        source_id: impl Into<String>,
    ) -> Result<Self> {
        let label = label.into();
        if frames.is_empty() {
            return Err(Error::Parameter("skeleton sequence has no frames".into()));
        }
        if label.trim().is_empty() {
            return Err(Error::Label("empty activity label".into()));
        }
        Ok(SkeletonSequence {
            frames,
            label,
            source_id: source_id.into(),
        })
    }

    pub fn frames(&self) -> &[Frame] {
        &self.frames
    }

    pub fn len(&self) -> usize {
        self.frames.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frames.is_empty()
    }

    /// Same label and source with a replacement frame list.
    pub fn with_frames(&self, frames: Vec<Frame>) -> Result<Self> {
        SkeletonSequence::new(frames, self.label.clone(), self.source_id.clone())
    }
}
