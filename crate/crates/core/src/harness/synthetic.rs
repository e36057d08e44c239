//! Generated skeleton corpora with easily separable classes, for smoke
//! tests and demos without the real recordings.
//!
//! Class `c` lifts one limb joint by a fixed offset and swings it along one
//! axis; each sequence gets its own length, phase, body offset and jitter.

use std::fs;
use std::path::Path;

use crate::dataset::{write_canonical, Frame, Joint, SkeletonSequence, JOINT_COUNT};
use crate::error::{Error, Result};
use crate::tensor::Rng;

/// Rest pose in millimetres, [`crate::dataset::JOINT_NAMES`] order.
const REST_POSE: [[f64; 3]; JOINT_COUNT] = [
    [0.0, 700.0, 2500.0],
    [0.0, 500.0, 2500.0],
    [0.0, 250.0, 2500.0],
    [-170.0, 480.0, 2500.0],
    [-250.0, 200.0, 2500.0],
    [170.0, 480.0, 2500.0],
    [250.0, 200.0, 2500.0],
    [-100.0, -50.0, 2500.0],
    [-110.0, -450.0, 2500.0],
    [100.0, -50.0, 2500.0],
    [110.0, -450.0, 2500.0],
    [-280.0, -50.0, 2450.0],
    [280.0, -50.0, 2450.0],
    [-120.0, -850.0, 2500.0],
    [120.0, -850.0, 2500.0],
];

// Joints whose motion distinguishes the classes: hands, elbows, knees, head.
const ACTIVE_JOINTS: [usize; 7] = [11, 12, 4, 6, 8, 10, 0];

#[derive(Clone, Debug, PartialEq)]
pub struct SyntheticSpec {
    pub classes: usize,
    pub per_class: usize,
    pub min_frames: usize,
    pub max_frames: usize,
    /// Per-coordinate jitter in millimetres.
    pub jitter: f64,
    pub seed: u64,
}

impl Default for SyntheticSpec {
    fn default() -> Self {
        SyntheticSpec {
            classes: 3,
            per_class: 20,
            min_frames: 40,
            max_frames: 90,
            jitter: 15.0,
            seed: 0,
        }
    }
}

pub fn class_name(c: usize) -> String {
    format!("motion {}", (b'a' + (c % 26) as u8) as char)
}

pub fn generate(spec: &SyntheticSpec) -> Result<Vec<SkeletonSequence>> {
    if spec.classes < 1 || spec.classes > ACTIVE_JOINTS.len() * 3 {
        return Err(Error::Parameter(format!(
            "synthetic corpora support 1..={} classes",
            ACTIVE_JOINTS.len() * 3
        )));
    }
    if spec.min_frames < 1 || spec.max_frames < spec.min_frames {
        return Err(Error::Parameter("synthetic frame range is empty".into()));
    }
    let root = Rng::new(spec.seed);
    let mut out = Vec::with_capacity(spec.classes * spec.per_class);
    for c in 0..spec.classes {
        let joint = ACTIVE_JOINTS[c % ACTIVE_JOINTS.len()];
        let axis = c / ACTIVE_JOINTS.len();
        for k in 0..spec.per_class {
            let mut rng = root.split(((c as u64) << 32) | k as u64);
            let len = spec.min_frames + rng.below(spec.max_frames - spec.min_frames + 1);
            let phase = rng.uniform() * std::f64::consts::TAU;
            let amplitude = 150.0 * (0.8 + 0.4 * rng.uniform());
            let cycles = 1.0 + rng.uniform();
            let body: Vec<f64> = (0..3).map(|_| 60.0 * (rng.uniform() - 0.5)).collect();
            let mut frames = Vec::with_capacity(len);
            for t in 0..len {
                let swing = amplitude
                    * (phase + cycles * std::f64::consts::TAU * t as f64 / len as f64).sin();
                let joints: [Joint; JOINT_COUNT] = std::array::from_fn(|j| {
                    let mut p = REST_POSE[j];
                    for (d, v) in p.iter_mut().enumerate() {
                        *v += body[d] + spec.jitter * rng.standard_normal();
                    }
                    if j == joint {
                        p[1] += 300.0;
                        p[axis] += swing;
                    }
                    Joint {
                        x: p[0],
                        y: p[1],
                        z: p[2],
                        confidence: 1.0,
                    }
                });
                frames.push(Frame::new(joints));
            }
            out.push(SkeletonSequence::new(
                frames,
                class_name(c),
                format!("{}/{k:03}.txt", class_name(c)),
            )?);
        }
    }
    Ok(out)
}

/// Writes `generate(spec)` as a corpus tree of canonical files, one
/// directory per class.
pub fn write_corpus(spec: &SyntheticSpec, root: &Path) -> Result<()> {
    for seq in generate(spec)? {
        let path = root.join(&seq.source_id);
        let dir = path.parent().expect("source ids have a directory");
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        fs::write(&path, write_canonical(&seq)?).map_err(|e| Error::io(&path, e))?;
    }
    Ok(())
}
