//! On-disk cache of a prepared corpus.
//!
//! ```text
//! <dir>/manifest.json        classes, frame count, normalization, split,
//!                            standardizer, per-sample metadata
//! <dir>/samples/00000.bin    raw feature tensors (tensor codec), one per sample
//! ```
//!
//! Samples are stored before standardisation and augmentation; the fitted
//! standardizer travels in the manifest.

use std::fs::{self, File};
use std::io::{BufReader, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{FeatureTensor, Partition, SplitSpec, Standardizer};
use crate::error::{Error, Result};
use crate::tensor::{read_tensor, write_tensor};

pub const MANIFEST_FILE: &str = "manifest.json";

/// Normalised, assembled and split corpus ready for training.
#[derive(Clone, Debug, PartialEq)]
pub struct PreparedCorpus {
    pub classes: Vec<String>,
    pub frames: usize,
    pub normalization: String,
    pub split: SplitSpec,
    pub partition: Partition,
    /// Fitted on the training partition.
    pub standardizer: Standardizer,
    pub samples: Vec<FeatureTensor>,
}

#[derive(Serialize, Deserialize)]
struct Manifest {
    classes: Vec<String>,
    frames: usize,
    normalization: String,
    split: SplitSpec,
    standardizer: Standardizer,
    /// Noise level applied to the cached samples; always null since
    /// augmentation happens at training time.
    sigma: Option<f64>,
    samples: Vec<ManifestEntry>,
}

#[derive(Serialize, Deserialize)]
struct ManifestEntry {
    file: String,
    label_index: usize,
    source_id: String,
    partition: String,
}

pub fn is_cache(dir: &Path) -> bool {
    dir.join(MANIFEST_FILE).is_file()
}

impl PreparedCorpus {
    pub fn write(&self, dir: &Path) -> Result<()> {
        let samples_dir = dir.join("samples");
        fs::create_dir_all(&samples_dir).map_err(|e| Error::io(&samples_dir, e))?;
        let mut entries = Vec::with_capacity(self.samples.len());
        for (i, s) in self.samples.iter().enumerate() {
            let file = format!("samples/{i:05}.bin");
            let path = dir.join(&file);
            let mut w = BufWriter::new(File::create(&path).map_err(|e| Error::io(&path, e))?);
            write_tensor(&mut w, &s.data)
                .and_then(|_| w.flush())
                .map_err(|e| Error::io(&path, e))?;
            let partition = if self.partition.test.binary_search(&i).is_ok() {
                "test"
            } else {
                "train"
            };
            entries.push(ManifestEntry {
                file,
                label_index: s.label_index,
                source_id: s.source_id.clone(),
                partition: partition.into(),
            });
        }
        let manifest = Manifest {
            classes: self.classes.clone(),
            frames: self.frames,
            normalization: self.normalization.clone(),
            split: self.split,
            standardizer: self.standardizer.clone(),
            sigma: None,
            samples: entries,
        };
        let path = dir.join(MANIFEST_FILE);
        fs::write(&path, serde_json::to_string_pretty(&manifest)? + "\n")
            .map_err(|e| Error::io(&path, e))
    }

    pub fn read(dir: &Path) -> Result<PreparedCorpus> {
        let path = dir.join(MANIFEST_FILE);
        let text = fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
        let manifest: Manifest = serde_json::from_str(&text)?;
        let mut samples = Vec::with_capacity(manifest.samples.len());
        let mut partition = Partition {
            train: Vec::new(),
            test: Vec::new(),
        };
        for (i, entry) in manifest.samples.iter().enumerate() {
            let path = dir.join(&entry.file);
            let mut r = BufReader::new(File::open(&path).map_err(|e| Error::io(&path, e))?);
            let data = read_tensor(&mut r)?;
            if entry.label_index >= manifest.classes.len() {
                return Err(Error::Label(format!(
                    "{}: class index out of range",
                    entry.file
                )));
            }
            let sample = FeatureTensor::new(data, entry.label_index, entry.source_id.clone())?;
            if sample.frames() != manifest.frames {
                return Err(Error::Shape(format!(
                    "{}: frame count disagrees with manifest",
                    entry.file
                )));
            }
            samples.push(sample);
            match entry.partition.as_str() {
                "train" => partition.train.push(i),
                "test" => partition.test.push(i),
                other => {
                    return Err(Error::parse(
                        &entry.file,
                        format!("unknown partition {other:?}"),
                    ))
                }
            }
        }
        Ok(PreparedCorpus {
            classes: manifest.classes,
            frames: manifest.frames,
            normalization: manifest.normalization,
            split: manifest.split,
            partition,
            standardizer: manifest.standardizer,
            samples,
        })
    }

    pub fn train_samples(&self) -> Vec<FeatureTensor> {
        self.partition
            .train
            .iter()
            .map(|&i| self.samples[i].clone())
            .collect()
    }

    pub fn test_samples(&self) -> Vec<FeatureTensor> {
        self.partition
            .test
            .iter()
            .map(|&i| self.samples[i].clone())
            .collect()
    }
}
