#![allow(dead_code)]

use std::path::Path;

use jointcnn::harness::synthetic::{write_corpus, SyntheticSpec};
use jointcnn::harness::TrainConfig;

/// Small network over 64 frames that trains in seconds.
pub fn small_config(corpus: &Path, out: &Path) -> TrainConfig {
    TrainConfig {
        epochs: 30,
        batch_size: 16,
        stride: 2,
        frames: 64,
        conv1_filters: 8,
        conv2_filters: 8,
        fc1: 32,
        fc2: 16,
        corpus: corpus.to_path_buf(),
        output: out.to_path_buf(),
        ..TrainConfig::default()
    }
}

pub fn synthetic_corpus(root: &Path, per_class: usize, seed: u64) {
    write_corpus(
        &SyntheticSpec {
            per_class,
            seed,
            ..SyntheticSpec::default()
        },
        root,
    )
    .unwrap();
}
