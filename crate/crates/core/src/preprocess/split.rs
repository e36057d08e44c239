use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tensor::Rng;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SplitSpec {
    pub train_fraction: f64,
    pub seed: u64,
    pub stratified: bool,
}

impl Default for SplitSpec {
    fn default() -> Self {
        SplitSpec {
            train_fraction: 0.8,
            seed: 0,
            stratified: true,
        }
    }
}

/// Sample indices on each side of a split, ascending.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Partition {
    pub train: Vec<usize>,
    pub test: Vec<usize>,
}

/// Partitions samples by their class labels. Stratified splits send
/// `round(fraction * n)` of each class's `n` samples to train; a class with
/// a single sample goes to train entirely.
pub fn split(labels: &[usize], spec: &SplitSpec) -> Result<Partition> {
    if labels.is_empty() {
        return Err(Error::Parameter("cannot split an empty corpus".into()));
    }
    if !(spec.train_fraction > 0.0 && spec.train_fraction < 1.0) {
        return Err(Error::Parameter(format!(
            "train fraction must lie in (0, 1), got {}",
            spec.train_fraction
        )));
    }
    let rng = Rng::new(spec.seed);
    let groups: Vec<(u64, Vec<usize>)> = if spec.stratified {
        let mut by_class: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
        for (i, &c) in labels.iter().enumerate() {
            by_class.entry(c).or_default().push(i);
        }
        by_class.into_iter().map(|(c, v)| (c as u64, v)).collect()
    } else {
        vec![(u64::MAX, (0..labels.len()).collect())]
    };

    let mut train = Vec::new();
    let mut test = Vec::new();
    for (stream, mut members) in groups {
        if members.len() == 1 {
            log::warn!("class {stream} has a single sample; keeping it in the training set");
            train.push(members[0]);
            continue;
        }
        rng.split(stream).shuffle(&mut members);
        let n_train = (spec.train_fraction * members.len() as f64).round() as usize;
        train.extend_from_slice(&members[..n_train]);
        test.extend_from_slice(&members[n_train..]);
    }
    train.sort_unstable();
    test.sort_unstable();
    Ok(Partition { train, test })
}
