//! Classification quality: accuracy, confusion matrix and the pair-counting
//! Fowlkes-Mallows index.
//!
//! Fowlkes-Mallows treats predictions and labels as two clusterings of the
//! evaluated samples. Over all unordered sample pairs, a pair is a true
//! positive when both share a label and share a prediction, a false
//! positive when they share only a prediction, a false negative when they
//! share only a label. `FM = sqrt(TP/(TP+FP) * TP/(TP+FN))`.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct EvaluationSet {
    predictions: Vec<usize>,
    labels: Vec<usize>,
}

impl EvaluationSet {
    pub fn new(predictions: Vec<usize>, labels: Vec<usize>) -> Result<Self> {
        if predictions.len() != labels.len() {
            return Err(Error::Parameter(format!(
                "{} predictions for {} labels",
                predictions.len(),
                labels.len()
            )));
        }
        if predictions.is_empty() {
            return Err(Error::Parameter("empty evaluation set".into()));
        }
        Ok(EvaluationSet {
            predictions,
            labels,
        })
    }

    pub fn predictions(&self) -> &[usize] {
        &self.predictions
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PairCounts {
    pub tp: u64,
    pub fp: u64,
    pub fn_: u64,
}

/// `cells[prediction][label]`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    pub cells: Vec<Vec<u64>>,
}

impl ConfusionMatrix {
    pub fn classes(&self) -> usize {
        self.cells.len()
    }

    pub fn total(&self) -> u64 {
        self.cells.iter().flatten().sum()
    }

    pub fn trace(&self) -> u64 {
        (0..self.cells.len()).map(|i| self.cells[i][i]).sum()
    }
}

pub fn accuracy(e: &EvaluationSet) -> f64 {
    let hits = e
        .predictions
        .iter()
        .zip(&e.labels)
        .filter(|(p, l)| p == l)
        .count();
    hits as f64 / e.len() as f64
}

pub fn confusion(e: &EvaluationSet, classes: usize) -> Result<ConfusionMatrix> {
    let mut cells = vec![vec![0u64; classes]; classes];
    for (&p, &l) in e.predictions.iter().zip(&e.labels) {
        if p >= classes || l >= classes {
            return Err(Error::Label(format!(
                "class index {} out of range for {classes} classes",
                p.max(l)
            )));
        }
        cells[p][l] += 1;
    }
    Ok(ConfusionMatrix { cells })
}

fn pairs(n: u64) -> u64 {
    n * n.saturating_sub(1) / 2
}

/// Pair counts from the contingency table of (prediction, label).
pub fn pair_counts(e: &EvaluationSet) -> PairCounts {
    let mut joint: HashMap<(usize, usize), u64> = HashMap::new();
    let mut by_pred: HashMap<usize, u64> = HashMap::new();
    let mut by_label: HashMap<usize, u64> = HashMap::new();
    for (&p, &l) in e.predictions.iter().zip(&e.labels) {
        *joint.entry((p, l)).or_default() += 1;
        *by_pred.entry(p).or_default() += 1;
        *by_label.entry(l).or_default() += 1;
    }
    let tp: u64 = joint.values().map(|&n| pairs(n)).sum();
    let same_pred: u64 = by_pred.values().map(|&n| pairs(n)).sum();
    let same_label: u64 = by_label.values().map(|&n| pairs(n)).sum();
    PairCounts {
        tp,
        fp: same_pred - tp,
        fn_: same_label - tp,
    }
}

pub fn fowlkes_mallows_from_counts(c: PairCounts) -> f64 {
    if c.tp == 0 {
        if c.tp + c.fp == 0 || c.tp + c.fn_ == 0 {
            log::warn!("Fowlkes-Mallows undefined (no co-clustered pairs); reporting 0");
        }
        return 0.0;
    }
    let precision = c.tp as f64 / (c.tp + c.fp) as f64;
    let recall = c.tp as f64 / (c.tp + c.fn_) as f64;
    (precision * recall).sqrt()
}

pub fn fowlkes_mallows(e: &EvaluationSet) -> Result<f64> {
    if e.len() < 2 {
        return Err(Error::Parameter(
            "Fowlkes-Mallows needs at least 2 samples".into(),
        ));
    }
    Ok(fowlkes_mallows_from_counts(pair_counts(e)))
}

/// Reference implementation: explicit loop over every sample pair.
/// Quadratic, intended for checking [`fowlkes_mallows`].
pub fn fm_bruteforce_oracle(e: &EvaluationSet) -> f64 {
    let n = e.len();
    let mut c = PairCounts {
        tp: 0,
        fp: 0,
        fn_: 0,
    };
    for i in 0..n {
        for j in i + 1..n {
            let same_pred = e.predictions[i] == e.predictions[j];
            let same_label = e.labels[i] == e.labels[j];
            match (same_pred, same_label) {
                (true, true) => c.tp += 1,
                (true, false) => c.fp += 1,
                (false, true) => c.fn_ += 1,
                (false, false) => {}
            }
        }
    }
    fowlkes_mallows_from_counts(c)
}
