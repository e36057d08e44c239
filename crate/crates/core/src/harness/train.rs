//! Corpus preparation, the training loop, and evaluation.

use std::fs;
use std::path::Path;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use super::config::TrainConfig;
use crate::dataset::{load_corpus, Corpus, LabelMap};
use crate::error::{Error, Result};
use crate::metrics::{accuracy, confusion, fowlkes_mallows, EvaluationSet};
use crate::network::{softmax_cross_entropy, Checkpoint, Mode, NetworkParams};
use crate::optim::{AdamConfig, AdamState};
use crate::preprocess::cache::{is_cache, PreparedCorpus};
use crate::preprocess::{
    assemble, augment, fit_standardizer, normalize_frames, normalizers, split, FeatureTensor,
    SplitSpec, Standardizer,
};
use crate::tensor::{Rng, Tensor};

// Child streams of the run seed.
const STREAM_INIT: u64 = 1;
const STREAM_AUGMENT: u64 = 2;
const STREAM_SHUFFLE: u64 = 3;
const STREAM_DROPOUT: u64 = 4;

pub const CHECKPOINT_FILE: &str = "checkpoint.bin";
pub const REPORT_FILE: &str = "report.json";
pub const RESOLVED_CONFIG_FILE: &str = "resolved-config.txt";

/// Position of a run inside a sweep.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    pub axis: String,
    pub value: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub config: TrainConfig,
    pub classes: Vec<String>,
    /// Mean training loss of every epoch.
    pub train_loss: Vec<f64>,
    /// Accuracy on the training partition before balancing; absent when a
    /// stored checkpoint was scored without training.
    pub train_accuracy: Option<f64>,
    pub accuracy: f64,
    pub fm: f64,
    /// `confusion[predicted][actual]`.
    pub confusion: Vec<Vec<u64>>,
    pub test_ids: Vec<String>,
    pub predictions: Vec<usize>,
    pub labels: Vec<usize>,
    pub sweep: Option<SweepPoint>,
    pub duration_secs: f64,
}

impl EvalReport {
    pub fn read(path: &Path) -> Result<EvalReport> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Ok(serde_json::from_str(&text)?)
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        let text = serde_json::to_string_pretty(self)?;
        fs::write(path, text + "\n").map_err(|e| Error::io(path, e))
    }

    pub fn test_samples(&self) -> usize {
        self.labels.len()
    }
}

/// Everything needed to rebuild the inputs a checkpoint was trained on.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunMetadata {
    pub frames: usize,
    pub normalization: String,
    pub standardize: bool,
    pub standardizer: Standardizer,
    pub split: SplitSpec,
    pub label_merges: Vec<(String, String)>,
}

impl RunMetadata {
    pub fn from_checkpoint(ck: &Checkpoint) -> Result<RunMetadata> {
        serde_json::from_value(ck.metadata.clone())
            .map_err(|e| Error::Checkpoint(format!("run metadata: {e}")))
    }

    pub fn label_map(&self, classes: &[String]) -> Result<LabelMap> {
        let text: String = self
            .label_merges
            .iter()
            .map(|(raw, merged)| format!("{raw} -> {merged}\n"))
            .collect();
        Ok(LabelMap::parse(&text)?.with_classes(classes.to_vec()))
    }
}

#[derive(Clone, Debug)]
pub struct TrainOutcome {
    pub checkpoint: Checkpoint,
    pub report: EvalReport,
}

pub fn load_label_map(path: Option<&Path>) -> Result<LabelMap> {
    match path {
        None => Ok(LabelMap::default_map()),
        Some(p) => LabelMap::parse(&fs::read_to_string(p).map_err(|e| Error::io(p, e))?),
    }
}

/// Normalises every sequence to `frames`, assembles, splits and fits the
/// standardizer on the training side.
pub fn prepare_corpus(
    corpus: &Corpus,
    frames: usize,
    normalization: &str,
    spec: &SplitSpec,
) -> Result<PreparedCorpus> {
    let method = normalizers().create(normalization)?;
    let samples = corpus
        .sequences
        .iter()
        .map(|s| {
            assemble(
                &normalize_frames(s, frames, method.as_ref())?,
                frames,
                &corpus.labels,
            )
        })
        .collect::<Result<Vec<_>>>()?;
    let labels: Vec<usize> = samples.iter().map(|s| s.label_index).collect();
    let partition = split(&labels, spec)?;
    let train: Vec<FeatureTensor> = partition
        .train
        .iter()
        .map(|&i| samples[i].clone())
        .collect();
    let standardizer = fit_standardizer(&train)?;
    Ok(PreparedCorpus {
        classes: corpus.labels.classes().to_vec(),
        frames,
        normalization: method.spec(),
        split: *spec,
        partition,
        standardizer,
        samples,
    })
}

/// Reads `config.corpus` as a prepared cache when it is one, otherwise as
/// a raw recording tree.
pub fn prepare(config: &TrainConfig) -> Result<PreparedCorpus> {
    if is_cache(&config.corpus) {
        let cached = PreparedCorpus::read(&config.corpus)?;
        if cached.frames != config.frames {
            return Err(Error::Config(format!(
                "cache {} holds {} frames per sample but the run asks for {}",
                config.corpus.display(),
                cached.frames,
                config.frames
            )));
        }
        if cached.split != config.split_spec() {
            log::warn!(
                "using the split stored in cache {}",
                config.corpus.display()
            );
        }
        let wanted = normalizers().create(&config.normalization)?.spec();
        if cached.normalization != wanted {
            log::warn!(
                "cache {} was normalised with {}; ignoring {}",
                config.corpus.display(),
                cached.normalization,
                wanted
            );
        }
        return Ok(cached);
    }
    let map = load_label_map(config.label_map.as_deref())?;
    let corpus = load_corpus(&config.corpus, &map)?;
    prepare_corpus(
        &corpus,
        config.frames,
        &config.normalization,
        &config.split_spec(),
    )
}

/// Index of the largest logit; the first one wins ties.
pub fn argmax(logits: &Tensor) -> usize {
    let mut best = 0;
    for (i, &v) in logits.data().iter().enumerate() {
        if v > logits.data()[best] {
            best = i;
        }
    }
    best
}

pub fn predict(params: &NetworkParams, samples: &[FeatureTensor]) -> Result<Vec<usize>> {
    let mut net = params.clone();
    net.set_mode(Mode::Infer);
    samples
        .iter()
        .map(|s| net.infer(&s.data).map(|l| argmax(&l)))
        .collect()
}

fn standardized(
    samples: Vec<FeatureTensor>,
    st: Option<&Standardizer>,
) -> Result<Vec<FeatureTensor>> {
    match st {
        None => Ok(samples),
        Some(st) => samples.iter().map(|s| st.apply(s)).collect(),
    }
}

/// Trains on the prepared training partition and evaluates on its test side.
pub fn train_prepared(config: &TrainConfig, prepared: &PreparedCorpus) -> Result<TrainOutcome> {
    config.validate()?;
    let started = Instant::now();
    let classes = prepared.classes.len();
    let arch = config.architecture(classes);
    if prepared.frames != arch.frames {
        return Err(Error::Config(format!(
            "prepared samples have {} frames, architecture expects {}",
            prepared.frames, arch.frames
        )));
    }
    arch.shape_plan()?;

    let st = config.standardize.then_some(&prepared.standardizer);
    let train = standardized(prepared.train_samples(), st)?;
    let test = standardized(prepared.test_samples(), st)?;
    if train.is_empty() {
        return Err(Error::Config("training partition is empty".into()));
    }
    if test.is_empty() {
        return Err(Error::Config(
            "test partition is empty; the corpus is too small to split".into(),
        ));
    }

    let rng = Rng::new(config.seed);
    let balanced = augment(&train, config.sigma, &rng.split(STREAM_AUGMENT))?;
    let mut params = NetworkParams::init(&rng.split(STREAM_INIT), arch)?;
    params.set_mode(Mode::Train);
    let adam_config = AdamConfig {
        learning_rate: config.learning_rate,
        ..AdamConfig::default()
    };
    let mut adam = AdamState::new(adam_config, &params.parameters());
    let mut grads = params.zero_gradients();
    let shuffle_root = rng.split(STREAM_SHUFFLE);
    let dropout_root = rng.split(STREAM_DROPOUT);

    log::info!(
        "training on {} samples ({} after balancing), testing on {}",
        train.len(),
        balanced.len(),
        test.len()
    );
    let mut train_loss = Vec::with_capacity(config.epochs);
    let mut step = 0u64;
    for epoch in 0..config.epochs {
        let mut order: Vec<usize> = (0..balanced.len()).collect();
        shuffle_root.split(epoch as u64).shuffle(&mut order);
        let mut total = 0.0;
        for batch in order.chunks(config.batch_size) {
            grads.zero();
            let step_rng = dropout_root.split(step);
            for (pos, &i) in batch.iter().enumerate() {
                let sample = &balanced[i];
                let mut drop_rng = step_rng.split(pos as u64);
                let pass = params.forward(&sample.data, Some(&mut drop_rng))?;
                if !pass.logits.is_finite() {
                    return Err(Error::Diverged(format!(
                        "logits became non-finite at epoch {} step {step}",
                        epoch + 1
                    )));
                }
                let (loss, grad_logits) = softmax_cross_entropy(&pass.logits, sample.label_index)?;
                if !loss.is_finite() {
                    return Err(Error::Diverged(format!(
                        "loss became {loss} at epoch {} step {step}",
                        epoch + 1
                    )));
                }
                total += loss;
                params.backward(&pass, &grad_logits, &mut grads)?;
            }
            grads.scale(1.0 / batch.len() as f64);
            adam.step(&mut params.parameters_mut(), grads.tensors())?;
            step += 1;
        }
        let mean = total / balanced.len() as f64;
        log::info!("epoch {}/{}: loss {mean:.6}", epoch + 1, config.epochs);
        train_loss.push(mean);
    }

    let train_eval = EvaluationSet::new(
        predict(&params, &train)?,
        train.iter().map(|s| s.label_index).collect(),
    )?;
    let test_eval = EvaluationSet::new(
        predict(&params, &test)?,
        test.iter().map(|s| s.label_index).collect(),
    )?;
    let report = EvalReport {
        config: config.clone(),
        classes: prepared.classes.clone(),
        train_loss,
        train_accuracy: Some(accuracy(&train_eval)),
        accuracy: accuracy(&test_eval),
        fm: fowlkes_mallows(&test_eval)?,
        confusion: confusion(&test_eval, classes)?.cells,
        test_ids: test.iter().map(|s| s.source_id.clone()).collect(),
        predictions: test_eval.predictions().to_vec(),
        labels: test_eval.labels().to_vec(),
        sweep: None,
        duration_secs: started.elapsed().as_secs_f64(),
    };
    log::info!(
        "train accuracy {:.4}, test accuracy {:.4}, FM {:.4}",
        report.train_accuracy.unwrap_or(f64::NAN),
        report.accuracy,
        report.fm
    );

    let metadata = RunMetadata {
        frames: prepared.frames,
        normalization: prepared.normalization.clone(),
        standardize: config.standardize,
        standardizer: prepared.standardizer.clone(),
        split: prepared.split,
        label_merges: load_label_map(config.label_map.as_deref())?
            .merges()
            .to_vec(),
    };
    let checkpoint = Checkpoint {
        seed: config.seed,
        classes: prepared.classes.clone(),
        metadata: serde_json::to_value(&metadata)?,
        params,
        optimizer: Some(adam),
    };
    Ok(TrainOutcome { checkpoint, report })
}

pub fn train(config: &TrainConfig) -> Result<TrainOutcome> {
    config.validate()?;
    let prepared = prepare(config)?;
    train_prepared(config, &prepared)
}

/// Writes `checkpoint.bin`, `report.json` and `resolved-config.txt` into `dir`.
pub fn write_outputs(outcome: &TrainOutcome, dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    outcome.checkpoint.save(&dir.join(CHECKPOINT_FILE))?;
    outcome.report.write(&dir.join(REPORT_FILE))?;
    let cfg = dir.join(RESOLVED_CONFIG_FILE);
    fs::write(&cfg, outcome.report.config.to_text()).map_err(|e| Error::io(&cfg, e))
}

/// Scores a checkpoint on freshly prepared samples.
///
/// `samples` must be raw (unstandardised) tensors with the checkpoint's
/// class indices; the stored standardizer is applied when the run used one.
pub fn evaluate_samples(ck: &Checkpoint, samples: &[FeatureTensor]) -> Result<EvaluationSet> {
    let meta = RunMetadata::from_checkpoint(ck)?;
    let st = meta.standardize.then_some(&meta.standardizer);
    let inputs = standardized(samples.to_vec(), st)?;
    EvaluationSet::new(
        predict(&ck.params, &inputs)?,
        inputs.iter().map(|s| s.label_index).collect(),
    )
}

/// Run configuration recoverable from a checkpoint: architecture, seed,
/// preprocessing and split. Paths and optimisation schedule keep defaults.
pub fn config_for_checkpoint(ck: &Checkpoint) -> Result<TrainConfig> {
    let meta = RunMetadata::from_checkpoint(ck)?;
    let a = &ck.params.architecture;
    let mut c = TrainConfig {
        keep_prob: a.keep_prob,
        stride: a.stride,
        seed: ck.seed,
        normalization: meta.normalization,
        standardize: meta.standardize,
        train_fraction: meta.split.train_fraction,
        stratified: meta.split.stratified,
        frames: meta.frames,
        conv1_filters: a.conv1_filters,
        conv2_filters: a.conv2_filters,
        fc1: a.fc1,
        fc2: a.fc2,
        ..TrainConfig::default()
    };
    if let Some(opt) = &ck.optimizer {
        c.learning_rate = opt.config.learning_rate;
    }
    Ok(c)
}

/// Scores a checkpoint and packages the result like a training report.
pub fn evaluation_report(
    ck: &Checkpoint,
    samples: &[FeatureTensor],
    config: TrainConfig,
) -> Result<EvalReport> {
    let started = Instant::now();
    let eval = evaluate_samples(ck, samples)?;
    Ok(EvalReport {
        config,
        classes: ck.classes.clone(),
        train_loss: Vec::new(),
        train_accuracy: None,
        accuracy: accuracy(&eval),
        fm: fowlkes_mallows(&eval)?,
        confusion: confusion(&eval, ck.classes.len())?.cells,
        test_ids: samples.iter().map(|s| s.source_id.clone()).collect(),
        predictions: eval.predictions().to_vec(),
        labels: eval.labels().to_vec(),
        sweep: None,
        duration_secs: started.elapsed().as_secs_f64(),
    })
}

/// The test side of the checkpoint's stored split, applied to `samples`.
/// Reproduces the training run's test partition when `samples` is the
/// same corpus.
pub fn test_partition(ck: &Checkpoint, samples: Vec<FeatureTensor>) -> Result<Vec<FeatureTensor>> {
    let meta = RunMetadata::from_checkpoint(ck)?;
    let labels: Vec<usize> = samples.iter().map(|s| s.label_index).collect();
    let part = split(&labels, &meta.split)?;
    Ok(part.test.iter().map(|&i| samples[i].clone()).collect())
}

/// Loads and prepares every recording under `corpus` (raw tree or cache)
/// against a checkpoint's classes, frame count and normalisation.
pub fn load_for_checkpoint(ck: &Checkpoint, corpus: &Path) -> Result<Vec<FeatureTensor>> {
    let meta = RunMetadata::from_checkpoint(ck)?;
    if is_cache(corpus) {
        let cached = PreparedCorpus::read(corpus)?;
        if cached.classes != ck.classes || cached.frames != meta.frames {
            return Err(Error::Config(format!(
                "cache {} does not match the checkpoint's classes and frame count",
                corpus.display()
            )));
        }
        return Ok(cached.samples);
    }
    let classes = meta.label_map(&ck.classes)?;
    let loaded = load_corpus(corpus, &classes)?;
    let method = normalizers().create(&meta.normalization)?;
    loaded
        .sequences
        .iter()
        .map(|s| {
            assemble(
                &normalize_frames(s, meta.frames, method.as_ref())?,
                meta.frames,
                &classes,
            )
        })
        .collect()
}
