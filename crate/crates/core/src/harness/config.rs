//! Run configuration and its flat `key=value` text form.
//!
//! ```text
//! # comments and blank lines are ignored
//! epochs=50
//! stride=5
//! sigma=0.3
//! ```
//!
//! Keys are the [`TrainConfig`] field names.

use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::network::{Architecture, MAX_STRIDE};
use crate::preprocess::{normalizers, SplitSpec, DEFAULT_NORMALIZATION, FEATURE_FRAMES};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub keep_prob: f64,
    pub stride: usize,
    /// Standard deviation of the balancing noise; 0 balances with exact copies.
    pub sigma: f64,
    pub seed: u64,
    pub normalization: String,
    pub standardize: bool,
    pub train_fraction: f64,
    pub stratified: bool,
    pub frames: usize,
    pub conv1_filters: usize,
    pub conv2_filters: usize,
    pub fc1: usize,
    pub fc2: usize,
    pub corpus: PathBuf,
    pub label_map: Option<PathBuf>,
    pub output: PathBuf,
}

impl Default for TrainConfig {
    fn default() -> Self {
        let arch = Architecture::reference(5, 2);
        TrainConfig {
            epochs: 50,
            batch_size: 16,
            learning_rate: 1e-3,
            keep_prob: arch.keep_prob,
            stride: arch.stride,
            sigma: 0.0,
            seed: 0,
            normalization: DEFAULT_NORMALIZATION.into(),
            standardize: true,
            train_fraction: 0.8,
            stratified: true,
            frames: FEATURE_FRAMES,
            conv1_filters: arch.conv1_filters,
            conv2_filters: arch.conv2_filters,
            fc1: arch.fc1,
            fc2: arch.fc2,
            corpus: PathBuf::from("corpus"),
            label_map: None,
            output: PathBuf::from("runs/latest"),
        }
    }
}

fn parse<T: std::str::FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .parse()
        .map_err(|_| Error::Config(format!("{key}: cannot parse {value:?}")))
}

fn parse_bool(key: &str, value: &str) -> Result<bool> {
    match value.to_ascii_lowercase().as_str() {
        "true" | "yes" | "on" | "1" => Ok(true),
        "false" | "no" | "off" | "0" => Ok(false),
        _ => Err(Error::Config(format!(
            "{key}: expected a boolean, got {value:?}"
        ))),
    }
}

impl TrainConfig {
    pub const KEYS: [&'static str; 19] = [
        "epochs",
        "batch_size",
        "learning_rate",
        "keep_prob",
        "stride",
        "sigma",
        "seed",
        "normalization",
        "standardize",
        "train_fraction",
        "stratified",
        "frames",
        "conv1_filters",
        "conv2_filters",
        "fc1",
        "fc2",
        "corpus",
        "label_map",
        "output",
    ];

    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let value = value.trim();
        match key.trim() {
            "epochs" => self.epochs = parse(key, value)?,
            "batch_size" => self.batch_size = parse(key, value)?,
            "learning_rate" => self.learning_rate = parse(key, value)?,
            "keep_prob" => self.keep_prob = parse(key, value)?,
            "stride" => self.stride = parse(key, value)?,
            "sigma" => self.sigma = parse(key, value)?,
            "seed" => self.seed = parse(key, value)?,
            "normalization" => self.normalization = value.to_string(),
            "standardize" => self.standardize = parse_bool(key, value)?,
            "train_fraction" => self.train_fraction = parse(key, value)?,
            "stratified" => self.stratified = parse_bool(key, value)?,
            "frames" => self.frames = parse(key, value)?,
            "conv1_filters" => self.conv1_filters = parse(key, value)?,
            "conv2_filters" => self.conv2_filters = parse(key, value)?,
            "fc1" => self.fc1 = parse(key, value)?,
            "fc2" => self.fc2 = parse(key, value)?,
            "corpus" => self.corpus = PathBuf::from(value),
            "label_map" => self.label_map = (!value.is_empty()).then(|| PathBuf::from(value)),
            "output" => self.output = PathBuf::from(value),
            other => return Err(Error::Config(format!("unknown config key {other:?}"))),
        }
        Ok(())
    }

    pub fn apply_text(&mut self, text: &str) -> Result<()> {
        for (i, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (k, v) = line.split_once('=').ok_or_else(|| {
                Error::Config(format!("config line {}: expected key=value", i + 1))
            })?;
            self.set(k, v)
                .map_err(|e| Error::Config(format!("config line {}: {e}", i + 1)))?;
        }
        Ok(())
    }

    pub fn from_text(text: &str) -> Result<TrainConfig> {
        let mut c = TrainConfig::default();
        c.apply_text(text)?;
        Ok(c)
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for key in Self::KEYS {
            out.push_str(key);
            out.push('=');
            out.push_str(&self.value_of(key));
            out.push('\n');
        }
        out
    }

    fn value_of(&self, key: &str) -> String {
        match key {
            "epochs" => self.epochs.to_string(),
            "batch_size" => self.batch_size.to_string(),
            "learning_rate" => self.learning_rate.to_string(),
            "keep_prob" => self.keep_prob.to_string(),
            "stride" => self.stride.to_string(),
            "sigma" => self.sigma.to_string(),
            "seed" => self.seed.to_string(),
            "normalization" => self.normalization.clone(),
            "standardize" => self.standardize.to_string(),
            "train_fraction" => self.train_fraction.to_string(),
            "stratified" => self.stratified.to_string(),
            "frames" => self.frames.to_string(),
            "conv1_filters" => self.conv1_filters.to_string(),
            "conv2_filters" => self.conv2_filters.to_string(),
            "fc1" => self.fc1.to_string(),
            "fc2" => self.fc2.to_string(),
            "corpus" => self.corpus.display().to_string(),
            "label_map" => self
                .label_map
                .as_ref()
                .map(|p| p.display().to_string())
                .unwrap_or_default(),
            "output" => self.output.display().to_string(),
            _ => unreachable!("KEYS and value_of disagree on {key}"),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |m: String| Err(Error::Config(m));
        if self.epochs < 1 {
            return fail("epochs must be >= 1".into());
        }
        if self.batch_size < 1 {
            return fail("batch_size must be >= 1".into());
        }
        if !(1..=MAX_STRIDE).contains(&self.stride) {
            return fail(format!(
                "stride must lie in 1..={MAX_STRIDE}, got {}",
                self.stride
            ));
        }
        if !self.sigma.is_finite() || self.sigma < 0.0 {
            return fail(format!("sigma must be >= 0, got {}", self.sigma));
        }
        if !self.learning_rate.is_finite() || self.learning_rate <= 0.0 {
            return fail(format!(
                "learning_rate must be > 0, got {}",
                self.learning_rate
            ));
        }
        if !(self.keep_prob > 0.0 && self.keep_prob <= 1.0) {
            return fail(format!(
                "keep_prob must lie in (0, 1], got {}",
                self.keep_prob
            ));
        }
        if !(self.train_fraction > 0.0 && self.train_fraction < 1.0) {
            return fail(format!(
                "train_fraction must lie in (0, 1), got {}",
                self.train_fraction
            ));
        }
        if self.frames < 1
            || self.conv1_filters < 1
            || self.conv2_filters < 1
            || self.fc1 < 1
            || self.fc2 < 1
        {
            return fail("layer sizes and frame count must be >= 1".into());
        }
        normalizers().create(&self.normalization)?;
        Ok(())
    }

    pub fn split_spec(&self) -> SplitSpec {
        SplitSpec {
            train_fraction: self.train_fraction,
            seed: self.seed,
            stratified: self.stratified,
        }
    }

    pub fn architecture(&self, classes: usize) -> Architecture {
        Architecture {
            frames: self.frames,
            conv1_filters: self.conv1_filters,
            conv2_filters: self.conv2_filters,
            fc1: self.fc1,
            fc2: self.fc2,
            keep_prob: self.keep_prob,
            ..Architecture::reference(self.stride, classes)
        }
    }
}
