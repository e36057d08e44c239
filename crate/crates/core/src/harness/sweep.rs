//! One-axis parameter sweeps over stride or noise level.
//!
//! ```text
//! <out>/stride-2/{checkpoint.bin,report.json,resolved-config.txt}
//! <out>/stride-3/...
//! <out>/summary.csv
//! <out>/accuracy-vs-stride.{svg,csv}
//! ```

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::config::TrainConfig;
use super::report::write_charts;
use super::train::{prepare, train_prepared, write_outputs, EvalReport, SweepPoint};
use crate::error::{Error, Result};
use crate::network::MAX_STRIDE;

pub const SUMMARY_FILE: &str = "summary.csv";

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SweepAxis {
    Stride,
    Sigma,
}

impl SweepAxis {
    pub fn parse(name: &str) -> Result<SweepAxis> {
        match name {
            "stride" => Ok(SweepAxis::Stride),
            "sigma" => Ok(SweepAxis::Sigma),
            other => Err(Error::Config(format!(
                "unknown sweep axis {other:?}; use stride or sigma"
            ))),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            SweepAxis::Stride => "stride",
            SweepAxis::Sigma => "sigma",
        }
    }

    /// Strides 2 through 7, or noise levels 0.1 through 0.5.
    pub fn default_values(self) -> Vec<f64> {
        match self {
            SweepAxis::Stride => (2..=MAX_STRIDE).map(|s| s as f64).collect(),
            SweepAxis::Sigma => (1..=5).map(|k| k as f64 / 10.0).collect(),
        }
    }

    pub fn apply(self, config: &mut TrainConfig, value: f64) -> Result<()> {
        match self {
            SweepAxis::Stride => {
                if value.fract() != 0.0 || value < 1.0 {
                    return Err(Error::Config(format!(
                        "stride {value} is not a positive integer"
                    )));
                }
                config.stride = value as usize;
            }
            SweepAxis::Sigma => config.sigma = value,
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub axis: String,
    pub value: f64,
    pub accuracy: Option<f64>,
    pub fm: Option<f64>,
    /// Present when the point failed; the other points still run.
    pub error: Option<String>,
}

#[derive(Clone, Debug)]
pub struct SweepOutcome {
    pub rows: Vec<SummaryRow>,
    pub reports: Vec<EvalReport>,
}

pub fn write_summary(rows: &[SummaryRow], path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    for r in rows {
        w.serialize(r)?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn read_summary(path: &Path) -> Result<Vec<SummaryRow>> {
    let mut r = csv::Reader::from_path(path)?;
    r.deserialize()
        .map(|row| row.map_err(Error::from))
        .collect()
}

/// Trains one model per value, sequentially, reusing one prepared corpus.
/// Each point is written under `<out>/<axis>-<value>/`.
pub fn run_sweep(
    base: &TrainConfig,
    axis: SweepAxis,
    values: &[f64],
    out: &Path,
) -> Result<SweepOutcome> {
    if values.is_empty() {
        return Err(Error::Config("sweep has no values".into()));
    }
    base.validate()?;
    let prepared = prepare(base)?;
    fs::create_dir_all(out).map_err(|e| Error::io(out, e))?;

    let mut rows = Vec::with_capacity(values.len());
    let mut reports = Vec::new();
    for &value in values {
        let dir = out.join(format!("{}-{value}", axis.name()));
        log::info!("sweep point {}={value}", axis.name());
        let mut config = base.clone();
        config.output = dir.clone();
        let result = axis.apply(&mut config, value).and_then(|_| {
            let mut outcome = train_prepared(&config, &prepared)?;
            outcome.report.sweep = Some(SweepPoint {
                axis: axis.name().into(),
                value,
            });
            write_outputs(&outcome, &dir)?;
            Ok(outcome.report)
        });
        match result {
            Ok(report) => {
                rows.push(SummaryRow {
                    axis: axis.name().into(),
                    value,
                    accuracy: Some(report.accuracy),
                    fm: Some(report.fm),
                    error: None,
                });
                reports.push(report);
            }
            Err(e) => {
                log::error!("sweep point {}={value} failed: {e}", axis.name());
                rows.push(SummaryRow {
                    axis: axis.name().into(),
                    value,
                    accuracy: None,
                    fm: None,
                    error: Some(e.to_string()),
                });
            }
        }
    }
    write_summary(&rows, &out.join(SUMMARY_FILE))?;
    if !reports.is_empty() {
        write_charts("axis-line-chart", &reports, out)?;
    }
    Ok(SweepOutcome { rows, reports })
}
