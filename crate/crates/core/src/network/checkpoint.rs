//! Checkpoint file layout, all integers little-endian:
//!
//! ```text
//! b"JCNNCKP1"
//! u32 manifest_len, manifest_len bytes of JSON manifest
//! parameter tensors (tensor codec) in NetworkParams::parameters order
//! if the manifest has an optimizer entry: Adam m tensors, then v tensors
//! ```
//!
//! The manifest carries the architecture, seed, class names, optimizer
//! hyperparameters and step, and free-form metadata.

use std::fs;
use std::io::{Cursor, Read};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{Architecture, NetworkParams};
use crate::error::{Error, Result};
use crate::optim::{AdamConfig, AdamState};
use crate::tensor::{read_tensor, write_tensor, Rng};

const MAGIC: &[u8; 8] = b"JCNNCKP1";

#[derive(Clone, Debug, PartialEq)]
pub struct Checkpoint {
    pub seed: u64,
    pub classes: Vec<String>,
    pub metadata: serde_json::Value,
    pub params: NetworkParams,
    pub optimizer: Option<AdamState>,
}

#[derive(Serialize, Deserialize)]
struct Manifest {
    architecture: Architecture,
    seed: u64,
    classes: Vec<String>,
    optimizer: Option<OptimizerEntry>,
    metadata: serde_json::Value,
}

#[derive(Serialize, Deserialize)]
struct OptimizerEntry {
    config: AdamConfig,
    step: u64,
}

impl Checkpoint {
    pub fn to_bytes(&self) -> Result<Vec<u8>> {
        let manifest = Manifest {
            architecture: self.params.architecture.clone(),
            seed: self.seed,
            classes: self.classes.clone(),
            optimizer: self.optimizer.as_ref().map(|o| OptimizerEntry {
                config: o.config,
                step: o.step,
            }),
            metadata: self.metadata.clone(),
        };
        let json = serde_json::to_vec(&manifest)?;
        let mut out = Vec::new();
        out.extend_from_slice(MAGIC);
        out.extend_from_slice(&(json.len() as u32).to_le_bytes());
        out.extend_from_slice(&json);
        let io = |e| Error::Checkpoint(format!("encoding failed: {e}"));
        for p in self.params.parameters() {
            write_tensor(&mut out, p).map_err(io)?;
        }
        if let Some(opt) = &self.optimizer {
            opt.write_moments(&mut out).map_err(io)?;
        }
        Ok(out)
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Checkpoint> {
        let mut r = Cursor::new(bytes);
        let mut magic = [0u8; 8];
        r.read_exact(&mut magic)
            .ok()
            .filter(|_| &magic == MAGIC)
            .ok_or_else(|| Error::Checkpoint("not a checkpoint file".into()))?;
        let mut len = [0u8; 4];
        r.read_exact(&mut len)
            .map_err(|e| Error::Checkpoint(e.to_string()))?;
        let mut json = vec![0u8; u32::from_le_bytes(len) as usize];
        r.read_exact(&mut json)
            .map_err(|e| Error::Checkpoint(format!("truncated manifest: {e}")))?;
        let manifest: Manifest = serde_json::from_slice(&json)?;

        // Build a correctly-shaped network, then overwrite every tensor.
        let mut params = NetworkParams::init(&Rng::new(0), manifest.architecture.clone())?;
        let mut shapes = Vec::new();
        for (i, slot) in params.parameters_mut().into_iter().enumerate() {
            let t = read_tensor(&mut r)?;
            if t.shape() != slot.shape() {
                return Err(Error::Checkpoint(format!(
                    "parameter {i} has shape {:?} but the architecture needs {:?}",
                    t.shape(),
                    slot.shape()
                )));
            }
            shapes.push(t.shape().to_vec());
            *slot = t;
        }
        let optimizer = manifest
            .optimizer
            .map(|o| AdamState::read_moments(o.config, o.step, &shapes, &mut r))
            .transpose()?;
        if (r.position() as usize) != bytes.len() {
            return Err(Error::Checkpoint(
                "trailing bytes after checkpoint data".into(),
            ));
        }
        Ok(Checkpoint {
            seed: manifest.seed,
            classes: manifest.classes,
            metadata: manifest.metadata,
            params,
            optimizer,
        })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        fs::write(path, self.to_bytes()?).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Checkpoint> {
        let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
        Checkpoint::from_bytes(&bytes)
    }
}
