//! Model checkpoint file.
//!
//! Layout:
//!
//! ```text
//! u32 LE    header length in bytes
//! [...]     header JSON (CheckpointHeader)
//! then, for each layer in order:
//!   FMX block  weights, out_dim × in_dim
//!   FMX block  biases, 1 × out_dim
//! ```
//!
//! The header records the model config (including its seed), the training
//! hyperparameters, the selected epoch, the layer shapes, and free-form
//! provenance tags (the CLI stores the experiment config hash and split
//! seed there). FMX payloads are f32, so reloaded parameters carry f32
//! precision; evaluation within a run uses the in-memory f64 parameters
//! and the checkpoint is the persistent record.

use std::collections::BTreeMap;
use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{DenseLayer, Hyperparams, Model, ModelParams};
use crate::error::{Error, Result};
use crate::fmx;

pub const CHECKPOINT_FORMAT: &str = "nsdid-ckpt-v1";

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CheckpointHeader {
    pub format: String,
    pub config: super::ModelConfig,
    pub hyperparams: Hyperparams,
    pub best_epoch: usize,
    pub layer_shapes: Vec<(usize, usize)>,
    #[serde(default)]
    pub tags: BTreeMap<String, String>,
}

pub fn save_checkpoint(
    path: impl AsRef<Path>,
    model: &Model,
    hyperparams: &Hyperparams,
    best_epoch: usize,
    tags: BTreeMap<String, String>,
) -> Result<()> {
    let header = CheckpointHeader {
        format: CHECKPOINT_FORMAT.to_string(),
        config: model.config.clone(),
        hyperparams: hyperparams.clone(),
        best_epoch,
        layer_shapes: model
            .params
            .layers
            .iter()
            .map(|l| (l.out_dim, l.in_dim))
            .collect(),
        tags,
    };
    let header_bytes = serde_json::to_vec(&header)?;
    let mut out = std::io::BufWriter::new(std::fs::File::create(path)?);
    out.write_all(&(header_bytes.len() as u32).to_le_bytes())?;
    out.write_all(&header_bytes)?;
    for layer in &model.params.layers {
        fmx::write_fmx_raw(layer.out_dim, layer.in_dim, &layer.w, &mut out)?;
        fmx::write_fmx_raw(1, layer.out_dim, &layer.b, &mut out)?;
    }
    Ok(())
}

pub fn load_checkpoint(path: impl AsRef<Path>) -> Result<(Model, CheckpointHeader)> {
    let mut file = std::io::BufReader::new(std::fs::File::open(path)?);
    let mut len_bytes = [0u8; 4];
    file.read_exact(&mut len_bytes)?;
    let header_len = u32::from_le_bytes(len_bytes) as usize;
    let mut header_bytes = vec![0u8; header_len];
    file.read_exact(&mut header_bytes)?;
    let header: CheckpointHeader = serde_json::from_slice(&header_bytes)?;
    if header.format != CHECKPOINT_FORMAT {
        return Err(Error::Checkpoint(format!(
            "unsupported format `{}`",
            header.format
        )));
    }
    let expected_shapes: Vec<(usize, usize)> = {
        let dims = header.config.layer_dims();
        dims.windows(2).map(|p| (p[1], p[0])).collect()
    };
    if header.layer_shapes != expected_shapes {
        return Err(Error::Checkpoint(format!(
            "layer shapes {:?} do not match config {:?}",
            header.layer_shapes, expected_shapes
        )));
    }
    let mut layers = Vec::with_capacity(header.layer_shapes.len());
    for &(out_dim, in_dim) in &header.layer_shapes {
        let (rows, cols, w) = fmx::read_fmx_raw(&mut file)?;
        if (rows, cols) != (out_dim, in_dim) {
            return Err(Error::Checkpoint(format!(
                "weight block {rows}x{cols}, expected {out_dim}x{in_dim}"
            )));
        }
        let (rows, cols, b) = fmx::read_fmx_raw(&mut file)?;
        if (rows, cols) != (1, out_dim) {
            return Err(Error::Checkpoint(format!(
                "bias block {rows}x{cols}, expected 1x{out_dim}"
            )));
        }
        layers.push(DenseLayer {
            w,
            b,
            in_dim,
            out_dim,
        });
    }
    Ok((
        Model {
            config: header.config.clone(),
            params: ModelParams { layers },
        },
        header,
    ))
}
