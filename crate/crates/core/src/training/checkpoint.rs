//! Checkpoints: every parameter as an F64 safetensors tensor, plus
//! `format`, `config`, `vocab_hash`, `step` and `seed` in the header metadata.

use std::collections::HashMap;
use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use safetensors::{tensor::TensorView, Dtype, SafeTensors};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{ModelConfig, RelationModel};

pub const CHECKPOINT_FORMAT: &str = "indicator-re/1";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CheckpointMeta {
    pub format: String,
    pub config: ModelConfig,
    pub vocab_hash: String,
    pub step: u64,
    pub seed: u64,
}

pub fn save_checkpoint(
    path: &Path,
    model: &RelationModel,
    vocab_hash: &str,
    step: u64,
    seed: u64,
) -> Result<()> {
    let buffers: Vec<(String, Vec<usize>, Vec<u8>)> = model
        .params
        .iter()
        .map(|(_, name, m)| {
            let bytes: Vec<u8> = m.iter().flat_map(|v| v.to_le_bytes()).collect();
            (name.to_string(), vec![m.nrows(), m.ncols()], bytes)
        })
        .collect();
    let views = buffers
        .iter()
        .map(|(name, shape, bytes)| {
            TensorView::new(Dtype::F64, shape.clone(), bytes)
                .map(|v| (name.clone(), v))
                .map_err(|e| Error::Checkpoint(format!("{name}: {e}")))
        })
        .collect::<Result<Vec<_>>>()?;
    let metadata = HashMap::from([
        ("format".to_string(), CHECKPOINT_FORMAT.to_string()),
        ("config".to_string(), serde_json::to_string(model.config())?),
        ("vocab_hash".to_string(), vocab_hash.to_string()),
        ("step".to_string(), step.to_string()),
        ("seed".to_string(), seed.to_string()),
    ]);
    let bytes = safetensors::serialize(views, Some(metadata))
        .map_err(|e| Error::Checkpoint(e.to_string()))?;
    std::fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

/// Reads the header metadata only.
pub fn read_checkpoint_meta(bytes: &[u8]) -> Result<CheckpointMeta> {
    let (_, header) = SafeTensors::read_metadata(bytes)
        .map_err(|e| Error::Checkpoint(format!("not a safetensors file: {e}")))?;
    let meta = header
        .metadata()
        .as_ref()
        .ok_or_else(|| Error::Checkpoint("no metadata".into()))?;
    let field = |k: &str| {
        meta.get(k)
            .ok_or_else(|| Error::Checkpoint(format!("metadata lacks `{k}`")))
    };
    let format = field("format")?.clone();
    if format != CHECKPOINT_FORMAT {
        return Err(Error::Checkpoint(format!("unsupported format `{format}`")));
    }
    let num = |k: &str| -> Result<u64> {
        field(k)?
            .parse()
            .map_err(|_| Error::Checkpoint(format!("metadata `{k}` is not an integer")))
    };
    Ok(CheckpointMeta {
        format,
        config: serde_json::from_str(field("config")?)?,
        vocab_hash: field("vocab_hash")?.clone(),
        step: num("step")?,
        seed: num("seed")?,
    })
}

/// Loads a checkpoint. With `vocab_hash`, refuses a checkpoint written for
/// a different vocabulary.
pub fn load_checkpoint(
    path: &Path,
    vocab_hash: Option<&str>,
) -> Result<(RelationModel, CheckpointMeta)> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    let meta = read_checkpoint_meta(&bytes)?;
    if let Some(expected) = vocab_hash {
        if expected != meta.vocab_hash {
            return Err(Error::Checkpoint(format!(
                "vocabulary hash mismatch: checkpoint has {}, vocabulary is {expected}",
                meta.vocab_hash
            )));
        }
    }
    let st = SafeTensors::deserialize(&bytes).map_err(|e| Error::Checkpoint(e.to_string()))?;
    let mut model = RelationModel::new(meta.config.clone(), &mut ChaCha8Rng::seed_from_u64(0))?;
    let names: Vec<(crate::tensor::ParamId, String)> = model
        .params
        .iter()
        .map(|(id, n, _)| (id, n.to_string()))
        .collect();
    for (id, name) in names {
        let view = st
            .tensor(&name)
            .map_err(|_| Error::Checkpoint(format!("missing tensor `{name}`")))?;
        let value =
            crate::model::view_to_matrix(view.dtype(), view.shape(), view.data(), &name)?;
        let target = model.params.get_mut(id);
        if value.dim() != target.dim() {
            return Err(Error::Shape(format!(
                "tensor `{name}` has shape {:?}, config expects {:?}",
                value.dim(),
                target.dim()
            )));
        }
        *target = value;
    }
    Ok((model, meta))
}
