//! Loading BERT-layout encoder weights from a Hugging Face safetensors file.

use std::path::{Path, PathBuf};

use safetensors::{Dtype, SafeTensors};
use serde::{Deserialize, Serialize};

use super::config::{EncoderConfig, EncoderVariant};
use super::RelationModel;
use crate::error::{Error, Result};
use crate::tensor::Matrix;

/// The fields of a BERT `config.json` that shape the encoder.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BertConfig {
    pub vocab_size: usize,
    pub hidden_size: usize,
    pub num_hidden_layers: usize,
    pub num_attention_heads: usize,
    pub intermediate_size: usize,
    pub max_position_embeddings: usize,
    #[serde(default = "two")]
    pub type_vocab_size: usize,
    #[serde(default = "bert_eps")]
    pub layer_norm_eps: f64,
    #[serde(default = "bert_dropout")]
    pub hidden_dropout_prob: f64,
    #[serde(default = "gelu")]
    pub hidden_act: String,
}

fn two() -> usize {
    2
}
fn bert_eps() -> f64 {
    1e-12
}
fn bert_dropout() -> f64 {
    0.1
}
fn gelu() -> String {
    "gelu".into()
}

impl BertConfig {
    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let cfg: BertConfig = serde_json::from_str(&text)?;
        if cfg.hidden_act != "gelu" {
            return Err(Error::Config(format!(
                "unsupported activation `{}` (only exact gelu)",
                cfg.hidden_act
            )));
        }
        Ok(cfg)
    }
}

impl EncoderConfig {
    /// Encoder dimensions read from a BERT `config.json`.
    pub fn pretrained(weights: impl Into<PathBuf>, bert_config: impl Into<PathBuf>) -> Result<Self> {
        let config_path = bert_config.into();
        let bert = BertConfig::from_file(&config_path)?;
        Ok(EncoderConfig {
            variant: EncoderVariant::PretrainedTransformer,
            hidden_dim: bert.hidden_size,
            layers: bert.num_hidden_layers,
            heads: bert.num_attention_heads,
            intermediate_dim: bert.intermediate_size,
            max_positions: bert.max_position_embeddings,
            type_vocab_size: bert.type_vocab_size,
            dropout_rate: bert.hidden_dropout_prob,
            layer_norm_eps: bert.layer_norm_eps,
            weights: Some(weights.into()),
            bert_config: Some(config_path),
            ..EncoderConfig::toy()
        })
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LoadReport {
    pub tensors: usize,
    /// Name prefix found in the file (`"bert."` or empty).
    pub prefix: String,
    /// Embedding rows kept from initialization because the vocabulary is
    /// larger than the checkpoint's.
    pub new_vocab_rows: usize,
}

/// Overwrites every encoder tensor of `model` with the weights in `path`.
/// Head parameters are left as initialized.
pub fn load_pretrained(model: &mut RelationModel, path: &Path) -> Result<LoadReport> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    let st = SafeTensors::deserialize(&bytes)
        .map_err(|e| Error::Checkpoint(format!("{}: {e}", path.display())))?;
    let prefix = if st.names().iter().any(|n| n.starts_with("bert.")) {
        "bert."
    } else {
        ""
    };

    let targets: Vec<(crate::tensor::ParamId, String)> = model
        .params
        .iter()
        .filter(|(_, name, _)| name.starts_with("encoder."))
        .map(|(id, name, _)| (id, name.to_string()))
        .collect();
    if targets.is_empty() {
        return Err(Error::Config("model has no transformer encoder".into()));
    }

    let mut new_vocab_rows = 0;
    for (id, ours) in &targets {
        let (candidates, transpose) = hf_names(ours);
        let (name, view) = candidates
            .iter()
            .find_map(|c| {
                let full = format!("{prefix}{c}");
                st.tensor(&full).ok().map(|v| (full, v))
            })
            .ok_or_else(|| {
                Error::Checkpoint(format!(
                    "missing tensor `{prefix}{}` in {}",
                    candidates[0],
                    path.display()
                ))
            })?;
        let mut value = view_to_matrix(view.dtype(), view.shape(), view.data(), &name)?;
        if transpose {
            value = value.t().to_owned();
        }
        let target = model.params.get_mut(*id);
        let (rows, cols) = target.dim();
        let is_word = ours == "encoder.embeddings.word";
        let fits = if is_word {
            value.ncols() == cols && value.nrows() <= rows
        } else {
            value.dim() == (rows, cols)
        };
        if !fits {
            return Err(Error::Shape(format!(
                "tensor `{name}` has shape {:?}, model expects {:?}",
                value.dim(),
                (rows, cols)
            )));
        }
        if is_word {
            new_vocab_rows = rows - value.nrows();
            target
                .slice_mut(ndarray::s![..value.nrows(), ..])
                .assign(&value);
        } else {
            *target = value;
        }
    }
    Ok(LoadReport {
        tensors: targets.len(),
        prefix: prefix.to_string(),
        new_vocab_rows,
    })
}

/// Hugging Face names for one of our encoder tensors, and whether the stored
/// matrix must be transposed (`nn.Linear` keeps `out x in`).
fn hf_names(ours: &str) -> (Vec<String>, bool) {
    let norm = |base: &str, leaf: &str| {
        let alt = if leaf == "gamma" { "weight" } else { "bias" };
        vec![format!("{base}.LayerNorm.{alt}"), format!("{base}.LayerNorm.{leaf}")]
    };
    match ours {
        "encoder.embeddings.word" => (vec!["embeddings.word_embeddings.weight".into()], false),
        "encoder.embeddings.position" => {
            (vec!["embeddings.position_embeddings.weight".into()], false)
        }
        "encoder.embeddings.token_type" => {
            (vec!["embeddings.token_type_embeddings.weight".into()], false)
        }
        "encoder.embeddings.ln.gamma" => (norm("embeddings", "gamma"), false),
        "encoder.embeddings.ln.beta" => (norm("embeddings", "beta"), false),
        _ => {
            let rest = ours.strip_prefix("encoder.layer.").expect("encoder tensor name");
            let (layer, tail) = rest.split_once('.').expect("layer index");
            let base = format!("encoder.layer.{layer}");
            let (module, leaf) = tail.rsplit_once('.').expect("tensor leaf");
            let dense = |path: &str| {
                let leaf = if leaf == "w" { "weight" } else { "bias" };
                (vec![format!("{base}.{path}.{leaf}")], leaf == "weight")
            };
            match module {
                "attn.query" => dense("attention.self.query"),
                "attn.key" => dense("attention.self.key"),
                "attn.value" => dense("attention.self.value"),
                "attn.output" => dense("attention.output.dense"),
                "attn.ln" => (norm(&format!("{base}.attention.output"), leaf), false),
                "ffn.intermediate" => dense("intermediate.dense"),
                "ffn.output" => dense("output.dense"),
                "ffn.ln" => (norm(&format!("{base}.output"), leaf), false),
                other => panic!("unmapped encoder module {other}"),
            }
        }
    }
}

/// Decodes a little-endian safetensors buffer into a matrix; 1-D tensors
/// become `1 x n`.
pub(crate) fn view_to_matrix(dtype: Dtype, shape: &[usize], data: &[u8], name: &str) -> Result<Matrix> {
    let values: Vec<f64> = match dtype {
        Dtype::F64 => data
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
            .collect(),
        Dtype::F32 => data
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes(c.try_into().unwrap()) as f64)
            .collect(),
        Dtype::F16 => data
            .chunks_exact(2)
            .map(|c| half::f16::from_le_bytes([c[0], c[1]]).to_f64())
            .collect(),
        Dtype::BF16 => data
            .chunks_exact(2)
            .map(|c| half::bf16::from_le_bytes([c[0], c[1]]).to_f64())
            .collect(),
        other => {
            return Err(Error::Checkpoint(format!(
                "tensor `{name}` has unsupported dtype {other:?}"
            )))
        }
    };
    let dims = match shape {
        [n] => (1, *n),
        [r, c] => (*r, *c),
        _ => {
            return Err(Error::Shape(format!(
                "tensor `{name}` has rank {}, expected 1 or 2",
                shape.len()
            )))
        }
    };
    Matrix::from_shape_vec(dims, values)
        .map_err(|e| Error::Shape(format!("tensor `{name}`: {e}")))
}
