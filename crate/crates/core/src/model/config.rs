use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use crate::corpus::{NUM_LABELS, OTHER_ID};
use crate::error::{Error, Result};
use crate::sequencing::{InputMode, SpanOptions};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EncoderVariant {
    /// BERT-layout transformer whose weights come from a safetensors file.
    PretrainedTransformer,
    /// Small randomly initialized transformer of the same layout.
    ToyTransformer,
    /// Bidirectional LSTM over the sentence plus a CNN over the indicator.
    RecurrentConvolutional,
}

impl EncoderVariant {
    pub fn is_transformer(self) -> bool {
        !matches!(self, EncoderVariant::RecurrentConvolutional)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EncoderConfig {
    pub variant: EncoderVariant,
    /// Width of the hidden states and of every head output.
    pub hidden_dim: usize,
    pub layers: usize,
    pub heads: usize,
    pub intermediate_dim: usize,
    pub max_positions: usize,
    pub type_vocab_size: usize,
    pub dropout_rate: f64,
    pub layer_norm_eps: f64,
    /// Half-width of the uniform initialization interval.
    pub init_scale: f64,
    pub embedding_dim: usize,
    pub lstm_hidden: usize,
    pub conv_filters: usize,
    pub conv_window: usize,
    /// safetensors weights for the pretrained variant.
    pub weights: Option<PathBuf>,
    /// `config.json` accompanying `weights`.
    pub bert_config: Option<PathBuf>,
}

impl Default for EncoderConfig {
    fn default() -> Self {
        EncoderConfig::toy()
    }
}

impl EncoderConfig {
    /// Two layers, 64 hidden units, four attention heads.
    pub fn toy() -> Self {
        EncoderConfig {
            variant: EncoderVariant::ToyTransformer,
            hidden_dim: 64,
            layers: 2,
            heads: 4,
            intermediate_dim: 256,
            max_positions: 128,
            type_vocab_size: 2,
            dropout_rate: 0.1,
            layer_norm_eps: 1e-12,
            init_scale: 0.05,
            embedding_dim: 64,
            lstm_hidden: 64,
            conv_filters: 64,
            conv_window: 3,
            weights: None,
            bert_config: None,
        }
    }

    pub fn recurrent() -> Self {
        EncoderConfig {
            variant: EncoderVariant::RecurrentConvolutional,
            ..EncoderConfig::toy()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::Config(m.to_string()));
        if self.hidden_dim == 0 {
            return bad("hidden_dim must be positive");
        }
        if !(0.0..1.0).contains(&self.dropout_rate) {
            return bad("dropout_rate must lie in [0, 1)");
        }
        match self.variant {
            EncoderVariant::RecurrentConvolutional => {
                if self.embedding_dim == 0
                    || self.lstm_hidden == 0
                    || self.conv_filters == 0
                    || self.conv_window == 0
                {
                    return bad("recurrent encoder dimensions must be positive");
                }
            }
            _ => {
                if self.heads == 0 || !self.hidden_dim.is_multiple_of(self.heads) {
                    return bad("hidden_dim must be a positive multiple of heads");
                }
                if self.layers == 0 || self.intermediate_dim == 0 || self.max_positions == 0 {
                    return bad("transformer dimensions must be positive");
                }
            }
        }
        if self.variant == EncoderVariant::PretrainedTransformer && self.weights.is_none() {
            return bad("pretrained encoder needs `weights`");
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LossConfig {
    /// Weight of the negative-class term.
    pub beta: f64,
    /// L2 coefficient on head weight matrices.
    pub lambda: f64,
    pub other_class_id: usize,
}

impl Default for LossConfig {
    fn default() -> Self {
        LossConfig {
            beta: 5.0,
            lambda: 5e-3,
            other_class_id: OTHER_ID,
        }
    }
}

impl LossConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.beta >= 0.0) || !(self.lambda >= 0.0) {
            return Err(Error::Config("beta and lambda must be nonnegative".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelConfig {
    pub encoder: EncoderConfig,
    pub mode: InputMode,
    #[serde(default)]
    pub spans: SpanOptions,
    /// Dropout on the relation vector before the softmax layer.
    pub classifier_dropout: f64,
    pub num_labels: usize,
    pub vocab_size: usize,
}

impl ModelConfig {
    pub fn new(encoder: EncoderConfig, mode: InputMode, vocab_size: usize) -> Self {
        ModelConfig {
            encoder,
            mode,
            spans: SpanOptions::default(),
            classifier_dropout: 0.1,
            num_labels: NUM_LABELS,
            vocab_size,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.encoder.validate()?;
        if self.encoder.variant.is_transformer() && self.mode == InputMode::SentenceTwice {
            return Err(Error::Config(
                "sentence-twice applies to the recurrent+convolutional encoder only".into(),
            ));
        }
        if !(0.0..1.0).contains(&self.classifier_dropout) {
            return Err(Error::Config("classifier_dropout must lie in [0, 1)".into()));
        }
        if self.vocab_size == 0 || self.num_labels < 2 {
            return Err(Error::Config("vocab_size and num_labels must be positive".into()));
        }
        Ok(())
    }
}
