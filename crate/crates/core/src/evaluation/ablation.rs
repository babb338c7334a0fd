//! Input ablation: one model per input configuration, same data and seed.

use serde::{Deserialize, Serialize};

use super::scoring::{score_ids, ClassReport};
use crate::error::Result;
use crate::model::{EncoderConfig, ModelConfig};
use crate::pipeline::{assemble_all, PreparedInstance};
use crate::sequencing::{InputMode, Vocabulary};
use crate::training::{build_model, train, TrainConfig};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AblationFamily {
    /// Transformer encoder with the aggregate/entity/indicator heads.
    BertBased,
    /// BiLSTM over one input, CNN over the other.
    NonBert,
}

impl AblationFamily {
    pub fn of(encoder: &EncoderConfig) -> Self {
        if encoder.variant.is_transformer() {
            AblationFamily::BertBased
        } else {
            AblationFamily::NonBert
        }
    }

    /// Modes in report order.
    pub fn modes(self) -> &'static [InputMode] {
        match self {
            AblationFamily::BertBased => &[InputMode::Both, InputMode::Sentence, InputMode::Indicator],
            AblationFamily::NonBert => &[
                InputMode::Both,
                InputMode::Sentence,
                InputMode::Indicator,
                InputMode::SentenceTwice,
            ],
        }
    }
}

/// Row labels. BERT-based rows have one input column; non-BERT rows name
/// what the LSTM and the CNN read.
pub fn row_columns(family: AblationFamily, mode: InputMode) -> Vec<&'static str> {
    const S: &str = "Entire Sentence";
    const I: &str = "Indicator Sequence";
    match (family, mode) {
        (AblationFamily::BertBased, InputMode::Both) => vec!["Entire Sentence + Indicator Sequence"],
        (AblationFamily::BertBased, InputMode::Sentence) => vec![S],
        (AblationFamily::BertBased, _) => vec![I],
        (AblationFamily::NonBert, InputMode::Both) => vec![S, I],
        (AblationFamily::NonBert, InputMode::Sentence) => vec![S, "-"],
        (AblationFamily::NonBert, InputMode::Indicator) => vec!["-", I],
        (AblationFamily::NonBert, InputMode::SentenceTwice) => vec![S, S],
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AblationRow {
    pub mode: InputMode,
    pub columns: Vec<String>,
    pub macro_f1: f64,
    pub report: ClassReport,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AblationReport {
    pub family: AblationFamily,
    pub rows: Vec<AblationRow>,
}

impl AblationReport {
    pub fn headers(&self) -> Vec<&'static str> {
        match self.family {
            AblationFamily::BertBased => vec!["Input", "Macro-F1"],
            AblationFamily::NonBert => vec!["LSTM", "CNN", "Macro-F1"],
        }
    }

    pub fn render(&self) -> String {
        let width = 38;
        let mut out = String::new();
        let headers = self.headers();
        let (label_headers, score) = headers.split_at(headers.len() - 1);
        for h in label_headers {
            out.push_str(&format!("{h:<width$}"));
        }
        out.push_str(&format!("{:>9}\n", score[0]));
        for row in &self.rows {
            for c in &row.columns {
                out.push_str(&format!("{c:<width$}"));
            }
            out.push_str(&format!("{:>9.2}\n", row.macro_f1));
        }
        out
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    pub fn row(&self, mode: InputMode) -> Option<&AblationRow> {
        self.rows.iter().find(|r| r.mode == mode)
    }
}

/// Trains one model per mode of the encoder's family on `train_set` and
/// scores it on `test_set`. Every row starts from the same seed.
pub fn run_ablation(
    encoder: &EncoderConfig,
    cfg: &TrainConfig,
    vocab: &Vocabulary,
    train_set: &[PreparedInstance],
    test_set: &[PreparedInstance],
) -> Result<AblationReport> {
    let family = AblationFamily::of(encoder);
    let mut rows = Vec::new();
    for &mode in family.modes() {
        let train_seqs = assemble_all(train_set, mode, vocab, cfg.max_len)?;
        let test_seqs = assemble_all(test_set, mode, vocab, cfg.max_len)?;
        let mut model = build_model(ModelConfig::new(encoder.clone(), mode, vocab.len()), cfg.seed)?;
        train(&mut model, &train_seqs, &[], cfg, None)?;
        let gold: Vec<usize> = test_set.iter().map(|p| p.label.id()).collect();
        let report = score_ids(&gold, &model.predict(&test_seqs)?)?;
        rows.push(AblationRow {
            mode,
            columns: row_columns(family, mode).into_iter().map(String::from).collect(),
            macro_f1: report.macro_f1,
            report,
        });
    }
    Ok(AblationReport { family, rows })
}
