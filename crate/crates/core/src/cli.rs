//! Command-line front end. Every command reads one JSON config; flags
//! override it, and every file written lands under `output_dir`.

use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};

use crate::corpus::AnnotatedInstance;
use crate::error::{Error, Result};
use crate::evaluation::{
    align_by_id, read_answer_key, run_ablation, run_official_scorer, score_official,
    write_answer_key, ConfusionMatrix,
};
use crate::indicator::IndicatorConfig;
use crate::model::{EncoderConfig, ModelConfig};
use crate::pipeline::{
    assemble_all, load_corpus, prepare_all, rule_counts, word_vocabulary, write_jsonl,
    PreparedInstance,
};
use crate::sequencing::{InputMode, Vocabulary};
use crate::synthetic::synthetic_corpus;
use crate::training::{
    build_model, load_checkpoint, split_dev, train, TrainConfig, TrainOutput, BEST_CHECKPOINT,
};

pub const VOCAB_FILE: &str = "vocab.txt";
pub const RULE_COUNTS_FILE: &str = "rule_counts.json";
pub const INDICATORS_FILE: &str = "indicators.tsv";
pub const TRACE_FILE: &str = "indicator_trace.jsonl";
pub const PREDICTIONS_FILE: &str = "predictions.txt";
pub const ANSWER_KEY_FILE: &str = "answer_key.txt";
pub const REPORT_FILE: &str = "report.txt";
pub const REPORT_JSON_FILE: &str = "report.json";
pub const ABLATION_FILE: &str = "ablation.txt";
pub const ABLATION_JSON_FILE: &str = "ablation.json";
pub const RESOLVED_CONFIG_FILE: &str = "config.json";

/// Where a split comes from: corpus plus annotation files, or the
/// generated synthetic set.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum DataSource {
    Files { corpus: PathBuf, annotations: PathBuf },
    Synthetic { synthetic: SyntheticSpec },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SyntheticSpec {
    pub per_class: usize,
    #[serde(default)]
    pub seed: u64,
}

impl DataSource {
    fn load(&self, limit: Option<usize>) -> Result<Vec<AnnotatedInstance>> {
        let mut data = match self {
            DataSource::Files { corpus, annotations } => load_corpus(corpus, annotations)?,
            DataSource::Synthetic { synthetic } => synthetic_corpus(synthetic.per_class, synthetic.seed),
        };
        if let Some(n) = limit {
            data.truncate(n);
        }
        Ok(data)
    }

    fn check(&self, what: &str) -> Result<()> {
        if let DataSource::Files { corpus, annotations } = self {
            for p in [corpus, annotations] {
                if !p.exists() {
                    return Err(Error::Config(format!("{what}: {} does not exist", p.display())));
                }
            }
        }
        Ok(())
    }
}

/// Everything one invocation needs. Training fields sit at the top level.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PipelineConfig {
    pub train_data: Option<DataSource>,
    pub test_data: Option<DataSource>,
    /// Subword vocabulary; built from the training words when absent.
    pub vocabulary: Option<PathBuf>,
    pub output_dir: PathBuf,
    #[serde(default)]
    pub mode: InputMode,
    #[serde(default = "EncoderConfig::toy")]
    pub encoder: EncoderConfig,
    #[serde(default)]
    pub indicator: IndicatorConfig,
    /// Checkpoint read by `evaluate`.
    pub checkpoint: Option<PathBuf>,
    /// Official Perl scorer, run by `evaluate` and `score` when set.
    pub scorer: Option<PathBuf>,
    #[serde(flatten)]
    pub train: TrainConfig,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            train_data: None,
            test_data: None,
            vocabulary: None,
            output_dir: PathBuf::from("out"),
            mode: InputMode::Both,
            encoder: EncoderConfig::toy(),
            indicator: IndicatorConfig::default(),
            checkpoint: None,
            scorer: None,
            train: TrainConfig::default(),
        }
    }
}

impl PipelineConfig {
    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Ok(serde_json::from_str(&text)?)
    }

    pub fn validate(&self) -> Result<()> {
        self.train.validate()?;
        self.encoder.validate()?;
        if let Some(v) = &self.vocabulary {
            if !v.exists() {
                return Err(Error::Config(format!("vocabulary {} does not exist", v.display())));
            }
        }
        if let Some(d) = &self.train_data {
            d.check("train_data")?;
        }
        if let Some(d) = &self.test_data {
            d.check("test_data")?;
        }
        if self.encoder.variant.is_transformer() && self.train.max_len > self.encoder.max_positions {
            return Err(Error::Config(format!(
                "max_len {} exceeds encoder max_positions {}",
                self.train.max_len, self.encoder.max_positions
            )));
        }
        Ok(())
    }

    fn out(&self, name: &str) -> PathBuf {
        self.output_dir.join(name)
    }

    fn train_data(&self) -> Result<&DataSource> {
        self.train_data
            .as_ref()
            .ok_or_else(|| Error::Config("config has no `train_data`".into()))
    }

    fn test_data(&self) -> Result<&DataSource> {
        self.test_data
            .as_ref()
            .ok_or_else(|| Error::Config("config has no `test_data`".into()))
    }
}

#[derive(Debug, Parser)]
#[command(name = "indicator-re", version, about = "Indicator-aware relation classification")]
pub struct Cli {
    #[command(flatten)]
    pub global: GlobalArgs,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct GlobalArgs {
    /// JSON pipeline config.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Overrides `seed` from the config.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Use only the first N instances of each split.
    #[arg(long, global = true)]
    pub limit: Option<usize>,
    #[arg(long, global = true, value_parser = ["both", "sentence", "indicator"])]
    pub mode: Option<String>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Parse, annotate, extract indicators and assemble model inputs.
    Preprocess,
    /// Print `<id>\t<indicator>` for every training instance.
    ExtractIndicators {
        /// Also write the per-instance removal trace.
        #[arg(long)]
        trace: bool,
        /// Read the test split instead of the training split.
        #[arg(long)]
        test: bool,
    },
    /// Train and write checkpoints, metrics.jsonl and the resolved config.
    Train,
    /// Score a checkpoint on the test split.
    Evaluate {
        #[arg(long)]
        checkpoint: Option<PathBuf>,
    },
    /// Train and score one model per input configuration.
    Ablate,
    /// Score an answer file against a gold answer key.
    Score {
        gold: PathBuf,
        predictions: PathBuf,
    },
}

/// The config with flags applied.
pub fn resolve_config(global: &GlobalArgs) -> Result<PipelineConfig> {
    let mut cfg = match &global.config {
        Some(p) => PipelineConfig::from_file(p)?,
        None => PipelineConfig::default(),
    };
    if let Some(seed) = global.seed {
        cfg.train.seed = seed;
    }
    if let Some(mode) = &global.mode {
        cfg.mode = mode.parse()?;
    }
    Ok(cfg)
}

pub fn run(cli: Cli, stdout: &mut dyn Write) -> Result<()> {
    let mut cfg = resolve_config(&cli.global)?;
    let limit = cli.global.limit;
    if let Command::Evaluate { checkpoint: Some(c) } = &cli.command {
        cfg.checkpoint = Some(c.clone());
    }
    if !matches!(cli.command, Command::Score { .. }) {
        cfg.validate()?;
        std::fs::create_dir_all(&cfg.output_dir).map_err(|e| Error::io(&cfg.output_dir, e))?;
    }
    let mut say = |s: String| writeln!(stdout, "{s}").map_err(|e| Error::io("<stdout>", e));
    match cli.command {
        Command::Preprocess => cmd_preprocess(&cfg, limit, &mut say),
        Command::ExtractIndicators { trace, test } => cmd_extract_indicators(&cfg, limit, trace, test, &mut say),
        Command::Train => cmd_train(&cfg, limit, &mut say),
        Command::Evaluate { .. } => cmd_evaluate(&cfg, limit, &mut say),
        Command::Ablate => cmd_ablate(&cfg, limit, &mut say),
        Command::Score { gold, predictions } => cmd_score(&cfg, &gold, &predictions, &mut say),
    }
}

type Say<'a> = dyn FnMut(String) -> Result<()> + 'a;

fn prepared(cfg: &PipelineConfig, source: &DataSource, limit: Option<usize>) -> Result<Vec<PreparedInstance>> {
    Ok(prepare_all(&source.load(limit)?, &cfg.indicator))
}

/// The configured vocabulary, or one built from `train`.
fn vocabulary(cfg: &PipelineConfig, train: &[PreparedInstance]) -> Result<Vocabulary> {
    match &cfg.vocabulary {
        Some(p) => Vocabulary::from_file(p),
        None => Ok(word_vocabulary(train)),
    }
}

/// The vocabulary a trained run left behind, else the configured one.
fn saved_vocabulary(cfg: &PipelineConfig) -> Result<Vocabulary> {
    let saved = cfg.out(VOCAB_FILE);
    match &cfg.vocabulary {
        _ if saved.exists() => Vocabulary::from_file(saved),
        Some(p) => Vocabulary::from_file(p),
        None => Err(Error::Config(format!(
            "no vocabulary: set `vocabulary` or run `train` into {}",
            cfg.output_dir.display()
        ))),
    }
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    std::fs::write(path, serde_json::to_string_pretty(value)?).map_err(|e| Error::io(path, e))
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

pub fn cmd_preprocess(cfg: &PipelineConfig, limit: Option<usize>, say: &mut Say) -> Result<()> {
    let train = prepared(cfg, cfg.train_data()?, limit)?;
    let vocab = vocabulary(cfg, &train)?;
    vocab.write(cfg.out(VOCAB_FILE))?;
    let mut splits = vec![("train", train)];
    if let Some(test) = &cfg.test_data {
        splits.push(("test", prepared(cfg, test, limit)?));
    }
    let mut counts = serde_json::Map::new();
    for (name, data) in &splits {
        let seqs = assemble_all(data, cfg.mode, &vocab, cfg.train.max_len)?;
        write_jsonl(&cfg.out(&format!("{name}.jsonl")), &seqs)?;
        let c = rule_counts(data);
        say(format!(
            "{name}: {} records, removed {} / {} / {} tokens (entity disambiguation / principal components / unrelated entities)",
            c.instances, c.entity_disambiguation, c.principal_component, c.unrelated_entity
        ))?;
        counts.insert(name.to_string(), serde_json::to_value(c)?);
    }
    write_json(&cfg.out(RULE_COUNTS_FILE), &counts)?;
    say(format!("vocabulary: {} tokens, hash {}", vocab.len(), vocab.hash()))
}

#[derive(Serialize)]
struct TraceLine<'a> {
    id: u32,
    indicator: String,
    trace: &'a [crate::indicator::RemovalRecord],
}

pub fn cmd_extract_indicators(
    cfg: &PipelineConfig,
    limit: Option<usize>,
    trace: bool,
    test: bool,
    say: &mut Say,
) -> Result<()> {
    let source = if test { cfg.test_data()? } else { cfg.train_data()? };
    let data = prepared(cfg, source, limit)?;
    let mut tsv = String::new();
    let mut traces = Vec::new();
    for p in &data {
        let line = format!("{}\t{}", p.id, p.indicator_text());
        say(line.clone())?;
        tsv.push_str(&line);
        tsv.push('\n');
        if trace {
            traces.push(TraceLine {
                id: p.id,
                indicator: p.indicator_text(),
                trace: &p.trace,
            });
        }
    }
    write_text(&cfg.out(INDICATORS_FILE), &tsv)?;
    if trace {
        write_jsonl(&cfg.out(TRACE_FILE), &traces)?;
    }
    Ok(())
}

pub fn cmd_train(cfg: &PipelineConfig, limit: Option<usize>, say: &mut Say) -> Result<()> {
    let data = prepared(cfg, cfg.train_data()?, limit)?;
    let vocab = vocabulary(cfg, &data)?;
    vocab.write(cfg.out(VOCAB_FILE))?;
    write_json(&cfg.out(RESOLVED_CONFIG_FILE), cfg)?;
    let seqs = assemble_all(&data, cfg.mode, &vocab, cfg.train.max_len)?;
    let (tr, dv) = split_dev(seqs.len(), cfg.train.dev_fraction, cfg.train.seed);
    let train_set: Vec<_> = tr.iter().map(|&i| seqs[i].clone()).collect();
    let dev_set: Vec<_> = dv.iter().map(|&i| seqs[i].clone()).collect();
    let mut model = build_model(ModelConfig::new(cfg.encoder.clone(), cfg.mode, vocab.len()), cfg.train.seed)?;
    let hash = vocab.hash();
    let output = TrainOutput {
        dir: &cfg.output_dir,
        vocab_hash: &hash,
    };
    say(format!(
        "training on {} instances ({} held out), mode {}",
        train_set.len(),
        dev_set.len(),
        cfg.mode.name()
    ))?;
    let report = train(&mut model, &train_set, &dev_set, &cfg.train, Some(output))?;
    for m in &report.epochs {
        let dev = m.dev_macro_f1.map_or("-".to_string(), |f| format!("{f:.2}"));
        say(format!(
            "epoch {:>3}  loss {:.4}  train acc {:.4}  dev macro-F1 {dev}",
            m.epoch, m.loss, m.train_accuracy
        ))?;
    }
    say(format!("best epoch {}", report.best_epoch))
}

pub fn cmd_evaluate(cfg: &PipelineConfig, limit: Option<usize>, say: &mut Say) -> Result<()> {
    let checkpoint = cfg
        .checkpoint
        .clone()
        .ok_or_else(|| Error::Config(format!("evaluate needs --checkpoint (e.g. {})", cfg.out(BEST_CHECKPOINT).display())))?;
    let vocab = saved_vocabulary(cfg)?;
    let (model, meta) = load_checkpoint(&checkpoint, Some(&vocab.hash()))?;
    let data = prepared(cfg, cfg.test_data()?, limit)?;
    let seqs = assemble_all(&data, meta.config.mode, &vocab, cfg.train.max_len)?;
    let pred = model.predict(&seqs)?;
    let gold_rows: Vec<_> = data.iter().map(|p| (p.id, p.label)).collect();
    let pred_rows: Vec<_> = data
        .iter()
        .zip(&pred)
        .map(|(p, &y)| (p.id, crate::corpus::RelationLabel::from_id(y).expect("model emits valid ids")))
        .collect();
    write_answer_key(&cfg.out(ANSWER_KEY_FILE), &gold_rows)?;
    write_answer_key(&cfg.out(PREDICTIONS_FILE), &pred_rows)?;
    let (gold, predicted) = align_by_id(&gold_rows, &pred_rows)?;
    let report = score_official(&gold, &predicted)?;
    let confusion = ConfusionMatrix::new(&gold, &predicted)?;
    write_text(&cfg.out(REPORT_FILE), &format!("{}\n{}", report.render(), confusion.render()))?;
    write_text(&cfg.out(REPORT_JSON_FILE), &report.to_json())?;
    say(report.render())?;
    if let Some(scorer) = &cfg.scorer {
        let official = run_official_scorer(scorer, &cfg.out(PREDICTIONS_FILE), &cfg.out(ANSWER_KEY_FILE))?;
        say(format!("official scorer macro-F1: {official:.2}"))?;
    }
    Ok(())
}

pub fn cmd_ablate(cfg: &PipelineConfig, limit: Option<usize>, say: &mut Say) -> Result<()> {
    let train_set = prepared(cfg, cfg.train_data()?, limit)?;
    let test_set = prepared(cfg, cfg.test_data()?, limit)?;
    let vocab = vocabulary(cfg, &train_set)?;
    let report = run_ablation(&cfg.encoder, &cfg.train, &vocab, &train_set, &test_set)?;
    write_text(&cfg.out(ABLATION_FILE), &report.render())?;
    write_text(&cfg.out(ABLATION_JSON_FILE), &report.to_json())?;
    say(report.render())
}

pub fn cmd_score(cfg: &PipelineConfig, gold: &Path, predictions: &Path, say: &mut Say) -> Result<()> {
    let (g, p) = align_by_id(&read_answer_key(gold)?, &read_answer_key(predictions)?)?;
    let report = score_official(&g, &p)?;
    say(report.render())?;
    if let Some(scorer) = &cfg.scorer {
        let official = run_official_scorer(scorer, predictions, gold)?;
        say(format!("official scorer macro-F1: {official:.2}"))?;
    }
    Ok(())
}
