//! Optimization recipe, training loop and checkpoints.

mod checkpoint;

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

pub use checkpoint::{
    load_checkpoint, read_checkpoint_meta, save_checkpoint, CheckpointMeta, CHECKPOINT_FORMAT,
};

use crate::error::{Error, Result};
use crate::evaluation::score_ids;
use crate::model::{load_pretrained, LossConfig, ModelConfig, RelationModel};
use crate::sequencing::AggregateSequence;
use crate::tensor::{Gradients, Matrix, ParamStore};

/// Optimization hyper-parameters. Defaults are the published recipe.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub max_len: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    /// Full passes over the training set; must be a whole number.
    pub epochs: f64,
    /// Dropout on the relation vector before the softmax layer.
    pub dropout: f64,
    pub lambda: f64,
    pub beta: f64,
    pub seed: u64,
    pub adam_beta1: f64,
    pub adam_beta2: f64,
    pub adam_epsilon: f64,
    /// Linear warmup length in optimizer steps; 0 keeps the rate constant.
    pub warmup_steps: usize,
    /// Share of the training data held out for model selection.
    pub dev_fraction: f64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            max_len: 128,
            batch_size: 16,
            learning_rate: 2e-5,
            epochs: 5.0,
            dropout: 0.1,
            lambda: 5e-3,
            beta: 5.0,
            seed: 42,
            adam_beta1: 0.9,
            adam_beta2: 0.999,
            adam_epsilon: 1e-8,
            warmup_steps: 0,
            dev_fraction: 0.1,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::Config(m.to_string()));
        if self.max_len < 4 || self.batch_size == 0 {
            return bad("max_len and batch_size must be positive");
        }
        if !(self.learning_rate > 0.0) {
            return bad("learning_rate must be positive");
        }
        if !(self.epochs >= 0.0) || self.epochs.fract() != 0.0 {
            return bad("epochs must be a nonnegative whole number");
        }
        if !(0.0..1.0).contains(&self.dropout) || !(0.0..1.0).contains(&self.dev_fraction) {
            return bad("dropout and dev_fraction must lie in [0, 1)");
        }
        self.loss().validate()
    }

    pub fn loss(&self) -> LossConfig {
        LossConfig {
            beta: self.beta,
            lambda: self.lambda,
            ..LossConfig::default()
        }
    }

    pub fn whole_epochs(&self) -> usize {
        self.epochs as usize
    }
}

/// Independent random streams derived from one seed.
#[derive(Clone, Debug)]
pub struct Seeds {
    pub seed: u64,
    pub init: ChaCha8Rng,
    pub dropout: ChaCha8Rng,
    pub shuffle: ChaCha8Rng,
    pub split: ChaCha8Rng,
}

/// Seeds every stochastic component: initialization, dropout, shuffling
/// and the dev split each get their own stream.
pub fn set_seed(seed: u64) -> Seeds {
    let stream = |n: u64| {
        let mut r = ChaCha8Rng::seed_from_u64(seed);
        r.set_stream(n);
        r
    };
    Seeds {
        seed,
        init: stream(0),
        dropout: stream(1),
        shuffle: stream(2),
        split: stream(3),
    }
}

/// Initializes a model from the `init` stream of `seed`, then applies
/// pretrained encoder weights when the config names them.
pub fn build_model(config: ModelConfig, seed: u64) -> Result<RelationModel> {
    let weights = config.encoder.weights.clone();
    let mut model = RelationModel::new(config, &mut set_seed(seed).init)?;
    if let Some(path) = weights {
        load_pretrained(&mut model, &path)?;
    }
    Ok(model)
}

/// Seeded split of `0..n` into (train, dev) indices, both sorted.
pub fn split_dev(n: usize, fraction: f64, seed: u64) -> (Vec<usize>, Vec<usize>) {
    let mut idx: Vec<usize> = (0..n).collect();
    idx.shuffle(&mut set_seed(seed).split);
    let n_dev = (n as f64 * fraction).round() as usize;
    let mut dev = idx[..n_dev].to_vec();
    let mut train = idx[n_dev..].to_vec();
    dev.sort_unstable();
    train.sort_unstable();
    (train, dev)
}

/// Adam with bias correction.
#[derive(Clone, Debug)]
pub struct Adam {
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    step: u64,
    m: Vec<Option<Matrix>>,
    v: Vec<Option<Matrix>>,
}

impl Adam {
    pub fn new(beta1: f64, beta2: f64, epsilon: f64) -> Self {
        Adam {
            beta1,
            beta2,
            epsilon,
            step: 0,
            m: Vec::new(),
            v: Vec::new(),
        }
    }

    pub fn steps(&self) -> u64 {
        self.step
    }

    /// One update of every parameter that has a gradient.
    pub fn step(&mut self, store: &mut ParamStore, grads: &Gradients, lr: f64) {
        self.step += 1;
        if self.m.len() < store.len() {
            self.m.resize(store.len(), None);
            self.v.resize(store.len(), None);
        }
        let t = self.step as i32;
        let c1 = 1.0 - self.beta1.powi(t);
        let c2 = 1.0 - self.beta2.powi(t);
        let (b1, b2, eps) = (self.beta1, self.beta2, self.epsilon);
        for (id, g) in grads.iter() {
            let i = id.0;
            let m = self.m[i].get_or_insert_with(|| Matrix::zeros(g.dim()));
            let v = self.v[i].get_or_insert_with(|| Matrix::zeros(g.dim()));
            let p = store.get_mut(id);
            ndarray::Zip::from(p)
                .and(m)
                .and(v)
                .and(g)
                .for_each(|p, m, v, &g| {
                    *m = b1 * *m + (1.0 - b1) * g;
                    *v = b2 * *v + (1.0 - b2) * g * g;
                    *p -= lr * (*m / c1) / ((*v / c2).sqrt() + eps);
                });
        }
    }
}

/// What one epoch did.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EpochMetrics {
    pub epoch: usize,
    /// Mean per-batch loss.
    pub loss: f64,
    /// Accuracy of the dropout-perturbed forward passes seen during the epoch.
    pub train_accuracy: f64,
    pub dev_macro_f1: Option<f64>,
    pub learning_rate: f64,
    pub steps: u64,
}

/// Stateful training loop over one model.
pub struct Trainer<'m> {
    model: &'m mut RelationModel,
    cfg: TrainConfig,
    loss: LossConfig,
    adam: Adam,
    dropout_rng: ChaCha8Rng,
    shuffle_rng: ChaCha8Rng,
    epoch: usize,
}

impl<'m> Trainer<'m> {
    /// The model's classifier dropout is set from `cfg`.
    pub fn new(model: &'m mut RelationModel, cfg: &TrainConfig) -> Result<Self> {
        cfg.validate()?;
        model.set_classifier_dropout(cfg.dropout)?;
        let seeds = set_seed(cfg.seed);
        Ok(Trainer {
            model,
            cfg: cfg.clone(),
            loss: cfg.loss(),
            adam: Adam::new(cfg.adam_beta1, cfg.adam_beta2, cfg.adam_epsilon),
            dropout_rng: seeds.dropout,
            shuffle_rng: seeds.shuffle,
            epoch: 0,
        })
    }

    pub fn model(&self) -> &RelationModel {
        self.model
    }

    pub fn steps(&self) -> u64 {
        self.adam.steps()
    }

    pub fn learning_rate(&self) -> f64 {
        let lr = self.cfg.learning_rate;
        match self.cfg.warmup_steps {
            0 => lr,
            w => lr * ((self.adam.steps() + 1) as f64 / w as f64).min(1.0),
        }
    }

    /// One optimizer step on `batch`. Returns the batch loss and the number
    /// of correct argmax predictions.
    pub fn step(&mut self, batch: &[AggregateSequence], batch_id: usize) -> Result<(f64, usize)> {
        let out = self
            .model
            .batch_gradients(batch, &self.loss, Some(&mut self.dropout_rng))?;
        let finite = out.loss.is_finite() && out.grads.iter().all(|(_, g)| g.iter().all(|v| v.is_finite()));
        if !finite {
            let ids: Vec<u32> = batch.iter().map(|s| s.id).collect();
            return Err(Error::Training {
                epoch: self.epoch,
                batch: batch_id,
                message: format!("non-finite loss {} on instances {ids:?}", out.loss),
            });
        }
        let lr = self.learning_rate();
        self.adam.step(&mut self.model.params, &out.grads, lr);
        Ok((out.loss, out.correct))
    }

    /// A shuffled pass over `data`; negative classes are re-selected from
    /// the current probabilities at every step.
    pub fn run_epoch(&mut self, data: &[AggregateSequence]) -> Result<EpochMetrics> {
        let mut order: Vec<usize> = (0..data.len()).collect();
        order.shuffle(&mut self.shuffle_rng);
        let mut total = 0.0;
        let mut correct = 0;
        let mut batches = 0;
        for (b, chunk) in order.chunks(self.cfg.batch_size).enumerate() {
            let batch: Vec<AggregateSequence> = chunk.iter().map(|&i| data[i].clone()).collect();
            let (loss, c) = self.step(&batch, b)?;
            total += loss;
            correct += c;
            batches += 1;
        }
        self.epoch += 1;
        Ok(EpochMetrics {
            epoch: self.epoch,
            loss: if batches > 0 { total / batches as f64 } else { 0.0 },
            train_accuracy: if data.is_empty() { 0.0 } else { correct as f64 / data.len() as f64 },
            dev_macro_f1: None,
            learning_rate: self.learning_rate(),
            steps: self.adam.steps(),
        })
    }
}

/// Evaluation-mode accuracy on labelled sequences.
pub fn accuracy(model: &RelationModel, data: &[AggregateSequence]) -> Result<f64> {
    if data.is_empty() {
        return Ok(0.0);
    }
    let pred = model.predict(data)?;
    let hits = pred
        .iter()
        .zip(data)
        .filter(|(p, s)| s.label == Some(**p))
        .count();
    Ok(hits as f64 / data.len() as f64)
}

/// Official macro-F1 of `model` on labelled sequences.
pub fn macro_f1(model: &RelationModel, data: &[AggregateSequence]) -> Result<f64> {
    let pred = model.predict(data)?;
    let gold: Vec<usize> = data
        .iter()
        .map(|s| s.label.ok_or_else(|| Error::Label(format!("instance {} has no gold label", s.id))))
        .collect::<Result<_>>()?;
    Ok(score_ids(&gold, &pred)?.macro_f1)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainReport {
    pub epochs: Vec<EpochMetrics>,
    /// Epoch with the best dev macro-F1 (0 = initialization).
    pub best_epoch: usize,
    pub best_dev_macro_f1: Option<f64>,
}

/// Where [`train`] writes its outputs.
#[derive(Clone, Copy, Debug)]
pub struct TrainOutput<'a> {
    pub dir: &'a Path,
    pub vocab_hash: &'a str,
}

pub const METRICS_FILE: &str = "metrics.jsonl";
pub const BEST_CHECKPOINT: &str = "best.safetensors";
pub const FINAL_CHECKPOINT: &str = "final.safetensors";

/// Trains for `cfg.epochs` passes. With `output`, writes one JSON line per
/// epoch to `metrics.jsonl`, the best-dev checkpoint and the final one.
/// Without a dev set the best checkpoint is the final one.
pub fn train(
    model: &mut RelationModel,
    train_set: &[AggregateSequence],
    dev_set: &[AggregateSequence],
    cfg: &TrainConfig,
    output: Option<TrainOutput>,
) -> Result<TrainReport> {
    let mut log = match output {
        Some(out) => {
            std::fs::create_dir_all(out.dir).map_err(|e| Error::io(out.dir, e))?;
            let path = out.dir.join(METRICS_FILE);
            Some(BufWriter::new(File::create(&path).map_err(|e| Error::io(&path, e))?))
        }
        None => None,
    };
    let save = |m: &RelationModel, name: &str, step: u64| -> Result<()> {
        if let Some(out) = output {
            save_checkpoint(&out.dir.join(name), m, out.vocab_hash, step, cfg.seed)?;
        }
        Ok(())
    };

    let mut best_f1 = if dev_set.is_empty() { None } else { Some(macro_f1(model, dev_set)?) };
    let mut best_epoch = 0;
    save(model, BEST_CHECKPOINT, 0)?;

    let mut trainer = Trainer::new(model, cfg)?;
    let mut epochs = Vec::with_capacity(cfg.whole_epochs());
    for _ in 0..cfg.whole_epochs() {
        let mut m = trainer.run_epoch(train_set)?;
        if !dev_set.is_empty() {
            let f1 = macro_f1(trainer.model(), dev_set)?;
            m.dev_macro_f1 = Some(f1);
            if best_f1.is_none_or(|b| f1 > b) {
                best_f1 = Some(f1);
                best_epoch = m.epoch;
                save(trainer.model(), BEST_CHECKPOINT, m.steps)?;
            }
        }
        if let Some(log) = log.as_mut() {
            let line = serde_json::to_string(&m)?;
            writeln!(log, "{line}").and_then(|_| log.flush()).map_err(|e| {
                Error::io(output.unwrap().dir.join(METRICS_FILE), e)
            })?;
        }
        epochs.push(m);
    }
    let steps = trainer.steps();
    drop(trainer);
    if dev_set.is_empty() {
        best_epoch = epochs.len();
        save(model, BEST_CHECKPOINT, steps)?;
    }
    save(model, FINAL_CHECKPOINT, steps)?;
    Ok(TrainReport {
        epochs,
        best_epoch,
        best_dev_macro_f1: best_f1,
    })
}

#[cfg(test)]
mod tests;
