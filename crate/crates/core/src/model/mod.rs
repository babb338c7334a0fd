//! Encoders, representation heads, classifier and loss.

mod config;
mod heads;
mod loss;
mod pretrained;
mod recurrent;
mod transformer;

use rand::Rng;

pub use config::{EncoderConfig, EncoderVariant, LossConfig, ModelConfig};
pub use heads::HeadParameters;
pub use loss::{
    compute_loss, instance_terms, select_negative_class, weight_norm, PROB_FLOOR,
};
pub use pretrained::{load_pretrained, BertConfig, LoadReport};
pub(crate) use pretrained::view_to_matrix;
pub use recurrent::fuse_nonbert;

use crate::error::{Error, Result};
use crate::sequencing::{AggregateSequence, InputMode};
use crate::tensor::{Gradients, Matrix, ParamId, ParamStore, Tape, Var};
use recurrent::RecurrentEncoder;
use transformer::TransformerEncoder;

/// Affine map `x W + b` with `W` stored `in x out`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Linear {
    pub w: ParamId,
    pub b: ParamId,
}

impl Linear {
    pub fn new<R: Rng>(
        store: &mut ParamStore,
        name: &str,
        input: usize,
        output: usize,
        scale: f64,
        rng: &mut R,
    ) -> Self {
        Linear {
            w: store.add_uniform(format!("{name}.w"), (input, output), scale, rng),
            b: store.add_zeros(format!("{name}.b"), (1, output)),
        }
    }

    pub fn apply(&self, tape: &mut Tape, x: Var) -> Var {
        let w = tape.param(self.w);
        let b = tape.param(self.b);
        tape.linear(x, w, b)
    }
}

/// Encoder output, one row per unpadded position.
#[derive(Clone, Debug, PartialEq)]
pub struct HiddenStates(pub Matrix);

impl HiddenStates {
    pub fn len(&self) -> usize {
        self.0.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.0.nrows() == 0
    }

    pub fn dim(&self) -> usize {
        self.0.ncols()
    }
}

#[derive(Clone, Debug)]
enum Body {
    Transformer {
        encoder: TransformerEncoder,
        heads: HeadParameters,
    },
    Recurrent {
        encoder: RecurrentEncoder,
        classifier: Linear,
    },
}

/// Parameter layout of a model, independent of the parameter values.
/// Every method reads values through the tape, so the same network can be
/// evaluated against perturbed copies of the store.
#[derive(Clone, Debug)]
pub struct Network {
    config: ModelConfig,
    body: Body,
}

/// Loss and gradients of one batch.
#[derive(Clone, Debug)]
pub struct BatchOutcome {
    pub loss: f64,
    pub grads: Gradients,
    pub negatives: Vec<usize>,
    /// Instances whose argmax matched the gold label.
    pub correct: usize,
}

impl Network {
    fn build<R: Rng>(config: &ModelConfig, store: &mut ParamStore, rng: &mut R) -> Self {
        let enc = &config.encoder;
        let body = if enc.variant.is_transformer() {
            let encoder = TransformerEncoder::new(store, enc, config.vocab_size, rng);
            let heads = HeadParameters::new(
                store,
                enc.hidden_dim,
                config.mode.has_indicator(),
                config.num_labels,
                enc.init_scale,
                rng,
            );
            Body::Transformer { encoder, heads }
        } else {
            let encoder = RecurrentEncoder::new(store, enc, config.vocab_size, rng);
            let classifier = Linear::new(
                store,
                "head.classifier",
                encoder.output_dim(),
                config.num_labels,
                enc.init_scale,
                rng,
            );
            Body::Recurrent {
                encoder,
                classifier,
            }
        };
        Network {
            config: config.clone(),
            body,
        }
    }

    pub fn config(&self) -> &ModelConfig {
        &self.config
    }

    /// Head parameters of the transformer variants.
    pub fn heads(&self) -> Option<&HeadParameters> {
        match &self.body {
            Body::Transformer { heads, .. } => Some(heads),
            Body::Recurrent { .. } => None,
        }
    }

    /// Weight matrices under the L2 penalty: the heads and classifier only.
    pub fn head_weights(&self) -> Vec<ParamId> {
        match &self.body {
            Body::Transformer { heads, .. } => heads.weights(),
            Body::Recurrent { classifier, .. } => vec![classifier.w],
        }
    }

    /// Every head and classifier tensor, biases included.
    pub fn head_params(&self) -> Vec<ParamId> {
        let lins: Vec<Linear> = match &self.body {
            Body::Transformer { heads, .. } => {
                let mut v = vec![heads.aggregate, heads.entity];
                v.extend(heads.indicator);
                v.extend([heads.fuse_in, heads.fuse_out, heads.classifier]);
                v
            }
            Body::Recurrent { classifier, .. } => vec![*classifier],
        };
        lins.iter().flat_map(|l| [l.w, l.b]).collect()
    }

    fn check_layout(&self, seq: &AggregateSequence) -> Result<()> {
        let mode = self.config.mode;
        let ok = match mode {
            InputMode::Both | InputMode::SentenceTwice => {
                seq.markers.is_some() && seq.indicator.is_some()
            }
            InputMode::Sentence => seq.markers.is_some() && seq.indicator.is_none(),
            InputMode::Indicator => seq.markers.is_none() && seq.indicator.is_some(),
        };
        if !ok {
            return Err(Error::Shape(format!(
                "instance {} was not assembled for mode {}",
                seq.id,
                mode.name()
            )));
        }
        if let Some(&bad) = seq
            .content_ids()
            .iter()
            .find(|&&t| t as usize >= self.config.vocab_size)
        {
            return Err(Error::Shape(format!(
                "instance {}: token id {bad} outside vocabulary of {}",
                seq.id, self.config.vocab_size
            )));
        }
        Ok(())
    }

    /// Transformer hidden states for the unpadded prefix of `seq`.
    pub fn encode_on<R: Rng>(
        &self,
        tape: &mut Tape,
        seq: &AggregateSequence,
        rng: Option<&mut R>,
    ) -> Result<Var> {
        let Body::Transformer { encoder, .. } = &self.body else {
            return Err(Error::Config(
                "hidden states are defined for transformer encoders only".into(),
            ));
        };
        self.check_layout(seq)?;
        let len = seq.content_len();
        if len > self.config.encoder.max_positions {
            return Err(Error::Length {
                id: seq.id,
                needed: len,
                max_len: self.config.encoder.max_positions,
            });
        }
        let ids: Vec<usize> = seq.content_ids().iter().map(|&t| t as usize).collect();
        let segs: Vec<usize> = seq.segment_ids[..len].iter().map(|&s| s as usize).collect();
        Ok(encoder.forward(tape, &ids, &segs, rng))
    }

    /// Logits from transformer hidden states `h` (rows indexed as in `seq`).
    pub fn logits_from_hidden<R: Rng>(
        &self,
        tape: &mut Tape,
        h: Var,
        seq: &AggregateSequence,
        rng: Option<&mut R>,
    ) -> Result<Var> {
        let Body::Transformer { heads, .. } = &self.body else {
            return Err(Error::Config("recurrent encoder has no transformer heads".into()));
        };
        let opts = self.config.spans;
        let mut parts = vec![heads.aggregate_on(tape, h)];
        parts.push(heads.entity_on(tape, h, &seq.e1_rows(opts))?);
        parts.push(heads.entity_on(tape, h, &seq.e2_rows(opts))?);
        if self.config.mode.has_indicator() {
            parts.push(heads.indicator_on(tape, h, &seq.indicator_rows(opts))?);
        }
        let r = heads.fuse_on(tape, &parts);
        let r = self.classifier_dropout(tape, r, rng);
        Ok(heads.logits_on(tape, r))
    }

    /// Logits `1 x |Y|`; dropout is active exactly when `rng` is given.
    pub fn logits_on<R: Rng>(
        &self,
        tape: &mut Tape,
        seq: &AggregateSequence,
        mut rng: Option<&mut R>,
    ) -> Result<Var> {
        match &self.body {
            Body::Transformer { .. } => {
                let h = self.encode_on(tape, seq, rng.as_deref_mut())?;
                self.logits_from_hidden(tape, h, seq, rng)
            }
            Body::Recurrent {
                encoder,
                classifier,
            } => {
                self.check_layout(seq)?;
                let ids = |span: crate::corpus::Span| -> Vec<usize> {
                    span.iter().map(|i| seq.ids[i] as usize).collect()
                };
                let sentence = seq.sentence_segment().map(ids);
                let indicator = seq.indicator_segment().map(ids);
                let (ctx_ids, feat_ids) = match self.config.mode {
                    InputMode::Both => (sentence, indicator),
                    InputMode::Sentence => (sentence, None),
                    InputMode::Indicator => (None, indicator),
                    InputMode::SentenceTwice => (sentence.clone(), sentence),
                };
                let context = match ctx_ids {
                    Some(ids) if !ids.is_empty() => {
                        let e = encoder.embed(tape, &ids);
                        encoder.sentence_on(tape, e)
                    }
                    _ => encoder.zero_context(tape),
                };
                let features = match feat_ids {
                    Some(ids) if !ids.is_empty() => {
                        let e = encoder.embed(tape, &ids);
                        encoder.indicator_on(tape, e)
                    }
                    _ => encoder.zero_features(tape),
                };
                let r = tape.concat_cols(&[context, features]);
                let r = self.classifier_dropout(tape, r, rng);
                Ok(classifier.apply(tape, r))
            }
        }
    }

    fn classifier_dropout<R: Rng>(&self, tape: &mut Tape, r: Var, rng: Option<&mut R>) -> Var {
        match rng {
            Some(rng) => tape.dropout(r, self.config.classifier_dropout, rng),
            None => r,
        }
    }

    /// Per-instance loss (no L2 term) and the negative class it used.
    pub fn instance_loss_on<R: Rng>(
        &self,
        tape: &mut Tape,
        seq: &AggregateSequence,
        gold: usize,
        cfg: &LossConfig,
        rng: Option<&mut R>,
    ) -> Result<(Var, usize)> {
        let logits = self.logits_on(tape, seq, rng)?;
        let probs = tape.softmax_rows(logits);
        Ok(loss::instance_loss_on(tape, probs, gold, cfg))
    }

    /// Loss of a batch in evaluation mode, L2 term included.
    pub fn batch_loss(
        &self,
        store: &ParamStore,
        seqs: &[AggregateSequence],
        cfg: &LossConfig,
    ) -> Result<f64> {
        let mut total = cfg.lambda * weight_norm(store, &self.head_weights());
        for seq in seqs {
            let mut tape = Tape::new(store);
            let (l, _) =
                self.instance_loss_on(&mut tape, seq, gold_of(seq)?, cfg, NO_RNG)?;
            total += tape.scalar(l);
        }
        Ok(total)
    }

    /// [`Network::batch_loss`] with the encoder outputs supplied, one per
    /// sequence. Head parameters in `store` are read; encoder ones are not.
    pub fn head_loss(
        &self,
        store: &ParamStore,
        hidden: &[HiddenStates],
        seqs: &[AggregateSequence],
        cfg: &LossConfig,
    ) -> Result<f64> {
        if hidden.len() != seqs.len() {
            return Err(Error::Shape(format!(
                "{} hidden-state matrices for {} sequences",
                hidden.len(),
                seqs.len()
            )));
        }
        let mut total = cfg.lambda * weight_norm(store, &self.head_weights());
        for (seq, h) in seqs.iter().zip(hidden) {
            let mut tape = Tape::new(store);
            let hv = tape.constant(h.0.clone());
            let logits = self.logits_from_hidden(&mut tape, hv, seq, NO_RNG)?;
            let probs = tape.softmax_rows(logits);
            let (l, _) = loss::instance_loss_on(&mut tape, probs, gold_of(seq)?, cfg);
            total += tape.scalar(l);
        }
        Ok(total)
    }

    /// Loss and gradients of a batch. Each instance gets its own tape; the
    /// per-instance gradients are summed, as is the loss.
    pub fn batch_gradients<R: Rng>(
        &self,
        store: &ParamStore,
        seqs: &[AggregateSequence],
        cfg: &LossConfig,
        mut rng: Option<&mut R>,
    ) -> Result<BatchOutcome> {
        let mut grads = Gradients::default();
        let mut loss = 0.0;
        let mut negatives = Vec::with_capacity(seqs.len());
        let mut correct = 0;
        for seq in seqs {
            let gold = gold_of(seq)?;
            let mut tape = Tape::new(store);
            let logits = self.logits_on(&mut tape, seq, rng.as_deref_mut())?;
            if argmax(tape.value(logits).iter().copied()) == gold {
                correct += 1;
            }
            let probs = tape.softmax_rows(logits);
            let (l, neg) = loss::instance_loss_on(&mut tape, probs, gold, cfg);
            loss += tape.scalar(l);
            negatives.push(neg);
            grads.merge(tape.backward(l));
        }
        let mut tape = Tape::new(store);
        if let Some(p) = loss::penalty_on(&mut tape, &self.head_weights(), cfg.lambda) {
            loss += tape.scalar(p);
            grads.merge(tape.backward(p));
        }
        Ok(BatchOutcome {
            loss,
            grads,
            negatives,
            correct,
        })
    }
}

/// Placeholder for "no dropout" calls that still need a concrete RNG type.
pub(crate) const NO_RNG: Option<&mut rand_chacha::ChaCha8Rng> = None;

fn gold_of(seq: &AggregateSequence) -> Result<usize> {
    seq.label
        .ok_or_else(|| Error::Label(format!("instance {} has no gold label", seq.id)))
}

pub(crate) fn argmax(values: impl Iterator<Item = f64>) -> usize {
    let mut best = (0, f64::NEG_INFINITY);
    for (i, v) in values.enumerate() {
        if v > best.1 {
            best = (i, v);
        }
    }
    best.0
}

/// A network together with its parameter values.
#[derive(Clone, Debug)]
pub struct RelationModel {
    pub params: ParamStore,
    network: Network,
}

impl RelationModel {
    /// Randomly initialized model. Pretrained weights are applied separately
    /// with [`load_pretrained`].
    pub fn new<R: Rng>(config: ModelConfig, rng: &mut R) -> Result<Self> {
        config.validate()?;
        let mut params = ParamStore::new();
        let network = Network::build(&config, &mut params, rng);
        Ok(RelationModel { params, network })
    }

    pub fn config(&self) -> &ModelConfig {
        &self.network.config
    }

    pub fn network(&self) -> &Network {
        &self.network
    }

    pub fn heads(&self) -> Option<&HeadParameters> {
        self.network.heads()
    }

    pub fn set_classifier_dropout(&mut self, rate: f64) -> Result<()> {
        if !(0.0..1.0).contains(&rate) {
            return Err(Error::Config("classifier dropout must lie in [0, 1)".into()));
        }
        self.network.config.classifier_dropout = rate;
        Ok(())
    }

    /// Evaluation-mode hidden states for each sequence.
    pub fn encode(&self, seqs: &[AggregateSequence]) -> Result<Vec<HiddenStates>> {
        seqs.iter()
            .map(|seq| {
                let mut tape = Tape::new(&self.params);
                let h = self.network.encode_on(&mut tape, seq, NO_RNG)?;
                Ok(HiddenStates(tape.value(h).clone()))
            })
            .collect()
    }

    /// Evaluation-mode class distributions. Batches are split over threads.
    pub fn predict_proba(&self, seqs: &[AggregateSequence]) -> Result<Vec<Vec<f64>>> {
        let one = |seq: &AggregateSequence| -> Result<Vec<f64>> {
            let mut tape = Tape::new(&self.params);
            let logits = self.network.logits_on(&mut tape, seq, NO_RNG)?;
            let p = tape.softmax_rows(logits);
            Ok(tape.value(p).iter().copied().collect())
        };
        let threads = std::thread::available_parallelism().map_or(1, |n| n.get());
        if threads <= 1 || seqs.len() < 2 * threads {
            return seqs.iter().map(one).collect();
        }
        let chunk = seqs.len().div_ceil(threads);
        std::thread::scope(|s| {
            let handles: Vec<_> = seqs
                .chunks(chunk)
                .map(|c| s.spawn(move || c.iter().map(one).collect::<Result<Vec<_>>>()))
                .collect();
            let mut out = Vec::with_capacity(seqs.len());
            for h in handles {
                out.extend(h.join().expect("prediction thread panicked")?);
            }
            Ok(out)
        })
    }

    /// Argmax label ids.
    pub fn predict(&self, seqs: &[AggregateSequence]) -> Result<Vec<usize>> {
        Ok(self
            .predict_proba(seqs)?
            .into_iter()
            .map(|p| argmax(p.into_iter()))
            .collect())
    }

    pub fn batch_loss(&self, seqs: &[AggregateSequence], cfg: &LossConfig) -> Result<f64> {
        self.network.batch_loss(&self.params, seqs, cfg)
    }

    pub fn batch_gradients<R: Rng>(
        &self,
        seqs: &[AggregateSequence],
        cfg: &LossConfig,
        rng: Option<&mut R>,
    ) -> Result<BatchOutcome> {
        self.network.batch_gradients(&self.params, seqs, cfg, rng)
    }
}

#[cfg(test)]
mod tests;
