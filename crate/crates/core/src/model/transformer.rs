//! BERT-layout bidirectional transformer encoder (post-layer-norm, GELU).

use rand::Rng;

use super::config::EncoderConfig;
use super::Linear;
use crate::tensor::{ParamId, ParamStore, Tape, Var};

#[derive(Clone, Copy, Debug)]
pub(crate) struct Norm {
    pub gamma: ParamId,
    pub beta: ParamId,
}

impl Norm {
    fn new(store: &mut ParamStore, name: &str, dim: usize) -> Self {
        Norm {
            gamma: store.add_ones(format!("{name}.gamma"), (1, dim)),
            beta: store.add_zeros(format!("{name}.beta"), (1, dim)),
        }
    }

    fn apply(&self, tape: &mut Tape, x: Var, eps: f64) -> Var {
        let g = tape.param(self.gamma);
        let b = tape.param(self.beta);
        tape.layer_norm(x, g, b, eps)
    }
}

#[derive(Clone, Debug)]
pub(crate) struct Layer {
    query: Linear,
    key: Linear,
    value: Linear,
    attn_out: Linear,
    attn_norm: Norm,
    intermediate: Linear,
    ffn_out: Linear,
    ffn_norm: Norm,
}

#[derive(Clone, Debug)]
pub(crate) struct TransformerEncoder {
    pub word: ParamId,
    pub position: ParamId,
    pub token_type: ParamId,
    emb_norm: Norm,
    layers: Vec<Layer>,
    heads: usize,
    eps: f64,
    dropout: f64,
}

impl TransformerEncoder {
    pub fn new<R: Rng>(
        store: &mut ParamStore,
        cfg: &EncoderConfig,
        vocab_size: usize,
        rng: &mut R,
    ) -> Self {
        let d = cfg.hidden_dim;
        let s = cfg.init_scale;
        let word = store.add_uniform("encoder.embeddings.word", (vocab_size, d), s, rng);
        let position =
            store.add_uniform("encoder.embeddings.position", (cfg.max_positions, d), s, rng);
        let token_type =
            store.add_uniform("encoder.embeddings.token_type", (cfg.type_vocab_size, d), s, rng);
        let emb_norm = Norm::new(store, "encoder.embeddings.ln", d);
        let layers = (0..cfg.layers)
            .map(|i| {
                let p = format!("encoder.layer.{i}");
                Layer {
                    query: Linear::new(store, &format!("{p}.attn.query"), d, d, s, rng),
                    key: Linear::new(store, &format!("{p}.attn.key"), d, d, s, rng),
                    value: Linear::new(store, &format!("{p}.attn.value"), d, d, s, rng),
                    attn_out: Linear::new(store, &format!("{p}.attn.output"), d, d, s, rng),
                    attn_norm: Norm::new(store, &format!("{p}.attn.ln"), d),
                    intermediate: Linear::new(
                        store,
                        &format!("{p}.ffn.intermediate"),
                        d,
                        cfg.intermediate_dim,
                        s,
                        rng,
                    ),
                    ffn_out: Linear::new(
                        store,
                        &format!("{p}.ffn.output"),
                        cfg.intermediate_dim,
                        d,
                        s,
                        rng,
                    ),
                    ffn_norm: Norm::new(store, &format!("{p}.ffn.ln"), d),
                }
            })
            .collect();
        TransformerEncoder {
            word,
            position,
            token_type,
            emb_norm,
            layers,
            heads: cfg.heads,
            eps: cfg.layer_norm_eps,
            dropout: cfg.dropout_rate,
        }
    }

    /// Hidden states for the unpadded positions `ids`, one row per position.
    /// Padded positions are masked out of attention, so dropping them
    /// leaves the other rows unchanged.
    pub fn forward<R: Rng>(
        &self,
        tape: &mut Tape,
        ids: &[usize],
        segments: &[usize],
        mut rng: Option<&mut R>,
    ) -> Var {
        let t = ids.len();
        let positions: Vec<usize> = (0..t).collect();
        let word = tape.param(self.word);
        let pos = tape.param(self.position);
        let typ = tape.param(self.token_type);
        let a = tape.gather(word, ids);
        let b = tape.gather(pos, &positions);
        let c = tape.gather(typ, segments);
        let x = tape.sum(&[a, b, c]);
        let x = self.emb_norm.apply(tape, x, self.eps);
        let mut x = self.drop(tape, x, &mut rng);

        for layer in &self.layers {
            let q = layer.query.apply(tape, x);
            let k = layer.key.apply(tape, x);
            let v = layer.value.apply(tape, x);
            let d = tape.shape(q).1;
            let dk = d / self.heads;
            let scale = 1.0 / (dk as f64).sqrt();
            let mut outs = Vec::with_capacity(self.heads);
            for h in 0..self.heads {
                let qh = tape.slice_cols(q, h * dk, dk);
                let kh = tape.slice_cols(k, h * dk, dk);
                let vh = tape.slice_cols(v, h * dk, dk);
                let kt = tape.transpose(kh);
                let scores = tape.matmul(qh, kt);
                let scores = tape.scale(scores, scale);
                let probs = tape.softmax_rows(scores);
                outs.push(tape.matmul(probs, vh));
            }
            let ctx = tape.concat_cols(&outs);
            let attn = layer.attn_out.apply(tape, ctx);
            let attn = self.drop(tape, attn, &mut rng);
            let res = tape.add(x, attn);
            x = layer.attn_norm.apply(tape, res, self.eps);

            let f = layer.intermediate.apply(tape, x);
            let f = tape.gelu(f);
            let f = layer.ffn_out.apply(tape, f);
            let f = self.drop(tape, f, &mut rng);
            let res = tape.add(x, f);
            x = layer.ffn_norm.apply(tape, res, self.eps);
        }
        x
    }

    fn drop<R: Rng>(&self, tape: &mut Tape, x: Var, rng: &mut Option<&mut R>) -> Var {
        match rng {
            Some(r) => tape.dropout(x, self.dropout, *r),
            None => x,
        }
    }
}
