//! Bi-LSTM over the sentence and a CNN over the indicator.

use ndarray::Array1;
use rand::Rng;

use super::config::EncoderConfig;
use super::Linear;
use crate::tensor::{Matrix, ParamId, ParamStore, Tape, Var};

#[derive(Clone, Copy, Debug)]
pub(crate) struct LstmCell {
    input: ParamId,
    hidden: ParamId,
    bias: ParamId,
    size: usize,
}

impl LstmCell {
    fn new<R: Rng>(
        store: &mut ParamStore,
        name: &str,
        input: usize,
        size: usize,
        scale: f64,
        rng: &mut R,
    ) -> Self {
        LstmCell {
            input: store.add_uniform(format!("{name}.w_input"), (input, 4 * size), scale, rng),
            hidden: store.add_uniform(format!("{name}.w_hidden"), (size, 4 * size), scale, rng),
            bias: store.add_zeros(format!("{name}.b"), (1, 4 * size)),
            size,
        }
    }

    /// Final hidden state after reading the rows of `x` in `order`.
    fn run(&self, tape: &mut Tape, x: Var, order: impl Iterator<Item = usize>) -> Var {
        let hs = self.size;
        let wi = tape.param(self.input);
        let wh = tape.param(self.hidden);
        let b = tape.param(self.bias);
        let pre = tape.linear(x, wi, b);
        let mut h = tape.constant(Matrix::zeros((1, hs)));
        let mut c = tape.constant(Matrix::zeros((1, hs)));
        for t in order {
            let xt = tape.slice_rows(pre, t, 1);
            let rec = tape.matmul(h, wh);
            let gates = tape.add(xt, rec);
            let i = tape.slice_cols(gates, 0, hs);
            let i = tape.sigmoid(i);
            let f = tape.slice_cols(gates, hs, hs);
            let f = tape.sigmoid(f);
            let g = tape.slice_cols(gates, 2 * hs, hs);
            let g = tape.tanh(g);
            let o = tape.slice_cols(gates, 3 * hs, hs);
            let o = tape.sigmoid(o);
            let keep = tape.mul(f, c);
            let write = tape.mul(i, g);
            c = tape.add(keep, write);
            let tc = tape.tanh(c);
            h = tape.mul(o, tc);
        }
        h
    }
}

#[derive(Clone, Debug)]
pub(crate) struct RecurrentEncoder {
    pub embedding: ParamId,
    forward: LstmCell,
    backward: LstmCell,
    conv: Linear,
    window: usize,
    embedding_dim: usize,
    lstm_hidden: usize,
    conv_filters: usize,
}

impl RecurrentEncoder {
    pub fn new<R: Rng>(
        store: &mut ParamStore,
        cfg: &EncoderConfig,
        vocab_size: usize,
        rng: &mut R,
    ) -> Self {
        let (e, h, s) = (cfg.embedding_dim, cfg.lstm_hidden, cfg.init_scale);
        RecurrentEncoder {
            embedding: store.add_uniform("rnn.embedding", (vocab_size, e), s, rng),
            forward: LstmCell::new(store, "rnn.lstm.forward", e, h, s, rng),
            backward: LstmCell::new(store, "rnn.lstm.backward", e, h, s, rng),
            conv: Linear::new(store, "rnn.conv", cfg.conv_window * e, cfg.conv_filters, s, rng),
            window: cfg.conv_window,
            embedding_dim: e,
            lstm_hidden: h,
            conv_filters: cfg.conv_filters,
        }
    }

    /// Width of the fused vector: both final LSTM states plus the CNN features.
    pub fn output_dim(&self) -> usize {
        2 * self.lstm_hidden + self.conv_filters
    }

    pub fn embed(&self, tape: &mut Tape, ids: &[usize]) -> Var {
        let table = tape.param(self.embedding);
        tape.gather(table, ids)
    }

    /// Concatenated final forward and backward hidden states, `1 x 2h`.
    pub fn sentence_on(&self, tape: &mut Tape, emb: Var) -> Var {
        let t = tape.shape(emb).0;
        let fwd = self.forward.run(tape, emb, 0..t);
        let bwd = self.backward.run(tape, emb, (0..t).rev());
        tape.concat_cols(&[fwd, bwd])
    }

    /// Convolution, ReLU and max-over-time pooling, `1 x filters`. Inputs
    /// shorter than the window are zero-padded at the end.
    pub fn indicator_on(&self, tape: &mut Tape, emb: Var) -> Var {
        let t = tape.shape(emb).0;
        let x = if t < self.window {
            let pad = tape.constant(Matrix::zeros((self.window - t, self.embedding_dim)));
            tape.concat_rows(&[emb, pad])
        } else {
            emb
        };
        let windows = tape.unfold(x, self.window);
        let y = self.conv.apply(tape, windows);
        let y = tape.relu(y);
        tape.max_rows(y)
    }

    pub fn zero_context(&self, tape: &mut Tape) -> Var {
        tape.constant(Matrix::zeros((1, 2 * self.lstm_hidden)))
    }

    pub fn zero_features(&self, tape: &mut Tape) -> Var {
        tape.constant(Matrix::zeros((1, self.conv_filters)))
    }
}

/// `concat(context, features)`, the relation vector fed to the classifier.
pub fn fuse_nonbert(context: &Array1<f64>, features: &Array1<f64>) -> Array1<f64> {
    context.iter().chain(features.iter()).copied().collect()
}
