//! Task-specific heads: aggregate, entity, indicator, fusion, classifier.

use ndarray::{Array1, Axis};
use rand::Rng;

use super::{HiddenStates, Linear};
use crate::error::{Error, Result};
use crate::tensor::{Matrix, ParamId, ParamStore, Tape, Var};

/// Head weights. Weight matrices are stored `in x out` and applied to row
/// vectors, so `x W` here is `W x` in column-vector notation.
#[derive(Clone, Debug)]
pub struct HeadParameters {
    pub aggregate: Linear,
    /// Shared by both entity heads.
    pub entity: Linear,
    /// Absent when the model has no indicator segment.
    pub indicator: Option<Linear>,
    pub fuse_in: Linear,
    pub fuse_out: Linear,
    pub classifier: Linear,
}

impl HeadParameters {
    pub fn new<R: Rng>(
        store: &mut ParamStore,
        dim: usize,
        with_indicator: bool,
        num_labels: usize,
        scale: f64,
        rng: &mut R,
    ) -> Self {
        let parts = if with_indicator { 4 } else { 3 };
        HeadParameters {
            aggregate: Linear::new(store, "head.aggregate", dim, dim, scale, rng),
            entity: Linear::new(store, "head.entity", dim, dim, scale, rng),
            indicator: with_indicator
                .then(|| Linear::new(store, "head.indicator", dim, dim, scale, rng)),
            fuse_in: Linear::new(store, "head.fuse_in", parts * dim, dim, scale, rng),
            fuse_out: Linear::new(store, "head.fuse_out", dim, dim, scale, rng),
            classifier: Linear::new(store, "head.classifier", dim, num_labels, scale, rng),
        }
    }

    /// Weight matrices covered by the L2 penalty (biases excluded).
    pub fn weights(&self) -> Vec<ParamId> {
        let mut w = vec![self.aggregate.w, self.entity.w];
        w.extend(self.indicator.map(|l| l.w));
        w.extend([self.fuse_in.w, self.fuse_out.w, self.classifier.w]);
        w
    }

    /// `tanh(H[0]) W0 + b0`.
    pub fn aggregate_on(&self, tape: &mut Tape, h: Var) -> Var {
        let h0 = tape.slice_rows(h, 0, 1);
        let t = tape.tanh(h0);
        self.aggregate.apply(tape, t)
    }

    /// `tanh(mean of rows) We + be`.
    pub fn entity_on(&self, tape: &mut Tape, h: Var, rows: &[usize]) -> Result<Var> {
        average_head(tape, h, rows, self.entity, "entity")
    }

    /// `tanh(mean of rows) Wz + bz`.
    pub fn indicator_on(&self, tape: &mut Tape, h: Var, rows: &[usize]) -> Result<Var> {
        let lin = self
            .indicator
            .ok_or_else(|| Error::Shape("model has no indicator head".into()))?;
        average_head(tape, h, rows, lin, "indicator")
    }

    /// `(concat(parts) W1 + b1) W2 + b2`.
    pub fn fuse_on(&self, tape: &mut Tape, parts: &[Var]) -> Var {
        let x = tape.concat_cols(parts);
        let y = self.fuse_in.apply(tape, x);
        self.fuse_out.apply(tape, y)
    }

    /// Logits `r W* + b*`.
    pub fn logits_on(&self, tape: &mut Tape, r: Var) -> Var {
        self.classifier.apply(tape, r)
    }

    pub fn aggregate_head(&self, store: &ParamStore, h0: &Array1<f64>) -> Array1<f64> {
        let mut tape = Tape::new(store);
        let h = tape.constant(row(h0));
        let out = self.aggregate_on(&mut tape, h);
        flat(&tape, out)
    }

    pub fn entity_head(
        &self,
        store: &ParamStore,
        h: &HiddenStates,
        rows: &[usize],
    ) -> Result<Array1<f64>> {
        let mut tape = Tape::new(store);
        let hv = tape.constant(h.0.clone());
        let out = self.entity_on(&mut tape, hv, rows)?;
        Ok(flat(&tape, out))
    }

    pub fn indicator_head(
        &self,
        store: &ParamStore,
        h: &HiddenStates,
        rows: &[usize],
    ) -> Result<Array1<f64>> {
        let mut tape = Tape::new(store);
        let hv = tape.constant(h.0.clone());
        let out = self.indicator_on(&mut tape, hv, rows)?;
        Ok(flat(&tape, out))
    }

    pub fn fuse(&self, store: &ParamStore, parts: &[Array1<f64>]) -> Array1<f64> {
        let mut tape = Tape::new(store);
        let vars: Vec<Var> = parts.iter().map(|p| tape.constant(row(p))).collect();
        let out = self.fuse_on(&mut tape, &vars);
        flat(&tape, out)
    }

    /// Class distribution `softmax(r W* + b*)` (evaluation mode, no dropout).
    pub fn classify(&self, store: &ParamStore, r: &Array1<f64>) -> Vec<f64> {
        let mut tape = Tape::new(store);
        let rv = tape.constant(row(r));
        let logits = self.logits_on(&mut tape, rv);
        let p = tape.softmax_rows(logits);
        tape.value(p).iter().copied().collect()
    }
}

fn average_head(tape: &mut Tape, h: Var, rows: &[usize], lin: Linear, what: &str) -> Result<Var> {
    if rows.is_empty() {
        return Err(Error::Shape(format!("empty {what} span")));
    }
    let n = tape.shape(h).0;
    if let Some(&bad) = rows.iter().find(|&&r| r >= n) {
        return Err(Error::Shape(format!(
            "{what} span row {bad} outside {n} hidden rows"
        )));
    }
    let m = tape.mean_rows(h, rows);
    let t = tape.tanh(m);
    Ok(lin.apply(tape, t))
}

fn row(v: &Array1<f64>) -> Matrix {
    v.clone().insert_axis(Axis(0))
}

fn flat(tape: &Tape, v: Var) -> Array1<f64> {
    tape.value(v).row(0).to_owned()
}
