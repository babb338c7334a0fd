//! Ranking loss with the Other class excluded from both terms.

use super::config::LossConfig;
use crate::tensor::{ParamId, ParamStore, Tape, Var};

/// Probabilities inside logarithms are clamped to `[PROB_FLOOR, 1 - PROB_FLOOR]`.
pub const PROB_FLOOR: f64 = 1e-12;

/// Highest-probability label that is neither `gold` nor `other_id`; ties go
/// to the smaller id.
pub fn select_negative_class(p: &[f64], gold: usize, other_id: usize) -> usize {
    let mut best: Option<(usize, f64)> = None;
    for (k, &pk) in p.iter().enumerate() {
        if k == gold || k == other_id {
            continue;
        }
        if best.is_none_or(|(_, b)| pk > b) {
            best = Some((k, pk));
        }
    }
    best.expect("need at least three labels").0
}

/// The two per-instance terms `(-ln p(y+), -ln(1 - p(y-)))`; the first is
/// zero when `gold` is Other.
pub fn instance_terms(p: &[f64], gold: usize, negative: usize, cfg: &LossConfig) -> (f64, f64) {
    let clamp = |x: f64| x.clamp(PROB_FLOOR, 1.0 - PROB_FLOOR);
    let pos = if gold == cfg.other_class_id {
        0.0
    } else {
        -clamp(p[gold]).ln()
    };
    let neg = -clamp(1.0 - p[negative]).ln();
    (pos, neg)
}

/// Batch loss from precomputed distributions and negative classes.
/// `head_weights` is the penalized parameter set.
pub fn compute_loss(
    dists: &[Vec<f64>],
    gold: &[usize],
    negatives: &[usize],
    store: &ParamStore,
    head_weights: &[ParamId],
    cfg: &LossConfig,
) -> f64 {
    assert_eq!(dists.len(), gold.len());
    assert_eq!(dists.len(), negatives.len());
    let mut loss = 0.0;
    for ((p, &g), &n) in dists.iter().zip(gold).zip(negatives) {
        let (pos, neg) = instance_terms(p, g, n, cfg);
        loss += pos + cfg.beta * neg;
    }
    loss + cfg.lambda * weight_norm(store, head_weights)
}

/// `Σ ||W||²` over the given tensors.
pub fn weight_norm(store: &ParamStore, ids: &[ParamId]) -> f64 {
    ids.iter()
        .map(|&id| store.get(id).iter().map(|v| v * v).sum::<f64>())
        .sum()
}

/// Per-instance loss terms on the tape for a `1 x |Y|` probability row.
/// Returns the instance loss and the chosen negative class.
pub(crate) fn instance_loss_on(
    tape: &mut Tape,
    probs: Var,
    gold: usize,
    cfg: &LossConfig,
) -> (Var, usize) {
    let p: Vec<f64> = tape.value(probs).iter().copied().collect();
    let negative = select_negative_class(&p, gold, cfg.other_class_id);
    let pn = tape.pick(probs, 0, negative);
    let one_minus = tape.affine(pn, -1.0, 1.0);
    let ln_neg = tape.ln_clamp(one_minus, PROB_FLOOR, 1.0 - PROB_FLOOR);
    let mut total = tape.scale(ln_neg, -cfg.beta);
    if gold != cfg.other_class_id {
        let pg = tape.pick(probs, 0, gold);
        let ln_pos = tape.ln_clamp(pg, PROB_FLOOR, 1.0 - PROB_FLOOR);
        let pos = tape.scale(ln_pos, -1.0);
        total = tape.add(total, pos);
    }
    (total, negative)
}

/// `λ Σ ||W||²` on the tape.
pub(crate) fn penalty_on(tape: &mut Tape, weights: &[ParamId], lambda: f64) -> Option<Var> {
    if lambda == 0.0 || weights.is_empty() {
        return None;
    }
    let terms: Vec<Var> = weights
        .iter()
        .map(|&w| {
            let v = tape.param(w);
            tape.sum_squares(v)
        })
        .collect();
    let s = tape.sum(&terms);
    Some(tape.scale(s, lambda))
}
