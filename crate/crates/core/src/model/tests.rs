use approx::assert_abs_diff_eq;
use ndarray::{Array1, Array2};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::*;
use crate::corpus::{NUM_LABELS, OTHER_ID};
use crate::sequencing::{assemble_mode, Vocabulary};
use crate::tensor::gradcheck::{numeric_gradient, relative_error};
use crate::tensor::softmax_rows;

fn vocab() -> Vocabulary {
    Vocabulary::from_tokens(
        "the boss moved into office cat sat on mat virus caused fever a new his"
            .split(' '),
    )
}

const SENTENCES: [(&str, &str, usize); 4] = [
    ("the e11 boss e12 moved into e21 office e22", "boss # moved into $ office", 16),
    ("a e11 cat e12 sat on the e21 mat e22", "cat # sat on $ mat", 3),
    ("e11 virus e12 caused e21 fever e22", "virus # caused $ fever", 0),
    ("his new e11 cat e12 caused the e21 boss e22", "cat # caused $ boss", OTHER_ID),
];

fn batch(mode: InputMode, v: &Vocabulary) -> Vec<AggregateSequence> {
    SENTENCES
        .iter()
        .enumerate()
        .map(|(i, (sent, ind, label))| {
            let s: Vec<&str> = sent.split(' ').collect();
            let ind: Vec<&str> = ind.split(' ').collect();
            assemble_mode(i as u32 + 1, mode, &s, &ind, v, 32)
                .unwrap()
                .with_label(*label)
        })
        .collect()
}

fn toy(mode: InputMode, seed: u64) -> (RelationModel, Vec<AggregateSequence>) {
    let v = vocab();
    let mut cfg = ModelConfig::new(EncoderConfig::toy(), mode, v.len());
    cfg.encoder.max_positions = 32;
    let model = RelationModel::new(cfg, &mut ChaCha8Rng::seed_from_u64(seed)).unwrap();
    (model, batch(mode, &v))
}

fn random_vec(rng: &mut ChaCha8Rng, n: usize, scale: f64) -> Array1<f64> {
    Array1::from_shape_fn(n, |_| rng.gen_range(-scale..scale))
}

fn assert_close(a: &Array1<f64>, b: &Array1<f64>, eps: f64) {
    assert_eq!(a.len(), b.len());
    for (x, y) in a.iter().zip(b) {
        assert!((x - y).abs() <= eps, "{x} vs {y}");
    }
}

/// `x W + b` computed with explicit loops.
fn affine_loops(x: &[f64], w: &Array2<f64>, b: &Array2<f64>) -> Vec<f64> {
    (0..w.ncols())
        .map(|j| b[[0, j]] + (0..x.len()).map(|i| x[i] * w[[i, j]]).sum::<f64>())
        .collect()
}

#[test]
fn aggregate_head_oracles() {
    let (mut model, _) = toy(InputMode::Both, 1);
    let heads = model.heads().unwrap().clone();
    let d = 64;
    let zero = heads.aggregate_head(&model.params, &Array1::zeros(d));
    let b0 = model.params.get(heads.aggregate.b).clone();
    for (z, b) in zero.iter().zip(b0.iter()) {
        assert_abs_diff_eq!(*z, *b, epsilon = 1e-15);
    }

    *model.params.get_mut(heads.aggregate.w) = Array2::eye(d);
    let big = heads.aggregate_head(&model.params, &Array1::from_elem(d, 50.0));
    assert!(big.iter().all(|&v| (v - 1.0).abs() < 1e-12));

    let mut rng = ChaCha8Rng::seed_from_u64(7);
    *model.params.get_mut(heads.aggregate.w) =
        Array2::from_shape_fn((d, d), |_| rng.gen_range(-0.1..0.1));
    *model.params.get_mut(heads.aggregate.b) =
        Array2::from_shape_fn((1, d), |_| rng.gen_range(-0.1..0.1));
    let h0 = random_vec(&mut rng, d, 2.0);
    let got = heads.aggregate_head(&model.params, &h0);
    let t: Vec<f64> = h0.iter().map(|v| v.tanh()).collect();
    let want = affine_loops(
        &t,
        model.params.get(heads.aggregate.w),
        model.params.get(heads.aggregate.b),
    );
    for (g, w) in got.iter().zip(&want) {
        assert_abs_diff_eq!(*g, *w, epsilon = 1e-12);
    }
}

#[test]
fn entity_head_oracles() {
    let (model, _) = toy(InputMode::Both, 2);
    let heads = model.heads().unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let v = random_vec(&mut rng, 64, 1.0);
    let u = random_vec(&mut rng, 64, 1.0);
    let mut h = Array2::zeros((6, 64));
    for r in [1, 2, 4] {
        h.row_mut(r).assign(&v);
    }
    h.row_mut(3).assign(&u);
    let h = HiddenStates(h);

    let single = heads.entity_head(&model.params, &h, &[1]).unwrap();
    let same = heads.entity_head(&model.params, &h, &[1, 2]).unwrap();
    assert_close(&single, &same, 1e-15);
    // Same rows under either entity label give the same vector.
    let as_e2 = heads.entity_head(&model.params, &h, &[4]).unwrap();
    assert_close(&single, &as_e2, 0.0);

    let mid = heads.entity_head(&model.params, &h, &[2, 3]).unwrap();
    let t: Vec<f64> = v.iter().zip(&u).map(|(a, b)| ((a + b) / 2.0).tanh()).collect();
    let want = affine_loops(
        &t,
        model.params.get(heads.entity.w),
        model.params.get(heads.entity.b),
    );
    for (g, w) in mid.iter().zip(&want) {
        assert_abs_diff_eq!(*g, *w, epsilon = 1e-12);
    }

    assert!(heads.entity_head(&model.params, &h, &[]).is_err());
    assert!(heads.entity_head(&model.params, &h, &[6]).is_err());
}

#[test]
fn indicator_head_oracles() {
    let (model, _) = toy(InputMode::Both, 4);
    let heads = model.heads().unwrap();
    let lin = heads.indicator.unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let h = Array2::from_shape_fn((8, 64), |_| rng.gen_range(-1.5..1.5));
    let hs = HiddenStates(h.clone());
    let w = model.params.get(lin.w);
    let b = model.params.get(lin.b);

    let one = heads.indicator_head(&model.params, &hs, &[5]).unwrap();
    let t: Vec<f64> = h.row(5).iter().map(|x| x.tanh()).collect();
    let want = affine_loops(&t, w, b);
    for (g, w) in one.iter().zip(&want) {
        assert_abs_diff_eq!(*g, *w, epsilon = 1e-12);
    }

    let three = heads.indicator_head(&model.params, &hs, &[2, 3, 6]).unwrap();
    let t: Vec<f64> = (0..64)
        .map(|c| ((h[[2, c]] + h[[3, c]] + h[[6, c]]) / 3.0).tanh())
        .collect();
    let want = affine_loops(&t, w, b);
    for (g, w) in three.iter().zip(&want) {
        assert_abs_diff_eq!(*g, *w, epsilon = 1e-12);
    }

    let mut rep = h.clone();
    for r in [1, 2, 3] {
        rep.row_mut(r).assign(&h.row(5));
    }
    let repeated = heads
        .indicator_head(&model.params, &HiddenStates(rep), &[1, 2, 3])
        .unwrap();
    assert_close(&repeated, &one, 1e-15);
}

#[test]
fn fuse_matches_composed_matrix() {
    let (mut model, _) = toy(InputMode::Both, 6);
    let heads = model.heads().unwrap().clone();
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    for lin in [heads.fuse_in, heads.fuse_out] {
        let shape = model.params.get(lin.b).dim();
        *model.params.get_mut(lin.b) = Array2::from_shape_fn(shape, |_| rng.gen_range(-0.5..0.5));
    }
    let parts: Vec<Array1<f64>> = (0..4).map(|_| random_vec(&mut rng, 64, 1.0)).collect();
    let got = heads.fuse(&model.params, &parts);

    let x: Array1<f64> = parts.iter().flat_map(|p| p.iter().copied()).collect();
    let (w1, b1) = (model.params.get(heads.fuse_in.w), model.params.get(heads.fuse_in.b));
    let (w2, b2) = (model.params.get(heads.fuse_out.w), model.params.get(heads.fuse_out.b));
    let composed = w1.dot(w2);
    let bias = b1.dot(w2) + b2;
    let want = x.dot(&composed) + bias.row(0);
    assert_close(&got, &want, 1e-12);

    let zeros: Vec<Array1<f64>> = (0..4).map(|_| Array1::zeros(64)).collect();
    model.params.get_mut(heads.fuse_in.b).fill(0.0);
    model.params.get_mut(heads.fuse_out.b).fill(0.0);
    let z = heads.fuse(&model.params, &zeros);
    assert!(z.iter().all(|&v| v == 0.0));

    *model.params.get_mut(heads.fuse_out.w) = Array2::eye(64);
    let lin_only = heads.fuse(&model.params, &parts);
    let want = x.dot(model.params.get(heads.fuse_in.w));
    assert_close(&lin_only, &want, 1e-12);
}

#[test]
fn classify_oracles() {
    let (mut model, _) = toy(InputMode::Both, 9);
    let heads = model.heads().unwrap().clone();
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    let r = random_vec(&mut rng, 64, 1.0);

    let p = heads.classify(&model.params, &r);
    let logits: Vec<f64> = affine_loops(
        r.as_slice().unwrap(),
        model.params.get(heads.classifier.w),
        model.params.get(heads.classifier.b),
    );
    let max = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let z: f64 = logits.iter().map(|l| (l - max).exp()).sum();
    for (pk, l) in p.iter().zip(&logits) {
        assert_abs_diff_eq!(*pk, (l - max).exp() / z, epsilon = 1e-12);
    }

    model.params.get_mut(heads.classifier.w).fill(0.0);
    let uniform = heads.classify(&model.params, &r);
    assert_eq!(uniform.len(), NUM_LABELS);
    assert!(uniform.iter().all(|&v| (v - 1.0 / 19.0).abs() < 1e-15));

    model.params.get_mut(heads.classifier.b)[[0, 7]] = 800.0;
    let peaked = heads.classify(&model.params, &r);
    assert_abs_diff_eq!(peaked[7], 1.0, epsilon = 1e-12);
}

#[test]
fn negative_class_examples() {
    let mut p = vec![0.01; 19];
    p[4] = 0.6;
    p[9] = 0.2;
    assert_eq!(select_negative_class(&p, 4, OTHER_ID), 9);

    let mut q = vec![0.0; 19];
    q[2] = 0.5;
    q[OTHER_ID] = 0.3;
    q[11] = 0.1;
    q[5] = 0.1;
    assert_eq!(select_negative_class(&q, 2, OTHER_ID), 5);

    let mut t = vec![0.0; 19];
    t[OTHER_ID] = 0.5;
    t[13] = 0.25;
    t[6] = 0.25;
    assert_eq!(select_negative_class(&t, OTHER_ID, OTHER_ID), 6);
}

#[test]
fn loss_examples() {
    let cfg = LossConfig { beta: 5.0, lambda: 0.0, other_class_id: OTHER_ID };
    let store = ParamStore::new();
    let mut p = vec![0.0; 19];
    p[3] = 0.7;
    p[8] = 0.2;
    p[OTHER_ID] = 0.1;
    let neg = select_negative_class(&p, 3, OTHER_ID);
    assert_eq!(neg, 8);
    let l = compute_loss(&[p.clone()], &[3], &[neg], &store, &[], &cfg);
    assert_abs_diff_eq!(l, -(0.7f64.ln()) - 5.0 * 0.8f64.ln(), epsilon = 1e-12);

    let twice = compute_loss(&[p.clone(), p.clone()], &[3, 3], &[8, 8], &store, &[], &cfg);
    assert_eq!(twice, 2.0 * l);

    let mut sure = vec![0.0; 19];
    sure[3] = 1.0;
    let zero = compute_loss(&[sure], &[3], &[0], &store, &[], &cfg);
    assert!(zero.abs() < 1e-11);

    let ce = LossConfig { beta: 0.0, ..cfg };
    let l = compute_loss(&[p.clone()], &[3], &[8], &store, &[], &ce);
    assert_eq!(l, -(0.7f64.ln()));
    let other = compute_loss(&[p], &[OTHER_ID], &[8], &store, &[], &ce);
    assert_eq!(other, 0.0);
}

#[test]
fn l2_term_covers_head_weights_only() {
    let (model, _) = toy(InputMode::Both, 11);
    let net = model.network();
    let w = net.head_weights();
    assert_eq!(w.len(), 6);
    assert!(w.iter().all(|&id| model.params.name(id).ends_with(".w")));
    assert!(w.iter().all(|&id| model.params.name(id).starts_with("head.")));
    let cfg = LossConfig { beta: 0.0, lambda: 0.5, other_class_id: OTHER_ID };
    let l = compute_loss(&[], &[], &[], &model.params, &w, &cfg);
    assert_abs_diff_eq!(l, 0.5 * weight_norm(&model.params, &w), epsilon = 1e-12);
}

/// Analytic gradients of the full loss against central differences, for
/// every head parameter. Encoder outputs do not depend on head parameters,
/// so the finite differences reuse cached hidden states.
#[test]
fn head_gradients_match_finite_differences() {
    let (mut model, seqs) = toy(InputMode::Both, 12);
    let cfg = LossConfig::default();
    let hidden = model.encode(&seqs).unwrap();
    let net = model.network().clone();

    let analytic = model.batch_gradients(&seqs, &cfg, NO_RNG).unwrap();
    let loss = |store: &ParamStore| net.head_loss(store, &hidden, &seqs, &cfg).unwrap();
    assert_abs_diff_eq!(loss(&model.params), analytic.loss, epsilon = 1e-9);
    assert_abs_diff_eq!(
        loss(&model.params),
        net.batch_loss(&model.params, &seqs, &cfg).unwrap(),
        epsilon = 1e-12
    );

    for id in net.head_params() {
        let numeric = numeric_gradient(&mut model.params, id, 1e-4, &loss);
        let exact = analytic.grads.get(id).unwrap();
        let err = relative_error(exact, &numeric);
        assert!(err < 1e-4, "{}: relative error {err}", model.params.name(id));
    }
}

#[test]
fn encoder_gradients_match_finite_differences_on_samples() {
    let (mut model, seqs) = toy(InputMode::Both, 13);
    let seqs = &seqs[..2];
    let cfg = LossConfig::default();
    let analytic = model.batch_gradients(seqs, &cfg, NO_RNG).unwrap();
    let net = model.network().clone();
    let mut rng = ChaCha8Rng::seed_from_u64(14);
    let names = [
        "encoder.embeddings.word",
        "encoder.embeddings.ln.gamma",
        "encoder.layer.0.attn.query.w",
        "encoder.layer.1.attn.value.b",
        "encoder.layer.1.ffn.intermediate.w",
        "encoder.layer.1.ffn.ln.beta",
    ];
    for name in names {
        let id = model.params.id(name).unwrap();
        let exact = analytic.grads.get(id).unwrap().clone();
        let (rows, cols) = exact.dim();
        for _ in 0..4 {
            let (r, c) = if name.ends_with("word") {
                (seqs[0].ids[rng.gen_range(0..seqs[0].content_len())] as usize, rng.gen_range(0..cols))
            } else {
                (rng.gen_range(0..rows), rng.gen_range(0..cols))
            };
            let orig = model.params.get(id)[[r, c]];
            let h = 1e-5;
            model.params.get_mut(id)[[r, c]] = orig + h;
            let plus = net.batch_loss(&model.params, seqs, &cfg).unwrap();
            model.params.get_mut(id)[[r, c]] = orig - h;
            let minus = net.batch_loss(&model.params, seqs, &cfg).unwrap();
            model.params.get_mut(id)[[r, c]] = orig;
            let numeric = (plus - minus) / (2.0 * h);
            let a = exact[[r, c]];
            let err = (a - numeric).abs() / (a.abs() + numeric.abs()).max(1e-8);
            assert!(err < 1e-4, "{name}[{r},{c}]: {a} vs {numeric}");
        }
    }
}

#[test]
fn evaluation_mode_is_deterministic() {
    let (model, seqs) = toy(InputMode::Both, 15);
    let a = model.predict_proba(&seqs).unwrap();
    let b = model.predict_proba(&seqs).unwrap();
    assert_eq!(a, b);
    for p in &a {
        assert_eq!(p.len(), NUM_LABELS);
        assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-6);
    }
    let h1 = model.encode(&seqs).unwrap();
    let h2 = model.encode(&seqs).unwrap();
    assert_eq!(h1, h2);
    for (h, s) in h1.iter().zip(&seqs) {
        assert_eq!(h.len(), s.content_len());
        assert_eq!(h.dim(), 64);
        assert!(h.0.iter().all(|v| v.is_finite()));
    }
    let dup = vec![seqs[0].clone(), seqs[0].clone()];
    let hd = model.encode(&dup).unwrap();
    assert_eq!(hd[0], hd[1]);

    let same_seed = toy(InputMode::Both, 15).0;
    assert_eq!(same_seed.params, model.params);
    assert_ne!(toy(InputMode::Both, 16).0.params, model.params);
}

#[test]
fn training_mode_applies_dropout() {
    let (model, seqs) = toy(InputMode::Both, 17);
    let cfg = LossConfig::default();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let a = model.batch_gradients(&seqs, &cfg, Some(&mut rng)).unwrap().loss;
    let b = model.batch_gradients(&seqs, &cfg, Some(&mut rng)).unwrap().loss;
    assert_ne!(a, b);
    let e1 = model.batch_gradients(&seqs, &cfg, NO_RNG).unwrap().loss;
    assert_eq!(e1, model.batch_loss(&seqs, &cfg).unwrap());
}

#[test]
fn ablation_modes_shape_the_fusion_layer() {
    let (sent, seqs) = toy(InputMode::Sentence, 18);
    assert!(sent.heads().unwrap().indicator.is_none());
    let w1 = sent.params.get(sent.heads().unwrap().fuse_in.w);
    assert_eq!(w1.dim(), (3 * 64, 64));
    assert_eq!(sent.predict(&seqs).unwrap().len(), 4);

    let (ind, seqs_ind) = toy(InputMode::Indicator, 18);
    assert_eq!(ind.params.get(ind.heads().unwrap().fuse_in.w).dim(), (4 * 64, 64));
    assert_eq!(ind.predict(&seqs_ind).unwrap().len(), 4);

    // A sequence assembled for another mode is rejected.
    assert!(ind.predict(&seqs).is_err());
    let bad = ModelConfig::new(EncoderConfig::toy(), InputMode::SentenceTwice, 30);
    assert!(RelationModel::new(bad, &mut ChaCha8Rng::seed_from_u64(0)).is_err());
}

fn recurrent(mode: InputMode) -> (RelationModel, Vec<AggregateSequence>) {
    let v = vocab();
    let mut enc = EncoderConfig::recurrent();
    enc.embedding_dim = 8;
    enc.lstm_hidden = 6;
    enc.conv_filters = 5;
    enc.conv_window = 3;
    let cfg = ModelConfig::new(enc, mode, v.len());
    let model = RelationModel::new(cfg, &mut ChaCha8Rng::seed_from_u64(21)).unwrap();
    let layout = if mode == InputMode::SentenceTwice { InputMode::Both } else { mode };
    (model, batch(layout, &v))
}

#[test]
fn recurrent_variant_gradients_match_finite_differences() {
    for mode in [InputMode::Both, InputMode::Sentence, InputMode::Indicator, InputMode::SentenceTwice] {
        let (mut model, seqs) = recurrent(mode);
        let cfg = LossConfig::default();
        let analytic = model.batch_gradients(&seqs, &cfg, NO_RNG).unwrap();
        let net = model.network().clone();
        let loss = |s: &ParamStore| net.batch_loss(s, &seqs, &cfg).unwrap();
        for name in ["rnn.lstm.forward.w_hidden", "rnn.lstm.backward.b", "rnn.conv.w", "head.classifier.w"] {
            let id = model.params.id(name).unwrap();
            let numeric = numeric_gradient(&mut model.params, id, 1e-5, &loss);
            let exact = analytic
                .grads
                .get(id)
                .cloned()
                .unwrap_or_else(|| Matrix::zeros(numeric.dim()));
            let err = relative_error(&exact, &numeric);
            assert!(err < 1e-4, "{} {name}: {err}", mode.name());
        }
    }
}

#[test]
fn recurrent_missing_branch_is_zero() {
    let (model, seqs) = recurrent(InputMode::Sentence);
    let p = model.predict_proba(&seqs).unwrap();
    assert_eq!(p.len(), 4);
    // With no indicator the CNN gets no gradient.
    let out = model.batch_gradients(&seqs, &LossConfig::default(), NO_RNG).unwrap();
    let conv = model.params.id("rnn.conv.w").unwrap();
    assert!(out.grads.get(conv).is_none());
    let fused = fuse_nonbert(&Array1::from(vec![1.0, 2.0]), &Array1::zeros(3));
    assert_eq!(fused.to_vec(), vec![1.0, 2.0, 0.0, 0.0, 0.0]);
}

#[test]
fn short_indicator_is_padded_to_the_window() {
    let v = vocab();
    let mut enc = EncoderConfig::recurrent();
    enc.conv_window = 9;
    let cfg = ModelConfig::new(enc, InputMode::Indicator, v.len());
    let model = RelationModel::new(cfg, &mut ChaCha8Rng::seed_from_u64(3)).unwrap();
    let seqs = batch(InputMode::Indicator, &v);
    assert!(seqs.iter().any(|s| s.indicator.unwrap().len < 9));
    let p = model.predict_proba(&seqs).unwrap();
    assert!(p.iter().flatten().all(|x| x.is_finite()));
}

fn distribution() -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(0.0f64..1.0, NUM_LABELS).prop_map(|v| {
        let a = Array2::from_shape_vec((1, NUM_LABELS), v.iter().map(|x| x * 8.0).collect()).unwrap();
        softmax_rows(&a).iter().copied().collect()
    })
}

proptest! {
    #[test]
    fn negative_class_is_brute_force_argmax(
        raw in prop::collection::vec(0u8..6, NUM_LABELS),
        gold in 0usize..NUM_LABELS,
    ) {
        // Coarse values force frequent ties.
        let p: Vec<f64> = raw.iter().map(|&x| x as f64 / 10.0).collect();
        let got = select_negative_class(&p, gold, OTHER_ID);
        prop_assert_ne!(got, gold);
        prop_assert_ne!(got, OTHER_ID);
        let best = (0..NUM_LABELS)
            .filter(|&k| k != gold && k != OTHER_ID)
            .map(|k| p[k])
            .fold(f64::NEG_INFINITY, f64::max);
        let first = (0..NUM_LABELS)
            .find(|&k| k != gold && k != OTHER_ID && p[k] == best)
            .unwrap();
        prop_assert_eq!(got, first);
    }

    #[test]
    fn softmax_sums_to_one(p in distribution()) {
        prop_assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-6);
        prop_assert!(p.iter().all(|&x| x > 0.0));
    }

    #[test]
    fn other_gold_has_no_positive_term(p in distribution()) {
        let cfg = LossConfig::default();
        let neg = select_negative_class(&p, OTHER_ID, OTHER_ID);
        let (pos, _) = instance_terms(&p, OTHER_ID, neg, &cfg);
        prop_assert_eq!(pos, 0.0);
    }

    #[test]
    fn beta_zero_is_clamped_cross_entropy(p in distribution(), gold in 0usize..NUM_LABELS) {
        let cfg = LossConfig { beta: 0.0, lambda: 0.0, other_class_id: OTHER_ID };
        let neg = select_negative_class(&p, gold, OTHER_ID);
        let l = compute_loss(std::slice::from_ref(&p), &[gold], &[neg], &ParamStore::new(), &[], &cfg);
        let ce = if gold == OTHER_ID { 0.0 } else { -p[gold].clamp(PROB_FLOOR, 1.0 - PROB_FLOOR).ln() };
        prop_assert!((l - ce).abs() <= 1e-9);
    }

    #[test]
    fn raising_gold_probability_never_raises_loss(
        p in distribution(),
        gold in 0usize..18,
        t in 0.0f64..1.0,
    ) {
        let cfg = LossConfig { beta: 5.0, lambda: 0.0, other_class_id: OTHER_ID };
        let loss = |q: &[f64]| {
            let neg = select_negative_class(q, gold, OTHER_ID);
            compute_loss(&[q.to_vec()], &[gold], &[neg], &ParamStore::new(), &[], &cfg)
        };
        let new_gold = p[gold] + t * (1.0 - p[gold]);
        let rest = 1.0 - p[gold];
        let q: Vec<f64> = p
            .iter()
            .enumerate()
            .map(|(k, &x)| if k == gold { new_gold } else if rest > 0.0 { x * (1.0 - new_gold) / rest } else { 0.0 })
            .collect();
        prop_assert!(loss(&q) <= loss(&p) + 1e-12);
    }
}
