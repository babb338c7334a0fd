use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::gradcheck::{numeric_gradient, relative_error};
use super::*;

/// Checks every parameter of `store` against central differences.
fn check<F>(mut store: ParamStore, f: F)
where
    F: Fn(&mut Tape) -> Var,
{
    let grads = {
        let mut tape = Tape::new(&store);
        let root = f(&mut tape);
        tape.backward(root)
    };
    let ids: Vec<ParamId> = store.ids().collect();
    for id in ids {
        let numeric = numeric_gradient(&mut store, id, 1e-5, |s| {
            let mut t = Tape::new(s);
            let r = f(&mut t);
            t.scalar(r)
        });
        let analytic = grads.get(id).cloned().unwrap_or_else(|| Matrix::zeros(numeric.dim()));
        let err = relative_error(&analytic, &numeric);
        assert!(err < 1e-6, "{}: relative error {err}", store.name(id));
    }
}

fn store(shapes: &[(&str, (usize, usize))]) -> ParamStore {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut s = ParamStore::new();
    for (n, shape) in shapes {
        s.add_uniform(*n, *shape, 1.0, &mut rng);
    }
    s
}

/// Reduces any node to a scalar with a fixed, non-symmetric weighting.
fn reduce(t: &mut Tape, x: Var) -> Var {
    let (r, c) = t.shape(x);
    let w = Matrix::from_shape_fn((c, 1), |(i, _)| 0.3 + 0.7 * i as f64);
    let w = t.constant(w);
    let y = t.matmul(x, w);
    let ones = t.constant(Matrix::from_shape_fn((1, r), |(_, j)| 1.0 + 0.1 * j as f64));
    t.matmul(ones, y)
}

#[test]
fn matmul_add_row_and_elementwise() {
    let s = store(&[("a", (3, 4)), ("b", (4, 2)), ("bias", (1, 2)), ("c", (3, 2))]);
    check(s, |t| {
        let p = t.params();
        let (a, b, bias, c) = (
            t.param(p.id("a").unwrap()),
            t.param(p.id("b").unwrap()),
            t.param(p.id("bias").unwrap()),
            t.param(p.id("c").unwrap()),
        );
        let y = t.linear(a, b, bias);
        let y = t.mul(y, c);
        let y = t.tanh(y);
        let z = t.sigmoid(c);
        let y = t.add(y, z);
        let y = t.affine(y, -1.5, 0.2);
        let g = t.gelu(y);
        let y = t.sum(&[g, y]);
        reduce(t, y)
    });
}

#[test]
fn layer_norm_softmax_transpose() {
    let s = store(&[("x", (3, 5)), ("g", (1, 5)), ("b", (1, 5)), ("w", (5, 3))]);
    check(s, |t| {
        let p = t.params();
        let (x, g, b, w) = (
            t.param(p.id("x").unwrap()),
            t.param(p.id("g").unwrap()),
            t.param(p.id("b").unwrap()),
            t.param(p.id("w").unwrap()),
        );
        let y = t.layer_norm(x, g, b, 1e-12);
        let xt = t.transpose(y);
        let scores = t.matmul(y, xt);
        let probs = t.softmax_rows(scores);
        let z = t.matmul(probs, y);
        let z = t.matmul(z, w);
        reduce(t, z)
    });
}

#[test]
fn gather_mean_concat_slice() {
    let s = store(&[("emb", (6, 3)), ("w", (3, 3))]);
    check(s, |t| {
        let p = t.params();
        let (emb, w) = (t.param(p.id("emb").unwrap()), t.param(p.id("w").unwrap()));
        let x = t.gather(emb, &[1, 4, 1, 5]);
        let h = t.matmul(x, w);
        let m = t.mean_rows(h, &[0, 2, 3]);
        let first = t.slice_rows(h, 1, 2);
        let cols = t.slice_cols(first, 1, 2);
        let cat = t.concat_cols(&[cols, first]);
        let stacked = t.concat_rows(&[cat, cat]);
        let a = reduce(t, stacked);
        let b = reduce(t, m);
        let y = t.add(a, b);
        let q = t.sum_squares(w);
        t.add(y, q)
    });
}

#[test]
fn unfold_relu_maxpool() {
    let s = store(&[("x", (5, 2)), ("k", (6, 3))]);
    check(s, |t| {
        let p = t.params();
        let (x, k) = (t.param(p.id("x").unwrap()), t.param(p.id("k").unwrap()));
        let u = t.unfold(x, 3);
        let c = t.matmul(u, k);
        let c = t.relu(c);
        let m = t.max_rows(c);
        reduce(t, m)
    });
}

#[test]
fn pick_and_clamped_log() {
    let mut s = ParamStore::new();
    s.add("x", Matrix::from_shape_vec((1, 3), vec![0.3, -0.2, 0.9]).unwrap());
    check(s, |t| {
        let x = t.param(t.params().id("x").unwrap());
        let p = t.softmax_rows(x);
        let a = t.pick(p, 0, 2);
        let la = t.ln_clamp(a, 1e-12, 1.0 - 1e-12);
        let b = t.pick(p, 0, 1);
        let one_minus = t.affine(b, -1.0, 1.0);
        let lb = t.ln_clamp(one_minus, 1e-12, 1.0 - 1e-12);
        let lb = t.scale(lb, 5.0);
        t.sum(&[la, lb])
    });
}

#[test]
fn clamped_region_has_zero_gradient() {
    let mut s = ParamStore::new();
    let id = s.add("x", Matrix::from_elem((1, 1), 1e-20));
    let mut t = Tape::new(&s);
    let x = t.param(id);
    let y = t.ln_clamp(x, 1e-12, 1.0 - 1e-12);
    assert!((t.scalar(y) - (1e-12f64).ln()).abs() < 1e-12);
    let g = t.backward(y);
    assert_eq!(g.get(id).unwrap()[[0, 0]], 0.0);
}

#[test]
fn dropout_scales_survivors() {
    let s = ParamStore::new();
    let mut t = Tape::new(&s);
    let x = t.constant(Matrix::ones((50, 40)));
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let y = t.dropout(x, 0.1, &mut rng);
    let v = t.value(y);
    assert!(v.iter().all(|&e| e == 0.0 || (e - 1.0 / 0.9).abs() < 1e-12));
    let kept = v.iter().filter(|&&e| e > 0.0).count() as f64 / 2000.0;
    assert!((kept - 0.9).abs() < 0.03, "{kept}");
    let same = t.dropout(x, 0.0, &mut rng);
    assert_eq!(same, x);
}

#[test]
fn softmax_is_normalized_and_stable() {
    let x = Matrix::from_shape_vec((2, 3), vec![1000.0, 1001.0, 999.0, -5.0, 0.0, 5.0]).unwrap();
    let p = softmax_rows(&x);
    for row in p.rows() {
        assert!((row.sum() - 1.0).abs() < 1e-12);
        assert!(row.iter().all(|v| v.is_finite() && *v > 0.0));
    }
}
