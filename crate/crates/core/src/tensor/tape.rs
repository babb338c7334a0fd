//! Reverse-mode differentiation over 2-D `f64` matrices.
//!
//! A [`Tape`] records every operation of a forward pass; [`Tape::backward`]
//! walks it in reverse and returns gradients for the parameters that were
//! read through [`Tape::param`].

use ndarray::{s, Axis};
use rand::Rng;

use super::params::{Gradients, Matrix, ParamId, ParamStore};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Var(usize);

enum Value {
    Owned(Matrix),
    Param(ParamId),
}

enum Op {
    Leaf,
    MatMul(Var, Var),
    Add(Var, Var),
    AddRow(Var, Var),
    Mul(Var, Var),
    Affine(Var, f64),
    Tanh(Var),
    Sigmoid(Var),
    Relu(Var),
    Gelu(Var),
    LayerNorm {
        x: Var,
        gamma: Var,
        beta: Var,
        xhat: Matrix,
        inv_std: Vec<f64>,
    },
    SoftmaxRows(Var),
    Transpose(Var),
    Gather {
        x: Var,
        rows: Vec<usize>,
    },
    MeanRows {
        x: Var,
        rows: Vec<usize>,
    },
    ConcatCols(Vec<Var>),
    ConcatRows(Vec<Var>),
    SliceCols {
        x: Var,
        start: usize,
    },
    SliceRows {
        x: Var,
        start: usize,
    },
    MaxRows {
        x: Var,
        argmax: Vec<usize>,
    },
    Unfold {
        x: Var,
        window: usize,
    },
    Pick {
        x: Var,
        row: usize,
        col: usize,
    },
    LnClamp {
        x: Var,
        lo: f64,
        hi: f64,
    },
    SumSquares(Var),
    Sum(Vec<Var>),
}

struct Node {
    value: Value,
    op: Op,
}

pub struct Tape<'p> {
    params: &'p ParamStore,
    nodes: Vec<Node>,
}

fn gelu(x: f64) -> f64 {
    0.5 * x * (1.0 + libm::erf(x / std::f64::consts::SQRT_2))
}

fn gelu_grad(x: f64) -> f64 {
    let cdf = 0.5 * (1.0 + libm::erf(x / std::f64::consts::SQRT_2));
    let pdf = (-0.5 * x * x).exp() / (2.0 * std::f64::consts::PI).sqrt();
    cdf + x * pdf
}

fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

/// Row-wise softmax with max subtraction.
pub fn softmax_rows(x: &Matrix) -> Matrix {
    let mut out = x.clone();
    for mut row in out.rows_mut() {
        let max = row.fold(f64::NEG_INFINITY, |a, &b| a.max(b));
        row.mapv_inplace(|v| (v - max).exp());
        let sum = row.sum();
        row /= sum;
    }
    out
}

impl<'p> Tape<'p> {
    pub fn new(params: &'p ParamStore) -> Self {
        Tape {
            params,
            nodes: Vec::new(),
        }
    }

    pub fn params(&self) -> &'p ParamStore {
        self.params
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    fn push(&mut self, value: Matrix, op: Op) -> Var {
        self.nodes.push(Node {
            value: Value::Owned(value),
            op,
        });
        Var(self.nodes.len() - 1)
    }

    pub fn value(&self, v: Var) -> &Matrix {
        match &self.nodes[v.0].value {
            Value::Owned(m) => m,
            Value::Param(id) => self.params.get(*id),
        }
    }

    /// The single entry of a `1 x 1` node.
    pub fn scalar(&self, v: Var) -> f64 {
        let m = self.value(v);
        debug_assert_eq!(m.dim(), (1, 1));
        m[[0, 0]]
    }

    pub fn shape(&self, v: Var) -> (usize, usize) {
        self.value(v).dim()
    }

    pub fn constant(&mut self, value: Matrix) -> Var {
        self.push(value, Op::Leaf)
    }

    pub fn param(&mut self, id: ParamId) -> Var {
        self.nodes.push(Node {
            value: Value::Param(id),
            op: Op::Leaf,
        });
        Var(self.nodes.len() - 1)
    }

    pub fn matmul(&mut self, a: Var, b: Var) -> Var {
        let out = self.value(a).dot(self.value(b));
        self.push(out, Op::MatMul(a, b))
    }

    pub fn add(&mut self, a: Var, b: Var) -> Var {
        let out = self.value(a) + self.value(b);
        self.push(out, Op::Add(a, b))
    }

    /// Adds a `1 x n` row to every row of `a`.
    pub fn add_row(&mut self, a: Var, row: Var) -> Var {
        let r = self.value(row);
        debug_assert_eq!(r.nrows(), 1);
        let out = self.value(a) + &r.row(0);
        self.push(out, Op::AddRow(a, row))
    }

    /// `x @ w + b` with `b` a `1 x n` row.
    pub fn linear(&mut self, x: Var, w: Var, b: Var) -> Var {
        let y = self.matmul(x, w);
        self.add_row(y, b)
    }

    pub fn mul(&mut self, a: Var, b: Var) -> Var {
        let out = self.value(a) * self.value(b);
        self.push(out, Op::Mul(a, b))
    }

    /// `scale * x + shift`, elementwise.
    pub fn affine(&mut self, x: Var, scale: f64, shift: f64) -> Var {
        let out = self.value(x).mapv(|v| scale * v + shift);
        self.push(out, Op::Affine(x, scale))
    }

    pub fn scale(&mut self, x: Var, scale: f64) -> Var {
        self.affine(x, scale, 0.0)
    }

    pub fn tanh(&mut self, x: Var) -> Var {
        let out = self.value(x).mapv(f64::tanh);
        self.push(out, Op::Tanh(x))
    }

    pub fn sigmoid(&mut self, x: Var) -> Var {
        let out = self.value(x).mapv(sigmoid);
        self.push(out, Op::Sigmoid(x))
    }

    pub fn relu(&mut self, x: Var) -> Var {
        let out = self.value(x).mapv(|v| v.max(0.0));
        self.push(out, Op::Relu(x))
    }

    /// Exact (erf) GELU.
    pub fn gelu(&mut self, x: Var) -> Var {
        let out = self.value(x).mapv(gelu);
        self.push(out, Op::Gelu(x))
    }

    /// Row-wise layer normalization with `1 x d` gain and bias.
    pub fn layer_norm(&mut self, x: Var, gamma: Var, beta: Var, eps: f64) -> Var {
        let xv = self.value(x);
        let d = xv.ncols() as f64;
        let mut xhat = xv.clone();
        let mut inv_std = Vec::with_capacity(xv.nrows());
        for mut row in xhat.rows_mut() {
            let mean = row.sum() / d;
            let var = row.fold(0.0, |a, &v| a + (v - mean) * (v - mean)) / d;
            let inv = 1.0 / (var + eps).sqrt();
            row.mapv_inplace(|v| (v - mean) * inv);
            inv_std.push(inv);
        }
        let out = &xhat * &self.value(gamma).row(0) + self.value(beta).row(0);
        self.push(
            out,
            Op::LayerNorm {
                x,
                gamma,
                beta,
                xhat,
                inv_std,
            },
        )
    }

    pub fn softmax_rows(&mut self, x: Var) -> Var {
        let out = softmax_rows(self.value(x));
        self.push(out, Op::SoftmaxRows(x))
    }

    pub fn transpose(&mut self, x: Var) -> Var {
        let out = self.value(x).t().to_owned();
        self.push(out, Op::Transpose(x))
    }

    /// Rows of `x` selected by index (embedding lookup).
    pub fn gather(&mut self, x: Var, rows: &[usize]) -> Var {
        let out = self.value(x).select(Axis(0), rows);
        self.push(
            out,
            Op::Gather {
                x,
                rows: rows.to_vec(),
            },
        )
    }

    /// Mean of the selected rows, as `1 x d`. `rows` must be non-empty.
    pub fn mean_rows(&mut self, x: Var, rows: &[usize]) -> Var {
        assert!(!rows.is_empty(), "mean over an empty row set");
        let xv = self.value(x);
        let mut acc = ndarray::Array1::<f64>::zeros(xv.ncols());
        for &r in rows {
            acc += &xv.row(r);
        }
        acc /= rows.len() as f64;
        let out = acc.insert_axis(Axis(0));
        self.push(
            out,
            Op::MeanRows {
                x,
                rows: rows.to_vec(),
            },
        )
    }

    pub fn concat_cols(&mut self, parts: &[Var]) -> Var {
        let views: Vec<_> = parts.iter().map(|&p| self.value(p).view()).collect();
        let out = ndarray::concatenate(Axis(1), &views).expect("row counts differ");
        self.push(out, Op::ConcatCols(parts.to_vec()))
    }

    pub fn concat_rows(&mut self, parts: &[Var]) -> Var {
        let views: Vec<_> = parts.iter().map(|&p| self.value(p).view()).collect();
        let out = ndarray::concatenate(Axis(0), &views).expect("column counts differ");
        self.push(out, Op::ConcatRows(parts.to_vec()))
    }

    pub fn slice_cols(&mut self, x: Var, start: usize, len: usize) -> Var {
        let out = self.value(x).slice(s![.., start..start + len]).to_owned();
        self.push(out, Op::SliceCols { x, start })
    }

    pub fn slice_rows(&mut self, x: Var, start: usize, len: usize) -> Var {
        let out = self.value(x).slice(s![start..start + len, ..]).to_owned();
        self.push(out, Op::SliceRows { x, start })
    }

    /// Column-wise max over rows (max-over-time pooling), as `1 x d`.
    pub fn max_rows(&mut self, x: Var) -> Var {
        let xv = self.value(x);
        let mut argmax = Vec::with_capacity(xv.ncols());
        let mut out = Matrix::zeros((1, xv.ncols()));
        for (c, col) in xv.columns().into_iter().enumerate() {
            let (best, val) = col
                .iter()
                .enumerate()
                .fold((0, f64::NEG_INFINITY), |(bi, bv), (i, &v)| {
                    if v > bv {
                        (i, v)
                    } else {
                        (bi, bv)
                    }
                });
            argmax.push(best);
            out[[0, c]] = val;
        }
        self.push(out, Op::MaxRows { x, argmax })
    }

    /// Sliding windows of `window` consecutive rows, each flattened into one
    /// row: `(T - window + 1) x (window * d)`.
    pub fn unfold(&mut self, x: Var, window: usize) -> Var {
        let xv = self.value(x);
        let (t, d) = xv.dim();
        assert!(t >= window, "unfold window longer than input");
        let mut out = Matrix::zeros((t - window + 1, window * d));
        for r in 0..=t - window {
            for k in 0..window {
                out.slice_mut(s![r, k * d..(k + 1) * d]).assign(&xv.row(r + k));
            }
        }
        self.push(out, Op::Unfold { x, window })
    }

    pub fn pick(&mut self, x: Var, row: usize, col: usize) -> Var {
        let out = Matrix::from_elem((1, 1), self.value(x)[[row, col]]);
        self.push(out, Op::Pick { x, row, col })
    }

    /// `ln(clamp(x, lo, hi))`, elementwise; the gradient is zero where clamped.
    pub fn ln_clamp(&mut self, x: Var, lo: f64, hi: f64) -> Var {
        let out = self.value(x).mapv(|v| v.clamp(lo, hi).ln());
        self.push(out, Op::LnClamp { x, lo, hi })
    }

    /// Sum of squared entries, as `1 x 1`.
    pub fn sum_squares(&mut self, x: Var) -> Var {
        let s = self.value(x).iter().map(|v| v * v).sum::<f64>();
        self.push(Matrix::from_elem((1, 1), s), Op::SumSquares(x))
    }

    /// Elementwise sum of equally shaped nodes.
    pub fn sum(&mut self, parts: &[Var]) -> Var {
        assert!(!parts.is_empty());
        let mut out = self.value(parts[0]).clone();
        for &p in &parts[1..] {
            out += self.value(p);
        }
        self.push(out, Op::Sum(parts.to_vec()))
    }

    /// Inverted dropout: zeroes entries with probability `rate` and scales
    /// survivors by `1 / (1 - rate)`.
    pub fn dropout<R: Rng>(&mut self, x: Var, rate: f64, rng: &mut R) -> Var {
        if rate <= 0.0 {
            return x;
        }
        let keep = 1.0 - rate;
        let mask = Matrix::from_shape_fn(self.shape(x), |_| {
            if rng.gen::<f64>() < keep {
                1.0 / keep
            } else {
                0.0
            }
        });
        let m = self.constant(mask);
        self.mul(x, m)
    }

    /// Gradients of the `1 x 1` node `root` with respect to every parameter
    /// read on this tape.
    pub fn backward(&self, root: Var) -> Gradients {
        assert_eq!(self.shape(root), (1, 1), "backward needs a scalar root");
        let mut grads: Vec<Option<Matrix>> = Vec::with_capacity(root.0 + 1);
        grads.resize_with(root.0 + 1, || None);
        grads[root.0] = Some(Matrix::ones((1, 1)));
        let mut out = Gradients::new(self.params.len());

        fn acc(grads: &mut [Option<Matrix>], v: Var, g: Matrix) {
            match &mut grads[v.0] {
                Some(a) => *a += &g,
                slot => *slot = Some(g),
            }
        }

        for i in (0..=root.0).rev() {
            let Some(g) = grads[i].take() else { continue };
            let node = &self.nodes[i];
            match &node.op {
                Op::Leaf => {
                    if let Value::Param(id) = node.value {
                        out.accumulate(id, &g, self.params.get(id).dim());
                    }
                }
                Op::MatMul(a, b) => {
                    let ga = g.dot(&self.value(*b).t());
                    let gb = self.value(*a).t().dot(&g);
                    acc(&mut grads, *a, ga);
                    acc(&mut grads, *b, gb);
                }
                Op::Add(a, b) => {
                    acc(&mut grads, *b, g.clone());
                    acc(&mut grads, *a, g);
                }
                Op::AddRow(a, row) => {
                    let gr = g.sum_axis(Axis(0)).insert_axis(Axis(0));
                    acc(&mut grads, *row, gr);
                    acc(&mut grads, *a, g);
                }
                Op::Mul(a, b) => {
                    let ga = &g * self.value(*b);
                    let gb = &g * self.value(*a);
                    acc(&mut grads, *a, ga);
                    acc(&mut grads, *b, gb);
                }
                Op::Affine(x, scale) => {
                    acc(&mut grads, *x, g * *scale);
                }
                Op::Tanh(x) => {
                    let y = self.value(Var(i));
                    let gx = ndarray::Zip::from(&g).and(y).map_collect(|&g, &y| g * (1.0 - y * y));
                    acc(&mut grads, *x, gx);
                }
                Op::Sigmoid(x) => {
                    let y = self.value(Var(i));
                    let gx = ndarray::Zip::from(&g).and(y).map_collect(|&g, &y| g * y * (1.0 - y));
                    acc(&mut grads, *x, gx);
                }
                Op::Relu(x) => {
                    let xv = self.value(*x);
                    let gx = ndarray::Zip::from(&g)
                        .and(xv)
                        .map_collect(|&g, &x| if x > 0.0 { g } else { 0.0 });
                    acc(&mut grads, *x, gx);
                }
                Op::Gelu(x) => {
                    let xv = self.value(*x);
                    let gx = ndarray::Zip::from(&g).and(xv).map_collect(|&g, &x| g * gelu_grad(x));
                    acc(&mut grads, *x, gx);
                }
                Op::LayerNorm {
                    x,
                    gamma,
                    beta,
                    xhat,
                    inv_std,
                } => {
                    let gam = self.value(*gamma).row(0).to_owned();
                    let d = xhat.ncols() as f64;
                    let mut gx = Matrix::zeros(xhat.dim());
                    for r in 0..xhat.nrows() {
                        let dxhat = &g.row(r) * &gam;
                        let xh = xhat.row(r);
                        let s1 = dxhat.sum();
                        let s2 = (&dxhat * &xh).sum();
                        let row = (&dxhat * d - s1 - &(&xh * s2)) * (inv_std[r] / d);
                        gx.row_mut(r).assign(&row);
                    }
                    let ggamma = (&g * xhat).sum_axis(Axis(0)).insert_axis(Axis(0));
                    let gbeta = g.sum_axis(Axis(0)).insert_axis(Axis(0));
                    acc(&mut grads, *gamma, ggamma);
                    acc(&mut grads, *beta, gbeta);
                    acc(&mut grads, *x, gx);
                }
                Op::SoftmaxRows(x) => {
                    let y = self.value(Var(i));
                    let mut gx = &g * y;
                    for (mut row, yr) in gx.rows_mut().into_iter().zip(y.rows()) {
                        let s = row.sum();
                        row.zip_mut_with(&yr, |v, &y| *v -= s * y);
                    }
                    acc(&mut grads, *x, gx);
                }
                Op::Transpose(x) => {
                    acc(&mut grads, *x, g.t().to_owned());
                }
                Op::Gather { x, rows } => {
                    let shape = self.shape(*x);
                    let scatter = |target: &mut Matrix| {
                        for (k, &r) in rows.iter().enumerate() {
                            let mut dst = target.row_mut(r);
                            dst += &g.row(k);
                        }
                    };
                    match self.nodes[x.0] {
                        Node {
                            value: Value::Param(id),
                            op: Op::Leaf,
                        } => scatter(out.slot_mut(id, shape)),
                        _ => {
                            let mut gx = Matrix::zeros(shape);
                            scatter(&mut gx);
                            acc(&mut grads, *x, gx);
                        }
                    }
                }
                Op::MeanRows { x, rows } => {
                    let mut gx = Matrix::zeros(self.shape(*x));
                    let share = &g.row(0) / rows.len() as f64;
                    for &r in rows {
                        let mut dst = gx.row_mut(r);
                        dst += &share;
                    }
                    acc(&mut grads, *x, gx);
                }
                Op::ConcatCols(parts) => {
                    let mut c = 0;
                    for &p in parts {
                        let w = self.shape(p).1;
                        acc(&mut grads, p, g.slice(s![.., c..c + w]).to_owned());
                        c += w;
                    }
                }
                Op::ConcatRows(parts) => {
                    let mut r = 0;
                    for &p in parts {
                        let h = self.shape(p).0;
                        acc(&mut grads, p, g.slice(s![r..r + h, ..]).to_owned());
                        r += h;
                    }
                }
                Op::SliceCols { x, start } => {
                    let mut gx = Matrix::zeros(self.shape(*x));
                    gx.slice_mut(s![.., *start..*start + g.ncols()]).assign(&g);
                    acc(&mut grads, *x, gx);
                }
                Op::SliceRows { x, start } => {
                    let mut gx = Matrix::zeros(self.shape(*x));
                    gx.slice_mut(s![*start..*start + g.nrows(), ..]).assign(&g);
                    acc(&mut grads, *x, gx);
                }
                Op::MaxRows { x, argmax } => {
                    let mut gx = Matrix::zeros(self.shape(*x));
                    for (c, &r) in argmax.iter().enumerate() {
                        gx[[r, c]] += g[[0, c]];
                    }
                    acc(&mut grads, *x, gx);
                }
                Op::Unfold { x, window } => {
                    let (t, d) = self.shape(*x);
                    let mut gx = Matrix::zeros((t, d));
                    for r in 0..g.nrows() {
                        for k in 0..*window {
                            let mut dst = gx.row_mut(r + k);
                            dst += &g.slice(s![r, k * d..(k + 1) * d]);
                        }
                    }
                    acc(&mut grads, *x, gx);
                }
                Op::Pick { x, row, col } => {
                    let mut gx = Matrix::zeros(self.shape(*x));
                    gx[[*row, *col]] = g[[0, 0]];
                    acc(&mut grads, *x, gx);
                }
                Op::LnClamp { x, lo, hi } => {
                    let xv = self.value(*x);
                    let gx = ndarray::Zip::from(&g).and(xv).map_collect(|&g, &v| {
                        if v > *lo && v < *hi {
                            g / v
                        } else {
                            0.0
                        }
                    });
                    acc(&mut grads, *x, gx);
                }
                Op::SumSquares(x) => {
                    let gx = self.value(*x) * (2.0 * g[[0, 0]]);
                    acc(&mut grads, *x, gx);
                }
                Op::Sum(parts) => {
                    for &p in parts {
                        acc(&mut grads, p, g.clone());
                    }
                }
            }
        }
        out
    }
}
