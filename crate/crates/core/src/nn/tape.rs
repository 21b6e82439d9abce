//! Reverse-mode differentiation over coarse matrix operations.
//!
//! A [`Tape`] records one forward evaluation. Parameter leaves borrow their
//! values from a [`ParamStore`]; [`Tape::backward`] returns gradients aligned
//! with that store.

use std::sync::Arc;

use super::attention::{attention_backward, attention_forward};
use super::params::{Gradients, ParamId, ParamStore};
use crate::scalar::Scalar;
use crate::tensor::{matmul_a_bt_acc, matmul_at_b_acc, CsrMatrix, Tensor};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Var(usize);

enum Op<T> {
    Input,
    Param(ParamId),
    MatMul(Var, Var),
    Add(Var, Var),
    AddRow(Var, Var),
    MulMask(Var, Vec<T>),
    Relu(Var),
    LayerNorm {
        x: Var,
        gamma: Var,
        beta: Var,
        xhat: Vec<T>,
        inv_std: Vec<T>,
    },
    Attention {
        q: Var,
        k: Var,
        v: Var,
        heads: usize,
        mask: Vec<bool>,
        weights: Vec<T>,
    },
    ConcatCols(Vec<Var>),
    StackRows(Vec<Var>),
    SpMM(Arc<CsrMatrix<T>>, Var),
    MaxRows {
        x: Var,
        argmax: Vec<usize>,
    },
    PadFlatten {
        x: Var,
        total_rows: usize,
    },
    CrossEntropy {
        logits: Var,
        target: usize,
        probs: Vec<T>,
    },
    AbsError {
        pred: Var,
        target: T,
    },
}

struct Node<T> {
    value: Option<Tensor<T>>,
    op: Op<T>,
}

pub struct Tape<'p, T> {
    params: &'p ParamStore<T>,
    nodes: Vec<Node<T>>,
}

impl<'p, T: Scalar> Tape<'p, T> {
    pub fn new(params: &'p ParamStore<T>) -> Self {
        Tape {
            params,
            nodes: Vec::with_capacity(256),
        }
    }

    fn push(&mut self, value: Tensor<T>, op: Op<T>) -> Var {
        self.nodes.push(Node {
            value: Some(value),
            op,
        });
        Var(self.nodes.len() - 1)
    }

    pub fn value(&self, v: Var) -> &Tensor<T> {
        let node = &self.nodes[v.0];
        match (&node.value, &node.op) {
            (Some(t), _) => t,
            (None, Op::Param(id)) => self.params.get(*id),
            _ => unreachable!("node without value"),
        }
    }

    pub fn input(&mut self, value: Tensor<T>) -> Var {
        self.push(value, Op::Input)
    }

    pub fn param(&mut self, id: ParamId) -> Var {
        self.nodes.push(Node {
            value: None,
            op: Op::Param(id),
        });
        Var(self.nodes.len() - 1)
    }

    pub fn matmul(&mut self, a: Var, b: Var) -> Var {
        let out = self.value(a).matmul(self.value(b));
        self.push(out, Op::MatMul(a, b))
    }

    pub fn add(&mut self, a: Var, b: Var) -> Var {
        let (x, y) = (self.value(a), self.value(b));
        assert_eq!(x.shape(), y.shape(), "add shape mismatch");
        let data = x
            .data()
            .iter()
            .zip(y.data())
            .map(|(&p, &q)| p + q)
            .collect();
        let out = Tensor::from_vec(x.shape(), data);
        self.push(out, Op::Add(a, b))
    }

    /// `a[m×n] + b[1×n]` broadcast over rows.
    pub fn add_row(&mut self, a: Var, b: Var) -> Var {
        let (x, bias) = (self.value(a), self.value(b));
        assert_eq!(bias.len(), x.cols(), "bias width mismatch");
        let mut out = x.clone();
        for r in 0..out.rows() {
            for (o, &bv) in out.row_mut(r).iter_mut().zip(bias.data()) {
                *o = *o + bv;
            }
        }
        self.push(out, Op::AddRow(a, b))
    }

    /// `x W + b`
    pub fn linear(&mut self, x: Var, w: ParamId, b: ParamId) -> Var {
        let w = self.param(w);
        let b = self.param(b);
        let xw = self.matmul(x, w);
        self.add_row(xw, b)
    }

    /// Element-wise product with a constant mask (dropout).
    pub fn mul_mask(&mut self, a: Var, mask: Vec<T>) -> Var {
        let x = self.value(a);
        assert_eq!(mask.len(), x.len());
        let data = x.data().iter().zip(&mask).map(|(&p, &m)| p * m).collect();
        let out = Tensor::from_vec(x.shape(), data);
        self.push(out, Op::MulMask(a, mask))
    }

    pub fn relu(&mut self, a: Var) -> Var {
        let out = self
            .value(a)
            .map(|x| if x > T::zero() { x } else { T::zero() });
        self.push(out, Op::Relu(a))
    }

    /// Row-wise layer normalization with learned scale and shift.
    pub fn layer_norm(&mut self, x: Var, gamma: ParamId, beta: ParamId, eps: T) -> Var {
        let g = self.param(gamma);
        let b = self.param(beta);
        let input = self.value(x);
        let (rows, n) = (input.rows(), input.cols());
        let nf = T::from_usize_lossy(n);
        let mut xhat = vec![T::zero(); rows * n];
        let mut inv_std = vec![T::zero(); rows];
        let mut out = Tensor::zeros(&[rows, n]);
        let (gv, bv) = (self.value(g).data(), self.value(b).data());
        for r in 0..rows {
            let row = input.row(r);
            let mean = row.iter().copied().sum::<T>() / nf;
            let var = row.iter().map(|&v| (v - mean) * (v - mean)).sum::<T>() / nf;
            let is = (var + eps).sqrt().recip();
            inv_std[r] = is;
            for c in 0..n {
                let h = (row[c] - mean) * is;
                xhat[r * n + c] = h;
                out.set(r, c, h * gv[c] + bv[c]);
            }
        }
        self.push(
            out,
            Op::LayerNorm {
                x,
                gamma: g,
                beta: b,
                xhat,
                inv_std,
            },
        )
    }

    /// Multi-head scaled dot-product attention over projected `q`, `k`, `v`.
    pub fn attention(&mut self, q: Var, k: Var, v: Var, heads: usize, mask: Vec<bool>) -> Var {
        let (qv, kv, vv) = (self.value(q), self.value(k), self.value(v));
        let (len, d) = (qv.rows(), qv.cols());
        assert_eq!(mask.len(), len);
        let (out, weights) =
            attention_forward(qv.data(), kv.data(), vv.data(), len, d, heads, &mask);
        self.push(
            Tensor::matrix(len, d, out),
            Op::Attention {
                q,
                k,
                v,
                heads,
                mask,
                weights,
            },
        )
    }

    /// Post-softmax weights recorded by an attention node, `heads × len × len`.
    pub fn attention_weights(&self, v: Var) -> Option<(&[T], usize)> {
        match &self.nodes[v.0].op {
            Op::Attention { weights, heads, .. } => Some((weights, *heads)),
            _ => None,
        }
    }

    pub fn concat_cols(&mut self, parts: Vec<Var>) -> Var {
        let rows = self.value(parts[0]).rows();
        let widths: Vec<usize> = parts.iter().map(|&p| self.value(p).cols()).collect();
        let total: usize = widths.iter().sum();
        let mut out = Tensor::zeros(&[rows, total]);
        for r in 0..rows {
            let mut off = 0;
            for (&p, &w) in parts.iter().zip(&widths) {
                let src = self.value(p);
                assert_eq!(src.rows(), rows, "concat row mismatch");
                out.row_mut(r)[off..off + w].copy_from_slice(src.row(r));
                off += w;
            }
        }
        self.push(out, Op::ConcatCols(parts))
    }

    /// Stacks `1×n` rows into an `m×n` matrix.
    pub fn stack_rows(&mut self, rows: Vec<Var>) -> Var {
        let n = self.value(rows[0]).len();
        let mut data = Vec::with_capacity(rows.len() * n);
        for &r in &rows {
            let v = self.value(r);
            assert_eq!(v.len(), n);
            data.extend_from_slice(v.data());
        }
        let out = Tensor::matrix(rows.len(), n, data);
        self.push(out, Op::StackRows(rows))
    }

    /// Constant sparse matrix times `x`.
    pub fn spmm(&mut self, a: Arc<CsrMatrix<T>>, x: Var) -> Var {
        let out = a.mul_dense(self.value(x));
        self.push(out, Op::SpMM(a, x))
    }

    /// Column-wise maximum over rows, giving a `1×n` row.
    pub fn max_rows(&mut self, x: Var) -> Var {
        let v = self.value(x);
        let (rows, n) = (v.rows(), v.cols());
        let mut argmax = vec![0usize; n];
        let mut out = Tensor::zeros(&[1, n]);
        for c in 0..n {
            let mut best = 0;
            for r in 1..rows {
                if v.at(r, c) > v.at(best, c) {
                    best = r;
                }
            }
            argmax[c] = best;
            out.set(0, c, v.at(best, c));
        }
        self.push(out, Op::MaxRows { x, argmax })
    }

    /// Places `x` (`len×n`) at the bottom of a zero `total_rows×n` frame and
    /// flattens it row-major to `1×(total_rows·n)`.
    pub fn pad_flatten(&mut self, x: Var, total_rows: usize) -> Var {
        let v = self.value(x);
        let (len, n) = (v.rows(), v.cols());
        assert!(len <= total_rows);
        let mut data = vec![T::zero(); total_rows * n];
        data[(total_rows - len) * n..].copy_from_slice(v.data());
        let out = Tensor::matrix(1, total_rows * n, data);
        self.push(out, Op::PadFlatten { x, total_rows })
    }

    /// Negative log-likelihood of `target` under `softmax(logits)`.
    pub fn cross_entropy(&mut self, logits: Var, target: usize) -> Var {
        let probs = softmax(self.value(logits).data());
        let loss = -probs[target].max(T::min_positive_value()).ln();
        self.push(
            Tensor::matrix(1, 1, vec![loss]),
            Op::CrossEntropy {
                logits,
                target,
                probs,
            },
        )
    }

    pub fn abs_error(&mut self, pred: Var, target: T) -> Var {
        let p = self.value(pred);
        assert_eq!(p.len(), 1);
        let loss = (p.data()[0] - target).abs();
        self.push(
            Tensor::matrix(1, 1, vec![loss]),
            Op::AbsError { pred, target },
        )
    }

    /// Back-propagates from a `1×1` node.
    pub fn backward(&self, loss: Var) -> Gradients<T> {
        let mut grads: Vec<Option<Tensor<T>>> = (0..=loss.0).map(|_| None).collect();
        grads[loss.0] = Some(Tensor::matrix(1, 1, vec![T::one()]));
        let mut out = Gradients::zeros_like(self.params);

        for i in (0..=loss.0).rev() {
            let Some(g) = grads[i].take() else { continue };
            match &self.nodes[i].op {
                Op::Input => {}
                Op::Param(id) => {
                    let dst = out.grads[id.0].data_mut();
                    for (d, &s) in dst.iter_mut().zip(g.data()) {
                        *d = *d + s;
                    }
                }
                Op::MatMul(a, b) => {
                    let (av, bv) = (self.value(*a), self.value(*b));
                    let (m, k, n) = (av.rows(), av.cols(), bv.cols());
                    let mut da = vec![T::zero(); m * k];
                    matmul_a_bt_acc(g.data(), bv.data(), &mut da, m, n, k);
                    let mut db = vec![T::zero(); k * n];
                    matmul_at_b_acc(av.data(), g.data(), &mut db, m, k, n);
                    accumulate(&mut grads, *a, Tensor::matrix(m, k, da));
                    accumulate(&mut grads, *b, Tensor::matrix(k, n, db));
                }
                Op::Add(a, b) => {
                    accumulate(&mut grads, *a, g.clone());
                    accumulate(&mut grads, *b, g);
                }
                Op::AddRow(a, b) => {
                    let n = g.cols();
                    let mut db = vec![T::zero(); n];
                    for r in 0..g.rows() {
                        for (d, &s) in db.iter_mut().zip(g.row(r)) {
                            *d = *d + s;
                        }
                    }
                    let bshape = self.value(*b).shape().to_vec();
                    accumulate(&mut grads, *b, Tensor::from_vec(&bshape, db));
                    accumulate(&mut grads, *a, g);
                }
                Op::MulMask(a, mask) => {
                    let data = g.data().iter().zip(mask).map(|(&s, &m)| s * m).collect();
                    accumulate(&mut grads, *a, Tensor::from_vec(g.shape(), data));
                }
                Op::Relu(a) => {
                    let y = self.nodes[i].value.as_ref().expect("relu output");
                    let data = g
                        .data()
                        .iter()
                        .zip(y.data())
                        .map(|(&s, &o)| if o > T::zero() { s } else { T::zero() })
                        .collect();
                    accumulate(&mut grads, *a, Tensor::from_vec(g.shape(), data));
                }
                Op::LayerNorm {
                    x,
                    gamma,
                    beta,
                    xhat,
                    inv_std,
                } => {
                    let (rows, n) = (g.rows(), g.cols());
                    let nf = T::from_usize_lossy(n);
                    let gv = self.value(*gamma).data();
                    let mut dgamma = vec![T::zero(); n];
                    let mut dbeta = vec![T::zero(); n];
                    let mut dx = vec![T::zero(); rows * n];
                    let mut dxhat = vec![T::zero(); n];
                    for r in 0..rows {
                        let gr = g.row(r);
                        let hr = &xhat[r * n..(r + 1) * n];
                        let (mut s1, mut s2) = (T::zero(), T::zero());
                        for c in 0..n {
                            dgamma[c] = dgamma[c] + gr[c] * hr[c];
                            dbeta[c] = dbeta[c] + gr[c];
                            dxhat[c] = gr[c] * gv[c];
                            s1 = s1 + dxhat[c];
                            s2 = s2 + dxhat[c] * hr[c];
                        }
                        let scale = inv_std[r] / nf;
                        for c in 0..n {
                            dx[r * n + c] = scale * (nf * dxhat[c] - s1 - hr[c] * s2);
                        }
                    }
                    let gshape = self.value(*gamma).shape().to_vec();
                    accumulate(&mut grads, *gamma, Tensor::from_vec(&gshape, dgamma));
                    accumulate(&mut grads, *beta, Tensor::from_vec(&gshape, dbeta));
                    accumulate(&mut grads, *x, Tensor::matrix(rows, n, dx));
                }
                Op::Attention {
                    q,
                    k,
                    v,
                    heads,
                    mask,
                    weights,
                } => {
                    let (qv, kv, vv) = (self.value(*q), self.value(*k), self.value(*v));
                    let (len, d) = (qv.rows(), qv.cols());
                    let (dq, dk, dv) = attention_backward(
                        qv.data(),
                        kv.data(),
                        vv.data(),
                        weights,
                        g.data(),
                        len,
                        d,
                        *heads,
                        mask,
                    );
                    accumulate(&mut grads, *q, Tensor::matrix(len, d, dq));
                    accumulate(&mut grads, *k, Tensor::matrix(len, d, dk));
                    accumulate(&mut grads, *v, Tensor::matrix(len, d, dv));
                }
                Op::ConcatCols(parts) => {
                    let rows = g.rows();
                    let mut off = 0;
                    for &p in parts {
                        let w = self.value(p).cols();
                        let mut d = Vec::with_capacity(rows * w);
                        for r in 0..rows {
                            d.extend_from_slice(&g.row(r)[off..off + w]);
                        }
                        accumulate(&mut grads, p, Tensor::matrix(rows, w, d));
                        off += w;
                    }
                }
                Op::StackRows(rows) => {
                    for (r, &p) in rows.iter().enumerate() {
                        let shape = self.value(p).shape().to_vec();
                        accumulate(&mut grads, p, Tensor::from_vec(&shape, g.row(r).to_vec()));
                    }
                }
                Op::SpMM(a, x) => {
                    accumulate(&mut grads, *x, a.mul_transpose_dense(&g));
                }
                Op::MaxRows { x, argmax } => {
                    let v = self.value(*x);
                    let mut d = Tensor::zeros(v.shape());
                    for (c, &r) in argmax.iter().enumerate() {
                        d.set(r, c, g.data()[c]);
                    }
                    accumulate(&mut grads, *x, d);
                }
                Op::PadFlatten { x, total_rows } => {
                    let v = self.value(*x);
                    let (len, n) = (v.rows(), v.cols());
                    let d = g.data()[(total_rows - len) * n..].to_vec();
                    accumulate(&mut grads, *x, Tensor::matrix(len, n, d));
                }
                Op::CrossEntropy {
                    logits,
                    target,
                    probs,
                } => {
                    let s = g.data()[0];
                    let d = probs
                        .iter()
                        .enumerate()
                        .map(|(c, &p)| s * (p - if c == *target { T::one() } else { T::zero() }))
                        .collect();
                    let shape = self.value(*logits).shape().to_vec();
                    accumulate(&mut grads, *logits, Tensor::from_vec(&shape, d));
                }
                Op::AbsError { pred, target } => {
                    let r = self.value(*pred).data()[0] - *target;
                    let sign = if r > T::zero() {
                        T::one()
                    } else if r < T::zero() {
                        -T::one()
                    } else {
                        T::zero()
                    };
                    let shape = self.value(*pred).shape().to_vec();
                    accumulate(
                        &mut grads,
                        *pred,
                        Tensor::from_vec(&shape, vec![sign * g.data()[0]]),
                    );
                }
            }
        }
        out
    }
}

fn accumulate<T: Scalar>(grads: &mut [Option<Tensor<T>>], v: Var, g: Tensor<T>) {
    match &mut grads[v.0] {
        Some(existing) => {
            for (e, &s) in existing.data_mut().iter_mut().zip(g.data()) {
                *e = *e + s;
            }
        }
        slot @ None => *slot = Some(g),
    }
}

pub fn softmax<T: Scalar>(x: &[T]) -> Vec<T> {
    let max = x.iter().copied().fold(T::neg_infinity(), T::max);
    let e: Vec<T> = x.iter().map(|&v| (v - max).exp()).collect();
    let z: T = e.iter().copied().sum();
    e.into_iter().map(|v| v / z).collect()
}
