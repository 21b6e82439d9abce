//! Scaled dot-product multi-head attention with key masking.

use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::tensor::Tensor;

/// Forward pass over `len` rows of width `d` split into `heads` heads.
/// Returns the concatenated head outputs (`len × d`) and the post-softmax
/// weights (`heads × len × len`). Masked keys get weight exactly zero and
/// masked query rows produce zero weights and zero output.
pub(crate) fn attention_forward<T: Scalar>(
    q: &[T],
    k: &[T],
    v: &[T],
    len: usize,
    d: usize,
    heads: usize,
    mask: &[bool],
) -> (Vec<T>, Vec<T>) {
    let dh = d / heads;
    let scale = T::from_usize_lossy(dh).sqrt().recip();
    let mut out = vec![T::zero(); len * d];
    let mut weights = vec![T::zero(); heads * len * len];
    let mut scores = vec![T::zero(); len];
    for h in 0..heads {
        let off = h * dh;
        for i in 0..len {
            if !mask[i] {
                continue;
            }
            let qi = &q[i * d + off..i * d + off + dh];
            let mut max = T::neg_infinity();
            for m in 0..len {
                if !mask[m] {
                    continue;
                }
                let km = &k[m * d + off..m * d + off + dh];
                let mut s = T::zero();
                for c in 0..dh {
                    s = s + qi[c] * km[c];
                }
                s = s * scale;
                scores[m] = s;
                if s > max {
                    max = s;
                }
            }
            let row = &mut weights[(h * len + i) * len..(h * len + i + 1) * len];
            let mut z = T::zero();
            for m in 0..len {
                if mask[m] {
                    let e = (scores[m] - max).exp();
                    row[m] = e;
                    z = z + e;
                }
            }
            for m in 0..len {
                if mask[m] {
                    row[m] = row[m] / z;
                }
            }
            let oi = &mut out[i * d + off..i * d + off + dh];
            for m in 0..len {
                if !mask[m] {
                    continue;
                }
                let p = row[m];
                let vm = &v[m * d + off..m * d + off + dh];
                for c in 0..dh {
                    oi[c] = oi[c] + p * vm[c];
                }
            }
        }
    }
    (out, weights)
}

/// Gradients with respect to `q`, `k`, `v` given the upstream gradient of
/// the concatenated output.
#[allow(clippy::too_many_arguments)]
pub(crate) fn attention_backward<T: Scalar>(
    q: &[T],
    k: &[T],
    v: &[T],
    weights: &[T],
    dout: &[T],
    len: usize,
    d: usize,
    heads: usize,
    mask: &[bool],
) -> (Vec<T>, Vec<T>, Vec<T>) {
    let dh = d / heads;
    let scale = T::from_usize_lossy(dh).sqrt().recip();
    let mut dq = vec![T::zero(); len * d];
    let mut dk = vec![T::zero(); len * d];
    let mut dv = vec![T::zero(); len * d];
    let mut dp = vec![T::zero(); len];
    for h in 0..heads {
        let off = h * dh;
        for i in 0..len {
            if !mask[i] {
                continue;
            }
            let row = &weights[(h * len + i) * len..(h * len + i + 1) * len];
            let doi = &dout[i * d + off..i * d + off + dh];
            let mut dot = T::zero();
            for m in 0..len {
                if !mask[m] {
                    continue;
                }
                let vm = &v[m * d + off..m * d + off + dh];
                let mut s = T::zero();
                for c in 0..dh {
                    s = s + doi[c] * vm[c];
                }
                dp[m] = s;
                dot = dot + s * row[m];
                let dvm = &mut dv[m * d + off..m * d + off + dh];
                for c in 0..dh {
                    dvm[c] = dvm[c] + row[m] * doi[c];
                }
            }
            for m in 0..len {
                if !mask[m] {
                    continue;
                }
                let ds = row[m] * (dp[m] - dot) * scale;
                if ds == T::zero() {
                    continue;
                }
                for c in 0..dh {
                    dq[i * d + off + c] = dq[i * d + off + c] + ds * k[m * d + off + c];
                    dk[m * d + off + c] = dk[m * d + off + c] + ds * q[i * d + off + c];
                }
            }
        }
    }
    (dq, dk, dv)
}

/// Projection weights of one attention block.
#[derive(Debug, Clone, PartialEq)]
pub struct AttentionParams<T> {
    pub wq: Tensor<T>,
    pub bq: Tensor<T>,
    pub wk: Tensor<T>,
    pub bk: Tensor<T>,
    pub wv: Tensor<T>,
    pub bv: Tensor<T>,
    pub wo: Tensor<T>,
    pub bo: Tensor<T>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AttentionOutput<T> {
    /// `len × d`; rows at masked positions are zero.
    pub output: Tensor<T>,
    /// One `len × len` post-softmax matrix per head.
    pub weights: Vec<Tensor<T>>,
}

fn project<T: Scalar>(x: &Tensor<T>, w: &Tensor<T>, b: &Tensor<T>) -> Tensor<T> {
    let mut y = x.matmul(w);
    for r in 0..y.rows() {
        for (o, &bv) in y.row_mut(r).iter_mut().zip(b.data()) {
            *o = *o + bv;
        }
    }
    y
}

/// Multi-head self-attention over `x` (`len × d`) with `mask[i] == false`
/// marking padded rows.
pub fn multi_head_self_attention<T: Scalar>(
    x: &Tensor<T>,
    mask: &[bool],
    params: &AttentionParams<T>,
    heads: usize,
) -> Result<AttentionOutput<T>> {
    let (len, d) = (x.rows(), x.cols());
    if heads == 0 || d % heads != 0 {
        return Err(Error::Config(format!(
            "width {d} not divisible by {heads} heads"
        )));
    }
    if mask.len() != len {
        return Err(Error::Config("mask length differs from row count".into()));
    }
    if !x.is_finite() {
        return Err(Error::Numeric("non-finite attention input".into()));
    }
    let q = project(x, &params.wq, &params.bq);
    let k = project(x, &params.wk, &params.bk);
    let v = project(x, &params.wv, &params.bv);
    let (concat, w) = attention_forward(q.data(), k.data(), v.data(), len, d, heads, mask);
    let mut output = project(&Tensor::matrix(len, d, concat), &params.wo, &params.bo);
    for (r, &keep) in mask.iter().enumerate() {
        if !keep {
            output.row_mut(r).iter_mut().for_each(|x| *x = T::zero());
        }
    }
    let weights = w
        .chunks_exact(len * len)
        .map(|c| Tensor::matrix(len, len, c.to_vec()))
        .collect();
    Ok(AttentionOutput { output, weights })
}
