//! Transformer-encoder career model with an optional trainable GCN branch.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::gcn::{gcn_tape, GcnIds, GraphInput};
use super::params::{ParamId, ParamStore};
use super::tape::{softmax, Tape, Var};
use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::tensor::Tensor;

/// Width of one input row.
pub const FEATURE_DIM: usize = 36;
/// Columns holding the scholarly-circle vector.
pub const CN_RANGE: std::ops::Range<usize> = 12..24;

const LN_EPS: f64 = 1e-5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HeadType {
    Classification,
    Regression,
}

/// `Frozen`: the cn columns of the input are used as given.
/// `Trained`: the cn columns are recomputed from per-year graphs by the
/// model's own GCN weights, so gradients reach them.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GcnMode {
    Frozen,
    Trained,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PositionalEncoding {
    Sinusoidal,
    None,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ModelConfig {
    pub d_model: usize,
    pub n_layers: usize,
    pub n_heads: usize,
    pub ffn_dim: usize,
    pub dropout: f64,
    pub t_max: usize,
    pub head: HeadType,
    pub gcn_hidden: usize,
    pub gcn_mode: GcnMode,
    pub positional: PositionalEncoding,
    pub seed: u64,
}

impl Default for ModelConfig {
    fn default() -> Self {
        Self::classification()
    }
}

impl ModelConfig {
    pub fn classification() -> Self {
        ModelConfig {
            d_model: FEATURE_DIM,
            n_layers: 8,
            n_heads: 36,
            ffn_dim: 64,
            dropout: 0.1,
            t_max: 50,
            head: HeadType::Classification,
            gcn_hidden: 16,
            gcn_mode: GcnMode::Frozen,
            positional: PositionalEncoding::Sinusoidal,
            seed: 42,
        }
    }

    pub fn regression() -> Self {
        ModelConfig {
            n_heads: 6,
            head: HeadType::Regression,
            ..Self::classification()
        }
    }

    pub fn for_head(head: HeadType) -> Self {
        match head {
            HeadType::Classification => Self::classification(),
            HeadType::Regression => Self::regression(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.d_model != FEATURE_DIM {
            return Err(Error::Config(format!(
                "d_model must be {FEATURE_DIM}, got {}",
                self.d_model
            )));
        }
        for (name, v) in [
            ("n_layers", self.n_layers),
            ("n_heads", self.n_heads),
            ("ffn_dim", self.ffn_dim),
            ("t_max", self.t_max),
            ("gcn_hidden", self.gcn_hidden),
        ] {
            if v == 0 {
                return Err(Error::Config(format!("{name} must be positive")));
            }
        }
        if !self.d_model.is_multiple_of(self.n_heads) {
            return Err(Error::Config(format!(
                "d_model {} not divisible by n_heads {}",
                self.d_model, self.n_heads
            )));
        }
        if !(0.0..1.0).contains(&self.dropout) {
            return Err(Error::Config(format!(
                "dropout {} outside [0, 1)",
                self.dropout
            )));
        }
        Ok(())
    }

    pub fn output_dim(&self) -> usize {
        match self.head {
            HeadType::Classification => 2,
            HeadType::Regression => 1,
        }
    }
}

/// Borrowed model input: a `t_max × 36` left-padded matrix, its mask, and
/// for trained-GCN models one graph per real row (oldest first).
#[derive(Debug, Clone, Copy)]
pub struct ExampleView<'a, T> {
    pub matrix: &'a Tensor<T>,
    pub mask: &'a [bool],
    pub graphs: Option<&'a [GraphInput<T>]>,
}

impl<'a, T: Scalar> ExampleView<'a, T> {
    pub fn new(matrix: &'a Tensor<T>, mask: &'a [bool]) -> Self {
        ExampleView {
            matrix,
            mask,
            graphs: None,
        }
    }

    pub fn with_graphs(mut self, graphs: &'a [GraphInput<T>]) -> Self {
        self.graphs = Some(graphs);
        self
    }
}

#[derive(Debug, Clone, Copy)]
struct LayerIds {
    wq: ParamId,
    bq: ParamId,
    wk: ParamId,
    bk: ParamId,
    wv: ParamId,
    bv: ParamId,
    wo: ParamId,
    bo: ParamId,
    ln1_g: ParamId,
    ln1_b: ParamId,
    w1: ParamId,
    b1: ParamId,
    w2: ParamId,
    b2: ParamId,
    ln2_g: ParamId,
    ln2_b: ParamId,
}

impl LayerIds {
    fn register<T: Scalar>(
        store: &mut ParamStore<T>,
        i: usize,
        d: usize,
        ffn: usize,
        rng: &mut impl Rng,
    ) -> Self {
        let p = |s: &str| format!("layer{i}.{s}");
        LayerIds {
            wq: store.add_glorot(&p("wq"), d, d, rng),
            bq: store.add_constant(&p("bq"), 1, d, 0.0),
            wk: store.add_glorot(&p("wk"), d, d, rng),
            bk: store.add_constant(&p("bk"), 1, d, 0.0),
            wv: store.add_glorot(&p("wv"), d, d, rng),
            bv: store.add_constant(&p("bv"), 1, d, 0.0),
            wo: store.add_glorot(&p("wo"), d, d, rng),
            bo: store.add_constant(&p("bo"), 1, d, 0.0),
            ln1_g: store.add_constant(&p("ln1.g"), 1, d, 1.0),
            ln1_b: store.add_constant(&p("ln1.b"), 1, d, 0.0),
            w1: store.add_glorot(&p("ffn.w1"), d, ffn, rng),
            b1: store.add_constant(&p("ffn.b1"), 1, ffn, 0.0),
            w2: store.add_glorot(&p("ffn.w2"), ffn, d, rng),
            b2: store.add_constant(&p("ffn.b2"), 1, d, 0.0),
            ln2_g: store.add_constant(&p("ln2.g"), 1, d, 1.0),
            ln2_b: store.add_constant(&p("ln2.b"), 1, d, 0.0),
        }
    }

    fn lookup<T: Scalar>(store: &ParamStore<T>, i: usize) -> Result<Self> {
        let g = |s: &str| store.id(&format!("layer{i}.{s}"));
        Ok(LayerIds {
            wq: g("wq")?,
            bq: g("bq")?,
            wk: g("wk")?,
            bk: g("bk")?,
            wv: g("wv")?,
            bv: g("bv")?,
            wo: g("wo")?,
            bo: g("bo")?,
            ln1_g: g("ln1.g")?,
            ln1_b: g("ln1.b")?,
            w1: g("ffn.w1")?,
            b1: g("ffn.b1")?,
            w2: g("ffn.w2")?,
            b2: g("ffn.b2")?,
            ln2_g: g("ln2.g")?,
            ln2_b: g("ln2.b")?,
        })
    }
}

/// Encoder stack, flatten, and a dense head.
#[derive(Debug, Clone)]
pub struct CareerModel<T> {
    config: ModelConfig,
    params: ParamStore<T>,
    gcn: GcnIds,
    layers: Vec<LayerIds>,
    head_w: ParamId,
    head_b: ParamId,
    positional: Option<Tensor<T>>,
}

/// Values recorded while running one example forward on a tape.
pub(crate) struct ForwardTrace {
    pub output: Var,
    pub attention: Vec<Var>,
    pub real_rows: usize,
}

/// Sinusoidal table of `rows × d`.
pub fn sinusoidal_table<T: Scalar>(rows: usize, d: usize) -> Tensor<T> {
    Tensor::from_fn(rows, d, |pos, i| {
        let rate = 10000f64.powf((2 * (i / 2)) as f64 / d as f64);
        let angle = pos as f64 / rate;
        T::lit(if i % 2 == 0 { angle.sin() } else { angle.cos() })
    })
}

impl<T: Scalar> CareerModel<T> {
    /// Fresh Glorot-initialized model seeded from `config.seed`.
    pub fn new(config: ModelConfig) -> Result<Self> {
        config.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        let mut store = ParamStore::new();
        let gcn = GcnIds::register(&mut store, config.gcn_hidden, &mut rng);
        let layers = (0..config.n_layers)
            .map(|i| LayerIds::register(&mut store, i, config.d_model, config.ffn_dim, &mut rng))
            .collect();
        let flat = config.t_max * config.d_model;
        let head_w = store.add_glorot("head.w", flat, config.output_dim(), &mut rng);
        let head_b = store.add_constant("head.b", 1, config.output_dim(), 0.0);
        Ok(Self::assemble(config, store, gcn, layers, head_w, head_b))
    }

    /// Rebinds a model to an existing parameter store (e.g. a checkpoint).
    pub fn from_params(config: ModelConfig, store: ParamStore<T>) -> Result<Self> {
        config.validate()?;
        let gcn = GcnIds::lookup(&store)?;
        let layers = (0..config.n_layers)
            .map(|i| LayerIds::lookup(&store, i))
            .collect::<Result<Vec<_>>>()?;
        let head_w = store.id("head.w")?;
        let head_b = store.id("head.b")?;
        let expected = [config.t_max * config.d_model, config.output_dim()];
        if store.get(head_w).shape() != expected {
            return Err(Error::Config(format!(
                "head.w has shape {:?}, config implies {expected:?}",
                store.get(head_w).shape()
            )));
        }
        Ok(Self::assemble(config, store, gcn, layers, head_w, head_b))
    }

    fn assemble(
        config: ModelConfig,
        params: ParamStore<T>,
        gcn: GcnIds,
        layers: Vec<LayerIds>,
        head_w: ParamId,
        head_b: ParamId,
    ) -> Self {
        let positional = match config.positional {
            PositionalEncoding::Sinusoidal => Some(sinusoidal_table(config.t_max, config.d_model)),
            PositionalEncoding::None => None,
        };
        CareerModel {
            config,
            params,
            gcn,
            layers,
            head_w,
            head_b,
            positional,
        }
    }

    pub fn config(&self) -> &ModelConfig {
        &self.config
    }

    pub fn params(&self) -> &ParamStore<T> {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut ParamStore<T> {
        &mut self.params
    }

    pub fn gcn_ids(&self) -> GcnIds {
        self.gcn
    }

    /// Checks shapes and returns the number of real (unpadded) rows.
    fn real_rows(&self, ex: &ExampleView<'_, T>) -> Result<usize> {
        let (t_max, d) = (self.config.t_max, self.config.d_model);
        if ex.matrix.shape() != [t_max, d] {
            return Err(Error::Config(format!(
                "example matrix {:?}, model expects [{t_max}, {d}]",
                ex.matrix.shape()
            )));
        }
        if ex.mask.len() != t_max {
            return Err(Error::Config(format!(
                "mask length {} != t_max {t_max}",
                ex.mask.len()
            )));
        }
        let len = ex.mask.iter().filter(|&&m| m).count();
        if len == 0 {
            return Err(Error::Config("example has no real rows".into()));
        }
        if ex.mask[t_max - len..].iter().any(|&m| !m) {
            return Err(Error::Config(
                "real rows must be contiguous at the end".into(),
            ));
        }
        if self.config.gcn_mode == GcnMode::Trained {
            match ex.graphs {
                Some(g) if g.len() == len => {}
                Some(g) => {
                    return Err(Error::Config(format!(
                        "{} graphs for {len} real rows",
                        g.len()
                    )));
                }
                None => {
                    return Err(Error::Config(
                        "trained GCN mode needs per-year graphs".into(),
                    ))
                }
            }
        }
        Ok(len)
    }

    /// Records the forward pass. `dropout_rng = None` disables dropout.
    pub(crate) fn forward_tape<'p>(
        &'p self,
        tape: &mut Tape<'p, T>,
        ex: &ExampleView<'_, T>,
        mut dropout_rng: Option<&mut ChaCha8Rng>,
    ) -> Result<ForwardTrace> {
        let len = self.real_rows(ex)?;
        let (t_max, d) = (self.config.t_max, self.config.d_model);
        let offset = t_max - len;
        let real = Tensor::matrix(len, d, ex.matrix.data()[offset * d..].to_vec());
        if !real.is_finite() {
            return Err(Error::Numeric("non-finite model input".into()));
        }

        let mut x = match (self.config.gcn_mode, ex.graphs) {
            (GcnMode::Trained, Some(graphs)) => {
                let left = tape.input(Tensor::from_fn(len, CN_RANGE.start, |r, c| real.at(r, c)));
                let right = tape.input(Tensor::from_fn(len, d - CN_RANGE.end, |r, c| {
                    real.at(r, CN_RANGE.end + c)
                }));
                let rows: Vec<Var> = graphs.iter().map(|g| gcn_tape(tape, g, self.gcn)).collect();
                let cn = tape.stack_rows(rows);
                tape.concat_cols(vec![left, cn, right])
            }
            _ => tape.input(real),
        };
        if let Some(pe) = &self.positional {
            let rows = Tensor::matrix(len, d, pe.data()[offset * d..].to_vec());
            let pe = tape.input(rows);
            x = tape.add(x, pe);
        }

        let keep = T::one() - T::lit(self.config.dropout);
        let mut dropout = |tape: &mut Tape<'p, T>, v: Var| -> Var {
            match dropout_rng.as_deref_mut() {
                Some(rng) if self.config.dropout > 0.0 => {
                    let n = tape.value(v).len();
                    let mask = (0..n)
                        .map(|_| {
                            if rng.random::<f64>() < self.config.dropout {
                                T::zero()
                            } else {
                                keep.recip()
                            }
                        })
                        .collect();
                    tape.mul_mask(v, mask)
                }
                _ => v,
            }
        };

        let eps = T::lit(LN_EPS);
        let all = vec![true; len];
        let mut attention = Vec::with_capacity(self.layers.len());
        for l in &self.layers {
            let q = tape.linear(x, l.wq, l.bq);
            let k = tape.linear(x, l.wk, l.bk);
            let v = tape.linear(x, l.wv, l.bv);
            let a = tape.attention(q, k, v, self.config.n_heads, all.clone());
            attention.push(a);
            let o = tape.linear(a, l.wo, l.bo);
            let o = dropout(tape, o);
            let r = tape.add(x, o);
            x = tape.layer_norm(r, l.ln1_g, l.ln1_b, eps);
            let f = tape.linear(x, l.w1, l.b1);
            let f = tape.relu(f);
            let f = tape.linear(f, l.w2, l.b2);
            let f = dropout(tape, f);
            let r = tape.add(x, f);
            x = tape.layer_norm(r, l.ln2_g, l.ln2_b, eps);
        }
        let flat = tape.pad_flatten(x, t_max);
        let output = tape.linear(flat, self.head_w, self.head_b);
        Ok(ForwardTrace {
            output,
            attention,
            real_rows: len,
        })
    }

    /// Raw head output: two logits or one regression value.
    pub fn forward(&self, ex: &ExampleView<'_, T>) -> Result<Vec<T>> {
        let mut tape = Tape::new(&self.params);
        let trace = self.forward_tape(&mut tape, ex, None)?;
        let out = tape.value(trace.output).data().to_vec();
        if out.iter().any(|v| !v.is_finite()) {
            return Err(Error::Numeric("non-finite model output".into()));
        }
        Ok(out)
    }

    /// Class probabilities `[P(non-Fellow), P(Fellow)]`.
    pub fn predict_proba(&self, ex: &ExampleView<'_, T>) -> Result<[T; 2]> {
        if self.config.head != HeadType::Classification {
            return Err(Error::Config("predict_proba on a regression model".into()));
        }
        let p = softmax(&self.forward(ex)?);
        Ok([p[0], p[1]])
    }

    /// Class label (classification) or remaining years (regression).
    pub fn predict(&self, ex: &ExampleView<'_, T>) -> Result<T> {
        let out = self.forward(ex)?;
        Ok(match self.config.head {
            HeadType::Classification => {
                if out[1] > out[0] {
                    T::one()
                } else {
                    T::zero()
                }
            }
            HeadType::Regression => out[0],
        })
    }

    /// Post-softmax weights of one head as a `t_max × t_max` matrix in input
    /// positions; rows and columns of padded positions are zero.
    pub fn attention_weights(
        &self,
        ex: &ExampleView<'_, T>,
        layer: usize,
        head: usize,
    ) -> Result<Tensor<T>> {
        if layer >= self.config.n_layers {
            return Err(Error::Index(format!(
                "layer {layer} of {}",
                self.config.n_layers
            )));
        }
        if head >= self.config.n_heads {
            return Err(Error::Index(format!(
                "head {head} of {}",
                self.config.n_heads
            )));
        }
        let all = self.all_attention_weights(ex, layer)?;
        Ok(all.into_iter().nth(head).expect("head in range"))
    }

    /// Every head's `t_max × t_max` weights for one layer.
    pub fn all_attention_weights(
        &self,
        ex: &ExampleView<'_, T>,
        layer: usize,
    ) -> Result<Vec<Tensor<T>>> {
        if layer >= self.config.n_layers {
            return Err(Error::Index(format!(
                "layer {layer} of {}",
                self.config.n_layers
            )));
        }
        let mut tape = Tape::new(&self.params);
        let trace = self.forward_tape(&mut tape, ex, None)?;
        let (w, heads) = tape
            .attention_weights(trace.attention[layer])
            .expect("attention node");
        let (t_max, len) = (self.config.t_max, trace.real_rows);
        let off = t_max - len;
        Ok((0..heads)
            .map(|h| {
                let mut m = Tensor::zeros(&[t_max, t_max]);
                for i in 0..len {
                    for j in 0..len {
                        m.set(off + i, off + j, w[(h * len + i) * len + j]);
                    }
                }
                m
            })
            .collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::attention::{multi_head_self_attention, AttentionParams};

    fn tiny(head: HeadType) -> ModelConfig {
        ModelConfig {
            n_layers: 2,
            n_heads: 2,
            ffn_dim: 5,
            dropout: 0.0,
            t_max: 3,
            head,
            gcn_hidden: 4,
            ..ModelConfig::classification()
        }
    }

    fn input(t_max: usize, len: usize, seed: u64) -> (Tensor<f64>, Vec<bool>) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let m = Tensor::from_fn(t_max, FEATURE_DIM, |r, _| {
            if r >= t_max - len {
                rng.random_range(-1.0..1.0)
            } else {
                0.0
            }
        });
        let mask = (0..t_max).map(|r| r >= t_max - len).collect();
        (m, mask)
    }

    fn layer_norm(x: &Tensor<f64>, g: &Tensor<f64>, b: &Tensor<f64>) -> Tensor<f64> {
        Tensor::from_fn(x.rows(), x.cols(), |r, c| {
            let row = x.row(r);
            let n = row.len() as f64;
            let mean = row.iter().sum::<f64>() / n;
            let var = row.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
            (row[c] - mean) / (var + 1e-5).sqrt() * g.data()[c] + b.data()[c]
        })
    }

    fn affine(x: &Tensor<f64>, w: &Tensor<f64>, b: &Tensor<f64>) -> Tensor<f64> {
        let y = x.matmul(w);
        Tensor::from_fn(y.rows(), y.cols(), |r, c| y.at(r, c) + b.data()[c])
    }

    /// Straight-line evaluation of the same architecture.
    fn reference(model: &CareerModel<f64>, m: &Tensor<f64>, mask: &[bool]) -> Vec<f64> {
        let cfg = model.config();
        let p = model.params();
        let get = |n: &str| p.get(p.id(n).unwrap()).clone();
        let len = mask.iter().filter(|&&b| b).count();
        let off = cfg.t_max - len;
        let pe = sinusoidal_table::<f64>(cfg.t_max, 36);
        let mut x = Tensor::from_fn(len, 36, |r, c| m.at(off + r, c) + pe.at(off + r, c));
        for i in 0..cfg.n_layers {
            let n = |s: &str| get(&format!("layer{i}.{s}"));
            let ap = AttentionParams {
                wq: n("wq"),
                bq: n("bq"),
                wk: n("wk"),
                bk: n("bk"),
                wv: n("wv"),
                bv: n("bv"),
                wo: n("wo"),
                bo: n("bo"),
            };
            let a = multi_head_self_attention(&x, &vec![true; len], &ap, cfg.n_heads).unwrap();
            let r = Tensor::from_fn(len, 36, |r, c| x.at(r, c) + a.output.at(r, c));
            x = layer_norm(&r, &n("ln1.g"), &n("ln1.b"));
            let f = affine(&x, &n("ffn.w1"), &n("ffn.b1")).map(|v| v.max(0.0));
            let f = affine(&f, &n("ffn.w2"), &n("ffn.b2"));
            let r = Tensor::from_fn(len, 36, |r, c| x.at(r, c) + f.at(r, c));
            x = layer_norm(&r, &n("ln2.g"), &n("ln2.b"));
        }
        let mut flat = vec![0.0; cfg.t_max * 36];
        flat[off * 36..].copy_from_slice(x.data());
        affine(
            &Tensor::matrix(1, flat.len(), flat),
            &get("head.w"),
            &get("head.b"),
        )
        .data()
        .to_vec()
    }

    #[test]
    fn forward_matches_reference() {
        for head in [HeadType::Classification, HeadType::Regression] {
            let model = CareerModel::<f64>::new(tiny(head)).unwrap();
            for len in 1..=3 {
                let (m, mask) = input(3, len, len as u64);
                let got = model.forward(&ExampleView::new(&m, &mask)).unwrap();
                let want = reference(&model, &m, &mask);
                for (g, w) in got.iter().zip(&want) {
                    assert!((g - w).abs() < 1e-9, "{g} vs {w}");
                }
            }
        }
    }

    #[test]
    fn zero_head_gives_even_odds() {
        let mut model = CareerModel::<f64>::new(tiny(HeadType::Classification)).unwrap();
        let id = model.params().id("head.w").unwrap();
        model.params_mut().get_mut(id).data_mut().fill(0.0);
        let (m, mask) = input(3, 2, 5);
        let p = model.predict_proba(&ExampleView::new(&m, &mask)).unwrap();
        assert_eq!(p, [0.5, 0.5]);
    }

    #[test]
    fn padded_content_is_ignored() {
        let model = CareerModel::<f64>::new(tiny(HeadType::Classification)).unwrap();
        let (m, mask) = input(3, 1, 2);
        let mut noisy = m.clone();
        for c in 0..36 {
            noisy.set(0, c, 1e3 + c as f64);
            noisy.set(1, c, -7.0);
        }
        let a = model.forward(&ExampleView::new(&m, &mask)).unwrap();
        let b = model.forward(&ExampleView::new(&noisy, &mask)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn attention_rows_normalized_and_padding_zero() {
        let model = CareerModel::<f64>::new(tiny(HeadType::Regression)).unwrap();
        let (m, mask) = input(3, 2, 8);
        let ex = ExampleView::new(&m, &mask);
        for layer in 0..2 {
            for head in 0..2 {
                let w = model.attention_weights(&ex, layer, head).unwrap();
                assert!((0..3).all(|i| w.at(i, 0) == 0.0 && w.at(0, i) == 0.0));
                for r in 1..3 {
                    assert!((w.row(r).iter().sum::<f64>() - 1.0).abs() < 1e-12);
                }
            }
        }
        assert!(matches!(
            model.attention_weights(&ex, 2, 0),
            Err(Error::Index(_))
        ));
        assert!(matches!(
            model.attention_weights(&ex, 0, 2),
            Err(Error::Index(_))
        ));
    }

    #[test]
    fn shape_errors() {
        let model = CareerModel::<f64>::new(tiny(HeadType::Regression)).unwrap();
        let (m, _) = input(3, 3, 1);
        assert!(matches!(
            model.forward(&ExampleView::new(&m, &[true, false, true])),
            Err(Error::Config(_))
        ));
        let (wrong, mask) = input(4, 2, 1);
        assert!(matches!(
            model.forward(&ExampleView::new(&wrong, &mask)),
            Err(Error::Config(_))
        ));
        assert!(ModelConfig {
            n_heads: 5,
            ..ModelConfig::regression()
        }
        .validate()
        .is_err());
    }

    #[test]
    fn deterministic_init() {
        let a = CareerModel::<f64>::new(tiny(HeadType::Classification)).unwrap();
        let b = CareerModel::<f64>::new(tiny(HeadType::Classification)).unwrap();
        assert_eq!(a.params(), b.params());
        let (m, mask) = input(3, 3, 4);
        let ex = ExampleView::new(&m, &mask);
        assert_eq!(a.forward(&ex).unwrap(), b.forward(&ex).unwrap());
    }

    #[test]
    fn trained_gcn_requires_graphs() {
        let cfg = ModelConfig {
            gcn_mode: GcnMode::Trained,
            ..tiny(HeadType::Regression)
        };
        let model = CareerModel::<f64>::new(cfg).unwrap();
        let (m, mask) = input(3, 2, 1);
        assert!(model.forward(&ExampleView::new(&m, &mask)).is_err());
        let graphs = vec![GraphInput::empty(), GraphInput::empty()];
        let out = model
            .forward(&ExampleView::new(&m, &mask).with_graphs(&graphs))
            .unwrap();
        assert_eq!(out.len(), 1);
    }
}
