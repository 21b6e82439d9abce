//! Finite-difference verification of the reverse-mode gradients.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::gcn::{gcn_tape, GcnIds, GraphInput};
use super::model::{CareerModel, ExampleView, GcnMode, HeadType, ModelConfig};
use super::params::{Gradients, ParamId, ParamStore};
use super::tape::{Tape, Var};
use super::train::{example_gradient, Sample};
use crate::error::Result;
use crate::graph::{CoauthorGraph, NodeLabel};
use crate::tensor::Tensor;

/// Central-difference step.
pub const STEP: f64 = 1e-5;

fn relative_error(analytic: f64, numeric: f64) -> f64 {
    let scale = analytic.abs().max(numeric.abs());
    if scale < 1e-7 {
        (analytic - numeric).abs()
    } else {
        (analytic - numeric).abs() / scale
    }
}

/// Probes `n_probes` scalar parameters, cycling through the tensors so each
/// one is visited, and returns the largest relative error.
fn probe(
    store: &mut ParamStore<f64>,
    n_probes: usize,
    rng: &mut ChaCha8Rng,
    mut eval: impl FnMut(&ParamStore<f64>) -> Result<(f64, Gradients<f64>)>,
) -> Result<f64> {
    let (_, grads) = eval(store)?;
    let mut worst = 0.0f64;
    for p in 0..n_probes {
        let id = ParamId(p % store.len());
        let idx = rng.random_range(0..store.get(id).len());
        let analytic = grads.get(id).data()[idx];
        let orig = store.get(id).data()[idx];
        store.get_mut(id).data_mut()[idx] = orig + STEP;
        let (plus, _) = eval(store)?;
        store.get_mut(id).data_mut()[idx] = orig - STEP;
        let (minus, _) = eval(store)?;
        store.get_mut(id).data_mut()[idx] = orig;
        let numeric = (plus - minus) / (2.0 * STEP);
        worst = worst.max(relative_error(analytic, numeric));
    }
    Ok(worst)
}

/// Random projection of a node's value to a scalar, so every output entry
/// contributes to the checked loss.
fn project_to_scalar(tape: &mut Tape<'_, f64>, v: Var, weights: &Tensor<f64>) -> Var {
    let rows = tape.value(v).rows();
    let flat = tape.pad_flatten(v, rows);
    let w = tape.input(weights.clone());
    tape.matmul(flat, w)
}

fn random_tensor(rows: usize, cols: usize, rng: &mut ChaCha8Rng) -> Tensor<f64> {
    Tensor::from_fn(rows, cols, |_, _| rng.random_range(-1.0..1.0))
}

/// A connected random graph over `n` nodes with mixed labels.
pub fn random_graph(n: usize, rng: &mut ChaCha8Rng) -> CoauthorGraph {
    let nodes = (0..n)
        .map(|i| {
            let label = if i == 0 {
                NodeLabel::Candidate
            } else if rng.random_bool(0.4) {
                NodeLabel::Fellow
            } else {
                NodeLabel::NonFellow
            };
            (format!("n{i:02}"), label)
        })
        .collect();
    let name = |i: usize| format!("n{i:02}");
    let mut seen = std::collections::BTreeSet::new();
    let mut edges = Vec::new();
    for i in 1..n {
        let j = rng.random_range(0..i);
        seen.insert((j, i));
        edges.push((name(i), name(j), rng.random_range(1..4)));
    }
    for _ in 0..n {
        let (a, b) = (rng.random_range(0..n), rng.random_range(0..n));
        if a != b && seen.insert((a.min(b), a.max(b))) {
            edges.push((name(a), name(b), rng.random_range(1..4)));
        }
    }
    CoauthorGraph::from_edges(nodes, edges, 2000).expect("valid random graph")
}

/// Full model check: random weights (including non-trivial layer-norm
/// scales and biases), random input, loss of the configured head.
pub fn gradient_check(config: &ModelConfig, n_probes: usize, seed: u64) -> Result<f64> {
    let config = ModelConfig {
        dropout: 0.0,
        ..config.clone()
    };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut model = CareerModel::<f64>::new(ModelConfig {
        seed,
        ..config.clone()
    })?;
    for t in model.params_mut().values_mut() {
        for v in t.data_mut() {
            *v += rng.random_range(-0.2..0.2);
        }
    }
    let len = config.t_max.div_ceil(2).max(1);
    let off = config.t_max - len;
    let matrix = Tensor::from_fn(config.t_max, config.d_model, |r, _| {
        if r >= off {
            rng.random_range(-1.0..1.0)
        } else {
            0.0
        }
    });
    let mask: Vec<bool> = (0..config.t_max).map(|r| r >= off).collect();
    let graphs: Vec<GraphInput<f64>> = (0..len)
        .map(|i| GraphInput::from_graph(&random_graph(3 + i, &mut rng)))
        .collect::<Result<_>>()?;
    let target = match config.head {
        HeadType::Classification => f64::from(rng.random_bool(0.5)),
        HeadType::Regression => rng.random_range(-3.0..3.0),
    };
    let mut store = model.params().clone();
    probe(&mut store, n_probes, &mut rng, |p| {
        *model.params_mut() = p.clone();
        let mut view = ExampleView::new(&matrix, &mask);
        if config.gcn_mode == GcnMode::Trained {
            view = view.with_graphs(&graphs);
        }
        let (loss, grads, _) = example_gradient(&model, &Sample { view, target }, None)?;
        Ok((loss, grads))
    })
}

/// Projections plus multi-head attention, with the input itself checked.
pub fn check_attention(
    len: usize,
    d: usize,
    heads: usize,
    n_probes: usize,
    seed: u64,
) -> Result<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut store = ParamStore::new();
    let x = store.add("x", random_tensor(len, d, &mut rng));
    let names = ["q", "k", "v"];
    let proj: Vec<(ParamId, ParamId)> = names
        .iter()
        .map(|n| {
            (
                store.add(format!("w{n}"), random_tensor(d, d, &mut rng)),
                store.add(format!("b{n}"), random_tensor(1, d, &mut rng)),
            )
        })
        .collect();
    let r = random_tensor(len * d, 1, &mut rng);
    probe(&mut store, n_probes, &mut rng, |p| {
        let mut tape = Tape::new(p);
        let xv = tape.param(x);
        let qkv: Vec<Var> = proj.iter().map(|&(w, b)| tape.linear(xv, w, b)).collect();
        let a = tape.attention(qkv[0], qkv[1], qkv[2], heads, vec![true; len]);
        let loss = project_to_scalar(&mut tape, a, &r);
        Ok((tape.value(loss).data()[0], tape.backward(loss)))
    })
}

/// Residual layer-norm and feed-forward block.
pub fn check_layer_norm_ffn(
    len: usize,
    d: usize,
    ffn: usize,
    n_probes: usize,
    seed: u64,
) -> Result<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut store = ParamStore::new();
    let x = store.add("x", random_tensor(len, d, &mut rng));
    let g = store.add("ln.g", random_tensor(1, d, &mut rng));
    let b = store.add("ln.b", random_tensor(1, d, &mut rng));
    let w1 = store.add("w1", random_tensor(d, ffn, &mut rng));
    let b1 = store.add("b1", random_tensor(1, ffn, &mut rng));
    let w2 = store.add("w2", random_tensor(ffn, d, &mut rng));
    let b2 = store.add("b2", random_tensor(1, d, &mut rng));
    let r = random_tensor(len * d, 1, &mut rng);
    probe(&mut store, n_probes, &mut rng, |p| {
        let mut tape = Tape::new(p);
        let xv = tape.param(x);
        let h = tape.layer_norm(xv, g, b, 1e-5);
        let f = tape.linear(h, w1, b1);
        let f = tape.relu(f);
        let f = tape.linear(f, w2, b2);
        let sum = tape.add(h, f);
        let loss = project_to_scalar(&mut tape, sum, &r);
        Ok((tape.value(loss).data()[0], tape.backward(loss)))
    })
}

/// Two GCN layers with max pooling on a random connected graph.
pub fn check_gcn(nodes: usize, hidden: usize, n_probes: usize, seed: u64) -> Result<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let input = GraphInput::from_graph(&random_graph(nodes, &mut rng))?;
    let mut store = ParamStore::new();
    let ids = GcnIds::register(&mut store, hidden, &mut rng);
    for t in store.values_mut() {
        for v in t.data_mut() {
            *v += rng.random_range(-0.3..0.3);
        }
    }
    let r = random_tensor(12, 1, &mut rng);
    probe(&mut store, n_probes, &mut rng, |p| {
        let mut tape = Tape::new(p);
        let pooled = gcn_tape(&mut tape, &input, ids);
        let loss = project_to_scalar(&mut tape, pooled, &r);
        Ok((tape.value(loss).data()[0], tape.backward(loss)))
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny(head: HeadType, gcn_mode: GcnMode) -> ModelConfig {
        ModelConfig {
            n_layers: 2,
            n_heads: 2,
            ffn_dim: 6,
            t_max: 4,
            gcn_hidden: 5,
            gcn_mode,
            ..ModelConfig::for_head(head)
        }
    }

    #[test]
    fn attention_gradients() {
        assert!(check_attention(4, 6, 2, 60, 1).unwrap() < 1e-4);
        assert!(check_attention(3, 36, 36, 60, 2).unwrap() < 1e-4);
    }

    #[test]
    fn layer_norm_ffn_gradients() {
        assert!(check_layer_norm_ffn(3, 8, 5, 60, 3).unwrap() < 1e-4);
    }

    #[test]
    fn gcn_gradients() {
        assert!(check_gcn(6, 5, 60, 4).unwrap() < 1e-4);
    }

    #[test]
    fn full_model_gradients() {
        for head in [HeadType::Classification, HeadType::Regression] {
            for mode in [GcnMode::Frozen, GcnMode::Trained] {
                let err = gradient_check(&tiny(head, mode), 80, 5).unwrap();
                assert!(err < 1e-4, "{head:?} {mode:?}: {err}");
            }
        }
    }
}
