//! Two-layer graph convolution with max pooling over nodes.

use std::sync::Arc;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::params::{ParamId, ParamStore};
use super::tape::{Tape, Var};
use crate::error::{Error, Result};
use crate::graph::{normalized_adjacency_sparse, CoauthorGraph};
use crate::scalar::Scalar;
use crate::tensor::{CsrMatrix, Tensor};

/// Node feature width: one-hot label (3) plus `ln(1 + degree)`.
pub const GCN_INPUT_DIM: usize = 4;
/// Pooled output width, the scholarly-circle slot count.
pub const GCN_OUTPUT_DIM: usize = 12;

/// Propagation operator and node features of one ego subgraph.
#[derive(Debug, Clone, PartialEq)]
pub struct GraphInput<T> {
    pub adjacency: Arc<CsrMatrix<T>>,
    pub features: Tensor<T>,
}

impl<T: Scalar> GraphInput<T> {
    /// An empty graph: no nodes, pooled output is the zero vector.
    pub fn empty() -> Self {
        GraphInput {
            adjacency: Arc::new(CsrMatrix::from_rows(0, Vec::new())),
            features: Tensor::from_vec(&[0, GCN_INPUT_DIM], Vec::new()),
        }
    }

    pub fn from_graph(graph: &CoauthorGraph) -> Result<Self> {
        if graph.is_empty() {
            return Ok(Self::empty());
        }
        let adjacency = Arc::new(normalized_adjacency_sparse(graph)?);
        let features = Tensor::from_fn(graph.len(), GCN_INPUT_DIM, |r, c| {
            if c < 3 {
                if graph.label(r).code() as usize == c {
                    T::one()
                } else {
                    T::zero()
                }
            } else {
                T::lit((1.0 + graph.degree(r) as f64).ln())
            }
        });
        Ok(GraphInput {
            adjacency,
            features,
        })
    }

    pub fn node_count(&self) -> usize {
        self.adjacency.rows()
    }

    pub fn cast<U: Scalar>(&self) -> GraphInput<U> {
        let rows = (0..self.adjacency.rows())
            .map(|r| {
                self.adjacency
                    .row_entries(r)
                    .map(|(c, v)| (c, U::lit(v.as_f64())))
                    .collect()
            })
            .collect();
        GraphInput {
            adjacency: Arc::new(CsrMatrix::from_rows(self.adjacency.cols(), rows)),
            features: self.features.cast(),
        }
    }
}

/// Weights of the two convolution layers.
#[derive(Debug, Clone, PartialEq)]
pub struct GcnParams<T> {
    pub w1: Tensor<T>,
    pub b1: Tensor<T>,
    pub w2: Tensor<T>,
    pub b2: Tensor<T>,
}

impl<T: Scalar> GcnParams<T> {
    /// Glorot-initialized weights from a fixed seed.
    pub fn seeded(hidden: usize, seed: u64) -> Self {
        let mut store = ParamStore::new();
        let ids = GcnIds::register(&mut store, hidden, &mut ChaCha8Rng::seed_from_u64(seed));
        ids.extract(&store)
    }
}

/// Handles of the GCN weights inside a model's [`ParamStore`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GcnIds {
    pub w1: ParamId,
    pub b1: ParamId,
    pub w2: ParamId,
    pub b2: ParamId,
}

impl GcnIds {
    pub fn register<T: Scalar>(
        store: &mut ParamStore<T>,
        hidden: usize,
        rng: &mut impl rand::Rng,
    ) -> Self {
        GcnIds {
            w1: store.add_glorot("gcn.w1", GCN_INPUT_DIM, hidden, rng),
            b1: store.add_constant("gcn.b1", 1, hidden, 0.0),
            w2: store.add_glorot("gcn.w2", hidden, GCN_OUTPUT_DIM, rng),
            b2: store.add_constant("gcn.b2", 1, GCN_OUTPUT_DIM, 0.0),
        }
    }

    pub fn lookup<T: Scalar>(store: &ParamStore<T>) -> Result<Self> {
        Ok(GcnIds {
            w1: store.id("gcn.w1")?,
            b1: store.id("gcn.b1")?,
            w2: store.id("gcn.w2")?,
            b2: store.id("gcn.b2")?,
        })
    }

    pub fn extract<T: Scalar>(&self, store: &ParamStore<T>) -> GcnParams<T> {
        GcnParams {
            w1: store.get(self.w1).clone(),
            b1: store.get(self.b1).clone(),
            w2: store.get(self.w2).clone(),
            b2: store.get(self.b2).clone(),
        }
    }
}

fn conv<T: Scalar>(a: &CsrMatrix<T>, h: &Tensor<T>, w: &Tensor<T>, b: &Tensor<T>) -> Tensor<T> {
    let mut out = a.mul_dense(&h.matmul(w));
    for r in 0..out.rows() {
        for (o, &bv) in out.row_mut(r).iter_mut().zip(b.data()) {
            *o = (*o + bv).max(T::zero());
        }
    }
    out
}

/// `max_nodes ReLU(Â · ReLU(Â H W1 + b1) W2 + b2)`.
pub fn gcn_branch<T: Scalar>(input: &GraphInput<T>, params: &GcnParams<T>) -> Result<Vec<T>> {
    let out_dim = params.w2.cols();
    if input.node_count() == 0 {
        return Ok(vec![T::zero(); out_dim]);
    }
    if input.features.rows() != input.node_count() || input.features.cols() != params.w1.rows() {
        return Err(Error::Config(
            "GCN feature shape does not match adjacency/weights".into(),
        ));
    }
    let h1 = conv(&input.adjacency, &input.features, &params.w1, &params.b1);
    let h2 = conv(&input.adjacency, &h1, &params.w2, &params.b2);
    Ok((0..out_dim)
        .map(|c| {
            (0..h2.rows())
                .map(|r| h2.at(r, c))
                .fold(T::neg_infinity(), T::max)
        })
        .collect())
}

/// Records the branch on a tape; returns a `1 × 12` row.
pub(crate) fn gcn_tape<T: Scalar>(
    tape: &mut Tape<'_, T>,
    input: &GraphInput<T>,
    ids: GcnIds,
) -> Var {
    if input.node_count() == 0 {
        return tape.input(Tensor::zeros(&[1, GCN_OUTPUT_DIM]));
    }
    let x = tape.input(input.features.clone());
    let h = tape.linear(x, ids.w1, ids.b1);
    let h = tape.spmm(input.adjacency.clone(), h);
    let h = tape.relu(h);
    let h = tape.linear(h, ids.w2, ids.b2);
    let h = tape.spmm(input.adjacency.clone(), h);
    let h = tape.relu(h);
    tape.max_rows(h)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::NodeLabel;

    fn path_graph() -> CoauthorGraph {
        CoauthorGraph::from_edges(
            vec![
                ("a".into(), NodeLabel::Candidate),
                ("b".into(), NodeLabel::Fellow),
                ("c".into(), NodeLabel::NonFellow),
            ],
            vec![("a".into(), "b".into(), 2), ("b".into(), "c".into(), 1)],
            2000,
        )
        .unwrap()
    }

    #[test]
    fn features_encode_label_and_degree() {
        let g = GraphInput::<f64>::from_graph(&path_graph()).unwrap();
        assert_eq!(g.features.row(0), &[0.0, 0.0, 1.0, 2f64.ln()]);
        assert_eq!(g.features.row(1), &[0.0, 1.0, 0.0, 3f64.ln()]);
    }

    #[test]
    fn empty_graph_gives_zero() {
        let p = GcnParams::<f64>::seeded(16, 1);
        assert_eq!(gcn_branch(&GraphInput::empty(), &p).unwrap(), vec![0.0; 12]);
    }

    #[test]
    fn single_node_pools_itself() {
        let g =
            CoauthorGraph::from_edges(vec![("a".into(), NodeLabel::Candidate)], Vec::new(), 2000)
                .unwrap();
        let input = GraphInput::<f64>::from_graph(&g).unwrap();
        let p = GcnParams::seeded(16, 3);
        let mut h1 = input.features.matmul(&p.w1);
        for (o, b) in h1.data_mut().iter_mut().zip(p.b1.data()) {
            *o = (*o + b).max(0.0);
        }
        let mut h2 = h1.matmul(&p.w2);
        for (o, b) in h2.data_mut().iter_mut().zip(p.b2.data()) {
            *o = (*o + b).max(0.0);
        }
        assert_eq!(gcn_branch(&input, &p).unwrap(), h2.data().to_vec());
    }

    #[test]
    fn tape_matches_plain_forward() {
        let input = GraphInput::<f64>::from_graph(&path_graph()).unwrap();
        let mut store = ParamStore::new();
        let ids = GcnIds::register(&mut store, 16, &mut ChaCha8Rng::seed_from_u64(9));
        let plain = gcn_branch(&input, &ids.extract(&store)).unwrap();
        let mut tape = Tape::new(&store);
        let v = gcn_tape(&mut tape, &input, ids);
        assert_eq!(tape.value(v).data(), plain.as_slice());
    }
}
