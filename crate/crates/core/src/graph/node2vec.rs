//! Biased second-order random walks and skip-gram training with negative
//! sampling.

use std::collections::HashMap;
use std::fmt::Write as _;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::coauthor::CoauthorGraph;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Node2vecParams {
    /// Return parameter; the walk steps back with weight `1/p`.
    pub p: f64,
    /// In-out parameter; outward steps get weight `1/q`.
    pub q: f64,
    pub walk_length: usize,
    pub walks_per_node: usize,
    pub window: usize,
    pub dimensions: usize,
    pub negatives: usize,
    pub epochs: usize,
    /// Initial rate, decayed linearly to `1e-4` of itself.
    pub learning_rate: f64,
    pub seed: u64,
}

impl Default for Node2vecParams {
    fn default() -> Self {
        Node2vecParams {
            p: 1.0,
            q: 1.0,
            walk_length: 40,
            walks_per_node: 10,
            window: 5,
            dimensions: 64,
            negatives: 5,
            epochs: 3,
            learning_rate: 0.025,
            seed: 42,
        }
    }
}

impl Node2vecParams {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidArgument(format!("node2vec: {m}")));
        if !(self.p > 0.0 && self.q > 0.0) {
            return bad("p and q must be positive");
        }
        if self.walk_length < 2 {
            return bad("walk_length must be at least 2");
        }
        if self.walks_per_node == 0 || self.window == 0 || self.negatives == 0 || self.epochs == 0 {
            return bad("walks_per_node, window, negatives and epochs must be positive");
        }
        if self.dimensions < 2 {
            return bad("dimensions must be at least 2");
        }
        if !(self.learning_rate > 0.0) {
            return bad("learning_rate must be positive");
        }
        Ok(())
    }
}

/// Node id to dense vector map; every vector has the same dimension.
#[derive(Debug, Clone, PartialEq)]
pub struct NodeEmbedding {
    ids: Vec<String>,
    index: HashMap<String, usize>,
    dim: usize,
    data: Vec<f64>,
}

impl NodeEmbedding {
    pub fn new(ids: Vec<String>, dim: usize, data: Vec<f64>) -> Result<Self> {
        if dim == 0 || data.len() != ids.len() * dim {
            return Err(Error::InvalidArgument("embedding shape mismatch".into()));
        }
        if data.iter().any(|x| !x.is_finite()) {
            return Err(Error::Numeric("non-finite embedding entry".into()));
        }
        let index = ids
            .iter()
            .enumerate()
            .map(|(i, id)| (id.clone(), i))
            .collect();
        Ok(NodeEmbedding {
            ids,
            index,
            dim,
            data,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn ids(&self) -> &[String] {
        &self.ids
    }

    pub fn get(&self, id: &str) -> Option<&[f64]> {
        self.index
            .get(id)
            .map(|&i| &self.data[i * self.dim..(i + 1) * self.dim])
    }

    pub fn vector(&self, i: usize) -> &[f64] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }

    /// `id,v0..v{d-1}` rows.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("id");
        for d in 0..self.dim {
            let _ = write!(s, ",v{d}");
        }
        s.push('\n');
        for (i, id) in self.ids.iter().enumerate() {
            s.push_str(id);
            for v in self.vector(i) {
                let _ = write!(s, ",{v}");
            }
            s.push('\n');
        }
        s
    }
}

fn mix_seed(seed: u64, a: u64, b: u64) -> u64 {
    // splitmix64 finalizer over the combined words
    let mut z =
        seed ^ a.wrapping_mul(0x9E37_79B9_7F4A_7C15) ^ b.wrapping_mul(0xC2B2_AE3D_27D4_EB4F);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

fn pick_weighted(rng: &mut ChaCha8Rng, weights: &[f64]) -> usize {
    let total: f64 = weights.iter().sum();
    let mut x = rng.random::<f64>() * total;
    for (i, &w) in weights.iter().enumerate() {
        if x < w {
            return i;
        }
        x -= w;
    }
    weights.len() - 1
}

fn walk_from(
    graph: &CoauthorGraph,
    start: usize,
    params: &Node2vecParams,
    rng: &mut ChaCha8Rng,
) -> Vec<usize> {
    let mut walk = Vec::with_capacity(params.walk_length);
    walk.push(start);
    let mut weights = Vec::new();
    while walk.len() < params.walk_length {
        let cur = *walk.last().expect("non-empty walk");
        let nbrs = graph.neighbors(cur);
        if nbrs.is_empty() {
            break;
        }
        weights.clear();
        match walk.len().checked_sub(2).map(|i| walk[i]) {
            None => weights.extend(nbrs.iter().map(|&(_, w)| f64::from(w))),
            Some(prev) => {
                for &(x, w) in nbrs {
                    let bias = if x == prev {
                        1.0 / params.p
                    } else if graph.weight(prev, x).is_some() {
                        1.0
                    } else {
                        1.0 / params.q
                    };
                    weights.push(f64::from(w) * bias);
                }
            }
        }
        walk.push(nbrs[pick_weighted(rng, &weights)].0);
    }
    walk
}

/// Random walks ordered by walk round, then node position. Each
/// `(node, round)` pair draws from its own seeded stream.
pub fn generate_walks(graph: &CoauthorGraph, params: &Node2vecParams) -> Vec<Vec<usize>> {
    let starts: Vec<(usize, usize)> = (0..params.walks_per_node)
        .flat_map(|w| {
            (0..graph.len())
                .filter(|&n| graph.degree(n) > 0)
                .map(move |n| (w, n))
        })
        .collect();
    starts
        .par_iter()
        .map(|&(w, n)| {
            let mut rng = ChaCha8Rng::seed_from_u64(mix_seed(params.seed, n as u64, w as u64));
            walk_from(graph, n, params, &mut rng)
        })
        .collect()
}

#[inline]
fn sigmoid(x: f64) -> f64 {
    if x > 30.0 {
        1.0
    } else if x < -30.0 {
        0.0
    } else {
        1.0 / (1.0 + (-x).exp())
    }
}

/// Input and context vectors after skip-gram training, `n × dim` each.
fn train_skipgram(n: usize, walks: &[Vec<usize>], params: &Node2vecParams) -> (Vec<f64>, Vec<f64>) {
    let dim = params.dimensions;
    let mut rng = ChaCha8Rng::seed_from_u64(mix_seed(params.seed, u64::MAX, 0));
    let mut input: Vec<f64> = (0..n * dim)
        .map(|_| (rng.random::<f64>() - 0.5) / dim as f64)
        .collect();
    let mut output = vec![0.0; n * dim];

    let mut counts = vec![0.0f64; n];
    for w in walks {
        for &t in w {
            counts[t] += 1.0;
        }
    }
    let mut cumulative = Vec::with_capacity(n);
    let mut acc = 0.0;
    for c in &counts {
        acc += c.powf(0.75);
        cumulative.push(acc);
    }
    let sample_negative = |rng: &mut ChaCha8Rng| {
        let x = rng.random::<f64>() * acc;
        cumulative.partition_point(|&c| c <= x).min(n - 1)
    };

    let tokens: usize = walks.iter().map(Vec::len).sum();
    let total = (tokens * params.epochs).max(1) as f64;
    let mut seen = 0usize;
    let mut grad = vec![0.0; dim];
    for _ in 0..params.epochs {
        for walk in walks {
            for (i, &center) in walk.iter().enumerate() {
                let lr = params.learning_rate * (1.0 - seen as f64 / total).max(1e-4);
                seen += 1;
                let reduce = rng.random_range(0..params.window);
                let win = params.window - reduce;
                let lo = i.saturating_sub(win);
                let hi = (i + win).min(walk.len() - 1);
                for (j, &ctx) in walk.iter().enumerate().take(hi + 1).skip(lo) {
                    if j == i {
                        continue;
                    }
                    grad.iter_mut().for_each(|g| *g = 0.0);
                    let vin = center * dim;
                    for k in 0..=params.negatives {
                        let (target, label) = if k == 0 {
                            (ctx, 1.0)
                        } else {
                            let t = sample_negative(&mut rng);
                            if t == ctx || t == center {
                                continue;
                            }
                            (t, 0.0)
                        };
                        let vout = target * dim;
                        let dot: f64 = (0..dim).map(|d| input[vin + d] * output[vout + d]).sum();
                        let g = (label - sigmoid(dot)) * lr;
                        for d in 0..dim {
                            grad[d] += g * output[vout + d];
                            output[vout + d] += g * input[vin + d];
                        }
                    }
                    for d in 0..dim {
                        input[vin + d] += grad[d];
                    }
                }
            }
        }
    }
    (input, output)
}

/// Learns node embeddings from biased random walks. Nodes without edges get
/// the zero vector.
pub fn node2vec_embed(graph: &CoauthorGraph, params: &Node2vecParams) -> Result<NodeEmbedding> {
    params.validate()?;
    if graph.edge_count() == 0 {
        return Err(Error::DegenerateGraph(
            "node2vec needs at least one edge".into(),
        ));
    }
    let walks = generate_walks(graph, params);
    let (input, output) = train_skipgram(graph.len(), &walks, params);
    let dim = params.dimensions;
    let mut data: Vec<f64> = input.iter().zip(&output).map(|(a, b)| a + b).collect();
    for n in 0..graph.len() {
        if graph.degree(n) == 0 {
            data[n * dim..(n + 1) * dim]
                .iter_mut()
                .for_each(|x| *x = 0.0);
        }
    }
    NodeEmbedding::new(graph.ids().to_vec(), dim, data)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::factors::cosine;
    use crate::graph::NodeLabel;

    pub(crate) fn two_cliques() -> CoauthorGraph {
        let nodes: Vec<_> = (0..20)
            .map(|i| (format!("n{i:02}"), NodeLabel::NonFellow))
            .collect();
        let mut edges = Vec::new();
        for block in [0, 10] {
            for i in block..block + 10 {
                for j in i + 1..block + 10 {
                    edges.push((format!("n{i:02}"), format!("n{j:02}"), 1));
                }
            }
        }
        edges.push(("n09".into(), "n10".into(), 1));
        CoauthorGraph::from_edges(nodes, edges, 2000).unwrap()
    }

    fn clique_means(emb: &NodeEmbedding) -> (f64, f64) {
        let (mut within, mut nw, mut cross, mut nc) = (0.0, 0, 0.0, 0);
        for i in 0..20 {
            for j in i + 1..20 {
                let c = cosine(emb.vector(i), emb.vector(j));
                if (i < 10) == (j < 10) {
                    within += c;
                    nw += 1;
                } else {
                    cross += c;
                    nc += 1;
                }
            }
        }
        (within / nw as f64, cross / nc as f64)
    }

    #[test]
    fn cliques_separate() {
        let emb = node2vec_embed(&two_cliques(), &Node2vecParams::default()).unwrap();
        let (within, cross) = clique_means(&emb);
        assert!(within > cross, "within {within} cross {cross}");
    }

    #[test]
    fn single_edge_pair_is_similar() {
        let g = CoauthorGraph::from_edges(
            vec![
                ("a".into(), NodeLabel::NonFellow),
                ("b".into(), NodeLabel::NonFellow),
            ],
            vec![("a".into(), "b".into(), 1)],
            2000,
        )
        .unwrap();
        let params = Node2vecParams {
            window: 1,
            ..Default::default()
        };
        let emb = node2vec_embed(&g, &params).unwrap();
        let c = cosine(emb.get("a").unwrap(), emb.get("b").unwrap());
        assert!(c > 0.0, "cosine {c}");
    }

    #[test]
    fn seeded_runs_are_bitwise_identical() {
        let params = Node2vecParams {
            dimensions: 8,
            walks_per_node: 2,
            ..Default::default()
        };
        let a = node2vec_embed(&two_cliques(), &params).unwrap();
        let b = node2vec_embed(&two_cliques(), &params).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn isolated_nodes_get_zero_and_edgeless_graph_errors() {
        let g = CoauthorGraph::from_edges(
            vec![
                ("a".into(), NodeLabel::NonFellow),
                ("b".into(), NodeLabel::NonFellow),
                ("c".into(), NodeLabel::NonFellow),
            ],
            vec![("a".into(), "b".into(), 2)],
            2000,
        )
        .unwrap();
        let emb = node2vec_embed(
            &g,
            &Node2vecParams {
                dimensions: 4,
                ..Default::default()
            },
        )
        .unwrap();
        assert!(emb.get("c").unwrap().iter().all(|&x| x == 0.0));

        let lonely =
            CoauthorGraph::from_edges(vec![("a".into(), NodeLabel::NonFellow)], Vec::new(), 2000)
                .unwrap();
        assert!(matches!(
            node2vec_embed(&lonely, &Node2vecParams::default()),
            Err(Error::DegenerateGraph(_))
        ));
    }

    #[test]
    fn invalid_params_rejected() {
        let g = two_cliques();
        for p in [
            Node2vecParams {
                p: 0.0,
                ..Default::default()
            },
            Node2vecParams {
                walk_length: 1,
                ..Default::default()
            },
            Node2vecParams {
                dimensions: 1,
                ..Default::default()
            },
            Node2vecParams {
                negatives: 0,
                ..Default::default()
            },
        ] {
            assert!(matches!(
                node2vec_embed(&g, &p),
                Err(Error::InvalidArgument(_))
            ));
        }
    }

    #[test]
    fn walks_follow_edges() {
        let g = two_cliques();
        let walks = generate_walks(
            &g,
            &Node2vecParams {
                walks_per_node: 1,
                ..Default::default()
            },
        );
        assert_eq!(walks.len(), 20);
        for w in &walks {
            assert_eq!(w.len(), 40);
            for pair in w.windows(2) {
                assert!(g.weight(pair[0], pair[1]).is_some());
            }
        }
    }
}
