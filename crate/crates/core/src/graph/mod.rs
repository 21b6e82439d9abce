//! Co-author graphs, ego subgraphs, Fellow proximity, node2vec embeddings
//! and the renormalized adjacency consumed by graph convolutions.

mod adjacency;
mod coauthor;
mod node2vec;

pub use adjacency::{normalized_adjacency, normalized_adjacency_sparse};
pub use coauthor::{
    build_graph, ego_subgraph, fellow_proximity, CoauthorGraph, NodeLabel, Proximity,
};
pub use node2vec::{generate_walks, node2vec_embed, Node2vecParams, NodeEmbedding};
