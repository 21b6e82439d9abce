use super::coauthor::CoauthorGraph;
use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::tensor::{CsrMatrix, Tensor};

fn renormalized_rows<T: Scalar>(graph: &CoauthorGraph) -> Result<Vec<Vec<(usize, T)>>> {
    if graph.is_empty() {
        return Err(Error::DegenerateGraph("adjacency of an empty graph".into()));
    }
    let degree: Vec<T> = (0..graph.len())
        .map(|v| {
            let w: u64 = graph.neighbors(v).iter().map(|&(_, w)| u64::from(w)).sum();
            T::lit((w + 1) as f64)
        })
        .collect();
    let inv_sqrt: Vec<T> = degree.iter().map(|d| d.sqrt().recip()).collect();
    Ok((0..graph.len())
        .map(|v| {
            let mut row = Vec::with_capacity(graph.degree(v) + 1);
            row.push((v, inv_sqrt[v] * inv_sqrt[v]));
            for &(u, w) in graph.neighbors(v) {
                row.push((u, inv_sqrt[v] * T::lit(f64::from(w)) * inv_sqrt[u]));
            }
            row
        })
        .collect())
}

/// `D^{-1/2}(A+I)D^{-1/2}` over edge weights, rows in node-id order.
pub fn normalized_adjacency<T: Scalar>(graph: &CoauthorGraph) -> Result<Tensor<T>> {
    let rows = renormalized_rows::<T>(graph)?;
    let n = graph.len();
    let mut out = Tensor::zeros(&[n, n]);
    for (r, row) in rows.into_iter().enumerate() {
        for (c, v) in row {
            out.set(r, c, v);
        }
    }
    Ok(out)
}

/// Sparse form of [`normalized_adjacency`].
pub fn normalized_adjacency_sparse<T: Scalar>(graph: &CoauthorGraph) -> Result<CsrMatrix<T>> {
    Ok(CsrMatrix::from_rows(graph.len(), renormalized_rows(graph)?))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::NodeLabel;

    #[test]
    fn single_node_is_one() {
        let g =
            CoauthorGraph::from_edges(vec![("a".into(), NodeLabel::NonFellow)], Vec::new(), 2000)
                .unwrap();
        let a = normalized_adjacency::<f64>(&g).unwrap();
        assert_eq!(a.data(), &[1.0]);
    }

    #[test]
    fn two_nodes_unit_edge() {
        let g = CoauthorGraph::from_edges(
            vec![
                ("a".into(), NodeLabel::NonFellow),
                ("b".into(), NodeLabel::NonFellow),
            ],
            vec![("a".into(), "b".into(), 1)],
            2000,
        )
        .unwrap();
        let a = normalized_adjacency::<f64>(&g).unwrap();
        for v in a.data() {
            assert!((v - 0.5).abs() < 1e-15);
        }
        assert_eq!(
            normalized_adjacency_sparse::<f64>(&g).unwrap().to_dense(),
            a
        );
    }
}
