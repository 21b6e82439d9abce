use std::collections::{BTreeMap, HashMap, VecDeque};
use std::fmt::Write as _;

use serde::Serialize;

use crate::data::{Corpus, Year};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum NodeLabel {
    NonFellow = 0,
    Fellow = 1,
    Candidate = 2,
}

impl NodeLabel {
    pub fn code(self) -> u8 {
        self as u8
    }
}

/// Undirected weighted collaboration graph. Nodes are sorted by id; each
/// adjacency list is sorted by neighbor position.
#[derive(Debug, Clone, PartialEq)]
pub struct CoauthorGraph {
    ids: Vec<String>,
    labels: Vec<NodeLabel>,
    adj: Vec<Vec<(usize, u32)>>,
    index: HashMap<String, usize>,
    as_of_year: Year,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Proximity {
    pub n_neighbor: usize,
    pub n_collab: u64,
}

impl CoauthorGraph {
    /// Assembles a graph from labeled nodes and weighted edges. Parallel
    /// edges are merged by summing weights; self-loops are dropped.
    pub fn from_edges(
        nodes: Vec<(String, NodeLabel)>,
        edges: impl IntoIterator<Item = (String, String, u32)>,
        as_of_year: Year,
    ) -> Result<Self> {
        let mut nodes = nodes;
        nodes.sort_by(|a, b| a.0.cmp(&b.0));
        nodes.dedup_by(|a, b| a.0 == b.0);
        let index: HashMap<String, usize> = nodes
            .iter()
            .enumerate()
            .map(|(i, (id, _))| (id.clone(), i))
            .collect();
        let mut weights: BTreeMap<(usize, usize), u32> = BTreeMap::new();
        for (a, b, w) in edges {
            let ia = *index.get(&a).ok_or_else(|| Error::Lookup(a.clone()))?;
            let ib = *index.get(&b).ok_or_else(|| Error::Lookup(b.clone()))?;
            if ia == ib || w == 0 {
                continue;
            }
            *weights.entry((ia.min(ib), ia.max(ib))).or_default() += w;
        }
        let mut adj = vec![Vec::new(); nodes.len()];
        for (&(a, b), &w) in &weights {
            adj[a].push((b, w));
            adj[b].push((a, w));
        }
        for list in &mut adj {
            list.sort_unstable();
        }
        let (ids, labels) = nodes.into_iter().unzip();
        Ok(CoauthorGraph {
            ids,
            labels,
            adj,
            index,
            as_of_year,
        })
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn edge_count(&self) -> usize {
        self.adj.iter().map(Vec::len).sum::<usize>() / 2
    }

    pub fn as_of_year(&self) -> Year {
        self.as_of_year
    }

    pub fn ids(&self) -> &[String] {
        &self.ids
    }

    pub fn id(&self, node: usize) -> &str {
        &self.ids[node]
    }

    pub fn labels(&self) -> &[NodeLabel] {
        &self.labels
    }

    pub fn label(&self, node: usize) -> NodeLabel {
        self.labels[node]
    }

    pub fn position(&self, id: &str) -> Option<usize> {
        self.index.get(id).copied()
    }

    pub fn neighbors(&self, node: usize) -> &[(usize, u32)] {
        &self.adj[node]
    }

    pub fn degree(&self, node: usize) -> usize {
        self.adj[node].len()
    }

    pub fn weight(&self, a: usize, b: usize) -> Option<u32> {
        let list = &self.adj[a];
        list.binary_search_by_key(&b, |&(n, _)| n)
            .ok()
            .map(|i| list[i].1)
    }

    pub fn weight_by_id(&self, a: &str, b: &str) -> Option<u32> {
        self.weight(self.position(a)?, self.position(b)?)
    }

    /// Each undirected edge once, `a < b` by node position.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize, u32)> + '_ {
        self.adj.iter().enumerate().flat_map(|(a, list)| {
            list.iter()
                .filter(move |&&(b, _)| a < b)
                .map(move |&(b, w)| (a, b, w))
        })
    }

    /// BFS distances from `start`, limited to `max_hops`. Returns
    /// `(node, distance)` in discovery order.
    pub fn bfs(&self, start: usize, max_hops: usize) -> Vec<(usize, usize)> {
        let mut dist = vec![usize::MAX; self.len()];
        let mut out = vec![(start, 0)];
        let mut queue = VecDeque::from([start]);
        dist[start] = 0;
        while let Some(v) = queue.pop_front() {
            if dist[v] == max_hops {
                continue;
            }
            for &(u, _) in &self.adj[v] {
                if dist[u] == usize::MAX {
                    dist[u] = dist[v] + 1;
                    out.push((u, dist[u]));
                    queue.push_back(u);
                }
            }
        }
        out
    }

    /// Induced subgraph on the given node positions.
    pub fn induced(&self, nodes: &[usize], relabel: impl Fn(usize) -> NodeLabel) -> CoauthorGraph {
        let mut keep: Vec<usize> = nodes.to_vec();
        keep.sort_unstable();
        keep.dedup();
        let mut map = vec![usize::MAX; self.len()];
        for (new, &old) in keep.iter().enumerate() {
            map[old] = new;
        }
        let ids: Vec<String> = keep.iter().map(|&o| self.ids[o].clone()).collect();
        let labels = keep.iter().map(|&o| relabel(o)).collect();
        let adj = keep
            .iter()
            .map(|&o| {
                self.adj[o]
                    .iter()
                    .filter(|&&(n, _)| map[n] != usize::MAX)
                    .map(|&(n, w)| (map[n], w))
                    .collect()
            })
            .collect();
        let index = ids
            .iter()
            .enumerate()
            .map(|(i, id)| (id.clone(), i))
            .collect();
        CoauthorGraph {
            ids,
            labels,
            adj,
            index,
            as_of_year: self.as_of_year,
        }
    }

    /// Edge list as `src,dst,weight,src_label,dst_label`.
    pub fn to_edge_csv(&self) -> String {
        let mut s = String::from("src,dst,weight,src_label,dst_label\n");
        for (a, b, w) in self.edges() {
            let _ = writeln!(
                s,
                "{},{},{},{},{}",
                self.ids[a],
                self.ids[b],
                w,
                self.labels[a].code(),
                self.labels[b].code()
            );
        }
        s
    }
}

/// Co-author graph of every publication dated `<= as_of_year`. Edge weight is
/// the number of co-authored publications; Fellow labels are evaluated at
/// `as_of_year`.
pub fn build_graph(corpus: &Corpus, as_of_year: Year) -> CoauthorGraph {
    let mut nodes: BTreeMap<&str, NodeLabel> = BTreeMap::new();
    let mut pairs: HashMap<(&str, &str), u32> = HashMap::new();
    let mut authors: Vec<&str> = Vec::new();
    for p in corpus.publications_through(as_of_year) {
        authors.clear();
        for a in &p.author_ids {
            if !authors.contains(&a.as_str()) {
                authors.push(a);
            }
        }
        authors.sort_unstable();
        for &a in &authors {
            nodes
                .entry(a)
                .or_insert_with(|| label_at(corpus, a, as_of_year));
        }
        for i in 0..authors.len() {
            for j in i + 1..authors.len() {
                *pairs.entry((authors[i], authors[j])).or_default() += 1;
            }
        }
    }
    let node_list = nodes
        .into_iter()
        .map(|(id, l)| (id.to_string(), l))
        .collect();
    let edges = pairs
        .into_iter()
        .map(|((a, b), w)| (a.to_string(), b.to_string(), w));
    CoauthorGraph::from_edges(node_list, edges, as_of_year).expect("edge endpoints are nodes")
}

fn label_at(corpus: &Corpus, id: &str, year: Year) -> NodeLabel {
    match corpus.scholar(id) {
        Ok(s) if s.is_fellow_at(year) => NodeLabel::Fellow,
        _ => NodeLabel::NonFellow,
    }
}

fn check_hops(max_hops: usize) -> Result<()> {
    if (1..=3).contains(&max_hops) {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!(
            "max_hops must be in 1..=3, got {max_hops}"
        )))
    }
}

/// Induced subgraph within `max_hops` of `candidate`, which is relabeled
/// [`NodeLabel::Candidate`].
pub fn ego_subgraph(
    graph: &CoauthorGraph,
    candidate: &str,
    max_hops: usize,
) -> Result<CoauthorGraph> {
    check_hops(max_hops)?;
    let c = graph
        .position(candidate)
        .ok_or_else(|| Error::Lookup(candidate.to_string()))?;
    let nodes: Vec<usize> = graph.bfs(c, max_hops).into_iter().map(|(n, _)| n).collect();
    Ok(graph.induced(&nodes, |o| {
        if o == c {
            NodeLabel::Candidate
        } else {
            graph.label(o)
        }
    }))
}

/// Fellow co-author count and collaboration weight within `max_hops`.
///
/// With one hop, `n_collab` sums the candidate–Fellow edge weights. With more
/// hops it sums the weight of every in-scope edge touching a Fellow, each
/// edge counted once.
pub fn fellow_proximity(
    graph: &CoauthorGraph,
    candidate: &str,
    max_hops: usize,
) -> Result<Proximity> {
    let ego = ego_subgraph(graph, candidate, max_hops)?;
    let is_fellow = |n: usize| ego.label(n) == NodeLabel::Fellow;
    let n_neighbor = (0..ego.len()).filter(|&n| is_fellow(n)).count();
    let n_collab = if max_hops == 1 {
        let c = ego.position(candidate).expect("candidate in ego graph");
        ego.neighbors(c)
            .iter()
            .filter(|&&(n, _)| is_fellow(n))
            .map(|&(_, w)| u64::from(w))
            .sum()
    } else {
        ego.edges()
            .filter(|&(a, b, _)| is_fellow(a) || is_fellow(b))
            .map(|(_, _, w)| u64::from(w))
            .sum()
    };
    Ok(Proximity {
        n_neighbor,
        n_collab,
    })
}
