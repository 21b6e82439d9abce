//! CART decision trees with Gini or squared-error splits.

use std::fmt::Write as _;

use rand::seq::index::sample;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Criterion {
    /// Classification over labels `0..n_classes`.
    Gini,
    /// Regression on real targets.
    Mse,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TreeParams {
    pub criterion: Criterion,
    pub max_depth: usize,
    /// Minimum samples a node needs to be split.
    pub min_samples: usize,
    /// Features considered per split; `None` means all.
    pub max_features: Option<usize>,
}

impl Default for TreeParams {
    fn default() -> Self {
        TreeParams {
            criterion: Criterion::Gini,
            max_depth: 3,
            min_samples: 32,
            max_features: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TreeNode {
    pub id: usize,
    pub depth: usize,
    pub samples: usize,
    /// Class frequencies (Gini) or `[mean]` (MSE).
    pub value: Vec<f64>,
    pub impurity: f64,
    pub split: Option<Split>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Split {
    pub feature: usize,
    /// Samples with `x[feature] <= threshold` go left.
    pub threshold: f64,
    pub left: usize,
    pub right: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecisionTree {
    pub criterion: Criterion,
    pub n_classes: usize,
    pub n_features: usize,
    pub nodes: Vec<TreeNode>,
}

struct Builder<'a, R> {
    x: &'a [Vec<f64>],
    y: &'a [f64],
    params: TreeParams,
    n_classes: usize,
    rng: Option<&'a mut R>,
    nodes: Vec<TreeNode>,
}

fn gini(counts: &[f64], n: f64) -> f64 {
    if n == 0.0 {
        return 0.0;
    }
    1.0 - counts.iter().map(|c| (c / n) * (c / n)).sum::<f64>()
}

fn mse(sum: f64, sum_sq: f64, n: f64) -> f64 {
    if n == 0.0 {
        return 0.0;
    }
    (sum_sq / n - (sum / n) * (sum / n)).max(0.0)
}

impl<R: Rng> Builder<'_, R> {
    fn summarize(&self, idx: &[usize]) -> (Vec<f64>, f64) {
        let n = idx.len() as f64;
        match self.params.criterion {
            Criterion::Gini => {
                let mut counts = vec![0.0; self.n_classes];
                for &i in idx {
                    counts[self.y[i] as usize] += 1.0;
                }
                let imp = gini(&counts, n);
                (counts.iter().map(|c| c / n).collect(), imp)
            }
            Criterion::Mse => {
                let sum: f64 = idx.iter().map(|&i| self.y[i]).sum();
                let sq: f64 = idx.iter().map(|&i| self.y[i] * self.y[i]).sum();
                (vec![sum / n], mse(sum, sq, n))
            }
        }
    }

    /// Best `(feature, threshold, weighted child impurity)`.
    fn best_split(&mut self, idx: &[usize]) -> Option<(usize, f64, f64)> {
        let d = self.x[0].len();
        let mut features: Vec<usize> = match (self.params.max_features, self.rng.as_deref_mut()) {
            (Some(k), Some(rng)) if k < d => sample(rng, d, k).into_vec(),
            _ => (0..d).collect(),
        };
        features.sort_unstable();
        let n = idx.len() as f64;
        let mut best: Option<(usize, f64, f64)> = None;
        let mut order: Vec<(f64, f64)> = Vec::with_capacity(idx.len());
        for &f in &features {
            order.clear();
            order.extend(idx.iter().map(|&i| (self.x[i][f], self.y[i])));
            order.sort_by(|a, b| a.0.total_cmp(&b.0));
            if order[0].0 == order[order.len() - 1].0 {
                continue;
            }
            match self.params.criterion {
                Criterion::Gini => {
                    let mut right = vec![0.0; self.n_classes];
                    for &(_, y) in &order {
                        right[y as usize] += 1.0;
                    }
                    let mut left = vec![0.0; self.n_classes];
                    for k in 0..order.len() - 1 {
                        let c = order[k].1 as usize;
                        left[c] += 1.0;
                        right[c] -= 1.0;
                        if order[k].0 == order[k + 1].0 {
                            continue;
                        }
                        let nl = (k + 1) as f64;
                        let score = nl * gini(&left, nl) + (n - nl) * gini(&right, n - nl);
                        consider(&mut best, f, (order[k].0 + order[k + 1].0) / 2.0, score / n);
                    }
                }
                Criterion::Mse => {
                    let (mut rs, mut rq) = (0.0, 0.0);
                    for &(_, y) in &order {
                        rs += y;
                        rq += y * y;
                    }
                    let (mut ls, mut lq) = (0.0, 0.0);
                    for k in 0..order.len() - 1 {
                        let y = order[k].1;
                        ls += y;
                        lq += y * y;
                        rs -= y;
                        rq -= y * y;
                        if order[k].0 == order[k + 1].0 {
                            continue;
                        }
                        let nl = (k + 1) as f64;
                        let score = nl * mse(ls, lq, nl) + (n - nl) * mse(rs, rq, n - nl);
                        consider(&mut best, f, (order[k].0 + order[k + 1].0) / 2.0, score / n);
                    }
                }
            }
        }
        best
    }

    fn grow(&mut self, idx: Vec<usize>, depth: usize) -> usize {
        let (value, impurity) = self.summarize(&idx);
        let id = self.nodes.len();
        self.nodes.push(TreeNode {
            id,
            depth,
            samples: idx.len(),
            value,
            impurity,
            split: None,
        });
        if depth >= self.params.max_depth || idx.len() < self.params.min_samples || impurity <= 0.0
        {
            return id;
        }
        let Some((feature, threshold, child)) = self.best_split(&idx) else {
            return id;
        };
        if child >= impurity - 1e-15 {
            return id;
        }
        let (l, r): (Vec<usize>, Vec<usize>) =
            idx.iter().partition(|&&i| self.x[i][feature] <= threshold);
        let left = self.grow(l, depth + 1);
        let right = self.grow(r, depth + 1);
        self.nodes[id].split = Some(Split {
            feature,
            threshold,
            left,
            right,
        });
        id
    }
}

/// Keeps the first candidate among equal scores, so ties resolve to the
/// lowest feature index and then the lowest threshold.
fn consider(best: &mut Option<(usize, f64, f64)>, feature: usize, threshold: f64, score: f64) {
    let tol = 1e-12 * score.abs().max(1.0);
    if best.is_none_or(|(_, _, s)| score < s - tol) {
        *best = Some((feature, threshold, score));
    }
}

pub(crate) fn validate(x: &[Vec<f64>], y: &[f64], min: usize) -> Result<usize> {
    if x.len() != y.len() {
        return Err(Error::InvalidArgument(format!(
            "{} rows but {} targets",
            x.len(),
            y.len()
        )));
    }
    if x.is_empty() || x.len() < min {
        return Err(Error::InsufficientData(format!(
            "need at least {min} samples, got {}",
            x.len()
        )));
    }
    let d = x[0].len();
    if d == 0 || x.iter().any(|r| r.len() != d) {
        return Err(Error::InvalidArgument(
            "rows must share a positive width".into(),
        ));
    }
    Ok(d)
}

impl DecisionTree {
    pub fn fit(x: &[Vec<f64>], y: &[f64], params: &TreeParams) -> Result<Self> {
        Self::fit_with_rng::<rand_chacha::ChaCha8Rng>(x, y, params, None)
    }

    pub(crate) fn fit_with_rng<R: Rng>(
        x: &[Vec<f64>],
        y: &[f64],
        params: &TreeParams,
        rng: Option<&mut R>,
    ) -> Result<Self> {
        let d = validate(x, y, params.min_samples.max(1))?;
        let n_classes = match params.criterion {
            Criterion::Gini => {
                if y.iter().any(|&v| v < 0.0 || v.fract() != 0.0) {
                    return Err(Error::InvalidArgument(
                        "Gini trees need non-negative integer labels".into(),
                    ));
                }
                y.iter().fold(0.0f64, |m, &v| m.max(v)) as usize + 1
            }
            Criterion::Mse => 1,
        };
        let mut b = Builder {
            x,
            y,
            params: *params,
            n_classes,
            rng,
            nodes: Vec::new(),
        };
        b.grow((0..x.len()).collect(), 0);
        Ok(DecisionTree {
            criterion: params.criterion,
            n_classes,
            n_features: d,
            nodes: b.nodes,
        })
    }

    fn leaf(&self, row: &[f64]) -> &TreeNode {
        let mut n = &self.nodes[0];
        while let Some(s) = n.split {
            n = &self.nodes[if row[s.feature] <= s.threshold {
                s.left
            } else {
                s.right
            }];
        }
        n
    }

    /// Class frequencies or `[mean]` at the reached leaf.
    pub fn predict_value(&self, row: &[f64]) -> &[f64] {
        &self.leaf(row).value
    }

    /// Majority class (lowest index on ties) or the leaf mean.
    pub fn predict(&self, row: &[f64]) -> f64 {
        let v = self.predict_value(row);
        match self.criterion {
            Criterion::Gini => argmax(v) as f64,
            Criterion::Mse => v[0],
        }
    }

    pub fn depth(&self) -> usize {
        self.nodes.iter().map(|n| n.depth).max().unwrap_or(0)
    }

    /// Split features in breadth-first order (root first).
    pub fn split_features(&self) -> Vec<(usize, f64)> {
        let mut out = Vec::new();
        let mut queue = std::collections::VecDeque::from([0usize]);
        while let Some(i) = queue.pop_front() {
            if let Some(s) = self.nodes[i].split {
                out.push((s.feature, s.threshold));
                queue.push_back(s.left);
                queue.push_back(s.right);
            }
        }
        out
    }

    /// Indented if/else rules. `threshold_map` converts a stored threshold
    /// of a feature into display units (e.g. undoing normalization).
    pub fn to_text(&self, names: &[String], threshold_map: &dyn Fn(usize, f64) -> f64) -> String {
        let mut out = String::new();
        self.write_rules(0, 0, names, threshold_map, &mut out);
        out
    }

    fn write_rules(
        &self,
        i: usize,
        indent: usize,
        names: &[String],
        map: &dyn Fn(usize, f64) -> f64,
        out: &mut String,
    ) {
        let pad = "  ".repeat(indent);
        let n = &self.nodes[i];
        match n.split {
            Some(s) => {
                let name = names
                    .get(s.feature)
                    .cloned()
                    .unwrap_or_else(|| format!("x{}", s.feature));
                let t = map(s.feature, s.threshold);
                let _ = writeln!(out, "{pad}if {name} <= {t:.4}:  # n={}", n.samples);
                self.write_rules(s.left, indent + 1, names, map, out);
                let _ = writeln!(out, "{pad}else:  # {name} > {t:.4}");
                self.write_rules(s.right, indent + 1, names, map, out);
            }
            None => {
                let v: Vec<String> = n.value.iter().map(|v| format!("{v:.4}")).collect();
                let _ = writeln!(out, "{pad}leaf n={} value=[{}]", n.samples, v.join(", "));
            }
        }
    }

    /// One node per line: `id feature threshold left right` (internal) or
    /// `id leaf value...`.
    pub fn to_graph_description(
        &self,
        names: &[String],
        threshold_map: &dyn Fn(usize, f64) -> f64,
    ) -> String {
        let mut out = String::from("# id\tfeature\tthreshold\tleft\tright\n");
        for n in &self.nodes {
            match n.split {
                Some(s) => {
                    let name = names
                        .get(s.feature)
                        .cloned()
                        .unwrap_or_else(|| format!("x{}", s.feature));
                    let _ = writeln!(
                        out,
                        "{}\t{}\t{}\t{}\t{}",
                        n.id,
                        name,
                        threshold_map(s.feature, s.threshold),
                        s.left,
                        s.right
                    );
                }
                None => {
                    let v: Vec<String> = n.value.iter().map(|v| v.to_string()).collect();
                    let _ = writeln!(out, "{}\tleaf\t{}\t-\t-", n.id, v.join(","));
                }
            }
        }
        out
    }
}

pub(crate) fn argmax(v: &[f64]) -> usize {
    let mut best = 0;
    for (i, &x) in v.iter().enumerate() {
        if x > v[best] {
            best = i;
        }
    }
    best
}
