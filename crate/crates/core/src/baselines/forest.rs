use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::tree::{argmax, validate, Criterion, DecisionTree, TreeParams};
use crate::error::Result;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MaxFeatures {
    Sqrt,
    All,
    Count(usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ForestParams {
    pub n_trees: usize,
    pub tree: TreeParams,
    pub bootstrap: bool,
    pub max_features: MaxFeatures,
    pub seed: u64,
}

impl Default for ForestParams {
    fn default() -> Self {
        ForestParams {
            n_trees: 32,
            tree: TreeParams::default(),
            bootstrap: true,
            max_features: MaxFeatures::Sqrt,
            seed: 42,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RandomForest {
    pub criterion: Criterion,
    pub trees: Vec<DecisionTree>,
}

impl RandomForest {
    /// Trees are grown in parallel, each from its own seeded stream.
    pub fn fit(x: &[Vec<f64>], y: &[f64], params: &ForestParams) -> Result<Self> {
        let d = validate(x, y, params.tree.min_samples.max(1))?;
        let k = match params.max_features {
            MaxFeatures::Sqrt => ((d as f64).sqrt().round() as usize).max(1),
            MaxFeatures::All => d,
            MaxFeatures::Count(c) => c.clamp(1, d),
        };
        let tree_params = TreeParams {
            max_features: (k < d).then_some(k),
            ..params.tree
        };
        let trees = (0..params.n_trees.max(1))
            .into_par_iter()
            .map(|t| {
                let mut rng = ChaCha8Rng::seed_from_u64(
                    params.seed ^ (t as u64 + 1).wrapping_mul(0x9E37_79B9_7F4A_7C15),
                );
                if params.bootstrap {
                    let n = x.len();
                    let pick: Vec<usize> = (0..n).map(|_| rng.random_range(0..n)).collect();
                    let xs: Vec<Vec<f64>> = pick.iter().map(|&i| x[i].clone()).collect();
                    let ys: Vec<f64> = pick.iter().map(|&i| y[i]).collect();
                    DecisionTree::fit_with_rng(&xs, &ys, &tree_params, Some(&mut rng))
                } else {
                    DecisionTree::fit_with_rng(x, y, &tree_params, Some(&mut rng))
                }
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(RandomForest {
            criterion: params.tree.criterion,
            trees,
        })
    }

    /// Majority vote (lowest class on ties) or mean of tree predictions.
    pub fn predict(&self, row: &[f64]) -> f64 {
        match self.criterion {
            Criterion::Gini => {
                let classes = self.trees.iter().map(|t| t.n_classes).max().unwrap_or(1);
                let mut votes = vec![0.0; classes];
                for t in &self.trees {
                    votes[t.predict(row) as usize] += 1.0;
                }
                argmax(&votes) as f64
            }
            Criterion::Mse => {
                self.trees.iter().map(|t| t.predict(row)).sum::<f64>() / self.trees.len() as f64
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn data(n: usize, seed: u64) -> (Vec<Vec<f64>>, Vec<f64>) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let x: Vec<Vec<f64>> = (0..n)
            .map(|_| (0..6).map(|_| rng.random_range(0.0..1.0)).collect())
            .collect();
        let y = x
            .iter()
            .map(|r| f64::from(u8::from(r[2] + r[4] > 1.0)))
            .collect();
        (x, y)
    }

    #[test]
    fn degenerate_forest_is_a_tree() {
        let (x, y) = data(200, 1);
        let p = ForestParams {
            n_trees: 1,
            bootstrap: false,
            max_features: MaxFeatures::All,
            ..ForestParams::default()
        };
        let f = RandomForest::fit(&x, &y, &p).unwrap();
        assert_eq!(f.trees[0], DecisionTree::fit(&x, &y, &p.tree).unwrap());
    }

    #[test]
    fn seeded_forests_match() {
        let (x, y) = data(200, 2);
        let a = RandomForest::fit(&x, &y, &ForestParams::default()).unwrap();
        let b = RandomForest::fit(&x, &y, &ForestParams::default()).unwrap();
        assert_eq!(a, b);
    }
}
