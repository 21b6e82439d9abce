//! Classical baselines over flattened sequences: CART, random forest, ridge,
//! least squares and logistic regression.

mod forest;
mod linear;
mod tree;

pub use forest::{ForestParams, MaxFeatures, RandomForest};
pub use linear::{
    logistic_probability, train_linear, train_logistic, train_ridge, LinearModel, LogisticParams,
};
pub use tree::{Criterion, DecisionTree, Split, TreeNode, TreeParams};

use crate::factors::{slot_names, FACTOR_DIM};

/// Column names of a flattened `t_max × 36` matrix; the last row is the
/// as-of year (`@t-0`), earlier rows count back.
pub fn flattened_feature_names(t_max: usize) -> Vec<String> {
    let slots = slot_names();
    (0..t_max)
        .flat_map(|r| {
            let lag = t_max - 1 - r;
            slots.iter().map(move |s| format!("{s}@t-{lag}"))
        })
        .collect()
}

/// Slot index (0..36) of a flattened column.
pub fn flattened_slot(feature: usize) -> usize {
    feature % FACTOR_DIM
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn names_follow_rows() {
        let n = flattened_feature_names(3);
        assert_eq!(n.len(), 108);
        assert_eq!(n[0], "accumulation_time@t-2");
        assert_eq!(n[72 + 6], "total_citations@t-0");
        assert_eq!(flattened_slot(78), 6);
    }
}
