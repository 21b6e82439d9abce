use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::factors::{slot_family, slot_names, FACTOR_DIM, FAMILY_NAMES};
use crate::nn::{CareerModel, ExampleView};
use crate::scalar::Scalar;
use crate::tensor::Tensor;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FragmentTable {
    pub examples: usize,
    pub heads: usize,
    pub slot_counts: Vec<usize>,
    /// Percentages over the 36 slots, summing to 100.
    pub slot_percent: Vec<f64>,
    /// The same percentages grouped into the eight factor families.
    pub family_percent: Vec<f64>,
}

impl FragmentTable {
    fn from_counts(examples: usize, heads: usize, slot_counts: Vec<usize>) -> Self {
        let total: usize = slot_counts.iter().sum();
        let slot_percent: Vec<f64> = slot_counts
            .iter()
            .map(|&c| {
                if total == 0 {
                    0.0
                } else {
                    100.0 * c as f64 / total as f64
                }
            })
            .collect();
        let mut family_percent = vec![0.0; FAMILY_NAMES.len()];
        for (s, p) in slot_percent.iter().enumerate() {
            family_percent[slot_family(s)] += p;
        }
        FragmentTable {
            examples,
            heads,
            slot_counts,
            slot_percent,
            family_percent,
        }
    }

    pub fn slots_csv(&self) -> String {
        let mut out = String::from("slot,name,family,count,percent\n");
        for (s, name) in slot_names().iter().enumerate() {
            out.push_str(&format!(
                "{s},{name},{},{},{}\n",
                FAMILY_NAMES[slot_family(s)],
                self.slot_counts[s],
                self.slot_percent[s]
            ));
        }
        out
    }

    pub fn families_csv(&self) -> String {
        let mut out = String::from("family,percent\n");
        for (f, p) in FAMILY_NAMES.iter().zip(&self.family_percent) {
            out.push_str(&format!("{f},{p}\n"));
        }
        out
    }
}

fn argmax(values: impl Iterator<Item = f64>) -> Option<usize> {
    let mut best: Option<(usize, f64)> = None;
    for (i, v) in values.enumerate() {
        if best.is_none_or(|(_, b)| v > b) {
            best = Some((i, v));
        }
    }
    best.map(|(i, _)| i)
}

/// The real input row receiving the most attention (summed over real query
/// rows) and that row's largest slot. Ties go to the earliest row and the
/// lowest slot.
pub fn fragment_slot<T: Scalar>(
    attention: &Tensor<T>,
    matrix: &Tensor<T>,
    mask: &[bool],
) -> Option<(usize, usize)> {
    let real: Vec<usize> = (0..mask.len()).filter(|&r| mask[r]).collect();
    let received = real.iter().map(|&k| {
        real.iter()
            .map(|&q| attention.at(q, k).as_f64())
            .sum::<f64>()
    });
    let row = real[argmax(received)?];
    let slot = argmax(matrix.row(row).iter().map(|v| v.as_f64()))?;
    Some((row, slot))
}

/// Slot frequencies of the most-attended input rows of the first encoder
/// layer, one selection per example and head.
pub fn attention_fragments<T: Scalar>(
    model: &CareerModel<T>,
    examples: &[ExampleView<'_, T>],
) -> Result<FragmentTable> {
    if examples.is_empty() {
        return Err(Error::InsufficientData(
            "no examples for attention fragments".into(),
        ));
    }
    let heads = model.config().n_heads;
    let per_example: Vec<Vec<usize>> = examples
        .par_iter()
        .map(|ex| {
            let weights = model.all_attention_weights(ex, 0)?;
            Ok(weights
                .iter()
                .filter_map(|w| fragment_slot(w, ex.matrix, ex.mask).map(|(_, s)| s))
                .collect())
        })
        .collect::<Result<_>>()?;
    let mut counts = vec![0usize; FACTOR_DIM];
    for slots in per_example {
        for s in slots {
            counts[s] += 1;
        }
    }
    Ok(FragmentTable::from_counts(examples.len(), heads, counts))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::ModelConfig;

    fn frame(t_max: usize, real: usize, hot: &[(usize, usize)]) -> (Tensor<f64>, Vec<bool>) {
        let mut m = Tensor::zeros(&[t_max, FACTOR_DIM]);
        for &(r, s) in hot {
            m.set(r, s, 5.0);
        }
        let mask = (0..t_max).map(|r| r >= t_max - real).collect();
        (m, mask)
    }

    #[test]
    fn forced_attention_counts_by_hand() {
        let (m, mask) = frame(4, 3, &[(1, 3), (2, 7), (3, 30)]);
        // head 0 attends to row 2, head 1 to row 3
        let mut a0 = Tensor::zeros(&[4, 4]);
        let mut a1 = Tensor::zeros(&[4, 4]);
        for q in 1..4 {
            a0.set(q, 2, 0.9);
            a0.set(q, 1, 0.1);
            a1.set(q, 3, 1.0);
        }
        assert_eq!(fragment_slot(&a0, &m, &mask), Some((2, 7)));
        assert_eq!(fragment_slot(&a1, &m, &mask), Some((3, 30)));
    }

    #[test]
    fn single_year_always_selected() {
        let mut cfg = ModelConfig::regression();
        cfg.d_model = 36;
        cfg.n_layers = 1;
        cfg.n_heads = 2;
        cfg.ffn_dim = 8;
        cfg.t_max = 5;
        cfg.gcn_mode = crate::nn::GcnMode::Frozen;
        let model = CareerModel::<f64>::new(cfg).unwrap();
        let data: Vec<(Tensor<f64>, Vec<bool>)> =
            (0..6).map(|i| frame(5, 1, &[(4, i * 5)])).collect();
        let views: Vec<ExampleView<'_, f64>> =
            data.iter().map(|(m, k)| ExampleView::new(m, k)).collect();
        let t = attention_fragments(&model, &views).unwrap();
        assert_eq!(t.slot_counts.iter().sum::<usize>(), 12);
        for i in 0..6 {
            assert_eq!(t.slot_counts[i * 5], 2);
        }
        assert!((t.slot_percent.iter().sum::<f64>() - 100.0).abs() < 0.1);
        assert!((t.family_percent.iter().sum::<f64>() - 100.0).abs() < 0.1);
    }
}
