use std::collections::BTreeMap;

use sha2::{Digest, Sha256};

use super::build::{Mode, SequenceExample};
use crate::data::Year;
use crate::error::{Error, Result};

/// Share of each (society, label) stratum assigned to training.
pub const TRAIN_FRACTION: f64 = 0.8;

fn rank_key(seed: u64, id: &str) -> [u8; 32] {
    let mut h = Sha256::new();
    h.update(seed.to_le_bytes());
    h.update(id.as_bytes());
    h.finalize().into()
}

/// Calendar-year split.
///
/// Regression: Fellows elected on or before `cy` train, later ones test.
///
/// Classification: Fellows elected after `cy` (negatives at `cy`) go to the
/// test set. Everyone else is split 80/20 within each (society, label)
/// stratum by a seeded hash of the scholar id, so the assignment is
/// reproducible and independent of input order.
pub fn split_by_year(
    examples: Vec<SequenceExample>,
    cy: Year,
    mode: Mode,
    seed: u64,
) -> Result<(Vec<SequenceExample>, Vec<SequenceExample>)> {
    let (train, test): (Vec<_>, Vec<_>) = match mode {
        Mode::Regression => examples
            .into_iter()
            .partition(|e| e.elected_year.is_some_and(|ey| ey <= cy)),
        Mode::Classification => {
            let mut strata: BTreeMap<(u8, bool), Vec<([u8; 32], String)>> = BTreeMap::new();
            for e in &examples {
                if e.elected_year.is_some_and(|ey| ey > cy) {
                    continue;
                }
                strata
                    .entry((e.society as u8, e.label > 0.5))
                    .or_default()
                    .push((rank_key(seed, &e.scholar_id), e.scholar_id.clone()));
            }
            let mut train_ids = std::collections::HashSet::new();
            for members in strata.values_mut() {
                members.sort();
                let k = (members.len() as f64 * TRAIN_FRACTION).round() as usize;
                train_ids.extend(members.drain(..k).map(|(_, id)| id));
            }
            examples
                .into_iter()
                .partition(|e| train_ids.contains(&e.scholar_id))
        }
    };
    if train.is_empty() || test.is_empty() {
        return Err(Error::DegenerateSplit(format!(
            "cy {cy} gives {} train and {} test examples",
            train.len(),
            test.len()
        )));
    }
    Ok((train, test))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::Society;
    use crate::tensor::Tensor;

    fn ex(id: &str, society: Society, elected: Option<Year>, label: f64) -> SequenceExample {
        SequenceExample {
            scholar_id: id.into(),
            society,
            elected_year: elected,
            as_of_year: 2017,
            matrix: Tensor::zeros(&[1, 36]),
            mask: vec![true],
            label,
            graphs: None,
        }
    }

    #[test]
    fn regression_boundary() {
        let (train, test) = split_by_year(
            vec![
                ex("a", Society::Ieee, Some(2016), 3.0),
                ex("b", Society::Ieee, Some(2018), 1.0),
            ],
            2017,
            Mode::Regression,
            1,
        )
        .unwrap();
        assert_eq!(train[0].scholar_id, "a");
        assert_eq!(test[0].scholar_id, "b");
    }

    #[test]
    fn cy_below_all_elections_is_degenerate() {
        let r = split_by_year(
            vec![
                ex("a", Society::Acm, Some(2016), 0.0),
                ex("b", Society::Acm, Some(2018), 0.0),
            ],
            2010,
            Mode::Regression,
            1,
        );
        assert!(matches!(r, Err(Error::DegenerateSplit(_))));
    }

    #[test]
    fn classification_strata_and_future_fellows() {
        let mut all = Vec::new();
        for i in 0..50 {
            all.push(ex(&format!("n{i}"), Society::Non, None, 0.0));
        }
        for i in 0..20 {
            all.push(ex(&format!("f{i}"), Society::Acm, Some(2010), 1.0));
        }
        all.push(ex("future", Society::Acm, Some(2019), 0.0));
        let (train, test) = split_by_year(all.clone(), 2017, Mode::Classification, 9).unwrap();
        assert_eq!(train.iter().filter(|e| e.label > 0.5).count(), 16);
        assert_eq!(train.len(), 16 + 40);
        assert!(test.iter().any(|e| e.scholar_id == "future"));
        let mut shuffled = all;
        shuffled.reverse();
        let (train2, _) = split_by_year(shuffled, 2017, Mode::Classification, 9).unwrap();
        let mut a: Vec<_> = train.iter().map(|e| &e.scholar_id).collect();
        let mut b: Vec<_> = train2.iter().map(|e| &e.scholar_id).collect();
        a.sort();
        b.sort();
        assert_eq!(a, b);
    }
}
