use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::{Society, Year};
use crate::error::{Error, Result};
use crate::factors::{
    assemble_series, FactorSeries, FeatureContext, NormalizationStats, FACTOR_DIM,
};
use crate::nn::{ExampleView, GraphInput, Sample};
use crate::tensor::Tensor;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    Classification,
    Regression,
}

impl Mode {
    pub fn label(self) -> &'static str {
        match self {
            Mode::Classification => "classification",
            Mode::Regression => "regression",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DatasetOptions {
    pub t_max: usize,
    /// Restrict to one society's scholars plus the non-member pool.
    pub society: Option<Society>,
    /// Attach per-year ego-subgraph inputs for trained-GCN models.
    pub with_graphs: bool,
}

impl Default for DatasetOptions {
    fn default() -> Self {
        DatasetOptions {
            t_max: 50,
            society: None,
            with_graphs: false,
        }
    }
}

/// One model input: a left-padded `t_max × 36` matrix with its mask.
#[derive(Debug, Clone, PartialEq)]
pub struct SequenceExample {
    pub scholar_id: String,
    pub society: Society,
    pub elected_year: Option<Year>,
    pub as_of_year: Year,
    pub matrix: Tensor<f64>,
    pub mask: Vec<bool>,
    /// 1/0 for classification, remaining years for regression.
    pub label: f64,
    /// One graph per real row, oldest first, when requested.
    pub graphs: Option<Vec<GraphInput<f64>>>,
}

impl SequenceExample {
    pub fn real_rows(&self) -> usize {
        self.mask.iter().filter(|&&m| m).count()
    }

    pub fn view(&self) -> ExampleView<'_, f64> {
        let v = ExampleView::new(&self.matrix, &self.mask);
        match &self.graphs {
            Some(g) => v.with_graphs(g),
            None => v,
        }
    }

    pub fn sample(&self) -> Sample<'_, f64> {
        Sample {
            view: self.view(),
            target: self.label,
        }
    }

    /// Row-major flattening of the padded matrix, for the classical baselines.
    pub fn flattened(&self) -> &[f64] {
        self.matrix.data()
    }

    /// Last real row (the as-of year).
    pub fn last_row(&self) -> &[f64] {
        self.matrix.row(self.matrix.rows() - 1)
    }
}

/// Left-pads `series` with zero rows to `t_max`; longer series lose their
/// oldest years.
pub fn pad_and_mask(series: &FactorSeries, t_max: usize) -> (Tensor<f64>, Vec<bool>) {
    let len = series.len();
    let skip = len.saturating_sub(t_max);
    if skip > 0 {
        log::warn!(
            "series of {} has {len} years; dropping the oldest {skip} to fit t_max {t_max}",
            series.scholar_id
        );
    }
    let kept = &series.vectors[skip..];
    let pad = t_max - kept.len();
    let mut data = vec![0.0; t_max * FACTOR_DIM];
    for (i, v) in kept.iter().enumerate() {
        data[(pad + i) * FACTOR_DIM..(pad + i + 1) * FACTOR_DIM].copy_from_slice(v);
    }
    let mask = (0..t_max).map(|r| r >= pad).collect();
    (Tensor::matrix(t_max, FACTOR_DIM, data), mask)
}

fn in_scope(society: Society, filter: Option<Society>) -> bool {
    match filter {
        None => true,
        Some(s) => society == s || society == Society::Non,
    }
}

fn example(
    ctx: &FeatureContext<'_>,
    series: &FactorSeries,
    as_of: Year,
    label: f64,
    opts: &DatasetOptions,
) -> Result<SequenceExample> {
    let scholar = ctx.corpus().scholar(&series.scholar_id)?;
    let (matrix, mask) = pad_and_mask(series, opts.t_max);
    let graphs = if opts.with_graphs {
        let real = mask.iter().filter(|&&m| m).count();
        let first = as_of - real as Year + 1;
        Some(
            (first..=as_of)
                .map(|y| ctx.circle_graph(&series.scholar_id, y))
                .collect::<Result<Vec<_>>>()?,
        )
    } else {
        None
    };
    Ok(SequenceExample {
        scholar_id: series.scholar_id.clone(),
        society: scholar.society,
        elected_year: scholar.elected_year,
        as_of_year: as_of,
        matrix,
        mask,
        label,
        graphs,
    })
}

/// One example per in-scope scholar with sequence `sy..=cy`; label 1 iff
/// elected on or before `cy`. Scholars starting after `cy` are skipped.
pub fn build_classification(
    ctx: &FeatureContext<'_>,
    cy: Year,
    opts: &DatasetOptions,
) -> Result<Vec<SequenceExample>> {
    if opts.t_max == 0 {
        return Err(Error::Config("t_max must be positive".into()));
    }
    let scholars: Vec<_> = ctx
        .corpus()
        .scholars()
        .iter()
        .filter(|s| in_scope(s.society, opts.society))
        .filter(|s| {
            let keep = s.first_pub_year <= cy;
            if !keep {
                log::info!(
                    "skipping {}: first publication {} after cy {cy}",
                    s.id,
                    s.first_pub_year
                );
            }
            keep
        })
        .collect();
    scholars
        .par_iter()
        .map(|s| {
            let series = assemble_series(ctx, &s.id, cy)?;
            let label = if s.is_fellow_at(cy) { 1.0 } else { 0.0 };
            example(ctx, &series, cy, label, opts)
        })
        .collect()
}

/// For every Fellow with `ey >= sy + 8`, one example per `y` in
/// `sy+8..=ey`, targeting `ey - y`.
pub fn build_regression(
    ctx: &FeatureContext<'_>,
    opts: &DatasetOptions,
) -> Result<Vec<SequenceExample>> {
    if opts.t_max == 0 {
        return Err(Error::Config("t_max must be positive".into()));
    }
    let fellows: Vec<_> = ctx
        .corpus()
        .scholars()
        .iter()
        .filter(|s| in_scope(s.society, opts.society))
        .filter_map(|s| s.elected_year.map(|ey| (s, ey)))
        .filter(|(s, ey)| {
            let keep = *ey >= s.first_pub_year + 8;
            if !keep {
                log::info!(
                    "skipping {}: elected {ey} less than 8 years after {}",
                    s.id,
                    s.first_pub_year
                );
            }
            keep
        })
        .collect();
    let per_fellow = fellows
        .par_iter()
        .map(|(s, ey)| {
            let full = assemble_series(ctx, &s.id, *ey)?;
            (s.first_pub_year + 8..=*ey)
                .map(|y| example(ctx, &full.through(y)?, y, f64::from(ey - y), opts))
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(per_fellow.into_iter().flatten().collect())
}

/// Z-score statistics over the real rows of `examples`.
pub fn fit_normalization(examples: &[SequenceExample]) -> Result<NormalizationStats> {
    let rows: Vec<[f64; FACTOR_DIM]> = examples
        .iter()
        .flat_map(|e| {
            e.mask
                .iter()
                .enumerate()
                .filter(|(_, &m)| m)
                .map(move |(r, _)| {
                    let mut v = [0.0; FACTOR_DIM];
                    v.copy_from_slice(e.matrix.row(r));
                    v
                })
        })
        .collect();
    crate::factors::fit_zscore_vectors(&rows)
}

/// Applies `stats` to the real rows; padding stays zero.
pub fn normalize_examples(examples: &mut [SequenceExample], stats: &NormalizationStats) {
    for e in examples {
        for r in 0..e.mask.len() {
            if e.mask[r] {
                let row = e.matrix.row_mut(r);
                let mut v = [0.0; FACTOR_DIM];
                v.copy_from_slice(row);
                stats.apply_vector(&mut v);
                row.copy_from_slice(&v);
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn series(len: usize) -> FactorSeries {
        FactorSeries {
            scholar_id: "s".into(),
            first_year: 1990,
            vectors: (0..len).map(|i| [i as f64 + 1.0; FACTOR_DIM]).collect(),
        }
    }

    #[test]
    fn padding_arithmetic() {
        let (m, mask) = pad_and_mask(&series(40), 50);
        assert_eq!(mask.iter().filter(|&&b| !b).count(), 10);
        assert!(mask[10..].iter().all(|&b| b));
        assert!(m.row(9).iter().all(|&x| x == 0.0));
        assert_eq!(m.row(10)[0], 1.0);
        assert_eq!(m.row(49)[0], 40.0);

        let (_, mask) = pad_and_mask(&series(50), 50);
        assert!(mask.iter().all(|&b| b));

        let (m, mask) = pad_and_mask(&series(55), 50);
        assert!(mask.iter().all(|&b| b));
        assert_eq!(m.row(0)[0], 6.0);
        assert_eq!(m.row(49)[0], 55.0);
    }
}
