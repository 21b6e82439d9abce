use serde::{Deserialize, Serialize};

use super::series::{FactorSeries, FactorVector, ZSCORE_SLOTS};
use crate::error::{Error, Result};

const Z_COUNT: usize = ZSCORE_SLOTS.end - ZSCORE_SLOTS.start;

/// Per-slot mean and population standard deviation of the z-scored slots.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NormalizationStats {
    pub mean: [f64; Z_COUNT],
    pub std: [f64; Z_COUNT],
}

/// Fits statistics over every vector of every series.
pub fn fit_zscore<'a>(
    series: impl IntoIterator<Item = &'a FactorSeries>,
) -> Result<NormalizationStats> {
    fit_zscore_vectors(series.into_iter().flat_map(|s| s.vectors.iter()))
}

pub fn fit_zscore_vectors<'a>(
    vectors: impl IntoIterator<Item = &'a FactorVector>,
) -> Result<NormalizationStats> {
    let mut n = 0usize;
    let mut sum = [0.0; Z_COUNT];
    let rows: Vec<&FactorVector> = vectors.into_iter().collect();
    for v in &rows {
        for (i, s) in ZSCORE_SLOTS.enumerate() {
            sum[i] += v[s];
        }
        n += 1;
    }
    if n < 2 {
        return Err(Error::InsufficientData(format!(
            "z-score fit needs at least 2 vectors, got {n}"
        )));
    }
    let mean = sum.map(|s| s / n as f64);
    let mut var = [0.0; Z_COUNT];
    for v in &rows {
        for (i, s) in ZSCORE_SLOTS.enumerate() {
            var[i] += (v[s] - mean[i]).powi(2);
        }
    }
    let std = var.map(|s| (s / n as f64).sqrt());
    for (i, &sd) in std.iter().enumerate() {
        if sd == 0.0 {
            log::warn!(
                "slot {} is constant over the training set; left unscaled",
                ZSCORE_SLOTS.start + i
            );
        }
    }
    Ok(NormalizationStats { mean, std })
}

impl NormalizationStats {
    pub fn apply_vector(&self, v: &mut FactorVector) {
        for (i, s) in ZSCORE_SLOTS.enumerate() {
            if self.std[i] > 0.0 {
                v[s] = (v[s] - self.mean[i]) / self.std[i];
            }
        }
    }

    /// Maps a z-scored value of `slot` back to raw units.
    pub fn invert(&self, slot: usize, z: f64) -> f64 {
        if !ZSCORE_SLOTS.contains(&slot) {
            return z;
        }
        let i = slot - ZSCORE_SLOTS.start;
        if self.std[i] > 0.0 {
            z * self.std[i] + self.mean[i]
        } else {
            z
        }
    }
}

pub fn apply_zscore(series: &FactorSeries, stats: &NormalizationStats) -> FactorSeries {
    let mut out = series.clone();
    out.vectors.iter_mut().for_each(|v| stats.apply_vector(v));
    out
}
