use serde::Serialize;
use statrs::distribution::{ContinuousCDF, Normal};

use crate::error::{Error, Result};

/// Largest group size for which [`mann_whitney`] computes the exact null
/// distribution.
pub const EXACT_LIMIT: usize = 8;

pub fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Standard deviation with divisor `n - ddof`.
pub fn std_dev(xs: &[f64], ddof: usize) -> f64 {
    if xs.len() <= ddof {
        return 0.0;
    }
    let m = mean(xs);
    (xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (xs.len() - ddof) as f64).sqrt()
}

/// Quantile by linear interpolation between order statistics
/// (`h = (n - 1) p`).
pub fn quantile(xs: &[f64], p: f64) -> Result<f64> {
    if xs.is_empty() {
        return Err(Error::InsufficientData(
            "quantile of an empty sample".into(),
        ));
    }
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::InvalidArgument(format!(
            "quantile level {p} outside [0, 1]"
        )));
    }
    let mut s = xs.to_vec();
    s.sort_by(f64::total_cmp);
    let h = (s.len() - 1) as f64 * p;
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    Ok(s[lo] + (h - lo as f64) * (s[hi] - s[lo]))
}

pub fn median(xs: &[f64]) -> Result<f64> {
    quantile(xs, 0.5)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MannWhitney {
    /// Pairs `(a, b)` with `a > b`, ties counting one half.
    pub u: f64,
    /// Two-sided p-value.
    pub p: f64,
    pub exact: bool,
}

/// Midranks (1-based) of the pooled sample, plus the tie-group sizes.
fn midranks(pooled: &[f64]) -> (Vec<f64>, Vec<usize>) {
    let mut order: Vec<usize> = (0..pooled.len()).collect();
    order.sort_by(|&a, &b| pooled[a].total_cmp(&pooled[b]));
    let mut ranks = vec![0.0; pooled.len()];
    let mut ties = Vec::new();
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && pooled[order[j + 1]] == pooled[order[i]] {
            j += 1;
        }
        let r = (i + j + 2) as f64 / 2.0;
        for &k in &order[i..=j] {
            ranks[k] = r;
        }
        ties.push(j - i + 1);
        i = j + 1;
    }
    (ranks, ties)
}

struct Ranked {
    ranks: Vec<f64>,
    ties: Vec<usize>,
    na: usize,
    nb: usize,
    u: f64,
}

fn rank_samples(a: &[f64], b: &[f64]) -> Result<Ranked> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::InsufficientData(
            "Mann-Whitney needs two non-empty samples".into(),
        ));
    }
    if a.iter().chain(b).any(|x| !x.is_finite()) {
        return Err(Error::InvalidArgument(
            "Mann-Whitney samples must be finite".into(),
        ));
    }
    let (na, nb) = (a.len(), b.len());
    let pooled: Vec<f64> = a.iter().chain(b).copied().collect();
    let (ranks, ties) = midranks(&pooled);
    let ra: f64 = ranks[..na].iter().sum();
    let u = ra - (na * (na + 1)) as f64 / 2.0;
    Ok(Ranked {
        ranks,
        ties,
        na,
        nb,
        u,
    })
}

/// Mann–Whitney U test. Exact two-sided p when both samples have at most
/// [`EXACT_LIMIT`] values, otherwise the normal approximation with tie and
/// continuity corrections.
pub fn mann_whitney(a: &[f64], b: &[f64]) -> Result<MannWhitney> {
    if a.len().max(b.len()) <= EXACT_LIMIT {
        mann_whitney_exact(a, b)
    } else {
        mann_whitney_normal(a, b)
    }
}

/// Exact null distribution over all equally likely rank assignments; cost
/// grows with the pooled size, so keep samples small.
pub fn mann_whitney_exact(a: &[f64], b: &[f64]) -> Result<MannWhitney> {
    let r = rank_samples(a, b)?;
    let mu = (r.na * r.nb) as f64 / 2.0;
    Ok(MannWhitney {
        u: r.u,
        p: exact_p(&r.ranks, r.na, r.u - mu),
        exact: true,
    })
}

pub fn mann_whitney_normal(a: &[f64], b: &[f64]) -> Result<MannWhitney> {
    let r = rank_samples(a, b)?;
    let (na, nb) = (r.na, r.nb);
    let mu = (na * nb) as f64 / 2.0;
    let n = (na + nb) as f64;
    let tie_term = if n > 1.0 {
        r.ties.iter().map(|&t| (t * t * t - t) as f64).sum::<f64>() / (n * (n - 1.0))
    } else {
        0.0
    };
    let var = (na * nb) as f64 / 12.0 * ((n + 1.0) - tie_term);
    let p = if var <= 0.0 {
        1.0
    } else {
        let z = ((r.u - mu).abs() - 0.5).max(0.0) / var.sqrt();
        (2.0 * Normal::standard().sf(z)).min(1.0)
    };
    Ok(MannWhitney {
        u: r.u,
        p,
        exact: false,
    })
}

/// Null distribution of the rank sum of `na` values drawn from the pooled
/// midranks, counted over doubled ranks so ties stay integral.
fn exact_p(ranks: &[f64], na: usize, deviation: f64) -> f64 {
    let doubled: Vec<usize> = ranks.iter().map(|r| (2.0 * r).round() as usize).collect();
    let max_sum: usize = doubled.iter().sum();
    // counts[k][s]: subsets of size k with doubled rank sum s
    let mut counts = vec![vec![0.0f64; max_sum + 1]; na + 1];
    counts[0][0] = 1.0;
    for &r in &doubled {
        for k in (1..=na).rev() {
            let (lower, upper) = counts.split_at_mut(k);
            let (prev, cur) = (&lower[k - 1], &mut upper[0]);
            for s in (r..=max_sum).rev() {
                cur[s] += prev[s - r];
            }
        }
    }
    let total: f64 = counts[na].iter().sum();
    let offset = (na * (na + 1)) as f64;
    let mu2 = (na * (ranks.len() - na)) as f64;
    let observed = 2.0 * deviation.abs();
    let hits: f64 = counts[na]
        .iter()
        .enumerate()
        .filter(|&(s, &c)| c > 0.0 && ((s as f64 - offset) - mu2).abs() >= observed - 1e-9)
        .map(|(_, &c)| c)
        .sum();
    (hits / total).min(1.0)
}
