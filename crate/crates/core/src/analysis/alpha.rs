use log::info;
use rayon::prelude::*;
use serde::Serialize;

use super::stats::quantile;
use super::trajectory::cumulative_publications;
use crate::data::{Corpus, Year};
use crate::error::{Error, Result};
use crate::factors::fit_alpha_cumulative;

/// Shortest window, in years, on either side of the election.
pub const MIN_WINDOW: usize = 3;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AlphaChange {
    pub scholar_id: String,
    pub alpha_pre: f64,
    pub alpha_post: f64,
    pub alpha_diff: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AlphaSummary {
    pub scholars: usize,
    pub skipped: usize,
    /// First quartile, median, third quartile.
    pub pre_quartiles: [f64; 3],
    pub post_quartiles: [f64; 3],
    pub positive: usize,
    pub negative: usize,
    /// Negative count per positive one (the `x` in `1:x`).
    pub negative_per_positive: Option<f64>,
    pub citations_per_paper_pre: f64,
    pub citations_per_paper_post: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AlphaChangeReport {
    pub changes: Vec<AlphaChange>,
    pub skipped: Vec<String>,
    pub summary: AlphaSummary,
}

impl AlphaChangeReport {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("scholar_id,alpha_pre,alpha_post,alpha_diff\n");
        for c in &self.changes {
            out.push_str(&format!(
                "{},{},{},{}\n",
                c.scholar_id, c.alpha_pre, c.alpha_post, c.alpha_diff
            ));
        }
        out
    }
}

/// Exponents fitted on cumulative counts before (through the election year)
/// and after (re-indexed from 1 the year after).
pub fn alpha_pair(pre: &[f64], post: &[f64]) -> Result<(f64, f64)> {
    if pre.len() < MIN_WINDOW || post.len() < MIN_WINDOW {
        return Err(Error::InsufficientData(format!(
            "windows of {} and {} years, need {MIN_WINDOW}",
            pre.len(),
            post.len()
        )));
    }
    Ok((fit_alpha_cumulative(pre)?, fit_alpha_cumulative(post)?))
}

struct Outcome {
    change: AlphaChange,
    cites: [(u64, u64); 2],
}

fn one(corpus: &Corpus, id: &str, horizon: Year) -> Result<Outcome> {
    let s = corpus.scholar(id)?;
    let ey = s
        .elected_year
        .ok_or_else(|| Error::InvalidArgument(format!("{id} is not a Fellow")))?;
    let pre = cumulative_publications(corpus, id, s.first_pub_year, ey)?;
    let post = cumulative_publications(corpus, id, ey + 1, horizon)?;
    let (a1, a2) = alpha_pair(&pre, &post)?;
    let mut cites = [(0u64, 0u64); 2];
    for p in corpus.publications_of(id)? {
        if p.year > horizon {
            continue;
        }
        let slot = usize::from(p.year > ey);
        cites[slot].0 += p.total_citations();
        cites[slot].1 += 1;
    }
    Ok(Outcome {
        change: AlphaChange {
            scholar_id: id.to_string(),
            alpha_pre: a1,
            alpha_post: a2,
            alpha_diff: a2 - a1,
        },
        cites,
    })
}

/// Productivity exponent before and after election for each listed Fellow.
/// Fellows with too short a window or too few publications are skipped and
/// logged.
pub fn alpha_change(corpus: &Corpus, fellows: &[&str], horizon: Year) -> Result<AlphaChangeReport> {
    let results: Vec<(String, Result<Outcome>)> = fellows
        .par_iter()
        .map(|&id| (id.to_string(), one(corpus, id, horizon)))
        .collect();
    let mut changes = Vec::new();
    let mut skipped = Vec::new();
    let mut cites = [(0u64, 0u64); 2];
    for (id, r) in results {
        match r {
            Ok(o) => {
                for (acc, add) in cites.iter_mut().zip(o.cites) {
                    acc.0 += add.0;
                    acc.1 += add.1;
                }
                changes.push(o.change);
            }
            Err(Error::InsufficientData(why)) => {
                info!("alpha change: skipping {id}: {why}");
                skipped.push(id);
            }
            Err(e) => return Err(e),
        }
    }
    if changes.is_empty() {
        return Err(Error::InsufficientData(
            "no Fellow has enough years around election".into(),
        ));
    }
    let quartiles = |f: fn(&AlphaChange) -> f64| -> Result<[f64; 3]> {
        let v: Vec<f64> = changes.iter().map(f).collect();
        Ok([quantile(&v, 0.25)?, quantile(&v, 0.5)?, quantile(&v, 0.75)?])
    };
    let positive = changes.iter().filter(|c| c.alpha_diff > 0.0).count();
    let negative = changes.iter().filter(|c| c.alpha_diff < 0.0).count();
    let per_paper = |(c, n): (u64, u64)| if n == 0 { 0.0 } else { c as f64 / n as f64 };
    let summary = AlphaSummary {
        scholars: changes.len(),
        skipped: skipped.len(),
        pre_quartiles: quartiles(|c| c.alpha_pre)?,
        post_quartiles: quartiles(|c| c.alpha_post)?,
        positive,
        negative,
        negative_per_positive: (positive > 0).then(|| negative as f64 / positive as f64),
        citations_per_paper_pre: per_paper(cites[0]),
        citations_per_paper_post: per_paper(cites[1]),
    };
    Ok(AlphaChangeReport {
        changes,
        skipped,
        summary,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::fixtures::*;

    fn steady_corpus() -> Corpus {
        let mut pubs = Vec::new();
        for y in 1990..=2009 {
            for k in 0..3 {
                pubs.push(publication(&format!("p{y}-{k}"), y, &["f"], &[(y, 2)]));
            }
        }
        pubs.push(publication("q", 1990, &["g"], &[]));
        Corpus::new(
            vec![scholar("f", Some(1999)), scholar("g", Some(2008))],
            pubs,
        )
        .unwrap()
    }

    #[test]
    fn symmetric_career_has_no_change() {
        let c = steady_corpus();
        let r = alpha_change(&c, &["f", "g"], 2009).unwrap();
        assert_eq!(r.changes.len(), 1);
        assert!(r.changes[0].alpha_diff.abs() < 1e-6);
        assert_eq!(r.skipped, vec!["g".to_string()]);
        assert!((r.summary.citations_per_paper_pre - 2.0).abs() < 1e-12);
    }

    #[test]
    fn slowdown_is_negative() {
        let pre: Vec<f64> = (1..=15).map(|t| (t as f64).powf(1.5)).collect();
        let post: Vec<f64> = (1..=15).map(|t| (t as f64).powf(1.05)).collect();
        let (a1, a2) = alpha_pair(&pre, &post).unwrap();
        assert!(a2 - a1 < 0.0);
        let scaled: Vec<f64> = pre.iter().map(|v| v * 7.0).collect();
        let (b1, _) = alpha_pair(&scaled, &post).unwrap();
        assert!((a1 - b1).abs() < 1e-9);
    }

    #[test]
    fn short_windows_rejected() {
        assert!(alpha_pair(&[1.0, 2.0], &[1.0, 2.0, 3.0]).is_err());
    }
}
