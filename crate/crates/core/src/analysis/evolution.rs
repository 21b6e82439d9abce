use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::stats::median;
use crate::data::{Corpus, Society, Year};
use crate::error::{Error, Result};
use crate::graph::{build_graph, fellow_proximity};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CohortSpec {
    /// Inclusive range of first-publication years.
    pub first_pub: (Year, Year),
    /// Fellows must be elected strictly after this year.
    pub elected_after: Year,
    pub society: Option<Society>,
}

impl Default for CohortSpec {
    fn default() -> Self {
        CohortSpec {
            first_pub: (1995, 2000),
            elected_after: 2015,
            society: None,
        }
    }
}

impl CohortSpec {
    /// (Fellow cohort, never-elected cohort), ids in corpus order.
    pub fn cohorts<'c>(&self, corpus: &'c Corpus) -> (Vec<&'c str>, Vec<&'c str>) {
        let (lo, hi) = self.first_pub;
        let mut fellows = Vec::new();
        let mut others = Vec::new();
        for s in corpus.scholars() {
            if s.first_pub_year < lo || s.first_pub_year > hi {
                continue;
            }
            match s.elected_year {
                Some(ey)
                    if ey > self.elected_after
                        && self.society.is_none_or(|soc| soc == s.society) =>
                {
                    fellows.push(s.id.as_str())
                }
                None => others.push(s.id.as_str()),
                _ => {}
            }
        }
        (fellows, others)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EvolutionPoint {
    /// Years since the first publication.
    pub t: usize,
    pub members: usize,
    pub median_neighbor: f64,
    pub median_collab: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EvolutionCurve {
    pub cohort: String,
    pub hops: usize,
    pub points: Vec<EvolutionPoint>,
}

impl EvolutionCurve {
    pub fn at(&self, t: usize) -> Option<&EvolutionPoint> {
        self.points.iter().find(|p| p.t == t)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CohortComparison {
    pub hops: usize,
    pub fellow: EvolutionCurve,
    pub non_fellow: EvolutionCurve,
}

impl CohortComparison {
    fn csv(&self, pick: fn(&EvolutionPoint) -> f64) -> String {
        let mut out =
            String::from("t,fellow_members,fellow_median,non_fellow_members,non_fellow_median\n");
        let ts: std::collections::BTreeSet<usize> = self
            .fellow
            .points
            .iter()
            .chain(&self.non_fellow.points)
            .map(|p| p.t)
            .collect();
        for t in ts {
            let cell = |c: &EvolutionCurve| match c.at(t) {
                Some(p) => (p.members.to_string(), pick(p).to_string()),
                None => ("0".into(), String::new()),
            };
            let (fm, fv) = cell(&self.fellow);
            let (nm, nv) = cell(&self.non_fellow);
            out.push_str(&format!("{t},{fm},{fv},{nm},{nv}\n"));
        }
        out
    }

    pub fn neighbors_csv(&self) -> String {
        self.csv(|p| p.median_neighbor)
    }

    pub fn collab_csv(&self) -> String {
        self.csv(|p| p.median_collab)
    }
}

/// Median Fellow proximity of each cohort by accumulation year, for every
/// requested hop scope. Graphs are built once per calendar year, with
/// Fellow labels as of that year; years after `horizon` are not observed.
pub fn cohort_curves(
    corpus: &Corpus,
    cohorts: &[(&str, &[&str])],
    hops: &[usize],
    horizon: Year,
) -> Result<Vec<Vec<EvolutionCurve>>> {
    for (name, members) in cohorts {
        if members.is_empty() {
            return Err(Error::InsufficientData(format!("cohort {name:?} is empty")));
        }
    }
    if let Some(&h) = hops.iter().find(|&&h| !(1..=3).contains(&h)) {
        return Err(Error::InvalidArgument(format!(
            "hops must be in 1..=3, got {h}"
        )));
    }
    let mut years = std::collections::BTreeSet::new();
    for (_, members) in cohorts {
        for id in *members {
            let sy = corpus.scholar(id)?.first_pub_year;
            years.extend(sy..=horizon);
        }
    }
    // year -> per cohort, per member: proximity for each hop scope
    type Snapshot = Vec<Vec<Option<Vec<(f64, f64)>>>>;
    let snapshots: BTreeMap<Year, Snapshot> = years
        .into_par_iter()
        .map(|year| {
            let g = build_graph(corpus, year);
            let per = cohorts
                .iter()
                .map(|(_, members)| {
                    members
                        .iter()
                        .map(|id| {
                            if corpus.scholar(id)?.first_pub_year > year {
                                return Ok(None);
                            }
                            hops.iter()
                                .map(|&h| {
                                    fellow_proximity(&g, id, h)
                                        .map(|p| (p.n_neighbor as f64, p.n_collab as f64))
                                })
                                .collect::<Result<Vec<_>>>()
                                .map(Some)
                        })
                        .collect::<Result<Vec<_>>>()
                })
                .collect::<Result<Vec<_>>>()?;
            Ok((year, per))
        })
        .collect::<Result<_>>()?;

    let mut out = Vec::with_capacity(cohorts.len());
    for (c, (name, members)) in cohorts.iter().enumerate() {
        let starts: Vec<Year> = members
            .iter()
            .map(|id| corpus.scholar(id).map(|s| s.first_pub_year))
            .collect::<Result<_>>()?;
        let longest = starts
            .iter()
            .map(|&sy| (horizon - sy).max(-1))
            .max()
            .unwrap_or(-1);
        let mut curves = Vec::with_capacity(hops.len());
        for (k, &h) in hops.iter().enumerate() {
            let mut points = Vec::new();
            for t in 0..=longest {
                let mut nb = Vec::new();
                let mut cl = Vec::new();
                for (m, &sy) in starts.iter().enumerate() {
                    let year = sy + t;
                    if year > horizon {
                        continue;
                    }
                    if let Some(Some(v)) = snapshots.get(&year).map(|s| &s[c][m]) {
                        nb.push(v[k].0);
                        cl.push(v[k].1);
                    }
                }
                if nb.is_empty() {
                    continue;
                }
                points.push(EvolutionPoint {
                    t: t as usize,
                    members: nb.len(),
                    median_neighbor: median(&nb)?,
                    median_collab: median(&cl)?,
                });
            }
            curves.push(EvolutionCurve {
                cohort: name.to_string(),
                hops: h,
                points,
            });
        }
        out.push(curves);
    }
    Ok(out)
}

/// Fellow cohort against the never-elected cohort, one comparison per hop
/// scope.
pub fn coauthor_evolution(
    corpus: &Corpus,
    spec: &CohortSpec,
    hops: &[usize],
    horizon: Year,
) -> Result<Vec<CohortComparison>> {
    let (fellows, others) = spec.cohorts(corpus);
    let mut curves = cohort_curves(
        corpus,
        &[("fellow", &fellows), ("non_fellow", &others)],
        hops,
        horizon,
    )?;
    let non_fellow = curves.pop().expect("two cohorts");
    let fellow = curves.pop().expect("two cohorts");
    Ok(hops
        .iter()
        .zip(fellow.into_iter().zip(non_fellow))
        .map(|(&hops, (fellow, non_fellow))| CohortComparison {
            hops,
            fellow,
            non_fellow,
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::fixtures::*;

    fn corpus() -> Corpus {
        Corpus::new(
            vec![
                scholar("a", None),
                scholar("b", None),
                scholar("f", Some(2001)),
                scholar("x", None),
            ],
            vec![
                publication("p0", 1995, &["f"], &[]),
                publication("p1", 1996, &["a", "f"], &[]),
                publication("p2", 1997, &["a", "f", "b"], &[]),
                publication("p3", 1996, &["x"], &[]),
                publication("p4", 1996, &["b"], &[]),
            ],
        )
        .unwrap()
    }

    #[test]
    fn isolated_cohort_is_flat_zero() {
        let c = corpus();
        let curves = cohort_curves(&c, &[("iso", &["x"])], &[1, 2], 2003).unwrap();
        for curve in &curves[0] {
            assert_eq!(curve.points.len(), 8);
            assert!(curve
                .points
                .iter()
                .all(|p| p.median_neighbor == 0.0 && p.median_collab == 0.0));
        }
    }

    #[test]
    fn single_member_follows_own_values() {
        let c = corpus();
        let curves = cohort_curves(&c, &[("a", &["a"])], &[1], 2002).unwrap();
        let nb: Vec<f64> = curves[0][0]
            .points
            .iter()
            .map(|p| p.median_neighbor)
            .collect();
        // f is a Fellow from 2001 on; a starts in 1996.
        assert_eq!(nb, vec![0.0, 0.0, 0.0, 0.0, 0.0, 1.0, 1.0]);
        let last = curves[0][0].points.last().unwrap();
        assert_eq!(last.median_collab, 2.0);
    }

    #[test]
    fn empty_cohort_rejected() {
        let c = corpus();
        assert!(cohort_curves(&c, &[("none", &[])], &[1], 2000).is_err());
    }

    #[test]
    fn spec_selects_cohorts() {
        let c = corpus();
        let spec = CohortSpec {
            first_pub: (1995, 1996),
            elected_after: 2000,
            society: None,
        };
        let (f, n) = spec.cohorts(&c);
        assert_eq!(f, vec!["f"]);
        assert_eq!(n, vec!["a", "b", "x"]);
    }
}
