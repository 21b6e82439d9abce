use serde::Serialize;

use super::stats::{mann_whitney, mean, std_dev, MannWhitney};
use crate::data::{Corpus, Gender, Society};
use crate::error::Result;

/// Smallest group for which moments are reported.
pub const MIN_GROUP: usize = 2;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GenderDistribution {
    pub gender: Gender,
    pub n: usize,
    /// Sample mean and standard deviation; `None` when the group is too
    /// small.
    pub mean: Option<f64>,
    pub std: Option<f64>,
    /// Maximum-likelihood normal fit `(mu, sigma)`.
    pub normal_fit: Option<(f64, f64)>,
    /// `(years, count)` in one-year bins.
    pub histogram: Vec<(i32, usize)>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AccumulationReport {
    pub society: Society,
    pub groups: Vec<GenderDistribution>,
    /// Male against female; `None` when either group is too small.
    pub test: Option<MannWhitney>,
}

impl AccumulationReport {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("society,gender,years,count\n");
        for g in &self.groups {
            for (t, c) in &g.histogram {
                out.push_str(&format!(
                    "{},{},{t},{c}\n",
                    self.society.label(),
                    g.gender.label()
                ));
            }
        }
        out
    }
}

/// Years from first publication to election for each Fellow of `society`,
/// by gender.
pub fn accumulation_distribution(corpus: &Corpus, society: Society) -> Result<AccumulationReport> {
    let mut samples: Vec<Vec<i32>> = vec![Vec::new(), Vec::new()];
    for s in corpus.scholars() {
        if s.society != society {
            continue;
        }
        if let Some(ey) = s.elected_year {
            samples[usize::from(s.gender == Gender::Female)].push(ey - s.first_pub_year);
        }
    }
    let groups: Vec<GenderDistribution> = [Gender::Male, Gender::Female]
        .iter()
        .zip(&samples)
        .map(|(&gender, ts)| {
            let xs: Vec<f64> = ts.iter().map(|&t| f64::from(t)).collect();
            let ok = xs.len() >= MIN_GROUP;
            let mut histogram: Vec<(i32, usize)> = Vec::new();
            let mut sorted = ts.clone();
            sorted.sort_unstable();
            for t in sorted {
                match histogram.last_mut() {
                    Some((v, c)) if *v == t => *c += 1,
                    _ => histogram.push((t, 1)),
                }
            }
            GenderDistribution {
                gender,
                n: xs.len(),
                mean: ok.then(|| mean(&xs)),
                std: ok.then(|| std_dev(&xs, 1)),
                normal_fit: ok.then(|| (mean(&xs), std_dev(&xs, 0))),
                histogram,
            }
        })
        .collect();
    let test = if groups.iter().all(|g| g.n >= MIN_GROUP) {
        let f = |ts: &[i32]| ts.iter().map(|&t| f64::from(t)).collect::<Vec<f64>>();
        Some(mann_whitney(&f(&samples[0]), &f(&samples[1]))?)
    } else {
        None
    };
    Ok(AccumulationReport {
        society,
        groups,
        test,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::fixtures::*;

    fn corpus(ts: &[(Gender, i32)]) -> Corpus {
        let mut scholars = Vec::new();
        let mut pubs = Vec::new();
        for (i, &(g, t)) in ts.iter().enumerate() {
            let mut s = scholar(&format!("s{i}"), Some(1990 + t));
            s.gender = g;
            pubs.push(publication(&format!("p{i}"), 1990, &[s.id.as_str()], &[]));
            scholars.push(s);
        }
        Corpus::new(scholars, pubs).unwrap()
    }

    #[test]
    fn identical_groups_are_not_separated() {
        let mut ts = Vec::new();
        for t in [10, 12, 15, 20, 22] {
            ts.push((Gender::Male, t));
            ts.push((Gender::Female, t));
        }
        let r = accumulation_distribution(&corpus(&ts), Society::Ieee).unwrap();
        assert!(r.test.unwrap().p >= 0.99);
        assert_eq!(r.groups[0].mean, Some(15.8));
        assert_eq!(r.groups[0].histogram.len(), 5);
    }

    #[test]
    fn small_group_is_insufficient() {
        let r = accumulation_distribution(
            &corpus(&[(Gender::Male, 10), (Gender::Male, 11), (Gender::Female, 9)]),
            Society::Ieee,
        )
        .unwrap();
        assert!(r.test.is_none());
        assert!(r.groups[1].mean.is_none());
        assert_eq!(r.groups[0].std, Some(std::f64::consts::FRAC_1_SQRT_2));
    }
}
