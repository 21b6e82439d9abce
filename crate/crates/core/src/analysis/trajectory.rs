use rayon::prelude::*;
use serde::Serialize;

use super::stats::{mann_whitney, std_dev, MannWhitney};
use crate::data::{Corpus, Gender, Society, Year};
use crate::error::{Error, Result};
use crate::factors::{fit_alpha, fit_alpha_cumulative};

/// Cumulative publication counts `N(t)` for `t = 1` at `from` through `to`.
pub fn cumulative_publications(
    corpus: &Corpus,
    id: &str,
    from: Year,
    to: Year,
) -> Result<Vec<f64>> {
    if to < from {
        return Ok(Vec::new());
    }
    let mut counts = vec![0.0; (to - from + 1) as usize];
    for p in corpus.publications_of(id)? {
        if p.year >= from && p.year <= to {
            counts[(p.year - from) as usize] += 1.0;
        }
    }
    let mut acc = 0.0;
    for c in counts.iter_mut() {
        acc += *c;
        *c = acc;
    }
    Ok(counts)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TrajectoryPoint {
    pub t: usize,
    /// Scholars whose career reaches `t`.
    pub scholars: usize,
    pub mean: f64,
    pub std: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrajectoryStats {
    pub group: String,
    pub points: Vec<TrajectoryPoint>,
    /// Log-log slope of the mean curve; `None` with fewer than three points.
    pub alpha_bar: Option<f64>,
}

impl TrajectoryStats {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("group,t,scholars,mean,std\n");
        for p in &self.points {
            out.push_str(&format!(
                "{},{},{},{},{}\n",
                self.group, p.t, p.scholars, p.mean, p.std
            ));
        }
        out
    }
}

/// Group-averaged cumulative output, each career rescaled by its mean annual
/// production. `careers[j][t - 1]` is `N_j(t)`. Careers shorter than `t`
/// drop out of the average at `t`; points with fewer than two contributors
/// are omitted.
pub fn normalized_trajectory(group: &str, careers: &[Vec<f64>]) -> Result<TrajectoryStats> {
    if careers.len() < 2 {
        return Err(Error::InsufficientData(format!(
            "group {group:?} has {} scholars, need at least 2",
            careers.len()
        )));
    }
    let mut scaled = Vec::with_capacity(careers.len());
    for (j, c) in careers.iter().enumerate() {
        let total = c.last().copied().unwrap_or(0.0);
        let nbar = total / c.len().max(1) as f64;
        if !(nbar > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "scholar {j} in group {group:?} has no publications"
            )));
        }
        scaled.push(c.iter().map(|n| n / nbar).collect::<Vec<f64>>());
    }
    let longest = scaled.iter().map(Vec::len).max().unwrap_or(0);
    let mut points = Vec::new();
    for t in 1..=longest {
        let vals: Vec<f64> = scaled
            .iter()
            .filter_map(|s| s.get(t - 1).copied())
            .collect();
        if vals.len() < 2 {
            continue;
        }
        let mean = vals.iter().sum::<f64>() / vals.len() as f64;
        points.push(TrajectoryPoint {
            t,
            scholars: vals.len(),
            mean,
            std: std_dev(&vals, 0),
        });
    }
    let fit: Vec<(f64, f64)> = points.iter().map(|p| (p.t as f64, p.mean)).collect();
    Ok(TrajectoryStats {
        group: group.to_string(),
        points,
        alpha_bar: fit_alpha(&fit).ok(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GenderReport {
    pub male: TrajectoryStats,
    pub female: TrajectoryStats,
    pub male_alphas: usize,
    pub female_alphas: usize,
    /// Test on per-scholar fitted exponents, male against female.
    pub alpha_test: MannWhitney,
}

impl GenderReport {
    pub fn to_csv(&self) -> String {
        let mut out = self.male.to_csv();
        out.push_str(
            self.female
                .to_csv()
                .split_once('\n')
                .map_or("", |(_, rest)| rest),
        );
        out
    }
}

/// Fellows split by gender; careers run from the first publication to
/// `horizon`.
pub fn gender_trajectories(
    corpus: &Corpus,
    society: Option<Society>,
    horizon: Year,
) -> Result<GenderReport> {
    let groups: Vec<(Gender, Vec<Vec<f64>>)> = [Gender::Male, Gender::Female]
        .par_iter()
        .map(|&g| {
            let careers = corpus
                .scholars()
                .iter()
                .filter(|s| {
                    s.is_fellow() && s.gender == g && society.is_none_or(|soc| s.society == soc)
                })
                .filter(|s| s.first_pub_year <= horizon)
                .map(|s| cumulative_publications(corpus, &s.id, s.first_pub_year, horizon))
                .collect::<Result<Vec<_>>>()?;
            Ok((g, careers))
        })
        .collect::<Result<Vec<_>>>()?;
    let alphas = |careers: &[Vec<f64>]| -> Vec<f64> {
        careers
            .iter()
            .filter_map(|c| fit_alpha_cumulative(c).ok())
            .collect()
    };
    let (male_alpha, female_alpha) = (alphas(&groups[0].1), alphas(&groups[1].1));
    Ok(GenderReport {
        male: normalized_trajectory("male", &groups[0].1)?,
        female: normalized_trajectory("female", &groups[1].1)?,
        male_alphas: male_alpha.len(),
        female_alphas: female_alpha.len(),
        alpha_test: mann_whitney(&male_alpha, &female_alpha)?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::fixtures::*;
    use proptest::prelude::*;

    #[test]
    fn constant_rate_is_linear() {
        let careers: Vec<Vec<f64>> = (1..=4)
            .map(|k| (1..=20).map(|t| (k * t) as f64).collect())
            .collect();
        let s = normalized_trajectory("g", &careers).unwrap();
        for p in &s.points {
            assert!((p.mean - p.t as f64).abs() < 1e-12);
            assert!(p.std.abs() < 1e-12);
        }
        assert!((s.alpha_bar.unwrap() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn duplicated_scholar_has_zero_spread() {
        let c: Vec<f64> = [1.0, 1.0, 4.0, 6.0, 9.0, 15.0].to_vec();
        let s = normalized_trajectory("g", &vec![c; 5]).unwrap();
        assert!(s.points.iter().all(|p| p.std == 0.0));
    }

    #[test]
    fn short_careers_drop_out() {
        let s =
            normalized_trajectory("g", &[vec![1.0, 2.0, 3.0], vec![2.0, 4.0], vec![1.0]]).unwrap();
        assert_eq!(
            s.points.iter().map(|p| p.scholars).collect::<Vec<_>>(),
            vec![3, 2]
        );
    }

    #[test]
    fn group_too_small() {
        assert!(normalized_trajectory("g", &[vec![1.0]]).is_err());
        assert!(normalized_trajectory("g", &[vec![0.0], vec![1.0]]).is_err());
    }

    #[test]
    fn cumulative_counts_from_corpus() {
        let c = Corpus::new(
            vec![scholar("a", None)],
            vec![
                publication("p1", 2000, &["a"], &[]),
                publication("p2", 2002, &["a"], &[]),
                publication("p3", 2002, &["a"], &[]),
            ],
        )
        .unwrap();
        assert_eq!(
            cumulative_publications(&c, "a", 2000, 2003).unwrap(),
            vec![1.0, 1.0, 3.0, 3.0]
        );
    }

    proptest! {
        #[test]
        fn matches_direct_average(
            annual in prop::collection::vec(prop::collection::vec(0u32..9, 1..15), 2..8),
            scale in 1u32..5,
        ) {
            let careers: Vec<Vec<f64>> = annual
                .iter()
                .map(|a| {
                    let mut acc = 1.0;
                    std::iter::once(1.0).chain(a.iter().map(|&x| { acc += f64::from(x); acc })).collect()
                })
                .collect();
            let s = normalized_trajectory("g", &careers).unwrap();
            for p in &s.points {
                let mut sum = 0.0;
                let mut n = 0;
                for c in &careers {
                    if c.len() >= p.t {
                        sum += c[p.t - 1] * c.len() as f64 / c[c.len() - 1];
                        n += 1;
                    }
                }
                prop_assert_eq!(n, p.scholars);
                prop_assert!((sum / n as f64 - p.mean).abs() < 1e-12);
            }
            let scaled: Vec<Vec<f64>> = careers
                .iter()
                .map(|c| c.iter().map(|v| v * f64::from(scale)).collect())
                .collect();
            let t = normalized_trajectory("g", &scaled).unwrap();
            for (a, b) in s.points.iter().zip(&t.points) {
                prop_assert!((a.mean - b.mean).abs() < 1e-9);
            }
        }
    }
}
