use serde::Serialize;

use super::model::{Corpus, Year, EXTERNAL_PREFIX};
use crate::error::Result;

/// Fellows with lifetime citations at or below this are dropped.
pub const MIN_FELLOW_CITATIONS: u64 = 300;
/// Fellows elected fewer than this many years after their first paper are dropped.
pub const MIN_YEARS_TO_ELECTION: Year = 8;

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub enum RemovalReason {
    LowCitations(u64),
    EarlyElection(Year),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Removal {
    pub scholar_id: String,
    pub reasons: Vec<RemovalReason>,
}

/// Removes noisy Fellow records. Removed scholars stay in author lists as
/// external co-authors so the collaboration structure is preserved.
pub fn apply_noise_filter(corpus: &Corpus) -> Result<(Corpus, Vec<Removal>)> {
    let mut log = Vec::new();
    for s in corpus.scholars() {
        let Some(ey) = s.elected_year else { continue };
        let cites = corpus.lifetime_citations(&s.id)?;
        let mut reasons = Vec::new();
        if cites <= MIN_FELLOW_CITATIONS {
            reasons.push(RemovalReason::LowCitations(cites));
        }
        if ey - s.first_pub_year < MIN_YEARS_TO_ELECTION {
            reasons.push(RemovalReason::EarlyElection(ey - s.first_pub_year));
        }
        if !reasons.is_empty() {
            log.push(Removal {
                scholar_id: s.id.clone(),
                reasons,
            });
        }
    }
    if log.is_empty() {
        return Ok((corpus.clone(), log));
    }

    let removed: std::collections::HashSet<&str> =
        log.iter().map(|r| r.scholar_id.as_str()).collect();
    let (scholars, mut publications) = corpus.clone().into_parts();
    let scholars = scholars
        .into_iter()
        .filter(|s| !removed.contains(s.id.as_str()))
        .collect();
    for p in &mut publications {
        for a in &mut p.author_ids {
            if removed.contains(a.as_str()) {
                *a = format!("{EXTERNAL_PREFIX}{a}");
            }
        }
    }
    Ok((Corpus::new(scholars, publications)?, log))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::model::fixtures::*;

    fn corpus() -> Corpus {
        Corpus::new(
            vec![
                scholar("low", Some(2015)),
                scholar("early", Some(2007)),
                scholar("ok", Some(2010)),
                scholar("plain", None),
            ],
            vec![
                publication("p1", 2000, &["low", "plain"], &[(2001, 300)]),
                publication("p2", 2000, &["early"], &[(2001, 5000)]),
                publication("p3", 2000, &["ok"], &[(2001, 301)]),
                publication("p4", 2000, &["plain"], &[(2001, 10)]),
            ],
        )
        .unwrap()
    }

    #[test]
    fn removes_low_citation_and_early_fellows_only() {
        let (filtered, log) = apply_noise_filter(&corpus()).unwrap();
        let ids: Vec<_> = filtered.scholars().iter().map(|s| s.id.as_str()).collect();
        assert_eq!(ids, vec!["ok", "plain"]);
        assert_eq!(log.len(), 2);
        assert_eq!(log[0].scholar_id, "early");
        assert_eq!(log[0].reasons, vec![RemovalReason::EarlyElection(7)]);
        assert_eq!(log[1].reasons, vec![RemovalReason::LowCitations(300)]);
        // the removed co-author becomes an external node
        assert_eq!(filtered.publication("p1").unwrap().author_ids[0], "ext:low");
    }

    #[test]
    fn filter_is_idempotent() {
        let (once, _) = apply_noise_filter(&corpus()).unwrap();
        let (twice, log) = apply_noise_filter(&once).unwrap();
        assert_eq!(once, twice);
        assert!(log.is_empty());
    }
}
