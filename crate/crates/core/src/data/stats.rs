use std::collections::BTreeMap;

use serde::Serialize;

use super::model::{Corpus, Gender, Society};
use crate::error::Result;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GroupStats {
    pub society: Society,
    pub gender: Gender,
    pub count: usize,
    pub avg_pubs: f64,
    pub avg_cites: f64,
}

/// One row per society in the layout of the dataset summary table.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SocietyRow {
    pub society: Society,
    pub male: usize,
    pub female: usize,
    pub avg_pubs: f64,
    pub avg_cites: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StatsTable {
    pub groups: Vec<GroupStats>,
    pub rows: Vec<SocietyRow>,
}

impl StatsTable {
    pub fn to_csv(&self) -> String {
        let mut s = String::from("society,male,female,avg_pubs,avg_cites\n");
        for r in &self.rows {
            s.push_str(&format!(
                "{},{},{},{:.1},{:.1}\n",
                r.society.label(),
                r.male,
                r.female,
                r.avg_pubs,
                r.avg_cites
            ));
        }
        s
    }

    pub fn to_text(&self) -> String {
        let mut s = format!(
            "{:<8}{:>8}{:>8}{:>12}{:>14}\n",
            "Dataset", "Male", "Female", "Avg.Pubs", "Avg.Cites"
        );
        for r in &self.rows {
            s.push_str(&format!(
                "{:<8}{:>8}{:>8}{:>12.1}{:>14.1}\n",
                r.society.label(),
                r.male,
                r.female,
                r.avg_pubs,
                r.avg_cites
            ));
        }
        s
    }
}

/// Counts and per-scholar averages of publications and lifetime citations.
pub fn corpus_stats(corpus: &Corpus) -> Result<StatsTable> {
    // (count, pubs, cites)
    let mut acc: BTreeMap<(Society, Gender), (usize, f64, f64)> = BTreeMap::new();
    for s in corpus.scholars() {
        let (mut pubs, mut cites) = (0usize, 0u64);
        for p in corpus.publications_of(&s.id)? {
            pubs += 1;
            cites += p.total_citations();
        }
        let e = acc.entry((s.society, s.gender)).or_default();
        e.0 += 1;
        e.1 += pubs as f64;
        e.2 += cites as f64;
    }

    let groups = acc
        .iter()
        .map(|(&(society, gender), &(n, p, c))| GroupStats {
            society,
            gender,
            count: n,
            avg_pubs: p / n as f64,
            avg_cites: c / n as f64,
        })
        .collect();

    let mut by_society: BTreeMap<Society, (usize, usize, f64, f64)> = BTreeMap::new();
    for (&(society, gender), &(n, p, c)) in &acc {
        let e = by_society.entry(society).or_default();
        match gender {
            Gender::Male => e.0 += n,
            Gender::Female => e.1 += n,
        }
        e.2 += p;
        e.3 += c;
    }
    let rows = by_society
        .into_iter()
        .map(|(society, (male, female, p, c))| {
            let n = (male + female) as f64;
            SocietyRow {
                society,
                male,
                female,
                avg_pubs: p / n,
                avg_cites: c / n,
            }
        })
        .collect();
    Ok(StatsTable { groups, rows })
}
