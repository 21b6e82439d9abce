use std::collections::{BTreeMap, HashMap};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Author ids carrying this prefix are co-authors that are not declared
/// scholars. They are kept as opaque graph nodes and never resolved.
pub const EXTERNAL_PREFIX: &str = "ext:";

pub type Year = i32;

pub fn is_external(id: &str) -> bool {
    id.starts_with(EXTERNAL_PREFIX)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Gender {
    #[serde(rename = "M")]
    Male,
    #[serde(rename = "F")]
    Female,
}

impl Gender {
    pub fn code(self) -> f64 {
        match self {
            Gender::Male => 1.0,
            Gender::Female => 0.0,
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            Gender::Male => "male",
            Gender::Female => "female",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Society {
    #[serde(rename = "ACM")]
    Acm,
    #[serde(rename = "IEEE")]
    Ieee,
    #[serde(rename = "non")]
    Non,
}

impl Society {
    pub fn label(self) -> &'static str {
        match self {
            Society::Acm => "ACM",
            Society::Ieee => "IEEE",
            Society::Non => "non",
        }
    }
}

impl std::str::FromStr for Society {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "acm" => Ok(Society::Acm),
            "ieee" => Ok(Society::Ieee),
            "non" => Ok(Society::Non),
            other => Err(Error::InvalidArgument(format!("unknown society {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scholar {
    pub id: String,
    pub name: String,
    pub gender: Gender,
    pub society: Society,
    pub elected_year: Option<Year>,
    pub employer_id: String,
    /// Year of the earliest publication; filled in by [`Corpus::new`].
    #[serde(skip)]
    pub first_pub_year: Year,
}

impl Scholar {
    pub fn is_fellow(&self) -> bool {
        self.elected_year.is_some()
    }

    /// Elected on or before `year`.
    pub fn is_fellow_at(&self, year: Year) -> bool {
        self.elected_year.is_some_and(|ey| ey <= year)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Publication {
    pub id: String,
    pub title: String,
    pub venue: String,
    pub year: Year,
    pub author_ids: Vec<String>,
    pub citations_by_year: BTreeMap<Year, u64>,
    /// Set when the per-year citations were spread from a bare total.
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub approximate: bool,
}

impl Publication {
    pub fn total_citations(&self) -> u64 {
        self.citations_by_year.values().sum()
    }

    /// Citations received in years `<= year`.
    pub fn citations_through(&self, year: Year) -> u64 {
        self.citations_by_year.range(..=year).map(|(_, c)| *c).sum()
    }

    pub fn text(&self) -> String {
        format!("{} {}", self.title, self.venue)
    }
}

/// Immutable, indexed collection of scholars and publications.
#[derive(Debug, Clone, PartialEq)]
pub struct Corpus {
    scholars: Vec<Scholar>,
    publications: Vec<Publication>,
    scholar_index: HashMap<String, usize>,
    publication_index: HashMap<String, usize>,
    /// scholar position -> publication positions, sorted by (year, id)
    by_scholar: Vec<Vec<usize>>,
    by_year: BTreeMap<Year, Vec<usize>>,
}

impl Corpus {
    /// Validates and indexes. Scholars and publications are stored sorted by
    /// id so every downstream iteration order is reproducible.
    pub fn new(mut scholars: Vec<Scholar>, mut publications: Vec<Publication>) -> Result<Self> {
        scholars.sort_by(|a, b| a.id.cmp(&b.id));
        publications.sort_by(|a, b| a.id.cmp(&b.id));

        let mut scholar_index = HashMap::with_capacity(scholars.len());
        for (i, s) in scholars.iter().enumerate() {
            if is_external(&s.id) {
                return Err(Error::Integrity(format!(
                    "scholar id {:?} uses the reserved external prefix",
                    s.id
                )));
            }
            if scholar_index.insert(s.id.clone(), i).is_some() {
                return Err(Error::Conflict(s.id.clone()));
            }
        }

        let mut publication_index = HashMap::with_capacity(publications.len());
        let mut by_scholar = vec![Vec::new(); scholars.len()];
        let mut by_year: BTreeMap<Year, Vec<usize>> = BTreeMap::new();
        for (p, publication) in publications.iter().enumerate() {
            if publication_index
                .insert(publication.id.clone(), p)
                .is_some()
            {
                return Err(Error::Conflict(publication.id.clone()));
            }
            validate_publication(publication)?;
            let mut seen: Vec<&str> = Vec::with_capacity(publication.author_ids.len());
            for author in &publication.author_ids {
                if seen.contains(&author.as_str()) {
                    continue;
                }
                seen.push(author);
                if is_external(author) {
                    continue;
                }
                match scholar_index.get(author) {
                    Some(&s) => by_scholar[s].push(p),
                    None => {
                        return Err(Error::Integrity(format!(
                            "publication {:?} references undeclared scholar {:?}",
                            publication.id, author
                        )))
                    }
                }
            }
            by_year.entry(publication.year).or_default().push(p);
        }

        for (s, pubs) in by_scholar.iter_mut().enumerate() {
            pubs.sort_by(|&a, &b| {
                (publications[a].year, &publications[a].id)
                    .cmp(&(publications[b].year, &publications[b].id))
            });
            let Some(&first) = pubs.first() else {
                return Err(Error::Integrity(format!(
                    "scholar {:?} has no publications",
                    scholars[s].id
                )));
            };
            scholars[s].first_pub_year = publications[first].year;
        }

        Ok(Corpus {
            scholars,
            publications,
            scholar_index,
            publication_index,
            by_scholar,
            by_year,
        })
    }

    pub fn scholars(&self) -> &[Scholar] {
        &self.scholars
    }

    pub fn publications(&self) -> &[Publication] {
        &self.publications
    }

    pub fn scholar(&self, id: &str) -> Result<&Scholar> {
        self.scholar_index
            .get(id)
            .map(|&i| &self.scholars[i])
            .ok_or_else(|| Error::Lookup(id.to_string()))
    }

    pub fn scholar_position(&self, id: &str) -> Option<usize> {
        self.scholar_index.get(id).copied()
    }

    pub fn publication(&self, id: &str) -> Result<&Publication> {
        self.publication_index
            .get(id)
            .map(|&i| &self.publications[i])
            .ok_or_else(|| Error::Lookup(id.to_string()))
    }

    /// Publications of a scholar ordered by (year, id).
    pub fn publications_of(&self, id: &str) -> Result<impl Iterator<Item = &Publication> + '_> {
        let s = self
            .scholar_index
            .get(id)
            .ok_or_else(|| Error::Lookup(id.to_string()))?;
        Ok(self.by_scholar[*s]
            .iter()
            .map(move |&p| &self.publications[p]))
    }

    pub fn publications_in(&self, year: Year) -> impl Iterator<Item = &Publication> + '_ {
        self.by_year
            .get(&year)
            .into_iter()
            .flatten()
            .map(move |&p| &self.publications[p])
    }

    /// Publications with `year <= as_of`, in index order.
    pub fn publications_through(&self, as_of: Year) -> impl Iterator<Item = &Publication> + '_ {
        self.by_year
            .range(..=as_of)
            .flat_map(|(_, ps)| ps.iter())
            .map(move |&p| &self.publications[p])
    }

    /// Earliest and latest years seen in publication or citation records.
    pub fn year_range(&self) -> Option<(Year, Year)> {
        let first = *self.by_year.keys().next()?;
        let mut last = *self.by_year.keys().next_back()?;
        for p in &self.publications {
            if let Some((&y, _)) = p.citations_by_year.iter().next_back() {
                last = last.max(y);
            }
        }
        Some((first, last))
    }

    pub fn lifetime_citations(&self, id: &str) -> Result<u64> {
        Ok(self
            .publications_of(id)?
            .map(Publication::total_citations)
            .sum())
    }

    pub fn into_parts(self) -> (Vec<Scholar>, Vec<Publication>) {
        (self.scholars, self.publications)
    }
}

fn validate_publication(p: &Publication) -> Result<()> {
    if p.year < 1900 {
        return Err(Error::Integrity(format!(
            "publication {:?} has year {} < 1900",
            p.id, p.year
        )));
    }
    if p.author_ids.is_empty() {
        return Err(Error::Integrity(format!(
            "publication {:?} has no authors",
            p.id
        )));
    }
    Ok(())
}

#[cfg(test)]
pub(crate) mod fixtures {
    use super::*;

    pub fn scholar(id: &str, elected: Option<Year>) -> Scholar {
        Scholar {
            id: id.into(),
            name: format!("Scholar {id}"),
            gender: Gender::Male,
            society: if elected.is_some() {
                Society::Ieee
            } else {
                Society::Non
            },
            elected_year: elected,
            employer_id: "emp-1".into(),
            first_pub_year: 0,
        }
    }

    pub fn publication(
        id: &str,
        year: Year,
        authors: &[&str],
        cites: &[(Year, u64)],
    ) -> Publication {
        Publication {
            id: id.into(),
            title: format!("paper {id}"),
            venue: "venue".into(),
            year,
            author_ids: authors.iter().map(|a| a.to_string()).collect(),
            citations_by_year: cites.iter().copied().collect(),
            approximate: false,
        }
    }
}
