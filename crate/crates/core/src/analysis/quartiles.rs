use std::collections::BTreeMap;

use serde::Serialize;

use super::stats::quantile;
use crate::data::{Corpus, Society, Year};
use crate::error::{Error, Result};
use crate::factors::{field_vector, FieldClassifier, FIELD_NAMES};

pub const BUCKET_YEARS: Year = 5;
/// Buckets with fewer Fellows are reported but carry no quartile.
pub const MIN_BUCKET: usize = 4;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct QuartileCell {
    pub field: String,
    /// First election year of the bucket.
    pub bucket_start: Year,
    pub fellows: usize,
    pub q3: Option<f64>,
}

impl QuartileCell {
    pub fn insufficient(&self) -> bool {
        self.q3.is_none()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct QuartileTable {
    pub society: Society,
    pub cells: Vec<QuartileCell>,
}

impl QuartileTable {
    pub fn fields(&self) -> Vec<&str> {
        let mut f: Vec<&str> = self.cells.iter().map(|c| c.field.as_str()).collect();
        f.dedup();
        f
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("field,bucket,fellows,q3,status\n");
        for c in &self.cells {
            out.push_str(&format!(
                "{},{}-{},{},{},{}\n",
                c.field,
                c.bucket_start,
                c.bucket_start + BUCKET_YEARS - 1,
                c.fellows,
                c.q3.map(|q| q.to_string()).unwrap_or_default(),
                if c.insufficient() {
                    "insufficient"
                } else {
                    "ok"
                }
            ));
        }
        out
    }
}

/// Third quartile of total citations at election, by field (argmax of the
/// field vector over publications through the election year) and by
/// five-year election bucket.
pub fn field_quartile_table(
    corpus: &Corpus,
    society: Society,
    classifier: &dyn FieldClassifier,
) -> Result<QuartileTable> {
    let mut groups: BTreeMap<(usize, Year), Vec<f64>> = BTreeMap::new();
    for s in corpus.scholars() {
        let Some(ey) = s.elected_year else { continue };
        if s.society != society {
            continue;
        }
        let pubs: Vec<_> = corpus
            .publications_of(&s.id)?
            .filter(|p| p.year <= ey)
            .collect();
        let Some(field) = field_vector(pubs.iter().copied(), classifier).argmax() else {
            continue;
        };
        let citations: u64 = pubs.iter().map(|p| p.citations_through(ey)).sum();
        let bucket = ey.div_euclid(BUCKET_YEARS) * BUCKET_YEARS;
        groups
            .entry((field, bucket))
            .or_default()
            .push(citations as f64);
    }
    if groups.is_empty() {
        return Err(Error::InsufficientData(format!(
            "no {} Fellows to tabulate",
            society.label()
        )));
    }
    let cells = groups
        .into_iter()
        .map(|((field, bucket_start), v)| {
            Ok(QuartileCell {
                field: FIELD_NAMES[field].to_string(),
                bucket_start,
                fellows: v.len(),
                q3: if v.len() >= MIN_BUCKET {
                    Some(quantile(&v, 0.75)?)
                } else {
                    None
                },
            })
        })
        .collect::<Result<_>>()?;
    Ok(QuartileTable { society, cells })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::fixtures::*;
    use crate::factors::FIELD_COUNT;

    struct Fixed;
    impl FieldClassifier for Fixed {
        fn classify(&self, _: &str) -> [f64; FIELD_COUNT] {
            let mut v = [0.0; FIELD_COUNT];
            v[2] = 1.0;
            v
        }
    }

    #[test]
    fn single_field_single_row() {
        let mut scholars = Vec::new();
        let mut pubs = Vec::new();
        for (i, c) in [100u64, 200, 300, 400, 50].iter().enumerate() {
            let id = format!("s{i}");
            let ey = if i < 4 { 2001 } else { 2007 };
            scholars.push(scholar(&id, Some(ey)));
            pubs.push(publication(
                &format!("p{i}"),
                1990,
                &[id.as_str()],
                &[(1995, *c), (2012, 999)],
            ));
        }
        let c = Corpus::new(scholars, pubs).unwrap();
        let t = field_quartile_table(&c, Society::Ieee, &Fixed).unwrap();
        assert_eq!(t.fields(), vec![FIELD_NAMES[2]]);
        assert_eq!(t.cells.len(), 2);
        assert_eq!(t.cells[0].q3, Some(325.0));
        assert_eq!(t.cells[0].bucket_start, 2000);
        assert!(t.cells[1].insufficient());
        assert!(t.to_csv().contains("2005-2009,1,,insufficient"));
    }
}
