//! JSONL ingestion and serialization of corpora.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::Deserialize;
use serde_json::{Map, Value};

use super::model::{Corpus, Gender, Publication, Scholar, Society, Year};
use crate::error::{Error, Result};

const SCHOLAR_FIELDS: &[&str] = &[
    "id",
    "name",
    "gender",
    "society",
    "elected_year",
    "employer_id",
];
const PUBLICATION_FIELDS: &[&str] = &[
    "id",
    "title",
    "venue",
    "year",
    "author_ids",
    "citations_by_year",
    "citations_total",
    "approximate",
];

#[derive(Deserialize)]
struct RawScholar {
    id: String,
    name: String,
    gender: Gender,
    society: Society,
    elected_year: Option<Year>,
    employer_id: String,
}

#[derive(Deserialize)]
struct RawPublication {
    id: String,
    title: String,
    venue: String,
    year: Year,
    author_ids: Vec<String>,
    #[serde(default)]
    citations_by_year: Option<BTreeMap<String, i64>>,
    #[serde(default)]
    citations_total: Option<i64>,
    #[serde(default)]
    approximate: bool,
}

fn parse_err(file: &Path, line: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        file: file.display().to_string(),
        line,
        message: message.into(),
    }
}

/// Reads non-blank lines as JSON objects, warning about unknown fields.
fn read_objects(path: &Path, known: &[&str]) -> Result<Vec<(usize, Map<String, Value>)>> {
    let reader = BufReader::new(File::open(path)?);
    let mut out = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line_no = i + 1;
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let value: Value =
            serde_json::from_str(&line).map_err(|e| parse_err(path, line_no, e.to_string()))?;
        let Value::Object(obj) = value else {
            return Err(parse_err(path, line_no, "expected a JSON object"));
        };
        for key in obj.keys() {
            if !known.contains(&key.as_str()) {
                log::warn!(
                    "{}:{line_no}: ignoring unknown field {key:?}",
                    path.display()
                );
            }
        }
        out.push((line_no, obj));
    }
    Ok(out)
}

fn decode<T: for<'de> Deserialize<'de>>(
    path: &Path,
    line: usize,
    obj: Map<String, Value>,
) -> Result<T> {
    serde_json::from_value(Value::Object(obj)).map_err(|e| parse_err(path, line, e.to_string()))
}

/// Loads `scholars.jsonl` and `publications.jsonl` into an indexed corpus.
pub fn load_corpus(scholar_file: &Path, publication_file: &Path) -> Result<Corpus> {
    let mut scholars = Vec::new();
    for (line, obj) in read_objects(scholar_file, SCHOLAR_FIELDS)? {
        let raw: RawScholar = decode(scholar_file, line, obj)?;
        scholars.push(Scholar {
            id: raw.id,
            name: raw.name,
            gender: raw.gender,
            society: raw.society,
            elected_year: raw.elected_year,
            employer_id: raw.employer_id,
            first_pub_year: 0,
        });
    }

    let mut raws = Vec::new();
    let mut latest: Option<Year> = None;
    for (line, obj) in read_objects(publication_file, PUBLICATION_FIELDS)? {
        let raw: RawPublication = decode(publication_file, line, obj)?;
        let mut by_year = BTreeMap::new();
        if let Some(map) = &raw.citations_by_year {
            if raw.citations_total.is_some() {
                log::warn!(
                    "{}:{line}: both citations_by_year and citations_total given; using the per-year map",
                    publication_file.display()
                );
            }
            for (k, v) in map {
                let year: Year = k.trim().parse().map_err(|_| {
                    parse_err(publication_file, line, format!("bad citation year {k:?}"))
                })?;
                if *v < 0 {
                    return Err(parse_err(publication_file, line, "negative citation count"));
                }
                by_year.insert(year, *v as u64);
            }
        } else if let Some(total) = raw.citations_total {
            if total < 0 {
                return Err(parse_err(publication_file, line, "negative citation count"));
            }
        }
        let top = by_year
            .keys()
            .next_back()
            .copied()
            .unwrap_or(raw.year)
            .max(raw.year);
        latest = Some(latest.map_or(top, |l: Year| l.max(top)));
        raws.push((raw, by_year));
    }

    let latest = latest.unwrap_or(0);
    let publications = raws
        .into_iter()
        .map(|(raw, mut by_year)| {
            let mut approximate = raw.approximate;
            if raw.citations_by_year.is_none() {
                if let Some(total) = raw.citations_total {
                    by_year = spread_total(total as u64, raw.year, latest);
                    approximate = true;
                }
            }
            Publication {
                id: raw.id,
                title: raw.title,
                venue: raw.venue,
                year: raw.year,
                author_ids: raw.author_ids,
                citations_by_year: by_year,
                approximate,
            }
        })
        .collect();

    Corpus::new(scholars, publications)
}

/// Loads a corpus directory holding `scholars.jsonl` and `publications.jsonl`.
pub fn load_corpus_dir(dir: &Path) -> Result<Corpus> {
    load_corpus(&dir.join("scholars.jsonl"), &dir.join("publications.jsonl"))
}

/// Uniform integer split of `total` over `[from, to]`; the remainder goes to
/// the earliest years.
pub fn spread_total(total: u64, from: Year, to: Year) -> BTreeMap<Year, u64> {
    let to = to.max(from);
    let n = (to - from + 1) as u64;
    let (base, rem) = (total / n, total % n);
    (from..=to)
        .enumerate()
        .map(|(i, y)| (y, base + u64::from((i as u64) < rem)))
        .filter(|&(_, c)| c > 0)
        .collect()
}

pub fn write_scholars(path: &Path, scholars: &[Scholar]) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    for s in scholars {
        let obj = serde_json::json!({
            "id": s.id,
            "name": s.name,
            "gender": s.gender,
            "society": s.society,
            "elected_year": s.elected_year,
            "employer_id": s.employer_id,
        });
        writeln!(w, "{obj}")?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_publications(path: &Path, publications: &[Publication]) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    for p in publications {
        writeln!(w, "{}", serde_json::to_string(p)?)?;
    }
    w.flush()?;
    Ok(())
}

pub fn save_corpus_dir(corpus: &Corpus, dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    write_scholars(&dir.join("scholars.jsonl"), corpus.scholars())?;
    write_publications(&dir.join("publications.jsonl"), corpus.publications())?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::fs;

    fn write(dir: &Path, scholars: &str, pubs: &str) -> (std::path::PathBuf, std::path::PathBuf) {
        let s = dir.join("scholars.jsonl");
        let p = dir.join("publications.jsonl");
        fs::write(&s, scholars).unwrap();
        fs::write(&p, pubs).unwrap();
        (s, p)
    }

    const SCHOLARS: &str = r#"{"id":"s1","name":"A","gender":"M","society":"IEEE","elected_year":2010,"employer_id":"e1"}
{"id":"s2","name":"B","gender":"F","society":"non","elected_year":null,"employer_id":"e2","hobby":"chess"}
"#;

    #[test]
    fn loads_minimal_consistent_corpus() {
        let dir = tempfile::tempdir().unwrap();
        let (s, p) = write(
            dir.path(),
            SCHOLARS,
            r#"{"id":"p1","title":"t","venue":"v","year":1990,"author_ids":["s1","s2"],"citations_by_year":{"1991":3}}
{"id":"p2","title":"t","venue":"v","year":1992,"author_ids":["s1"],"citations_by_year":{}}
{"id":"p3","title":"t","venue":"v","year":1995,"author_ids":["s2","ext:x"],"citations_total":10}
"#,
        );
        let c = load_corpus(&s, &p).unwrap();
        assert_eq!(c.scholars().len(), 2);
        assert_eq!(c.publications().len(), 3);
        assert_eq!(c.scholar("s2").unwrap().first_pub_year, 1990);
        let p3 = c.publication("p3").unwrap();
        assert!(p3.approximate);
        assert_eq!(p3.total_citations(), 10);
        // latest corpus year is 1995, so the whole total lands there
        assert_eq!(p3.citations_by_year.get(&1995), Some(&10));
    }

    #[test]
    fn malformed_line_names_the_line() {
        let dir = tempfile::tempdir().unwrap();
        let (s, p) = write(
            dir.path(),
            SCHOLARS,
            "{\"id\":\"p1\",\"title\":\"t\",\"venue\":\"v\",\"year\":1990,\"author_ids\":[\"s1\"]}\n{not json\n",
        );
        match load_corpus(&s, &p).unwrap_err() {
            Error::Parse { line, .. } => assert_eq!(line, 2),
            e => panic!("unexpected {e}"),
        }
    }

    #[test]
    fn spread_total_is_uniform_with_early_remainder() {
        let m = spread_total(10, 2000, 2003);
        assert_eq!(m.values().copied().collect::<Vec<_>>(), vec![3, 3, 2, 2]);
        assert_eq!(spread_total(0, 2000, 2003).len(), 0);
    }

    #[test]
    fn save_then_load_round_trips() {
        let dir = tempfile::tempdir().unwrap();
        let (s, p) = write(
            dir.path(),
            SCHOLARS,
            r#"{"id":"p1","title":"t","venue":"v","year":1990,"author_ids":["s1","s2"],"citations_by_year":{"1991":3}}
{"id":"p3","title":"t","venue":"v","year":1993,"author_ids":["s2"],"citations_total":7}
"#,
        );
        let c = load_corpus(&s, &p).unwrap();
        let out = dir.path().join("out");
        save_corpus_dir(&c, &out).unwrap();
        let again = load_corpus_dir(&out).unwrap();
        assert_eq!(c, again);
    }
}
