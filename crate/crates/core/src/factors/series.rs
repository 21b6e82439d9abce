//! Per-year 36-slot factor vectors and their assembly into career series.

use std::collections::{BTreeMap, HashMap};
use std::fmt::Write as _;
use std::ops::RangeInclusive;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::employment::{employment_embedding, EMPLOYMENT_DIM};
use super::field::{FieldClassifier, FIELD_COUNT, FIELD_NAMES};
use super::metrics::{fit_alpha_cumulative, h_index, i10_index, scholarly_distance};
use crate::data::{Corpus, Year};
use crate::error::{Error, Result};
use crate::graph::{
    build_graph, ego_subgraph, node2vec_embed, CoauthorGraph, Node2vecParams, NodeEmbedding,
    NodeLabel,
};
use crate::nn::{gcn_branch, GcnParams, GraphInput, GCN_OUTPUT_DIM};

pub const FACTOR_DIM: usize = 36;

pub const SLOT_ACCUMULATION_TIME: usize = 0;
pub const SLOT_GENDER: usize = 1;
pub const SLOT_ANNUAL_PUBS: usize = 2;
pub const SLOT_PUB_ALPHA: usize = 3;
pub const SLOT_TOTAL_PUBS: usize = 4;
pub const SLOT_AVG_PUBS: usize = 5;
pub const SLOT_TOTAL_CITATIONS: usize = 6;
pub const SLOT_CITATION_ALPHA: usize = 7;
pub const SLOT_AVG_CITATIONS: usize = 8;
pub const SLOT_H_INDEX: usize = 9;
pub const SLOT_I10_INDEX: usize = 10;
pub const SLOT_SCHOLARLY_DISTANCE: usize = 11;
pub const CIRCLE_SLOTS: std::ops::Range<usize> = 12..24;
pub const FIELD_SLOTS: std::ops::Range<usize> = 24..32;
pub const EMPLOYMENT_SLOTS: std::ops::Range<usize> = 32..36;
/// Slots normalized by z-score: everything before the circle block.
pub const ZSCORE_SLOTS: std::ops::Range<usize> = 0..12;

/// One 36-slot vector.
pub type FactorVector = [f64; FACTOR_DIM];

/// Factor families, in slot order.
pub const FAMILY_NAMES: [&str; 8] = [
    "accumulation_time",
    "gender",
    "productivity",
    "impact",
    "scholarly_distance",
    "scholarly_circle",
    "field",
    "employment",
];

pub fn slot_family(slot: usize) -> usize {
    match slot {
        0 => 0,
        1 => 1,
        2..=5 => 2,
        6..=10 => 3,
        11 => 4,
        12..=23 => 5,
        24..=31 => 6,
        32..=35 => 7,
        _ => panic!("slot {slot} out of range"),
    }
}

pub fn slot_names() -> Vec<String> {
    let mut names: Vec<String> = [
        "accumulation_time",
        "gender",
        "annual_pubs",
        "pub_alpha",
        "total_pubs",
        "avg_pubs",
        "total_citations",
        "citation_alpha",
        "avg_citations",
        "h_index",
        "i10_index",
        "scholarly_distance",
    ]
    .iter()
    .map(|s| s.to_string())
    .collect();
    names.extend((0..GCN_OUTPUT_DIM).map(|i| format!("cn_{i}")));
    names.extend(FIELD_NAMES.iter().map(|f| format!("rf_{f}")));
    names.extend((0..EMPLOYMENT_DIM).map(|i| format!("employ_{i}")));
    names
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FeatureConfig {
    pub node2vec: Node2vecParams,
    /// Ego-subgraph radius for the scholarly-circle vector.
    pub circle_hops: usize,
    pub gcn_hidden: usize,
    /// Seed of the frozen GCN weights that fill the circle slots.
    pub gcn_seed: u64,
    /// Skip node2vec entirely; the distance slot is then 0.
    pub skip_distance: bool,
}

impl Default for FeatureConfig {
    fn default() -> Self {
        FeatureConfig {
            node2vec: Node2vecParams::default(),
            circle_hops: 3,
            gcn_hidden: 16,
            gcn_seed: 7,
            skip_distance: false,
        }
    }
}

impl FeatureConfig {
    /// Short walks, 1-hop circles: enough for synthetic corpora of a few
    /// thousand scholars on a single core.
    pub fn light() -> Self {
        FeatureConfig {
            node2vec: Node2vecParams {
                walk_length: 10,
                walks_per_node: 2,
                dimensions: 8,
                epochs: 1,
                window: 3,
                negatives: 2,
                ..Node2vecParams::default()
            },
            circle_hops: 1,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(1..=3).contains(&self.circle_hops) {
            return Err(Error::InvalidArgument(format!(
                "circle_hops must be in 1..=3, got {}",
                self.circle_hops
            )));
        }
        if self.gcn_hidden == 0 {
            return Err(Error::InvalidArgument("gcn_hidden must be positive".into()));
        }
        self.node2vec.validate()
    }
}

/// Graph state of one calendar year.
#[derive(Debug)]
pub struct YearContext {
    pub graph: CoauthorGraph,
    /// `None` when the graph has no edges or distances are disabled.
    pub embedding: Option<NodeEmbedding>,
    /// Scholars elected on or before this year, sorted.
    pub fellows: Vec<String>,
}

/// Everything needed to assemble series over a fixed range of years:
/// per-year graphs and embeddings plus cached per-publication field outputs.
pub struct FeatureContext<'c> {
    corpus: &'c Corpus,
    config: FeatureConfig,
    years: BTreeMap<Year, YearContext>,
    field_by_pub: HashMap<&'c str, [f64; FIELD_COUNT]>,
    gcn: GcnParams<f64>,
}

impl<'c> FeatureContext<'c> {
    /// Precomputes graph state for every year in `years`, in parallel.
    pub fn build(
        corpus: &'c Corpus,
        config: FeatureConfig,
        classifier: &dyn FieldClassifier,
        years: RangeInclusive<Year>,
    ) -> Result<Self> {
        config.validate()?;
        let list: Vec<Year> = years.collect();
        let built = list
            .par_iter()
            .map(|&y| year_context(corpus, &config, y).map(|c| (y, c)))
            .collect::<Result<Vec<_>>>()?;
        let field_by_pub = corpus
            .publications()
            .par_iter()
            .map(|p| (p.id.as_str(), classifier.classify(&p.text())))
            .collect();
        let gcn = GcnParams::seeded(config.gcn_hidden, config.gcn_seed);
        Ok(FeatureContext {
            corpus,
            config,
            years: built.into_iter().collect(),
            field_by_pub,
            gcn,
        })
    }

    /// Context covering the corpus year range up to `horizon`.
    pub fn for_corpus(
        corpus: &'c Corpus,
        config: FeatureConfig,
        classifier: &dyn FieldClassifier,
        horizon: Year,
    ) -> Result<Self> {
        let (first, _) = corpus
            .year_range()
            .ok_or_else(|| Error::InsufficientData("corpus has no publications".into()))?;
        Self::build(corpus, config, classifier, first..=horizon)
    }

    pub fn corpus(&self) -> &'c Corpus {
        self.corpus
    }

    pub fn config(&self) -> &FeatureConfig {
        &self.config
    }

    pub fn year(&self, year: Year) -> Result<&YearContext> {
        self.years.get(&year).ok_or_else(|| {
            Error::InvalidArgument(format!("year {year} outside the feature context"))
        })
    }

    pub fn year_range(&self) -> Option<(Year, Year)> {
        Some((*self.years.keys().next()?, *self.years.keys().next_back()?))
    }

    /// Ego subgraph of `scholar` at `year`, as GCN input.
    pub fn circle_graph(&self, scholar: &str, year: Year) -> Result<GraphInput<f64>> {
        let ctx = self.year(year)?;
        if ctx.graph.position(scholar).is_none() {
            return Ok(GraphInput::empty());
        }
        GraphInput::from_graph(&ego_subgraph(&ctx.graph, scholar, self.config.circle_hops)?)
    }

    pub fn field_output(&self, publication_id: &str) -> Option<&[f64; FIELD_COUNT]> {
        self.field_by_pub.get(publication_id)
    }
}

fn year_context(corpus: &Corpus, config: &FeatureConfig, year: Year) -> Result<YearContext> {
    let graph = build_graph(corpus, year);
    let embedding = if config.skip_distance || graph.edge_count() == 0 {
        None
    } else {
        Some(node2vec_embed(&graph, &config.node2vec)?)
    };
    let fellows = (0..graph.len())
        .filter(|&n| graph.label(n) == NodeLabel::Fellow)
        .map(|n| graph.id(n).to_string())
        .collect();
    Ok(YearContext {
        graph,
        embedding,
        fellows,
    })
}

/// One scholar's vectors for consecutive years starting at the first
/// publication year.
#[derive(Debug, Clone, PartialEq)]
pub struct FactorSeries {
    pub scholar_id: String,
    pub first_year: Year,
    pub vectors: Vec<FactorVector>,
}

impl FactorSeries {
    pub fn len(&self) -> usize {
        self.vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }

    pub fn last_year(&self) -> Year {
        self.first_year + self.vectors.len() as Year - 1
    }

    pub fn years(&self) -> RangeInclusive<Year> {
        self.first_year..=self.last_year()
    }

    pub fn at(&self, year: Year) -> Option<&FactorVector> {
        let i = usize::try_from(year - self.first_year).ok()?;
        self.vectors.get(i)
    }

    /// The prefix ending at `year` (inclusive).
    pub fn through(&self, year: Year) -> Result<FactorSeries> {
        if year < self.first_year || year > self.last_year() {
            return Err(Error::InvalidArgument(format!(
                "year {year} outside series {}..={}",
                self.first_year,
                self.last_year()
            )));
        }
        Ok(FactorSeries {
            scholar_id: self.scholar_id.clone(),
            first_year: self.first_year,
            vectors: self.vectors[..=(year - self.first_year) as usize].to_vec(),
        })
    }
}

/// Builds the series `sy..=horizon` for one scholar. Every vector uses only
/// corpus data dated on or before its own year.
pub fn assemble_series(
    ctx: &FeatureContext<'_>,
    scholar_id: &str,
    horizon: Year,
) -> Result<FactorSeries> {
    let corpus = ctx.corpus;
    let scholar = corpus.scholar(scholar_id)?;
    let sy = scholar.first_pub_year;
    if horizon < sy {
        return Err(Error::InvalidArgument(format!(
            "horizon {horizon} precedes first publication year {sy} of {scholar_id}"
        )));
    }
    let pubs: Vec<_> = corpus.publications_of(scholar_id)?.collect();
    let employ = employment_embedding(&scholar.employer_id);
    let n_years = (horizon - sy + 1) as usize;

    let mut cumulative_pubs = Vec::with_capacity(n_years);
    let mut cumulative_cites = Vec::with_capacity(n_years);
    let mut vectors = Vec::with_capacity(n_years);
    let mut field_sum = [0.0; FIELD_COUNT];
    let mut published = 0usize;

    for (t, cy) in (sy..=horizon).enumerate() {
        let year_ctx = ctx.year(cy)?;
        let mut annual = 0usize;
        while published < pubs.len() && pubs[published].year <= cy {
            let p = pubs[published];
            if p.year == cy {
                annual += 1;
            }
            let f = ctx
                .field_output(&p.id)
                .ok_or_else(|| Error::Lookup(p.id.clone()))?;
            for c in 0..FIELD_COUNT {
                field_sum[c] += f[c];
            }
            published += 1;
        }
        let citations: Vec<u64> = pubs[..published]
            .iter()
            .map(|p| p.citations_through(cy))
            .collect();
        let total_cites: u64 = citations.iter().sum();
        cumulative_pubs.push(published as f64);
        cumulative_cites.push(total_cites as f64);
        let span = (t + 1) as f64;

        let mut v = [0.0; FACTOR_DIM];
        v[SLOT_ACCUMULATION_TIME] = t as f64;
        v[SLOT_GENDER] = scholar.gender.code();
        v[SLOT_ANNUAL_PUBS] = annual as f64;
        v[SLOT_PUB_ALPHA] = fit_alpha_cumulative(&cumulative_pubs).unwrap_or(0.0);
        v[SLOT_TOTAL_PUBS] = published as f64;
        v[SLOT_AVG_PUBS] = published as f64 / span;
        v[SLOT_TOTAL_CITATIONS] = total_cites as f64;
        v[SLOT_CITATION_ALPHA] = fit_alpha_cumulative(&cumulative_cites).unwrap_or(0.0);
        v[SLOT_AVG_CITATIONS] = total_cites as f64 / span;
        v[SLOT_H_INDEX] = h_index(&citations) as f64;
        v[SLOT_I10_INDEX] = i10_index(&citations) as f64;
        v[SLOT_SCHOLARLY_DISTANCE] = distance_at(year_ctx, scholar_id)?;

        let circle = if year_ctx.graph.position(scholar_id).is_some() {
            let ego = ego_subgraph(&year_ctx.graph, scholar_id, ctx.config.circle_hops)?;
            gcn_branch(&GraphInput::from_graph(&ego)?, &ctx.gcn)?
        } else {
            vec![0.0; GCN_OUTPUT_DIM]
        };
        v[CIRCLE_SLOTS].copy_from_slice(&circle);
        if published > 0 {
            for c in 0..FIELD_COUNT {
                v[FIELD_SLOTS.start + c] = field_sum[c] / published as f64;
            }
        }
        v[EMPLOYMENT_SLOTS].copy_from_slice(&employ);
        if v.iter().any(|x| !x.is_finite()) {
            return Err(Error::Numeric(format!(
                "non-finite factor for {scholar_id} at {cy}"
            )));
        }
        vectors.push(v);
    }
    Ok(FactorSeries {
        scholar_id: scholar_id.to_string(),
        first_year: sy,
        vectors,
    })
}

/// Mean cosine to the Fellows of that year, excluding the candidate itself.
/// Zero when no embedding exists or no other Fellow is present.
fn distance_at(ctx: &YearContext, scholar_id: &str) -> Result<f64> {
    let Some(emb) = &ctx.embedding else {
        return Ok(0.0);
    };
    if emb.get(scholar_id).is_none() {
        return Ok(0.0);
    }
    let fellows: Vec<&str> = ctx
        .fellows
        .iter()
        .map(String::as_str)
        .filter(|&f| f != scholar_id)
        .collect();
    if fellows.is_empty() {
        return Ok(0.0);
    }
    scholarly_distance(scholar_id, &fellows, emb)
}

/// Series for many scholars in parallel; output order follows `ids`.
pub fn assemble_all(
    ctx: &FeatureContext<'_>,
    ids: &[&str],
    horizon: Year,
) -> Result<Vec<FactorSeries>> {
    ids.par_iter()
        .map(|id| assemble_series(ctx, id, horizon))
        .collect()
}

/// CSV with one row per (scholar, year) and the 36 named columns.
pub fn series_to_csv<'a>(series: impl IntoIterator<Item = &'a FactorSeries>) -> String {
    let mut out = String::from("scholar_id,year");
    for n in slot_names() {
        out.push(',');
        out.push_str(&n);
    }
    out.push('\n');
    for s in series {
        for (i, v) in s.vectors.iter().enumerate() {
            let _ = write!(out, "{},{}", s.scholar_id, s.first_year + i as Year);
            for x in v {
                let _ = write!(out, ",{x}");
            }
            out.push('\n');
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::fixtures::{publication, scholar};
    use crate::data::Corpus;
    use crate::factors::field::BagOfWordsClassifier;

    fn small_config() -> FeatureConfig {
        FeatureConfig {
            node2vec: Node2vecParams {
                walk_length: 8,
                walks_per_node: 4,
                dimensions: 8,
                epochs: 1,
                ..Node2vecParams::default()
            },
            circle_hops: 2,
            ..FeatureConfig::default()
        }
    }

    fn corpus() -> Corpus {
        Corpus::new(
            vec![
                scholar("a", Some(2004)),
                scholar("b", None),
                scholar("c", None),
            ],
            vec![
                publication("p1", 2000, &["a", "b"], &[(2000, 3), (2001, 8)]),
                publication("p2", 2001, &["a"], &[(2002, 12)]),
                publication("p3", 2001, &["a", "c"], &[]),
                publication("p4", 2003, &["b", "c", "ext:z"], &[(2003, 1)]),
            ],
        )
        .unwrap()
    }

    #[test]
    fn slot_layout() {
        let names = slot_names();
        assert_eq!(names.len(), FACTOR_DIM);
        assert_eq!(names[SLOT_H_INDEX], "h_index");
        assert_eq!(names[24], "rf_theory");
        assert_eq!(names[35], "employ_3");
        let mut counts = [0usize; 8];
        (0..FACTOR_DIM).for_each(|s| counts[slot_family(s)] += 1);
        assert_eq!(counts, [1, 1, 4, 5, 1, 12, 8, 4]);
    }

    #[test]
    fn counts_and_indices_by_year() {
        let c = corpus();
        let clf = BagOfWordsClassifier::bundled();
        let ctx = FeatureContext::build(&c, small_config(), &clf, 2000..=2003).unwrap();
        let s = assemble_series(&ctx, "a", 2003).unwrap();
        assert_eq!(s.len(), 4);
        let first = &s.vectors[0];
        assert_eq!(first[SLOT_ACCUMULATION_TIME], 0.0);
        assert_eq!(first[SLOT_ANNUAL_PUBS], 1.0);
        assert_eq!(first[SLOT_TOTAL_PUBS], 1.0);
        assert_eq!(first[SLOT_TOTAL_CITATIONS], 3.0);
        let y2002 = s.at(2002).unwrap();
        assert_eq!(y2002[SLOT_TOTAL_PUBS], 3.0);
        assert_eq!(y2002[SLOT_AVG_PUBS], 1.0);
        assert_eq!(y2002[SLOT_TOTAL_CITATIONS], 23.0);
        assert_eq!(y2002[SLOT_H_INDEX], 2.0);
        assert_eq!(y2002[SLOT_I10_INDEX], 2.0);
        assert_eq!(y2002[SLOT_AVG_CITATIONS], 23.0 / 3.0);
        let rf: f64 = y2002[FIELD_SLOTS].iter().sum();
        assert!((rf - 1.0).abs() < 1e-9);
        let norm: f64 = y2002[EMPLOYMENT_SLOTS].iter().map(|x| x * x).sum();
        assert!((norm - 1.0).abs() < 1e-9);
        // three cumulative points: 1, 3, 3
        assert!(y2002[SLOT_PUB_ALPHA] != 0.0);
        assert_eq!(s.vectors[1][SLOT_PUB_ALPHA], 0.0);
    }

    #[test]
    fn horizon_before_start_is_an_error() {
        let c = corpus();
        let clf = BagOfWordsClassifier::bundled();
        let ctx = FeatureContext::build(&c, small_config(), &clf, 2000..=2003).unwrap();
        assert!(matches!(
            assemble_series(&ctx, "b", 1999),
            Err(Error::InvalidArgument(_))
        ));
        assert!(matches!(
            assemble_series(&ctx, "zz", 2001),
            Err(Error::Lookup(_))
        ));
    }

    #[test]
    fn future_data_does_not_leak() {
        let c = corpus();
        let clf = BagOfWordsClassifier::bundled();
        let ctx = FeatureContext::build(&c, small_config(), &clf, 2000..=2003).unwrap();
        let full = assemble_series(&ctx, "a", 2003).unwrap();

        let (scholars, pubs) = corpus().into_parts();
        let cut = 2001;
        let kept: Vec<_> = pubs
            .into_iter()
            .filter(|p| p.year <= cut)
            .map(|mut p| {
                p.citations_by_year.retain(|&y, _| y <= cut);
                p
            })
            .collect();
        let scholars: Vec<_> = scholars
            .into_iter()
            .map(|mut s| {
                s.elected_year = s.elected_year.filter(|&y| y <= cut);
                s
            })
            .collect();
        let truncated = Corpus::new(scholars, kept).unwrap();
        let ctx2 = FeatureContext::build(&truncated, small_config(), &clf, 2000..=cut).unwrap();
        let part = assemble_series(&ctx2, "a", cut).unwrap();
        assert_eq!(part.vectors[..], full.vectors[..2]);
    }

    #[test]
    fn csv_has_header_and_rows() {
        let c = corpus();
        let clf = BagOfWordsClassifier::bundled();
        let ctx = FeatureContext::build(&c, small_config(), &clf, 2000..=2003).unwrap();
        let s = assemble_series(&ctx, "c", 2003).unwrap();
        let csv = series_to_csv([&s]);
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines.len(), 1 + 3);
        assert_eq!(lines[0].split(',').count(), 38);
        assert!(lines[1].starts_with("c,2001,"));
    }
}
